//! Undirected and directed graph structures over variable ids.
//!
//! Vertices are dense ids 0..n. Adjacency is kept in sorted sets so every
//! iteration order is deterministic.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::vars::VarId;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UndirectedGraph {
    adj: Vec<BTreeSet<VarId>>,
}

impl UndirectedGraph {
    pub fn new(n: usize) -> Self {
        Self {
            adj: vec![BTreeSet::new(); n],
        }
    }

    pub fn from_edges(n: usize, edges: &[(VarId, VarId)]) -> Result<Self> {
        let mut g = Self::new(n);
        for &(u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|s| s.len()).sum::<usize>() / 2
    }

    pub fn add_edge(&mut self, u: VarId, v: VarId) -> Result<()> {
        if u == v {
            return Err(Error::Validation(format!("self-loop at vertex {u}")));
        }
        let n = self.adj.len();
        if u as usize >= n || v as usize >= n {
            return Err(Error::Validation(format!(
                "edge ({u},{v}) out of range for {n} vertices"
            )));
        }
        self.adj[u as usize].insert(v);
        self.adj[v as usize].insert(u);
        Ok(())
    }

    pub fn has_edge(&self, u: VarId, v: VarId) -> bool {
        self.adj.get(u as usize).is_some_and(|s| s.contains(&v))
    }

    pub fn neighbors(&self, v: VarId) -> impl Iterator<Item = VarId> + '_ {
        self.adj[v as usize].iter().copied()
    }

    pub fn degree(&self, v: VarId) -> usize {
        self.adj[v as usize].len()
    }

    /// Edges as (u, v) with u < v, in lexicographic order.
    pub fn edges(&self) -> Vec<(VarId, VarId)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (u, nbrs) in self.adj.iter().enumerate() {
            let u = u as VarId;
            for &v in nbrs.iter() {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    /// Union of edge sets. Both graphs must have the same vertex count.
    pub fn edge_union(&self, other: &UndirectedGraph) -> Result<UndirectedGraph> {
        if self.vertex_count() != other.vertex_count() {
            return Err(Error::VariableMismatch(format!(
                "edge union of graphs with {} and {} vertices",
                self.vertex_count(),
                other.vertex_count()
            )));
        }
        let mut g = self.clone();
        for (u, v) in other.edges() {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    /// Connected components as sorted vertex lists, ordered by smallest
    /// member.
    pub fn connected_components(&self) -> Vec<Vec<VarId>> {
        let n = self.vertex_count();
        let mut seen = vec![false; n];
        let mut components = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut component = Vec::new();
            let mut stack = vec![start as VarId];
            seen[start] = true;
            while let Some(v) = stack.pop() {
                component.push(v);
                for u in self.neighbors(v) {
                    if !seen[u as usize] {
                        seen[u as usize] = true;
                        stack.push(u);
                    }
                }
            }
            component.sort_unstable();
            components.push(component);
        }
        components
    }

    /// Component index of every vertex, with components numbered as in
    /// `connected_components`.
    pub fn component_ids(&self) -> Vec<usize> {
        let mut ids = vec![usize::MAX; self.vertex_count()];
        for (c, comp) in self.connected_components().iter().enumerate() {
            for &v in comp {
                ids[v as usize] = c;
            }
        }
        ids
    }
}

/// A directed graph stored as parent lists, validated acyclic on build.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedGraph {
    parents: Vec<BTreeSet<VarId>>,
    children: Vec<BTreeSet<VarId>>,
}

impl DirectedGraph {
    /// Builds from (from, to) arcs and rejects cycles.
    pub fn from_arcs(n: usize, arcs: &[(VarId, VarId)]) -> Result<Self> {
        let mut parents = vec![BTreeSet::new(); n];
        let mut children = vec![BTreeSet::new(); n];
        for &(from, to) in arcs {
            if from == to {
                return Err(Error::CyclicInput(from));
            }
            if from as usize >= n || to as usize >= n {
                return Err(Error::Validation(format!(
                    "arc ({from},{to}) out of range for {n} vertices"
                )));
            }
            parents[to as usize].insert(from);
            children[from as usize].insert(to);
        }
        let g = Self { parents, children };
        g.check_acyclic()?;
        Ok(g)
    }

    fn check_acyclic(&self) -> Result<()> {
        let n = self.parents.len();
        let mut indegree: Vec<usize> = self.parents.iter().map(|p| p.len()).collect();
        let mut queue: Vec<VarId> = (0..n as VarId)
            .filter(|&v| indegree[v as usize] == 0)
            .collect();
        let mut removed = 0usize;
        while let Some(v) = queue.pop() {
            removed += 1;
            for &c in &self.children[v as usize] {
                indegree[c as usize] -= 1;
                if indegree[c as usize] == 0 {
                    queue.push(c);
                }
            }
        }
        if removed != n {
            let witness = (0..n as VarId)
                .find(|&v| indegree[v as usize] > 0)
                .unwrap_or(0);
            return Err(Error::CyclicInput(witness));
        }
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.parents.len()
    }

    pub fn parents(&self, v: VarId) -> impl Iterator<Item = VarId> + '_ {
        self.parents[v as usize].iter().copied()
    }

    pub fn children(&self, v: VarId) -> impl Iterator<Item = VarId> + '_ {
        self.children[v as usize].iter().copied()
    }

    pub fn has_arc(&self, from: VarId, to: VarId) -> bool {
        self.children
            .get(from as usize)
            .is_some_and(|s| s.contains(&to))
    }

    pub fn arcs(&self) -> Vec<(VarId, VarId)> {
        let mut out = Vec::new();
        for (from, cs) in self.children.iter().enumerate() {
            for &to in cs {
                out.push((from as VarId, to));
            }
        }
        out
    }

    /// Topological order (parents before children), smallest id first among
    /// simultaneously ready vertices.
    pub fn topological_order(&self) -> Vec<VarId> {
        let n = self.parents.len();
        let mut indegree: Vec<usize> = self.parents.iter().map(|p| p.len()).collect();
        let mut ready: BTreeSet<VarId> = (0..n as VarId)
            .filter(|&v| indegree[v as usize] == 0)
            .collect();
        let mut order = Vec::with_capacity(n);
        while let Some(&v) = ready.iter().next() {
            ready.remove(&v);
            order.push(v);
            for c in self.children(v) {
                indegree[c as usize] -= 1;
                if indegree[c as usize] == 0 {
                    ready.insert(c);
                }
            }
        }
        debug_assert_eq!(order.len(), n, "graph validated acyclic on build");
        order
    }

    /// Moral graph: undirect every arc and marry all co-parents.
    pub fn moralize(&self) -> UndirectedGraph {
        let mut g = UndirectedGraph::new(self.vertex_count());
        for (from, to) in self.arcs() {
            g.add_edge(from, to).expect("arc vertices are in range");
        }
        for v in 0..self.vertex_count() as VarId {
            let ps: Vec<VarId> = self.parents(v).collect();
            for i in 0..ps.len() {
                for j in i + 1..ps.len() {
                    g.add_edge(ps[i], ps[j]).expect("parents are distinct");
                }
            }
        }
        g
    }
}
