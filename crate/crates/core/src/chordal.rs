//! Chordality testing, triangulation, and maximal cliques.
//!
//! Chordality is decided by maximum cardinality search followed by the
//! standard single-pass elimination check. Triangulation is greedy min-fill,
//! which adds no edges on inputs that are already chordal.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::graph::UndirectedGraph;
use crate::vars::VarId;

/// The maximal cliques of a chordal graph. Each clique is sorted ascending
/// and the list is sorted lexicographically, so clique ids are stable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliqueSet {
    cliques: Vec<Vec<VarId>>,
}

impl CliqueSet {
    fn from_candidates(mut cliques: Vec<Vec<VarId>>) -> Self {
        for c in &mut cliques {
            c.sort_unstable();
        }
        cliques.sort();
        cliques.dedup();
        // Drop non-maximal candidates. Quadratic, fine at model scale.
        let maximal: Vec<Vec<VarId>> = cliques
            .iter()
            .filter(|c| !cliques.iter().any(|d| d.len() > c.len() && is_subset(c, d)))
            .cloned()
            .collect();
        Self { cliques: maximal }
    }

    pub fn len(&self) -> usize {
        self.cliques.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cliques.is_empty()
    }

    pub fn get(&self, id: usize) -> &[VarId] {
        &self.cliques[id]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[VarId]> {
        self.cliques.iter().map(|c| c.as_slice())
    }

    pub fn position(&self, clique: &[VarId]) -> Option<usize> {
        self.cliques.iter().position(|c| c.as_slice() == clique)
    }

    /// Id of the lexicographically smallest clique containing `scope`.
    /// The clique list is lex-sorted, so the first hit is the answer.
    pub fn smallest_containing(&self, scope: &[VarId]) -> Option<usize> {
        let mut sorted = scope.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        self.cliques.iter().position(|c| is_subset(&sorted, c))
    }
}

/// True if sorted slice `a` is a subset of sorted slice `b`.
pub(crate) fn is_subset(a: &[VarId], b: &[VarId]) -> bool {
    let mut it = b.iter();
    a.iter().all(|x| it.any(|y| y == x))
}

/// Sorted intersection of two sorted slices.
pub(crate) fn intersect_sorted(a: &[VarId], b: &[VarId]) -> Vec<VarId> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Maximum cardinality search order. Ties go to the smallest vertex id, so
/// the order is deterministic.
fn mcs_order(g: &UndirectedGraph) -> Vec<VarId> {
    let n = g.vertex_count();
    let mut weight = vec![0usize; n];
    let mut picked = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let mut best = usize::MAX;
        for v in 0..n {
            if !picked[v] && (best == usize::MAX || weight[v] > weight[best]) {
                best = v;
            }
        }
        picked[best] = true;
        order.push(best as VarId);
        for u in g.neighbors(best as VarId) {
            if !picked[u as usize] {
                weight[u as usize] += 1;
            }
        }
    }
    order
}

/// Neighbors of `v` that were selected before it, i.e. the neighbors that
/// survive `v` in the elimination order induced by the search.
fn earlier_neighbors(g: &UndirectedGraph, pos: &[usize], v: VarId) -> Vec<VarId> {
    g.neighbors(v)
        .filter(|&u| pos[u as usize] < pos[v as usize])
        .collect()
}

fn selection_positions(order: &[VarId]) -> Vec<usize> {
    let mut pos = vec![0usize; order.len()];
    for (i, &v) in order.iter().enumerate() {
        pos[v as usize] = i;
    }
    pos
}

/// Perfect elimination order if the graph is chordal (first vertex is
/// eliminated first), `None` otherwise.
pub fn perfect_elimination_order(g: &UndirectedGraph) -> Option<Vec<VarId>> {
    let order = mcs_order(g);
    let pos = selection_positions(&order);
    for &v in &order {
        let earlier = earlier_neighbors(g, &pos, v);
        if earlier.len() <= 1 {
            continue;
        }
        // The earlier neighbor selected last plays the parent role; all
        // other earlier neighbors must be adjacent to it.
        let parent = *earlier
            .iter()
            .max_by_key(|&&u| pos[u as usize])
            .expect("nonempty");
        for &u in &earlier {
            if u != parent && !g.has_edge(u, parent) {
                return None;
            }
        }
    }
    Some(order.into_iter().rev().collect())
}

pub fn is_chordal(g: &UndirectedGraph) -> bool {
    perfect_elimination_order(g).is_some()
}

/// Maximal cliques of a chordal graph, lex-sorted.
pub fn maximal_cliques(g: &UndirectedGraph) -> Result<CliqueSet> {
    if perfect_elimination_order(g).is_none() {
        return Err(Error::NonChordalInput(
            "maximal clique extraction requires a chordal graph".into(),
        ));
    }
    let order = mcs_order(g);
    let pos = selection_positions(&order);
    let candidates: Vec<Vec<VarId>> = order
        .iter()
        .map(|&v| {
            let mut c = earlier_neighbors(g, &pos, v);
            c.push(v);
            c
        })
        .collect();
    Ok(CliqueSet::from_candidates(candidates))
}

/// Min-fill triangulation. Returns a chordal supergraph; inputs that are
/// already chordal come back unchanged. Ties on fill count go to the
/// smallest vertex id.
pub fn triangulate(g: &UndirectedGraph) -> UndirectedGraph {
    let n = g.vertex_count();
    let mut result = g.clone();
    let mut work: Vec<BTreeSet<VarId>> =
        (0..n).map(|v| g.neighbors(v as VarId).collect()).collect();
    let mut alive = vec![true; n];
    for _ in 0..n {
        let mut best: Option<(usize, usize)> = None;
        for v in 0..n {
            if !alive[v] {
                continue;
            }
            let nbrs: Vec<VarId> = work[v].iter().copied().collect();
            let mut deficiency = 0usize;
            for i in 0..nbrs.len() {
                for j in i + 1..nbrs.len() {
                    if !work[nbrs[i] as usize].contains(&nbrs[j]) {
                        deficiency += 1;
                    }
                }
            }
            if best.is_none_or(|(d, _)| deficiency < d) {
                best = Some((deficiency, v));
            }
        }
        let (_, v) = best.expect("an alive vertex exists");
        let nbrs: Vec<VarId> = work[v].iter().copied().collect();
        for i in 0..nbrs.len() {
            for j in i + 1..nbrs.len() {
                let (a, b) = (nbrs[i], nbrs[j]);
                if !work[a as usize].contains(&b) {
                    work[a as usize].insert(b);
                    work[b as usize].insert(a);
                    result.add_edge(a, b).expect("vertices are in range");
                }
            }
        }
        for &u in &nbrs {
            work[u as usize].remove(&(v as VarId));
        }
        work[v].clear();
        alive[v] = false;
    }
    result
}

/// Treewidth of a chordal graph: largest clique size minus one. The empty
/// and edgeless graphs have treewidth 0 here.
pub fn treewidth_of_chordal(g: &UndirectedGraph) -> Result<usize> {
    let cliques = maximal_cliques(g)?;
    Ok(cliques
        .iter()
        .map(|c| c.len())
        .max()
        .unwrap_or(1)
        .saturating_sub(1))
}
