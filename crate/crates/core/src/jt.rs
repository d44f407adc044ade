//! Junction forests over chordal graphs and division-free calibration.
//!
//! Each connected component of the input graph gets one clique tree, built
//! as a maximum-weight spanning tree of the clique-intersection graph.
//! Calibration is two-pass message passing where each outgoing message is
//! assembled as a fresh product of the local potential and the other
//! incoming messages, so zero cells never force a division.

use crate::chordal::{intersect_sorted, maximal_cliques, CliqueSet};
use crate::error::{Error, Result};
use crate::factor::{Factor, DEFAULT_CELL_CAP};
use crate::graph::UndirectedGraph;
use crate::vars::{VarId, VariableTable};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeEdge {
    /// Clique ids with `a < b`.
    pub a: usize,
    pub b: usize,
    /// Sorted intersection of the two cliques; never empty.
    pub separator: Vec<VarId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliqueTree {
    /// Clique ids in this tree, ascending.
    pub clique_ids: Vec<usize>,
    /// Spanning tree edges; `clique_ids.len() - 1` of them.
    pub edges: Vec<TreeEdge>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JunctionForest {
    cliques: CliqueSet,
    trees: Vec<CliqueTree>,
    tree_of: Vec<usize>,
}

impl JunctionForest {
    pub fn cliques(&self) -> &CliqueSet {
        &self.cliques
    }

    pub fn trees(&self) -> &[CliqueTree] {
        &self.trees
    }

    pub fn tree_of(&self, clique: usize) -> usize {
        self.tree_of[clique]
    }

    /// Every separator of every tree, as (tree index, edge) pairs. The same
    /// separator set may appear on several edges; the multiset matters.
    pub fn separators(&self) -> impl Iterator<Item = (usize, &TreeEdge)> {
        self.trees
            .iter()
            .enumerate()
            .flat_map(|(t, tree)| tree.edges.iter().map(move |e| (t, e)))
    }

    /// Running intersection: for every variable, the cliques containing it
    /// form a connected subtree linked by separators containing it.
    pub fn has_running_intersection(&self, n_vars: usize) -> bool {
        for v in 0..n_vars as VarId {
            let holders: Vec<usize> = (0..self.cliques.len())
                .filter(|&c| self.cliques.get(c).binary_search(&v).is_ok())
                .collect();
            if holders.is_empty() {
                return false;
            }
            // BFS over edges whose separator contains v.
            let mut reached = std::collections::HashSet::new();
            let mut stack = vec![holders[0]];
            reached.insert(holders[0]);
            while let Some(c) = stack.pop() {
                let tree = &self.trees[self.tree_of[c]];
                for e in &tree.edges {
                    if e.separator.binary_search(&v).is_err() {
                        continue;
                    }
                    let other = if e.a == c {
                        e.b
                    } else if e.b == c {
                        e.a
                    } else {
                        continue;
                    };
                    if reached.insert(other) {
                        stack.push(other);
                    }
                }
            }
            if holders.iter().any(|c| !reached.contains(c)) {
                return false;
            }
        }
        true
    }
}

struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let root = self.find(self.parent[x]);
            self.parent[x] = root;
        }
        self.parent[x]
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

/// Builds the junction forest of a chordal graph: one maximum-weight
/// spanning tree of the clique-intersection graph per connected component.
/// Edge candidates are taken in (weight desc, smaller ids first) order, so
/// the forest is deterministic.
pub fn build_forest(g: &UndirectedGraph) -> Result<JunctionForest> {
    let cliques = maximal_cliques(g)?;
    let component_of_vertex = g.component_ids();
    let n_components = g.connected_components().len();
    let k = cliques.len();

    let mut tree_of = vec![0usize; k];
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_components];
    for c in 0..k {
        let comp = component_of_vertex[cliques.get(c)[0] as usize];
        tree_of[c] = comp;
        members[comp].push(c);
    }

    let mut trees = Vec::with_capacity(n_components);
    for clique_ids in members {
        // (weight, a, b) candidates over this component's cliques.
        let mut candidates: Vec<(usize, usize, usize)> = Vec::new();
        for (i, &a) in clique_ids.iter().enumerate() {
            for &b in &clique_ids[i + 1..] {
                let w = intersect_sorted(cliques.get(a), cliques.get(b)).len();
                if w > 0 {
                    candidates.push((w, a, b));
                }
            }
        }
        candidates.sort_by_key(|&(w, a, b)| (std::cmp::Reverse(w), a, b));
        let mut dsu = Dsu::new(k);
        let mut edges = Vec::with_capacity(clique_ids.len().saturating_sub(1));
        for (_, a, b) in candidates {
            if dsu.union(a, b) {
                edges.push(TreeEdge {
                    a,
                    b,
                    separator: intersect_sorted(cliques.get(a), cliques.get(b)),
                });
                if edges.len() + 1 == clique_ids.len() {
                    break;
                }
            }
        }
        if edges.len() + 1 != clique_ids.len() {
            return Err(Error::InternalInconsistency(format!(
                "spanning tree has {} edges for {} cliques",
                edges.len(),
                clique_ids.len()
            )));
        }
        trees.push(CliqueTree { clique_ids, edges });
    }
    Ok(JunctionForest {
        cliques,
        trees,
        tree_of,
    })
}

/// Calibrated clique beliefs. For potentials assigned from a factorized
/// distribution, `beliefs[c]` is the unnormalized marginal over clique `c`
/// and every clique in a tree sums to that tree's total.
#[derive(Debug, Clone)]
pub struct Calibration {
    beliefs: Vec<Factor>,
    tree_totals: Vec<f64>,
}

impl Calibration {
    pub fn belief(&self, clique: usize) -> &Factor {
        &self.beliefs[clique]
    }

    pub fn beliefs(&self) -> &[Factor] {
        &self.beliefs
    }

    pub fn tree_totals(&self) -> &[f64] {
        &self.tree_totals
    }

    /// Sum of any clique belief in the tree; they all agree.
    pub fn belief_total(&self, tree: usize) -> f64 {
        self.tree_totals[tree]
    }
}

/// Relative agreement check used for internal cross-validation.
pub(crate) fn close_rel(a: f64, b: f64, tol: f64) -> bool {
    let scale = a.abs().max(b.abs());
    (a - b).abs() <= tol * scale.max(f64::MIN_POSITIVE)
}

/// Two-pass division-free calibration over a forest.
///
/// `assigned` maps factors onto cliques; every factor's scope must be
/// contained in its clique. Unassigned cliques act as all-ones potentials.
/// Messages and beliefs are products and marginalizations only.
pub fn calibrate(
    vars: &VariableTable,
    forest: &JunctionForest,
    assigned: &[(usize, Factor)],
) -> Result<Calibration> {
    calibrate_capped(vars, forest, assigned, DEFAULT_CELL_CAP)
}

pub fn calibrate_capped(
    vars: &VariableTable,
    forest: &JunctionForest,
    assigned: &[(usize, Factor)],
    cell_cap: u64,
) -> Result<Calibration> {
    let k = forest.cliques().len();
    // Clique potentials: all-ones times every assigned factor.
    let mut psi: Vec<Factor> = Vec::with_capacity(k);
    for c in 0..k {
        let scope = forest.cliques().get(c);
        crate::factor::table_len(&vars.scope_cards(scope), cell_cap)?;
        psi.push(Factor::ones(vars, scope)?);
    }
    for (c, f) in assigned {
        if *c >= k {
            return Err(Error::Validation(format!(
                "factor assigned to clique {c}, only {k} cliques exist"
            )));
        }
        psi[*c].mul_assign_sub(f)?;
    }

    let mut beliefs: Vec<Option<Factor>> = vec![None; k];
    let mut tree_totals = Vec::with_capacity(forest.trees().len());
    for tree in forest.trees() {
        calibrate_tree(tree, &psi, &mut beliefs)?;
        let root = tree.clique_ids[0];
        let total = beliefs[root].as_ref().expect("root calibrated").sum();
        if !total.is_finite() {
            return Err(Error::InternalInconsistency(format!(
                "tree total is {total}"
            )));
        }
        for &c in &tree.clique_ids {
            let s = beliefs[c].as_ref().expect("clique calibrated").sum();
            if !close_rel(s, total, 1e-9) {
                return Err(Error::InternalInconsistency(format!(
                    "clique {c} sums to {s}, tree total is {total}"
                )));
            }
        }
        tree_totals.push(total);
    }
    Ok(Calibration {
        beliefs: beliefs
            .into_iter()
            .map(|b| b.expect("calibrated"))
            .collect(),
        tree_totals,
    })
}

fn calibrate_tree(tree: &CliqueTree, psi: &[Factor], beliefs: &mut [Option<Factor>]) -> Result<()> {
    let root = tree.clique_ids[0];
    if tree.clique_ids.len() == 1 {
        beliefs[root] = Some(psi[root].clone());
        return Ok(());
    }

    // Neighbor lists sorted by clique id; message slots per directed edge.
    let mut nbrs: std::collections::BTreeMap<usize, Vec<(usize, usize)>> =
        tree.clique_ids.iter().map(|&c| (c, Vec::new())).collect();
    for (ei, e) in tree.edges.iter().enumerate() {
        nbrs.get_mut(&e.a).unwrap().push((e.b, ei));
        nbrs.get_mut(&e.b).unwrap().push((e.a, ei));
    }
    for list in nbrs.values_mut() {
        list.sort_unstable();
    }

    // BFS from the root (smallest clique id in the tree).
    let mut order = vec![root];
    let mut parent: std::collections::BTreeMap<usize, (usize, usize)> =
        std::collections::BTreeMap::new();
    let mut head = 0;
    while head < order.len() {
        let c = order[head];
        head += 1;
        for &(nb, ei) in &nbrs[&c] {
            if nb != root && !parent.contains_key(&nb) {
                parent.insert(nb, (c, ei));
                order.push(nb);
            }
        }
    }

    // Upward pass: messages toward the root, children before parents.
    let mut up: Vec<Option<Factor>> = vec![None; tree.edges.len()];
    for &c in order.iter().rev() {
        let Some(&(_, parent_edge)) = parent.get(&c) else {
            continue;
        };
        let mut prod = psi[c].clone();
        for &(_, ei) in &nbrs[&c] {
            if ei != parent_edge {
                let msg = up[ei].as_ref().expect("child processed first");
                prod.mul_assign_sub(msg)?;
            }
        }
        up[parent_edge] = Some(prod.marginalize(&tree.edges[parent_edge].separator)?);
    }

    // Downward pass and beliefs. Each outgoing message multiplies every
    // incoming message except the one arriving over the target edge.
    let mut down: Vec<Option<Factor>> = vec![None; tree.edges.len()];
    for &c in &order {
        let parent_edge = parent.get(&c).map(|&(_, ei)| ei);
        let mut belief = psi[c].clone();
        for &(_, ei) in &nbrs[&c] {
            let msg = if Some(ei) == parent_edge {
                down[ei].as_ref()
            } else {
                up[ei].as_ref()
            };
            belief.mul_assign_sub(msg.expect("message available"))?;
        }
        for &(_, ei) in &nbrs[&c] {
            if Some(ei) == parent_edge {
                continue;
            }
            let mut prod = psi[c].clone();
            for &(_, ej) in &nbrs[&c] {
                if ej == ei {
                    continue;
                }
                let msg = if Some(ej) == parent_edge {
                    down[ej].as_ref()
                } else {
                    up[ej].as_ref()
                };
                prod.mul_assign_sub(msg.expect("message available"))?;
            }
            down[ei] = Some(prod.marginalize(&tree.edges[ei].separator)?);
        }
        beliefs[c] = Some(belief);
    }
    Ok(())
}
