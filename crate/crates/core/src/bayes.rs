//! Bayesian networks over discrete variables, conversion into decomposable
//! models, and exact single-edge deletion.

use crate::error::{Error, Result};
use crate::factor::{Factor, DEFAULT_CELL_CAP};
use crate::graph::DirectedGraph;
use crate::jt::{build_forest, calibrate_capped};
use crate::model::DecomposableModel;
use crate::vars::{VarId, VariableTable};

/// Conditional probability table of one node. The factor is stored over the
/// sorted scope {child} ∪ parents; `parents` keeps the declared order, which
/// defines external row-major layouts.
#[derive(Debug, Clone)]
pub struct Cpt {
    child: VarId,
    parents: Vec<VarId>,
    factor: Factor,
}

impl Cpt {
    pub fn child(&self) -> VarId {
        self.child
    }

    pub fn parents(&self) -> &[VarId] {
        &self.parents
    }

    pub fn factor(&self) -> &Factor {
        &self.factor
    }
}

#[derive(Debug, Clone)]
pub struct BayesianNetwork {
    vars: VariableTable,
    dag: DirectedGraph,
    cpts: Vec<Cpt>,
}

impl BayesianNetwork {
    /// Builds and validates a network from per-node parent lists and factors
    /// over the sorted scope {child} ∪ parents. The structure must be
    /// acyclic and every CPT column must sum to one.
    pub fn new(vars: VariableTable, nodes: Vec<(VarId, Vec<VarId>, Factor)>) -> Result<Self> {
        if nodes.len() != vars.len() {
            return Err(Error::Validation(format!(
                "{} node tables for {} variables",
                nodes.len(),
                vars.len()
            )));
        }
        let mut arcs = Vec::new();
        let mut slots: Vec<Option<Cpt>> = vec![None; vars.len()];
        for (child, parents, factor) in nodes {
            let mut scope: Vec<VarId> = parents.iter().copied().chain([child]).collect();
            scope.sort_unstable();
            scope.dedup();
            if scope.len() != parents.len() + 1 {
                return Err(Error::Validation(format!(
                    "node {} repeats a parent or lists itself",
                    vars.name(child)
                )));
            }
            if factor.scope() != scope.as_slice() {
                return Err(Error::Validation(format!(
                    "table for node {} has scope {:?}, expected {scope:?}",
                    vars.name(child),
                    factor.scope()
                )));
            }
            if factor.cards() != vars.scope_cards(&scope).as_slice() {
                return Err(Error::VariableMismatch(format!(
                    "table for node {} disagrees on cardinalities",
                    vars.name(child)
                )));
            }
            if let Some(v) = factor.values().iter().find(|v| **v < 0.0) {
                return Err(Error::Validation(format!(
                    "table for node {} has negative entry {v}",
                    vars.name(child)
                )));
            }
            // Column normalization: summing out the child leaves ones.
            let parents_sorted: Vec<VarId> = {
                let mut p = parents.clone();
                p.sort_unstable();
                p
            };
            let col_sums = factor.marginalize(&parents_sorted)?;
            for (i, &s) in col_sums.values().iter().enumerate() {
                if (s - 1.0).abs() > 1e-9 {
                    return Err(Error::InconsistentModel(format!(
                        "conditional table for node {} sums to {s} at parent cell {i}",
                        vars.name(child)
                    )));
                }
            }
            for &p in &parents {
                arcs.push((p, child));
            }
            if slots[child as usize].is_some() {
                return Err(Error::Validation(format!(
                    "node {} declared twice",
                    vars.name(child)
                )));
            }
            slots[child as usize] = Some(Cpt {
                child,
                parents,
                factor,
            });
        }
        let dag = DirectedGraph::from_arcs(vars.len(), &arcs)?;
        Ok(Self {
            vars,
            dag,
            cpts: slots
                .into_iter()
                .map(|s| s.expect("every variable declared"))
                .collect(),
        })
    }

    pub fn vars(&self) -> &VariableTable {
        &self.vars
    }

    pub fn dag(&self) -> &DirectedGraph {
        &self.dag
    }

    /// CPT of a node, indexed by variable id.
    pub fn cpt(&self, v: VarId) -> &Cpt {
        &self.cpts[v as usize]
    }

    pub fn cpts(&self) -> &[Cpt] {
        &self.cpts
    }

    /// Joint probability as the product of conditional tables.
    pub fn evaluate_joint(&self, x: &[usize]) -> Result<f64> {
        self.vars.check_assignment(x)?;
        Ok(self
            .cpts
            .iter()
            .map(|c| c.factor.value_at_full(x))
            .product())
    }
}

/// Converts a network into a decomposable model over the triangulated moral
/// graph: assign each CPT to the smallest clique containing its scope,
/// calibrate, and normalize per tree. Clique tables larger than `cell_cap`
/// are refused.
pub fn bn_to_dm(bn: &BayesianNetwork, cell_cap: u64) -> Result<DecomposableModel> {
    let moral = bn.dag.moralize();
    let h = crate::chordal::triangulate(&moral);
    let forest = build_forest(&h)?;
    let mut assigned = Vec::with_capacity(bn.cpts.len());
    for cpt in &bn.cpts {
        let clique = forest
            .cliques()
            .smallest_containing(cpt.factor.scope())
            .expect("CPT scope is a clique of the moral graph");
        assigned.push((clique, cpt.factor.clone()));
    }
    let cal = calibrate_capped(&bn.vars, &forest, &assigned, cell_cap)?;
    let mut tables = Vec::with_capacity(forest.cliques().len());
    for c in 0..forest.cliques().len() {
        let total = cal.belief_total(forest.tree_of(c));
        if total <= 0.0 {
            return Err(Error::InconsistentModel(format!(
                "tree {} of the converted network has total {total}",
                forest.tree_of(c)
            )));
        }
        let mut table = cal.belief(c).clone();
        for v in table.values_mut() {
            *v /= total;
        }
        tables.push(table);
    }
    DecomposableModel::new(bn.vars.clone(), h, tables)
}

/// Removes the arc `from -> to`, replacing the child's conditional table by
/// the exact mixture over the removed parent's marginal:
/// P'(x | z) = sum_y P(x | y, z) P(y). All other nodes are untouched.
pub fn delete_edge(bn: &BayesianNetwork, from: VarId, to: VarId) -> Result<BayesianNetwork> {
    if !bn.dag.has_arc(from, to) {
        return Err(Error::NoSuchEdge {
            from: bn.vars.name(from).to_string(),
            to: bn.vars.name(to).to_string(),
        });
    }
    let parent_marginal = bn_to_dm(bn, DEFAULT_CELL_CAP)?.variable_marginal(from)?;
    let cpt = bn.cpt(to);
    let keep: Vec<VarId> = cpt
        .factor
        .scope()
        .iter()
        .copied()
        .filter(|&v| v != from)
        .collect();
    let new_factor = cpt.factor.multiply(&parent_marginal)?.marginalize(&keep)?;
    let nodes: Vec<(VarId, Vec<VarId>, Factor)> = bn
        .cpts
        .iter()
        .map(|c| {
            if c.child == to {
                let parents: Vec<VarId> =
                    c.parents.iter().copied().filter(|&p| p != from).collect();
                (c.child, parents, new_factor.clone())
            } else {
                (c.child, c.parents.clone(), c.factor.clone())
            }
        })
        .collect();
    BayesianNetwork::new(bn.vars.clone(), nodes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vars::for_each_assignment;

    /// Collider network: x0 -> x2 <- x1, all binary.
    fn collider() -> BayesianNetwork {
        let vars = VariableTable::uniform(3, 2).unwrap();
        let p0 = Factor::from_values(&vars, &[0], vec![0.3, 0.7]).unwrap();
        let p1 = Factor::from_values(&vars, &[1], vec![0.6, 0.4]).unwrap();
        // P(x2 | x0, x1) over sorted scope [0, 1, 2], x2 fastest.
        let p2 = Factor::from_values(
            &vars,
            &[0, 1, 2],
            vec![0.9, 0.1, 0.5, 0.5, 0.2, 0.8, 0.3, 0.7],
        )
        .unwrap();
        BayesianNetwork::new(
            vars,
            vec![(0, vec![], p0), (1, vec![], p1), (2, vec![0, 1], p2)],
        )
        .unwrap()
    }

    #[test]
    fn joint_is_product_of_conditionals() {
        let bn = collider();
        let p = bn.evaluate_joint(&[1, 0, 1]).unwrap();
        assert!((p - 0.7 * 0.6 * 0.8).abs() < 1e-15);
    }

    #[test]
    fn rejects_unnormalized_columns() {
        let vars = VariableTable::uniform(1, 2).unwrap();
        let bad = Factor::from_values(&vars, &[0], vec![0.5, 0.6]).unwrap();
        assert!(matches!(
            BayesianNetwork::new(vars, vec![(0, vec![], bad)]).unwrap_err(),
            Error::InconsistentModel(_)
        ));
    }

    #[test]
    fn rejects_cycles() {
        let vars = VariableTable::uniform(2, 2).unwrap();
        let t = Factor::from_values(&vars, &[0, 1], vec![0.5, 0.5, 0.5, 0.5]).unwrap();
        let err =
            BayesianNetwork::new(vars, vec![(0, vec![1], t.clone()), (1, vec![0], t)]).unwrap_err();
        assert!(matches!(err, Error::CyclicInput(_)));
    }

    #[test]
    fn conversion_preserves_the_joint() {
        let bn = collider();
        let dm = bn_to_dm(&bn, DEFAULT_CELL_CAP).unwrap();
        for_each_assignment(&[2, 2, 2], |x| {
            let want = bn.evaluate_joint(x).unwrap();
            let got = dm.evaluate_joint(x).unwrap();
            assert!((want - got).abs() <= 1e-12, "{x:?}: {want} vs {got}");
        });
    }

    #[test]
    fn conversion_yields_exact_marginals() {
        let bn = collider();
        let dm = bn_to_dm(&bn, DEFAULT_CELL_CAP).unwrap();
        // Marginal of the collider child by direct summation.
        let mut want = [0.0f64; 2];
        for_each_assignment(&[2, 2, 2], |x| {
            want[x[2]] += bn.evaluate_joint(x).unwrap();
        });
        let got = dm.variable_marginal(2).unwrap();
        assert!((got.values()[0] - want[0]).abs() < 1e-12);
        assert!((got.values()[1] - want[1]).abs() < 1e-12);
    }

    #[test]
    fn conversion_respects_cell_cap() {
        let bn = collider();
        assert!(matches!(
            bn_to_dm(&bn, 7).unwrap_err(),
            Error::TableTooLarge { .. }
        ));
    }

    #[test]
    fn delete_edge_requires_existing_arc() {
        let bn = collider();
        assert!(matches!(
            delete_edge(&bn, 2, 0).unwrap_err(),
            Error::NoSuchEdge { .. }
        ));
    }

    #[test]
    fn delete_edge_mixes_over_parent_marginal() {
        let bn = collider();
        let reduced = delete_edge(&bn, 0, 2).unwrap();
        assert!(!reduced.dag().has_arc(0, 2));
        assert!(reduced.dag().has_arc(1, 2));
        // P'(x2 | x1) = sum_{x0} P(x2 | x0, x1) P(x0).
        let t = reduced.cpt(2).factor();
        assert_eq!(t.scope(), &[1, 2]);
        let expect_00 = 0.9 * 0.3 + 0.2 * 0.7;
        assert!((t.value_at_full(&[9, 0, 0]) - expect_00).abs() < 1e-15);
        let expect_11 = 0.5 * 0.3 + 0.7 * 0.7;
        assert!((t.value_at_full(&[9, 1, 1]) - expect_11).abs() < 1e-15);
        // Still a valid network whose joint sums to one.
        let mut total = 0.0;
        for_each_assignment(&[2, 2, 2], |x| {
            total += reduced.evaluate_joint(x).unwrap();
        });
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn deleting_all_parents_leaves_prior() {
        let bn = collider();
        let reduced = delete_edge(&delete_edge(&bn, 0, 2).unwrap(), 1, 2).unwrap();
        let t = reduced.cpt(2).factor();
        assert_eq!(t.scope(), &[2]);
        // Full marginal of x2 under the original network.
        let mut want = [0.0f64; 2];
        for_each_assignment(&[2, 2, 2], |x| {
            want[x[2]] += bn.evaluate_joint(x).unwrap();
        });
        assert!((t.values()[0] - want[0]).abs() < 1e-12);
        assert!((t.values()[1] - want[1]).abs() < 1e-12);
    }
}
