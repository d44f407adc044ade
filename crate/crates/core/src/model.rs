//! Decomposable models: one normalized probability table per maximal clique
//! of a chordal graph, with separator tables derived per junction-forest
//! edge. The joint density is the clique product divided by the separator
//! product, and trees of the forest are independent blocks.

use crate::error::{Error, Result};
use crate::factor::Factor;
use crate::graph::UndirectedGraph;
use crate::jt::{build_forest, JunctionForest};
use crate::vars::{VarId, VariableTable};

/// Absolute tolerance for normalization and marginal-consistency checks on
/// probability tables.
pub const CONSISTENCY_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct DecomposableModel {
    vars: VariableTable,
    graph: UndirectedGraph,
    forest: JunctionForest,
    clique_marginals: Vec<Factor>,
    /// Per tree, per tree edge, the separator marginal (taken from the
    /// endpoint with the smaller clique id).
    separator_marginals: Vec<Vec<Factor>>,
}

impl DecomposableModel {
    /// Builds and fully validates a model: the graph must be chordal, every
    /// clique table normalized and nonnegative, and both endpoints of every
    /// separator must agree on the shared margin.
    pub fn new(
        vars: VariableTable,
        graph: UndirectedGraph,
        clique_marginals: Vec<Factor>,
    ) -> Result<Self> {
        let model = Self::assemble(vars, graph, clique_marginals, None)?;
        model.check_separator_consistency()?;
        Ok(model)
    }

    /// Builds a model whose separators come from a designated endpoint
    /// without cross-endpoint agreement checks. Used for smoothed fits,
    /// which are deliberately allowed to be slightly inconsistent.
    pub(crate) fn new_unchecked_consistency(
        vars: VariableTable,
        graph: UndirectedGraph,
        clique_marginals: Vec<Factor>,
    ) -> Result<Self> {
        Self::assemble(vars, graph, clique_marginals, None)
    }

    fn assemble(
        vars: VariableTable,
        graph: UndirectedGraph,
        clique_marginals: Vec<Factor>,
        forest: Option<JunctionForest>,
    ) -> Result<Self> {
        if graph.vertex_count() != vars.len() {
            return Err(Error::VariableMismatch(format!(
                "graph has {} vertices, table has {} variables",
                graph.vertex_count(),
                vars.len()
            )));
        }
        let forest = match forest {
            Some(f) => f,
            None => build_forest(&graph)?,
        };
        let k = forest.cliques().len();
        if clique_marginals.len() != k {
            return Err(Error::Validation(format!(
                "{} clique tables supplied, graph has {} maximal cliques",
                clique_marginals.len(),
                k
            )));
        }
        for (c, f) in clique_marginals.iter().enumerate() {
            let scope = forest.cliques().get(c);
            if f.scope() != scope {
                return Err(Error::Validation(format!(
                    "table {c} has scope {:?}, clique is {scope:?}",
                    f.scope()
                )));
            }
            if f.cards() != vars.scope_cards(scope).as_slice() {
                return Err(Error::VariableMismatch(format!(
                    "table {c} disagrees with the variable table on cardinalities"
                )));
            }
            if let Some(v) = f.values().iter().find(|v| **v < 0.0) {
                return Err(Error::Validation(format!(
                    "table {c} has negative entry {v}"
                )));
            }
            let total = f.sum();
            if (total - 1.0).abs() > CONSISTENCY_TOL {
                return Err(Error::InconsistentModel(format!(
                    "clique table {c} sums to {total}, expected 1"
                )));
            }
        }
        let separator_marginals = forest
            .trees()
            .iter()
            .map(|tree| {
                tree.edges
                    .iter()
                    .map(|e| clique_marginals[e.a].marginalize(&e.separator))
                    .collect::<Result<Vec<Factor>>>()
            })
            .collect::<Result<Vec<Vec<Factor>>>>()?;
        Ok(Self {
            vars,
            graph,
            forest,
            clique_marginals,
            separator_marginals,
        })
    }

    fn check_separator_consistency(&self) -> Result<()> {
        for (t, tree) in self.forest.trees().iter().enumerate() {
            for (ei, e) in tree.edges.iter().enumerate() {
                let from_b = self.clique_marginals[e.b].marginalize(&e.separator)?;
                let stored = &self.separator_marginals[t][ei];
                for (i, (x, y)) in stored.values().iter().zip(from_b.values()).enumerate() {
                    if (x - y).abs() > CONSISTENCY_TOL {
                        return Err(Error::InconsistentModel(format!(
                            "cliques {} and {} disagree on separator {:?} cell {i}: {x} vs {y}",
                            e.a, e.b, e.separator
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn vars(&self) -> &VariableTable {
        &self.vars
    }

    pub fn graph(&self) -> &UndirectedGraph {
        &self.graph
    }

    pub fn forest(&self) -> &JunctionForest {
        &self.forest
    }

    pub fn n_cliques(&self) -> usize {
        self.forest.cliques().len()
    }

    pub fn clique_marginal(&self, clique: usize) -> &Factor {
        &self.clique_marginals[clique]
    }

    pub fn clique_marginals(&self) -> &[Factor] {
        &self.clique_marginals
    }

    pub fn separator_marginal(&self, tree: usize, edge: usize) -> &Factor {
        &self.separator_marginals[tree][edge]
    }

    /// Joint probability of a full assignment: clique product over separator
    /// product. Zero clique entries short-circuit to zero.
    pub fn evaluate_joint(&self, x: &[usize]) -> Result<f64> {
        self.vars.check_assignment(x)?;
        let mut num = 1.0;
        for f in &self.clique_marginals {
            let v = f.value_at_full(x);
            if v == 0.0 {
                return Ok(0.0);
            }
            num *= v;
        }
        let mut den = 1.0;
        for seps in &self.separator_marginals {
            for s in seps {
                let v = s.value_at_full(x);
                if v == 0.0 {
                    return Err(Error::InconsistentModel(format!(
                        "separator {:?} is zero where its cliques are positive",
                        s.scope()
                    )));
                }
                den *= v;
            }
        }
        Ok(num / den)
    }

    /// Marginal table of a single variable, from the lexicographically
    /// smallest clique containing it.
    pub fn variable_marginal(&self, v: VarId) -> Result<Factor> {
        let clique = self
            .forest
            .cliques()
            .smallest_containing(&[v])
            .ok_or_else(|| {
                Error::Validation(format!("variable {v} is not covered by any clique"))
            })?;
        self.clique_marginals[clique].marginalize(&[v])
    }

    /// Rooted factorization: the root clique of each tree keeps its table,
    /// every other clique is divided by its parent-edge separator. The
    /// product over all cliques equals the joint.
    pub fn jt_factorization(&self) -> Result<JtFactorization> {
        let mut factors: Vec<Option<Factor>> = vec![None; self.n_cliques()];
        for (t, tree) in self.forest.trees().iter().enumerate() {
            let root = tree.clique_ids[0];
            factors[root] = Some(self.clique_marginals[root].clone());
            // BFS from the root; each reached clique is divided by the
            // separator of the edge that reached it.
            let mut adj: std::collections::BTreeMap<usize, Vec<(usize, usize)>> =
                tree.clique_ids.iter().map(|&c| (c, Vec::new())).collect();
            for (ei, e) in tree.edges.iter().enumerate() {
                adj.get_mut(&e.a).unwrap().push((e.b, ei));
                adj.get_mut(&e.b).unwrap().push((e.a, ei));
            }
            let mut queue = std::collections::VecDeque::from([root]);
            while let Some(c) = queue.pop_front() {
                for &(nb, ei) in &adj[&c] {
                    if factors[nb].is_none() {
                        factors[nb] = Some(
                            self.clique_marginals[nb].divide(&self.separator_marginals[t][ei])?,
                        );
                        queue.push_back(nb);
                    }
                }
            }
        }
        Ok(JtFactorization {
            factors: factors
                .into_iter()
                .map(|f| f.expect("every clique reached"))
                .collect(),
        })
    }
}

/// Result of [`DecomposableModel::jt_factorization`]: one factor per clique
/// whose product over any assignment is the model's joint probability.
#[derive(Debug, Clone)]
pub struct JtFactorization {
    factors: Vec<Factor>,
}

impl JtFactorization {
    pub fn factor(&self, clique: usize) -> &Factor {
        &self.factors[clique]
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    /// Product of all factors at a full assignment.
    pub fn evaluate(&self, x: &[usize]) -> f64 {
        self.factors.iter().map(|f| f.value_at_full(x)).product()
    }
}

/// Maximum likelihood fit of clique tables for a fixed chordal structure.
///
/// Cell counts get `smoothing` added before normalization. With zero
/// smoothing the empirical clique tables are exactly consistent. With
/// positive smoothing each separator is taken from its smaller-id endpoint
/// clique and the model may be slightly inconsistent across endpoints, so
/// the cross-endpoint check is skipped.
pub fn mle_fit(
    vars: &VariableTable,
    graph: &UndirectedGraph,
    data: &[Vec<usize>],
    smoothing: f64,
) -> Result<DecomposableModel> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    if smoothing < 0.0 || !smoothing.is_finite() {
        return Err(Error::Validation(format!(
            "smoothing must be finite and nonnegative, got {smoothing}"
        )));
    }
    for row in data {
        vars.check_assignment(row)?;
    }
    let forest = build_forest(graph)?;
    let mut tables = Vec::with_capacity(forest.cliques().len());
    for c in 0..forest.cliques().len() {
        let mut counts = Factor::constant(vars, forest.cliques().get(c), smoothing)?;
        for row in data {
            let flat = counts.flat_of_full(row);
            counts.values_mut()[flat] += 1.0;
        }
        tables.push(counts.normalized()?);
    }
    if smoothing == 0.0 {
        DecomposableModel::new(vars.clone(), graph.clone(), tables)
    } else {
        DecomposableModel::new_unchecked_consistency(vars.clone(), graph.clone(), tables)
    }
}
