//! Sum-of-products functionals of two decomposable models.
//!
//! Both models are rewritten over one shared computation graph: the
//! triangulated union of their graphs. Each model clique C maps to the
//! lexicographically smallest containing clique alpha(C) of that graph, and
//! functionals of the form
//!
//!   F = sum over model cliques C of
//!       R(C) * sum over cells of alpha(C) of L(star(jt_C)) * belief
//!
//! are evaluated from one calibration, where the beliefs come from the
//! models' rooted factorizations raised to per-side exponents, and R(C) is
//! the product of the totals of all other trees of the forest.

use crate::chordal::triangulate;
use crate::error::{Error, Result};
use crate::factor::{Factor, DEFAULT_CELL_CAP};
use crate::graph::UndirectedGraph;
use crate::jt::{build_forest, calibrate_capped, close_rel, Calibration, JunctionForest};
use crate::model::{DecomposableModel, JtFactorization};

/// Per-clique transform applied inside the outer logarithm.
#[derive(Debug, Clone, PartialEq)]
pub enum StarTransform {
    /// Cell value raised to a fixed exponent.
    Power(f64),
    /// Ignores the cell value: the constant base^exponent for every clique.
    Constant { base: f64, exponent: f64 },
    /// Like `Constant`, with one exponent per model clique.
    ConstantPerClique { base: f64, exponents: Vec<f64> },
}

/// Outer logarithm of the functional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OuterLog {
    Natural,
    Base(f64),
}

/// A functional: sum over the joint domain of P^gExp * Q^hExp times the sum
/// of outer-log-of-star terms, one per clique of either model.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalSpec {
    pub g_exp: f64,
    pub h_exp: f64,
    pub g_star: StarTransform,
    pub h_star: StarTransform,
    pub outer: OuterLog,
}

impl FunctionalSpec {
    pub(crate) fn validate(&self, n_p_cliques: usize, n_q_cliques: usize) -> Result<()> {
        for v in [self.g_exp, self.h_exp] {
            if !v.is_finite() {
                return Err(Error::Validation(format!("non-finite exponent {v}")));
            }
        }
        if let OuterLog::Base(b) = self.outer {
            if !(b > 0.0 && b != 1.0 && b.is_finite()) {
                return Err(Error::Validation(format!("invalid log base {b}")));
            }
        }
        for (star, n) in [(&self.g_star, n_p_cliques), (&self.h_star, n_q_cliques)] {
            match star {
                StarTransform::Power(e) => {
                    if !e.is_finite() {
                        return Err(Error::Validation(format!("non-finite exponent {e}")));
                    }
                }
                StarTransform::Constant { base, exponent } => {
                    if !(*base > 0.0 && base.is_finite() && exponent.is_finite()) {
                        return Err(Error::Validation(format!(
                            "invalid constant transform {base}^{exponent}"
                        )));
                    }
                }
                StarTransform::ConstantPerClique { base, exponents } => {
                    if !(*base > 0.0 && base.is_finite())
                        || exponents.iter().any(|e| !e.is_finite())
                    {
                        return Err(Error::Validation("invalid constant transform".into()));
                    }
                    if exponents.len() != n {
                        return Err(Error::Validation(format!(
                            "{} per-clique exponents for {n} cliques",
                            exponents.len()
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// The shared evaluation structure for a model pair: triangulated union
/// graph, its junction forest, and both clique mappings.
#[derive(Debug, Clone)]
pub struct ComputationGraph {
    graph: UndirectedGraph,
    forest: JunctionForest,
    /// P clique index -> containing clique id of the union forest.
    alpha_p: Vec<usize>,
    /// Q clique index -> containing clique id of the union forest.
    alpha_q: Vec<usize>,
}

impl ComputationGraph {
    pub fn graph(&self) -> &UndirectedGraph {
        &self.graph
    }

    pub fn forest(&self) -> &JunctionForest {
        &self.forest
    }

    pub fn alpha_p(&self) -> &[usize] {
        &self.alpha_p
    }

    pub fn alpha_q(&self) -> &[usize] {
        &self.alpha_q
    }
}

/// Triangulates the union of both model graphs and maps every model clique
/// to the smallest containing clique of the result.
pub fn build_computation_graph(
    p: &DecomposableModel,
    q: &DecomposableModel,
) -> Result<ComputationGraph> {
    if p.vars() != q.vars() {
        return Err(Error::VariableMismatch(
            "models are defined over different variable tables".into(),
        ));
    }
    let union = p.graph().edge_union(q.graph())?;
    let graph = triangulate(&union);
    let forest = build_forest(&graph)?;
    let map = |m: &DecomposableModel| -> Vec<usize> {
        (0..m.n_cliques())
            .map(|c| {
                forest
                    .cliques()
                    .smallest_containing(m.forest().cliques().get(c))
                    .expect("model cliques survive in the union graph")
            })
            .collect()
    };
    Ok(ComputationGraph {
        alpha_p: map(p),
        alpha_q: map(q),
        graph,
        forest,
    })
}

/// Evaluation engine bound to one model pair. Construction triangulates the
/// union graph and takes both rooted factorizations once; every functional
/// evaluation reuses them.
#[derive(Debug)]
pub struct Engine<'a> {
    p: &'a DecomposableModel,
    q: &'a DecomposableModel,
    cg: ComputationGraph,
    jt_p: JtFactorization,
    jt_q: JtFactorization,
    cell_cap: u64,
}

impl<'a> Engine<'a> {
    pub fn new(p: &'a DecomposableModel, q: &'a DecomposableModel) -> Result<Self> {
        Self::with_cell_cap(p, q, DEFAULT_CELL_CAP)
    }

    pub fn with_cell_cap(
        p: &'a DecomposableModel,
        q: &'a DecomposableModel,
        cell_cap: u64,
    ) -> Result<Self> {
        let cg = build_computation_graph(p, q)?;
        for c in 0..cg.forest.cliques().len() {
            let cards = p.vars().scope_cards(cg.forest.cliques().get(c));
            crate::factor::table_len(&cards, cell_cap)?;
        }
        Ok(Self {
            p,
            q,
            cg,
            jt_p: p.jt_factorization()?,
            jt_q: q.jt_factorization()?,
            cell_cap,
        })
    }

    pub fn p(&self) -> &DecomposableModel {
        self.p
    }

    pub fn q(&self) -> &DecomposableModel {
        self.q
    }

    pub fn computation_graph(&self) -> &ComputationGraph {
        &self.cg
    }

    /// Calibrates the computation forest with both factorizations raised to
    /// the exponents in `spec`. The resulting beliefs are the unnormalized
    /// sum-product marginals of P^gExp * Q^hExp.
    pub fn sp_beliefs(&self, spec: &FunctionalSpec) -> Result<Calibration> {
        spec.validate(self.p.n_cliques(), self.q.n_cliques())?;
        let mut assigned = Vec::with_capacity(self.p.n_cliques() + self.q.n_cliques());
        for (c, f) in self.jt_p.factors().iter().enumerate() {
            assigned.push((self.cg.alpha_p[c], f.elementwise_power(spec.g_exp)?));
        }
        for (c, f) in self.jt_q.factors().iter().enumerate() {
            assigned.push((self.cg.alpha_q[c], f.elementwise_power(spec.h_exp)?));
        }
        calibrate_capped(self.p.vars(), &self.cg.forest, &assigned, self.cell_cap)
    }

    /// Evaluates the functional described by `spec`.
    pub fn evaluate(&self, spec: &FunctionalSpec) -> Result<f64> {
        let cal = self.sp_beliefs(spec)?;
        self.assemble(&cal, spec)
    }

    /// Combines calibrated beliefs with the log-of-star tables. Zero-belief
    /// cells contribute nothing; an infinite log term under positive belief
    /// means the functional diverges.
    fn assemble(&self, cal: &Calibration, spec: &FunctionalSpec) -> Result<f64> {
        let r = leave_one_out_products(cal.tree_totals());
        let log_denom = match spec.outer {
            OuterLog::Natural => 1.0,
            OuterLog::Base(b) => b.ln(),
        };
        let mut acc = 0.0;
        for (side, jt, alpha, star) in [
            (Side::P, &self.jt_p, &self.cg.alpha_p, &spec.g_star),
            (Side::Q, &self.jt_q, &self.cg.alpha_q, &spec.h_star),
        ] {
            for (c, jt_factor) in jt.factors().iter().enumerate() {
                let host = alpha[c];
                let weights = cal.belief(host).marginalize(jt_factor.scope())?;
                let mut term = 0.0;
                for (cell, (&w, &v)) in weights.values().iter().zip(jt_factor.values()).enumerate()
                {
                    if w == 0.0 {
                        continue;
                    }
                    let lg = log_of_star(star, c, v, log_denom);
                    if lg.is_infinite() {
                        return Err(Error::LogOfZeroOnSupport(format!(
                            "{side:?}-side clique {c} cell {cell} has zero value under positive weight {w}"
                        )));
                    }
                    term += w * lg;
                }
                acc += r[self.cg.forest.tree_of(host)] * term;
            }
        }
        Ok(acc)
    }

    /// Power-product functional: sum over the joint domain of P^a * Q^b.
    /// Computed through the telescoping log route and cross-checked against
    /// the product of tree totals; both paths must agree to 1e-9.
    pub fn f2(&self, a: f64, b: f64) -> Result<f64> {
        Ok(self.f2_paths(a, b)?.0)
    }

    /// Both routes to f2: (telescoping sum, product of tree totals).
    pub fn f2_paths(&self, a: f64, b: f64) -> Result<(f64, f64)> {
        let spec = FunctionalSpec {
            g_exp: a,
            h_exp: b,
            g_star: StarTransform::Constant {
                base: std::f64::consts::E,
                exponent: 1.0 / (2.0 * self.p.n_cliques() as f64),
            },
            h_star: StarTransform::Constant {
                base: std::f64::consts::E,
                exponent: 1.0 / (2.0 * self.q.n_cliques() as f64),
            },
            outer: OuterLog::Natural,
        };
        let cal = self.sp_beliefs(&spec)?;
        let telescoped = self.assemble(&cal, &spec)?;
        let shortcut: f64 = cal.tree_totals().iter().product();
        if !close_rel(telescoped, shortcut, 1e-9) {
            return Err(Error::InternalInconsistency(format!(
                "power-product paths disagree: {telescoped} vs {shortcut}"
            )));
        }
        Ok((telescoped, shortcut))
    }

    /// Log-weighted power product: sum over the joint domain of
    /// P^a * Q^b * ln(P^c * Q^d).
    pub fn f3(&self, a: f64, b: f64, c: f64, d: f64) -> Result<f64> {
        self.evaluate(&FunctionalSpec {
            g_exp: a,
            h_exp: b,
            g_star: StarTransform::Power(c),
            h_star: StarTransform::Power(d),
            outer: OuterLog::Natural,
        })
    }

    /// Half the summed squared log-ratio: sum of (ln P - ln Q)^2 / 2 over
    /// the joint domain. Requires strictly positive models.
    pub fn f1(&self) -> Result<f64> {
        let (t_pp, t_qq, t_pq) = self.f1_pieces()?;
        Ok(0.5 * (t_pp + t_qq - 2.0 * t_pq))
    }

    /// The three bilinear pieces of f1: sums over the joint domain of
    /// (ln P)^2, (ln Q)^2, and ln P * ln Q. Each is expanded over signed
    /// clique/separator pairs without any joint materialization.
    pub fn f1_pieces(&self) -> Result<(f64, f64, f64)> {
        let items_p = signed_log_items(self.p)?;
        let items_q = signed_log_items(self.q)?;
        Ok((
            self.log_pair_sum(&items_p, &items_p)?,
            self.log_pair_sum(&items_q, &items_q)?,
            self.log_pair_sum(&items_p, &items_q)?,
        ))
    }

    /// Sum over the joint domain of (sum of signed logs of A) times (sum of
    /// signed logs of B): every item pair contributes its aligned product
    /// sum, scaled by the free states outside the pair's scope.
    fn log_pair_sum(&self, a: &[(Factor, f64)], b: &[(Factor, f64)]) -> Result<f64> {
        let vars = self.p.vars();
        let mut acc = 0.0;
        for (fa, sa) in a {
            for (fb, sb) in b {
                let pair = fa.multiply_capped(fb, self.cell_cap)?;
                let outside: f64 = vars
                    .ids()
                    .filter(|v| pair.scope().binary_search(v).is_err())
                    .map(|v| vars.cardinality(v) as f64)
                    .product();
                acc += sa * sb * outside * pair.sum();
            }
        }
        Ok(acc)
    }
}

#[derive(Debug, Clone, Copy)]
enum Side {
    P,
    Q,
}

/// log base e of star(v), with the base-change division applied. For the
/// power transform, computed directly in log space so that zero cells give
/// signed infinities instead of NaN.
pub(crate) fn log_of_star(star: &StarTransform, clique: usize, v: f64, log_denom: f64) -> f64 {
    match star {
        StarTransform::Power(e) => {
            if *e == 0.0 {
                0.0
            } else if v == 0.0 {
                if *e > 0.0 {
                    f64::NEG_INFINITY
                } else {
                    f64::INFINITY
                }
            } else {
                e * v.ln() / log_denom
            }
        }
        StarTransform::Constant { base, exponent } => exponent * base.ln() / log_denom,
        StarTransform::ConstantPerClique { base, exponents } => {
            exponents[clique] * base.ln() / log_denom
        }
    }
}

/// Clique tables with sign +1 and separator tables with sign -1 (one per
/// tree edge; duplicates are kept), all elementwise-logged. Errors if any
/// table has a zero.
fn signed_log_items(m: &DecomposableModel) -> Result<Vec<(Factor, f64)>> {
    let mut items = Vec::new();
    for (c, f) in m.clique_marginals().iter().enumerate() {
        if f.values().contains(&0.0) {
            return Err(Error::LogOfZero(format!(
                "clique {c} has a zero cell; the squared-log functional needs strictly positive models"
            )));
        }
        items.push((f.elementwise_log()?, 1.0));
    }
    for (t, tree) in m.forest().trees().iter().enumerate() {
        for (ei, _) in tree.edges.iter().enumerate() {
            let s = m.separator_marginal(t, ei);
            if s.values().contains(&0.0) {
                return Err(Error::LogOfZero(format!(
                    "separator on tree {t} edge {ei} has a zero cell"
                )));
            }
            items.push((s.elementwise_log()?, -1.0));
        }
    }
    Ok(items)
}

/// r[i] = product of all totals except the i-th, stable under zero totals.
fn leave_one_out_products(totals: &[f64]) -> Vec<f64> {
    let n = totals.len();
    let mut prefix = vec![1.0; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] * totals[i];
    }
    let mut suffix = vec![1.0; n + 1];
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1] * totals[i];
    }
    (0..n).map(|i| prefix[i] * suffix[i + 1]).collect()
}
