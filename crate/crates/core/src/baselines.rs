//! Ground-truth enumeration oracle and a Monte Carlo comparator.
//!
//! The brute-force routines materialize both joints (or walk every
//! assignment) and apply the defining expressions directly; they exist to
//! check the junction-forest engine, sharing its cell conventions and error
//! semantics. The Monte Carlo estimator samples from P and averages
//! per-case importance-weighted terms; it is the runtime baseline.
//!
//! All randomness comes from ChaCha20 with fixed stream ids: stream 0 draws
//! model samples, stream 1 draws uniform-domain samples, stream 2 drives
//! bootstrap resampling. Seed 0 is reserved for test fixtures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::divergence::AlphaBeta;
use crate::error::{Error, Result};
use crate::functional::{log_of_star, FunctionalSpec, OuterLog, StarTransform};
use crate::model::DecomposableModel;

/// Per-sample contribution as a function of (P(x), Q(x)).
type SampleTerm = Box<dyn Fn(f64, f64) -> Result<f64>>;

/// Largest joint domain the enumeration oracle will materialize.
pub const DEFAULT_JOINT_CAP: u64 = 1 << 22;

/// A fully materialized joint distribution, cells in ascending row-major
/// assignment order (last variable fastest).
#[derive(Debug, Clone)]
pub struct JointTable {
    values: Vec<f64>,
}

impl JointTable {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Evaluates the model at every joint assignment. Refuses domains larger
/// than `cap` states.
pub fn materialize_joint(m: &DecomposableModel, cap: u64) -> Result<JointTable> {
    let states = m.vars().joint_states().unwrap_or(u128::MAX);
    if states > cap as u128 {
        return Err(Error::DomainTooLarge { states, cap });
    }
    let mut values = Vec::with_capacity(states as usize);
    let mut first_err = None;
    m.vars().for_each_assignment(|x| {
        if first_err.is_some() {
            return;
        }
        match m.evaluate_joint(x) {
            Ok(v) => values.push(v),
            Err(e) => first_err = Some(e),
        }
    });
    match first_err {
        Some(e) => Err(e),
        None => Ok(JointTable { values }),
    }
}

/// 0^negative is the same error the engine raises when powering a
/// factorization table; everything else defers to `powf` (so 0^0 = 1).
fn checked_pow(base: f64, e: f64) -> Result<f64> {
    if base == 0.0 && e < 0.0 {
        return Err(Error::NegativePowerOfZero(e));
    }
    Ok(base.powf(e))
}

fn check_same_domain(p: &JointTable, q: &JointTable) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::VariableMismatch(format!(
            "joint tables have {} and {} states",
            p.len(),
            q.len()
        )));
    }
    Ok(())
}

/// Direct sum over the domain of P^a * Q^b.
pub fn brute_f2(p: &JointTable, q: &JointTable, a: f64, b: f64) -> Result<f64> {
    check_same_domain(p, q)?;
    let mut acc = 0.0;
    for (&pv, &qv) in p.values.iter().zip(&q.values) {
        acc += checked_pow(pv, a)? * checked_pow(qv, b)?;
    }
    Ok(acc)
}

/// Direct sum over the domain of P^a * Q^b * ln(P^c * Q^d). Zero-weight
/// states are skipped; an infinite log under positive weight is an error,
/// matching the engine.
pub fn brute_f3(p: &JointTable, q: &JointTable, a: f64, b: f64, c: f64, d: f64) -> Result<f64> {
    check_same_domain(p, q)?;
    let mut acc = 0.0;
    for (x, (&pv, &qv)) in p.values.iter().zip(&q.values).enumerate() {
        let w = checked_pow(pv, a)? * checked_pow(qv, b)?;
        if w == 0.0 {
            continue;
        }
        let lp = log_of_star(&StarTransform::Power(c), 0, pv, 1.0);
        let lq = log_of_star(&StarTransform::Power(d), 0, qv, 1.0);
        if lp.is_infinite() || lq.is_infinite() {
            return Err(Error::LogOfZeroOnSupport(format!(
                "state {x} has zero probability under positive weight {w}"
            )));
        }
        acc += w * (lp + lq);
    }
    Ok(acc)
}

/// The three bilinear pieces of the squared-log functional, by enumeration:
/// sums of (ln P)^2, (ln Q)^2, and ln P * ln Q.
pub fn brute_f1_pieces(p: &JointTable, q: &JointTable) -> Result<(f64, f64, f64)> {
    check_same_domain(p, q)?;
    let (mut pp, mut qq, mut pq) = (0.0, 0.0, 0.0);
    for (x, (&pv, &qv)) in p.values.iter().zip(&q.values).enumerate() {
        if pv == 0.0 || qv == 0.0 {
            return Err(Error::LogOfZero(format!(
                "state {x} has zero probability; the squared-log functional needs strictly positive joints"
            )));
        }
        let (lp, lq) = (pv.ln(), qv.ln());
        pp += lp * lp;
        qq += lq * lq;
        pq += lp * lq;
    }
    Ok((pp, qq, pq))
}

/// Direct sum over the domain of (ln P - ln Q)^2 / 2.
pub fn brute_f1(p: &JointTable, q: &JointTable) -> Result<f64> {
    check_same_domain(p, q)?;
    let mut acc = 0.0;
    for (x, (&pv, &qv)) in p.values.iter().zip(&q.values).enumerate() {
        if pv == 0.0 || qv == 0.0 {
            return Err(Error::LogOfZero(format!(
                "state {x} has zero probability; the squared-log functional needs strictly positive joints"
            )));
        }
        let d = pv.ln() - qv.ln();
        acc += 0.5 * d * d;
    }
    Ok(acc)
}

/// Five-case divergence dispatch over materialized joints; mirrors the
/// engine-backed dispatch term for term.
pub fn brute_alpha_beta(p: &JointTable, q: &JointTable, ab: AlphaBeta) -> Result<f64> {
    check_same_domain(p, q)?;
    let (a, b) = (ab.alpha, ab.beta);
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::Validation(format!(
            "divergence parameters must be finite, got ({a}, {b})"
        )));
    }
    let states = p.len() as f64;
    if a != 0.0 && b != 0.0 && a + b != 0.0 {
        let s = a + b;
        let f_ab = brute_f2(p, q, a, b)?;
        let f_s0 = brute_f2(p, q, s, 0.0)?;
        let f_0s = brute_f2(p, q, 0.0, s)?;
        Ok(-(f_ab - a / s * f_s0 - b / s * f_0s) / (a * b))
    } else if a != 0.0 && b == 0.0 {
        let t = brute_f3(p, q, a, 0.0, a, -a)?;
        Ok((t - brute_f2(p, q, a, 0.0)? + brute_f2(p, q, 0.0, a)?) / (a * a))
    } else if a != 0.0 {
        let t = brute_f3(p, q, 0.0, 0.0, -a, a)?;
        Ok((t + brute_f2(p, q, a, -a)? - states) / (a * a))
    } else if b != 0.0 {
        let t = brute_f3(p, q, 0.0, b, -b, b)?;
        Ok((t - brute_f2(p, q, 0.0, b)? + brute_f2(p, q, b, 0.0)?) / (b * b))
    } else {
        brute_f1(p, q)
    }
}

/// Materializes both joints (default cap) and dispatches.
pub fn brute_force_alpha_beta(
    p: &DecomposableModel,
    q: &DecomposableModel,
    ab: AlphaBeta,
    cap: u64,
) -> Result<f64> {
    if p.vars() != q.vars() {
        return Err(Error::VariableMismatch(
            "models are defined over different variable tables".into(),
        ));
    }
    let jp = materialize_joint(p, cap)?;
    let jq = materialize_joint(q, cap)?;
    brute_alpha_beta(&jp, &jq, ab)
}

/// Walks every assignment and applies the functional's defining expression:
/// the joint weight P^gExp * Q^hExp times the summed outer-log-of-star
/// terms of both rooted factorizations.
pub fn brute_force_functional(
    p: &DecomposableModel,
    q: &DecomposableModel,
    spec: &FunctionalSpec,
) -> Result<f64> {
    brute_force_functional_capped(p, q, spec, DEFAULT_JOINT_CAP)
}

pub fn brute_force_functional_capped(
    p: &DecomposableModel,
    q: &DecomposableModel,
    spec: &FunctionalSpec,
    cap: u64,
) -> Result<f64> {
    if p.vars() != q.vars() {
        return Err(Error::VariableMismatch(
            "models are defined over different variable tables".into(),
        ));
    }
    spec.validate(p.n_cliques(), q.n_cliques())?;
    let states = p.vars().joint_states().unwrap_or(u128::MAX);
    if states > cap as u128 {
        return Err(Error::DomainTooLarge { states, cap });
    }
    let jt_p = p.jt_factorization()?;
    let jt_q = q.jt_factorization()?;
    let log_denom = match spec.outer {
        OuterLog::Natural => 1.0,
        OuterLog::Base(b) => b.ln(),
    };
    let mut acc = 0.0;
    let mut first_err = None;
    p.vars().for_each_assignment(|x| {
        if first_err.is_some() {
            return;
        }
        let mut step = || -> Result<()> {
            let pv = p.evaluate_joint(x)?;
            let qv = q.evaluate_joint(x)?;
            let w = checked_pow(pv, spec.g_exp)? * checked_pow(qv, spec.h_exp)?;
            if w == 0.0 {
                return Ok(());
            }
            let mut inner = 0.0;
            for (star, jt) in [(&spec.g_star, &jt_p), (&spec.h_star, &jt_q)] {
                for (c, f) in jt.factors().iter().enumerate() {
                    let lg = log_of_star(star, c, f.value_at_full(x), log_denom);
                    if lg.is_infinite() {
                        return Err(Error::LogOfZeroOnSupport(format!(
                            "clique {c} hits a zero cell under positive weight {w}"
                        )));
                    }
                    inner += lg;
                }
            }
            acc += w * inner;
            Ok(())
        };
        if let Err(e) = step() {
            first_err = Some(e);
        }
    });
    match first_err {
        Some(e) => Err(e),
        None => Ok(acc),
    }
}

/// Joint assignments drawn from a model, reproducible from the seed.
#[derive(Debug, Clone)]
pub struct SampleBatch {
    n_vars: usize,
    seed: u64,
    data: Vec<usize>,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.data.len().checked_div(self.n_vars).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.data[i * self.n_vars..(i + 1) * self.n_vars]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[usize]> {
        self.data.chunks_exact(self.n_vars)
    }
}

/// Draws `n` joint samples by walking each tree: the root clique from its
/// marginal, then every child clique from its table conditioned on the
/// parent-edge separator. Tree order, traversal order, and cell order are
/// all fixed, so output is a pure function of (model, n, seed).
pub fn forward_sample(m: &DecomposableModel, n: usize, seed: u64) -> Result<SampleBatch> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(0);
    let n_vars = m.vars().len();
    let mut data = Vec::with_capacity(n * n_vars);
    let plans: Vec<Vec<usize>> = m
        .forest()
        .trees()
        .iter()
        .map(|t| bfs_clique_order(&t.clique_ids, &t.edges))
        .collect();
    let mut assignment: Vec<Option<usize>> = vec![None; n_vars];
    for _ in 0..n {
        assignment.fill(None);
        for order in &plans {
            for &c in order {
                sample_clique(m.clique_marginal(c), &mut assignment, &mut rng)?;
            }
        }
        for v in &assignment {
            data.push(v.expect("every variable lies in some clique"));
        }
    }
    Ok(SampleBatch { n_vars, seed, data })
}

/// Clique visit order for one tree: breadth-first from the smallest clique
/// id, neighbors ascending.
fn bfs_clique_order(clique_ids: &[usize], edges: &[crate::jt::TreeEdge]) -> Vec<usize> {
    let mut adj: std::collections::BTreeMap<usize, Vec<usize>> = std::collections::BTreeMap::new();
    for id in clique_ids {
        adj.insert(*id, Vec::new());
    }
    for e in edges {
        adj.get_mut(&e.a).unwrap().push(e.b);
        adj.get_mut(&e.b).unwrap().push(e.a);
    }
    for nbrs in adj.values_mut() {
        nbrs.sort_unstable();
    }
    let root = clique_ids[0];
    let mut order = vec![root];
    let mut seen: std::collections::BTreeSet<usize> = [root].into();
    let mut head = 0;
    while head < order.len() {
        let c = order[head];
        head += 1;
        for &nb in &adj[&c] {
            if seen.insert(nb) {
                order.push(nb);
            }
        }
    }
    order
}

/// Draws values for the not-yet-assigned variables of `f`'s scope,
/// proportionally to the table restricted to the already-assigned ones.
fn sample_clique(
    f: &crate::factor::Factor,
    assignment: &mut [Option<usize>],
    rng: &mut ChaCha20Rng,
) -> Result<()> {
    let scope = f.scope();
    let cards = f.cards();
    let strides = f.strides();
    let consistent = |flat: usize| -> bool {
        scope
            .iter()
            .enumerate()
            .all(|(i, &v)| match assignment[v as usize] {
                Some(val) => (flat / strides[i]) % cards[i] == val,
                None => true,
            })
    };
    let mut total = 0.0;
    for flat in 0..f.len() {
        if consistent(flat) {
            total += f.values()[flat];
        }
    }
    if total.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::InternalInconsistency(format!(
            "conditional mass over clique {:?} vanished while sampling",
            scope
        )));
    }
    let target = rng.random::<f64>() * total;
    let mut cum = 0.0;
    let mut chosen = None;
    for flat in 0..f.len() {
        if !consistent(flat) || f.values()[flat] == 0.0 {
            continue;
        }
        cum += f.values()[flat];
        chosen = Some(flat);
        if cum > target {
            break;
        }
    }
    let flat = chosen.expect("positive total implies a positive cell");
    for (i, &v) in scope.iter().enumerate() {
        assignment[v as usize] = Some((flat / strides[i]) % cards[i]);
    }
    Ok(())
}

/// Monte Carlo divergence estimate with its standard error.
#[derive(Debug, Clone, Copy)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: usize,
    /// Present when bootstrap resampling was requested.
    pub bootstrap_std_error: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct McOptions {
    pub samples: usize,
    pub seed: u64,
    /// Number of bootstrap resamples; `None` keeps the delta-method error
    /// only.
    pub bootstrap_resamples: Option<usize>,
}

/// Importance-sampled divergence estimate: per-case linear combinations of
/// term means over x ~ P, with pure log sums (cases without any power
/// weight) estimated from a uniform batch scaled by the domain size. The
/// two batches are independent, so their variances add.
pub fn mc_alpha_beta(
    p: &DecomposableModel,
    q: &DecomposableModel,
    ab: AlphaBeta,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    mc_alpha_beta_opts(
        p,
        q,
        ab,
        &McOptions {
            samples,
            seed,
            bootstrap_resamples: None,
        },
    )
}

pub fn mc_alpha_beta_opts(
    p: &DecomposableModel,
    q: &DecomposableModel,
    ab: AlphaBeta,
    opts: &McOptions,
) -> Result<McEstimate> {
    if p.vars() != q.vars() {
        return Err(Error::VariableMismatch(
            "models are defined over different variable tables".into(),
        ));
    }
    let (a, b) = (ab.alpha, ab.beta);
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::Validation(format!(
            "divergence parameters must be finite, got ({a}, {b})"
        )));
    }
    let n = opts.samples;
    if n < 2 {
        return Err(Error::Validation(
            "need at least 2 samples for a standard error".into(),
        ));
    }
    let states = p.vars().joint_states_f64();

    // Per-sample value of the P-weighted part of the active case, already
    // divided by P(x) for the importance weight.
    let weighted: Option<SampleTerm> = if a != 0.0 && b != 0.0 && a + b != 0.0 {
        let s = a + b;
        Some(Box::new(move |pv: f64, qv: f64| {
            let t = checked_pow(pv, a - 1.0)? * checked_pow(qv, b)?
                - a / s * checked_pow(pv, s - 1.0)?
                - b / s * checked_pow(qv, s)? / pv;
            Ok(-t / (a * b))
        }))
    } else if a != 0.0 && b == 0.0 {
        Some(Box::new(move |pv: f64, qv: f64| {
            if qv == 0.0 {
                return Err(Error::ZeroProbabilitySample(
                    "sampled a state with Q = 0 inside a log term".into(),
                ));
            }
            let pa1 = checked_pow(pv, a - 1.0)?;
            Ok((a * pa1 * (pv.ln() - qv.ln()) - pa1 + checked_pow(qv, a)? / pv) / (a * a))
        }))
    } else if a != 0.0 {
        // beta = -alpha: only the power-product term is P-weighted.
        Some(Box::new(move |pv: f64, qv: f64| {
            Ok(checked_pow(pv, a - 1.0)? * checked_pow(qv, -a)? / (a * a))
        }))
    } else if b != 0.0 {
        Some(Box::new(move |pv: f64, qv: f64| {
            let qlog = if qv == 0.0 {
                if b < 0.0 {
                    return Err(Error::ZeroProbabilitySample(
                        "sampled a state with Q = 0 under a negative exponent".into(),
                    ));
                }
                0.0
            } else {
                checked_pow(qv, b)? * (qv.ln() - pv.ln())
            };
            Ok((b * qlog - checked_pow(qv, b)? + checked_pow(pv, b)?) / pv / (b * b))
        }))
    } else {
        None
    };

    // Per-state value of the unweighted log sums, estimated uniformly.
    let uniform: Option<SampleTerm> = if a != 0.0 && b == -a {
        Some(Box::new(move |pv: f64, qv: f64| {
            if pv == 0.0 || qv == 0.0 {
                return Err(Error::ZeroProbabilitySample(
                    "sampled a state with zero probability inside a log term".into(),
                ));
            }
            Ok(states * (qv.ln() - pv.ln()) / a)
        }))
    } else if a == 0.0 && b == 0.0 {
        Some(Box::new(move |pv: f64, qv: f64| {
            if pv == 0.0 || qv == 0.0 {
                return Err(Error::ZeroProbabilitySample(
                    "sampled a state with zero probability inside a log term".into(),
                ));
            }
            let d = pv.ln() - qv.ln();
            Ok(states * 0.5 * d * d)
        }))
    } else {
        None
    };

    let constant = if a != 0.0 && b == -a {
        -states / (a * a)
    } else {
        0.0
    };

    let z_values = match &weighted {
        Some(f) => {
            let batch = forward_sample(p, n, opts.seed)?;
            let mut zs = Vec::with_capacity(n);
            for row in batch.rows() {
                let pv = p.evaluate_joint(row)?;
                let qv = q.evaluate_joint(row)?;
                zs.push(map_zero_sample(f(pv, qv))?);
            }
            Some(zs)
        }
        None => None,
    };
    let y_values = match &uniform {
        Some(f) => {
            let mut rng = ChaCha20Rng::seed_from_u64(opts.seed);
            rng.set_stream(1);
            let cards: Vec<usize> = p.vars().iter().map(|v| v.cardinality).collect();
            let mut row = vec![0usize; cards.len()];
            let mut ys = Vec::with_capacity(n);
            for _ in 0..n {
                for (i, &card) in cards.iter().enumerate() {
                    row[i] = rng.random_range(0..card);
                }
                let pv = p.evaluate_joint(&row)?;
                let qv = q.evaluate_joint(&row)?;
                ys.push(f(pv, qv)?);
            }
            Some(ys)
        }
        None => None,
    };

    let mut estimate = constant;
    let mut variance = 0.0;
    for batch in [&z_values, &y_values].into_iter().flatten() {
        let (m, v) = mean_and_variance(batch);
        estimate += m;
        variance += v / batch.len() as f64;
    }
    let bootstrap_std_error = match opts.bootstrap_resamples {
        Some(resamples) => Some(bootstrap_std_error(
            opts.seed, resamples, constant, &z_values, &y_values,
        )?),
        None => None,
    };
    Ok(McEstimate {
        estimate,
        std_error: variance.sqrt(),
        samples: n,
        bootstrap_std_error,
    })
}

/// The estimand is undefined when a sampled state needs a negative power of
/// zero; reclassify the power error as a sampling one.
fn map_zero_sample(r: Result<f64>) -> Result<f64> {
    match r {
        Err(Error::NegativePowerOfZero(_)) => Err(Error::ZeroProbabilitySample(
            "sampled a state with Q = 0 under a negative exponent".into(),
        )),
        other => other,
    }
}

fn mean_and_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Resamples each batch independently with replacement and reads the spread
/// of the recombined estimates.
fn bootstrap_std_error(
    seed: u64,
    resamples: usize,
    constant: f64,
    z_values: &Option<Vec<f64>>,
    y_values: &Option<Vec<f64>>,
) -> Result<f64> {
    if resamples < 2 {
        return Err(Error::Validation(
            "need at least 2 bootstrap resamples".into(),
        ));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(2);
    let mut estimates = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let mut est = constant;
        for batch in [z_values, y_values].into_iter().flatten() {
            let n = batch.len();
            let mut sum = 0.0;
            for _ in 0..n {
                sum += batch[rng.random_range(0..n)];
            }
            est += sum / n as f64;
        }
        estimates.push(est);
    }
    let (_, var) = mean_and_variance(&estimates);
    Ok(var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergence::alpha_beta_with_engine;
    use crate::functional::Engine;
    use crate::generate::random_model_pair;
    use crate::graph::UndirectedGraph;
    use crate::vars::VariableTable;

    fn seeded_pair(seed: u64, n: usize) -> (DecomposableModel, DecomposableModel) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let vars = VariableTable::uniform(n, 2).unwrap();
        random_model_pair(&vars, &[n], 3, &mut rng).unwrap()
    }

    #[test]
    fn normalization_shows_up_as_unit_f2() {
        let (p, q) = seeded_pair(5, 6);
        let jp = materialize_joint(&p, DEFAULT_JOINT_CAP).unwrap();
        let jq = materialize_joint(&q, DEFAULT_JOINT_CAP).unwrap();
        assert!((brute_f2(&jp, &jq, 1.0, 0.0).unwrap() - 1.0).abs() <= 1e-12);
        assert!((brute_f2(&jp, &jq, 0.0, 1.0).unwrap() - 1.0).abs() <= 1e-12);
        assert_eq!(brute_f2(&jp, &jq, 0.0, 0.0).unwrap(), 64.0);
    }

    #[test]
    fn brute_dispatch_matches_engine_dispatch() {
        for seed in [1u64, 7, 19] {
            let (p, q) = seeded_pair(seed, 6);
            let eng = Engine::new(&p, &q).unwrap();
            let jp = materialize_joint(&p, DEFAULT_JOINT_CAP).unwrap();
            let jq = materialize_joint(&q, DEFAULT_JOINT_CAP).unwrap();
            for (a, b) in [
                (0.5, 0.5),
                (2.0, -0.5),
                (1.0, 0.0),
                (0.0, 1.0),
                (1.0, -1.0),
                (0.0, 0.0),
            ] {
                let ab = AlphaBeta { alpha: a, beta: b };
                let got = brute_alpha_beta(&jp, &jq, ab).unwrap();
                let want = alpha_beta_with_engine(&eng, ab).unwrap();
                assert!(
                    (got - want).abs() <= 1e-9 * want.abs().max(1e-9),
                    "seed {seed} ({a},{b}): {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn generic_functional_oracle_matches_engine() {
        let (p, q) = seeded_pair(23, 5);
        let eng = Engine::new(&p, &q).unwrap();
        let spec = FunctionalSpec {
            g_exp: 0.7,
            h_exp: -0.3,
            g_star: StarTransform::Power(2.0),
            h_star: StarTransform::ConstantPerClique {
                base: 3.0,
                exponents: (0..q.n_cliques()).map(|i| 0.1 * i as f64).collect(),
            },
            outer: OuterLog::Base(10.0),
        };
        let got = brute_force_functional(&p, &q, &spec).unwrap();
        let want = eng.evaluate(&spec).unwrap();
        assert!(
            (got - want).abs() <= 1e-10 * want.abs().max(1e-12),
            "{got} vs {want}"
        );
    }

    #[test]
    fn oversized_domains_are_refused_before_materializing() {
        let (p, _) = seeded_pair(2, 5);
        let err = materialize_joint(&p, 8).unwrap_err();
        match err {
            Error::DomainTooLarge { states, cap } => {
                assert_eq!(states, 32);
                assert_eq!(cap, 8);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    fn point_mass_model() -> DecomposableModel {
        let vars = VariableTable::uniform(2, 2).unwrap();
        let g = UndirectedGraph::from_edges(2, &[(0, 1)]).unwrap();
        let f =
            crate::factor::Factor::from_values(&vars, &[0, 1], vec![0.0, 0.0, 0.0, 1.0]).unwrap();
        DecomposableModel::new(vars, g, vec![f]).unwrap()
    }

    #[test]
    fn point_mass_sampling_is_constant() {
        let m = point_mass_model();
        let batch = forward_sample(&m, 25, 4).unwrap();
        assert_eq!(batch.len(), 25);
        for row in batch.rows() {
            assert_eq!(row, &[1, 1]);
        }
    }

    #[test]
    fn sampling_matches_clique_marginals() {
        // Empirical clique frequencies against the model tables, 4 sigma.
        let (p, _) = seeded_pair(31, 6);
        let n = 100_000usize;
        let batch = forward_sample(&p, n, 9).unwrap();
        for c in 0..p.n_cliques() {
            let f = p.clique_marginal(c);
            let mut counts = vec![0usize; f.len()];
            for row in batch.rows() {
                counts[f.flat_of_full(row)] += 1;
            }
            for (cell, &want) in f.values().iter().enumerate() {
                let got = counts[cell] as f64 / n as f64;
                let sigma = (want * (1.0 - want) / n as f64).sqrt();
                assert!(
                    (got - want).abs() <= 4.0 * sigma + 1e-12,
                    "clique {c} cell {cell}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn uniform_model_sampling_is_uniform() {
        let vars = VariableTable::uniform(3, 2).unwrap();
        let g = UndirectedGraph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let f01 = crate::factor::Factor::from_values(&vars, &[0, 1], vec![0.25; 4]).unwrap();
        let f12 = crate::factor::Factor::from_values(&vars, &[1, 2], vec![0.25; 4]).unwrap();
        let m = DecomposableModel::new(vars, g, vec![f01, f12]).unwrap();
        let n = 100_000usize;
        let batch = forward_sample(&m, n, 12).unwrap();
        let mut counts = [0usize; 8];
        for row in batch.rows() {
            counts[row[0] * 4 + row[1] * 2 + row[2]] += 1;
        }
        let sigma = (0.125 * 0.875 / n as f64).sqrt();
        for &c in &counts {
            let got = c as f64 / n as f64;
            assert!((got - 0.125).abs() <= 4.0 * sigma, "{got}");
        }
    }

    #[test]
    fn mc_is_deterministic_for_a_seed() {
        let (p, q) = seeded_pair(41, 6);
        let ab = AlphaBeta {
            alpha: 1.0,
            beta: 0.0,
        };
        let e1 = mc_alpha_beta(&p, &q, ab, 2_000, 7).unwrap();
        let e2 = mc_alpha_beta(&p, &q, ab, 2_000, 7).unwrap();
        assert_eq!(e1.estimate.to_bits(), e2.estimate.to_bits());
        assert_eq!(e1.std_error.to_bits(), e2.std_error.to_bits());
        let e3 = mc_alpha_beta(&p, &q, ab, 2_000, 8).unwrap();
        assert_ne!(e1.estimate.to_bits(), e3.estimate.to_bits());
    }

    #[test]
    fn mc_self_divergence_is_zero_within_error() {
        let (p, _) = seeded_pair(43, 6);
        let est = mc_alpha_beta(
            &p,
            &p,
            AlphaBeta {
                alpha: 1.0,
                beta: 0.0,
            },
            100_000,
            1,
        )
        .unwrap();
        assert!(
            est.estimate.abs() <= 3.0 * est.std_error.max(1e-12),
            "{} vs stderr {}",
            est.estimate,
            est.std_error
        );
    }

    #[test]
    fn mc_tracks_brute_force_across_cases() {
        let (p, q) = seeded_pair(47, 8);
        for (a, b) in [(1.0, 1.0), (1.0, 0.0), (0.0, 1.0), (1.0, -1.0), (0.0, 0.0)] {
            let ab = AlphaBeta { alpha: a, beta: b };
            let exact = brute_force_alpha_beta(&p, &q, ab, DEFAULT_JOINT_CAP).unwrap();
            let est = mc_alpha_beta(&p, &q, ab, 100_000, 3).unwrap();
            assert!(
                (est.estimate - exact).abs() <= 3.0 * est.std_error,
                "({a},{b}): {} vs exact {exact}, stderr {}",
                est.estimate,
                est.std_error
            );
        }
    }

    #[test]
    fn stderr_shrinks_like_inverse_sqrt_n() {
        let (p, q) = seeded_pair(53, 6);
        let ab = AlphaBeta {
            alpha: 0.5,
            beta: 0.5,
        };
        let small = mc_alpha_beta(&p, &q, ab, 20_000, 5).unwrap();
        let large = mc_alpha_beta(&p, &q, ab, 80_000, 5).unwrap();
        let ratio = large.std_error / small.std_error;
        assert!((0.4..=0.6).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn sampled_zero_under_log_is_reported() {
        let vars = VariableTable::uniform(2, 2).unwrap();
        let g = UndirectedGraph::from_edges(2, &[(0, 1)]).unwrap();
        let fp = crate::factor::Factor::from_values(&vars, &[0, 1], vec![0.25; 4]).unwrap();
        let fq =
            crate::factor::Factor::from_values(&vars, &[0, 1], vec![0.5, 0.0, 0.25, 0.25]).unwrap();
        let p = DecomposableModel::new(vars.clone(), g.clone(), vec![fp]).unwrap();
        let q = DecomposableModel::new(vars, g, vec![fq]).unwrap();
        let err = mc_alpha_beta(
            &p,
            &q,
            AlphaBeta {
                alpha: 1.0,
                beta: 0.0,
            },
            1_000,
            1,
        )
        .unwrap_err();
        assert!(matches!(err, Error::ZeroProbabilitySample(_)));
    }

    #[test]
    fn bootstrap_error_is_close_to_delta_method() {
        let (p, q) = seeded_pair(59, 6);
        let est = mc_alpha_beta_opts(
            &p,
            &q,
            AlphaBeta {
                alpha: 1.0,
                beta: 0.0,
            },
            &McOptions {
                samples: 20_000,
                seed: 11,
                bootstrap_resamples: Some(200),
            },
        )
        .unwrap();
        let boot = est.bootstrap_std_error.unwrap();
        assert!(boot > 0.0);
        let ratio = boot / est.std_error;
        assert!((0.7..=1.4).contains(&ratio), "ratio {ratio}");
    }
}
