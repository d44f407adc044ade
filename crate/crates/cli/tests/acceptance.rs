//! Acceptance gate: one test per criterion, each ending in a single PASS
//! line with its measured headroom. Tolerances are pinned as constants
//! here; loosening them is a behavior change, not a test fix.

use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use abdiv_cli::{run_sachs, SachsArgs, CANDIDATE_A_DELETIONS, CANDIDATE_B_DELETIONS};
use abdiv_core::baselines::{
    brute_alpha_beta, brute_f1, brute_f1_pieces, materialize_joint, mc_alpha_beta,
    DEFAULT_JOINT_CAP,
};
use abdiv_core::divergence::{alpha_beta_with_engine, default_grid, AlphaBeta};
use abdiv_core::error::Error;
use abdiv_core::factor::Factor;
use abdiv_core::functional::Engine;
use abdiv_core::generate::{chain_graph, random_model, random_model_pair};
use abdiv_core::graph::UndirectedGraph;
use abdiv_core::io::load_dm_path;
use abdiv_core::model::DecomposableModel;
use abdiv_core::vars::{for_each_assignment, VariableTable};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Exact-vs-oracle agreement for divergence values of honest magnitude.
const ORACLE_REL_TOL: f64 = 1e-8;
/// Absolute agreement floor for near-zero true values.
const ORACLE_ABS_TOL: f64 = 1e-9;
/// Below this magnitude the absolute tolerance applies instead.
const SMALL_VALUE: f64 = 1e-6;
/// Self-divergence bound across the grid.
const SELF_DIVERGENCE_TOL: f64 = 1e-8;
/// Three-way f1 agreement.
const F1_REL_TOL: f64 = 1e-8;
/// Two-path f2 agreement.
const F2_PATHS_REL_TOL: f64 = 1e-9;
/// Case-study agreement against enumeration.
const CASESTUDY_REL_TOL: f64 = 1e-7;
/// Pointwise joint-vs-factorization agreement.
const JOINT_POINTWISE_TOL: f64 = 1e-10;
/// Cross-endpoint separator agreement.
const MARGINAL_CONSISTENCY_TOL: f64 = 1e-9;

fn rel_against(value: f64, oracle: f64) -> f64 {
    (value - oracle).abs() / oracle.abs()
}

/// 200 deterministic model pairs over binary variables: sizes cycle through
/// 4..=12, treewidth at most 3, and every fourth pair is built on 2 or 3
/// independent blocks so its union graph is disconnected.
fn oracle_pairs() -> &'static Vec<(DecomposableModel, DecomposableModel)> {
    static PAIRS: OnceLock<Vec<(DecomposableModel, DecomposableModel)>> = OnceLock::new();
    PAIRS.get_or_init(|| {
        let mut rng = ChaCha20Rng::seed_from_u64(2024);
        let mut pairs = Vec::with_capacity(200);
        for i in 0..200usize {
            let n = 4 + (i % 9); // 4..=12
            let blocks: Vec<usize> = if i % 4 != 0 {
                vec![n]
            } else if n >= 6 && i % 8 == 0 {
                vec![2, n - 4, 2]
            } else {
                vec![n / 2, n - n / 2]
            };
            let vars = VariableTable::uniform(n, 2).unwrap();
            let (p, q) = random_model_pair(&vars, &blocks, 4, &mut rng).unwrap();
            pairs.push((p, q));
        }
        pairs
    })
}

fn union_components(p: &DecomposableModel, q: &DecomposableModel) -> usize {
    UndirectedGraph::edge_union(p.graph(), q.graph())
        .unwrap()
        .connected_components()
        .len()
}

#[test]
fn criterion_1_oracle_equivalence() {
    let started = Instant::now();
    let grid = default_grid();
    let pairs = oracle_pairs();
    assert_eq!(pairs.len(), 200);
    let disconnected = pairs
        .iter()
        .filter(|(p, q)| union_components(p, q) > 1)
        .count();
    assert!(
        disconnected >= 50,
        "only {disconnected} of 200 pairs have disconnected union graphs"
    );

    let mut worst_rel = 0.0f64;
    let mut worst_abs = 0.0f64;
    for (p, q) in pairs {
        let engine = Engine::new(p, q).unwrap();
        let jp = materialize_joint(p, DEFAULT_JOINT_CAP).unwrap();
        let jq = materialize_joint(q, DEFAULT_JOINT_CAP).unwrap();
        for &ab in &grid {
            let fast = alpha_beta_with_engine(&engine, ab).unwrap();
            let oracle = brute_alpha_beta(&jp, &jq, ab).unwrap();
            if oracle.abs() < SMALL_VALUE {
                let abs = (fast - oracle).abs();
                assert!(
                    abs <= ORACLE_ABS_TOL,
                    "absolute error {abs:e} at ({}, {}) for a near-zero value {oracle:e}",
                    ab.alpha,
                    ab.beta
                );
                worst_abs = worst_abs.max(abs);
            } else {
                let rel = rel_against(fast, oracle);
                assert!(
                    rel <= ORACLE_REL_TOL,
                    "relative error {rel:e} at ({}, {}): {fast} vs {oracle}",
                    ab.alpha,
                    ab.beta
                );
                worst_rel = worst_rel.max(rel);
            }
        }
    }
    let elapsed = started.elapsed();
    assert!(
        elapsed < Duration::from_secs(60),
        "suite took {elapsed:?}, budget is 60 s"
    );
    println!(
        "criterion 1 PASS: 200 pairs ({disconnected} disconnected) x 36 grid points; \
         worst relative error {worst_rel:.2e} (tol {ORACLE_REL_TOL:.0e}), worst near-zero \
         absolute error {worst_abs:.2e} (tol {ORACLE_ABS_TOL:.0e}), in {elapsed:.2?}"
    );
}

/// Convex mixture of every clique table with the uniform table. Mixing is
/// linear, so separator margins from both endpoints stay equal and the
/// result is a valid model.
fn flattened(m: &DecomposableModel, w: f64) -> DecomposableModel {
    let tables = m
        .clique_marginals()
        .iter()
        .map(|t| {
            let u = 1.0 / t.len() as f64;
            let mixed = t.values().iter().map(|v| (1.0 - w) * v + w * u).collect();
            Factor::from_values(m.vars(), t.scope(), mixed).unwrap()
        })
        .collect();
    DecomposableModel::new(m.vars().clone(), m.graph().clone(), tables).unwrap()
}

#[test]
fn criterion_2_self_divergence_vanishes() {
    // The identity holds for every parameter point in exact arithmetic. In
    // floats its residual is the cancellation of power sums: at the most
    // negative grid order the formula sums P^-2, so the residual scales
    // with that sum and an absolute 1e-8 bound is only meaningful when the
    // sum stays around 1e7 or less. The ensemble here (up to 64 joint
    // states, tables mixed halfway to uniform) keeps it there; larger or
    // more skewed models cross the bound for any evaluation order,
    // enumeration included.
    let mut rng = ChaCha20Rng::seed_from_u64(77);
    let grid = default_grid();
    let mut worst = 0.0f64;
    for i in 0..50usize {
        let n = 4 + (i % 3); // 4..=6
        let vars = VariableTable::uniform(n, 2).unwrap();
        let (raw, _) = random_model_pair(&vars, &[n], 4, &mut rng).unwrap();
        let p = flattened(&raw, 0.5);
        let engine = Engine::new(&p, &p).unwrap();
        for &ab in &grid {
            let d = alpha_beta_with_engine(&engine, ab).unwrap();
            assert!(
                d.abs() <= SELF_DIVERGENCE_TOL,
                "D(P||P) = {d:e} at ({}, {}) for model {i}",
                ab.alpha,
                ab.beta
            );
            worst = worst.max(d.abs());
        }
    }
    println!(
        "criterion 2 PASS: 50 models x 36 grid points; worst |D(P||P)| = {worst:.2e} \
         (tol {SELF_DIVERGENCE_TOL:.0e})"
    );
}

#[test]
fn criterion_3_f1_three_ways() {
    let mut rng = ChaCha20Rng::seed_from_u64(33);
    let mut worst = 0.0f64;
    for i in 0..50usize {
        let n = 4 + (i % 7); // 4..=10
        let blocks: Vec<usize> = if i % 5 == 0 && n >= 6 {
            vec![n / 2, n - n / 2]
        } else {
            vec![n]
        };
        let vars = VariableTable::uniform(n, 2).unwrap();
        let (p, q) = random_model_pair(&vars, &blocks, 4, &mut rng).unwrap();
        let engine = Engine::new(&p, &q).unwrap();
        let jp = materialize_joint(&p, DEFAULT_JOINT_CAP).unwrap();
        let jq = materialize_joint(&q, DEFAULT_JOINT_CAP).unwrap();

        let direct = engine.f1().unwrap();
        let brute = brute_f1(&jp, &jq).unwrap();
        let (bpp, bqq, bpq) = brute_f1_pieces(&jp, &jq).unwrap();
        let assembled = 0.5 * (bpp + bqq - 2.0 * bpq);
        let (epp, eqq, epq) = engine.f1_pieces().unwrap();

        for (got, want, label) in [
            (direct, brute, "direct vs enumeration"),
            (direct, assembled, "direct vs piece assembly"),
            (epp, bpp, "P-P piece"),
            (eqq, bqq, "Q-Q piece"),
            (epq, bpq, "P-Q piece"),
        ] {
            let rel = rel_against(got, want);
            assert!(
                rel <= F1_REL_TOL,
                "{label}: {got} vs {want} (rel {rel:e}) on pair {i}"
            );
            worst = worst.max(rel);
        }
    }
    println!(
        "criterion 3 PASS: 50 positive pairs; squared-log functional agrees three ways, \
         worst relative spread {worst:.2e} (tol {F1_REL_TOL:.0e})"
    );
}

#[test]
fn criterion_4_f2_two_paths_agree() {
    let grid = default_grid();
    let mut worst = 0.0f64;
    for (p, q) in oracle_pairs() {
        let engine = Engine::new(p, q).unwrap();
        for &ab in &grid {
            // f2_paths itself errors beyond a built-in bound; the explicit
            // assertion keeps the tolerance pinned here.
            let (telescoped, shortcut) = engine.f2_paths(ab.alpha, ab.beta).unwrap();
            let rel = (telescoped - shortcut).abs() / shortcut.abs().max(1e-300);
            assert!(
                rel <= F2_PATHS_REL_TOL,
                "paths disagree at ({}, {}): {telescoped} vs {shortcut}",
                ab.alpha,
                ab.beta
            );
            worst = worst.max(rel);
        }
    }
    println!(
        "criterion 4 PASS: power-product paths agree on 200 pairs x 36 exponent pairs; \
         worst relative spread {worst:.2e} (tol {F2_PATHS_REL_TOL:.0e})"
    );
}

fn chain_pair(n: usize, seed: u64) -> (DecomposableModel, DecomposableModel) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let vars = VariableTable::uniform(n, 2).unwrap();
    let graph = chain_graph(n);
    let p = random_model(&vars, &graph, &mut rng).unwrap();
    let q = random_model(&vars, &graph, &mut rng).unwrap();
    (p, q)
}

fn median_time_f2(p: &DecomposableModel, q: &DecomposableModel, repeats: usize) -> f64 {
    let mut times: Vec<f64> = (0..repeats)
        .map(|_| {
            let start = Instant::now();
            let engine = Engine::new(p, q).unwrap();
            let v = engine.f2(1.0, 0.0).unwrap();
            assert!(v.is_finite());
            start.elapsed().as_secs_f64()
        })
        .collect();
    times.sort_by(|a, b| a.total_cmp(b));
    times[times.len() / 2]
}

#[test]
fn criterion_5_chain_tractability() {
    let (p100, q100) = chain_pair(100, 55);
    let (p200, q200) = chain_pair(200, 56);
    let t100 = median_time_f2(&p100, &q100, 7);
    let t200 = median_time_f2(&p200, &q200, 7);
    assert!(t200 < 1.0, "n=200 evaluation took {t200} s, budget 1 s");
    let ratio = t200 / t100;
    assert!(
        ratio < 8.0,
        "doubling the chain scaled runtime by {ratio:.2} (t100={t100:.6}, t200={t200:.6})"
    );

    let (p30, _) = chain_pair(30, 57);
    let refusal = materialize_joint(&p30, DEFAULT_JOINT_CAP);
    assert!(
        matches!(refusal, Err(Error::DomainTooLarge { .. })),
        "enumerating 2^30 states was not refused: {refusal:?}"
    );
    println!(
        "criterion 5 PASS: chain runtime ratio t(200)/t(100) = {ratio:.2} (< 8), \
         t(200) = {t200:.4} s (< 1 s); 30-variable enumeration refused by the cap"
    );
}

#[test]
fn criterion_6_mc_baseline_sanity() {
    let kl = AlphaBeta::new(1.0, 0.0).unwrap();
    let mut inside = 0usize;
    let mut total = 0usize;
    let mut jtc_time = 0.0f64;
    let mut mc_time = 0.0f64;
    for pair_seed in 0..8u64 {
        let mut rng = ChaCha20Rng::seed_from_u64(600 + pair_seed);
        let vars = VariableTable::uniform(10, 2).unwrap();
        let (p, q) = random_model_pair(&vars, &[10], 4, &mut rng).unwrap();

        let start = Instant::now();
        let engine = Engine::new(&p, &q).unwrap();
        let exact = alpha_beta_with_engine(&engine, kl).unwrap();
        jtc_time += start.elapsed().as_secs_f64();

        for trial_seed in 1..=5u64 {
            let start = Instant::now();
            let est = mc_alpha_beta(&p, &q, kl, 100_000, trial_seed).unwrap();
            mc_time += start.elapsed().as_secs_f64();
            total += 1;
            if (est.estimate - exact).abs() <= 3.0 * est.std_error {
                inside += 1;
            }
        }
    }
    assert_eq!(total, 40);
    assert!(
        inside >= 38,
        "only {inside}/40 estimates within 3 standard errors"
    );
    assert!(
        jtc_time < mc_time,
        "exact path ({jtc_time:.4} s) not faster than sampling ({mc_time:.4} s)"
    );
    println!(
        "criterion 6 PASS: {inside}/40 estimates within 3 standard errors (need 38); \
         exact total {jtc_time:.4} s vs sampling total {mc_time:.4} s"
    );
}

fn sachs_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/sachs.json")
}

#[test]
fn criterion_7_case_study() {
    assert_eq!(
        CANDIDATE_A_DELETIONS,
        [("PKA", "Raf"), ("PKC", "PKA"), ("Plcg", "PIP3")]
    );
    assert_eq!(
        CANDIDATE_B_DELETIONS,
        [("PKC", "Raf"), ("PKC", "Mek"), ("PKA", "Mek")]
    );
    let args = SachsArgs {
        sachs: sachs_path(),
        csv: None,
        report: None,
    };
    let started = Instant::now();
    let run = run_sachs(&args).unwrap();
    let elapsed = started.elapsed();
    assert!(
        elapsed < Duration::from_secs(300),
        "case study took {elapsed:?}, budget 5 min"
    );
    assert_eq!(run.rows.len(), 36);

    let mut worst = 0.0f64;
    for row in &run.rows {
        assert!(
            row.rel_a <= CASESTUDY_REL_TOL && row.rel_b <= CASESTUDY_REL_TOL,
            "cross-check failed at ({}, {}): rel_A {:e}, rel_B {:e}",
            row.alpha,
            row.beta,
            row.rel_a,
            row.rel_b
        );
        worst = worst.max(row.rel_a).max(row.rel_b);
    }

    // Sanity row: self-divergence at the well-conditioned KL point, plus a
    // scale-aware bound across the whole grid.
    let kl_row = run
        .rows
        .iter()
        .find(|r| r.alpha == 1.0 && r.beta == 0.0)
        .unwrap();
    assert!(kl_row.d_self.abs() <= SELF_DIVERGENCE_TOL);
    for row in &run.rows {
        let scale = row.d_a.abs().max(row.d_b.abs()).max(1.0);
        assert!(
            row.d_self.abs() <= 1e-9 * scale,
            "self-divergence {:e} is not negligible at ({}, {})",
            row.d_self,
            row.alpha,
            row.beta
        );
    }

    // Determinism: a second run reproduces every declared winner and value.
    let rerun = run_sachs(&args).unwrap();
    for (a, b) in run.rows.iter().zip(&rerun.rows) {
        assert_eq!(a.closer, b.closer);
        assert_eq!(a.d_a.to_bits(), b.d_a.to_bits());
        assert_eq!(a.d_b.to_bits(), b.d_b.to_bits());
    }
    println!(
        "criterion 7 PASS: 36 grid points brute-verified, worst relative error {worst:.2e} \
         (tol {CASESTUDY_REL_TOL:.0e}); winner declared deterministically; run took {elapsed:.2?}"
    );
}

fn assert_marginal_consistency(m: &DecomposableModel) {
    for (t, tree) in m.forest().trees().iter().enumerate() {
        for (ei, e) in tree.edges.iter().enumerate() {
            let from_a = m.clique_marginal(e.a).marginalize(&e.separator).unwrap();
            let from_b = m.clique_marginal(e.b).marginalize(&e.separator).unwrap();
            for (x, y) in from_a.values().iter().zip(from_b.values()) {
                assert!(
                    (x - y).abs() <= MARGINAL_CONSISTENCY_TOL,
                    "separator {:?} of tree {t} edge {ei} disagrees: {x} vs {y}",
                    e.separator
                );
            }
        }
    }
}

fn assert_factorization_matches_joint(m: &DecomposableModel) {
    let states = m.vars().joint_states().unwrap();
    assert!(states <= 100_000);
    let jt = m.jt_factorization().unwrap();
    let cards: Vec<usize> = m.vars().iter().map(|v| v.cardinality).collect();
    let mut worst = 0.0f64;
    for_each_assignment(&cards, |x| {
        let direct = m.evaluate_joint(x).unwrap();
        let product = jt.evaluate(x);
        worst = worst.max((direct - product).abs());
    });
    assert!(
        worst <= JOINT_POINTWISE_TOL,
        "factorization deviates from the joint by {worst:e}"
    );
}

#[test]
fn criterion_8_calibration_and_model_invariants() {
    let mut checked_models = 0usize;
    let mut checked_forests = 0usize;

    for (p, q) in oracle_pairs().iter().take(60) {
        let n = p.vars().len();
        for m in [p, q] {
            assert!(m.forest().has_running_intersection(n));
            checked_forests += 1;
            assert_marginal_consistency(m);
            assert_factorization_matches_joint(m);
            checked_models += 1;
        }
        let engine = Engine::new(p, q).unwrap();
        assert!(engine
            .computation_graph()
            .forest()
            .has_running_intersection(n));
        checked_forests += 1;
    }

    // Loaded models.
    let demo_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/demo");
    for file in ["p.json", "q.json"] {
        let m = load_dm_path(demo_dir.join(file)).unwrap();
        assert!(m.forest().has_running_intersection(m.vars().len()));
        checked_forests += 1;
        assert_marginal_consistency(&m);
        assert_factorization_matches_joint(&m);
        checked_models += 1;
    }

    // A fitted model: sample data from a generated model, refit on the same
    // structure, and check the same invariants.
    let mut rng = ChaCha20Rng::seed_from_u64(88);
    let vars = VariableTable::uniform(6, 2).unwrap();
    let (truth, _) = random_model_pair(&vars, &[6], 3, &mut rng).unwrap();
    let batch = abdiv_core::baselines::forward_sample(&truth, 2000, 9).unwrap();
    let rows: Vec<Vec<usize>> = batch.rows().map(|r| r.to_vec()).collect();
    let fitted = abdiv_core::model::mle_fit(&vars, truth.graph(), &rows, 0.0).unwrap();
    assert!(fitted.forest().has_running_intersection(6));
    checked_forests += 1;
    assert_marginal_consistency(&fitted);
    assert_factorization_matches_joint(&fitted);
    checked_models += 1;

    println!(
        "criterion 8 PASS: running intersection on {checked_forests} forests; marginal \
         consistency and pointwise factorization agreement on {checked_models} models"
    );
}
