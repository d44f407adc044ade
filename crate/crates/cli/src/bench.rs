//! `bench-scaling`: runtime of the exact engine against brute force and
//! Monte Carlo on growing models. Computed divergence values land in the
//! results table (deterministic for a fixed seed); wall times are reported
//! separately and feed the CSV and the log-log plot.

use std::path::PathBuf;
use std::time::Instant;

use abdiv_core::baselines::{
    brute_alpha_beta, materialize_joint, mc_alpha_beta, DEFAULT_JOINT_CAP,
};
use abdiv_core::divergence::{alpha_beta_with_engine, AlphaBeta};
use abdiv_core::functional::Engine;
use abdiv_core::generate::{chain_graph, random_chordal_graph, random_model};
use abdiv_core::model::DecomposableModel;
use abdiv_core::vars::{Variable, VariableTable};
use abdiv_core::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::report::{render_table, write_csv, RunReport, Timings};
use crate::svg::{write_plot, Series};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum BenchFamily {
    /// Path graph over binary variables; treewidth 1 at every size.
    Chain,
    /// Random connected chordal graph with a bounded clique size.
    Random,
}

impl BenchFamily {
    fn name(self) -> &'static str {
        match self {
            BenchFamily::Chain => "chain",
            BenchFamily::Random => "random",
        }
    }
}

#[derive(Debug, Clone, clap::Args)]
pub struct BenchArgs {
    /// Model family to grow.
    #[arg(long, value_enum, default_value_t = BenchFamily::Chain)]
    pub family: BenchFamily,
    /// Comma-separated variable counts.
    #[arg(long = "n", value_delimiter = ',', default_value = "25,50,100,200")]
    pub sizes: Vec<usize>,
    /// Clique-size bound for the random family (max clique = treewidth + 1).
    #[arg(long, default_value_t = 2)]
    pub treewidth: usize,
    /// Timing repeats per size; the median is reported.
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    /// Seed for model generation and the mc baseline.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Sample count for the mc baseline.
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    /// Write the timing table as CSV.
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,
    /// Write a log-log runtime plot.
    #[arg(long, value_name = "PATH")]
    pub svg: Option<PathBuf>,
    /// Write the full run report as JSON.
    #[arg(long, value_name = "PATH")]
    pub report: Option<PathBuf>,
}

/// Measurements for one model size.
#[derive(Debug, Clone)]
pub struct BenchRow {
    pub n: usize,
    pub jtc_value: f64,
    pub jtc_seconds: f64,
    /// Populated only when the joint domain fits under the enumeration cap.
    pub brute_value: Option<f64>,
    pub brute_seconds: Option<f64>,
    pub mc_estimate: f64,
    pub mc_std_error: f64,
    pub mc_seconds: f64,
}

#[derive(Debug)]
pub struct BenchRun {
    pub rows: Vec<BenchRow>,
    pub report: RunReport,
    pub rendered: String,
}

/// Builds the seeded model pair for one size. The stream is keyed by the
/// size, so a given (seed, n) always yields the same pair no matter which
/// other sizes are requested.
pub fn bench_pair(
    family: BenchFamily,
    n: usize,
    treewidth: usize,
    seed: u64,
) -> Result<(DecomposableModel, DecomposableModel)> {
    if n == 0 {
        return Err(Error::Validation("model size must be positive".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(n as u64);
    let vars = VariableTable::new(
        (0..n)
            .map(|i| Variable {
                name: format!("x{i}"),
                cardinality: 2,
            })
            .collect(),
    )?;
    let graph = match family {
        BenchFamily::Chain => chain_graph(n),
        BenchFamily::Random => random_chordal_graph(n, treewidth + 1, &mut rng),
    };
    let p = random_model(&vars, &graph, &mut rng)?;
    let q = random_model(&vars, &graph, &mut rng)?;
    Ok((p, q))
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.total_cmp(b));
    xs[xs.len() / 2]
}

/// Times `f` by taking the median of `repeats` runs; the value from the
/// first run is returned alongside.
fn time_median<T>(repeats: usize, mut f: impl FnMut() -> Result<T>) -> Result<(T, f64)> {
    let mut times = Vec::with_capacity(repeats);
    let start = Instant::now();
    let value = f()?;
    times.push(start.elapsed().as_secs_f64());
    for _ in 1..repeats {
        let start = Instant::now();
        f()?;
        times.push(start.elapsed().as_secs_f64());
    }
    Ok((value, median(times)))
}

pub fn run_bench(args: &BenchArgs) -> Result<BenchRun> {
    if args.sizes.is_empty() {
        return Err(Error::Validation("need at least one size".into()));
    }
    if args.repeats == 0 || args.treewidth == 0 {
        return Err(Error::Validation(
            "repeats and treewidth must be positive".into(),
        ));
    }
    let kl = AlphaBeta::new(1.0, 0.0)?;
    let mut timings = Timings::new();
    let mut rows = Vec::with_capacity(args.sizes.len());
    let overall = Instant::now();
    for &n in &args.sizes {
        let (p, q) = bench_pair(args.family, n, args.treewidth, args.seed)?;

        let (jtc_value, jtc_seconds) = time_median(args.repeats, || {
            let engine = Engine::new(&p, &q)?;
            alpha_beta_with_engine(&engine, kl)
        })?;
        timings.add(&format!("jtc/n={n}"), jtc_seconds);

        let states = p.vars().joint_states().unwrap_or(u128::MAX);
        let (brute_value, brute_seconds) = if states <= DEFAULT_JOINT_CAP as u128 {
            let (v, s) = time_median(args.repeats, || {
                let jp = materialize_joint(&p, DEFAULT_JOINT_CAP)?;
                let jq = materialize_joint(&q, DEFAULT_JOINT_CAP)?;
                brute_alpha_beta(&jp, &jq, kl)
            })?;
            timings.add(&format!("brute/n={n}"), s);
            (Some(v), Some(s))
        } else {
            (None, None)
        };

        let (mc, mc_seconds) = time_median(args.repeats, || {
            mc_alpha_beta(&p, &q, kl, args.samples, args.seed)
        })?;
        timings.add(&format!("mc/n={n}"), mc_seconds);

        rows.push(BenchRow {
            n,
            jtc_value,
            jtc_seconds,
            brute_value,
            brute_seconds,
            mc_estimate: mc.estimate,
            mc_std_error: mc.std_error,
            mc_seconds,
        });
    }
    timings.add("total", overall.elapsed().as_secs_f64());

    // Deterministic value columns only; timings stay out of the results
    // table so re-runs reproduce it bit-exactly.
    let value_headers = vec![
        "n",
        "jtc_value",
        "brute_value",
        "mc_estimate",
        "mc_std_error",
    ];
    let value_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                r.jtc_value.to_string(),
                r.brute_value.map_or_else(String::new, |v| v.to_string()),
                r.mc_estimate.to_string(),
                r.mc_std_error.to_string(),
            ]
        })
        .collect();

    let timing_headers = vec!["n", "jtc_seconds", "brute_seconds", "mc_seconds"];
    let timing_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                format!("{:.6}", r.jtc_seconds),
                r.brute_seconds
                    .map_or_else(String::new, |s| format!("{s:.6}")),
                format!("{:.6}", r.mc_seconds),
            ]
        })
        .collect();

    let mut rendered = String::new();
    rendered.push_str("divergence values (deterministic for this seed)\n");
    rendered.push_str(&render_table(&value_headers, &value_rows));
    rendered.push_str("\nmedian wall time per size (seconds)\n");
    rendered.push_str(&render_table(&timing_headers, &timing_rows));

    let report = RunReport::new(
        "bench-scaling",
        Vec::new(),
        serde_json::json!({
            "family": args.family.name(),
            "sizes": args.sizes,
            "treewidth": args.treewidth,
            "repeats": args.repeats,
            "seed": args.seed,
            "samples": args.samples,
        }),
        crate::divergence_cmd::results_json(&value_headers, &value_rows),
        timings.into_map(),
    );

    if let Some(path) = &args.csv {
        write_csv(path, &timing_headers, &timing_rows)?;
    }
    if let Some(path) = &args.svg {
        let mut series = vec![Series {
            name: "jtc".into(),
            points: rows.iter().map(|r| (r.n as f64, r.jtc_seconds)).collect(),
        }];
        let brute: Vec<(f64, f64)> = rows
            .iter()
            .filter_map(|r| r.brute_seconds.map(|s| (r.n as f64, s)))
            .collect();
        if !brute.is_empty() {
            series.push(Series {
                name: "brute".into(),
                points: brute,
            });
        }
        series.push(Series {
            name: "mc".into(),
            points: rows.iter().map(|r| (r.n as f64, r.mc_seconds)).collect(),
        });
        write_plot(path, "runtime scaling", "variables", "seconds", &series)?;
    }
    if let Some(path) = &args.report {
        report.write_path(path)?;
    }
    Ok(BenchRun {
        rows,
        report,
        rendered,
    })
}
