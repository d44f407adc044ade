//! `divergence`: evaluate D(P || Q) at one parameter point or on the preset
//! grid, by the exact engine, brute-force enumeration, or Monte Carlo.

use std::path::PathBuf;

use abdiv_core::baselines::{
    brute_alpha_beta, materialize_joint, mc_alpha_beta, JointTable, DEFAULT_JOINT_CAP,
};
use abdiv_core::divergence::{alpha_beta_with_engine, default_grid, AlphaBeta};
use abdiv_core::factor::DEFAULT_CELL_CAP;
use abdiv_core::functional::Engine;
use abdiv_core::io::load_dm_path;
use abdiv_core::model::DecomposableModel;
use abdiv_core::{Error, Result};

use crate::report::{digest_path, render_table, write_csv, RunReport, Timings};

/// Relative errors are taken against max(|oracle|, this floor) so that
/// near-zero true values do not blow the ratio up.
pub const REL_ERROR_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Method {
    /// Junction-tree engine on the joint computation graph.
    Jtc,
    /// Full enumeration of the joint domain.
    Brute,
    /// Importance-sampled Monte Carlo estimate.
    Mc,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Jtc => "jtc",
            Method::Brute => "brute",
            Method::Mc => "mc",
        }
    }
}

#[derive(Debug, Clone, clap::Args)]
pub struct DivergenceArgs {
    /// First model file (decomposable model JSON).
    pub p: PathBuf,
    /// Second model file (decomposable model JSON).
    pub q: PathBuf,
    /// Divergence parameter alpha (requires --beta).
    #[arg(
        long,
        allow_negative_numbers = true,
        requires = "beta",
        conflicts_with = "grid"
    )]
    pub alpha: Option<f64>,
    /// Divergence parameter beta (requires --alpha).
    #[arg(
        long,
        allow_negative_numbers = true,
        requires = "alpha",
        conflicts_with = "grid"
    )]
    pub beta: Option<f64>,
    /// Evaluate the preset 6x6 parameter grid instead of a single point.
    #[arg(long)]
    pub grid: bool,
    /// How to compute the divergence.
    #[arg(long, value_enum, default_value_t = Method::Jtc)]
    pub method: Method,
    /// Sample count for the mc method.
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    /// Random seed for the mc method.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Also enumerate the joint domain and report the relative error
    /// against it. Prints an explicit note instead when the domain is too
    /// large to enumerate.
    #[arg(long)]
    pub cross_check: bool,
    /// Largest per-clique table the engine may allocate.
    #[arg(long, default_value_t = DEFAULT_CELL_CAP)]
    pub cell_cap: u64,
    /// Write the results table as CSV.
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,
    /// Write the full run report as JSON.
    #[arg(long, value_name = "PATH")]
    pub report: Option<PathBuf>,
}

impl DivergenceArgs {
    /// Single point or preset grid; neither flag set defaults to (1, 0).
    fn points(&self) -> Result<Vec<AlphaBeta>> {
        if self.grid {
            Ok(default_grid())
        } else {
            let alpha = self.alpha.unwrap_or(1.0);
            let beta = self.beta.unwrap_or(0.0);
            Ok(vec![AlphaBeta::new(alpha, beta)?])
        }
    }
}

/// One evaluated parameter point.
#[derive(Debug, Clone)]
pub struct DivergencePoint {
    pub alpha: f64,
    pub beta: f64,
    pub value: f64,
    /// Standard error, mc method only.
    pub std_error: Option<f64>,
    /// Brute-force value when --cross-check ran and the domain permitted.
    pub oracle: Option<f64>,
    pub rel_error: Option<f64>,
    /// Explains a missing oracle column.
    pub oracle_note: Option<String>,
}

#[derive(Debug)]
pub struct DivergenceRun {
    pub points: Vec<DivergencePoint>,
    pub report: RunReport,
    /// Human-readable output, ready to print.
    pub rendered: String,
}

pub fn relative_error(value: f64, oracle: f64) -> f64 {
    (value - oracle).abs() / oracle.abs().max(REL_ERROR_FLOOR)
}

enum Evaluator<'a> {
    Jtc(Engine<'a>),
    Brute {
        jp: JointTable,
        jq: JointTable,
    },
    Mc {
        p: &'a DecomposableModel,
        q: &'a DecomposableModel,
        samples: usize,
        seed: u64,
    },
}

impl Evaluator<'_> {
    fn evaluate(&self, ab: AlphaBeta) -> Result<(f64, Option<f64>)> {
        match self {
            Evaluator::Jtc(engine) => Ok((alpha_beta_with_engine(engine, ab)?, None)),
            Evaluator::Brute { jp, jq } => Ok((brute_alpha_beta(jp, jq, ab)?, None)),
            Evaluator::Mc {
                p,
                q,
                samples,
                seed,
            } => {
                let est = mc_alpha_beta(p, q, ab, *samples, *seed)?;
                Ok((est.estimate, Some(est.std_error)))
            }
        }
    }
}

pub fn run_divergence(args: &DivergenceArgs) -> Result<DivergenceRun> {
    let mut timings = Timings::new();
    let (p, q) = timings.time("load", || -> Result<_> {
        Ok((load_dm_path(&args.p)?, load_dm_path(&args.q)?))
    })?;
    let points_in = args.points()?;

    let evaluator = timings.time("setup", || -> Result<_> {
        Ok(match args.method {
            Method::Jtc => Evaluator::Jtc(Engine::with_cell_cap(&p, &q, args.cell_cap)?),
            Method::Brute => Evaluator::Brute {
                jp: materialize_joint(&p, DEFAULT_JOINT_CAP)?,
                jq: materialize_joint(&q, DEFAULT_JOINT_CAP)?,
            },
            Method::Mc => Evaluator::Mc {
                p: &p,
                q: &q,
                samples: args.samples,
                seed: args.seed,
            },
        })
    })?;

    let mut points = Vec::with_capacity(points_in.len());
    timings.time("compute", || -> Result<()> {
        for &ab in &points_in {
            let (value, std_error) = evaluator.evaluate(ab)?;
            points.push(DivergencePoint {
                alpha: ab.alpha,
                beta: ab.beta,
                value,
                std_error,
                oracle: None,
                rel_error: None,
                oracle_note: None,
            });
        }
        Ok(())
    })?;

    if args.cross_check {
        timings.time("cross-check", || -> Result<()> {
            cross_check(&p, &q, &mut points)
        })?;
    }

    let (headers, rows) = tabulate(&points, args.method, args.cross_check);
    let rendered = render_table(&headers, &rows);

    let report = RunReport::new(
        "divergence",
        vec![digest_path(&args.p)?, digest_path(&args.q)?],
        serde_json::json!({
            "method": args.method.name(),
            "grid": args.grid,
            "alpha": args.alpha,
            "beta": args.beta,
            "samples": if args.method == Method::Mc { Some(args.samples) } else { None },
            "seed": if args.method == Method::Mc { Some(args.seed) } else { None },
            "cross_check": args.cross_check,
            "cell_cap": args.cell_cap,
        }),
        results_json(&headers, &rows),
        timings.into_map(),
    );
    if let Some(path) = &args.csv {
        write_csv(path, &headers, &rows)?;
    }
    if let Some(path) = &args.report {
        report.write_path(path)?;
    }
    Ok(DivergenceRun {
        points,
        report,
        rendered,
    })
}

/// Fills the oracle columns, or the note when enumeration is impossible.
/// Never silently skips.
fn cross_check(
    p: &DecomposableModel,
    q: &DecomposableModel,
    points: &mut [DivergencePoint],
) -> Result<()> {
    let joints = match (
        materialize_joint(p, DEFAULT_JOINT_CAP),
        materialize_joint(q, DEFAULT_JOINT_CAP),
    ) {
        (Ok(jp), Ok(jq)) => Some((jp, jq)),
        (Err(Error::DomainTooLarge { states, cap }), _)
        | (_, Err(Error::DomainTooLarge { states, cap })) => {
            for pt in points.iter_mut() {
                pt.oracle_note = Some(format!(
                    "domain too large to enumerate ({states} states, cap {cap})"
                ));
            }
            None
        }
        (Err(e), _) | (_, Err(e)) => return Err(e),
    };
    if let Some((jp, jq)) = joints {
        for pt in points.iter_mut() {
            let oracle = brute_alpha_beta(&jp, &jq, AlphaBeta::new(pt.alpha, pt.beta)?)?;
            pt.rel_error = Some(relative_error(pt.value, oracle));
            pt.oracle = Some(oracle);
        }
    }
    Ok(())
}

fn tabulate(
    points: &[DivergencePoint],
    method: Method,
    cross_check: bool,
) -> (Vec<&'static str>, Vec<Vec<String>>) {
    let mut headers = vec!["alpha", "beta", "divergence"];
    if method == Method::Mc {
        headers.push("std_error");
    }
    if cross_check {
        headers.push("brute_force");
        headers.push("rel_error");
    }
    let rows = points
        .iter()
        .map(|pt| {
            let mut row = vec![
                pt.alpha.to_string(),
                pt.beta.to_string(),
                pt.value.to_string(),
            ];
            if method == Method::Mc {
                row.push(pt.std_error.map_or_else(String::new, |e| e.to_string()));
            }
            if cross_check {
                match (&pt.oracle, &pt.oracle_note) {
                    (Some(o), _) => {
                        row.push(o.to_string());
                        row.push(pt.rel_error.map_or_else(String::new, |e| e.to_string()));
                    }
                    (None, Some(note)) => {
                        row.push(note.clone());
                        row.push(String::new());
                    }
                    (None, None) => {
                        row.push(String::new());
                        row.push(String::new());
                    }
                }
            }
            row
        })
        .collect();
    (headers, rows)
}

/// Results tables are stored in the report as headers plus string rows;
/// floats go through the shortest round-trip formatting, so identical runs
/// serialize identically.
pub fn results_json(headers: &[&str], rows: &[Vec<String>]) -> serde_json::Value {
    serde_json::json!({ "headers": headers, "rows": rows })
}
