//! `fit`: maximum-likelihood clique tables for a given chordal structure,
//! written out as a model file.

use std::path::PathBuf;

use abdiv_core::io::{load_csv_path, load_structure_path, save_dm_path};
use abdiv_core::model::{mle_fit, DecomposableModel};
use abdiv_core::{Error, Result};

use crate::divergence_cmd::results_json;
use crate::report::{digest_path, render_table, RunReport, Timings};

#[derive(Debug, Clone, clap::Args)]
pub struct FitArgs {
    /// Undirected structure file (JSON); must be chordal.
    #[arg(long)]
    pub structure: PathBuf,
    /// Complete data as CSV of state indices, one column per variable.
    #[arg(long)]
    pub data: PathBuf,
    /// Pseudo-count added to every clique cell before normalizing.
    #[arg(long, default_value_t = 0.0)]
    pub smoothing: f64,
    /// Where to write the fitted model.
    #[arg(long)]
    pub out: PathBuf,
    /// Write the full run report as JSON.
    #[arg(long, value_name = "PATH")]
    pub report: Option<PathBuf>,
}

#[derive(Debug)]
pub struct FitRun {
    pub model: DecomposableModel,
    pub rows: usize,
    /// Total log-likelihood of the training data under the fit.
    pub log_likelihood: f64,
    pub report: RunReport,
    pub rendered: String,
}

pub fn run_fit(args: &FitArgs) -> Result<FitRun> {
    let mut timings = Timings::new();
    let (vars, graph) = timings.time("load-structure", || load_structure_path(&args.structure))?;
    let data = timings.time("load-data", || load_csv_path(&args.data, &vars))?;
    let model = timings.time("fit", || mle_fit(&vars, &graph, &data, args.smoothing))?;

    let log_likelihood = timings.time("log-likelihood", || -> Result<f64> {
        let mut total = 0.0;
        for row in &data {
            let p = model.evaluate_joint(row)?;
            if p <= 0.0 {
                return Err(Error::LogOfZero(
                    "a training row has zero probability under the fit".into(),
                ));
            }
            total += p.ln();
        }
        Ok(total)
    })?;

    timings.time("write-model", || save_dm_path(&model, &args.out))?;

    let headers = vec!["rows", "variables", "cliques", "log_likelihood", "per_row"];
    let table_rows = vec![vec![
        data.len().to_string(),
        vars.len().to_string(),
        model.n_cliques().to_string(),
        log_likelihood.to_string(),
        (log_likelihood / data.len() as f64).to_string(),
    ]];
    let mut rendered = render_table(&headers, &table_rows);
    rendered.push_str(&format!("\nwrote fitted model to {}\n", args.out.display()));

    let report = RunReport::new(
        "fit",
        vec![digest_path(&args.structure)?, digest_path(&args.data)?],
        serde_json::json!({
            "smoothing": args.smoothing,
            "out": args.out.display().to_string(),
        }),
        results_json(&headers, &table_rows),
        timings.into_map(),
    );
    if let Some(path) = &args.report {
        report.write_path(path)?;
    }
    Ok(FitRun {
        model,
        rows: data.len(),
        log_likelihood,
        report,
        rendered,
    })
}
