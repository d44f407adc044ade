//! Run reports: what ran, over which inputs, with which results.
//!
//! The results table is a pure function of inputs, parameters, and seed, so
//! re-running reproduces it bit-exactly. Wall times live in a separate
//! field and carry no reproducibility promise.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use abdiv_core::Result;

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: String,
    pub inputs: Vec<InputDigest>,
    pub parameters: serde_json::Value,
    pub results: serde_json::Value,
    pub wall_seconds: BTreeMap<String, f64>,
    pub engine_version: String,
}

impl RunReport {
    pub fn new(
        command: &str,
        inputs: Vec<InputDigest>,
        parameters: serde_json::Value,
        results: serde_json::Value,
        wall_seconds: BTreeMap<String, f64>,
    ) -> Self {
        Self {
            command: command.to_string(),
            inputs,
            parameters,
            results,
            wall_seconds,
            engine_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn write_path(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), self)?;
        Ok(())
    }
}

pub fn digest_path(path: impl AsRef<Path>) -> Result<InputDigest> {
    let mut file = std::fs::File::open(&path)?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 8192];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    let digest = hasher.finalize();
    let mut sha256 = String::with_capacity(64);
    for byte in digest {
        let _ = write!(sha256, "{byte:02x}");
    }
    Ok(InputDigest {
        path: path.as_ref().display().to_string(),
        sha256,
    })
}

/// Accumulates named wall-clock phases.
#[derive(Debug, Default)]
pub struct Timings {
    phases: BTreeMap<String, f64>,
}

impl Timings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn time<T>(&mut self, phase: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.add(phase, start.elapsed().as_secs_f64());
        out
    }

    pub fn add(&mut self, phase: &str, seconds: f64) {
        *self.phases.entry(phase.to_string()).or_insert(0.0) += seconds;
    }

    pub fn get(&self, phase: &str) -> Option<f64> {
        self.phases.get(phase).copied()
    }

    /// Finishes the collection. Adds a `total` entry summing the phases
    /// unless the caller recorded an overall measurement itself.
    pub fn into_map(mut self) -> BTreeMap<String, f64> {
        if !self.phases.contains_key("total") {
            let total: f64 = self.phases.values().sum();
            self.phases.insert("total".to_string(), total);
        }
        self.phases
    }
}

/// Plain fixed-width table for stdout.
pub fn render_table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let line = |cells: &[&str]| -> String {
        let mut s = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ");
        s.truncate(s.trim_end().len());
        s
    };
    let mut out = String::new();
    out.push_str(&line(headers));
    out.push('\n');
    let dashes: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    out.push_str(&dashes.join("  "));
    out.push('\n');
    for row in rows {
        let cells: Vec<&str> = row.iter().map(|s| s.as_str()).collect();
        out.push_str(&line(&cells));
        out.push('\n');
    }
    out
}

/// Writes rows as CSV with the given header.
pub fn write_csv(path: impl AsRef<Path>, headers: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(abdiv_core::Error::from)?;
    w.write_record(headers).map_err(abdiv_core::Error::from)?;
    for row in rows {
        w.write_record(row).map_err(abdiv_core::Error::from)?;
    }
    w.flush()?;
    Ok(())
}
