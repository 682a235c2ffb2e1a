//! CSV and JSON serialization of sweep results.
//!
//! The CSV is long format, one row per (sweep point, series):
//!
//! ```text
//! tx_dbm,rho_linear,series,mean,ci95_half,provenance,n_trials
//! ```
//!
//! UTF-8, LF line endings, `.` decimal separator, numbers in shortest
//! round-trip form. Analytical rows carry `ci95_half = 0` and `n_trials = 0`.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::config::SystemConfig;
use crate::engine::{OutageCurve, Provenance};
use crate::error::{invalid_input, Result};

pub const CSV_HEADER: &str = "tx_dbm,rho_linear,series,mean,ci95_half,provenance,n_trials";

pub fn to_csv(curve: &OutageCurve) -> String {
    let mut out = String::with_capacity(64 * curve.tx_dbm.len() * curve.series.len() + 64);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for (i, (tx, rho)) in curve.tx_dbm.iter().zip(&curve.rho).enumerate() {
        for s in &curve.series {
            let e = s.values[i];
            let n = match s.provenance {
                Provenance::Simulated => curve.metadata.trials,
                Provenance::Analytical => 0,
            };
            let _ = writeln!(
                out,
                "{tx},{rho},{},{},{},{},{n}",
                s.name, e.mean, e.ci95_half, s.provenance
            );
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub tx_dbm: f64,
    pub rho_linear: f64,
    pub series: String,
    pub mean: f64,
    pub ci95_half: f64,
    pub provenance: Provenance,
    pub n_trials: u64,
}

/// Parses the CSV written by [`to_csv`]. Errors name the offending line.
pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        Some(h) => return Err(invalid_input(format!("line 1: unexpected header `{h}`"))),
        None => return Err(invalid_input("empty CSV")),
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, line)| {
            let n = i + 2;
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 7 {
                return Err(invalid_input(format!("line {n}: expected 7 fields, got {}", f.len())));
            }
            let num = |s: &str| -> Result<f64> {
                s.parse().map_err(|_| invalid_input(format!("line {n}: bad number `{s}`")))
            };
            let provenance = match f[5] {
                "simulated" => Provenance::Simulated,
                "analytical" => Provenance::Analytical,
                other => return Err(invalid_input(format!("line {n}: bad provenance `{other}`"))),
            };
            Ok(CsvRow {
                tx_dbm: num(f[0])?,
                rho_linear: num(f[1])?,
                series: f[2].to_string(),
                mean: num(f[3])?,
                ci95_half: num(f[4])?,
                provenance,
                n_trials: f[6]
                    .parse()
                    .map_err(|_| invalid_input(format!("line {n}: bad trial count `{}`", f[6])))?,
            })
        })
        .collect()
}

/// JSON sidecar written next to every CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub experiment: String,
    pub preset: String,
    pub csv: String,
    pub config: SystemConfig,
    /// The resolved config in `key = value` form; feeding it back through
    /// `--config` reproduces the CSV.
    pub config_file: String,
    pub config_hash: String,
    pub seed: u64,
    pub trials: u64,
    pub workers: usize,
    pub git_describe: String,
    pub duration_seconds: f64,
    pub warnings: Vec<String>,
}

impl RunRecord {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("run record serializes") + "\n"
    }
}
