//! Result rows and their CSV/JSON emission.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::config::Emit;
use crate::{Error, Result};

/// One metric at one sweep point. Column order is part of the output format.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub experiment: String,
    /// Index of the sweep point.
    pub point: usize,
    /// Coordinates of the sweep point, `axis=value;...`.
    pub sweep: String,
    pub scenario: String,
    pub metric: String,
    pub value: Option<f64>,
    /// Empty for deterministic quantities.
    pub stderr: Option<f64>,
    /// Trials that contributed; empty for deterministic quantities.
    pub trials: Option<usize>,
    pub skipped: Option<usize>,
    pub seed: u64,
    /// `ok`, or `failed: <reason>`.
    pub status: String,
    /// Regularization used for RZF quantities.
    pub alpha_used: Option<f64>,
    pub m: usize,
    pub n_u: usize,
    pub n_d: usize,
    pub k_u: usize,
    pub k_d: usize,
    pub snr_dl_db: f64,
    pub snr_ul_db: f64,
    pub tau2_ul: String,
    pub tau2_dl: String,
    pub tau2_i: String,
    pub correlation: String,
    /// Full configuration of the point as JSON.
    pub config: String,
}

impl ResultRow {
    pub fn failed(&self) -> bool {
        self.status != "ok"
    }
}

/// Deterministic emission order.
pub fn sort_rows(rows: &mut [ResultRow]) {
    rows.sort_by(|a, b| (a.point, &a.scenario, &a.metric).cmp(&(b.point, &b.scenario, &b.metric)));
}

pub fn render(rows: &[ResultRow], emit: Emit) -> Result<Vec<u8>> {
    match emit {
        Emit::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            if rows.is_empty() {
                return Ok(Vec::new());
            }
            for r in rows {
                w.serialize(r).map_err(|e| Error::Parse(e.to_string()))?;
            }
            w.into_inner().map_err(|e| Error::Parse(e.to_string()))
        }
        Emit::Json => {
            let mut v = serde_json::to_vec_pretty(rows).map_err(|e| Error::Parse(e.to_string()))?;
            v.push(b'\n');
            Ok(v)
        }
    }
}

/// Writes `bytes` to a temporary sibling of `path`, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::config("experiment.out", "not a file path"))?;
    let tmp = dir.join(format!(
        ".{}.{}.tmp",
        name.to_string_lossy(),
        std::process::id()
    ));
    let result = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    Ok(result?)
}
