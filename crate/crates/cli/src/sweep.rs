//! Cartesian sweeps over (α, V, s, σ) with one run directory per cell.

use crate::config::RunConfig;
use crate::format::{number, sha256_hex};
use crate::manifest::FileEntry;
use crate::runner::run;
use crate::{LabError, EXIT_PASS};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const SUMMARY_FILE: &str = "summary.csv";

/// Axes left empty are held at the base configuration's value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    #[serde(default)]
    pub alpha: Vec<f64>,
    /// V before the rescale.
    #[serde(default)]
    pub v: Vec<f64>,
    /// s of a single (0, s) pair, before the rescale.
    #[serde(default)]
    pub s: Vec<f64>,
    #[serde(default)]
    pub sigma: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepCell {
    pub alpha: Option<f64>,
    pub v: Option<f64>,
    pub s: Option<f64>,
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub index: usize,
    pub cell: SweepCell,
    pub exit_code: i32,
    pub status: String,
    pub pass: usize,
    pub fail: usize,
    pub not_rendered: usize,
    pub artifacts_sha256: String,
    pub error: String,
}

impl SweepGrid {
    pub fn from_toml(text: &str) -> Result<Self, LabError> {
        toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))
    }

    pub fn cells(&self) -> Result<Vec<SweepCell>, LabError> {
        if self.alpha.is_empty() && self.v.is_empty() && self.s.is_empty() && self.sigma.is_empty() {
            return Err(LabError::Config("sweep grid is empty".to_string()));
        }
        let axis = |v: &[f64]| -> Vec<Option<f64>> {
            if v.is_empty() {
                vec![None]
            } else {
                v.iter().copied().map(Some).collect()
            }
        };
        let mut out = Vec::new();
        for alpha in axis(&self.alpha) {
            for v in axis(&self.v) {
                for s in axis(&self.s) {
                    for sigma in axis(&self.sigma) {
                        out.push(SweepCell { alpha, v, s, sigma });
                    }
                }
            }
        }
        Ok(out)
    }
}

impl SweepCell {
    pub fn apply(&self, base: &RunConfig, index: usize) -> RunConfig {
        let mut c = base.clone();
        c.name = format!("{}-cell-{index:04}", base.name);
        c.output.dir = None;
        if let Some(a) = self.alpha {
            c.weight.alpha = a;
        }
        if let Some(v) = self.v {
            c.weight.v = v;
        }
        if let Some(s) = self.s {
            c.weight.pairs = Some(vec![[0.0, s]]);
        }
        if let Some(s) = self.sigma {
            c.noninflating.sigma = s;
        }
        c
    }
}

/// Digest of a cell's file inventory; independent of the manifest's timestamps.
pub fn artifacts_digest(files: &[FileEntry]) -> String {
    let lines: String = files.iter().map(|f| format!("{}  {}\n", f.sha256, f.path)).collect();
    sha256_hex(lines.as_bytes())
}

fn opt(x: Option<f64>) -> String {
    x.map(number).unwrap_or_default()
}

/// Runs every cell (in parallel) under `dir/cell-NNNN` and writes the merged
/// summary. Failed cells are recorded and the sweep continues.
pub fn sweep(base: &RunConfig, grid: &SweepGrid, dir: &Path) -> Result<Vec<CellResult>, LabError> {
    let cells = grid.cells()?;
    std::fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    let results: Vec<CellResult> = cells
        .par_iter()
        .enumerate()
        .map(|(index, cell)| {
            let cfg = cell.apply(base, index);
            let cell_dir = dir.join(format!("cell-{index:04}"));
            let mut r = CellResult {
                index,
                cell: *cell,
                exit_code: EXIT_PASS,
                status: String::new(),
                pass: 0,
                fail: 0,
                not_rendered: 0,
                artifacts_sha256: String::new(),
                error: String::new(),
            };
            match run(&cfg, &cell_dir) {
                Ok(out) => {
                    r.exit_code = out.exit_code();
                    r.status = serde_json::to_value(out.manifest.status)
                        .ok()
                        .and_then(|v| v.as_str().map(str::to_string))
                        .unwrap_or_default();
                    r.pass = out.manifest.summary.pass;
                    r.fail = out.manifest.summary.fail;
                    r.not_rendered = out.manifest.summary.not_rendered;
                    r.artifacts_sha256 = artifacts_digest(&out.manifest.files);
                }
                Err(e) => {
                    r.exit_code = e.exit_code();
                    r.status = "error".to_string();
                    r.error = e.to_string();
                }
            }
            r
        })
        .collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    let header = [
        "cell",
        "alpha",
        "v",
        "s",
        "sigma",
        "status",
        "exit_code",
        "pass",
        "fail",
        "not_rendered",
        "artifacts_sha256",
        "error",
    ];
    w.write_record(header).expect("in-memory CSV");
    for r in &results {
        w.write_record([
            format!("cell-{:04}", r.index),
            opt(r.cell.alpha),
            opt(r.cell.v),
            opt(r.cell.s),
            opt(r.cell.sigma),
            r.status.clone(),
            r.exit_code.to_string(),
            r.pass.to_string(),
            r.fail.to_string(),
            r.not_rendered.to_string(),
            r.artifacts_sha256.clone(),
            r.error.clone(),
        ])
        .expect("in-memory CSV");
    }
    let path = dir.join(SUMMARY_FILE);
    std::fs::write(&path, w.into_inner().expect("flush")).map_err(|e| LabError::io(&path, e))?;
    Ok(results)
}
