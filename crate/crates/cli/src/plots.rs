//! Two-column plot files derived from a run directory.

use crate::format::numeric_csv;
use crate::manifest::{Manifest, MANIFEST_FILE};
use crate::runner::{REPORT_FILE, TIMESERIES_FILE};
use crate::LabError;
use std::path::Path;

pub const PLOT_DIR: &str = "plots";
pub const FIT_FILE: &str = "ricci_ball_decay_fit.csv";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlotOutput {
    pub files: Vec<String>,
    pub notes: Vec<String>,
}

fn parse_cell(s: &str) -> Option<f64> {
    if s == "null" {
        None
    } else {
        s.parse().ok()
    }
}

/// Writes `plots/<quantity>.csv` with (t, value) rows for every time-series
/// column, and `plots/ricci_ball_decay_fit.csv` with (log(V−S), log LHS) when
/// the run carries a decay fit. The manifest inventory is refreshed.
pub fn emit_plots(manifest_path: &Path) -> Result<PlotOutput, LabError> {
    let mut manifest = Manifest::load(manifest_path)?;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let mut out = PlotOutput::default();
    let plot_dir = dir.join(PLOT_DIR);

    let mut series: Vec<(String, Vec<Vec<f64>>)> = Vec::new();
    let ts = dir.join(TIMESERIES_FILE);
    if ts.exists() {
        let mut rdr = csv::Reader::from_path(&ts).map_err(|e| LabError::Config(format!("{}: {e}", ts.display())))?;
        let header: Vec<String> = rdr
            .headers()
            .map_err(|e| LabError::Config(e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        let mut cols: Vec<Vec<Vec<f64>>> = vec![Vec::new(); header.len()];
        let mut rows = 0usize;
        for rec in rdr.records() {
            let rec = rec.map_err(|e| LabError::Config(e.to_string()))?;
            rows += 1;
            let Some(t) = rec.get(0).and_then(parse_cell) else { continue };
            for (k, cell) in rec.iter().enumerate().skip(1) {
                if let Some(v) = parse_cell(cell) {
                    cols[k].push(vec![t, v]);
                }
            }
        }
        if rows == 0 {
            out.notes.push("empty run: time series has no rows".to_string());
        }
        for (k, name) in header.iter().enumerate().skip(1) {
            if name == "t_raw" {
                continue;
            }
            if cols[k].is_empty() {
                if rows > 0 {
                    out.notes.push(format!("series {name} has no finite values; skipped"));
                }
                continue;
            }
            series.push((name.clone(), std::mem::take(&mut cols[k])));
        }
    } else {
        out.notes.push(format!("{TIMESERIES_FILE} missing; time series skipped"));
    }

    let mut fit: Option<Vec<Vec<f64>>> = None;
    let rep_path = dir.join(REPORT_FILE);
    match std::fs::read_to_string(&rep_path) {
        Ok(text) => {
            let v: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| LabError::Config(format!("{}: {e}", rep_path.display())))?;
            let ni = &v["noninflating"];
            if let (Some(g), Some(l)) = (ni["gaps"].as_array(), ni["lhs"].as_array()) {
                let rows: Vec<Vec<f64>> = g
                    .iter()
                    .zip(l)
                    .filter_map(|(g, l)| Some(vec![g.as_f64()?.ln(), l.as_f64()?.ln()]))
                    .collect();
                fit = Some(rows);
            } else {
                out.notes.push("no decay fit in this run; fit file skipped".to_string());
            }
        }
        Err(_) => out.notes.push(format!("{REPORT_FILE} missing; fit file skipped")),
    }

    if !series.is_empty() || fit.is_some() {
        std::fs::create_dir_all(&plot_dir).map_err(|e| LabError::io(&plot_dir, e))?;
    }
    for (name, rows) in &series {
        let file = format!("{name}.csv");
        let p = plot_dir.join(&file);
        std::fs::write(&p, numeric_csv(&["t", name], rows)).map_err(|e| LabError::io(&p, e))?;
        out.files.push(format!("{PLOT_DIR}/{file}"));
    }
    if let Some(rows) = fit {
        let p = plot_dir.join(FIT_FILE);
        std::fs::write(&p, numeric_csv(&["log_gap", "log_lhs"], &rows)).map_err(|e| LabError::io(&p, e))?;
        out.files.push(format!("{PLOT_DIR}/{FIT_FILE}"));
    }
    manifest.notes.extend(out.notes.iter().map(|n| format!("emit-plots: {n}")));
    manifest.refresh_inventory(dir)?;
    manifest.write(dir)?;
    debug_assert!(dir.join(MANIFEST_FILE).exists());
    Ok(out)
}
