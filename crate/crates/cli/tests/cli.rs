use ricci_lab_cli::manifest::{inventory, Manifest, MANIFEST_FILE};
use ricci_lab_cli::plots::{emit_plots, FIT_FILE, PLOT_DIR};
use ricci_lab_cli::sweep::{sweep, SweepGrid, SUMMARY_FILE};
use ricci_lab_cli::{run, RunConfig, RunStatus, EXIT_PASS, EXIT_SINGULAR, EXIT_USAGE};
use std::path::{Path, PathBuf};
use std::process::Command;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load(name: &str) -> RunConfig {
    RunConfig::load(&configs().join(format!("{name}.toml"))).unwrap()
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ricci-lab"))
}

fn read_csv(path: &Path) -> Vec<Vec<f64>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records()
        .map(|rec| rec.unwrap().iter().map(|x| x.parse().unwrap()).collect())
        .collect()
}

#[test]
fn binary_exit_codes_and_output_root() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.toml");
    let text = std::fs::read_to_string(configs().join("sphere-main-theorem.toml")).unwrap();
    std::fs::write(&bad, text.replace("alpha = 0.05", "alpha = 0.2")).unwrap();
    let out = bin().arg("validate-config").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_USAGE));
    assert!(String::from_utf8_lossy(&out.stderr).contains("α outside (0, 1/12)"));
    let out = bin().arg("run").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_USAGE));
    assert_eq!(bin().arg("frobnicate").output().unwrap().status.code(), Some(EXIT_USAGE));

    let out = bin()
        .env("RICCI_LAB_OUTPUT_ROOT", tmp.path())
        .arg("run")
        .arg(configs().join("sphere-main-theorem.toml"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(EXIT_PASS), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(tmp.path().join("sphere-main-theorem").join(MANIFEST_FILE).exists());
}

#[test]
fn singular_hypothesis_run_exits_zero_with_divergence_report() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&load("sphere-singular-hypothesis-violation"), tmp.path()).unwrap();
    assert_eq!(o.exit_code(), EXIT_PASS);
    let rep: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("reports.json")).unwrap()).unwrap();
    assert_eq!(rep["hypotheses"]["c0"]["status"], "diverging");
    assert_eq!(o.manifest.summary.not_rendered, 1);
}

#[test]
fn manifest_lists_every_file_and_plots_match_closed_form() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("run");
    run(&load("sphere-main-theorem"), &dir).unwrap();
    let plots = emit_plots(&dir.join(MANIFEST_FILE)).unwrap();
    assert!(plots.files.iter().any(|f| f.ends_with("scalar_max.csv")));
    let m = Manifest::load(&dir.join(MANIFEST_FILE)).unwrap();
    assert_eq!(m.files, inventory(&dir).unwrap());
    assert!(m.files.iter().any(|f| f.path == format!("{PLOT_DIR}/{FIT_FILE}")));

    // R = 12/(1 − 6 t_raw) before the rescale by 12
    let rows = read_csv(&dir.join(PLOT_DIR).join("scalar_max.csv"));
    assert!(rows.len() > 100);
    for r in rows {
        let t_raw = r[0] / 12.0;
        let exact = 12.0 / (1.0 - 6.0 * t_raw) / 12.0;
        assert!((r[1] - exact).abs() < 1e-12 * exact, "{r:?}");
    }
    assert!(read_csv(&dir.join(PLOT_DIR).join(FIT_FILE)).len() >= 4);
}

#[test]
fn empty_run_emits_no_plot_files() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(dir.join("timeseries.csv"), "t,t_raw,volume\n").unwrap();
    let m = Manifest {
        name: "empty".into(),
        config_hash: String::new(),
        code_version: String::new(),
        seed: 0,
        started_unix: 0.0,
        finished_unix: 0.0,
        status: RunStatus::Pass,
        exit_code: 0,
        summary: Default::default(),
        verdicts: Default::default(),
        notes: vec![],
        files: vec![],
    };
    m.write(dir).unwrap();
    let out = emit_plots(&dir.join(MANIFEST_FILE)).unwrap();
    assert!(out.files.is_empty());
    assert!(out.notes.iter().any(|n| n.contains("empty run")));
    assert!(!dir.join(PLOT_DIR).exists());
}

#[test]
fn pinching_flow_reports_singularity_and_keeps_partial_artifacts() {
    let text = r#"
name = "pinch"
[scenario]
kind = "warped"
rescale = 12.0
[warped]
profile = "cylinder"
radius = 1.0
x0 = 0.0
x_max = 2.0
cells = 40
x_boundary = 1.0
collar_width = 0.25
horizon = 0.3
[weight]
v = 0.29
alpha = 0.05
[theorems]
select = ["first_weighted_estimate"]
"#;
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&RunConfig::from_toml(text).unwrap(), tmp.path()).unwrap();
    assert_eq!(o.manifest.status, RunStatus::Singularity);
    assert_eq!(o.exit_code(), EXIT_SINGULAR);
    let rows = read_csv(&tmp.path().join("timeseries.csv"));
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r[1] < 0.25 + 1e-9));
    assert_eq!(o.manifest.files, inventory(tmp.path()).unwrap());
}

#[test]
fn sweep_three_by_three_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let grid = SweepGrid::from_toml(&std::fs::read_to_string(configs().join("sweep-alpha-v.toml")).unwrap()).unwrap();
    let mut base = load("sphere-main-theorem");
    base.theorems.select = vec!["first_weighted_estimate".into(), "superlevel_chebyshev".into()];
    let a = sweep(&base, &grid, &tmp.path().join("a")).unwrap();
    assert_eq!(a.len(), 9);
    for k in 0..9 {
        assert!(tmp.path().join(format!("a/cell-{k:04}")).join(MANIFEST_FILE).exists());
    }
    let summary = std::fs::read_to_string(tmp.path().join("a").join(SUMMARY_FILE)).unwrap();
    assert_eq!(summary.lines().count(), 10);
    let b = sweep(&base, &grid, &tmp.path().join("b")).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.artifacts_sha256, y.artifacts_sha256);
        assert_eq!(x.exit_code, y.exit_code);
    }
    assert!(SweepGrid::default().cells().is_err());
}
