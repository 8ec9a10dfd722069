//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! `RICCI_LAB_BLESS=1` rewrites the margin baselines of criterion 4 instead of
//! comparing against them.

use ricci_lab::curvature::KahlerCurvature;
use ricci_lab::forms::verify_apte_pointwise;
use ricci_lab::monitor::{gauss_bonnet, InequalityLedger, RunSeries, ScenarioSource, Tolerances, Verdict};
use ricci_lab::scenarios::{Scenario, ScenarioKind};
use ricci_lab::warped::{FlowConfig, FlowState, WarpedProfile};
use ricci_lab_cli::config::RunConfig;
use ricci_lab_cli::manifest::{Manifest, MANIFEST_FILE};
use ricci_lab_cli::runner::REPORT_FILE;
use ricci_lab_cli::{run, RunOutcome};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

const SPHERE: &str = "sphere-main-theorem";
const PRODUCT: &str = "product-kahler";
const WARPED: &str = "warped-boundary";
const SINGULAR: &str = "sphere-singular-hypothesis-violation";
const BASELINE_DRIFT: f64 = 1e-3;

type Check = Result<String, String>;

struct Runs {
    _tmp: tempfile::TempDir,
    root: PathBuf,
    out: BTreeMap<&'static str, (RunConfig, RunOutcome, Value)>,
}

fn config_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn baseline_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("baselines/first_weighted_estimate.json")
}

fn load(name: &str) -> RunConfig {
    RunConfig::load(&config_dir().join(format!("{name}.toml"))).expect("acceptance config parses")
}

impl Runs {
    fn new() -> Self {
        let tmp = tempfile::tempdir().expect("temp dir");
        let root = tmp.path().to_path_buf();
        let mut out = BTreeMap::new();
        for name in [SPHERE, PRODUCT, WARPED, SINGULAR] {
            let cfg = load(name);
            let o = run(&cfg, &root.join("first").join(name)).expect("acceptance run completes");
            let rep: Value =
                serde_json::from_str(&std::fs::read_to_string(o.dir.join(REPORT_FILE)).expect("report")).expect("json");
            out.insert(name, (cfg, o, rep));
        }
        Self { _tmp: tmp, root, out }
    }

    fn ledgers(&self, name: &str, theorem: &str) -> Vec<&InequalityLedger> {
        self.out[name].1.ledgers.iter().filter(|l| l.theorem == theorem).collect()
    }

    fn report(&self, name: &str) -> &Value {
        &self.out[name].2
    }
}

fn all_pass(ls: &[&InequalityLedger], expect: usize, what: &str) -> Result<(), String> {
    if ls.len() != expect {
        return Err(format!("{what}: {} ledgers, expected {expect}", ls.len()));
    }
    match ls.iter().find(|l| !l.passed()) {
        Some(l) => Err(format!("{what}: failing ledger {:?}", l.params)),
        None => Ok(()),
    }
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for m in [2usize, 3, 4] {
        for seed in 0..1000u64 {
            let k = KahlerCurvature::random(m, 1_000_003 * m as u64 + seed).map_err(|e| e.to_string())?;
            worst = worst.max(verify_apte_pointwise(&k).map_err(|e| e.to_string())?.max());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if worst < 1e-10 && secs < 10.0 {
        Ok(format!("max residual {worst:.2e} over 3000 tensors in {secs:.2} s"))
    } else {
        Err(format!("max residual {worst:.2e}, runtime {secs:.2} s"))
    }
}

fn criterion_2() -> Check {
    let tol = Tolerances::default();
    let mut worst: f64 = 0.0;
    for (kind, chi) in [(ScenarioKind::Sphere, 2.0), (ScenarioKind::Product { a: 1.0, b: 2.0 }, 4.0)] {
        let sc = Scenario::new(kind).map_err(|e| e.to_string())?;
        let horizon = sc.singular_time().expect("shrinking");
        let times: Vec<f64> = (0..10).map(|k| 0.95 * horizon * k as f64 / 10.0).collect();
        let run = RunSeries::sample(&mut ScenarioSource::closed(sc), &times).map_err(|e| e.to_string())?;
        for t in &times {
            let l = gauss_bonnet(&run, *t, &tol).map_err(|e| e.to_string())?;
            let rel = (l.lhs - 32.0 * PI * PI * chi).abs() / (32.0 * PI * PI * chi);
            worst = worst.max(rel);
            if !l.passed() || rel >= 1e-6 {
                return Err(format!("χ = {chi}, t = {t}: relative error {rel:.2e}"));
            }
        }
    }
    Ok(format!("S⁴ and S²×S² at 10 times each, max relative error {worst:.2e}"))
}

fn criterion_3(runs: &Runs) -> Check {
    let evo = runs.report(SPHERE)["evolution"].as_array().cloned().unwrap_or_default();
    if evo.len() != 5 {
        return Err(format!("{} sample times, expected 5", evo.len()));
    }
    let mut min_order = f64::INFINITY;
    let mut max_final: f64 = 0.0;
    for e in &evo {
        for o in e["observed_order"].as_array().into_iter().flatten() {
            min_order = min_order.min(o.as_f64().unwrap_or(f64::NAN));
        }
        let res = e["residual"].as_array().and_then(|r| r.last()).and_then(Value::as_f64).unwrap_or(f64::NAN);
        max_final = max_final.max(res);
    }
    let ledgers = runs.ledgers(SPHERE, "evolution_identity");
    all_pass(&ledgers, 5, "evolution ledgers")?;
    if min_order >= 1.9 && max_final < 1e-6 {
        Ok(format!("min observed order {min_order:.3}, finest residual {max_final:.2e}"))
    } else {
        Err(format!("min observed order {min_order:.3}, finest residual {max_final:.2e}"))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MarginRecord {
    r: f64,
    s: f64,
    margin: f64,
}

fn margins(runs: &Runs, name: &str) -> Vec<MarginRecord> {
    runs.ledgers(name, "first_weighted_estimate")
        .iter()
        .map(|l| MarginRecord {
            r: l.params["r"],
            s: l.params["s"],
            margin: l.margin,
        })
        .collect()
}

fn criterion_4(runs: &Runs) -> Check {
    let names = [SPHERE, PRODUCT, WARPED];
    for name in names {
        all_pass(&runs.ledgers(name, "first_weighted_estimate"), 25, name)?;
    }
    let current: BTreeMap<String, Vec<MarginRecord>> =
        names.iter().map(|n| (n.to_string(), margins(runs, n))).collect();
    let path = baseline_path();
    if std::env::var_os("RICCI_LAB_BLESS").is_some() {
        let mut text = serde_json::to_string_pretty(&current).expect("serializes");
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| e.to_string())?;
        return Ok("75 ledgers pass; baselines rewritten".to_string());
    }
    let text = std::fs::read_to_string(&path).map_err(|e| format!("baseline {}: {e}", path.display()))?;
    let base: BTreeMap<String, Vec<MarginRecord>> = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for (name, recs) in &current {
        let b = base.get(name).ok_or_else(|| format!("no baseline for {name}"))?;
        if b.len() != recs.len() {
            return Err(format!("{name}: {} margins, baseline has {}", recs.len(), b.len()));
        }
        for (x, y) in recs.iter().zip(b) {
            let drift = (x.margin - y.margin).abs() / y.margin.abs().max(1e-300);
            worst = worst.max(drift);
            if drift > BASELINE_DRIFT {
                return Err(format!("{name} (r, s) = ({}, {}): margin drift {drift:.2e}", x.r, x.s));
            }
        }
    }
    Ok(format!("75 ledgers pass on 3 runs; max margin drift {worst:.2e}"))
}

fn criterion_5(runs: &Runs) -> Check {
    let mut closest = f64::INFINITY;
    for name in [SPHERE, PRODUCT] {
        let ls = runs.ledgers(name, "main_weighted_estimate");
        all_pass(&ls, 25, name)?;
        for l in &ls {
            closest = closest.min(l.params["V"] - l.params["s"]);
        }
    }
    if closest < 1e-3 {
        Ok(format!("50 ledgers pass; closest s is V − {closest:.1e}"))
    } else {
        Err(format!("no s within 1e−3 of V (closest {closest:.2e})"))
    }
}

fn criterion_6(runs: &Runs) -> Check {
    let rm = &runs.report(SPHERE)["riemann_l2"];
    let target = 64.0 * PI * PI;
    let (sup, min) = (rm["sup"].as_f64().unwrap_or(f64::NAN), rm["min"].as_f64().unwrap_or(f64::NAN));
    let err = ((sup - target).abs()).max((min - target).abs()) / target;
    if !(err < 1e-6) {
        return Err(format!("∫|Rm|² deviates from 64π² by {err:.2e}"));
    }
    all_pass(&runs.ledgers(SPHERE, "rm_l2_uniform"), 1, "secondmain (i)")?;
    let slabs = runs.ledgers(SPHERE, "ricci_l4_slab");
    all_pass(&slabs, 3, "secondmain (ii)")?;
    let mut s: Vec<f64> = slabs.iter().map(|l| l.params["s"]).collect();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if s != [0.01, 0.02, 0.05] {
        return Err(format!("slab widths {s:?}"));
    }
    Ok(format!("∫|Rm|² = 64π² to {err:.1e}; slabs s = 0.01, 0.02, 0.05 pass"))
}

fn criterion_7(runs: &Runs) -> Check {
    let (alpha, sigma) = (0.05, 1e-4);
    let ni = &runs.report(SPHERE)["noninflating"];
    let slope = ni["slope"].as_f64().unwrap_or(f64::NAN);
    let p_alpha = ni["params"]["alpha"].as_f64().unwrap_or(f64::NAN);
    let p_sigma = ni["params"]["sigma"].as_f64().unwrap_or(f64::NAN);
    if p_alpha != alpha || p_sigma != sigma {
        return Err(format!("fit ran with α = {p_alpha}, σ = {p_sigma}"));
    }
    let ls = runs.ledgers(SPHERE, "ricci_ball_decay");
    let fit = ls.iter().find(|l| l.params.contains_key("slope")).ok_or("no fit ledger")?;
    if !(fit.passed() && slope >= 1.0 + alpha / 16.0 && (slope - 3.0).abs() <= 0.2) {
        return Err(format!("bounded window slope {slope:.4}, verdict {:?}", fit.verdict));
    }
    let hyp = &runs.report(SINGULAR)["hypotheses"]["c0"];
    let status = hyp["status"].as_str().unwrap_or("");
    let e = hyp["growth_exponent"].as_f64().unwrap_or(f64::NAN);
    let sing = runs.ledgers(SINGULAR, "ricci_ball_decay");
    let sfit = sing.iter().find(|l| l.params.contains_key("slope")).ok_or("no singular fit ledger")?;
    if status != "diverging" || (e / (12.0 * alpha) - 1.0).abs() > 0.1 || sfit.verdict != Verdict::NotRendered {
        return Err(format!("singular run: C₀ {status}, exponent {e:.4}, verdict {:?}", sfit.verdict));
    }
    Ok(format!(
        "bounded slope {slope:.3}; singular S⁴ C₀ diverging with exponent {e:.4} (12α = 0.6), no verdict"
    ))
}

fn criterion_8(runs: &Runs) -> Check {
    let ls = runs.ledgers(PRODUCT, "kahler_l2_formula");
    all_pass(&ls, 10, "Kähler L² formula")?;
    let target = -128.0 * PI * PI;
    let mut worst_res: f64 = 0.0;
    let mut worst_inv: f64 = 0.0;
    for l in &ls {
        worst_res = worst_res.max(l.params["residual"]);
        worst_inv = worst_inv.max((l.params["invariant"] - target).abs() / target.abs());
        if l.constants.iter().any(|c| c.name == "C_t" && c.value != 0.0) {
            return Err("C(t) not identically 0".to_string());
        }
    }
    let sup = runs.report(PRODUCT)["boundary_term"]["sup"].as_f64().unwrap_or(f64::NAN);
    if worst_res < 1e-8 && worst_inv < 1e-6 && sup == 0.0 {
        Ok(format!("residual ≤ {worst_res:.1e}, invariant −128π² to {worst_inv:.1e}, sup |C(t)| = 0"))
    } else {
        Err(format!("residual {worst_res:.2e}, invariant error {worst_inv:.2e}, sup |C| {sup}"))
    }
}

fn round_error(cells: usize) -> Result<f64, String> {
    let p = WarpedProfile::round(1.0, 2.5, cells).map_err(|e| e.to_string())?;
    let mut st = FlowState::new(p, FlowConfig::default()).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for k in 1..=10 {
        let t = 0.005 * k as f64;
        st.advance_to(t, None).map_err(|e| e.to_string())?;
        let c = (1.0 - 6.0 * t).sqrt();
        let pr = &st.profile;
        for i in 0..pr.len() {
            worst = worst.max((pr.psi[i] - c * pr.x[i].sin()).abs());
            worst = worst.max((pr.phi[i] - c).abs());
        }
    }
    Ok(worst)
}

fn criterion_9() -> Check {
    let errors: Vec<f64> = [50, 100, 200].iter().map(|c| round_error(*c)).collect::<Result<_, _>>()?;
    let ratios: Vec<f64> = errors.windows(2).map(|w| w[0] / w[1]).collect();
    let shown: Vec<String> = errors.iter().map(|e| format!("{e:.2e}")).collect();
    let msg = format!("max errors {} at 50/100/200 cells, ratios {ratios:.2?}", shown.join(", "));
    if ratios.iter().all(|r| *r >= 3.5) {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_10(runs: &Runs) -> Check {
    let mut samples = 0.0;
    for name in [SPHERE, PRODUCT, WARPED, SINGULAR] {
        let ls = runs.ledgers(name, "superlevel_chebyshev");
        all_pass(&ls, 1, name)?;
        samples += ls[0].params["samples"];
    }
    Ok(format!("bound holds at all {samples} sampled times of 4 runs"))
}

fn criterion_11(runs: &Runs) -> Check {
    let mut files = 0;
    for name in [SPHERE, PRODUCT, WARPED] {
        let (cfg, first, _) = &runs.out[name];
        let again = run(cfg, &runs.root.join("second").join(name)).map_err(|e| e.to_string())?;
        let m1 = Manifest::load(&first.dir.join(MANIFEST_FILE)).map_err(|e| e.to_string())?;
        let m2 = Manifest::load(&again.dir.join(MANIFEST_FILE)).map_err(|e| e.to_string())?;
        if m1.files != m2.files || m1.config_hash != m2.config_hash {
            return Err(format!("{name}: file inventories differ"));
        }
        for f in &m1.files {
            let a = std::fs::read(first.dir.join(&f.path)).map_err(|e| e.to_string())?;
            let b = std::fs::read(again.dir.join(&f.path)).map_err(|e| e.to_string())?;
            if a != b {
                return Err(format!("{name}: {} differs", f.path));
            }
            files += 1;
        }
    }
    Ok(format!("{files} artifacts byte-identical across reruns"))
}

fn main() {
    let start = Instant::now();
    let runs = catch_unwind(Runs::new);
    let runs = match runs {
        Ok(r) => Some(r),
        Err(_) => None,
    };
    let descs = [
        "pointwise Kähler curvature identities",
        "Chern–Gauss–Bonnet on S⁴ and S²×S²",
        "evolution identity convergence",
        "first weighted estimate on 3 runs with baselines",
        "main weighted estimate with s near V",
        "uniform ∫|Rm|² and slab-ball |Ric|⁴ bound",
        "ball decay exponent fit and C₀ divergence",
        "Kähler L² formula",
        "warped integrator convergence",
        "Chebyshev superlevel bound",
        "determinism",
    ];
    let mut failed = 0;
    for (k, desc) in descs.iter().enumerate() {
        let n = k + 1;
        let outcome = catch_unwind(AssertUnwindSafe(|| -> Check {
            match (n, &runs) {
                (1, _) => criterion_1(),
                (2, _) => criterion_2(),
                (9, _) => criterion_9(),
                (_, None) => Err("acceptance runs did not complete".to_string()),
                (3, Some(r)) => criterion_3(r),
                (4, Some(r)) => criterion_4(r),
                (5, Some(r)) => criterion_5(r),
                (6, Some(r)) => criterion_6(r),
                (7, Some(r)) => criterion_7(r),
                (8, Some(r)) => criterion_8(r),
                (10, Some(r)) => criterion_10(r),
                (11, Some(r)) => criterion_11(r),
                _ => unreachable!(),
            }
        }))
        .unwrap_or_else(|_| Err("panicked".to_string()));
        match outcome {
            Ok(detail) => println!("criterion {n:>2} PASS  {desc}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n:>2} FAIL  {desc}: {detail}");
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    println!("acceptance runtime {secs:.1} s (target < 300 s)");
    if secs >= 300.0 {
        failed += 1;
    }
    if failed > 0 {
        println!("{failed} acceptance check(s) failed");
        std::process::exit(1);
    }
}
