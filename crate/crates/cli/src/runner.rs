use crate::config::{Resolved, RunConfig};
use crate::format::{json_line, json_lines, numeric_csv, sha256_hex};
use crate::manifest::{count_verdicts, now_unix, prepare_output_dir, Manifest, RunStatus};
use crate::LabError;
use ricci_lab::monitor::*;
use ricci_lab::quadrature::graded_grid;
use serde::Serialize;
use std::path::{Path, PathBuf};

pub const TIMESERIES_FILE: &str = "timeseries.csv";
pub const LEDGER_FILE: &str = "ledgers.jsonl";
pub const REPORT_FILE: &str = "reports.json";
pub const CONFIG_FILE: &str = "config.toml";

pub const TIMESERIES_COLUMNS: [&str; 17] = [
    "t",
    "t_raw",
    "volume",
    "scalar_min",
    "scalar_max",
    "ricci_l2",
    "riemann_l2",
    "scalar_l2",
    "weighted_ricci",
    "quartic",
    "scalar_pow_high",
    "boundary_flux",
    "min_l_minus_v",
    "gauss_bonnet_integral",
    "kahler_invariant",
    "z_measure",
    "chebyshev_rhs",
];

/// Number of times at which per-time ledgers (Gauss–Bonnet, Kähler, |Rm|² bound) are rendered.
const PER_TIME_LEDGERS: usize = 10;

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub ledgers: Vec<InequalityLedger>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        self.manifest.exit_code
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EvolutionReport {
    pub t: f64,
    pub dt: Vec<f64>,
    pub residual: Vec<f64>,
    /// log₂ of successive residual ratios
    pub observed_order: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
struct Reports<'a> {
    name: &'a str,
    rescale: f64,
    v: f64,
    horizon: f64,
    samples: usize,
    hypotheses: Option<HypothesisReport>,
    constants: Vec<Constant>,
    riemann_l2: Option<RiemannL2Series>,
    noninflating: Option<NonInflatingReport>,
    v_ladder: Option<VLadderReport>,
    boundary_term: Option<BoundaryTermReport>,
    evolution: Vec<EvolutionReport>,
    notes: Vec<String>,
}

fn make_source(cfg: &RunConfig, res: &Resolved) -> Result<Box<dyn FieldSource>, LabError> {
    Ok(match (res.scenario, res.region) {
        (Some(sc), Some(region)) => Box::new(ScenarioSource::new(sc, region)),
        _ => {
            let (p, flow, region) = cfg.warped_profile()?;
            Box::new(WarpedSource::new(&cfg.name, p, flow, region, cfg.rescale(), res.horizon)?)
        }
    })
}

fn weight_for(cfg: &RunConfig, res: &Resolved, mode: WeightMode) -> Result<WeightSpec, LabError> {
    let mut ws = WeightSpec::new(res.v, cfg.weight.alpha, res.horizon, mode)?;
    if let Some(b) = cfg.weight.b {
        ws.b = ws.b.max(b);
    }
    Ok(ws)
}

/// Sampling times: the graded grid toward V plus every time a ledger needs.
pub fn sample_times(cfg: &RunConfig, res: &Resolved) -> Vec<f64> {
    let v = res.v;
    let mut knots: Vec<f64> = res.pairs.iter().flat_map(|(r, s)| [*r, *s]).collect();
    if cfg.selects("ricci_l4_slab") || cfg.selects("rm_l2_uniform") {
        let sm = &cfg.secondmain;
        for s in sm.slabs.iter().chain(&sm.calibration_slabs) {
            knots.extend([v - 2.0 * s, v - s]);
        }
    }
    if cfg.selects("ricci_ball_decay") {
        knots.extend(cfg.noninflating.gaps.iter().map(|g| v - g));
    }
    let g = &cfg.grid;
    graded_grid(
        0.0,
        g.uniform_fraction * v,
        g.n_uniform,
        v,
        g.min_gap * v,
        g.n_geometric,
        &knots,
    )
}

fn is_numerical_failure(e: &MonitorError) -> bool {
    matches!(e, MonitorError::Flow(_) | MonitorError::NonFinite(_))
}

fn evenly_spaced(times: &[f64], n: usize) -> Vec<f64> {
    if times.len() <= n {
        return times.to_vec();
    }
    (0..n).map(|k| times[k * (times.len() - 1) / (n - 1)]).collect()
}

fn timeseries(run: &RunSeries, ws: &WeightSpec, rescale: f64) -> String {
    let rows: Vec<Vec<f64>> = run
        .snapshots
        .iter()
        .map(|s| {
            let nan = f64::NAN;
            let terms = slice_terms(s, ws).ok();
            let sl = superlevel_measures(s, ws).ok();
            let pick = |f: fn(&SliceTerms) -> f64| terms.as_ref().map_or(nan, f);
            let smax = s.scalar.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            vec![
                s.t,
                s.t / rescale,
                s.volume(),
                s.inf_scalar(),
                smax,
                pick(|x| x.ricci_l2),
                pick(|x| x.riemann_l2),
                pick(|x| x.scalar_l2),
                pick(|x| x.weighted_ricci),
                pick(|x| x.quartic),
                pick(|x| x.scalar_pow_high),
                pick(|x| x.boundary_flux),
                pick(|x| x.min_l_minus_v),
                s.integrate(|i| s.riemann_sq[i] - 4.0 * s.ricci_sq[i] + s.scalar[i] * s.scalar[i]),
                kahler_invariant(s),
                sl.map_or(nan, |x| x.z_measure),
                sl.map_or(nan, |x| x.chebyshev_rhs),
            ]
        })
        .collect();
    numeric_csv(&TIMESERIES_COLUMNS, &rows)
}

fn write(dir: &Path, name: &str, text: &str) -> Result<(), LabError> {
    let p = dir.join(name);
    std::fs::write(&p, text).map_err(|e| LabError::io(&p, e))
}

fn evolution_reports(
    cfg: &RunConfig,
    res: &Resolved,
    ws: &WeightSpec,
    tol: &Tolerances,
) -> Result<(Vec<EvolutionReport>, Vec<InequalityLedger>), LabError> {
    let c = cfg.rescale();
    let mut reports = Vec::new();
    let mut ledgers = Vec::new();
    for t_raw in &cfg.evolution.times {
        let t = t_raw * c;
        let mut dts = Vec::new();
        let mut residuals = Vec::new();
        let mut finest = None;
        for k in 0..=cfg.evolution.refinements {
            let dt = cfg.evolution.dt * c / 2f64.powi(k as i32);
            let mut src = make_source(cfg, res)?;
            let r = evolution_identity(src.as_mut(), ws, t, dt)?;
            dts.push(dt);
            residuals.push(r.residual);
            finest = Some(r);
        }
        let order: Vec<f64> = residuals.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
        let mut l = evolution_ledger(&finest.expect("at least one stencil"), tol);
        if let Some(o) = order.last() {
            l = l.with_param("observed_order", *o);
        }
        ledgers.push(l);
        reports.push(EvolutionReport {
            t,
            dt: dts,
            residual: residuals,
            observed_order: order,
        });
    }
    Ok((reports, ledgers))
}

/// Executes one configuration and writes its artifacts into `dir`.
pub fn run(cfg: &RunConfig, dir: &Path) -> Result<RunOutcome, LabError> {
    let started = now_unix();
    let res = cfg.validate()?;
    prepare_output_dir(dir)?;
    let c = cfg.rescale();
    let tol = Tolerances {
        identity: cfg.tolerances.identity,
        inequality: cfg.tolerances.inequality,
    };
    let first = weight_for(cfg, &res, WeightMode::FirstEstimate)?;
    let mut notes = Vec::new();

    let mut source = make_source(cfg, &res)?;
    let times = sample_times(cfg, &res);
    let mut snapshots = Vec::with_capacity(times.len());
    let mut singular = None;
    for t in &times {
        match source.snapshot(*t) {
            Ok(s) => snapshots.push(s),
            Err(e) if is_numerical_failure(&e) => {
                singular = Some(e);
                break;
            }
            Err(e) => return Err(e.into()),
        }
    }
    let run = RunSeries {
        info: source.info(),
        snapshots,
    };
    write(dir, CONFIG_FILE, &cfg.canonical())?;
    write(dir, TIMESERIES_FILE, &timeseries(&run, &first, c))?;

    let mut ledgers = Vec::new();
    let mut reports = Reports {
        name: &cfg.name,
        rescale: c,
        v: res.v,
        horizon: res.horizon,
        samples: run.snapshots.len(),
        hypotheses: None,
        constants: Vec::new(),
        riemann_l2: None,
        noninflating: None,
        v_ladder: None,
        boundary_term: None,
        evolution: Vec::new(),
        notes: Vec::new(),
    };

    let status = if let Some(e) = singular {
        notes.push(format!("numerical singularity: {e}; partial artifacts kept"));
        RunStatus::Singularity
    } else {
        compute_ledgers(cfg, &res, &run, &tol, &mut ledgers, &mut reports)?;
        let (count, _) = count_verdicts(&ledgers);
        if count.fail > 0 {
            RunStatus::VerdictFailure
        } else {
            RunStatus::Pass
        }
    };
    reports.notes = notes.clone();
    write(dir, LEDGER_FILE, &json_lines(&ledgers))?;
    let mut rep = json_line(&reports);
    rep.push('\n');
    write(dir, REPORT_FILE, &rep)?;

    let (summary, verdicts) = count_verdicts(&ledgers);
    let mut manifest = Manifest {
        name: cfg.name.clone(),
        config_hash: sha256_hex(cfg.canonical().as_bytes()),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.seed,
        started_unix: started,
        finished_unix: now_unix(),
        status,
        exit_code: status.exit_code(),
        summary,
        verdicts,
        notes,
        files: Vec::new(),
    };
    manifest.refresh_inventory(dir)?;
    manifest.write(dir)?;
    Ok(RunOutcome {
        dir: dir.to_path_buf(),
        manifest,
        ledgers,
    })
}

fn compute_ledgers(
    cfg: &RunConfig,
    res: &Resolved,
    run: &RunSeries,
    tol: &Tolerances,
    ledgers: &mut Vec<InequalityLedger>,
    reports: &mut Reports,
) -> Result<(), LabError> {
    let first = weight_for(cfg, res, WeightMode::FirstEstimate)?;
    let hyp = check_hypotheses(run, &first)?;
    let withhold = |l: InequalityLedger| {
        if hyp.satisfied {
            l
        } else {
            l.withhold("hypotheses violated: C₀ bound or setting (B) fails")
        }
    };
    let before_v: Vec<f64> = run.before(0.0, res.v).iter().map(|s| s.t).collect();
    let per_time = evenly_spaced(&before_v, PER_TIME_LEDGERS);
    let c_hat = boundary_constant(run, &first)?;
    reports.constants.push(c_hat.clone());
    let c_rm = rm2_constant(run)?;
    reports.constants.push(c_rm.clone());

    if cfg.selects("first_weighted_estimate") {
        let ls = ledger_grid(&res.pairs, |r, s| check_thm31(run, &first, r, s, &c_hat, tol))?;
        ledgers.extend(ls.into_iter().map(withhold));
    }
    if cfg.selects("main_weighted_estimate") {
        let main = weight_for(cfg, res, WeightMode::Main)?;
        let c0 = main_constant(run, &main, &c_hat, &c_rm)?;
        reports.constants.push(c0.clone());
        let ls = ledger_grid(&res.pairs, |r, s| check_main(run, &main, r, s, &c0, tol))?;
        ledgers.extend(ls.into_iter().map(withhold));
    }
    if cfg.selects("rm_l2_bound") {
        for t in &per_time {
            ledgers.push(rm2_bound(run, *t, &c_rm, tol)?);
        }
    }
    if cfg.selects("gauss_bonnet") {
        for t in &per_time {
            ledgers.push(gauss_bonnet(run, *t, tol)?);
        }
    }
    if cfg.selects("rm_l2_uniform") || cfg.selects("ricci_l4_slab") {
        let main = weight_for(cfg, res, WeightMode::Main)?;
        let sm = &cfg.secondmain;
        let c1 = calibrate_c1(run, &main, &sm.calibration_slabs, sm.radius)?;
        reports.constants.push(c1.clone());
        reports.riemann_l2 = Some(riemann_l2_series(run));
        if cfg.selects("rm_l2_uniform") {
            ledgers.push(check_rm_l2_uniform(run, &c1, &hyp, tol));
        }
        if cfg.selects("ricci_l4_slab") {
            for s in &sm.slabs {
                ledgers.push(check_ricci_l4_slab(run, &main, *s, sm.radius, &c1, &hyp, tol)?);
            }
        }
    }
    if cfg.selects("ricci_ball_decay") {
        let ni = &cfg.noninflating;
        let params = Theorem15Params::new(cfg.weight.alpha, ni.sigma)?;
        let mut ladder: Vec<f64> = ni.gaps.iter().map(|g| res.v - g).collect();
        ladder.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        let rep = check_noninflating(run, res.v, &ladder, params, &hyp, ni.fit_tol)?;
        ledgers.push(rep.ledger.clone());
        let start = ladder[0];
        let vs: Vec<f64> = ni
            .v_offsets
            .iter()
            .map(|o| res.v - o)
            .filter(|v| *v > start)
            .collect();
        if vs.len() >= 2 {
            let vl = v_ladder(run, start, &vs, ni.sigma)?;
            let drop = vl
                .lhs
                .windows(2)
                .map(|w| (w[0] - w[1]).max(0.0))
                .fold(0.0, f64::max);
            let mut l = InequalityLedger::inequality("ricci_ball_decay", drop, 0.0, 0.0)
                .with_param("S", start)
                .with_note("V-ladder: LHS(S, V) nondecreasing in V");
            if !vl.monotone {
                l.verdict = Verdict::Fail;
            } else {
                l.verdict = Verdict::Pass;
            }
            ledgers.push(l);
            reports.v_ladder = Some(vl);
        }
        reports.noninflating = Some(rep);
    }
    if cfg.selects("kahler_l2_formula") {
        for t in &per_time {
            ledgers.push(check_kahler_l2(run, *t, tol)?);
        }
    }
    if cfg.selects("kahler_boundary_constant") {
        let rep = check_c_bounded(run)?;
        ledgers.push(rep.ledger.clone());
        reports.boundary_term = Some(rep);
    }
    if cfg.selects("superlevel_chebyshev") {
        let series = superlevel_series(run, &first)?;
        let failures = series.iter().filter(|r| !r.holds).count();
        let slack = series
            .iter()
            .map(|r| r.chebyshev_rhs - r.z_measure)
            .fold(f64::INFINITY, f64::min);
        let mut l = InequalityLedger::inequality("superlevel_chebyshev", failures as f64, 0.0, 0.0)
            .with_param("samples", series.len() as f64)
            .with_param("min_slack", slack)
            .with_note("lhs counts sampled times where m(t) exceeds the Chebyshev bound");
        if series.is_empty() {
            l = l.withhold("no samples before V");
        }
        ledgers.push(l);
    }
    if cfg.selects("evolution_identity") {
        let (reps, ls) = evolution_reports(cfg, res, &first, tol)?;
        reports.evolution = reps;
        ledgers.extend(ls);
    }
    reports.hypotheses = Some(hyp);
    Ok(())
}
