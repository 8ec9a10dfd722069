use super::{
    evolution_terms, fit_line, slice_terms, CollarSample, Constant, EvolutionTerms, FieldSource, InequalityLedger,
    MonitorError, RunSeries, Snapshot, Tolerances, WeightSpec,
};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Growth exponents below this count as bounded in the C₀ divergence fit.
pub const DIVERGENCE_EXPONENT_FLOOR: f64 = 1e-2;

/// The C₀ fit uses samples with V − t below this fraction of V.
pub const DIVERGENCE_FIT_WINDOW: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundStatus {
    Finite,
    Diverging,
}

/// sup_t ∫_N |R|^{2+12α} with a log-log growth fit toward V.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarBound {
    pub sup: f64,
    /// e in ∫|R|^{2+12α} ∼ (V − t)^{−e}, when enough samples approach V.
    pub growth_exponent: Option<f64>,
    pub status: BoundStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub inf_scalar: f64,
    pub scalar_bound_ok: bool,
    /// Suprema over time of the collar suprema; `None` on closed N.
    pub collar: Option<CollarSample>,
    pub collar_ok: bool,
    pub c0: ScalarBound,
    /// sup_t Vol(B(p, √(V−t)))/(V−t)²
    pub sigma1: f64,
    pub min_l_minus_v: f64,
    pub satisfied: bool,
    pub samples: usize,
}

/// Setting (B) and the integrability hypotheses on the samples with t < V.
pub fn check_hypotheses(run: &RunSeries, ws: &WeightSpec) -> Result<HypothesisReport, MonitorError> {
    let snaps = run.before(0.0, ws.v);
    if snaps.is_empty() {
        return Err(MonitorError::TimeNotSampled(0.0));
    }
    let mut inf_scalar = f64::INFINITY;
    let mut min_l = f64::INFINITY;
    let mut sigma1: f64 = 0.0;
    let mut collar: Option<CollarSample> = None;
    let mut c0 = Vec::with_capacity(snaps.len());
    for s in snaps {
        inf_scalar = inf_scalar.min(s.inf_scalar());
        let terms = slice_terms(s, ws)?;
        min_l = min_l.min(terms.min_l_minus_v);
        c0.push((s.t, terms.scalar_pow_high));
        let gap = ws.v - s.t;
        sigma1 = sigma1.max(s.ball_volume(gap.sqrt())? / (gap * gap));
        if let Some(c) = s.collar {
            let acc = collar.get_or_insert(CollarSample {
                sup_rm: 0.0,
                sup_grad_rm: 0.0,
                sup_grad2_rm_estimate: 0.0,
            });
            acc.sup_rm = acc.sup_rm.max(c.sup_rm);
            acc.sup_grad_rm = acc.sup_grad_rm.max(c.sup_grad_rm);
            acc.sup_grad2_rm_estimate = acc.sup_grad2_rm_estimate.max(c.sup_grad2_rm_estimate);
        }
    }
    let sup = c0.iter().map(|x| x.1).fold(0.0, f64::max);
    let tail: Vec<(f64, f64)> = c0
        .iter()
        .filter(|(t, v)| ws.v - t <= DIVERGENCE_FIT_WINDOW * ws.v && *v > 0.0)
        .map(|(t, v)| ((ws.v - t).ln(), v.ln()))
        .collect();
    let growth_exponent = if tail.len() >= 4 {
        let (x, y): (Vec<f64>, Vec<f64>) = tail.into_iter().unzip();
        Some(-fit_line(&x, &y)?.0)
    } else {
        None
    };
    let status = match growth_exponent {
        Some(e) if e > DIVERGENCE_EXPONENT_FLOOR => BoundStatus::Diverging,
        _ if !sup.is_finite() => BoundStatus::Diverging,
        _ => BoundStatus::Finite,
    };
    let collar_ok = collar.map_or(true, |c| c.sup_rm <= 1.0 && c.sup_grad_rm <= 1.0);
    let scalar_bound_ok = inf_scalar >= -1.0;
    Ok(HypothesisReport {
        inf_scalar,
        scalar_bound_ok,
        collar,
        collar_ok,
        c0: ScalarBound {
            sup,
            growth_exponent,
            status,
        },
        sigma1,
        min_l_minus_v: min_l,
        satisfied: scalar_bound_ok && collar_ok && status == BoundStatus::Finite && min_l >= 0.0,
        samples: snaps.len(),
    })
}

/// ∫(|Rm|² − 4|Ric|² + R²) dV = 32π²χ at one sampled time of a closed run.
pub fn gauss_bonnet(run: &RunSeries, t: f64, tol: &Tolerances) -> Result<InequalityLedger, MonitorError> {
    let chi = match (run.info.closed, run.info.euler_characteristic) {
        (true, Some(chi)) => chi,
        _ => return Err(MonitorError::OutOfScope("Gauss–Bonnet verdicts need a closed run".to_string())),
    };
    let s = &run.snapshots[run.index_of(t)?];
    let lhs = s.integrate(|i| s.riemann_sq[i] - 4.0 * s.ricci_sq[i] + s.scalar[i] * s.scalar[i]);
    let rhs = 32.0 * PI * PI * chi as f64;
    Ok(InequalityLedger::identity("gauss_bonnet", lhs, rhs, tol.identity)
        .with_param("t", t)
        .with_param("chi", chi as f64))
}

/// ∫(|Rm|² − R²) dV, the Kähler flow invariant at complex dimension 2.
pub fn kahler_invariant(s: &Snapshot) -> f64 {
    s.integrate(|i| s.riemann_sq[i] - s.scalar[i] * s.scalar[i])
}

/// The constant ĉ in ∫|Rm|² ≤ 4∫|Ric|² + ∫R² + ĉ, by the route the run allows.
pub fn rm2_constant(run: &RunSeries) -> Result<Constant, MonitorError> {
    let info = &run.info;
    if info.closed && info.kahler_dimension == Some(2) {
        let k0 = kahler_invariant(&run.snapshots[run.index_of(0.0)?]);
        return Ok(Constant::new(
            "c_hat_rm",
            k0.abs(),
            "Kähler route: |∫(|Rm₀|² − R₀²)dV₀| + sup|C(t)|, C ≡ 0 on closed N",
        ));
    }
    if let (true, Some(chi)) = (info.closed, info.euler_characteristic) {
        return Ok(Constant::new(
            "c_hat_rm",
            (32.0 * PI * PI * chi as f64).abs(),
            "Gauss–Bonnet route: |32π²χ|",
        ));
    }
    let mut deficit: f64 = 0.0;
    for s in &run.snapshots {
        let d = s.integrate(|i| s.riemann_sq[i] - 4.0 * s.ricci_sq[i] - s.scalar[i] * s.scalar[i]);
        deficit = deficit.max(d);
    }
    Ok(Constant::new(
        "c_hat_rm",
        deficit,
        "measured: sup_t (∫|Rm|² − 4∫|Ric|² − ∫R²)⁺ over the run",
    ))
}

/// ∫|Rm|² ≤ 4∫|Ric|² + ∫R² + ĉ at one sampled time.
pub fn rm2_bound(run: &RunSeries, t: f64, c_hat: &Constant, tol: &Tolerances) -> Result<InequalityLedger, MonitorError> {
    let s = &run.snapshots[run.index_of(t)?];
    let lhs = s.integrate(|i| s.riemann_sq[i]);
    let rhs = s.integrate(|i| 4.0 * s.ricci_sq[i] + s.scalar[i] * s.scalar[i]) + c_hat.value;
    Ok(InequalityLedger::inequality("rm_l2_bound", lhs, rhs, tol.inequality)
        .with_param("t", t)
        .with_constant(c_hat.clone()))
}

/// Measures of Z_t, Ω_t, V_t and the Chebyshev bound on m(t) = Vol(Z_t).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuperlevelReport {
    pub t: f64,
    pub beta: f64,
    /// m(t) = Vol{R(V−t)^{1−2α} ≥ 1}
    pub z_measure: f64,
    /// Vol{R(V−t)^{1−α} ≥ 1}
    pub omega_measure: f64,
    /// Vol{R(V−t)^{1−α} ≤ 1}
    pub v_measure: f64,
    pub volume: f64,
    /// (V−t)^{(1−2α)(2+β)} ∫_{Z_t} |R|^{2+β}
    pub chebyshev_rhs: f64,
    pub holds: bool,
}

pub fn superlevel_measures(s: &Snapshot, ws: &WeightSpec) -> Result<SuperlevelReport, MonitorError> {
    if !(s.t < ws.v) {
        return Err(MonitorError::NotBeforeV { t: s.t, v: ws.v });
    }
    let a = ws.alpha;
    let beta = 4.0 * a;
    let gap = ws.v - s.t;
    let z_w = gap.powf(1.0 - 2.0 * a);
    let o_w = gap.powf(1.0 - a);
    let in_z = |i: usize| s.scalar[i] * z_w >= 1.0;
    let z_measure = s.integrate(|i| f64::from(u8::from(in_z(i))));
    let omega_measure = s.integrate(|i| f64::from(u8::from(s.scalar[i] * o_w >= 1.0)));
    let v_measure = s.integrate(|i| f64::from(u8::from(s.scalar[i] * o_w <= 1.0)));
    let z_power = s.integrate(|i| if in_z(i) { s.scalar[i].abs().powf(2.0 + beta) } else { 0.0 });
    let chebyshev_rhs = gap.powf((1.0 - 2.0 * a) * (2.0 + beta)) * z_power;
    let volume = s.volume();
    let slack = 1e-12 * volume;
    Ok(SuperlevelReport {
        t: s.t,
        beta,
        z_measure,
        omega_measure,
        v_measure,
        volume,
        chebyshev_rhs,
        holds: z_measure <= chebyshev_rhs * (1.0 + 1e-12) + slack && z_measure <= volume + slack,
    })
}

/// The Chebyshev bound at every sample with t < V.
pub fn superlevel_series(run: &RunSeries, ws: &WeightSpec) -> Result<Vec<SuperlevelReport>, MonitorError> {
    run.before(0.0, ws.v).iter().map(|s| superlevel_measures(s, ws)).collect()
}

/// Central difference of ∫_N f against the exact right side at the middle time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionResidual {
    pub t: f64,
    pub dt: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub terms: EvolutionTerms,
    pub residual: f64,
}

pub fn evolution_identity_residual(
    prev: &Snapshot,
    mid: &Snapshot,
    next: &Snapshot,
    ws: &WeightSpec,
) -> Result<EvolutionResidual, MonitorError> {
    let dt = 0.5 * (next.t - prev.t);
    if !(dt > 0.0) || ((mid.t - prev.t) - dt).abs() > 1e-9 * dt {
        return Err(MonitorError::InvalidParams("stencil times must be t − Δt, t, t + Δt".to_string()));
    }
    if !(next.t < ws.v) {
        return Err(MonitorError::NotBeforeV { t: next.t, v: ws.v });
    }
    let a = |s: &Snapshot| slice_terms(s, ws).map(|x| x.weighted_ricci);
    let lhs = (a(next)? - a(prev)?) / (2.0 * dt);
    let terms = evolution_terms(mid, ws)?;
    let rhs = terms.total();
    Ok(EvolutionResidual {
        t: mid.t,
        dt,
        lhs,
        rhs,
        terms,
        residual: (lhs - rhs).abs(),
    })
}

/// Samples t − Δt, t, t + Δt from the source (in that order) and evaluates the residual.
pub fn evolution_identity(
    source: &mut dyn FieldSource,
    ws: &WeightSpec,
    t: f64,
    dt: f64,
) -> Result<EvolutionResidual, MonitorError> {
    if !(t + dt < ws.v) {
        return Err(MonitorError::NotBeforeV { t: t + dt, v: ws.v });
    }
    let prev = source.snapshot(t - dt)?;
    let mid = source.snapshot(t)?;
    let next = source.snapshot(t + dt)?;
    evolution_identity_residual(&prev, &mid, &next, ws)
}

pub fn evolution_ledger(res: &EvolutionResidual, tol: &Tolerances) -> InequalityLedger {
    InequalityLedger::identity("evolution_identity", res.lhs, res.rhs, tol.identity)
        .with_param("t", res.t)
        .with_param("dt", res.dt)
        .with_param("residual", res.residual)
}
