use super::{
    fit_line, kahler_invariant, plain_time_integral, singular_time_integral, slice_terms, window_terms, Constant,
    HypothesisReport, InequalityLedger, MonitorError, RunSeries, Snapshot, Tolerances, WeightMode, WeightSpec,
};
use crate::quadrature::frozen_tail;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Fractions of V − r at which s is placed in the (r, s) grids; the last one
/// keeps s within 1e−3 of V for V ≤ 2.
pub const S_FRACTIONS: [f64; 5] = [0.1, 0.3, 0.6, 0.9, 1.0 - 5e-4];

/// 5 × 5 grid: r ∈ {0, 0.2, 0.4, 0.6, 0.8}·V, s = r + f(V − r) for f in [`S_FRACTIONS`].
pub fn rs_grid(v: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(25);
    for i in 0..5 {
        let r = v * i as f64 / 5.0;
        for f in S_FRACTIONS {
            out.push((r, r + (v - r) * f));
        }
    }
    out
}

/// Every r and s of a grid, for inclusion in the sampling times.
pub fn rs_knots(grid: &[(f64, f64)]) -> Vec<f64> {
    grid.iter().flat_map(|(r, s)| [*r, *s]).collect()
}

/// ĉ = sup_t |I₀(t)| over the samples before V; zero on closed N.
pub fn boundary_constant(run: &RunSeries, ws: &WeightSpec) -> Result<Constant, MonitorError> {
    if run.info.closed {
        return Ok(Constant::new("c_hat", 0.0, "closed N: no boundary term"));
    }
    let mut sup: f64 = 0.0;
    for s in run.before(0.0, ws.v) {
        sup = sup.max(slice_terms(s, ws)?.boundary_flux.abs());
    }
    Ok(Constant::new(
        "c_hat",
        sup,
        "measured sup_t |∫_∂N (∂_ν f + f⟨W,ν⟩)| over the sampled times",
    ))
}

fn check_order(r: f64, s: f64, ws: &WeightSpec) -> Result<(), MonitorError> {
    if !(r >= 0.0 && r <= s && s < ws.v) {
        return Err(MonitorError::InvalidParams(format!(
            "need 0 ≤ r ≤ s < V, got r = {r}, s = {s}, V = {}",
            ws.v
        )));
    }
    Ok(())
}

/// The first weighted estimate with b ≥ 10T/α. Both sides are divided by
/// e^{b(V−r)^α}; `scale_log` records the factor.
pub fn check_thm31(
    run: &RunSeries,
    ws: &WeightSpec,
    r: f64,
    s: f64,
    c_hat: &Constant,
    tol: &Tolerances,
) -> Result<InequalityLedger, MonitorError> {
    ws.validate(WeightMode::FirstEstimate)?;
    check_order(r, s, ws)?;
    let w = window_terms(run.window(r, s)?, ws)?;
    let (a, ab) = (ws.alpha, ws.alpha * ws.b);
    let e = |t: f64| ws.relative_exponential(t, r);
    let first = w[0];
    let last = w[w.len() - 1];
    let drift = singular_time_integral(&w, ws, a - 1.0, |x| e(x.t) * x.weighted_ricci)?;
    let quartic = singular_time_integral(&w, ws, 1.0 - a, |x| e(x.t) * x.quartic)?;
    let curvature = singular_time_integral(&w, ws, a - 1.0, |x| {
        e(x.t) * (8.0 * x.riemann_l2 + ws.horizon * x.scalar_pow_low)
    })?;
    let lhs = e(s) * last.weighted_ricci + 0.5 * ab * drift.value + 9.0 / 8.0 * quartic.value;
    let rhs = first.weighted_ricci + c_hat.value * (s - r) + curvature.value;
    let quad_err = [drift.error, quartic.error, curvature.error]
        .iter()
        .map(|x| x.unwrap_or(0.0))
        .fold(0.0, f64::max);
    let mut ledger = InequalityLedger::inequality("first_weighted_estimate", lhs, rhs, tol.inequality)
        .with_param("r", r)
        .with_param("s", s)
        .with_param("V", ws.v)
        .with_param("alpha", a)
        .with_param("b", ws.b)
        .with_param("T", ws.horizon)
        .with_param("scale_log", ws.exponential_log(r))
        .with_param("quadrature_error", quad_err)
        .with_constant(c_hat.clone());
    if r == s {
        ledger = ledger.with_note("r = s: both sides reduce to A(r)");
    }
    Ok(ledger)
}

/// sup_{x ≥ 0} (2000x² + T x^{2+4α} − x^{2+12α}): the constant c(α, T) that
/// trades the R² and R^{2+4α} integrals for the R^{2+12α} one.
pub fn scalar_trade_constant(alpha: f64, horizon: f64) -> f64 {
    // stationary point: with y = x^{4α}, (2+12α)y³ − T(2+4α)y − 4000 = 0
    let g = |y: f64| (2.0 + 12.0 * alpha) * y.powi(3) - horizon * (2.0 + 4.0 * alpha) * y - 4000.0;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while g(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x = (0.5 * (lo + hi)).powf(1.0 / (4.0 * alpha));
    (2000.0 * x * x + horizon * x.powf(2.0 + 4.0 * alpha) - x.powf(2.0 + 12.0 * alpha)).max(0.0)
}

/// ĉ₀ assembled as in the absorption argument: the boundary constant, the
/// |Rm|² constant of the Gauss–Bonnet or Kähler route, and the scalar trade.
pub fn main_constant(
    run: &RunSeries,
    ws: &WeightSpec,
    c_hat: &Constant,
    c_rm: &Constant,
) -> Result<Constant, MonitorError> {
    let a = ws.alpha;
    let mut vol_max: f64 = 0.0;
    for s in run.before(0.0, ws.v) {
        vol_max = vol_max.max(s.volume());
    }
    let trade = scalar_trade_constant(a, ws.horizon);
    let value = a * ws.horizon.powf(1.0 - a) * c_hat.value + 8.0 * c_rm.value + trade * vol_max;
    Ok(Constant::new(
        "c_hat_0",
        value,
        &format!(
            "αT^(1−α)·ĉ + 8·ĉ_rm + c(α,T)·sup Vol(N) with ĉ = {}, ĉ_rm = {}, c(α,T) = {trade}, sup Vol = {vol_max}",
            c_hat.value, c_rm.value
        ),
    ))
}

/// The main weighted estimate with b ≥ 2000T/α, divided by e^{b(V−r)^α}.
pub fn check_main(
    run: &RunSeries,
    ws: &WeightSpec,
    r: f64,
    s: f64,
    c_hat_0: &Constant,
    tol: &Tolerances,
) -> Result<InequalityLedger, MonitorError> {
    ws.validate(WeightMode::Main)?;
    check_order(r, s, ws)?;
    let w = window_terms(run.window(r, s)?, ws)?;
    let a = ws.alpha;
    let quartic = singular_time_integral(&w, ws, 1.0 - a, |x| x.quartic)?;
    let scalar = singular_time_integral(&w, ws, a - 1.0, |x| x.scalar_pow_high)?;
    let raw_lhs = w[w.len() - 1].weighted_ricci + 0.5 * quartic.value;
    let scale_log = ws.exponential_log(r);
    let lhs = raw_lhs * (-scale_log).exp();
    let rhs = c_hat_0.value * (s - r).powf(a) / a + w[0].weighted_ricci + scalar.value;
    Ok(InequalityLedger::inequality("main_weighted_estimate", lhs, rhs, tol.inequality)
        .with_param("r", r)
        .with_param("s", s)
        .with_param("V", ws.v)
        .with_param("alpha", a)
        .with_param("b", ws.b)
        .with_param("T", ws.horizon)
        .with_param("scale_log", scale_log)
        .with_param("lhs_unscaled", raw_lhs)
        .with_constant(c_hat_0.clone()))
}

/// Ledgers of one theorem over a list of (r, s) pairs, evaluated in parallel
/// and returned in input order.
pub fn ledger_grid(
    grid: &[(f64, f64)],
    eval: impl Fn(f64, f64) -> Result<InequalityLedger, MonitorError> + Sync,
) -> Result<Vec<InequalityLedger>, MonitorError> {
    grid.par_iter().map(|(r, s)| eval(*r, *s)).collect()
}

/// sup_l ∫_N |Rm|² over the run and its relative spread.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiemannL2Series {
    pub sup: f64,
    pub min: f64,
    pub relative_spread: f64,
}

pub fn riemann_l2_series(run: &RunSeries) -> RiemannL2Series {
    let vals: Vec<f64> = run.snapshots.iter().map(|s| s.integrate(|i| s.riemann_sq[i])).collect();
    let sup = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    RiemannL2Series {
        sup,
        min,
        relative_spread: if sup != 0.0 { (sup - min) / sup.abs() } else { 0.0 },
    }
}

/// Slab-ball integral of |Ric|⁴ over [V − 2s, V − s] and the sup of |Ric|² there.
fn slab_ball(run: &RunSeries, ws: &WeightSpec, s: f64, radius: f64) -> Result<(f64, f64), MonitorError> {
    if !(s > 0.0 && s < 1.0 && ws.v - 3.0 * s > 0.0) {
        return Err(MonitorError::InvalidParams(format!(
            "slab needs s ∈ (0, 1) and V − 3s > 0, got s = {s}, V = {}",
            ws.v
        )));
    }
    let w = run.window(ws.v - 2.0 * s, ws.v - s)?;
    let mut t = Vec::with_capacity(w.len());
    let mut v = Vec::with_capacity(w.len());
    let mut sup: f64 = 0.0;
    for snap in w {
        t.push(snap.t);
        v.push(snap.ball_integral(radius, |i| snap.ricci_sq[i] * snap.ricci_sq[i])?);
        sup = sup.max(snap.ball_sup(radius, |i| snap.ricci_sq[i]));
    }
    Ok((plain_time_integral(&t, &v)?.value, sup))
}

fn slab_denominator(s: f64, alpha: f64, sup: f64) -> f64 {
    s.powf(alpha - 1.0) + sup * s.powf(1.0 + alpha)
}

/// ĉ₁: the smallest constant passing (i) over the run and (ii) at the
/// calibration slabs, frozen for later checks.
pub fn calibrate_c1(
    run: &RunSeries,
    ws: &WeightSpec,
    slabs: &[f64],
    radius: f64,
) -> Result<Constant, MonitorError> {
    let mut c = riemann_l2_series(run).sup;
    for s in slabs {
        let (lhs, sup) = slab_ball(run, ws, *s, radius)?;
        c = c.max(lhs / slab_denominator(*s, ws.alpha, sup));
    }
    Ok(Constant::new(
        "c_hat_1",
        c,
        &format!("calibrated: max of sup_l ∫|Rm|² and the slab ratios at s ∈ {slabs:?}, radius {radius}"),
    ))
}

/// (i): ∫_N |Rm|² ≤ ĉ₁ for every sampled l.
pub fn check_rm_l2_uniform(
    run: &RunSeries,
    c1: &Constant,
    hyp: &HypothesisReport,
    tol: &Tolerances,
) -> InequalityLedger {
    let series = riemann_l2_series(run);
    let l = InequalityLedger::inequality("rm_l2_uniform", series.sup, c1.value, tol.inequality)
        .with_param("min", series.min)
        .with_param("relative_spread", series.relative_spread)
        .with_constant(c1.clone());
    if hyp.satisfied {
        l
    } else {
        l.withhold("hypotheses violated: C₀ bound or setting (B) fails")
    }
}

/// (ii): ∫_{V−2s}^{V−s} ∫_{N∩B(p,ρ)} |Ric|⁴ ≤ ĉ₁(s^{α−1} + sup|Ric|² s^{1+α}).
pub fn check_ricci_l4_slab(
    run: &RunSeries,
    ws: &WeightSpec,
    s: f64,
    radius: f64,
    c1: &Constant,
    hyp: &HypothesisReport,
    tol: &Tolerances,
) -> Result<InequalityLedger, MonitorError> {
    let (lhs, sup) = slab_ball(run, ws, s, radius)?;
    let rhs = c1.value * slab_denominator(s, ws.alpha, sup);
    let l = InequalityLedger::inequality("ricci_l4_slab", lhs, rhs, tol.inequality)
        .with_param("s", s)
        .with_param("radius", radius)
        .with_param("V", ws.v)
        .with_param("alpha", ws.alpha)
        .with_param("sup_ricci_sq", sup)
        .with_constant(c1.clone());
    Ok(if hyp.satisfied {
        l
    } else {
        l.withhold("hypotheses violated: C₀ bound or setting (B) fails")
    })
}

/// σ and the exponents derived from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theorem15Params {
    pub alpha: f64,
    pub sigma: f64,
    pub eps_sigma: f64,
    pub beta_sigma: f64,
    pub v_exponent: f64,
}

impl Theorem15Params {
    pub fn new(alpha: f64, sigma: f64) -> Result<Self, MonitorError> {
        if !(sigma > 0.0 && sigma <= alpha.powi(3)) {
            return Err(MonitorError::InvalidParams(format!("need 0 < σ ≤ α³, got σ = {sigma}, α = {alpha}")));
        }
        let eps_sigma = 2.0 * sigma * (1.0 - alpha) / (2.0 - sigma);
        let beta_sigma = 4.0 * sigma / (2.0 - sigma);
        let v_exponent = (12.0 * alpha - beta_sigma) / (2.0 + beta_sigma);
        if !(v_exponent > 5.5 * alpha && v_exponent < 6.0 * alpha) {
            return Err(MonitorError::InvalidParams(format!(
                "v = {v_exponent} outside (11α/2, 6α)"
            )));
        }
        Ok(Self {
            alpha,
            sigma,
            eps_sigma,
            beta_sigma,
            v_exponent,
        })
    }

    /// 1 + α/16
    pub fn target_slope(&self) -> f64 {
        1.0 + self.alpha / 16.0
    }
}

fn decay_integrand(s: &Snapshot, v: f64, sigma: f64) -> Result<f64, MonitorError> {
    let radius = (v - s.t).max(0.0).sqrt();
    s.ball_integral(radius, |i| s.ricci_sq[i].powf(1.0 + 0.5 * sigma))
}

/// ∫_S^V ∫_{B(p,√(V−t))} |Ric|^{2+σ}: trapezoid on the samples in [S, V) and
/// the frozen last value on the terminal gap. Returns (value, tail).
pub fn ball_decay_integral(run: &RunSeries, v: f64, start: f64, sigma: f64) -> Result<(f64, f64), MonitorError> {
    run.index_of(start)?;
    let w = run.before(start, v);
    if w.is_empty() {
        return Err(MonitorError::TimeNotSampled(start));
    }
    let t: Vec<f64> = w.iter().map(|s| s.t).collect();
    let vals = w.iter().map(|s| decay_integrand(s, v, sigma)).collect::<Result<Vec<_>, _>>()?;
    let body = plain_time_integral(&t, &vals)?.value;
    let tail = frozen_tail(vals[vals.len() - 1], t[t.len() - 1], v, 0.0);
    Ok((body + tail, tail))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonInflatingReport {
    pub params: Theorem15Params,
    pub gaps: Vec<f64>,
    pub lhs: Vec<f64>,
    pub tails: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    /// smallest ĉ₂ with LHS(S) ≤ ĉ₂ (V−S)^{1+α/16} on the ladder
    pub c2: f64,
    pub sigma1: f64,
    pub ledger: InequalityLedger,
}

/// LHS(S) on a ladder of S values and its log-log slope in V − S. The verdict
/// (slope ≥ 1 + α/16 − fit_tol) is only rendered on hypothesis-satisfying runs.
pub fn check_noninflating(
    run: &RunSeries,
    v: f64,
    ladder: &[f64],
    params: Theorem15Params,
    hyp: &HypothesisReport,
    fit_tol: f64,
) -> Result<NonInflatingReport, MonitorError> {
    if ladder.len() < 4 {
        return Err(MonitorError::DegenerateFit(ladder.len()));
    }
    let mut gaps = Vec::with_capacity(ladder.len());
    let mut lhs = Vec::with_capacity(ladder.len());
    let mut tails = Vec::with_capacity(ladder.len());
    for start in ladder {
        let (val, tail) = ball_decay_integral(run, v, *start, params.sigma)?;
        gaps.push(v - start);
        lhs.push(val);
        tails.push(tail);
    }
    let x: Vec<f64> = gaps.iter().map(|g| g.ln()).collect();
    let y: Vec<f64> = lhs.iter().map(|l| l.ln()).collect();
    let (slope, intercept) = fit_line(&x, &y)?;
    let target = params.target_slope();
    let c2 = gaps
        .iter()
        .zip(&lhs)
        .map(|(g, l)| l / g.powf(target))
        .fold(0.0, f64::max);
    let mut ledger = InequalityLedger::inequality("ricci_ball_decay", target - fit_tol, slope, 0.0)
        .with_param("V", v)
        .with_param("alpha", params.alpha)
        .with_param("sigma", params.sigma)
        .with_param("fit_tol", fit_tol)
        .with_param("slope", slope)
        .with_param("v_exponent", params.v_exponent)
        .with_constant(Constant::new("c_hat_2", c2, "smallest constant on the ladder"))
        .with_constant(Constant::new("sigma_1", hyp.sigma1, "sup_t Vol(B(p,√(V−t)))/(V−t)²"));
    if !hyp.satisfied {
        ledger = ledger.withhold("hypotheses violated: report only");
    }
    Ok(NonInflatingReport {
        params,
        gaps,
        lhs,
        tails,
        slope,
        intercept,
        c2,
        sigma1: hyp.sigma1,
        ledger,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VLadderReport {
    pub start: f64,
    pub v_values: Vec<f64>,
    pub lhs: Vec<f64>,
    pub monotone: bool,
}

/// LHS(S, V) for increasing V at fixed S; it must not decrease.
pub fn v_ladder(run: &RunSeries, start: f64, v_values: &[f64], sigma: f64) -> Result<VLadderReport, MonitorError> {
    let mut vs = v_values.to_vec();
    vs.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let lhs = vs
        .iter()
        .map(|v| ball_decay_integral(run, *v, start, sigma).map(|x| x.0))
        .collect::<Result<Vec<_>, _>>()?;
    let monotone = lhs.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12));
    Ok(VLadderReport {
        start,
        v_values: vs,
        lhs,
        monotone,
    })
}

fn kahler_gate(run: &RunSeries) -> Result<(), MonitorError> {
    match run.info.kahler_dimension {
        None => Err(MonitorError::OutOfScope(format!("run '{}' is not Kähler", run.info.label))),
        Some(2) => Ok(()),
        Some(_) => Err(MonitorError::OutOfScope("C(t) general-n out of scope".to_string())),
    }
}

/// The boundary term C(t). It vanishes on closed N, and on the homogeneous
/// Kähler scenarios β and the potentials' derivatives vanish identically.
pub fn boundary_term(run: &RunSeries, _t: f64) -> Result<(f64, &'static str), MonitorError> {
    kahler_gate(run)?;
    Ok(if run.info.closed {
        (0.0, "closed N")
    } else {
        (0.0, "β, d^c f, ∂∂̄f, d^cφ vanish for spatially constant potentials")
    })
}

/// ∫|Rm|² − ∫R² = ∫(|Rm₀|² − R₀²) + C(t) at complex dimension 2.
pub fn check_kahler_l2(run: &RunSeries, t: f64, tol: &Tolerances) -> Result<InequalityLedger, MonitorError> {
    let (c, note) = boundary_term(run, t)?;
    let k0 = kahler_invariant(&run.snapshots[run.index_of(0.0)?]);
    let kt = kahler_invariant(&run.snapshots[run.index_of(t)?]);
    let lhs = kt - c;
    Ok(InequalityLedger::identity("kahler_l2_formula", lhs, k0, tol.identity)
        .with_param("t", t)
        .with_param("residual", (lhs - k0).abs())
        .with_param("invariant", kt)
        .with_constant(Constant::new("C_t", c, note)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryTermReport {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub running_sup: Vec<f64>,
    pub sup: f64,
    pub ledger: InequalityLedger,
}

/// |C(t)| over the run and its running supremum; bounded iff finite.
pub fn check_c_bounded(run: &RunSeries) -> Result<BoundaryTermReport, MonitorError> {
    let times = run.times();
    let values = times
        .iter()
        .map(|t| boundary_term(run, *t).map(|x| x.0.abs()))
        .collect::<Result<Vec<_>, _>>()?;
    let mut acc: f64 = 0.0;
    let running_sup: Vec<f64> = values
        .iter()
        .map(|v| {
            acc = acc.max(*v);
            acc
        })
        .collect();
    let sup = acc;
    let ledger = InequalityLedger::inequality("kahler_boundary_constant", sup, f64::MAX, 0.0)
        .with_param("sup", sup)
        .with_note("bounded on the run window iff finite");
    Ok(BoundaryTermReport {
        times,
        values,
        running_sup,
        sup,
        ledger,
    })
}
