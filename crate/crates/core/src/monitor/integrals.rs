use super::{weight_l, MonitorError, Snapshot, WeightSpec};
use crate::quadrature::{time_integrate, weighted_time_integrate, Estimate};
use serde::{Deserialize, Serialize};

/// Spatial integrals over N at one time for a fixed weight choice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceTerms {
    pub t: f64,
    /// A(t) = ∫ |Ric|²/L_V
    pub weighted_ricci: f64,
    /// ∫ |Ric|⁴/L_V²
    pub quartic: f64,
    pub riemann_l2: f64,
    pub ricci_l2: f64,
    pub scalar_l2: f64,
    /// ∫ |R|^{2+4α}
    pub scalar_pow_low: f64,
    /// ∫ |R|^{2+12α}
    pub scalar_pow_high: f64,
    pub volume: f64,
    /// Total boundary contribution to d/dt ∫_N f: ∫_∂N (∂_ν f + f⟨W, ν⟩).
    pub boundary_flux: f64,
    pub min_l_minus_v: f64,
}

pub fn slice_terms(s: &Snapshot, ws: &WeightSpec) -> Result<SliceTerms, MonitorError> {
    let l = weight_l(&s.scalar, ws, s.t)?;
    let a = ws.alpha;
    let rp = |i: usize, e: f64| s.scalar[i].abs().powf(e);
    let boundary_flux = match s.boundary {
        None => 0.0,
        Some(b) => {
            let w = ws.weight_factor(s.t);
            let lb = 2.0 * ws.v + b.scalar * w;
            let f = b.ricci_sq / lb;
            let dn_f = b.dn_ricci_sq / lb - b.ricci_sq * w * b.dn_scalar / (lb * lb);
            (dn_f + f * b.speed) * b.area
        }
    };
    let terms = SliceTerms {
        t: s.t,
        weighted_ricci: s.integrate(|i| s.ricci_sq[i] / l[i]),
        quartic: s.integrate(|i| s.ricci_sq[i] * s.ricci_sq[i] / (l[i] * l[i])),
        riemann_l2: s.integrate(|i| s.riemann_sq[i]),
        ricci_l2: s.integrate(|i| s.ricci_sq[i]),
        scalar_l2: s.integrate(|i| s.scalar[i] * s.scalar[i]),
        scalar_pow_low: s.integrate(|i| rp(i, 2.0 + 4.0 * a)),
        scalar_pow_high: s.integrate(|i| rp(i, 2.0 + 12.0 * a)),
        volume: s.volume(),
        boundary_flux,
        min_l_minus_v: l.iter().map(|x| x - ws.v).fold(f64::INFINITY, f64::min),
    };
    let all = [
        terms.weighted_ricci,
        terms.quartic,
        terms.riemann_l2,
        terms.scalar_pow_high,
        terms.boundary_flux,
    ];
    if all.iter().any(|v| !v.is_finite()) {
        return Err(MonitorError::NonFinite(format!("spatial integrals at t = {}", s.t)));
    }
    Ok(terms)
}

/// All slice terms of a window, in time order.
pub fn window_terms(window: &[Snapshot], ws: &WeightSpec) -> Result<Vec<SliceTerms>, MonitorError> {
    window.iter().map(|s| slice_terms(s, ws)).collect()
}

/// ∫ (V − t)^γ h(t) dt over the window samples; zero for a single sample.
pub fn singular_time_integral(
    terms: &[SliceTerms],
    ws: &WeightSpec,
    gamma: f64,
    h: impl Fn(&SliceTerms) -> f64,
) -> Result<Estimate, MonitorError> {
    if terms.len() < 2 {
        return Ok(Estimate { value: 0.0, error: Some(0.0) });
    }
    let t: Vec<f64> = terms.iter().map(|x| x.t).collect();
    let v: Vec<f64> = terms.iter().map(h).collect();
    Ok(weighted_time_integrate(&t, &v, ws.v, gamma)?)
}

/// Plain trapezoid ∫ g(t) dt over (t, value) samples; zero for one sample.
pub fn plain_time_integral(t: &[f64], v: &[f64]) -> Result<Estimate, MonitorError> {
    if t.len() < 2 {
        return Ok(Estimate { value: 0.0, error: Some(0.0) });
    }
    Ok(time_integrate(t, v)?)
}

/// The right side of the exact evolution identity for ∫_N f, term by term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionTerms {
    /// ∫_N Δf = ∫_∂N ∂_ν f
    pub divergence: f64,
    /// ∫_∂N f⟨W, ν⟩ from the motion of the sampled region
    pub transport: f64,
    /// −2∫|P|²/L³
    pub gradient: f64,
    /// 4∫Rm(Ric, Ric)/L
    pub curvature: f64,
    /// −2∫|Ric|⁴(V−t)^{1−α}/L²
    pub quartic: f64,
    /// (1−α)∫|Ric|² R (V−t)^{−α}/L²
    pub weight_drift: f64,
    /// −∫R|Ric|²/L
    pub volume_change: f64,
}

impl EvolutionTerms {
    pub fn total(&self) -> f64 {
        self.divergence
            + self.transport
            + self.gradient
            + self.curvature
            + self.quartic
            + self.weight_drift
            + self.volume_change
    }
}

/// |P|² with P = L∇Ric − ∇(wR)⊗Ric, w = (V−t)^{1−α}, for radial gradients.
pub fn p_norm_sq(s: &Snapshot, i: usize, l: f64, w: f64) -> f64 {
    let grad_r2 = s.d_scalar[i] * s.d_scalar[i];
    let cross = s.d_ricci_sq[i] * s.d_scalar[i];
    s.grad_ricci_sq[i] * l * l - l * w * cross + w * w * grad_r2 * s.ricci_sq[i]
}

pub fn evolution_terms(s: &Snapshot, ws: &WeightSpec) -> Result<EvolutionTerms, MonitorError> {
    let l = weight_l(&s.scalar, ws, s.t)?;
    let a = ws.alpha;
    let w = ws.weight_factor(s.t);
    let drift = (1.0 - a) * (ws.v - s.t).powf(-a);
    let (divergence, transport) = match s.boundary {
        None => (0.0, 0.0),
        Some(b) => {
            let lb = 2.0 * ws.v + b.scalar * w;
            let dn_f = b.dn_ricci_sq / lb - b.ricci_sq * w * b.dn_scalar / (lb * lb);
            (dn_f * b.area, b.ricci_sq / lb * b.speed * b.area)
        }
    };
    Ok(EvolutionTerms {
        divergence,
        transport,
        gradient: -2.0 * s.integrate(|i| p_norm_sq(s, i, l[i], w) / l[i].powi(3)),
        curvature: 4.0 * s.integrate(|i| s.rm_ric_ric[i] / l[i]),
        quartic: -2.0 * w * s.integrate(|i| s.ricci_sq[i] * s.ricci_sq[i] / (l[i] * l[i])),
        weight_drift: drift * s.integrate(|i| s.ricci_sq[i] * s.scalar[i] / (l[i] * l[i])),
        volume_change: -s.integrate(|i| s.scalar[i] * s.ricci_sq[i] / l[i]),
    })
}
