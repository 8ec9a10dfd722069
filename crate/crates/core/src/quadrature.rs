//! Spatial and temporal quadrature.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("sample times are not strictly increasing at index {0}")]
    NonMonotone(usize),
    #[error("Simpson's rule needs an odd number of uniformly spaced points, got {0}")]
    SimpsonPointCount(usize),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("integration interval reaches the weight singularity at {0}")]
    WeightSingularity(f64),
    #[error("region index {index} outside grid of {len} points")]
    OutsideDomain { index: usize, len: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RadialRule {
    Trapezoid,
    Simpson,
}

/// An integral with its error estimate when one is available.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: Option<f64>,
}

/// Weights w_i with ∫ f dx ≈ Σ w_i f(x_i) over the whole grid.
pub fn radial_weights(x: &[f64], rule: RadialRule) -> Result<Vec<f64>, QuadratureError> {
    let n = x.len();
    if n < 2 {
        return Err(QuadratureError::TooFewSamples { need: 2, got: n });
    }
    check_monotone(x)?;
    let mut w = vec![0.0; n];
    match rule {
        RadialRule::Trapezoid => {
            for i in 0..n - 1 {
                let h = x[i + 1] - x[i];
                w[i] += h / 2.0;
                w[i + 1] += h / 2.0;
            }
        }
        RadialRule::Simpson => {
            if n % 2 == 0 {
                return Err(QuadratureError::SimpsonPointCount(n));
            }
            let h = (x[n - 1] - x[0]) / (n - 1) as f64;
            let uniform = x
                .windows(2)
                .all(|p| ((p[1] - p[0]) - h).abs() <= 1e-9 * h.abs().max(1.0));
            if !uniform {
                return Err(QuadratureError::SimpsonPointCount(n));
            }
            for (i, wi) in w.iter_mut().enumerate() {
                *wi = h / 3.0
                    * if i == 0 || i == n - 1 {
                        1.0
                    } else if i % 2 == 1 {
                        4.0
                    } else {
                        2.0
                    };
            }
        }
    }
    Ok(w)
}

fn check_monotone(t: &[f64]) -> Result<(), QuadratureError> {
    for i in 1..t.len() {
        if !(t[i] > t[i - 1]) {
            return Err(QuadratureError::NonMonotone(i));
        }
    }
    Ok(())
}

/// Σ w_i f_i.
pub fn integrate_weighted(field: &[f64], weights: &[f64]) -> Result<f64, QuadratureError> {
    if field.len() != weights.len() {
        return Err(QuadratureError::LengthMismatch(field.len(), weights.len()));
    }
    Ok(field.iter().zip(weights).map(|(f, w)| f * w).sum())
}

/// Integral over a radial region {x ≤ x_end} of a warped grid, using the
/// trapezoid or Simpson rule in x with density ρ(x) (e.g. 2π²ψ³φ).
pub fn integrate_radial_region(
    x: &[f64],
    integrand: &[f64],
    end_index: usize,
    rule: RadialRule,
) -> Result<Estimate, QuadratureError> {
    if end_index >= x.len() {
        return Err(QuadratureError::OutsideDomain {
            index: end_index,
            len: x.len(),
        });
    }
    if integrand.len() != x.len() {
        return Err(QuadratureError::LengthMismatch(integrand.len(), x.len()));
    }
    let x = &x[..=end_index];
    let f = &integrand[..=end_index];
    let w = radial_weights(x, rule)?;
    let value = integrate_weighted(f, &w)?;
    // compare against the rule on every other point
    let error = if x.len() >= 5 && (x.len() - 1) % 2 == 0 {
        let xc: Vec<f64> = x.iter().step_by(2).copied().collect();
        let fc: Vec<f64> = f.iter().step_by(2).copied().collect();
        let coarse_rule = if xc.len() % 2 == 1 { rule } else { RadialRule::Trapezoid };
        let wc = radial_weights(&xc, coarse_rule)?;
        let coarse = integrate_weighted(&fc, &wc)?;
        let order_factor = if coarse_rule == RadialRule::Simpson { 15.0 } else { 3.0 };
        Some((value - coarse).abs() / order_factor)
    } else {
        None
    };
    Ok(Estimate { value, error })
}

/// Homogeneous fields integrate exactly as value × volume.
pub fn integrate_homogeneous(value: f64, volume: f64) -> f64 {
    value * volume
}

/// Boundary integral of a field value over a boundary of the given area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryIntegral {
    pub value: f64,
    pub note: Option<String>,
}

pub fn boundary_integral(value: f64, area: Option<f64>) -> BoundaryIntegral {
    match area {
        Some(a) => BoundaryIntegral {
            value: value * a,
            note: None,
        },
        None => BoundaryIntegral {
            value: 0.0,
            note: Some("no boundary".to_string()),
        },
    }
}

/// Trapezoid rule over (t, v) samples with a Richardson error estimate from
/// the rule on every other sample.
pub fn time_integrate(t: &[f64], v: &[f64]) -> Result<Estimate, QuadratureError> {
    if t.len() != v.len() {
        return Err(QuadratureError::LengthMismatch(t.len(), v.len()));
    }
    if t.len() < 2 {
        return Err(QuadratureError::TooFewSamples { need: 2, got: t.len() });
    }
    check_monotone(t)?;
    let trap = |t: &[f64], v: &[f64]| -> f64 {
        t.windows(2)
            .zip(v.windows(2))
            .map(|(tt, vv)| 0.5 * (tt[1] - tt[0]) * (vv[0] + vv[1]))
            .sum()
    };
    let value = trap(t, v);
    let error = coarse_pair(t, v).map(|(tc, vc)| (value - trap(&tc, &vc)).abs() / 3.0);
    Ok(Estimate { value, error })
}

fn coarse_pair(t: &[f64], v: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
    if t.len() < 3 || (t.len() - 1) % 2 != 0 {
        return None;
    }
    Some((
        t.iter().step_by(2).copied().collect(),
        v.iter().step_by(2).copied().collect(),
    ))
}

/// ∫ (V − t)^γ h(t) dt by product integration: h is interpolated linearly on
/// each interval and integrated exactly against the weight.
pub fn weighted_time_integrate(
    t: &[f64],
    h: &[f64],
    v_end: f64,
    gamma: f64,
) -> Result<Estimate, QuadratureError> {
    if t.len() != h.len() {
        return Err(QuadratureError::LengthMismatch(t.len(), h.len()));
    }
    if t.len() < 2 {
        return Err(QuadratureError::TooFewSamples { need: 2, got: t.len() });
    }
    check_monotone(t)?;
    if t[t.len() - 1] > v_end || (gamma < 0.0 && t[t.len() - 1] >= v_end) {
        return Err(QuadratureError::WeightSingularity(v_end));
    }
    let value = product_rule(t, h, v_end, gamma);
    let error = coarse_pair(t, h).map(|(tc, hc)| (value - product_rule(&tc, &hc, v_end, gamma)).abs() / 3.0);
    Ok(Estimate { value, error })
}

fn product_rule(t: &[f64], h: &[f64], v_end: f64, gamma: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..t.len() - 1 {
        let (ua, ub) = (v_end - t[i], v_end - t[i + 1]);
        let m0 = (ua.powf(gamma + 1.0) - ub.powf(gamma + 1.0)) / (gamma + 1.0);
        let m1 = (ua.powf(gamma + 2.0) - ub.powf(gamma + 2.0)) / (gamma + 2.0);
        let dt = ua - ub;
        // ∫ w (b − t) and ∫ w (t − a)
        let left = m1 - ub * m0;
        let right = ua * m0 - m1;
        acc += (h[i] * left + h[i + 1] * right) / dt;
    }
    acc
}

/// ∫_{t_last}^{V} (V − t)^γ dt × frozen value.
pub fn frozen_tail(value: f64, t_last: f64, v_end: f64, gamma: f64) -> f64 {
    value * (v_end - t_last).max(0.0).powf(gamma + 1.0) / (gamma + 1.0)
}

/// Uniform points on [t0, t1] merged with geometric points toward `v_end`
/// (gaps v_end − t from `t1`'s gap down to `min_gap`), plus extra knots.
pub fn graded_grid(
    t0: f64,
    t1: f64,
    n_uniform: usize,
    v_end: f64,
    min_gap: f64,
    n_geometric: usize,
    knots: &[f64],
) -> Vec<f64> {
    let mut pts: Vec<f64> = (0..=n_uniform)
        .map(|i| t0 + (t1 - t0) * i as f64 / n_uniform.max(1) as f64)
        .collect();
    let top_gap = v_end - t1;
    if n_geometric > 0 && top_gap > min_gap && min_gap > 0.0 {
        let ratio = (min_gap / top_gap).powf(1.0 / n_geometric as f64);
        for k in 1..=n_geometric {
            pts.push(v_end - top_gap * ratio.powi(k as i32));
        }
    }
    pts.extend(knots.iter().copied().filter(|k| *k >= t0 && *k < v_end));
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite grid points"));
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * (1.0 + b.abs()));
    pts
}
