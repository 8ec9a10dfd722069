//! Weighted curvature integrals, hypothesis checks and inequality ledgers
//! evaluated on sampled Ricci-flow runs.
//!
//! Everything here is pure given a [`RunSeries`]: a run is sampled once on a
//! time grid that contains every time a ledger will need, and the checks
//! integrate over those samples.

mod checks;
mod integrals;
mod source;
mod theorems;

pub use checks::*;
pub use integrals::*;
pub use source::*;
pub use theorems::*;

use crate::quadrature::QuadratureError;
use crate::scenarios::ScenarioError;
use crate::warped::FlowError;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MonitorError {
    #[error("time {t} is not before V = {v}")]
    NotBeforeV { t: f64, v: f64 },
    #[error("invalid weight parameters: {0}")]
    InvalidParams(String),
    #[error("time {0} was not sampled in this run")]
    TimeNotSampled(f64),
    #[error("samples requested out of order: {requested} after {current}")]
    OutOfOrder { requested: f64, current: f64 },
    #[error("{0}")]
    OutOfScope(String),
    #[error("degenerate fit: {0} points, need at least 4")]
    DegenerateFit(usize),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("ball outside region: {0}")]
    BallOutsideRegion(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// Which lower bound on b the weight must satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightMode {
    /// b ≥ 10T/α
    FirstEstimate,
    /// b ≥ 2000T/α
    Main,
}

impl WeightMode {
    pub fn factor(self) -> f64 {
        match self {
            WeightMode::FirstEstimate => 10.0,
            WeightMode::Main => 2000.0,
        }
    }
}

/// V, α, the exponential rate b and the horizon T of the weighted estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub v: f64,
    pub alpha: f64,
    pub b: f64,
    pub horizon: f64,
}

impl WeightSpec {
    /// The smallest admissible b for the mode.
    pub fn new(v: f64, alpha: f64, horizon: f64, mode: WeightMode) -> Result<Self, MonitorError> {
        let ws = Self {
            v,
            alpha,
            b: mode.factor() * horizon / alpha,
            horizon,
        };
        ws.validate(mode)?;
        Ok(ws)
    }

    pub fn validate(&self, mode: WeightMode) -> Result<(), MonitorError> {
        let bad = |m: String| Err(MonitorError::InvalidParams(m));
        if !(self.alpha > 0.0 && self.alpha < 1.0 / 12.0) {
            return bad(format!("α = {} outside (0, 1/12)", self.alpha));
        }
        if !(self.v >= 1.0 && self.v <= self.horizon && self.horizon.is_finite()) {
            return bad(format!("need 1 ≤ V ≤ T, got V = {}, T = {}", self.v, self.horizon));
        }
        let floor = mode.factor() * self.horizon / self.alpha;
        if !(self.b >= floor * (1.0 - 1e-12)) {
            return bad(format!("b = {} below {floor} for {mode:?}", self.b));
        }
        Ok(())
    }

    /// (V − t)^{1−α}
    pub fn weight_factor(&self, t: f64) -> f64 {
        (self.v - t).max(0.0).powf(1.0 - self.alpha)
    }

    /// e^{b((V−t)^α − (V−r)^α)}: the exponential weight relative to its value at r.
    pub fn relative_exponential(&self, t: f64, r: f64) -> f64 {
        let a = self.alpha;
        (self.b * ((self.v - t).max(0.0).powf(a) - (self.v - r).max(0.0).powf(a))).exp()
    }

    /// log e^{b(V−r)^α}
    pub fn exponential_log(&self, r: f64) -> f64 {
        self.b * (self.v - r).max(0.0).powf(self.alpha)
    }
}

/// L_V(t) = 2V + R(V−t)^{1−α} at every point.
pub fn weight_l(scalar: &[f64], ws: &WeightSpec, t: f64) -> Result<Vec<f64>, MonitorError> {
    if !(t < ws.v) {
        return Err(MonitorError::NotBeforeV { t, v: ws.v });
    }
    let w = ws.weight_factor(t);
    let l: Vec<f64> = scalar.iter().map(|r| 2.0 * ws.v + r * w).collect();
    for (r, l) in scalar.iter().zip(&l) {
        if *r >= -1.0 && *l < ws.v * (1.0 - 1e-12) {
            return Err(MonitorError::InvalidParams(format!(
                "L_V = {l} < V = {} although R = {r} ≥ −1",
                ws.v
            )));
        }
    }
    Ok(l)
}

/// Relative verdict tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub identity: f64,
    pub inequality: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            identity: 1e-6,
            inequality: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    /// No verdict: the run violates a hypothesis or the check is report-only.
    NotRendered,
}

/// A constant entering a ledger together with how it was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constant {
    pub name: String,
    pub value: f64,
    pub note: String,
}

impl Constant {
    pub fn new(name: &str, value: f64, note: &str) -> Self {
        Self {
            name: name.to_string(),
            value,
            note: note.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityLedger {
    pub theorem: String,
    pub params: BTreeMap<String, f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub constants: Vec<Constant>,
    pub margin: f64,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl InequalityLedger {
    /// LHS ≤ RHS with relative tolerance `tol`.
    pub fn inequality(theorem: &str, lhs: f64, rhs: f64, tol: f64) -> Self {
        let margin = rhs - lhs;
        let verdict = if !(lhs.is_finite() && rhs.is_finite()) {
            Verdict::Fail
        } else if margin >= -tol * rhs.abs() {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        Self {
            theorem: theorem.to_string(),
            params: BTreeMap::new(),
            lhs,
            rhs,
            constants: Vec::new(),
            margin,
            verdict,
            notes: Vec::new(),
        }
    }

    /// |LHS − RHS| ≤ tol·|RHS|; the margin is −|LHS − RHS|.
    pub fn identity(theorem: &str, lhs: f64, rhs: f64, tol: f64) -> Self {
        let mut l = Self::inequality(theorem, lhs, rhs, tol);
        l.margin = -(lhs - rhs).abs();
        l.verdict = if l.margin.is_finite() && l.margin >= -tol * rhs.abs().max(1.0) {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        l
    }

    pub fn with_param(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }

    pub fn with_constant(mut self, c: Constant) -> Self {
        self.constants.push(c);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn withhold(mut self, reason: impl Into<String>) -> Self {
        self.verdict = Verdict::NotRendered;
        self.notes.push(reason.into());
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Ordinary least-squares slope and intercept of y on x.
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<(f64, f64), MonitorError> {
    let n = x.len().min(y.len());
    if n < 4 {
        return Err(MonitorError::DegenerateFit(n));
    }
    let mx = x[..n].iter().sum::<f64>() / n as f64;
    let my = y[..n].iter().sum::<f64>() / n as f64;
    let sxy: f64 = x[..n].iter().zip(&y[..n]).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x[..n].iter().map(|a| (a - mx) * (a - mx)).sum();
    if !(sxx > 0.0) {
        return Err(MonitorError::DegenerateFit(n));
    }
    let slope = sxy / sxx;
    if !slope.is_finite() {
        return Err(MonitorError::NonFinite("log-log fit".to_string()));
    }
    Ok((slope, my - slope * mx))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_examples() {
        let ws = WeightSpec {
            v: 1.0,
            alpha: 0.05,
            b: 200.0,
            horizon: 1.0,
        };
        // 2 + 12·0.5^0.95 evaluated at 30 digits
        let l = weight_l(&[12.0, 0.0], &ws, 0.5).unwrap();
        assert!((l[0] - 8.211_589_543_048_265).abs() < 1e-12, "{}", l[0]);
        assert_eq!(l[1], 2.0);
        let near = weight_l(&[-1.0], &ws, 1.0 - 1e-12).unwrap();
        assert!((near[0] - 2.0).abs() < 1e-9);
        assert!(matches!(weight_l(&[1.0], &ws, 1.0), Err(MonitorError::NotBeforeV { .. })));
    }

    #[test]
    fn weight_thresholds() {
        let s = WeightSpec::new(1.5, 0.05, 2.0, WeightMode::Main).unwrap();
        assert_eq!(s.b, 2000.0 * 2.0 / 0.05);
        assert!(s.validate(WeightMode::FirstEstimate).is_ok());
        let weak = WeightSpec::new(1.5, 0.05, 2.0, WeightMode::FirstEstimate).unwrap();
        assert!(weak.validate(WeightMode::Main).is_err());
        assert!(WeightSpec::new(1.5, 0.09, 2.0, WeightMode::Main).is_err());
        assert!(WeightSpec::new(0.5, 0.05, 2.0, WeightMode::Main).is_err());
    }

    #[test]
    fn ledger_verdicts() {
        assert!(InequalityLedger::inequality("x", 1.0, 2.0, 1e-3).passed());
        assert!(InequalityLedger::inequality("x", 1.0005, 1.0, 1e-3).passed());
        assert!(!InequalityLedger::inequality("x", 1.01, 1.0, 1e-3).passed());
        assert!(!InequalityLedger::inequality("x", f64::NAN, 1.0, 1e-3).passed());
        assert!(InequalityLedger::identity("x", 1.0 + 1e-8, 1.0, 1e-6).passed());
        assert!(!InequalityLedger::identity("x", 0.9, 1.0, 1e-6).passed());
    }

    #[test]
    fn line_fit_recovers_slope() {
        let x: Vec<f64> = (0..6).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v - 1.0).collect();
        let (m, c) = fit_line(&x, &y).unwrap();
        assert!((m - 3.0).abs() < 1e-14 && (c + 1.0).abs() < 1e-14);
        assert!(fit_line(&x[..3], &y[..3]).is_err());
    }
}
