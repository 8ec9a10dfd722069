//! Closed-form Ricci-flow solutions ∂_t g = −2 Ric with exact curvature,
//! volumes, ball volumes and Kähler potentials.
//!
//! Every scenario carries a parabolic rescale factor C: the evaluated flow is
//! g(τ) = C·g₀(τ/C), so times scale by C, lengths by √C, curvature by 1/C and
//! four-dimensional volumes by C².

use crate::curvature::{CurvatureScalars, KahlerCurvature, RiemannTensor4};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("time {t} is at or past the singular time {singular}")]
    PastSingularTime { t: f64, singular: f64 },
    #[error("negative time {0}")]
    NegativeTime(f64),
    #[error("scenario '{0}' has no Kähler structure")]
    NotKahler(&'static str),
    #[error("invalid scenario parameter: {0}")]
    InvalidParameter(String),
    #[error("negative radius {0}")]
    NegativeRadius(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScenarioKind {
    /// Unit round S⁴ shrinking as c(t) = 1 − 6t.
    Sphere,
    /// S²(a) × S²(b) with squared radii p = a − 2t, q = b − 2t.
    Product { a: f64, b: f64 },
    /// CP² with Fubini–Study data; c(t) = 1 − λ_E t and Ric = (λ_E/2) g.
    FubiniStudy { lambda_e: f64 },
    /// Flat torus of the given volume.
    Flat { volume: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub rescale: f64,
}

/// Kähler potentials and connection data of a homogeneous Kähler scenario.
/// The ∂∂̄ terms and the Christoffel difference are identically zero for
/// these solutions; they are carried as maximum-norm values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Potentials {
    /// log(ω₀ⁿ/ωⁿ)
    pub f: f64,
    /// ∫ log(ωⁿ/ω₀ⁿ) in Kähler–Ricci time (real Ricci-flow time doubled)
    pub phi: f64,
    pub ddbar_f: f64,
    pub ddbar_phi: f64,
    pub gamma_diff: f64,
}

/// Region N of a closed scenario. A ball region is the fixed set that is a
/// geodesic ball of the given radius for g(0); it is not re-fitted to g(t).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ScenarioRegion {
    WholeManifold,
    GeodesicBall { radius: f64 },
}

impl ScenarioRegion {
    pub fn is_closed(&self) -> bool {
        matches!(self, ScenarioRegion::WholeManifold)
    }
}

fn sphere_cap(theta: f64) -> f64 {
    // ∫₀^θ sin³
    let one_minus_c = 2.0 * (theta / 2.0).sin().powi(2);
    one_minus_c * one_minus_c * (3.0 - one_minus_c) / 3.0
}

fn surface_disk_area(q: f64, r: f64) -> f64 {
    let s = q.sqrt();
    2.0 * PI * q * 2.0 * (r.min(PI * s) / (2.0 * s)).sin().powi(2)
}

impl Scenario {
    pub fn new(kind: ScenarioKind) -> Result<Self, ScenarioError> {
        Self::rescaled(kind, 1.0)
    }

    pub fn rescaled(kind: ScenarioKind, rescale: f64) -> Result<Self, ScenarioError> {
        if !(rescale > 0.0 && rescale.is_finite()) {
            return Err(ScenarioError::InvalidParameter(format!("rescale factor {rescale}")));
        }
        match kind {
            ScenarioKind::Product { a, b } if !(a > 0.0 && b >= a) => {
                return Err(ScenarioError::InvalidParameter(format!(
                    "product radii need 0 < a ≤ b, got a={a}, b={b}"
                )))
            }
            ScenarioKind::FubiniStudy { lambda_e } if !(lambda_e > 0.0) => {
                return Err(ScenarioError::InvalidParameter(format!("λ_E must be positive, got {lambda_e}")))
            }
            ScenarioKind::Flat { volume } if !(volume > 0.0) => {
                return Err(ScenarioError::InvalidParameter(format!("flat volume {volume}")))
            }
            _ => {}
        }
        Ok(Self { kind, rescale })
    }

    pub fn label(&self) -> &'static str {
        match self.kind {
            ScenarioKind::Sphere => "sphere",
            ScenarioKind::Product { .. } => "product",
            ScenarioKind::FubiniStudy { .. } => "fubini-study",
            ScenarioKind::Flat { .. } => "flat",
        }
    }

    pub fn is_kahler(&self) -> bool {
        !matches!(self.kind, ScenarioKind::Sphere)
    }

    /// Singular time before rescaling.
    fn base_singular_time(&self) -> Option<f64> {
        match self.kind {
            ScenarioKind::Sphere => Some(1.0 / 6.0),
            ScenarioKind::Product { a, .. } => Some(a / 2.0),
            ScenarioKind::FubiniStudy { lambda_e } => Some(1.0 / lambda_e),
            ScenarioKind::Flat { .. } => None,
        }
    }

    pub fn singular_time(&self) -> Option<f64> {
        self.base_singular_time().map(|t| t * self.rescale)
    }

    pub fn euler_characteristic(&self) -> i32 {
        match self.kind {
            ScenarioKind::Sphere => 2,
            ScenarioKind::Product { .. } => 4,
            ScenarioKind::FubiniStudy { .. } => 3,
            ScenarioKind::Flat { .. } => 0,
        }
    }

    fn base_time(&self, t: f64) -> Result<f64, ScenarioError> {
        if t < 0.0 {
            return Err(ScenarioError::NegativeTime(t));
        }
        let s = t / self.rescale;
        if let Some(ts) = self.base_singular_time() {
            if s >= ts {
                return Err(ScenarioError::PastSingularTime {
                    t,
                    singular: ts * self.rescale,
                });
            }
        }
        Ok(s)
    }

    /// Homothety factors of g(t) relative to g(0) on the four frame directions
    /// of the initial orthonormal frame.
    pub fn metric_factors(&self, t: f64) -> Result<[f64; 4], ScenarioError> {
        let s = self.base_time(t)?;
        Ok(match self.kind {
            ScenarioKind::Sphere => [1.0 - 6.0 * s; 4],
            ScenarioKind::Product { a, b } => {
                let (p, q) = ((a - 2.0 * s) / a, (b - 2.0 * s) / b);
                [p, p, q, q]
            }
            ScenarioKind::FubiniStudy { lambda_e } => [1.0 - lambda_e * s; 4],
            ScenarioKind::Flat { .. } => [1.0; 4],
        })
    }

    /// Ricci eigenvalues in the g(t)-orthonormal frame.
    pub fn ricci_eigenvalues(&self, t: f64) -> Result<[f64; 4], ScenarioError> {
        let ric = self.curvature_at(t)?.ricci();
        Ok([ric[0][0], ric[1][1], ric[2][2], ric[3][3]])
    }

    /// Frame components of the curvature at time t (spatially constant).
    pub fn curvature_at(&self, t: f64) -> Result<RiemannTensor4, ScenarioError> {
        let s = self.base_time(t)?;
        let base = match self.kind {
            ScenarioKind::Sphere => RiemannTensor4::constant_curvature(1.0 / (1.0 - 6.0 * s)),
            ScenarioKind::Product { a, b } => {
                RiemannTensor4::product_surfaces(1.0 / (a - 2.0 * s), 1.0 / (b - 2.0 * s))
            }
            ScenarioKind::FubiniStudy { lambda_e } => {
                RiemannTensor4::complex_space_form(self.fs_holomorphic_curvature(lambda_e, s))
            }
            ScenarioKind::Flat { .. } => RiemannTensor4::zero(),
        };
        Ok(base.scaled(1.0 / self.rescale))
    }

    /// Holomorphic sectional curvature λ_E/(3c(t)) before rescaling.
    fn fs_holomorphic_curvature(&self, lambda_e: f64, s: f64) -> f64 {
        lambda_e / 3.0 / (1.0 - lambda_e * s)
    }

    pub fn kahler_curvature_at(&self, t: f64) -> Result<KahlerCurvature, ScenarioError> {
        let s = self.base_time(t)?;
        let base = match self.kind {
            ScenarioKind::Sphere => return Err(ScenarioError::NotKahler("sphere")),
            ScenarioKind::Product { a, b } => {
                KahlerCurvature::product_curves(&[1.0 / (a - 2.0 * s), 1.0 / (b - 2.0 * s)])
            }
            ScenarioKind::FubiniStudy { lambda_e } => {
                KahlerCurvature::constant_holomorphic(2, self.fs_holomorphic_curvature(lambda_e, s))
            }
            ScenarioKind::Flat { .. } => KahlerCurvature::zero(2),
        };
        Ok(base.scaled(1.0 / self.rescale))
    }

    pub fn scalar_series(&self, t: f64) -> Result<CurvatureScalars, ScenarioError> {
        let s = self.base_time(t)?;
        let base = match self.kind {
            ScenarioKind::Sphere => {
                let c = 1.0 - 6.0 * s;
                CurvatureScalars::new(12.0 / c, 36.0 / (c * c), 24.0 / (c * c))
            }
            ScenarioKind::Product { a, b } => {
                let (p, q) = (a - 2.0 * s, b - 2.0 * s);
                CurvatureScalars::new(
                    2.0 / p + 2.0 / q,
                    2.0 / (p * p) + 2.0 / (q * q),
                    4.0 / (p * p) + 4.0 / (q * q),
                )
            }
            _ => {
                return Ok(self.curvature_at(t)?.scalars());
            }
        };
        Ok(base.rescaled(self.rescale))
    }

    pub fn rm_ric_ric(&self, t: f64) -> Result<f64, ScenarioError> {
        Ok(self.curvature_at(t)?.rm_ric_ric())
    }

    fn base_volume(&self, s: f64) -> f64 {
        match self.kind {
            ScenarioKind::Sphere => {
                let c = 1.0 - 6.0 * s;
                c * c * 8.0 * PI * PI / 3.0
            }
            ScenarioKind::Product { a, b } => (a - 2.0 * s) * (b - 2.0 * s) * 16.0 * PI * PI,
            ScenarioKind::FubiniStudy { lambda_e } => {
                let h = self.fs_holomorphic_curvature(lambda_e, s);
                (4.0 / h).powi(2) * PI * PI / 2.0
            }
            ScenarioKind::Flat { volume } => volume,
        }
    }

    pub fn volume(&self, t: f64) -> Result<f64, ScenarioError> {
        let s = self.base_time(t)?;
        Ok(self.base_volume(s) * self.rescale * self.rescale)
    }

    pub fn region_volume(&self, region: ScenarioRegion, t: f64) -> Result<f64, ScenarioError> {
        match region {
            ScenarioRegion::WholeManifold => self.volume(t),
            // dV_t/dV_0 is spatially constant, so the fixed set scales with the manifold
            ScenarioRegion::GeodesicBall { radius } => {
                Ok(self.ball_volume(radius, 0.0)? * self.volume(t)? / self.volume(0.0)?)
            }
        }
    }

    /// Volume of the geodesic ball of radius r (any center, by homogeneity).
    pub fn ball_volume(&self, r: f64, t: f64) -> Result<f64, ScenarioError> {
        if r < 0.0 {
            return Err(ScenarioError::NegativeRadius(r));
        }
        let s = self.base_time(t)?;
        let rho = r / self.rescale.sqrt();
        let base = match self.kind {
            ScenarioKind::Sphere => {
                let c = 1.0 - 6.0 * s;
                let theta = (rho / c.sqrt()).min(PI);
                2.0 * PI * PI * c * c * sphere_cap(theta)
            }
            ScenarioKind::Product { a, b } => {
                let (p, q) = (a - 2.0 * s, b - 2.0 * s);
                product_ball(p, q, rho)
            }
            ScenarioKind::FubiniStudy { lambda_e } => {
                let h = self.fs_holomorphic_curvature(lambda_e, s);
                let u = (rho * h.sqrt() / 2.0).min(PI / 2.0);
                (4.0 / h).powi(2) * PI * PI / 2.0 * u.sin().powi(4)
            }
            ScenarioKind::Flat { volume } => (PI * PI / 2.0 * rho.powi(4)).min(volume),
        };
        Ok(base * self.rescale * self.rescale)
    }

    pub fn potentials(&self, t: f64) -> Result<Potentials, ScenarioError> {
        let s = self.base_time(t)?;
        let kr = |a: f64, u: f64| a * (u - 1.0 - u * u.ln());
        let (f, phi) = match self.kind {
            ScenarioKind::Sphere => return Err(ScenarioError::NotKahler("sphere")),
            ScenarioKind::Product { a, b } => {
                let (u, v) = (1.0 - 2.0 * s / a, 1.0 - 2.0 * s / b);
                (-(u * v).ln(), kr(a, u) + kr(b, v))
            }
            ScenarioKind::FubiniStudy { lambda_e } => {
                let c = 1.0 - lambda_e * s;
                (-2.0 * c.ln(), 4.0 / lambda_e * (c - 1.0 - c * c.ln()))
            }
            ScenarioKind::Flat { .. } => (0.0, 0.0),
        };
        Ok(Potentials {
            f,
            phi: phi * self.rescale,
            ddbar_f: 0.0,
            ddbar_phi: 0.0,
            gamma_diff: 0.0,
        })
    }
}

/// Ball volume in S²(p) × S²(q): ∫ (circle length at d₁)·(disk area of radius √(r²−d₁²)) dd₁.
fn product_ball(p: f64, q: f64, rho: f64) -> f64 {
    let sp = p.sqrt();
    let upper = rho.min(PI * sp);
    if upper <= 0.0 {
        return 0.0;
    }
    let n = 4000;
    let h = upper / n as f64;
    let g = |d: f64| {
        let circle = 2.0 * PI * sp * (d / sp).sin();
        circle * surface_disk_area(q, (rho * rho - d * d).max(0.0).sqrt())
    };
    let mut acc = g(0.0) + g(upper);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * g(i as f64 * h);
    }
    acc * h / 3.0
}
