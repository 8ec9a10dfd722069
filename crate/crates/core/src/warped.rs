//! Rotationally symmetric Ricci flow g = φ(x,t)² dx² + ψ(x,t)² g_{S³} on a
//! fixed coordinate interval.
//!
//! With arclength derivative ∂_s = φ⁻¹∂_x the flow reads
//! ψ_t = ψ_ss − 2(1 − ψ_s²)/ψ and φ_t = 3φ ψ_ss/ψ. The radial sectional
//! curvature is −ψ_ss/ψ and the spherical one is (1 − ψ_s²)/ψ².
//!
//! That system is only weakly parabolic: a grid-scale reparametrisation of x
//! is a neutral mode and the discretisation turns it unstable. The solver
//! therefore integrates the DeTurck-modified flow ∂g = −2Ric + L_W g with
//! W = φ_x/φ³ ∂_x, which is strictly parabolic and isometric to Ricci flow
//! at every time. W vanishes at a pole and wherever φ is constant in x (all
//! homogeneous and round data), so coordinate regions {x ≤ x_N} move through
//! the manifold only at speed ⟨W, ν⟩ = φ_x/φ², see [`RegionData::boundary_speed`].

use crate::curvature::{CurvatureScalars, RiemannTensor4};
use crate::quadrature::{radial_weights, RadialRule};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("degenerate profile: ψ = {value} at x = {x}")]
    Degenerate { x: f64, value: f64 },
    #[error("neck pinch: ψ reached {value} at x = {x}, t = {t}")]
    NeckPinch { x: f64, t: f64, value: f64 },
    #[error("time step {dt} exceeds the stability limit {limit}")]
    CflViolation { dt: f64, limit: f64 },
    #[error("curvature blow-up at t = {t}: sup|Rm| = {max_rm}")]
    BlowUp { t: f64, max_rm: f64 },
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("region outside grid: {0}")]
    Region(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarpedProfile {
    pub x: Vec<f64>,
    pub psi: Vec<f64>,
    pub phi: Vec<f64>,
    /// x₀ = 0 is a smooth pole (ψ = 0) rather than an inner boundary.
    pub pole: bool,
    pub t: f64,
}

fn uniform(x0: f64, x1: f64, cells: usize) -> Vec<f64> {
    (0..=cells).map(|i| x0 + (x1 - x0) * i as f64 / cells as f64).collect()
}

impl WarpedProfile {
    /// Round sphere c·g_{S⁴} on x ∈ [0, x_max]: ψ = √c sin x, φ = √c.
    pub fn round(c: f64, x_max: f64, cells: usize) -> Result<Self, FlowError> {
        let x = uniform(0.0, x_max, cells);
        let psi = x.iter().map(|v| c.sqrt() * v.sin()).collect();
        let profile = Self {
            phi: vec![c.sqrt(); x.len()],
            x,
            psi,
            pole: true,
            t: 0.0,
        };
        profile.validate()?;
        Ok(profile)
    }

    /// Round data with the odd perturbation ψ = sin x (1 + ε sin² x).
    pub fn perturbed_round(eps: f64, x_max: f64, cells: usize) -> Result<Self, FlowError> {
        let x = uniform(0.0, x_max, cells);
        let psi = x.iter().map(|v| v.sin() * (1.0 + eps * v.sin().powi(2))).collect();
        let profile = Self {
            phi: vec![1.0; x.len()],
            x,
            psi,
            pole: true,
            t: 0.0,
        };
        profile.validate()?;
        Ok(profile)
    }

    /// Euclidean annulus ψ = x on [x0, x1].
    pub fn flat_annulus(x0: f64, x1: f64, cells: usize) -> Result<Self, FlowError> {
        let x = uniform(x0, x1, cells);
        let profile = Self {
            psi: x.clone(),
            phi: vec![1.0; x.len()],
            x,
            pole: false,
            t: 0.0,
        };
        profile.validate()?;
        Ok(profile)
    }

    /// Cylinder ℝ × S³(radius) on [x0, x1].
    pub fn cylinder(radius: f64, x0: f64, x1: f64, cells: usize) -> Result<Self, FlowError> {
        let x = uniform(x0, x1, cells);
        let profile = Self {
            psi: vec![radius; x.len()],
            phi: vec![1.0; x.len()],
            x,
            pole: false,
            t: 0.0,
        };
        profile.validate()?;
        Ok(profile)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn dx(&self) -> f64 {
        self.x[1] - self.x[0]
    }

    pub fn validate(&self) -> Result<(), FlowError> {
        let n = self.x.len();
        if n < 6 {
            return Err(FlowError::Grid(format!("need at least 6 points, got {n}")));
        }
        if self.psi.len() != n || self.phi.len() != n {
            return Err(FlowError::Grid("field lengths differ from grid".into()));
        }
        let h = self.dx();
        if !(h > 0.0) || self.x.windows(2).any(|p| ((p[1] - p[0]) - h).abs() > 1e-9 * h) {
            return Err(FlowError::Grid("grid must be uniform and increasing".into()));
        }
        if self.pole && self.x[0] != 0.0 {
            return Err(FlowError::Grid("a pole must sit at x = 0".into()));
        }
        let start = usize::from(self.pole);
        for i in start..n {
            if !(self.psi[i] > 0.0) {
                return Err(FlowError::Degenerate {
                    x: self.x[i],
                    value: self.psi[i],
                });
            }
        }
        if self.phi.iter().any(|v| !(*v > 0.0)) {
            return Err(FlowError::Grid("φ must be positive".into()));
        }
        Ok(())
    }

    /// Arclength from x₀.
    pub fn arclength(&self) -> Vec<f64> {
        let h = self.dx();
        let mut s = vec![0.0; self.len()];
        for i in 1..self.len() {
            s[i] = s[i - 1] + 0.5 * h * (self.phi[i] + self.phi[i - 1]);
        }
        s
    }

    /// Volume weights of the trapezoid rule in x for dV = 2π² ψ³ φ dx,
    /// restricted to indices ≤ `end`.
    pub fn volume_weights(&self, end: usize, rule: RadialRule) -> Result<Vec<f64>, FlowError> {
        let n = self.len();
        if end >= n {
            return Err(FlowError::Region(format!("index {end} beyond grid of {n}")));
        }
        let w = radial_weights(&self.x[..=end], rule).map_err(|e| FlowError::Grid(e.to_string()))?;
        let mut out = vec![0.0; n];
        for i in 0..=end {
            out[i] = w[i] * 2.0 * PI * PI * self.psi[i].powi(3) * self.phi[i];
        }
        Ok(out)
    }

    /// Area of the S³ slice at index i.
    pub fn slice_area(&self, i: usize) -> f64 {
        2.0 * PI * PI * self.psi[i].powi(3)
    }
}

/// Curvature and its arclength derivatives at every grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureField {
    pub s: Vec<f64>,
    pub psi_s: Vec<f64>,
    pub k_radial: Vec<f64>,
    pub k_sphere: Vec<f64>,
    pub scalars: Vec<CurvatureScalars>,
    pub rm_ric_ric: Vec<f64>,
    /// ∂_s R
    pub ds_r: Vec<f64>,
    /// ∂_s |Ric|²
    pub ds_ric2: Vec<f64>,
    /// |∇Ric|²
    pub grad_ric2: Vec<f64>,
    /// |∇Rm|
    pub grad_rm: Vec<f64>,
}

impl CurvatureField {
    pub fn tensor(&self, i: usize) -> RiemannTensor4 {
        RiemannTensor4::warped(self.k_radial[i], self.k_sphere[i])
    }

    pub fn max_rm(&self) -> f64 {
        self.scalars.iter().map(|s| s.rm2.sqrt()).fold(0.0, f64::max)
    }
}

/// Value at the pole of an even field from its neighbours.
#[inline]
fn even_extrapolate(v1: f64, v2: f64) -> f64 {
    (4.0 * v1 - v2) / 3.0
}

/// ∂_x of ψ: fourth order in the interior (odd reflection at a pole),
/// second order next to and at the ends.
fn psi_x(p: &WarpedProfile) -> Vec<f64> {
    let n = p.len();
    let h = p.dx();
    let f = &p.psi;
    let mut d = vec![0.0; n];
    let at = |i: isize| -> f64 {
        if i < 0 {
            -f[(-i) as usize]
        } else {
            f[i as usize]
        }
    };
    for i in 0..n {
        let ii = i as isize;
        d[i] = if i >= 2 && i + 2 < n || (p.pole && i < 2) {
            (-at(ii + 2) + 8.0 * at(ii + 1) - 8.0 * at(ii - 1) + at(ii - 2)) / (12.0 * h)
        } else if i >= 1 && i + 1 < n {
            (f[i + 1] - f[i - 1]) / (2.0 * h)
        } else if i == 0 {
            (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h)
        } else {
            (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h)
        };
    }
    d
}

/// Second-order first derivative; `even` fields have zero slope at a pole.
fn first_derivative(f: &[f64], h: f64, pole_even: bool) -> Vec<f64> {
    let n = f.len();
    let mut d = vec![0.0; n];
    for i in 0..n {
        d[i] = if i >= 1 && i + 1 < n {
            (f[i + 1] - f[i - 1]) / (2.0 * h)
        } else if i == 0 {
            if pole_even {
                0.0
            } else {
                (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h)
            }
        } else {
            (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h)
        };
    }
    d
}

fn second_derivative(f: &[f64], h: f64, pole_odd: bool) -> Vec<f64> {
    let n = f.len();
    let mut d = vec![0.0; n];
    for i in 0..n {
        d[i] = if i >= 1 && i + 1 < n {
            (f[i + 1] - 2.0 * f[i] + f[i - 1]) / (h * h)
        } else if i == 0 {
            if pole_odd {
                0.0
            } else {
                (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / (h * h)
            }
        } else {
            (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) / (h * h)
        };
    }
    d
}

/// Second-order backward (upwind) derivative of φ; the radial transport of φ
/// runs away from x₀, and a pole reflects φ evenly.
fn upwind_derivative(f: &[f64], h: f64, pole: bool) -> Vec<f64> {
    let n = f.len();
    let mut d = vec![0.0; n];
    for i in 0..n {
        d[i] = if i >= 2 {
            (3.0 * f[i] - 4.0 * f[i - 1] + f[i - 2]) / (2.0 * h)
        } else if pole {
            if i == 0 {
                0.0
            } else {
                2.0 * (f[1] - f[0]) / h
            }
        } else if i == 1 {
            (f[2] - f[0]) / (2.0 * h)
        } else {
            (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h)
        };
    }
    d
}

/// ψ_x at a pole from the odd reflection, fourth order.
fn pole_slope(psi: &[f64], h: f64) -> f64 {
    (8.0 * psi[1] - psi[2]) / (6.0 * h)
}

/// Radial sectional curvature, spherical sectional curvature and ψ_s.
fn sectional_curvatures(p: &WarpedProfile) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let h = p.dx();
    let n = p.len();
    let px = psi_x(p);
    let pxx = second_derivative(&p.psi, h, p.pole);
    let fx = upwind_derivative(&p.phi, h, p.pole);
    let mut kr = vec![0.0; n];
    let mut ks = vec![0.0; n];
    let mut ps = vec![0.0; n];
    for i in 0..n {
        let phi = p.phi[i];
        ps[i] = px[i] / phi;
        if p.pole && i == 0 {
            continue;
        }
        let pss = pxx[i] / (phi * phi) - px[i] * fx[i] / phi.powi(3);
        kr[i] = -pss / p.psi[i];
        ks[i] = (1.0 - ps[i] * ps[i]) / (p.psi[i] * p.psi[i]);
    }
    if p.pole {
        kr[0] = even_extrapolate(kr[1], kr[2]);
        ks[0] = even_extrapolate(ks[1], ks[2]);
    }
    (kr, ks, ps)
}

pub fn curvature_fields(p: &WarpedProfile) -> Result<CurvatureField, FlowError> {
    p.validate()?;
    let n = p.len();
    let h = p.dx();
    let (kr, ks, ps) = sectional_curvatures(p);
    let s = p.arclength();
    let mut scalars = Vec::with_capacity(n);
    let mut rrr = Vec::with_capacity(n);
    let mut lam1 = vec![0.0; n];
    let mut lam2 = vec![0.0; n];
    for i in 0..n {
        lam1[i] = 3.0 * kr[i];
        lam2[i] = kr[i] + 2.0 * ks[i];
        scalars.push(CurvatureScalars::new(
            6.0 * kr[i] + 6.0 * ks[i],
            lam1[i] * lam1[i] + 3.0 * lam2[i] * lam2[i],
            12.0 * kr[i] * kr[i] + 12.0 * ks[i] * ks[i],
        ));
        rrr.push(6.0 * kr[i] * lam1[i] * lam2[i] + 6.0 * ks[i] * lam2[i] * lam2[i]);
    }
    let ds = |f: &[f64]| -> Vec<f64> {
        first_derivative(f, h, p.pole)
            .iter()
            .zip(&p.phi)
            .map(|(d, phi)| d / phi)
            .collect()
    };
    let dkr = ds(&kr);
    let dks = ds(&ks);
    let mut ds_r = vec![0.0; n];
    let mut ds_ric2 = vec![0.0; n];
    let mut grad_ric2 = vec![0.0; n];
    let mut grad_rm = vec![0.0; n];
    for i in 0..n {
        let (d1, d2) = (3.0 * dkr[i], dkr[i] + 2.0 * dks[i]);
        ds_r[i] = 6.0 * dkr[i] + 6.0 * dks[i];
        ds_ric2[i] = 2.0 * lam1[i] * d1 + 6.0 * lam2[i] * d2;
        // tangential derivatives through ∇_{e_j}ν = (ψ_s/ψ) e_j
        let kappa2 = if p.pole && i == 0 {
            0.0
        } else {
            (ps[i] / p.psi[i]).powi(2)
        };
        let gap = kr[i] - ks[i];
        let tangential = if p.pole && i == 0 { 0.0 } else { kappa2 * gap * gap };
        grad_ric2[i] = d1 * d1 + 3.0 * d2 * d2 + 24.0 * tangential;
        grad_rm[i] = (12.0 * dkr[i] * dkr[i] + 12.0 * dks[i] * dks[i] + 48.0 * tangential).sqrt();
    }
    Ok(CurvatureField {
        s,
        psi_s: ps,
        k_radial: kr,
        k_sphere: ks,
        scalars,
        rm_ric_ric: rrr,
        ds_r,
        ds_ric2,
        grad_ric2,
        grad_rm,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub cfl: f64,
    /// Halt when sup|Rm|·Δt exceeds this.
    pub blowup_threshold: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            cfl: 0.2,
            blowup_threshold: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Diagnostics {
    pub max_rm: f64,
    pub cfl_number: f64,
    pub error_estimate: f64,
    pub steps: u64,
    pub pole_slope_defect: f64,
    /// |K_radial − K_sphere| at the pole, zero for smooth metrics.
    pub pole_isotropy_defect: f64,
}

/// Exact homothetic evolution of the initial boundary values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct BoundaryClamp {
    psi0: f64,
    phi0: f64,
    ric_sphere: f64,
    ric_radial: f64,
}

impl BoundaryClamp {
    fn at(&self, t: f64) -> (f64, f64) {
        (
            self.psi0 * (1.0 - 2.0 * self.ric_sphere * t).max(0.0).sqrt(),
            self.phi0 * (1.0 - 2.0 * self.ric_radial * t).max(0.0).sqrt(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    pub profile: WarpedProfile,
    pub diagnostics: Diagnostics,
    pub config: FlowConfig,
    inner: Option<BoundaryClamp>,
    outer: BoundaryClamp,
}

impl FlowState {
    pub fn new(profile: WarpedProfile, config: FlowConfig) -> Result<Self, FlowError> {
        let field = curvature_fields(&profile)?;
        let clamp = |i: usize| BoundaryClamp {
            psi0: profile.psi[i],
            phi0: profile.phi[i],
            ric_sphere: field.k_radial[i] + 2.0 * field.k_sphere[i],
            ric_radial: 3.0 * field.k_radial[i],
        };
        let n = profile.len();
        let inner = if profile.pole { None } else { Some(clamp(0)) };
        let outer = clamp(n - 1);
        let mut state = Self {
            profile,
            diagnostics: Diagnostics::default(),
            config,
            inner,
            outer,
        };
        let mut p = state.profile.clone();
        state.apply_boundary(&mut p);
        state.profile = p;
        let field = curvature_fields(&state.profile)?;
        state.refresh_diagnostics(&field, 0.0);
        Ok(state)
    }

    pub fn t(&self) -> f64 {
        self.profile.t
    }

    fn min_ds(&self) -> f64 {
        let h = self.profile.dx();
        self.profile.phi.iter().fold(f64::INFINITY, |a, p| a.min(p * h))
    }

    pub fn max_stable_dt(&self) -> f64 {
        let ds = self.min_ds();
        let ds2 = ds * ds;
        self.config.cfl * ds2 / (1.0f64).max(self.diagnostics.max_rm * ds2)
    }

    fn refresh_diagnostics(&mut self, field: &CurvatureField, dt: f64) {
        self.diagnostics.max_rm = field.max_rm();
        let limit = self.max_stable_dt();
        self.diagnostics.cfl_number = if limit > 0.0 { dt / limit * self.config.cfl } else { 0.0 };
        if self.profile.pole {
            // compare with the even extrapolation of φ from the interior
            let p = &self.profile;
            let phi_pole = even_extrapolate(p.phi[1], p.phi[2]);
            self.diagnostics.pole_slope_defect = (pole_slope(&p.psi, p.dx()) / phi_pole - 1.0).abs();
            self.diagnostics.pole_isotropy_defect = (field.k_radial[0] - field.k_sphere[0]).abs();
        }
    }

    fn rates(&self, p: &WarpedProfile) -> Result<(Vec<f64>, Vec<f64>), FlowError> {
        for i in usize::from(p.pole)..p.len() {
            if !(p.psi[i] > 0.0) {
                return Err(FlowError::NeckPinch {
                    x: p.x[i],
                    t: p.t,
                    value: p.psi[i],
                });
            }
        }
        let (kr, ks, _) = sectional_curvatures(p);
        let n = p.len();
        let h = p.dx();
        let pxx = second_derivative(&p.psi, h, p.pole);
        let fxc = first_derivative(&p.phi, h, p.pole);
        let fxx = second_derivative(&p.phi, h, false);
        let rates: Vec<(f64, f64)> = (0..n)
            .into_par_iter()
            .map(|i| {
                if p.pole && i == 0 {
                    // φ(0) is slaved to ψ_x(0) by regularity
                    return (0.0, 0.0);
                }
                let phi = p.phi[i];
                // L_W g adds Wψ_x to ψ_t, cancelling the φ_x part of ψ_ss,
                // and (Wφ)_x to φ_t
                let gauge = fxx[i] / (phi * phi) - 2.0 * fxc[i] * fxc[i] / phi.powi(3);
                (
                    pxx[i] / (phi * phi) - 2.0 * p.psi[i] * ks[i],
                    -3.0 * phi * kr[i] + gauge,
                )
            })
            .collect();
        Ok(rates.into_iter().unzip())
    }

    fn apply_boundary(&self, p: &mut WarpedProfile) {
        let n = p.len();
        let (ps, ph) = self.outer.at(p.t);
        p.psi[n - 1] = ps;
        p.phi[n - 1] = ph;
        if let Some(c) = self.inner {
            let (ps, ph) = c.at(p.t);
            p.psi[0] = ps;
            p.phi[0] = ph;
        } else {
            p.psi[0] = 0.0;
            p.phi[0] = pole_slope(&p.psi, p.dx());
        }
    }

    /// One Heun step.
    pub fn step(&mut self, dt: f64) -> Result<(), FlowError> {
        let limit = self.max_stable_dt();
        if dt > limit * (1.0 + 1e-9) {
            return Err(FlowError::CflViolation { dt, limit });
        }
        if self.diagnostics.max_rm * dt > self.config.blowup_threshold {
            return Err(FlowError::BlowUp {
                t: self.t(),
                max_rm: self.diagnostics.max_rm,
            });
        }
        let p0 = &self.profile;
        let (a_psi, a_phi) = self.rates(p0)?;
        let mut mid = p0.clone();
        mid.t = p0.t + dt;
        for i in 0..mid.len() {
            mid.psi[i] += dt * a_psi[i];
            mid.phi[i] += dt * a_phi[i];
        }
        self.apply_boundary(&mut mid);
        let (b_psi, b_phi) = self.rates(&mid)?;
        let mut next = p0.clone();
        next.t = p0.t + dt;
        let mut local_err: f64 = 0.0;
        for i in 0..next.len() {
            next.psi[i] += 0.5 * dt * (a_psi[i] + b_psi[i]);
            next.phi[i] += 0.5 * dt * (a_phi[i] + b_phi[i]);
            local_err = local_err
                .max((0.5 * dt * (b_psi[i] - a_psi[i])).abs())
                .max((0.5 * dt * (b_phi[i] - a_phi[i])).abs());
        }
        self.apply_boundary(&mut next);
        for i in usize::from(next.pole)..next.len() {
            if !(next.psi[i] > 0.0) {
                return Err(FlowError::NeckPinch {
                    x: next.x[i],
                    t: next.t,
                    value: next.psi[i],
                });
            }
        }
        let field = curvature_fields(&next)?;
        self.profile = next;
        self.diagnostics.error_estimate += local_err;
        self.diagnostics.steps += 1;
        self.refresh_diagnostics(&field, dt);
        Ok(())
    }

    /// Step at the stability limit (capped by `dt_max`) until exactly `t_end`.
    pub fn advance_to(&mut self, t_end: f64, dt_max: Option<f64>) -> Result<(), FlowError> {
        while self.t() < t_end {
            let mut dt = self.max_stable_dt();
            if let Some(m) = dt_max {
                dt = dt.min(m);
            }
            let remaining = t_end - self.t();
            if remaining <= dt * (1.0 + 1e-9) {
                dt = remaining;
            } else if remaining < 2.0 * dt {
                dt = 0.5 * remaining;
            }
            self.step(dt)?;
            if (t_end - self.t()).abs() < 1e-14 * t_end.abs().max(1.0) {
                self.profile.t = t_end;
            }
        }
        Ok(())
    }
}

/// Region N = {x ≤ x_N} with boundary slice at x_N and collar
/// [x_N − w, x_N + w].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionData {
    pub boundary_index: usize,
    pub collar: (usize, usize),
    pub boundary_area: f64,
    /// Volume weights, zero outside N.
    pub weights: Vec<f64>,
    pub collar_sup_rm: f64,
    pub collar_sup_grad_rm: f64,
    /// Finite-difference estimate of sup |∇²Rm| from the radial slope of |∇Rm|.
    pub collar_sup_grad2_rm_estimate: f64,
    /// Outward speed ⟨W, ν⟩ of the coordinate boundary through the manifold.
    pub boundary_speed: f64,
}

impl RegionData {
    /// Outward normal derivative of a grid field at ∂N.
    pub fn normal_derivative(&self, profile: &WarpedProfile, field: &[f64]) -> f64 {
        let b = self.boundary_index;
        let h = profile.dx();
        (field[b + 1] - field[b - 1]) / (2.0 * h * profile.phi[b])
    }
}

/// ⟨W, ν⟩ = φ_x/φ² at every grid point.
pub fn gauge_speed(profile: &WarpedProfile) -> Vec<f64> {
    first_derivative(&profile.phi, profile.dx(), profile.pole)
        .iter()
        .zip(&profile.phi)
        .map(|(d, p)| d / (p * p))
        .collect()
}

pub fn boundary_index(profile: &WarpedProfile, x_n: f64) -> Result<usize, FlowError> {
    let h = profile.dx();
    let b = ((x_n - profile.x[0]) / h).round();
    if b < 1.0 || b as usize + 1 >= profile.len() {
        return Err(FlowError::Region(format!("boundary x = {x_n} not strictly inside the grid")));
    }
    Ok(b as usize)
}

pub fn region_data(
    profile: &WarpedProfile,
    field: &CurvatureField,
    x_n: f64,
    collar_width: f64,
    rule: RadialRule,
) -> Result<RegionData, FlowError> {
    let b = boundary_index(profile, x_n)?;
    let h = profile.dx();
    let w = (collar_width / h).round() as usize;
    if w == 0 || b < w || b + w + 1 >= profile.len() {
        return Err(FlowError::Region(format!(
            "collar of width {collar_width} around x = {x_n} exits the grid"
        )));
    }
    let (lo, hi) = (b - w, b + w);
    let sup = |v: &[f64]| v[lo..=hi].iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let rm: Vec<f64> = field.scalars.iter().map(|s| s.rm2.sqrt()).collect();
    let grad2: Vec<f64> = first_derivative(&field.grad_rm, h, profile.pole)
        .iter()
        .zip(&profile.phi)
        .map(|(d, p)| d / p)
        .collect();
    Ok(RegionData {
        boundary_index: b,
        collar: (lo, hi),
        boundary_area: profile.slice_area(b),
        weights: profile.volume_weights(b, rule)?,
        collar_sup_rm: sup(&rm),
        collar_sup_grad_rm: sup(&field.grad_rm),
        collar_sup_grad2_rm_estimate: sup(&grad2),
        boundary_speed: gauge_speed(profile)[b],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_err(a: &[f64], b: impl Fn(usize) -> f64) -> f64 {
        a.iter().enumerate().map(|(i, v)| (v - b(i)).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn round_profile_curvatures() {
        let c = 0.7;
        for cells in [100, 200] {
            let p = WarpedProfile::round(c, 2.5, cells).unwrap();
            let f = curvature_fields(&p).unwrap();
            let h = p.dx();
            let ekr = max_err(&f.k_radial, |_| 1.0 / c);
            let eks = max_err(&f.k_sphere, |_| 1.0 / c);
            let er = f.scalars.iter().map(|s| (s.r - 12.0 / c).abs()).fold(0.0, f64::max);
            assert!(ekr < 2.0 * h * h && eks < 2.0 * h * h && er < 30.0 * h * h, "{ekr} {eks} {er}");
        }
    }

    #[test]
    fn cylinder_and_flat_curvatures() {
        let p = WarpedProfile::cylinder(0.8, 0.0, 3.0, 60).unwrap();
        let f = curvature_fields(&p).unwrap();
        assert!(f.k_radial.iter().all(|v| v.abs() < 1e-12));
        assert!(f.k_sphere.iter().all(|v| (v - 1.0 / 0.64).abs() < 1e-12));
        let q = WarpedProfile::flat_annulus(0.5, 2.0, 60).unwrap();
        let g = curvature_fields(&q).unwrap();
        assert!(g.scalars.iter().all(|s| s.rm2 < 1e-20));
    }

    #[test]
    fn degenerate_profile_rejected() {
        let mut p = WarpedProfile::round(1.0, 2.0, 40).unwrap();
        p.psi[10] = -0.1;
        assert!(matches!(curvature_fields(&p), Err(FlowError::Degenerate { .. })));
    }

    #[test]
    fn gradient_norms_match_tensor_assembly() {
        // |h ∧ g|² = 4(n−2)|h|² + 4(tr h)² with h = e_j⊗ν + ν⊗e_j checked by explicit tensors
        let kn = |h: [[f64; 4]; 4]| {
            RiemannTensor4::from_fn(|a, b, c, d| {
                let g = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
                h[a][c] * g(b, d) + h[b][d] * g(a, c) - h[a][d] * g(b, c) - h[b][c] * g(a, d)
            })
        };
        let mut e = [[0.0; 4]; 4];
        e[0][2] = 1.0;
        e[2][0] = 1.0;
        let norm2: f64 = kn(e).components().iter().map(|v| v * v).sum();
        assert_eq!(norm2, 16.0);
        let mut nn = [[0.0; 4]; 4];
        nn[0][0] = 1.0;
        let a = kn(nn);
        let g = RiemannTensor4::constant_curvature(1.0);
        let (ks, dk) = (0.3, -0.7);
        // radial derivative K_s' G + (K_r − K_s)' A versus 12K_r'² + 12K_s'²
        let t = g.scaled(ks).add(&a.scaled(dk));
        let direct: f64 = t.components().iter().map(|v| v * v).sum();
        let kr = ks + dk;
        assert!((direct - (12.0 * kr * kr + 12.0 * ks * ks)).abs() < 1e-12);
    }

    #[test]
    fn round_flow_matches_closed_form() {
        let p = WarpedProfile::round(1.0, 2.5, 100).unwrap();
        let mut st = FlowState::new(p, FlowConfig::default()).unwrap();
        st.advance_to(0.05, None).unwrap();
        let c: f64 = 1.0 - 6.0 * 0.05;
        let x = st.profile.x.clone();
        let e = max_err(&st.profile.psi, |i| c.sqrt() * x[i].sin());
        let h = x[1] - x[0];
        assert!(e < 0.5 * h * h, "{e}");
        assert!(st.diagnostics.pole_slope_defect < 10.0 * h * h);
    }

    #[test]
    fn flat_annulus_stationary() {
        let p = WarpedProfile::flat_annulus(0.5, 2.0, 60).unwrap();
        let orig = p.psi.clone();
        let mut st = FlowState::new(p, FlowConfig::default()).unwrap();
        st.advance_to(0.02, None).unwrap();
        let e = max_err(&st.profile.psi, |i| orig[i]);
        assert!(e < 1e-12, "{e}");
    }

    #[test]
    fn cylinder_shrinks_homothetically() {
        let r0: f64 = 1.0;
        let p = WarpedProfile::cylinder(r0, 0.0, 2.0, 40).unwrap();
        let mut st = FlowState::new(p, FlowConfig::default()).unwrap();
        st.advance_to(0.05, None).unwrap();
        let exact = (r0 * r0 - 4.0 * 0.05).sqrt();
        assert!(max_err(&st.profile.psi, |_| exact) < 1e-6);
    }

    #[test]
    fn cfl_violation_rejected() {
        let p = WarpedProfile::round(1.0, 2.5, 100).unwrap();
        let mut st = FlowState::new(p, FlowConfig::default()).unwrap();
        let dt = 2.0 * st.max_stable_dt();
        assert!(matches!(st.step(dt), Err(FlowError::CflViolation { .. })));
    }

    #[test]
    fn region_data_round_boundary() {
        let p = WarpedProfile::round(1.0, 2.5, 200).unwrap();
        let f = curvature_fields(&p).unwrap();
        let r = region_data(&p, &f, PI / 2.0, 0.3, RadialRule::Trapezoid).unwrap();
        let xb = p.x[r.boundary_index];
        assert!((r.boundary_area - 2.0 * PI * PI * xb.sin().powi(3)).abs() < 1e-12);
        let constant = vec![3.0; p.len()];
        assert_eq!(r.normal_derivative(&p, &constant), 0.0);
        assert!(region_data(&p, &f, 2.4, 0.3, RadialRule::Trapezoid).is_err());
        // collar of the round sphere: |Rm| = √24, |∇Rm| = 0
        assert!((r.collar_sup_rm - 24f64.sqrt()).abs() < 1e-3);
        assert!(r.collar_sup_grad_rm < 1e-3);
    }
}
