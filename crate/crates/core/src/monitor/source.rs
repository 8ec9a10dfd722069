use super::MonitorError;
use crate::quadrature::RadialRule;
use crate::scenarios::{Scenario, ScenarioRegion};
use crate::warped::{curvature_fields, region_data, FlowConfig, FlowState, WarpedProfile};
use serde::{Deserialize, Serialize};

/// Static facts about a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceInfo {
    pub label: String,
    /// The solution is smooth on [0, horizon).
    pub horizon: f64,
    pub closed: bool,
    pub euler_characteristic: Option<i32>,
    /// Complex dimension when the run is Kähler.
    pub kahler_dimension: Option<usize>,
    pub rescale: f64,
}

/// Data on ∂N needed for the boundary terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundarySample {
    pub area: f64,
    pub scalar: f64,
    pub ricci_sq: f64,
    /// Outward normal derivatives.
    pub dn_scalar: f64,
    pub dn_ricci_sq: f64,
    /// Outward speed of the sampled region boundary through the manifold.
    pub speed: f64,
}

/// Suprema over the collar Ω around ∂N.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollarSample {
    pub sup_rm: f64,
    pub sup_grad_rm: f64,
    pub sup_grad2_rm_estimate: f64,
}

/// How to evaluate geodesic balls B_{g(t)}(p, ρ) ∩ N.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BallSample {
    /// Spatially constant fields; the ball volume is closed-form.
    Homogeneous { scenario: Scenario },
    /// Rotationally symmetric: distance from p = x₀ and slice area at each point of N.
    Radial { distance: Vec<f64>, area: Vec<f64> },
}

/// Curvature fields on N at one time. Spatial arrays share the point index of
/// `weights`; gradients are radial, so ∇R and ∇|Ric|² are carried as their
/// components along the unit radial direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub scalar: Vec<f64>,
    pub ricci_sq: Vec<f64>,
    pub riemann_sq: Vec<f64>,
    pub rm_ric_ric: Vec<f64>,
    /// |∇Ric|²
    pub grad_ricci_sq: Vec<f64>,
    pub d_scalar: Vec<f64>,
    pub d_ricci_sq: Vec<f64>,
    pub weights: Vec<f64>,
    pub boundary: Option<BoundarySample>,
    pub collar: Option<CollarSample>,
    pub ball: BallSample,
}

const GAUSS4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
    (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
];

impl Snapshot {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// ∫_N F dV from point values F(i).
    pub fn integrate(&self, f: impl Fn(usize) -> f64) -> f64 {
        self.weights.iter().enumerate().map(|(i, w)| w * f(i)).sum()
    }

    pub fn volume(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn inf_scalar(&self) -> f64 {
        self.scalar.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// ∫_{B(p,ρ) ∩ N} F dV.
    pub fn ball_integral(&self, radius: f64, f: impl Fn(usize) -> f64) -> Result<f64, MonitorError> {
        match &self.ball {
            BallSample::Homogeneous { scenario } => {
                let vol = scenario.ball_volume(radius, self.t)?.min(self.volume());
                Ok(f(0) * vol)
            }
            BallSample::Radial { distance, area } => {
                let n = distance.len();
                if radius >= distance[n - 1] {
                    return Ok(self.integrate(f));
                }
                // per cell: F linear, area^{1/3} linear (exact for a slice radius
                // linear in s, as at a smooth pole), 4-point Gauss on the covered part
                let mut acc = 0.0;
                for i in 0..n - 1 {
                    let (s0, s1) = (distance[i], distance[i + 1]);
                    if s0 >= radius {
                        break;
                    }
                    let hi = s1.min(radius);
                    let (f0, f1) = (f(i), f(i + 1));
                    let (c0, c1) = (area[i].cbrt(), area[i + 1].cbrt());
                    let half = 0.5 * (hi - s0);
                    for (x, w) in GAUSS4 {
                        let u = (half * (x + 1.0)) / (s1 - s0);
                        let c = c0 + u * (c1 - c0);
                        acc += half * w * (f0 + u * (f1 - f0)) * c * c * c;
                    }
                }
                Ok(acc)
            }
        }
    }

    pub fn ball_volume(&self, radius: f64) -> Result<f64, MonitorError> {
        self.ball_integral(radius, |_| 1.0)
    }

    /// sup of F over the points of N within distance ρ of p (p itself included).
    pub fn ball_sup(&self, radius: f64, f: impl Fn(usize) -> f64) -> f64 {
        match &self.ball {
            BallSample::Homogeneous { .. } => f(0),
            BallSample::Radial { distance, .. } => distance
                .iter()
                .enumerate()
                .filter(|(i, d)| *i == 0 || **d <= radius)
                .map(|(i, _)| f(i))
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// A Ricci-flow run that can be sampled at nondecreasing times.
pub trait FieldSource {
    fn info(&self) -> SourceInfo;
    fn snapshot(&mut self, t: f64) -> Result<Snapshot, MonitorError>;
}

/// A closed-form scenario restricted to a region.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSource {
    pub scenario: Scenario,
    pub region: ScenarioRegion,
}

impl ScenarioSource {
    pub fn new(scenario: Scenario, region: ScenarioRegion) -> Self {
        Self { scenario, region }
    }

    pub fn closed(scenario: Scenario) -> Self {
        Self::new(scenario, ScenarioRegion::WholeManifold)
    }
}

impl FieldSource for ScenarioSource {
    fn info(&self) -> SourceInfo {
        SourceInfo {
            label: self.scenario.label().to_string(),
            horizon: self.scenario.singular_time().unwrap_or(f64::INFINITY),
            closed: self.region.is_closed(),
            euler_characteristic: self.region.is_closed().then(|| self.scenario.euler_characteristic()),
            kahler_dimension: self.scenario.is_kahler().then_some(2),
            rescale: self.scenario.rescale,
        }
    }

    fn snapshot(&mut self, t: f64) -> Result<Snapshot, MonitorError> {
        let sc = self.scenario.scalar_series(t)?;
        let vol = self.scenario.region_volume(self.region, t)?;
        let (boundary, collar) = match self.region {
            ScenarioRegion::WholeManifold => (None, None),
            ScenarioRegion::GeodesicBall { radius } => {
                // area of the fixed sphere ∂N: g(0) area scaled like a 3-volume
                let h = 1e-5 * radius.max(1e-3);
                let area0 = (self.scenario.ball_volume(radius + h, 0.0)?
                    - self.scenario.ball_volume((radius - h).max(0.0), 0.0)?)
                    / (radius + h - (radius - h).max(0.0));
                let ratio = self.scenario.volume(t)? / self.scenario.volume(0.0)?;
                (
                    Some(BoundarySample {
                        area: area0 * ratio.powf(0.75),
                        scalar: sc.r,
                        ricci_sq: sc.ric2,
                        dn_scalar: 0.0,
                        dn_ricci_sq: 0.0,
                        speed: 0.0,
                    }),
                    Some(CollarSample {
                        sup_rm: sc.rm2.sqrt(),
                        sup_grad_rm: 0.0,
                        sup_grad2_rm_estimate: 0.0,
                    }),
                )
            }
        };
        Ok(Snapshot {
            t,
            scalar: vec![sc.r],
            ricci_sq: vec![sc.ric2],
            riemann_sq: vec![sc.rm2],
            rm_ric_ric: vec![self.scenario.rm_ric_ric(t)?],
            grad_ricci_sq: vec![0.0],
            d_scalar: vec![0.0],
            d_ricci_sq: vec![0.0],
            weights: vec![vol],
            boundary,
            collar,
            ball: BallSample::Homogeneous { scenario: self.scenario },
        })
    }
}

/// Region and collar of a warped run, in the coordinates of the raw profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WarpedRegion {
    pub x_boundary: f64,
    pub collar_width: f64,
}

/// A warped-product flow integrated on demand, reported after the parabolic
/// rescale g ↦ C·g(·/C).
#[derive(Debug, Clone)]
pub struct WarpedSource {
    state: FlowState,
    region: WarpedRegion,
    rescale: f64,
    horizon: f64,
    label: String,
}

impl WarpedSource {
    /// `horizon` is in rescaled time.
    pub fn new(
        label: &str,
        profile: WarpedProfile,
        config: FlowConfig,
        region: WarpedRegion,
        rescale: f64,
        horizon: f64,
    ) -> Result<Self, MonitorError> {
        if !(rescale > 0.0) {
            return Err(MonitorError::InvalidParams(format!("rescale factor {rescale}")));
        }
        let state = FlowState::new(profile, config)?;
        // fail early when the region does not fit the grid
        let field = curvature_fields(&state.profile)?;
        region_data(&state.profile, &field, region.x_boundary, region.collar_width, RadialRule::Trapezoid)?;
        Ok(Self {
            state,
            region,
            rescale,
            horizon,
            label: label.to_string(),
        })
    }

    pub fn state(&self) -> &FlowState {
        &self.state
    }
}

impl FieldSource for WarpedSource {
    fn info(&self) -> SourceInfo {
        SourceInfo {
            label: self.label.clone(),
            horizon: self.horizon,
            closed: false,
            euler_characteristic: None,
            kahler_dimension: None,
            rescale: self.rescale,
        }
    }

    fn snapshot(&mut self, t: f64) -> Result<Snapshot, MonitorError> {
        let c = self.rescale;
        let raw = t / c;
        if raw < self.state.t() * (1.0 - 1e-14) - 1e-300 {
            return Err(MonitorError::OutOfOrder {
                requested: t,
                current: self.state.t() * c,
            });
        }
        self.state.advance_to(raw, None)?;
        let p = &self.state.profile;
        let f = curvature_fields(p)?;
        let rd = region_data(p, &f, self.region.x_boundary, self.region.collar_width, RadialRule::Trapezoid)?;
        let b = rd.boundary_index;
        let inside = 0..=b;
        let take = |v: &[f64], k: f64| -> Vec<f64> { v[inside.clone()].iter().map(|x| x * k).collect() };
        let scal: Vec<f64> = f.scalars.iter().map(|s| s.r).collect();
        let ric2: Vec<f64> = f.scalars.iter().map(|s| s.ric2).collect();
        let rm2: Vec<f64> = f.scalars.iter().map(|s| s.rm2).collect();
        let c2 = c * c;
        let len = c.sqrt();
        let boundary = BoundarySample {
            area: rd.boundary_area * c * len,
            scalar: scal[b] / c,
            ricci_sq: ric2[b] / c2,
            dn_scalar: rd.normal_derivative(p, &scal) / (c * len),
            dn_ricci_sq: rd.normal_derivative(p, &ric2) / (c2 * len),
            speed: rd.boundary_speed / len,
        };
        Ok(Snapshot {
            t,
            scalar: take(&scal, 1.0 / c),
            ricci_sq: take(&ric2, 1.0 / c2),
            riemann_sq: take(&rm2, 1.0 / c2),
            rm_ric_ric: take(&f.rm_ric_ric, 1.0 / (c2 * c)),
            grad_ricci_sq: take(&f.grad_ric2, 1.0 / (c2 * c)),
            d_scalar: take(&f.ds_r, 1.0 / (c * len)),
            d_ricci_sq: take(&f.ds_ric2, 1.0 / (c2 * len)),
            weights: take(&rd.weights, c2),
            boundary: Some(boundary),
            collar: Some(CollarSample {
                sup_rm: rd.collar_sup_rm / c,
                sup_grad_rm: rd.collar_sup_grad_rm / (c * len),
                sup_grad2_rm_estimate: rd.collar_sup_grad2_rm_estimate / c2,
            }),
            ball: BallSample::Radial {
                distance: take(&f.s, len),
                area: inside.map(|i| p.slice_area(i) * c * len).collect(),
            },
        })
    }
}

/// Snapshots of one run on a sorted time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSeries {
    pub info: SourceInfo,
    pub snapshots: Vec<Snapshot>,
}

impl RunSeries {
    /// Samples the source at the sorted, deduplicated times.
    pub fn sample(source: &mut dyn FieldSource, times: &[f64]) -> Result<Self, MonitorError> {
        let mut ts: Vec<f64> = times.to_vec();
        if ts.iter().any(|t| !t.is_finite()) {
            return Err(MonitorError::NonFinite("sample times".to_string()));
        }
        ts.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        ts.dedup();
        let snapshots = ts.iter().map(|t| source.snapshot(*t)).collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            info: source.info(),
            snapshots,
        })
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    pub fn index_of(&self, t: f64) -> Result<usize, MonitorError> {
        let times = self.times();
        let i = times.partition_point(|x| *x < t - 1e-12 * (1.0 + t.abs()));
        if i < times.len() && (times[i] - t).abs() <= 1e-12 * (1.0 + t.abs()) {
            Ok(i)
        } else {
            Err(MonitorError::TimeNotSampled(t))
        }
    }

    /// Snapshots with r ≤ t ≤ s, both ends sampled.
    pub fn window(&self, r: f64, s: f64) -> Result<&[Snapshot], MonitorError> {
        let (a, b) = (self.index_of(r)?, self.index_of(s)?);
        if a > b {
            return Err(MonitorError::InvalidParams(format!("window [{r}, {s}] is reversed")));
        }
        Ok(&self.snapshots[a..=b])
    }

    /// Snapshots with lo ≤ t < hi.
    pub fn before(&self, lo: f64, hi: f64) -> &[Snapshot] {
        let times = self.times();
        let a = times.partition_point(|x| *x < lo - 1e-12 * (1.0 + lo.abs()));
        let b = times.partition_point(|x| *x < hi);
        &self.snapshots[a..b.max(a)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::ScenarioKind;
    use std::f64::consts::PI;

    #[test]
    fn scenario_snapshot_integrates_closed_form() {
        let mut src = ScenarioSource::closed(Scenario::new(ScenarioKind::Sphere).unwrap());
        let s = src.snapshot(0.05).unwrap();
        let c: f64 = 0.7;
        assert!((s.integrate(|i| s.riemann_sq[i]) - 64.0 * PI * PI).abs() < 1e-10);
        assert!((s.volume() - c * c * 8.0 * PI * PI / 3.0).abs() < 1e-12);
        assert!(s.boundary.is_none());
        let info = src.info();
        assert_eq!(info.euler_characteristic, Some(2));
        assert!(info.kahler_dimension.is_none());
    }

    #[test]
    fn warped_snapshot_scales_with_rescale() {
        let region = WarpedRegion {
            x_boundary: 1.5,
            collar_width: 0.25,
        };
        let p = WarpedProfile::round(1.0, 2.5, 100).unwrap();
        let mut a = WarpedSource::new("a", p.clone(), FlowConfig::default(), region, 1.0, 0.1).unwrap();
        let mut b = WarpedSource::new("b", p, FlowConfig::default(), region, 4.0, 0.4).unwrap();
        let (sa, sb) = (a.snapshot(0.01).unwrap(), b.snapshot(0.04).unwrap());
        let rm_a = sa.integrate(|i| sa.riemann_sq[i]);
        let rm_b = sb.integrate(|i| sb.riemann_sq[i]);
        assert!((rm_a - rm_b).abs() < 1e-12 * rm_a);
        assert!((sb.scalar[3] * 4.0 - sa.scalar[3]).abs() < 1e-12);
        let (ba, bb) = (sa.boundary.unwrap(), sb.boundary.unwrap());
        assert!((bb.area - 8.0 * ba.area).abs() < 1e-12 * bb.area);
        // slice of a round sphere: the ball to the boundary is all of N
        assert_eq!(sa.ball_volume(1e9).unwrap(), sa.volume());
        let half = sa.ball_volume(0.75).unwrap();
        assert!(half > 0.0 && half < sa.volume());
        // balls inside the first cell keep the Euclidean ρ⁴ law
        let c = 1.0 - 6.0 * 0.01f64;
        for rho in [0.004, 0.01, 0.02] {
            let exact = 2.0 * PI * PI * c.powf(2.0) * {
                let th: f64 = rho / c.sqrt();
                (2.0 - 3.0 * th.cos() + th.cos().powi(3)) / 3.0
            };
            let got = sa.ball_volume(rho).unwrap();
            assert!((got / exact - 1.0).abs() < 2e-3, "{rho}: {got} vs {exact}");
        }
        assert!(matches!(a.snapshot(0.0), Err(MonitorError::OutOfOrder { .. })));
    }

    #[test]
    fn series_windows() {
        let mut src = ScenarioSource::closed(Scenario::new(ScenarioKind::Sphere).unwrap());
        let run = RunSeries::sample(&mut src, &[0.1, 0.0, 0.05, 0.05]).unwrap();
        assert_eq!(run.times(), vec![0.0, 0.05, 0.1]);
        assert_eq!(run.window(0.0, 0.05).unwrap().len(), 2);
        assert!(run.index_of(0.07).is_err());
        assert_eq!(run.before(0.0, 0.1).len(), 2);
    }
}
