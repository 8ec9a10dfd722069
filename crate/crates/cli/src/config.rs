//! Run configuration. Flow times (`weight.v`, `weight.horizon`, `weight.pairs`,
//! `warped.horizon`, `evolution.times`, `evolution.dt`) are given before the
//! parabolic rescale; slab widths, ladder gaps and ball radii are in rescaled
//! units, where the estimates are stated.

use crate::LabError;
use ricci_lab::monitor::{WarpedRegion, WeightMode};
use ricci_lab::scenarios::{Scenario, ScenarioKind, ScenarioRegion};
use ricci_lab::warped::{FlowConfig, WarpedProfile};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Every theorem or check a run can select.
pub const THEOREM_IDS: [&str; 11] = [
    "first_weighted_estimate",
    "main_weighted_estimate",
    "rm_l2_bound",
    "gauss_bonnet",
    "rm_l2_uniform",
    "ricci_l4_slab",
    "ricci_ball_decay",
    "kahler_l2_formula",
    "kahler_boundary_constant",
    "superlevel_chebyshev",
    "evolution_identity",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub scenario: ScenarioConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warped: Option<WarpedConfig>,
    pub weight: WeightConfig,
    pub theorems: TheoremSelection,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
    #[serde(default)]
    pub secondmain: SecondMainConfig,
    #[serde(default)]
    pub noninflating: NonInflatingConfig,
    #[serde(default)]
    pub evolution: EvolutionConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioChoice {
    Sphere,
    Product,
    FubiniStudy,
    Flat,
    Warped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kind: ScenarioChoice,
    #[serde(default = "one")]
    pub rescale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_e: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub volume: Option<f64>,
    /// Monitor the fixed g(0)-ball of this radius instead of the closed manifold.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ball_radius: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileChoice {
    Round,
    Perturbed,
    Cylinder,
    FlatAnnulus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WarpedConfig {
    pub profile: ProfileChoice,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "one")]
    pub radius: f64,
    #[serde(default)]
    pub x0: f64,
    #[serde(default = "default_x_max")]
    pub x_max: f64,
    #[serde(default = "default_cells")]
    pub cells: usize,
    pub x_boundary: f64,
    pub collar_width: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "default_blowup")]
    pub blowup_threshold: f64,
    /// End of the integration window, raw time.
    pub horizon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightConfig {
    pub v: f64,
    pub alpha: f64,
    /// Explicit b; by default each estimate uses its own threshold.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    /// Horizon T; defaults to the singular time or the warped window end.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    /// Permit V = T to study hypothesis violations.
    #[serde(default)]
    pub allow_singular: bool,
    /// (r, s) pairs; the 5 × 5 default grid when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoremSelection {
    pub select: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_uniform: usize,
    /// Uniform points cover [0, uniform_fraction·V].
    pub uniform_fraction: f64,
    pub n_geometric: usize,
    /// Smallest V − t as a fraction of V.
    pub min_gap: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n_uniform: 200,
            uniform_fraction: 0.9,
            n_geometric: 60,
            min_gap: 1e-7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    pub identity: f64,
    pub inequality: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            identity: 1e-6,
            inequality: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SecondMainConfig {
    pub slabs: Vec<f64>,
    pub calibration_slabs: Vec<f64>,
    pub radius: f64,
}

impl Default for SecondMainConfig {
    fn default() -> Self {
        Self {
            slabs: vec![0.01, 0.02, 0.05],
            calibration_slabs: vec![0.05],
            radius: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonInflatingConfig {
    pub sigma: f64,
    pub fit_tol: f64,
    /// Gaps V − S of the ladder.
    pub gaps: Vec<f64>,
    /// Offsets below V for the V-ladder at S = V − max gap.
    pub v_offsets: Vec<f64>,
}

impl Default for NonInflatingConfig {
    fn default() -> Self {
        Self {
            sigma: 1e-4,
            fit_tol: 0.05,
            gaps: (0..8).map(|k| 0.1 * 0.5f64.powi(k)).collect(),
            v_offsets: vec![0.05, 0.02, 0.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionConfig {
    pub times: Vec<f64>,
    pub dt: f64,
    /// Number of Δt halvings after the first stencil.
    pub refinements: usize,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            times: vec![0.02, 0.04, 0.06, 0.08, 0.1],
            dt: 1e-3,
            refinements: 7,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Relative to the output root; defaults to the run name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
}

fn one() -> f64 {
    1.0
}
fn default_eps() -> f64 {
    0.2
}
fn default_x_max() -> f64 {
    2.5
}
fn default_cells() -> usize {
    100
}
fn default_cfl() -> f64 {
    0.2
}
fn default_blowup() -> f64 {
    0.05
}

/// Quantities derived from a validated configuration, all in rescaled units.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub v: f64,
    pub horizon: f64,
    pub pairs: Vec<(f64, f64)>,
    pub scenario: Option<Scenario>,
    pub region: Option<ScenarioRegion>,
    pub kahler: bool,
    pub closed: bool,
}

fn usage(msg: impl Into<String>) -> LabError {
    LabError::Config(msg.into())
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, LabError> {
        toml::from_str(text).map_err(|e| usage(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// The normalized TOML text the config hash is taken over.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn selects(&self, id: &str) -> bool {
        self.theorems.select.iter().any(|s| s == id)
    }

    pub fn rescale(&self) -> f64 {
        self.scenario.rescale
    }

    pub fn base_scenario(&self) -> Result<Option<Scenario>, LabError> {
        let sc = &self.scenario;
        let need = |x: Option<f64>, name: &str| x.ok_or_else(|| usage(format!("scenario.{name} is required")));
        let kind = match sc.kind {
            ScenarioChoice::Sphere => ScenarioKind::Sphere,
            ScenarioChoice::Product => ScenarioKind::Product {
                a: need(sc.a, "a")?,
                b: need(sc.b, "b")?,
            },
            ScenarioChoice::FubiniStudy => ScenarioKind::FubiniStudy {
                lambda_e: need(sc.lambda_e, "lambda_e")?,
            },
            ScenarioChoice::Flat => ScenarioKind::Flat {
                volume: need(sc.volume, "volume")?,
            },
            ScenarioChoice::Warped => return Ok(None),
        };
        Scenario::rescaled(kind, sc.rescale)
            .map(Some)
            .map_err(|e| usage(e.to_string()))
    }

    pub fn warped_profile(&self) -> Result<(WarpedProfile, FlowConfig, WarpedRegion), LabError> {
        let w = self
            .warped
            .as_ref()
            .ok_or_else(|| usage("scenario.kind = \"warped\" needs a [warped] section"))?;
        let p = match w.profile {
            ProfileChoice::Round => WarpedProfile::round(w.radius, w.x_max, w.cells),
            ProfileChoice::Perturbed => WarpedProfile::perturbed_round(w.eps, w.x_max, w.cells),
            ProfileChoice::Cylinder => WarpedProfile::cylinder(w.radius, w.x0, w.x_max, w.cells),
            ProfileChoice::FlatAnnulus => WarpedProfile::flat_annulus(w.x0, w.x_max, w.cells),
        }
        .map_err(|e| usage(e.to_string()))?;
        let flow = FlowConfig {
            cfl: w.cfl,
            blowup_threshold: w.blowup_threshold,
        };
        let region = WarpedRegion {
            x_boundary: w.x_boundary,
            collar_width: w.collar_width,
        };
        Ok((p, flow, region))
    }

    /// All consistency checks; returns the rescaled quantities.
    pub fn validate(&self) -> Result<Resolved, LabError> {
        let c = self.rescale();
        let w = &self.weight;
        if !(c > 0.0 && c.is_finite()) {
            return Err(usage(format!("scenario.rescale = {c} must be positive")));
        }
        if !(w.alpha > 0.0 && w.alpha < 1.0 / 12.0) {
            return Err(usage(format!("α outside (0, 1/12): alpha = {}", w.alpha)));
        }
        if self.theorems.select.is_empty() {
            return Err(usage("theorems.select is empty"));
        }
        for id in &self.theorems.select {
            if !THEOREM_IDS.contains(&id.as_str()) {
                return Err(usage(format!("unknown theorem id '{id}'; known: {}", THEOREM_IDS.join(", "))));
            }
        }
        let scenario = self.base_scenario()?;
        let (region, kahler, closed, natural_horizon) = match &scenario {
            Some(s) => {
                let region = match self.scenario.ball_radius {
                    None => ScenarioRegion::WholeManifold,
                    Some(r) if r > 0.0 => ScenarioRegion::GeodesicBall { radius: r },
                    Some(r) => return Err(usage(format!("scenario.ball_radius = {r} must be positive"))),
                };
                (Some(region), s.is_kahler(), region.is_closed(), s.singular_time())
            }
            None => {
                let (p, _, region) = self.warped_profile()?;
                if self.scenario.ball_radius.is_some() {
                    return Err(usage("scenario.ball_radius applies to homogeneous scenarios only"));
                }
                let wc = self.warped.as_ref().expect("checked");
                if !(wc.horizon > 0.0) {
                    return Err(usage("warped.horizon must be positive"));
                }
                if !(region.x_boundary > p.x[0] && region.x_boundary + region.collar_width < p.x[p.len() - 1]) {
                    return Err(usage("collar exits grid: x_boundary + collar_width must lie inside the profile"));
                }
                (None, false, false, Some(wc.horizon * c))
            }
        };
        let horizon = match (w.horizon, natural_horizon) {
            (Some(h), Some(n)) if h * c > n * (1.0 + 1e-12) => {
                return Err(usage(format!("weight.horizon {h} is past the end of the solution ({})", n / c)))
            }
            (Some(h), _) => h * c,
            (None, Some(n)) => n,
            (None, None) => return Err(usage("weight.horizon is required: the solution is eternal")),
        };
        let v = w.v * c;
        if !(v >= 1.0) {
            return Err(usage(format!("V = {v} after rescale; need V ≥ 1 (raise scenario.rescale)")));
        }
        if v > horizon * (1.0 + 1e-12) || (!w.allow_singular && v >= horizon) {
            return Err(usage(format!(
                "V = {v} must be below T = {horizon} unless weight.allow_singular is set"
            )));
        }
        if let Some(b) = w.b {
            for (id, mode) in [
                ("first_weighted_estimate", WeightMode::FirstEstimate),
                ("main_weighted_estimate", WeightMode::Main),
            ] {
                let floor = mode.factor() * horizon / w.alpha;
                if self.selects(id) && b < floor {
                    return Err(usage(format!("weight.b = {b} is below {floor} required by {id}")));
                }
            }
        }
        let pairs: Vec<(f64, f64)> = match &w.pairs {
            None => ricci_lab::monitor::rs_grid(v),
            Some(list) => list.iter().map(|[r, s]| (r * c, s * c)).collect(),
        };
        for (r, s) in &pairs {
            if !(*r >= 0.0 && r <= s && *s < v) {
                return Err(usage(format!("pair (r, s) = ({}, {}) needs 0 ≤ r ≤ s < V", r / c, s / c)));
            }
        }
        let sm = &self.secondmain;
        if self.selects("ricci_l4_slab") || self.selects("rm_l2_uniform") {
            for s in sm.slabs.iter().chain(&sm.calibration_slabs) {
                if !(*s > 0.0 && *s < 1.0 && v - 3.0 * s > 0.0) {
                    return Err(usage(format!("slab s = {s} needs s ∈ (0, 1) and V − 3s > 0")));
                }
            }
        }
        let ni = &self.noninflating;
        if self.selects("ricci_ball_decay") {
            if ni.gaps.len() < 4 {
                return Err(usage("noninflating.gaps needs at least 4 entries"));
            }
            if ni.gaps.iter().any(|g| !(*g > 0.0 && *g < v)) {
                return Err(usage("noninflating.gaps must lie in (0, V)"));
            }
            ricci_lab::monitor::Theorem15Params::new(w.alpha, ni.sigma).map_err(|e| usage(e.to_string()))?;
        }
        if (self.selects("kahler_l2_formula") || self.selects("kahler_boundary_constant")) && !kahler {
            return Err(usage("Kähler checks need a Kähler scenario of complex dimension 2"));
        }
        if self.selects("gauss_bonnet") && !closed {
            return Err(usage("gauss_bonnet needs a closed run"));
        }
        if self.selects("evolution_identity") {
            let e = &self.evolution;
            if !(e.dt > 0.0) || e.refinements < 1 {
                return Err(usage("evolution needs dt > 0 and at least one refinement"));
            }
            if e.times.iter().any(|t| !(*t - e.dt > 0.0 && (*t + e.dt) * c < v)) {
                return Err(usage("evolution.times need t − dt > 0 and t + dt < V"));
            }
        }
        let g = &self.grid;
        if !(g.n_uniform >= 2 && g.uniform_fraction > 0.0 && g.uniform_fraction < 1.0 && g.min_gap > 0.0) {
            return Err(usage("grid needs n_uniform ≥ 2, uniform_fraction ∈ (0, 1), min_gap > 0"));
        }
        Ok(Resolved {
            v,
            horizon,
            pairs,
            scenario,
            region,
            kahler,
            closed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPHERE: &str = r#"
name = "s"
[scenario]
kind = "sphere"
rescale = 12.0
[weight]
v = 0.15
alpha = 0.05
[theorems]
select = ["first_weighted_estimate"]
"#;

    #[test]
    fn sphere_config_resolves() {
        let c = RunConfig::from_toml(SPHERE).unwrap();
        let r = c.validate().unwrap();
        assert!((r.v - 1.8).abs() < 1e-12 && (r.horizon - 2.0).abs() < 1e-12);
        assert_eq!(r.pairs.len(), 25);
        assert!(r.closed);
        let again = RunConfig::from_toml(&c.canonical()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn rejects_large_alpha() {
        let c = RunConfig::from_toml(&SPHERE.replace("alpha = 0.05", "alpha = 0.2")).unwrap();
        let e = c.validate().unwrap_err().to_string();
        assert!(e.contains("α outside (0, 1/12)"), "{e}");
    }

    #[test]
    fn rejects_singular_v_without_flag() {
        let c = RunConfig::from_toml(&SPHERE.replace("v = 0.15", "v = 0.16666666666666666")).unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn rejects_kahler_on_sphere_and_unknown_ids() {
        let k = SPHERE.replace("\"first_weighted_estimate\"", "\"kahler_l2_formula\"");
        assert!(RunConfig::from_toml(&k).unwrap().validate().is_err());
        let u = SPHERE.replace("\"first_weighted_estimate\"", "\"nope\"");
        assert!(RunConfig::from_toml(&u).unwrap().validate().is_err());
        assert!(RunConfig::from_toml(&SPHERE.replace("alpha", "alhpa")).is_err());
    }
}
