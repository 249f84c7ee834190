//! Scenario files: schema, validation, presets and resolution into an [`Engagement`].
//!
//! Angles are in degrees in files and radians everywhere else. Graph edges and
//! schedule entries use 0-based interceptor and graph indices.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::allocation::{Norm, GRAVITY};
use crate::consensus::{certify, min_gain, min_mu, CertificationReport, GuidanceParams};
use crate::kinematics::InterceptorState;
use crate::sim::{Agent, Engagement, SimConfig, UncertaintyModel, WeightSwitch};
use crate::topology::{random_schedule, topology_bounds, Graph, Switch, SwitchedNetwork, TopologyBounds};

pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable overriding the scenario seed.
pub const SEED_ENV: &str = "SALVO_SEED";

/// Safety factor applied to the gain and `mu` lower bounds in auto mode.
pub const AUTO_MARGIN: f64 = 1.05;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("validation failed: {0}")]
    Invalid(String),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ScenarioError> {
    Err(ScenarioError::Invalid(msg.into()))
}

impl From<serde_json::Error> for ScenarioError {
    fn from(e: serde_json::Error) -> Self {
        ScenarioError::Parse { line: e.line(), column: e.column(), message: e.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterceptorSpec {
    pub range: f64,
    pub los_elevation_deg: f64,
    pub los_azimuth_deg: f64,
    pub lead_elevation_deg: f64,
    pub lead_azimuth_deg: f64,
    pub speed: f64,
    #[serde(default = "default_nav_gain")]
    pub nav_gain: f64,
    #[serde(default = "one")]
    pub c_z: f64,
    #[serde(default = "one")]
    pub c_y: f64,
    /// Optional later weight changes; `(c_z, c_y)` above apply from t = 0.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub weight_changes: Vec<WeightSwitch<f64>>,
}

fn default_nav_gain() -> f64 {
    3.0
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub edges: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleSpec {
    Explicit {
        switches: Vec<Switch>,
    },
    /// Seeded switching over `[0, t_max]` with uniform dwell times.
    Random {
        dwell_min: f64,
        dwell_max: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySpec {
    pub graphs: Vec<GraphSpec>,
    pub schedule: ScheduleSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum GainSpec {
    Auto,
    Explicit { values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum MuSpec {
    Auto,
    Explicit { value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GuidanceSpec {
    pub m_coef: f64,
    pub n_coef: f64,
    pub m_exp: f64,
    pub n_exp: f64,
    pub k_exp: f64,
    pub settling_time: f64,
    pub gains: GainSpec,
    pub mu: MuSpec,
    #[serde(default = "default_boundary_layer")]
    pub boundary_layer: f64,
    /// Run even when the gain conditions are not met.
    #[serde(default)]
    pub waive_certification: bool,
}

fn default_boundary_layer() -> f64 {
    1e-3
}

/// `1` selects the ℓ₁ allocation, any finite `p > 1` the ℓ_p one, `"inf"` the ℓ∞ one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NormSpec {
    Exponent(f64),
    Named(NamedNorm),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedNorm {
    Inf,
}

impl NormSpec {
    pub const L1: NormSpec = NormSpec::Exponent(1.0);
    pub const L2: NormSpec = NormSpec::Exponent(2.0);
    pub const INF: NormSpec = NormSpec::Named(NamedNorm::Inf);

    pub fn to_norm(self) -> Result<Norm<f64>, ScenarioError> {
        match self {
            NormSpec::Named(NamedNorm::Inf) => Ok(Norm::Inf),
            NormSpec::Exponent(1.0) => Ok(Norm::One),
            NormSpec::Exponent(p) if p > 1.0 && p.is_finite() => Ok(Norm::P(p)),
            NormSpec::Exponent(p) => {
                invalid(format!("norm exponent must be 1, a finite value above 1, or \"inf\"; got {p}"))
            }
        }
    }

    pub fn label(self) -> String {
        match self {
            NormSpec::Named(NamedNorm::Inf) => "linf".into(),
            NormSpec::Exponent(p) => format!("l{p}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllocationSpec {
    pub norm: NormSpec,
    #[serde(default = "default_accel_limit_g")]
    pub accel_limit_g: f64,
}

fn default_accel_limit_g() -> f64 {
    40.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum UncertaintySpec {
    None,
    /// `w_i = b0_i exp(-shape / σ_M)`. Amplitudes are drawn from
    /// `U[-amplitude_range, amplitude_range]` unless listed explicitly.
    ExpLeadAngle {
        amplitude_range: f64,
        shape: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        amplitudes: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrationSpec {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_capture_radius")]
    pub capture_radius: f64,
    #[serde(default = "default_consensus_tol")]
    pub consensus_tol: f64,
    #[serde(default = "default_consensus_dwell")]
    pub consensus_dwell: f64,
}

fn default_dt() -> f64 {
    1e-3
}
fn default_t_max() -> f64 {
    60.0
}
fn default_capture_radius() -> f64 {
    0.5
}
fn default_consensus_tol() -> f64 {
    0.01
}
fn default_consensus_dwell() -> f64 {
    0.2
}

impl Default for IntegrationSpec {
    fn default() -> Self {
        Self {
            dt: default_dt(),
            t_max: default_t_max(),
            capture_radius: default_capture_radius(),
            consensus_tol: default_consensus_tol(),
            consensus_dwell: default_consensus_dwell(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_decimation")]
    pub decimation: usize,
}

fn default_decimation() -> usize {
    10
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { decimation: default_decimation() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub interceptors: Vec<InterceptorSpec>,
    pub topology: TopologySpec,
    pub guidance: GuidanceSpec,
    pub allocation: AllocationSpec,
    pub uncertainty: UncertaintySpec,
    #[serde(default)]
    pub integration: IntegrationSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

/// Fig. 2 topologies on interceptors `0..5`.
pub fn baseline_graphs() -> Vec<GraphSpec> {
    vec![
        GraphSpec { edges: vec![(0, 2), (0, 3), (1, 4), (2, 3), (2, 4)] },
        GraphSpec { edges: vec![(0, 1), (0, 2), (0, 4), (1, 3), (1, 4), (2, 4)] },
        GraphSpec { edges: vec![(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)] },
    ]
}

pub const BASELINE_SPEEDS: [f64; 5] = [400.0, 405.0, 390.0, 385.0, 395.0];
pub const BASELINE_LOS_ELEVATION_DEG: [f64; 5] = [45.0, -45.0, 135.0, -135.0, 0.0];
pub const BASELINE_LOS_AZIMUTH_DEG: [f64; 5] = [0.0, 60.0, -75.0, -10.0, -20.0];
pub const BASELINE_LEAD_ELEVATION_DEG: [f64; 5] = [120.0, -60.0, 10.0, 75.0, -100.0];
pub const BASELINE_LEAD_AZIMUTH_DEG: [f64; 5] = [55.0, 15.0, -45.0, -30.0, -60.0];
pub const BASELINE_RANGE: f64 = 10_000.0;
pub const BASELINE_SEED: u64 = 7;

/// The five-interceptor engagement with ℓ₂ allocation and no uncertainty.
pub fn paper_baseline() -> Scenario {
    let interceptors = (0..5)
        .map(|i| InterceptorSpec {
            range: BASELINE_RANGE,
            los_elevation_deg: BASELINE_LOS_ELEVATION_DEG[i],
            los_azimuth_deg: BASELINE_LOS_AZIMUTH_DEG[i],
            lead_elevation_deg: BASELINE_LEAD_ELEVATION_DEG[i],
            lead_azimuth_deg: BASELINE_LEAD_AZIMUTH_DEG[i],
            speed: BASELINE_SPEEDS[i],
            nav_gain: default_nav_gain(),
            c_z: 1.0,
            c_y: 1.0,
            weight_changes: Vec::new(),
        })
        .collect();
    Scenario {
        schema_version: SCHEMA_VERSION,
        name: "paper_baseline".into(),
        seed: BASELINE_SEED,
        interceptors,
        topology: TopologySpec {
            graphs: baseline_graphs(),
            schedule: ScheduleSpec::Random { dwell_min: 0.5, dwell_max: 2.0 },
        },
        guidance: GuidanceSpec {
            m_coef: 1.0,
            n_coef: 5.0,
            m_exp: 0.1,
            n_exp: 2.0,
            k_exp: 2.0,
            settling_time: 3.0,
            gains: GainSpec::Auto,
            mu: MuSpec::Auto,
            boundary_layer: default_boundary_layer(),
            waive_certification: false,
        },
        allocation: AllocationSpec { norm: NormSpec::L2, accel_limit_g: default_accel_limit_g() },
        uncertainty: UncertaintySpec::None,
        integration: IntegrationSpec::default(),
        output: OutputSpec::default(),
    }
}

/// Uncertainty used by the ℓ = 5 figure: amplitudes in `[-3, 3]` s, shape 8.
pub fn baseline_uncertainty() -> UncertaintySpec {
    UncertaintySpec::ExpLeadAngle { amplitude_range: 3.0, shape: 8.0, amplitudes: None }
}

pub fn preset(name: &str) -> Option<Scenario> {
    match name {
        "paper_baseline" => Some(paper_baseline()),
        _ => None,
    }
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let s: Scenario = serde_json::from_str(text)?;
    s.validate()?;
    Ok(s)
}

pub fn to_json(s: &Scenario) -> String {
    serde_json::to_string_pretty(s).expect("scenario serialises")
}

/// Reads `SALVO_SEED`, if set.
pub fn seed_from_env() -> Result<Option<u64>, ScenarioError> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| ScenarioError::Invalid(format!("{SEED_ENV} must be an unsigned integer, got {v:?}"))),
        Err(_) => Ok(None),
    }
}

/// Reads, validates and resolves a scenario file (or a preset name such as
/// `paper_baseline` when no such file exists), honouring `SALVO_SEED`.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<ResolvedScenario, ScenarioError> {
    let path = path.as_ref();
    let mut scenario = match std::fs::read_to_string(path) {
        Ok(text) => parse_scenario(&text)?,
        Err(source) => match path.to_str().and_then(preset) {
            Some(s) => s,
            None => return Err(ScenarioError::Io { path: path.display().to_string(), source }),
        },
    };
    if let Some(seed) = seed_from_env()? {
        scenario.seed = seed;
    }
    resolve(scenario)
}

fn finite_positive(v: f64, what: &str) -> Result<(), ScenarioError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        invalid(format!("{what} must be positive and finite, got {v}"))
    }
}

fn off_pole(deg: f64, what: &str) -> Result<(), ScenarioError> {
    if !deg.is_finite() {
        return invalid(format!("{what} must be finite"));
    }
    if deg.to_radians().cos().abs() < 1e-6 {
        return invalid(format!("{what} of {deg} deg is singular (cosine vanishes)"));
    }
    Ok(())
}

impl Scenario {
    /// Structural checks that do not need any numerics beyond the graphs.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.schema_version != SCHEMA_VERSION {
            return invalid(format!("unsupported schema_version {} (expected {SCHEMA_VERSION})", self.schema_version));
        }
        let n = self.interceptors.len();
        if n == 0 {
            return invalid("at least one interceptor is required");
        }
        for (i, s) in self.interceptors.iter().enumerate() {
            finite_positive(s.range, &format!("interceptor {i}: range"))?;
            finite_positive(s.speed, &format!("interceptor {i}: speed"))?;
            if !(s.nav_gain > 2.0 && s.nav_gain.is_finite()) {
                return invalid(format!("interceptor {i}: nav gain must exceed 2, got {}", s.nav_gain));
            }
            finite_positive(s.c_z, &format!("interceptor {i}: c_z"))?;
            finite_positive(s.c_y, &format!("interceptor {i}: c_y"))?;
            for w in &s.weight_changes {
                finite_positive(w.c_z, &format!("interceptor {i}: c_z"))?;
                finite_positive(w.c_y, &format!("interceptor {i}: c_y"))?;
            }
            if s.weight_changes.windows(2).any(|w| !(w[1].time > w[0].time)) {
                return invalid(format!("interceptor {i}: weight change times must be strictly increasing"));
            }
            off_pole(s.los_elevation_deg, &format!("interceptor {i}: LOS elevation"))?;
            off_pole(s.lead_elevation_deg, &format!("interceptor {i}: lead elevation"))?;
            if !(s.los_azimuth_deg.is_finite() && s.lead_azimuth_deg.is_finite()) {
                return invalid(format!("interceptor {i}: angles must be finite"));
            }
        }
        self.network()?;
        self.guidance_shape()?.check_shape().map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        let g = &self.guidance;
        if let GainSpec::Explicit { values } = &g.gains {
            if values.len() != n {
                return invalid(format!("expected {n} explicit gains, got {}", values.len()));
            }
            if let Some(i) = values.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
                return invalid(format!("gain for interceptor {i} must be positive"));
            }
        }
        if let MuSpec::Explicit { value } = g.mu {
            if !(value >= 0.0 && value.is_finite()) {
                return invalid("mu must be non-negative");
            }
        }
        self.allocation.norm.to_norm()?;
        finite_positive(self.allocation.accel_limit_g, "acceleration limit")?;
        match &self.uncertainty {
            UncertaintySpec::None => {}
            UncertaintySpec::ExpLeadAngle { amplitude_range, shape, amplitudes } => {
                if !(*amplitude_range >= 0.0 && amplitude_range.is_finite()) {
                    return invalid("uncertainty amplitude_range must be non-negative");
                }
                if !(*shape >= 0.0 && shape.is_finite()) {
                    return invalid("uncertainty shape must be non-negative");
                }
                if let Some(a) = amplitudes {
                    if a.len() != n || a.iter().any(|x| !x.is_finite()) {
                        return invalid(format!("expected {n} finite uncertainty amplitudes"));
                    }
                }
            }
        }
        let it = &self.integration;
        finite_positive(it.dt, "dt")?;
        finite_positive(it.t_max, "t_max")?;
        finite_positive(it.capture_radius, "capture radius")?;
        finite_positive(it.consensus_tol, "consensus tolerance")?;
        if !(it.consensus_dwell >= 0.0 && it.consensus_dwell.is_finite()) {
            return invalid("consensus dwell must be non-negative");
        }
        if it.dt > it.t_max {
            return invalid("dt exceeds t_max");
        }
        if self.output.decimation == 0 {
            return invalid("output decimation must be at least 1");
        }
        Ok(())
    }

    /// Graphs and schedule; the schedule is drawn from the seed when random.
    pub fn network(&self) -> Result<SwitchedNetwork, ScenarioError> {
        let n = self.interceptors.len();
        let topo = &self.topology;
        if topo.graphs.is_empty() {
            return invalid("topology needs at least one graph");
        }
        let mut graphs = Vec::with_capacity(topo.graphs.len());
        for (index, g) in topo.graphs.iter().enumerate() {
            let graph = Graph::new(n, g.edges.iter().copied())
                .map_err(|e| ScenarioError::Invalid(format!("graph {index}: {e}")))?;
            if !graph.is_connected() {
                return invalid(format!("graph {index} is disconnected"));
            }
            graphs.push(graph);
        }
        let schedule = match &topo.schedule {
            ScheduleSpec::Explicit { switches } => switches.clone(),
            ScheduleSpec::Random { dwell_min, dwell_max } => {
                random_schedule(graphs.len(), self.integration.t_max, *dwell_min, *dwell_max, self.seed)
                    .map_err(|e| ScenarioError::Invalid(format!("schedule: {e}")))?
            }
        };
        SwitchedNetwork::new(graphs, schedule).map_err(|e| ScenarioError::Invalid(format!("schedule: {e}")))
    }

    fn guidance_shape(&self) -> Result<GuidanceParams<f64>, ScenarioError> {
        let g = &self.guidance;
        if !(g.boundary_layer >= 0.0 && g.boundary_layer.is_finite()) {
            return invalid("boundary layer must be non-negative");
        }
        Ok(GuidanceParams {
            m_coef: g.m_coef,
            n_coef: g.n_coef,
            m_exp: g.m_exp,
            n_exp: g.n_exp,
            k_exp: g.k_exp,
            settling_time: g.settling_time,
            mu: 0.0,
            gains: Vec::new(),
            w_dot_max: 0.0,
            boundary_layer: g.boundary_layer,
        })
    }

    pub fn initial_states(&self) -> Vec<InterceptorState<f64>> {
        self.interceptors
            .iter()
            .map(|s| {
                InterceptorState::from_degrees(
                    s.range,
                    s.los_elevation_deg,
                    s.los_azimuth_deg,
                    s.lead_elevation_deg,
                    s.lead_azimuth_deg,
                    s.speed,
                )
            })
            .collect()
    }

    pub fn agents(&self) -> Vec<Agent<f64>> {
        self.interceptors
            .iter()
            .map(|s| {
                let mut a = Agent::new(s.nav_gain, s.c_z, s.c_y);
                a.weights.extend(s.weight_changes.iter().copied().filter(|w| w.time > 0.0));
                a
            })
            .collect()
    }

    pub fn uncertainty_model(&self) -> UncertaintyModel<f64> {
        match &self.uncertainty {
            UncertaintySpec::None => UncertaintyModel::None,
            UncertaintySpec::ExpLeadAngle { amplitude_range, shape, amplitudes } => {
                let amplitudes = amplitudes.clone().unwrap_or_else(|| {
                    // Decorrelated from the schedule stream, which uses the seed itself.
                    let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x5eed_0fb0);
                    (0..self.interceptors.len())
                        .map(|_| {
                            if *amplitude_range > 0.0 {
                                rng.gen_range(-amplitude_range..=*amplitude_range)
                            } else {
                                0.0
                            }
                        })
                        .collect()
                });
                UncertaintyModel::ExpLeadAngle { amplitudes, shape: *shape }
            }
        }
    }

    pub fn sim_config(&self) -> Result<SimConfig<f64>, ScenarioError> {
        let it = &self.integration;
        Ok(SimConfig {
            dt: it.dt,
            t_max: it.t_max,
            capture_radius: it.capture_radius,
            accel_limit: self.allocation.accel_limit_g * GRAVITY,
            norm: self.allocation.norm.to_norm()?,
            consensus_tol: it.consensus_tol,
            consensus_dwell: it.consensus_dwell,
            decimation: self.output.decimation,
        })
    }
}

/// Grid size for the uncertainty-rate estimate.
pub const RATE_SAMPLES: usize = 10_000;

/// Bound on `|ẇ|` from dense sampling of `|dw/dσ|` over `σ ∈ (0, π]`, times a
/// bound on `|σ̇|` of `a_max / V_min + V_max / r_min` taken at launch.
pub fn estimate_w_dot_max(model: &UncertaintyModel<f64>, states: &[InterceptorState<f64>], accel_limit: f64) -> f64 {
    if model.is_none() || model.max_amplitude() == 0.0 {
        return 0.0;
    }
    let v_min = states.iter().map(|s| s.speed).fold(f64::INFINITY, f64::min);
    let v_max = states.iter().map(|s| s.speed).fold(0.0, f64::max);
    let r_min = states.iter().map(|s| s.range).fold(f64::INFINITY, f64::min);
    let sigma_rate = accel_limit / v_min + v_max / r_min;
    let n = states.len();
    let mut slope: f64 = 0.0;
    for k in 1..=RATE_SAMPLES {
        let sigma = std::f64::consts::PI * k as f64 / RATE_SAMPLES as f64;
        for i in 0..n {
            slope = slope.max(model.slope(i, sigma).abs());
        }
    }
    slope * sigma_rate
}

/// Scenario with every automatic choice made and recorded.
#[derive(Debug, Clone)]
pub struct ResolvedScenario {
    pub scenario: Scenario,
    pub engagement: Engagement<f64>,
    pub bounds: TopologyBounds<f64>,
    pub certification: CertificationReport,
    pub gains_auto: bool,
    pub mu_auto: bool,
}

impl ResolvedScenario {
    pub fn certified(&self) -> bool {
        self.certification.pass
    }

    pub fn may_run(&self) -> bool {
        self.certification.pass || self.scenario.guidance.waive_certification
    }
}

pub fn resolve(scenario: Scenario) -> Result<ResolvedScenario, ScenarioError> {
    scenario.validate()?;
    let network = scenario.network()?;
    let bounds = topology_bounds::<f64>(&network).map_err(|e| ScenarioError::Invalid(e.to_string()))?;
    let initial = scenario.initial_states();
    let config = scenario.sim_config()?;
    let uncertainty = scenario.uncertainty_model();
    let mut params = scenario.guidance_shape()?;
    params.w_dot_max = estimate_w_dot_max(&uncertainty, &initial, config.accel_limit);
    let n = initial.len();
    let gains_auto = matches!(scenario.guidance.gains, GainSpec::Auto);
    params.gains = match &scenario.guidance.gains {
        GainSpec::Auto => {
            let bound = min_gain(&params, &bounds).map_err(|e| ScenarioError::Invalid(e.to_string()))?;
            vec![AUTO_MARGIN * bound; n]
        }
        GainSpec::Explicit { values } => values.clone(),
    };
    let mu_auto = matches!(scenario.guidance.mu, MuSpec::Auto);
    params.mu = match scenario.guidance.mu {
        MuSpec::Auto => AUTO_MARGIN * min_mu(&params, &bounds),
        MuSpec::Explicit { value } => value,
    };
    let certification = certify(&params, &bounds);
    let engagement = Engagement { initial, agents: scenario.agents(), network, params, uncertainty, config };
    Ok(ResolvedScenario { scenario, engagement, bounds, certification, gains_auto, mu_auto })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn baseline_matches_published_lists() {
        let s = paper_baseline();
        let col = |f: fn(&InterceptorSpec) -> f64| s.interceptors.iter().map(f).collect::<Vec<_>>();
        assert_eq!(col(|i| i.range), vec![10_000.0; 5]);
        assert_eq!(col(|i| i.speed), vec![400.0, 405.0, 390.0, 385.0, 395.0]);
        assert_eq!(col(|i| i.los_elevation_deg), vec![45.0, -45.0, 135.0, -135.0, 0.0]);
        assert_eq!(col(|i| i.los_azimuth_deg), vec![0.0, 60.0, -75.0, -10.0, -20.0]);
        assert_eq!(col(|i| i.lead_elevation_deg), vec![120.0, -60.0, 10.0, 75.0, -100.0]);
        assert_eq!(col(|i| i.lead_azimuth_deg), vec![55.0, 15.0, -45.0, -30.0, -60.0]);
        assert_eq!(col(|i| i.c_z), vec![1.0; 5]);
        assert_eq!(col(|i| i.c_y), vec![1.0; 5]);
        let g = &s.guidance;
        assert_eq!((g.m_coef, g.n_coef, g.m_exp, g.n_exp, g.k_exp, g.settling_time), (1.0, 5.0, 0.1, 2.0, 2.0, 3.0));
        assert_eq!(s.allocation.accel_limit_g, 40.0);
        assert_eq!(s.topology.graphs.len(), 3);
    }

    #[test]
    fn baseline_resolves_and_certifies() {
        let r = resolve(paper_baseline()).unwrap();
        assert!(r.certified(), "{}", r.certification);
        assert_eq!(r.bounds.min_edges, 5);
        assert!((r.bounds.min_lambda2 - 0.51880569590798437737).abs() < 1e-12);
        let gain = r.engagement.params.gains[0];
        assert!((gain - AUTO_MARGIN * 1.61091667047127523332).abs() < 1e-9);
        assert_eq!(r.engagement.params.mu, 0.0);
    }

    #[test]
    fn round_trip() {
        let mut s = paper_baseline();
        s.uncertainty = baseline_uncertainty();
        s.allocation.norm = NormSpec::INF;
        s.guidance.gains = GainSpec::Explicit { values: vec![1.7, 1.8, 1.9, 2.0, 0.1 + 0.2] };
        s.topology.schedule =
            ScheduleSpec::Explicit { switches: vec![Switch { time: 0.0, graph: 2 }, Switch { time: 1.25, graph: 0 }] };
        assert_eq!(parse_scenario(&to_json(&s)).unwrap(), s);
        let base = paper_baseline();
        assert_eq!(parse_scenario(&to_json(&base)).unwrap(), base);
    }

    #[test]
    fn validation_messages() {
        let mut s = paper_baseline();
        s.interceptors[2].nav_gain = 2.0;
        assert!(s.validate().unwrap_err().to_string().contains("nav gain must exceed 2"));

        let mut s = paper_baseline();
        s.topology.graphs[1] = GraphSpec { edges: vec![(0, 1), (2, 3)] };
        assert!(s.validate().unwrap_err().to_string().contains("graph 1 is disconnected"));

        let mut s = paper_baseline();
        s.guidance.k_exp = 11.0;
        assert!(s.validate().unwrap_err().to_string().contains("exponent constraint"));

        let mut s = paper_baseline();
        s.allocation.norm = NormSpec::Exponent(0.5);
        assert!(s.validate().is_err());

        let mut s = paper_baseline();
        s.interceptors[0].lead_elevation_deg = 90.0;
        assert!(s.validate().unwrap_err().to_string().contains("singular"));
    }

    #[test]
    fn parse_errors_locate_the_problem() {
        let text = to_json(&paper_baseline()).replacen("\"speed\": 400.0", "\"speed\": \"fast\"", 1);
        match parse_scenario(&text) {
            Err(ScenarioError::Parse { line, .. }) => assert!(line > 1),
            other => panic!("{other:?}"),
        }
        let text = to_json(&paper_baseline()).replacen("\"m_coef\"", "\"m_coeff\"", 1);
        assert!(parse_scenario(&text).unwrap_err().to_string().contains("m_coeff"));
    }

    #[test]
    fn certification_follows_settling_time() {
        let r = resolve(paper_baseline()).unwrap();
        let mut s = paper_baseline();
        s.guidance.gains = GainSpec::Explicit { values: r.engagement.params.gains.clone() };
        assert!(resolve(s.clone()).unwrap().certified());
        s.guidance.settling_time = 0.03;
        let tight = resolve(s).unwrap();
        assert!(!tight.certified());
        assert!(!tight.may_run());
    }

    #[test]
    fn seeded_pieces_are_reproducible() {
        let mut s = paper_baseline();
        s.uncertainty = baseline_uncertainty();
        let a = resolve(s.clone()).unwrap();
        let b = resolve(s.clone()).unwrap();
        assert_eq!(a.engagement.network, b.engagement.network);
        assert_eq!(a.engagement.uncertainty, b.engagement.uncertainty);
        let UncertaintyModel::ExpLeadAngle { amplitudes, shape } = &a.engagement.uncertainty else { panic!() };
        assert_eq!(*shape, 8.0);
        assert!(amplitudes.iter().all(|x| x.abs() <= 3.0));
        assert!(a.engagement.params.mu > 0.0 && a.engagement.params.w_dot_max > 0.0);
        assert!(a.certified(), "{}", a.certification);
        s.seed += 1;
        assert_ne!(resolve(s).unwrap().engagement.network, a.engagement.network);
    }

    #[test]
    fn rate_estimate_dominates_model_slope() {
        let model = UncertaintyModel::ExpLeadAngle { amplitudes: vec![3.0], shape: 8.0 };
        let states = vec![InterceptorState::from_degrees(10_000.0, 0.0, 0.0, 20.0, 0.0, 400.0)];
        let est = estimate_w_dot_max(&model, &states, 392.4);
        // the slope of 3 exp(-8/σ) peaks at the end of (0, π]
        let pi = std::f64::consts::PI;
        let slope = 3.0 * (-8.0 / pi).exp() * 8.0 / (pi * pi);
        assert!((est - slope * (392.4 / 400.0 + 400.0 / 10_000.0)).abs() < 1e-12);
        assert_eq!(estimate_w_dot_max(&UncertaintyModel::None, &states, 392.4), 0.0);
    }
}
