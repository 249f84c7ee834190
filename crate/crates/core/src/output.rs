//! Result bundles (time-series CSV plus JSON summary), figure presets and sweeps.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::consensus::CertificationReport;
use crate::scenario::{
    baseline_uncertainty, paper_baseline, resolve, NormSpec, ResolvedScenario, Scenario, ScenarioError, UncertaintySpec,
};
use crate::sim::{post_consensus_checks, PostConsensusReport, SimError, SimMetrics, SimRecord};

pub const TIMESERIES_FILE: &str = "timeseries.csv";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Error)]
pub enum OutputError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("certification failed:\n{0}")]
    Certification(Box<CertificationReport>),
    #[error("simulation failed: {0}")]
    Runtime(SimError),
    #[error("cannot write {path}: {message}")]
    Write { path: String, message: String },
    #[error("unknown figure {0:?} (expected fig3, fig4, fig5 or fig6)")]
    UnknownFigure(String),
}

fn write_err(path: &Path, e: impl std::fmt::Display) -> OutputError {
    OutputError::Write { path: path.display().to_string(), message: e.to_string() }
}

/// One completed (or aborted) run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub resolved: ResolvedScenario,
    pub record: SimRecord<f64>,
    pub post_consensus: PostConsensusReport,
    pub error: Option<SimError>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub name: String,
    pub seed: u64,
    pub norm: String,
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub gains: Vec<f64>,
    pub gains_auto: bool,
    pub mu: f64,
    pub mu_auto: bool,
    pub w_dot_max: f64,
    pub uncertainty_amplitudes: Vec<f64>,
    pub metrics: SimMetrics,
    pub post_consensus: PostConsensusReport,
    pub post_consensus_pass: bool,
    pub certification: CertificationReport,
}

/// Runs a resolved scenario. Certification must pass unless waived in the file.
pub fn run_resolved(resolved: ResolvedScenario) -> Result<RunOutput, OutputError> {
    if !resolved.may_run() {
        return Err(OutputError::Certification(Box::new(resolved.certification.clone())));
    }
    let e = &resolved.engagement;
    let (record, error) = match e.run() {
        Ok(r) => (r, None),
        Err(f) => (*f.partial, Some(f.error)),
    };
    let post_consensus = post_consensus_checks(&record, &e.agents, e.config.consensus_dwell);
    Ok(RunOutput { resolved, record, post_consensus, error })
}

pub fn run_scenario(scenario: Scenario) -> Result<RunOutput, OutputError> {
    run_resolved(resolve(scenario)?)
}

impl RunOutput {
    pub fn summary(&self) -> Summary {
        let s = &self.resolved.scenario;
        let p = &self.resolved.engagement.params;
        let amplitudes = match &self.resolved.engagement.uncertainty {
            crate::sim::UncertaintyModel::None => Vec::new(),
            crate::sim::UncertaintyModel::ExpLeadAngle { amplitudes, .. } => amplitudes.clone(),
        };
        Summary {
            name: s.name.clone(),
            seed: s.seed,
            norm: s.allocation.norm.label(),
            status: if self.error.is_some() { "failed".into() } else { "ok".into() },
            error: self.error.as_ref().map(|e| e.to_string()),
            gains: p.gains.clone(),
            gains_auto: self.resolved.gains_auto,
            mu: p.mu,
            mu_auto: self.resolved.mu_auto,
            w_dot_max: p.w_dot_max,
            uncertainty_amplitudes: amplitudes,
            metrics: self.record.metrics.clone(),
            post_consensus_pass: self.post_consensus.pass(),
            post_consensus: self.post_consensus.clone(),
            certification: self.resolved.certification.clone(),
        }
    }

    /// Writes `timeseries.csv` and `summary.json` into `dir`.
    pub fn write_bundle(&self, dir: &Path) -> Result<(), OutputError> {
        fs::create_dir_all(dir).map_err(|e| write_err(dir, e))?;
        let csv_path = dir.join(TIMESERIES_FILE);
        let file = fs::File::create(&csv_path).map_err(|e| write_err(&csv_path, e))?;
        write_timeseries(&self.record, file).map_err(|e| write_err(&csv_path, e))?;
        let json_path = dir.join(SUMMARY_FILE);
        let text = serde_json::to_string_pretty(&self.summary()).map_err(|e| write_err(&json_path, e))?;
        fs::write(&json_path, text).map_err(|e| write_err(&json_path, e))
    }
}

pub const AGENT_COLUMNS: [&str; 12] =
    ["r", "thetaL", "psiL", "thetaM", "psiM", "sigma", "tgo", "w", "U", "az", "ay", "sat"];

pub fn timeseries_header(n: usize) -> Vec<String> {
    let mut h = vec!["t".to_string(), "eta".to_string()];
    for i in 0..n {
        h.extend(AGENT_COLUMNS.iter().map(|c| format!("{c}_{i}")));
    }
    h
}

/// Angles in degrees. Control columns are empty once an interceptor is captured.
pub fn write_timeseries<W: std::io::Write>(record: &SimRecord<f64>, out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    let n = record.samples.first().map_or(0, |s| s.agents.len());
    w.write_record(timeseries_header(n))?;
    let mut row: Vec<String> = Vec::with_capacity(2 + 12 * n);
    for s in &record.samples {
        row.clear();
        row.push(s.t.to_string());
        row.push(s.graph.to_string());
        for a in &s.agents {
            let st = &a.state;
            row.push(st.range.to_string());
            for ang in [st.los_elevation, st.los_azimuth, st.lead_elevation, st.lead_azimuth] {
                row.push(ang.to_degrees().to_string());
            }
            match &a.control {
                Some(c) => {
                    row.push(c.sigma.to_degrees().to_string());
                    row.push(c.t_go.to_string());
                    row.push(c.w.to_string());
                    row.push(c.command.to_string());
                    row.push(c.accel.az.to_string());
                    row.push(c.accel.ay.to_string());
                    row.push(u8::from(c.saturated).to_string());
                }
                None => {
                    row.push(st.effective_lead_angle().to_degrees().to_string());
                    row.extend(std::iter::repeat_n(String::new(), 6));
                }
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// A figure preset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    /// ℓ = 5 with time-to-go uncertainty (plus the matching w = 0 run).
    Fig3,
    /// ℓ = 1.
    Fig4,
    /// ℓ = 2.
    Fig5,
    /// ℓ → ∞ and the joint-cost comparison across ℓ ∈ {1, 2, ∞}.
    Fig6,
}

impl std::str::FromStr for Figure {
    type Err = OutputError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fig3" => Ok(Figure::Fig3),
            "fig4" => Ok(Figure::Fig4),
            "fig5" => Ok(Figure::Fig5),
            "fig6" => Ok(Figure::Fig6),
            other => Err(OutputError::UnknownFigure(other.into())),
        }
    }
}

/// Baseline with the given allocation norm and uncertainty.
pub fn baseline_with(norm: NormSpec, uncertainty: UncertaintySpec) -> Scenario {
    let mut s = paper_baseline();
    s.allocation.norm = norm;
    s.uncertainty = uncertainty;
    s
}

/// Labelled scenarios that make up a figure.
pub fn figure_scenarios(fig: Figure) -> Vec<(&'static str, Scenario)> {
    match fig {
        Figure::Fig3 => vec![
            ("uncertain", baseline_with(NormSpec::Exponent(5.0), baseline_uncertainty())),
            ("nominal", baseline_with(NormSpec::Exponent(5.0), UncertaintySpec::None)),
        ],
        Figure::Fig4 => vec![("l1", baseline_with(NormSpec::L1, UncertaintySpec::None))],
        Figure::Fig5 => vec![("l2", baseline_with(NormSpec::L2, UncertaintySpec::None))],
        Figure::Fig6 => vec![
            ("linf", baseline_with(NormSpec::INF, UncertaintySpec::None)),
            ("l1", baseline_with(NormSpec::L1, UncertaintySpec::None)),
            ("l2", baseline_with(NormSpec::L2, UncertaintySpec::None)),
        ],
    }
}

/// Joint costs of the ℓ₁, ℓ₂ and ℓ∞ runs, normalised by the ℓ₁ value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointCosts {
    pub labels: Vec<String>,
    /// Effort accumulated in the Euclidean norm for every run.
    pub euclidean: Vec<f64>,
    pub euclidean_normalized: Vec<f64>,
    /// Effort accumulated in each run's own allocation norm.
    pub own_norm: Vec<f64>,
    pub own_norm_normalized: Vec<f64>,
    pub complete: Vec<bool>,
}

pub fn joint_costs(runs: &[(&str, &RunOutput)]) -> JointCosts {
    let order = ["l1", "l2", "linf"];
    let pick: Vec<&RunOutput> =
        order.iter().filter_map(|l| runs.iter().find(|(k, _)| k == l).map(|(_, r)| *r)).collect();
    let euclidean: Vec<f64> = pick.iter().map(|r| r.record.metrics.joint_cost_l2).collect();
    let own: Vec<f64> = pick.iter().map(|r| r.record.metrics.joint_cost).collect();
    let norm = |v: &[f64]| v.iter().map(|x| x / v[0]).collect::<Vec<_>>();
    JointCosts {
        labels: order.iter().map(|s| s.to_string()).collect(),
        euclidean_normalized: norm(&euclidean),
        own_norm_normalized: norm(&own),
        euclidean,
        own_norm: own,
        complete: pick.iter().map(|r| r.error.is_none() && r.record.metrics.impact_spread.is_some()).collect(),
    }
}

pub const JOINT_COSTS_FILE: &str = "joint_costs.json";

/// Runs a figure preset and writes one bundle per run under `out/<label>`.
/// Runs that abort still write their partial bundle.
pub fn reproduce(fig: Figure, out: &Path) -> Result<Vec<(String, RunOutput)>, OutputError> {
    let runs: Vec<(&str, RunOutput)> = figure_scenarios(fig)
        .into_par_iter()
        .map(|(label, s)| run_scenario(s).map(|r| (label, r)))
        .collect::<Result<_, _>>()?;
    for (label, r) in &runs {
        r.write_bundle(&out.join(label))?;
    }
    if fig == Figure::Fig6 {
        let refs: Vec<(&str, &RunOutput)> = runs.iter().map(|(l, r)| (*l, r)).collect();
        let path = out.join(JOINT_COSTS_FILE);
        let text = serde_json::to_string_pretty(&joint_costs(&refs)).map_err(|e| write_err(&path, e))?;
        fs::write(&path, text).map_err(|e| write_err(&path, e))?;
    }
    Ok(runs.into_iter().map(|(l, r)| (l.to_string(), r)).collect())
}

/// Launch envelope for randomised geometries (degrees).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySpec {
    /// Relative spread of the launch range around the base value.
    #[serde(default = "default_range_jitter")]
    pub range_jitter: f64,
    #[serde(default = "default_lead_deg")]
    pub lead_deg: (f64, f64),
    #[serde(default = "default_los_elevation_deg")]
    pub los_elevation_deg: (f64, f64),
    #[serde(default = "default_los_azimuth_deg")]
    pub los_azimuth_deg: (f64, f64),
}

fn default_range_jitter() -> f64 {
    0.2
}
fn default_lead_deg() -> (f64, f64) {
    (-60.0, 60.0)
}
fn default_los_elevation_deg() -> (f64, f64) {
    (-75.0, 75.0)
}
fn default_los_azimuth_deg() -> (f64, f64) {
    (-180.0, 180.0)
}

impl Default for GeometrySpec {
    fn default() -> Self {
        Self {
            range_jitter: default_range_jitter(),
            lead_deg: default_lead_deg(),
            los_elevation_deg: default_los_elevation_deg(),
            los_azimuth_deg: default_los_azimuth_deg(),
        }
    }
}

impl GeometrySpec {
    /// Draws a new launch geometry for every interceptor of `s` from `seed`.
    pub fn apply(&self, s: &mut Scenario, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |(lo, hi): (f64, f64)| if hi > lo { rng.gen_range(lo..=hi) } else { lo };
        let j = self.range_jitter;
        for i in s.interceptors.iter_mut() {
            i.range *= 1.0 + draw((-j, j));
            i.los_elevation_deg = draw(self.los_elevation_deg);
            i.los_azimuth_deg = draw(self.los_azimuth_deg);
            i.lead_elevation_deg = draw(self.lead_deg);
            i.lead_azimuth_deg = draw(self.lead_deg);
        }
    }
}

/// Batch description. Samples are the product of the declared axes; an axis
/// left out keeps the base value, and a spec declaring no axis has no samples.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Base scenario; the baseline preset when absent.
    #[serde(default)]
    pub base: Option<Scenario>,
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
    #[serde(default)]
    pub dt: Option<Vec<f64>>,
    #[serde(default)]
    pub norms: Option<Vec<NormSpec>>,
    /// Redraws the launch geometry from each sample's seed.
    #[serde(default)]
    pub geometry: Option<GeometrySpec>,
    /// Write per-sample bundles (the aggregate file is always written).
    #[serde(default = "yes")]
    pub write_bundles: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSample {
    pub index: usize,
    pub seed: u64,
    pub dt: f64,
    pub norm: NormSpec,
    pub scenario: Scenario,
}

impl SweepSpec {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn samples(&self) -> Vec<SweepSample> {
        if self.seeds.is_none() && self.dt.is_none() && self.norms.is_none() {
            return Vec::new();
        }
        let base = self.base.clone().unwrap_or_else(paper_baseline);
        let seeds = self.seeds.clone().unwrap_or_else(|| vec![base.seed]);
        let dts = self.dt.clone().unwrap_or_else(|| vec![base.integration.dt]);
        let norms = self.norms.clone().unwrap_or_else(|| vec![base.allocation.norm]);
        let mut out = Vec::new();
        for &seed in &seeds {
            for &dt in &dts {
                for &norm in &norms {
                    let mut s = base.clone();
                    s.seed = seed;
                    s.integration.dt = dt;
                    s.allocation.norm = norm;
                    if let Some(g) = &self.geometry {
                        g.apply(&mut s, seed);
                    }
                    s.name = format!("{}#{}", base.name, out.len());
                    out.push(SweepSample { index: out.len(), seed, dt, norm, scenario: s });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub index: usize,
    pub seed: u64,
    pub dt: f64,
    pub norm: String,
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub consensus_time: Option<f64>,
    pub spread_at_settling: Option<f64>,
    pub impact_times: Vec<Option<f64>>,
    pub impact_spread: Option<f64>,
    pub mean_impact_time: Option<f64>,
    pub joint_cost: Option<f64>,
    pub joint_cost_l2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Distribution {
    pub count: usize,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub mean: Option<f64>,
}

impl Distribution {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let v: Vec<f64> = values.into_iter().collect();
        if v.is_empty() {
            return Self::default();
        }
        Self {
            count: v.len(),
            min: v.iter().copied().reduce(f64::min),
            max: v.iter().copied().reduce(f64::max),
            mean: Some(v.iter().sum::<f64>() / v.len() as f64),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SweepReport {
    pub entries: Vec<SweepEntry>,
    pub failures: usize,
    pub consensus_time: Distribution,
    pub impact_spread: Distribution,
}

pub const SWEEP_FILE: &str = "sweep.json";

fn entry(sample: &SweepSample, result: &Result<RunOutput, OutputError>) -> SweepEntry {
    let mut e = SweepEntry {
        index: sample.index,
        seed: sample.seed,
        dt: sample.dt,
        norm: sample.norm.label(),
        status: "ok".into(),
        error: None,
        consensus_time: None,
        spread_at_settling: None,
        impact_times: Vec::new(),
        impact_spread: None,
        mean_impact_time: None,
        joint_cost: None,
        joint_cost_l2: None,
    };
    match result {
        Ok(r) => {
            let m = &r.record.metrics;
            if let Some(err) = &r.error {
                e.status = "failed".into();
                e.error = Some(err.to_string());
            }
            e.consensus_time = m.consensus_time;
            e.spread_at_settling = m.spread_at_settling;
            e.impact_times = m.impact_times.clone();
            e.impact_spread = m.impact_spread;
            e.mean_impact_time = m.mean_impact_time;
            e.joint_cost = Some(m.joint_cost);
            e.joint_cost_l2 = Some(m.joint_cost_l2);
        }
        Err(err) => {
            e.status = "failed".into();
            e.error = Some(err.to_string());
        }
    }
    e
}

/// Runs every sample in parallel. Failures are recorded and do not stop the sweep.
pub fn sweep(
    spec: &SweepSpec,
    out: Option<&Path>,
) -> Result<(SweepReport, Vec<Result<RunOutput, OutputError>>), OutputError> {
    let samples = spec.samples();
    let results: Vec<Result<RunOutput, OutputError>> = samples
        .par_iter()
        .map(|s| {
            let r = run_scenario(s.scenario.clone());
            if let (Some(dir), Ok(run), true) = (out, &r, spec.write_bundles) {
                run.write_bundle(&sample_dir(dir, s.index))?;
            }
            r
        })
        .collect();
    let entries: Vec<SweepEntry> = samples.iter().zip(&results).map(|(s, r)| entry(s, r)).collect();
    let report = SweepReport {
        failures: entries.iter().filter(|e| e.status != "ok").count(),
        consensus_time: Distribution::of(entries.iter().filter_map(|e| e.consensus_time)),
        impact_spread: Distribution::of(entries.iter().filter_map(|e| e.impact_spread)),
        entries,
    };
    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(|e| write_err(dir, e))?;
        let path = dir.join(SWEEP_FILE);
        let text = serde_json::to_string_pretty(&report).map_err(|e| write_err(&path, e))?;
        fs::write(&path, text).map_err(|e| write_err(&path, e))?;
    }
    Ok((report, results))
}

pub fn sample_dir(out: &Path, index: usize) -> PathBuf {
    out.join(format!("sample_{index:04}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let h = timeseries_header(2);
        assert_eq!(h.len(), 2 + 24);
        assert_eq!(&h[..4], &["t", "eta", "r_0", "thetaL_0"]);
        assert_eq!(h[13], "sat_0");
        assert_eq!(h[14], "r_1");
        assert_eq!(h.last().unwrap(), "sat_1");
    }

    #[test]
    fn empty_sweep_has_no_samples() {
        let spec = SweepSpec::parse("{}").unwrap();
        assert!(spec.samples().is_empty());
        let (report, runs) = sweep(&spec, None).unwrap();
        assert!(report.entries.is_empty() && runs.is_empty());
    }

    #[test]
    fn sweep_axes_multiply() {
        let spec = SweepSpec::parse(r#"{"seeds": [1, 2, 3], "dt": [0.001, 0.0005]}"#).unwrap();
        let s = spec.samples();
        assert_eq!(s.len(), 6);
        assert_eq!((s[1].seed, s[1].dt), (1, 0.0005));
        assert!(s.iter().all(|x| x.norm == NormSpec::L2));
    }

    #[test]
    fn geometry_draws_stay_in_envelope() {
        let g = GeometrySpec::default();
        let mut s = paper_baseline();
        g.apply(&mut s, 9);
        for i in &s.interceptors {
            assert!((8000.0..=12000.0).contains(&i.range));
            assert!(i.lead_elevation_deg.abs() <= 60.0 && i.lead_azimuth_deg.abs() <= 60.0);
            assert!(i.los_elevation_deg.abs() <= 75.0);
        }
        let mut again = paper_baseline();
        g.apply(&mut again, 9);
        assert_eq!(s, again);
    }

    #[test]
    fn figure_names() {
        assert_eq!("fig6".parse::<Figure>().unwrap(), Figure::Fig6);
        assert!("fig7".parse::<Figure>().is_err());
        assert_eq!(figure_scenarios(Figure::Fig3).len(), 2);
    }
}
