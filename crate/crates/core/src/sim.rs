//! Closed-loop engagement simulation: snapshot, communicate, command, allocate,
//! saturate, integrate, detect capture.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::allocation::{allocate, is_saturated, saturate, AllocationError, AllocationProblem, Norm};
use crate::consensus::{consensus_term, GuidanceParams};
use crate::kinematics::{
    lead_angle_rate, state_derivatives, tgo_drift, tgo_rate_coefficients, time_to_go, InterceptorState,
    KinematicsError, LateralAccel, StateRates, MIN_RANGE_GUARD,
};
use crate::scalar::Scalar;
use crate::topology::SwitchedNetwork;

/// Additive time-to-go error `w_i`.
#[derive(Debug, Clone, PartialEq)]
pub enum UncertaintyModel<T> {
    None,
    /// `w_i = amplitude_i · exp(-shape / σ_M,i)`, `σ_M` in radians.
    ExpLeadAngle {
        amplitudes: Vec<T>,
        shape: T,
    },
}

impl<T: Scalar> UncertaintyModel<T> {
    pub fn is_none(&self) -> bool {
        matches!(self, UncertaintyModel::None)
    }

    pub fn value(&self, i: usize, sigma: T) -> T {
        match self {
            UncertaintyModel::None => T::zero(),
            UncertaintyModel::ExpLeadAngle { amplitudes, shape } => {
                if sigma <= T::zero() {
                    return if *shape > T::zero() { T::zero() } else { amplitudes[i] };
                }
                amplitudes[i] * (-*shape / sigma).exp()
            }
        }
    }

    /// `dw_i/dσ`.
    pub fn slope(&self, i: usize, sigma: T) -> T {
        match self {
            UncertaintyModel::None => T::zero(),
            UncertaintyModel::ExpLeadAngle { shape, .. } => {
                if sigma <= T::zero() {
                    return T::zero();
                }
                self.value(i, sigma) * *shape / (sigma * sigma)
            }
        }
    }

    pub fn max_amplitude(&self) -> T {
        match self {
            UncertaintyModel::None => T::zero(),
            UncertaintyModel::ExpLeadAngle { amplitudes, .. } => {
                amplitudes.iter().fold(T::zero(), |m, a| m.max(a.abs()))
            }
        }
    }
}

/// Channel weights `(c_z, c_y)` taking effect from `time` on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightSwitch<T> {
    pub time: T,
    pub c_z: T,
    pub c_y: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Agent<T> {
    pub nav_gain: T,
    /// Piecewise-constant weights; the first entry applies before its own time too.
    pub weights: Vec<WeightSwitch<T>>,
}

impl<T: Scalar> Agent<T> {
    pub fn new(nav_gain: T, c_z: T, c_y: T) -> Self {
        Self { nav_gain, weights: vec![WeightSwitch { time: T::zero(), c_z, c_y }] }
    }

    pub fn weights_at(&self, t: T) -> (T, T) {
        let idx = self.weights.partition_point(|w| w.time <= t).saturating_sub(1);
        let w = self.weights[idx];
        (w.c_z, w.c_y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig<T> {
    pub dt: T,
    pub t_max: T,
    pub capture_radius: T,
    pub accel_limit: T,
    pub norm: Norm<T>,
    pub consensus_tol: T,
    pub consensus_dwell: T,
    /// Record every `decimation`-th step.
    pub decimation: usize,
}

impl<T: Scalar> Default for SimConfig<T> {
    fn default() -> Self {
        Self {
            dt: T::lit(1e-3),
            t_max: T::lit(60.0),
            capture_radius: T::lit(0.5),
            accel_limit: T::lit(crate::allocation::DEFAULT_ACCEL_LIMIT),
            norm: Norm::P(T::lit(2.0)),
            consensus_tol: T::lit(0.01),
            consensus_dwell: T::lit(0.2),
            decimation: 10,
        }
    }
}

/// Everything needed to integrate one engagement.
#[derive(Debug, Clone)]
pub struct Engagement<T> {
    pub initial: Vec<InterceptorState<T>>,
    pub agents: Vec<Agent<T>>,
    pub network: SwitchedNetwork,
    pub params: GuidanceParams<T>,
    pub uncertainty: UncertaintyModel<T>,
    pub config: SimConfig<T>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("interceptor {id} at t = {t:.6} s: {source}")]
    Kinematics { id: usize, t: f64, source: KinematicsError },
    #[error("interceptor {id} at t = {t:.6} s: {source}")]
    Allocation { id: usize, t: f64, source: AllocationError },
    #[error("invalid engagement: {0}")]
    Setup(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwarmState<T> {
    pub t: T,
    pub interceptors: Vec<InterceptorState<T>>,
    /// Interpolated impact time once captured.
    pub impact: Vec<Option<T>>,
}

impl<T: Scalar> SwarmState<T> {
    pub fn new(interceptors: Vec<InterceptorState<T>>) -> Self {
        let n = interceptors.len();
        Self { t: T::zero(), interceptors, impact: vec![None; n] }
    }

    pub fn is_active(&self, i: usize) -> bool {
        self.impact[i].is_none()
    }

    pub fn all_captured(&self) -> bool {
        self.impact.iter().all(Option::is_some)
    }
}

/// Per-interceptor quantities computed from one snapshot and held over the step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentControl<T> {
    pub sigma: T,
    pub t_go: T,
    pub w: T,
    /// Rate of `w` under the applied acceleration.
    pub w_rate: T,
    pub command: T,
    /// Acceleration after saturation.
    pub accel: LateralAccel<T>,
    pub saturated: bool,
    /// The allocation had no usable coefficients and no acceleration was applied.
    pub degenerate: bool,
    /// `ṫ_go` under the applied acceleration, including `ẇ`.
    pub tgo_rate: T,
    pub c_z: T,
    pub c_y: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentSample<T> {
    pub state: InterceptorState<T>,
    pub active: bool,
    pub control: Option<AgentControl<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample<T> {
    pub t: T,
    pub graph: usize,
    pub agents: Vec<AgentSample<T>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SimMetrics {
    pub consensus_time: Option<f64>,
    /// Largest pairwise time-to-go gap at the first step with `t >= settling_time`.
    pub spread_at_settling: Option<f64>,
    pub impact_times: Vec<Option<f64>>,
    pub impact_spread: Option<f64>,
    pub mean_impact_time: Option<f64>,
    /// `Σ ‖(a_z/c_z, a_y/c_y)‖_ℓ dt` in the run's own norm.
    pub agent_costs: Vec<f64>,
    pub joint_cost: f64,
    /// Same accumulation in the Euclidean norm, comparable across runs with different norms.
    pub agent_costs_l2: Vec<f64>,
    pub joint_cost_l2: f64,
    pub saturation_occupancy: Vec<f64>,
    /// Steps on which the allocation was degenerate, per interceptor.
    pub degenerate_steps: Vec<usize>,
    pub final_time: f64,
    pub steps: usize,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimRecord<T> {
    pub dt: T,
    pub decimation: usize,
    pub samples: Vec<Sample<T>>,
    pub metrics: SimMetrics,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{error}")]
pub struct SimFailure<T> {
    pub error: SimError,
    pub partial: Box<SimRecord<T>>,
}

/// Interpolated capture instant when the range crosses `radius` during a step
/// from `t` to `t + dt`.
pub fn detect_capture<T: Scalar>(range_before: T, range_after: T, t: T, dt: T, radius: T) -> Option<T> {
    if range_before <= radius {
        return Some(t);
    }
    if range_after > radius {
        return None;
    }
    let frac = (range_before - radius) / (range_before - range_after);
    Some(t + frac.max(T::zero()).min(T::one()) * dt)
}

impl<T: Scalar> Engagement<T> {
    pub fn len(&self) -> usize {
        self.initial.len()
    }

    pub fn is_empty(&self) -> bool {
        self.initial.is_empty()
    }

    pub fn check(&self) -> Result<(), SimError> {
        let n = self.len();
        let fail = |m: String| Err(SimError::Setup(m));
        if n == 0 {
            return fail("no interceptors".into());
        }
        if self.agents.len() != n || self.params.gains.len() != n {
            return fail(format!("expected {n} agents and gains"));
        }
        if self.network.vertex_count() != n {
            return fail(format!("network has {} vertices for {n} interceptors", self.network.vertex_count()));
        }
        if let UncertaintyModel::ExpLeadAngle { amplitudes, .. } = &self.uncertainty {
            if amplitudes.len() != n {
                return fail(format!("expected {n} uncertainty amplitudes"));
            }
        }
        let c = &self.config;
        if !(c.dt > T::zero() && c.t_max > T::zero() && c.capture_radius > T::zero() && c.accel_limit > T::zero()) {
            return fail("dt, t_max, capture radius and acceleration limit must be positive".into());
        }
        if c.decimation == 0 {
            return fail("decimation must be at least 1".into());
        }
        if self.agents.iter().any(|a| a.weights.is_empty()) {
            return fail("every agent needs channel weights".into());
        }
        self.params.validate().map_err(|e| SimError::Setup(e.to_string()))?;
        c.norm.validate().map_err(|e| SimError::Setup(e.to_string()))
    }

    /// Controls for every active interceptor from the snapshot `state`.
    pub fn controls(&self, state: &SwarmState<T>) -> Result<Vec<Option<AgentControl<T>>>, SimError> {
        let t = state.t;
        let kin = |id: usize| move |source| SimError::Kinematics { id, t: t.as_f64(), source };
        let n = self.len();
        let mut sigma = vec![T::zero(); n];
        let mut w = vec![T::zero(); n];
        let mut t_go = vec![T::zero(); n];
        for i in (0..n).filter(|&i| state.is_active(i)) {
            let s = &state.interceptors[i];
            sigma[i] = s.effective_lead_angle();
            w[i] = self.uncertainty.value(i, sigma[i]);
            t_go[i] = time_to_go(s, self.agents[i].nav_gain, w[i]).map_err(kin(i))?.t_go;
        }
        let graph = self.network.graph_at(t.as_f64());
        let mut out = vec![None; n];
        for i in (0..n).filter(|&i| state.is_active(i)) {
            let s = &state.interceptors[i];
            let agent = &self.agents[i];
            let diffs: Vec<T> = graph.neighbors(i).filter(|&j| state.is_active(j)).map(|j| t_go[j] - t_go[i]).collect();
            let rate = tgo_rate_coefficients(s, agent.nav_gain).map_err(kin(i))?;
            let command = consensus_term(&diffs, &self.params, self.params.gains[i]) - T::one() - rate.drift;
            let (c_z, c_y) = agent.weights_at(t);
            let prob = AllocationProblem::new(rate.b_z, rate.b_y, command, c_z, c_y, self.config.norm);
            // Both coefficients scale with range, so they vanish in the last metres
            // before impact; an unrealisable command then leaves the channel idle.
            let (raw, degenerate) = match allocate(&prob) {
                Ok(r) => (r.accel, false),
                Err(AllocationError::Degenerate { .. }) => (LateralAccel::zero(), true),
                Err(source) => return Err(SimError::Allocation { id: i, t: t.as_f64(), source }),
            };
            let saturated = is_saturated(&raw, self.config.accel_limit);
            let accel = saturate(raw, self.config.accel_limit);
            let w_rate = if self.uncertainty.is_none() || s.range <= T::lit(MIN_RANGE_GUARD) {
                T::zero()
            } else {
                self.uncertainty.slope(i, sigma[i]) * lead_angle_rate(s, &accel).map_err(kin(i))?
            };
            out[i] = Some(AgentControl {
                sigma: sigma[i],
                t_go: t_go[i],
                w: w[i],
                w_rate,
                command,
                accel,
                saturated,
                degenerate,
                tgo_rate: rate.drift + rate.b_z * accel.az + rate.b_y * accel.ay + w_rate,
                c_z,
                c_y,
            });
        }
        Ok(out)
    }

    /// One zero-order-hold RK4 step of every active interceptor followed by
    /// capture detection. Returns the controls that were applied.
    pub fn step(&self, state: &mut SwarmState<T>, dt: T) -> Result<Vec<Option<AgentControl<T>>>, SimError> {
        let controls = self.controls(state)?;
        let t = state.t;
        for (i, control) in controls.iter().enumerate() {
            let Some(control) = control else { continue };
            let s = state.interceptors[i];
            let next = match rk4(&s, &control.accel, dt) {
                Ok(next) => next,
                // Inside the singular core around the target: finish on a straight line.
                Err(KinematicsError::BelowRangeGuard) => straight_line(&s, dt),
                Err(source) => return Err(SimError::Kinematics { id: i, t: t.as_f64(), source }),
            };
            state.interceptors[i] = next;
            state.impact[i] = detect_capture(s.range, next.range, t, dt, self.config.capture_radius);
        }
        state.t = t + dt;
        Ok(controls)
    }

    pub fn run(&self) -> Result<SimRecord<T>, SimFailure<T>> {
        let mut rec = SimRecord {
            dt: self.config.dt,
            decimation: self.config.decimation,
            samples: Vec::new(),
            metrics: SimMetrics::default(),
        };
        if let Err(error) = self.check() {
            return Err(SimFailure { error, partial: Box::new(rec) });
        }
        let n = self.len();
        let cfg = &self.config;
        let dt = cfg.dt;
        let max_steps = (cfg.t_max / dt).ceil().to_usize().unwrap_or(usize::MAX);
        let mut state = SwarmState::new(self.initial.clone());
        for i in 0..n {
            if state.interceptors[i].range <= cfg.capture_radius {
                state.impact[i] = Some(T::zero());
            }
        }
        let mut consensus = ConsensusTracker::new(cfg.consensus_tol, cfg.consensus_dwell);
        let settling = self.params.settling_time;
        let m = &mut rec.metrics;
        m.agent_costs = vec![0.0; n];
        m.agent_costs_l2 = vec![0.0; n];
        m.degenerate_steps = vec![0; n];
        let mut sat_steps = vec![0usize; n];
        let mut active_steps = vec![0usize; n];
        let mut step = 0usize;
        let mut failure = None;

        while step < max_steps && !state.all_captured() {
            state.t = T::lit(step as f64) * dt;
            let t = state.t;
            let graph = self.network.active_graph(t.as_f64());
            let before = state.clone();
            let controls = match self.step(&mut state, dt) {
                Ok(c) => c,
                Err(e) => {
                    failure = Some(e);
                    break;
                }
            };

            let spread = tgo_spread(&controls);
            consensus.update(t, spread);
            if m.spread_at_settling.is_none() && t >= settling {
                m.spread_at_settling = Some(spread.as_f64());
            }
            for (i, c) in controls.iter().enumerate() {
                let Some(c) = c else { continue };
                let (x, y) = (c.accel.az / c.c_z, c.accel.ay / c.c_y);
                m.agent_costs[i] += (cfg.norm.eval(x, y) * dt).as_f64();
                m.agent_costs_l2[i] += (x.hypot(y) * dt).as_f64();
                active_steps[i] += 1;
                sat_steps[i] += usize::from(c.saturated);
                m.degenerate_steps[i] += usize::from(c.degenerate);
            }
            if step.is_multiple_of(cfg.decimation) {
                rec.samples.push(Sample {
                    t,
                    graph,
                    agents: (0..n)
                        .map(|i| AgentSample {
                            state: before.interceptors[i],
                            active: before.is_active(i),
                            control: controls[i],
                        })
                        .collect(),
                });
            }
            step += 1;
        }

        let m = &mut rec.metrics;
        m.steps = step;
        m.final_time = (T::lit(step as f64) * dt).as_f64();
        m.consensus_time = consensus.finish(state.all_captured()).map(|x| x.as_f64());
        m.impact_times = state.impact.iter().map(|x| x.map(|v| v.as_f64())).collect();
        let hits: Vec<f64> = m.impact_times.iter().flatten().copied().collect();
        if hits.len() == n {
            let lo = hits.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = hits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            m.impact_spread = Some(hi - lo);
            m.mean_impact_time = Some(hits.iter().sum::<f64>() / n as f64);
        }
        m.joint_cost = m.agent_costs.iter().sum();
        m.joint_cost_l2 = m.agent_costs_l2.iter().sum();
        m.saturation_occupancy = sat_steps
            .iter()
            .zip(&active_steps)
            .map(|(&s, &a)| if a == 0 { 0.0 } else { s as f64 / a as f64 })
            .collect();
        for (i, hit) in m.impact_times.iter().enumerate() {
            if hit.is_none() {
                m.notes.push(format!("interceptor {i}: no capture by t = {:.3} s", m.final_time));
            }
        }
        for (i, &k) in m.degenerate_steps.iter().enumerate() {
            if k > 0 {
                m.notes.push(format!(
                    "interceptor {i}: {k} step{} with vanishing allocation coefficients",
                    if k == 1 { "" } else { "s" }
                ));
            }
        }
        if m.consensus_time.is_none() {
            m.notes.push("consensus not reached".into());
        }
        if let Some(first) = m.impact_times.iter().flatten().copied().reduce(f64::min) {
            if m.consensus_time.is_none_or(|c| first < c) {
                m.notes.push(format!("first capture at {first:.4} s precedes consensus"));
            }
        }
        match failure {
            Some(error) => {
                rec.metrics.notes.push(format!("aborted: {error}"));
                Err(SimFailure { error, partial: Box::new(rec) })
            }
            None => Ok(rec),
        }
    }
}

fn tgo_spread<T: Scalar>(controls: &[Option<AgentControl<T>>]) -> T {
    let mut lo = T::infinity();
    let mut hi = T::neg_infinity();
    for c in controls.iter().flatten() {
        lo = lo.min(c.t_go);
        hi = hi.max(c.t_go);
    }
    if hi >= lo {
        hi - lo
    } else {
        T::zero()
    }
}

fn rk4<T: Scalar>(s: &InterceptorState<T>, a: &LateralAccel<T>, h: T) -> Result<InterceptorState<T>, KinematicsError> {
    let half = h / T::lit(2.0);
    let k1 = state_derivatives(s, a)?;
    let k2 = state_derivatives(&s.advanced(&k1, half), a)?;
    let k3 = state_derivatives(&s.advanced(&k2, half), a)?;
    let k4 = state_derivatives(&s.advanced(&k3, h), a)?;
    Ok(s.advanced(&StateRates::rk4_blend(&k1, &k2, &k3, &k4), h))
}

/// Closing at the current rate with all angles frozen.
fn straight_line<T: Scalar>(s: &InterceptorState<T>, h: T) -> InterceptorState<T> {
    let closing = s.speed * s.lead_elevation.cos() * s.lead_azimuth.cos();
    InterceptorState { range: s.range - closing * h, ..*s }
}

/// First instant the spread falls below tolerance and stays there for the dwell.
#[derive(Debug, Clone)]
struct ConsensusTracker<T> {
    tol: T,
    dwell: T,
    candidate: Option<T>,
    declared: Option<T>,
}

impl<T: Scalar> ConsensusTracker<T> {
    fn new(tol: T, dwell: T) -> Self {
        Self { tol, dwell, candidate: None, declared: None }
    }

    fn update(&mut self, t: T, spread: T) {
        if self.declared.is_some() {
            return;
        }
        if spread < self.tol {
            let start = *self.candidate.get_or_insert(t);
            if t - start >= self.dwell {
                self.declared = Some(start);
            }
        } else {
            self.candidate = None;
        }
    }

    /// A window still open when every interceptor has been captured counts.
    fn finish(&self, all_captured: bool) -> Option<T> {
        self.declared.or(if all_captured { self.candidate } else { None })
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Violation {
    pub interceptor: usize,
    pub t: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PostConsensusReport {
    pub consensus_reached: bool,
    pub checked_from: Option<f64>,
    pub lead_angle_increases: Vec<Violation>,
    pub tgo_not_decreasing: Vec<Violation>,
    pub uncertainty_rate_violations: Vec<Violation>,
}

impl PostConsensusReport {
    pub fn pass(&self) -> bool {
        self.consensus_reached
            && self.lead_angle_increases.is_empty()
            && self.tgo_not_decreasing.is_empty()
            && self.uncertainty_rate_violations.is_empty()
    }
}

/// Tolerance on per-sample growth of the effective lead angle.
pub const LEAD_ANGLE_SLACK: f64 = 1e-3;

/// After consensus plus `dwell`: the effective lead angle must not grow and
/// `t_go` must decrease. Along the whole run, any non-zero `ẇ` must stay below
/// `cos σ (1 - sin²σ/(4N-2))`.
pub fn post_consensus_checks<T: Scalar>(record: &SimRecord<T>, agents: &[Agent<T>], dwell: f64) -> PostConsensusReport {
    let mut report =
        PostConsensusReport { consensus_reached: record.metrics.consensus_time.is_some(), ..Default::default() };
    for sample in &record.samples {
        for (i, a) in sample.agents.iter().enumerate() {
            let Some(c) = a.control else { continue };
            if c.w_rate != T::zero() {
                let bound = -tgo_drift(c.sigma, agents[i].nav_gain);
                if !(c.w_rate.abs() < bound) {
                    report.uncertainty_rate_violations.push(Violation {
                        interceptor: i,
                        t: sample.t.as_f64(),
                        value: c.w_rate.as_f64(),
                    });
                }
            }
        }
    }
    let Some(start) = record.metrics.consensus_time.map(|c| c + dwell) else {
        return report;
    };
    report.checked_from = Some(start);
    let n = agents.len();
    let mut last_sigma: Vec<Option<T>> = vec![None; n];
    for sample in record.samples.iter().filter(|s| s.t.as_f64() >= start) {
        for (i, a) in sample.agents.iter().enumerate() {
            let Some(c) = a.control else { continue };
            let t = sample.t.as_f64();
            if let Some(prev) = last_sigma[i] {
                let growth = (c.sigma - prev).as_f64();
                if growth > LEAD_ANGLE_SLACK {
                    report.lead_angle_increases.push(Violation { interceptor: i, t, value: growth });
                }
            }
            last_sigma[i] = Some(c.sigma);
            if !(c.tgo_rate < T::zero()) {
                report.tgo_not_decreasing.push(Violation { interceptor: i, t, value: c.tgo_rate.as_f64() });
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{Graph, SwitchedNetwork};

    fn params(n: usize, gain: f64) -> GuidanceParams<f64> {
        GuidanceParams {
            m_coef: 1.0,
            n_coef: 5.0,
            m_exp: 0.1,
            n_exp: 2.0,
            k_exp: 2.0,
            settling_time: 3.0,
            mu: 0.0,
            gains: vec![gain; n],
            w_dot_max: 0.0,
            boundary_layer: 1e-3,
        }
    }

    fn engagement(states: Vec<InterceptorState<f64>>, graph: Graph, gain: f64) -> Engagement<f64> {
        let n = states.len();
        Engagement {
            initial: states,
            agents: vec![Agent::new(3.0, 1.0, 1.0); n],
            network: SwitchedNetwork::fixed(graph).unwrap(),
            params: params(n, gain),
            uncertainty: UncertaintyModel::None,
            config: SimConfig::default(),
        }
    }

    #[test]
    fn capture_interpolation() {
        let t = detect_capture(1.0_f64, -0.2, 2.0, 1e-3, 0.5).unwrap();
        assert!((t - (2.0 + 0.5 / 1.2 * 1e-3)).abs() < 1e-15);
        assert_eq!(detect_capture(1.0, 0.6, 2.0, 1e-3, 0.5), None);
        assert_eq!(detect_capture(0.4, 0.1, 2.0, 1e-3, 0.5), Some(2.0));
    }

    #[test]
    fn on_course_agents_fly_straight() {
        let s = |r: f64| InterceptorState::from_degrees(r, 10.0, 20.0, 0.0, 0.0, 400.0);
        let e = engagement(vec![s(4000.0), s(4000.0)], Graph::path(2), 1.0);
        let mut st = SwarmState::new(e.initial.clone());
        let c0 = e.controls(&st).unwrap();
        for c in c0.iter().flatten() {
            assert!(c.command.abs() < 1e-15 && c.accel.is_zero());
        }
        e.step(&mut st, 1e-3).unwrap();
        let c1 = e.controls(&st).unwrap();
        let t0 = c0[0].unwrap().t_go;
        assert!((c1[0].unwrap().t_go - (t0 - 1e-3)).abs() < 1e-12);
        assert!((st.interceptors[0].range - 3999.6).abs() < 1e-9);
    }

    #[test]
    fn lone_agent_cancels_drift() {
        let e =
            engagement(vec![InterceptorState::from_degrees(6000.0, 5.0, 5.0, 30.0, 20.0, 400.0)], Graph::path(1), 1.0);
        let st = SwarmState::new(e.initial.clone());
        let c = e.controls(&st).unwrap()[0].unwrap();
        // with nothing to agree on, t_go must fall at exactly one second per second
        assert!((c.tgo_rate + 1.0).abs() < 1e-9, "{}", c.tgo_rate);
    }

    #[test]
    fn pair_gap_shrinks() {
        let a = InterceptorState::from_degrees(6000.0, 0.0, 0.0, 25.0, 10.0, 400.0);
        let b = InterceptorState::from_degrees(6400.0, 10.0, 30.0, 20.0, -15.0, 400.0);
        let e = engagement(vec![a, b], Graph::path(2), 1.0);
        let mut st = SwarmState::new(e.initial.clone());
        let gap = |c: &[Option<AgentControl<f64>>]| (c[0].unwrap().t_go - c[1].unwrap().t_go).abs();
        let g0 = gap(&e.step(&mut st, 1e-3).unwrap());
        let g1 = gap(&e.controls(&st).unwrap());
        assert!(g1 < g0, "{g0} -> {g1}");
    }

    #[test]
    fn forward_salvo_converges() {
        let deg = [(60.0, 30.0), (-60.0, 15.0), (10.0, -45.0), (45.0, -30.0), (-40.0, -40.0)];
        let los = [(45.0, 0.0), (-45.0, 60.0), (135.0, -75.0), (-135.0, -10.0), (0.0, -20.0)];
        let speeds = [400.0, 405.0, 390.0, 385.0, 395.0];
        let states = (0..5)
            .map(|i| InterceptorState::from_degrees(10_000.0, los[i].0, los[i].1, deg[i].0, deg[i].1, speeds[i]))
            .collect();
        let mut e = engagement(states, Graph::cycle(5), 1.0);
        e.config.decimation = 50;
        let rec = e.run().unwrap();
        let m = &rec.metrics;
        assert!(m.consensus_time.unwrap() <= 3.0, "{m:?}");
        assert!(m.spread_at_settling.unwrap() < 0.01);
        assert!(m.impact_spread.unwrap() < 0.1, "{m:?}");
        assert!(m.joint_cost > 0.0 && m.joint_cost_l2 > 0.0);
        for s in &rec.samples {
            for (a, v) in s.agents.iter().zip(speeds) {
                assert_eq!(a.state.speed, v);
            }
        }
        let report = post_consensus_checks(&rec, &e.agents, 0.2);
        assert!(report.pass(), "{report:?}");
    }

    #[test]
    fn uncertainty_model() {
        let m = UncertaintyModel::ExpLeadAngle { amplitudes: vec![2.0_f64, -3.0], shape: 8.0 };
        assert!((m.value(0, 1.0) - 2.0 * (-8.0_f64).exp()).abs() < 1e-15);
        assert_eq!(m.value(1, 0.0), 0.0);
        assert_eq!(m.max_amplitude(), 3.0);
        let h = 1e-6;
        let fd = (m.value(1, 0.7 + h) - m.value(1, 0.7 - h)) / (2.0 * h);
        assert!((fd - m.slope(1, 0.7)).abs() < 1e-8);
        assert_eq!(UncertaintyModel::<f64>::None.value(0, 1.0), 0.0);
    }

    #[test]
    fn rate_bound_violation_flagged() {
        let a = InterceptorState::from_degrees(6000.0, 0.0, 0.0, 25.0, 10.0, 400.0);
        let b = InterceptorState::from_degrees(6400.0, 10.0, 30.0, 20.0, -15.0, 400.0);
        let mut e = engagement(vec![a, b], Graph::path(2), 1.0);
        e.config.decimation = 1;
        let calm = e.run().unwrap();
        assert!(post_consensus_checks(&calm, &e.agents, 0.2).uncertainty_rate_violations.is_empty());
        e.uncertainty = UncertaintyModel::ExpLeadAngle { amplitudes: vec![3.0, -3.0], shape: 0.01 };
        let rec = e.run().unwrap();
        let report = post_consensus_checks(&rec, &e.agents, 0.2);
        assert!(!report.uncertainty_rate_violations.is_empty());
        assert!(!report.pass());
    }

    #[test]
    fn weight_schedule_lookup() {
        let a = Agent {
            nav_gain: 3.0,
            weights: vec![
                WeightSwitch { time: 0.0, c_z: 1.0, c_y: 2.0 },
                WeightSwitch { time: 5.0, c_z: 3.0, c_y: 4.0 },
            ],
        };
        assert_eq!(a.weights_at(-1.0), (1.0, 2.0));
        assert_eq!(a.weights_at(4.999), (1.0, 2.0));
        assert_eq!(a.weights_at(5.0), (3.0, 4.0));
    }
}
