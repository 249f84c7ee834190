//! Predefined-time consensus on time-to-go and the cooperative command built on it.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::{tgo_drift, InterceptorState};
use crate::scalar::{smoothed_sign, Scalar};
use crate::special::gamma;
use crate::topology::TopologyBounds;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConsensusError {
    #[error("exponent constraint violated: need k*m_exp < 1 and k*n_exp > 1 (k*m_exp = {km}, k*n_exp = {kn})")]
    Exponent { km: f64, kn: f64 },
    #[error("parameter `{0}` must be positive and finite")]
    NonPositive(&'static str),
    #[error("gain for interceptor {0} must be positive and finite")]
    Gain(usize),
}

/// Tuning of the consensus law. `gains[i]` scales interceptor `i`'s term.
#[derive(Debug, Clone, PartialEq)]
pub struct GuidanceParams<T> {
    pub m_coef: T,
    pub n_coef: T,
    pub m_exp: T,
    pub n_exp: T,
    pub k_exp: T,
    pub settling_time: T,
    pub mu: T,
    pub gains: Vec<T>,
    /// Bound on |dw/dt| for the time-to-go uncertainty.
    pub w_dot_max: T,
    /// Width of the linear zone replacing sign(.); zero means exact sign.
    pub boundary_layer: T,
}

impl<T: Scalar> GuidanceParams<T> {
    /// Exponent and positivity checks, excluding the per-interceptor gains.
    pub fn check_shape(&self) -> Result<(), ConsensusError> {
        let positive =
            |v: T, name| if v > T::zero() && v.is_finite() { Ok(()) } else { Err(ConsensusError::NonPositive(name)) };
        positive(self.m_coef, "m_coef")?;
        positive(self.n_coef, "n_coef")?;
        positive(self.m_exp, "m_exp")?;
        positive(self.n_exp, "n_exp")?;
        positive(self.k_exp, "k_exp")?;
        positive(self.settling_time, "settling_time")?;
        if !(self.mu >= T::zero() && self.mu.is_finite()) {
            return Err(ConsensusError::NonPositive("mu"));
        }
        if !(self.boundary_layer >= T::zero() && self.boundary_layer.is_finite()) {
            return Err(ConsensusError::NonPositive("boundary_layer"));
        }
        let km = self.k_exp * self.m_exp;
        let kn = self.k_exp * self.n_exp;
        if !(km < T::one() && kn > T::one()) {
            return Err(ConsensusError::Exponent { km: km.as_f64(), kn: kn.as_f64() });
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConsensusError> {
        self.check_shape()?;
        for (i, g) in self.gains.iter().enumerate() {
            if !(*g > T::zero() && g.is_finite()) {
                return Err(ConsensusError::Gain(i));
            }
        }
        Ok(())
    }

    pub fn min_assigned_gain(&self) -> T {
        self.gains.iter().copied().fold(T::infinity(), T::min)
    }
}

/// Gain scale that makes the disagreement settle within `settling_time`
/// on a graph with unit edge-count to connectivity ratio.
pub fn settling_constant<T: Scalar>(p: &GuidanceParams<T>) -> Result<T, ConsensusError> {
    p.check_shape()?;
    let spread = p.n_exp - p.m_exp;
    let low = (T::one() - p.k_exp * p.m_exp) / spread;
    let high = (p.k_exp * p.n_exp - T::one()) / spread;
    let num = gamma(low) * gamma(high);
    let den = p.settling_time * p.m_coef.powf(p.k_exp) * gamma(p.k_exp) * spread;
    Ok(num / den * (p.m_coef / p.n_coef).powf(low))
}

/// Lower bound on every interceptor gain for the given switching family.
pub fn min_gain<T: Scalar>(p: &GuidanceParams<T>, b: &TopologyBounds<T>) -> Result<T, ConsensusError> {
    Ok(settling_constant(p)? * T::lit(b.min_edges as f64) / b.min_lambda2)
}

/// Lower bound on `mu` that dominates the uncertainty rate, given the assigned gains.
pub fn min_mu<T: Scalar>(p: &GuidanceParams<T>, b: &TopologyBounds<T>) -> T {
    if p.w_dot_max == T::zero() {
        return T::zero();
    }
    p.w_dot_max / (p.min_assigned_gain() * b.min_lambda2.sqrt())
}

/// Neighbour differences `t_go,j - t_go,i` for interceptor `i`.
pub fn neighbor_differences<T: Scalar>(t_go: &[T], i: usize, neighbors: impl IntoIterator<Item = usize>) -> Vec<T> {
    neighbors.into_iter().map(|j| t_go[j] - t_go[i]).collect()
}

/// Attractive consensus sum over neighbour differences.
///
/// Each difference `d` contributes `gain * ((M|d|^m + N|d|^n)^k + mu) * sat(d / eps)`,
/// which drives `t_go,i` toward its neighbours.
pub fn consensus_term<T: Scalar>(xi_diffs: &[T], p: &GuidanceParams<T>, gain: T) -> T {
    let sum = xi_diffs.iter().fold(T::zero(), |acc, &d| {
        let a = d.abs();
        let mag = (p.m_coef * a.powf(p.m_exp) + p.n_coef * a.powf(p.n_exp)).powf(p.k_exp) + p.mu;
        acc + mag * smoothed_sign(d, p.boundary_layer)
    });
    gain * sum
}

/// Cooperative command `U_i`: consensus term minus the open-loop rate of `t_go`
/// so that `d xi_i/dt = consensus_term + dw_i/dt`.
pub fn effective_command<T: Scalar>(
    s: &InterceptorState<T>,
    xi_diffs: &[T],
    p: &GuidanceParams<T>,
    gain: T,
    nav_gain: T,
) -> T {
    let drift = tgo_drift(s.effective_lead_angle(), nav_gain);
    consensus_term(xi_diffs, p, gain) - T::one() - drift
}

/// Scaled distance of `xi` from its average, the quantity the gain bounds make decay.
pub fn disagreement<T: Scalar>(xi: &[T], b: &TopologyBounds<T>) -> T {
    if xi.is_empty() {
        return T::zero();
    }
    let n = T::lit(xi.len() as f64);
    let mean = xi.iter().fold(T::zero(), |a, &x| a + x) / n;
    let norm = xi.iter().fold(T::zero(), |a, &x| a + (x - mean) * (x - mean)).sqrt();
    b.min_lambda2.sqrt() / T::lit(b.min_edges as f64) * norm
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainCheck {
    pub interceptor: usize,
    pub gain: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub exponent_ok: bool,
    pub k_m_exp: f64,
    pub k_n_exp: f64,
    pub min_edges: usize,
    pub min_lambda2: f64,
    pub settling_constant: Option<f64>,
    pub min_gain: Option<f64>,
    pub gains: Vec<GainCheck>,
    pub mu: f64,
    pub w_dot_max: f64,
    pub min_mu: Option<f64>,
    pub mu_ok: bool,
    pub pass: bool,
    pub reasons: Vec<String>,
}

/// Checks both sufficient conditions (gain and `mu`) plus the exponent constraints.
pub fn certify<T: Scalar>(p: &GuidanceParams<T>, b: &TopologyBounds<T>) -> CertificationReport {
    let km = (p.k_exp * p.m_exp).as_f64();
    let kn = (p.k_exp * p.n_exp).as_f64();
    let mut reasons = Vec::new();
    let exponent_ok = km < 1.0 && kn > 1.0;
    if !exponent_ok {
        reasons.push(format!("exponent constraint: k*m_exp = {km}, k*n_exp = {kn}"));
    }
    let (constant, bound) = match settling_constant(p) {
        Ok(c) => (Some(c.as_f64()), min_gain(p, b).ok().map(|g| g.as_f64())),
        Err(e) => {
            if exponent_ok {
                reasons.push(e.to_string());
            }
            (None, None)
        }
    };
    let gains: Vec<GainCheck> = p
        .gains
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let g = g.as_f64();
            let pass = bound.is_some_and(|m| g.is_finite() && g > m);
            if !pass {
                reasons.push(match bound {
                    Some(m) => format!("interceptor {i}: gain {g} does not exceed bound {m}"),
                    None => format!("interceptor {i}: gain bound unavailable"),
                });
            }
            GainCheck { interceptor: i, gain: g, pass }
        })
        .collect();
    if gains.is_empty() {
        reasons.push("no gains assigned".into());
    }
    let w_dot_max = p.w_dot_max.as_f64();
    let mu = p.mu.as_f64();
    let mu_bound = (!gains.is_empty()).then(|| min_mu(p, b).as_f64());
    let mu_ok = match mu_bound {
        Some(m) if w_dot_max == 0.0 => mu >= m,
        Some(m) => mu > m,
        None => false,
    };
    if !mu_ok {
        reasons.push(format!("mu {mu} does not exceed bound {}", mu_bound.unwrap_or(f64::NAN)));
    }
    let pass = exponent_ok && bound.is_some() && !gains.is_empty() && gains.iter().all(|g| g.pass) && mu_ok;
    CertificationReport {
        exponent_ok,
        k_m_exp: km,
        k_n_exp: kn,
        min_edges: b.min_edges,
        min_lambda2: b.min_lambda2.as_f64(),
        settling_constant: constant,
        min_gain: bound,
        gains,
        mu,
        w_dot_max,
        min_mu: mu_bound,
        mu_ok,
        pass,
        reasons,
    }
}

impl fmt::Display for CertificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.6}"));
        let mark = |ok: bool| if ok { "ok" } else { "FAIL" };
        writeln!(
            f,
            "exponents: k*m = {:.4} (< 1), k*n = {:.4} (> 1) [{}]",
            self.k_m_exp,
            self.k_n_exp,
            mark(self.exponent_ok)
        )?;
        writeln!(f, "topology: min edges = {}, min lambda2 = {:.6}", self.min_edges, self.min_lambda2)?;
        writeln!(f, "settling constant = {}", opt(self.settling_constant))?;
        writeln!(f, "gain bound = {}", opt(self.min_gain))?;
        for g in &self.gains {
            writeln!(f, "  interceptor {}: gain {:.6} [{}]", g.interceptor, g.gain, mark(g.pass))?;
        }
        writeln!(
            f,
            "mu = {:.6}, bound = {} (w_dot_max = {:.6}) [{}]",
            self.mu,
            opt(self.min_mu),
            self.w_dot_max,
            mark(self.mu_ok)
        )?;
        for r in &self.reasons {
            writeln!(f, "reason: {r}")?;
        }
        write!(f, "certification: {}", if self.pass { "PASS" } else { "FAIL" })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::Graph;

    fn unit_params() -> GuidanceParams<f64> {
        GuidanceParams {
            m_coef: 1.0,
            n_coef: 1.0,
            m_exp: 0.5,
            n_exp: 1.5,
            k_exp: 1.0,
            settling_time: 1.0,
            mu: 0.0,
            gains: vec![1.0; 5],
            w_dot_max: 0.0,
            boundary_layer: 1e-3,
        }
    }

    fn baseline_params() -> GuidanceParams<f64> {
        GuidanceParams {
            m_coef: 1.0,
            n_coef: 5.0,
            m_exp: 0.1,
            n_exp: 2.0,
            k_exp: 2.0,
            settling_time: 3.0,
            ..unit_params()
        }
    }

    fn bounds(min_edges: usize, min_lambda2: f64) -> TopologyBounds<f64> {
        TopologyBounds { min_edges, min_lambda2 }
    }

    #[test]
    fn settling_constant_reference_values() {
        let c = settling_constant(&unit_params()).unwrap();
        assert!((c - std::f64::consts::PI).abs() < 1e-12);
        let c = settling_constant(&baseline_params()).unwrap();
        assert!((c - 0.167150548854724618997).abs() / c < 1e-11);
        let doubled = GuidanceParams { settling_time: 6.0, ..baseline_params() };
        assert!((settling_constant(&doubled).unwrap() * 2.0 - c).abs() < 1e-14);
    }

    #[test]
    fn settling_constant_rejects_exponents() {
        let bad = GuidanceParams { m_exp: 1.0, ..unit_params() };
        assert!(matches!(settling_constant(&bad), Err(ConsensusError::Exponent { .. })));
        let bad = GuidanceParams { n_exp: 0.9, ..unit_params() };
        assert!(matches!(settling_constant(&bad), Err(ConsensusError::Exponent { .. })));
    }

    #[test]
    fn min_gain_composition() {
        let p = baseline_params();
        let c = settling_constant(&p).unwrap();
        assert!((min_gain(&p, &bounds(3, 3.0)).unwrap() - c).abs() < 1e-15);
        let g = min_gain(&p, &bounds(5, 0.51880569590798437737)).unwrap();
        assert!((g - 1.61091667047127523332).abs() < 1e-10);
        let half = min_gain(&p, &bounds(5, 0.25940284795399218869)).unwrap();
        assert!((half - 2.0 * g).abs() < 1e-10);
    }

    #[test]
    fn min_mu_examples() {
        let mut p = unit_params();
        assert_eq!(min_mu(&p, &bounds(5, 4.0)), 0.0);
        p.w_dot_max = 0.1;
        assert!((min_mu(&p, &bounds(5, 4.0)) - 0.05).abs() < 1e-15);
        p.gains = vec![2.0; 5];
        assert!((min_mu(&p, &bounds(5, 4.0)) - 0.025).abs() < 1e-15);
    }

    #[test]
    fn consensus_term_examples() {
        let p = GuidanceParams { m_exp: 1.0, n_exp: 2.0, ..unit_params() };
        assert_eq!(consensus_term(&[0.0, 0.0], &p, 3.0), 0.0);
        assert!((consensus_term(&[1.0], &p, 1.5) - 3.0).abs() < 1e-15);
        assert!((consensus_term(&[-1.0], &p, 1.5) + 3.0).abs() < 1e-15);
        // inside the boundary layer the sign is linear
        assert!((consensus_term(&[5e-4], &p, 1.0) - 0.5 * (5e-4 + 2.5e-7)).abs() < 1e-15);
    }

    #[test]
    fn effective_command_examples() {
        let p = baseline_params();
        let on_course = InterceptorState::new(5000.0, 0.1, 0.2, 0.0, 0.0, 500.0);
        assert!(effective_command(&on_course, &[0.0, 0.0], &p, 1.0, 3.0).abs() < 1e-15);
        let side = InterceptorState::new(5000.0, 0.1, 0.2, 0.0, std::f64::consts::FRAC_PI_2, 500.0);
        assert!((effective_command(&side, &[0.0], &p, 1.0, 3.0) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn disagreement_scaling() {
        let b = bounds(5, 4.0);
        assert_eq!(disagreement(&[2.0, 2.0, 2.0], &b), 0.0);
        assert!((disagreement(&[1.0, -1.0], &b) - 2.0 / 5.0 * 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn certify_outcomes() {
        let net_bounds =
            crate::topology::topology_bounds(&crate::topology::SwitchedNetwork::fixed(Graph::cycle(5)).unwrap())
                .unwrap();
        let mut p = baseline_params();
        let bound = min_gain(&p, &net_bounds).unwrap();
        p.gains = vec![1.05 * bound; 5];
        let r = certify(&p, &net_bounds);
        assert!(r.pass, "{r}");
        assert!(r.to_string().ends_with("certification: PASS"));

        p.gains[3] = 0.5 * bound;
        let r = certify(&p, &net_bounds);
        assert!(!r.pass);
        assert!(r.reasons.iter().any(|s| s.starts_with("interceptor 3")));

        p.gains[3] = 1.05 * bound;
        p.w_dot_max = 0.2;
        let r = certify(&p, &net_bounds);
        assert!(!r.mu_ok && !r.pass);

        let bad = GuidanceParams { m_exp: 0.6, ..baseline_params() };
        let r = certify(&bad, &net_bounds);
        assert!(!r.pass && !r.exponent_ok);
        assert!(r.reasons[0].contains("exponent constraint"));
    }
}
