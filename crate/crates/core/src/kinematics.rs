//! Per-interceptor engagement geometry against a stationary target.
//!
//! The state is kept in spherical LOS coordinates: range `r`, LOS elevation
//! `θ_L` and azimuth `ψ_L`, and the lead angles `θ_M`, `ψ_M` that orient the
//! velocity vector inside the LOS frame. Speed is constant; the vehicle only
//! has lateral acceleration in its pitch (`a_z`) and yaw (`a_y`) channels.

use thiserror::Error;

use crate::scalar::{wrap_angle, Scalar};

/// Guard for divisions by `sin σ_M`, `cos θ_L` and `cos θ_M`.
pub const DEN_EPS: f64 = 1e-9;

/// Derivatives are not evaluated below this range (m).
pub const MIN_RANGE_GUARD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum KinematicsError {
    #[error("range is below the {MIN_RANGE_GUARD} m evaluation guard")]
    BelowRangeGuard,
    #[error("speed must be positive")]
    NonPositiveSpeed,
    #[error("singular geometry: |{0}| < {DEN_EPS}")]
    Singular(&'static str),
    #[error("nav gain must exceed 2")]
    NavGain,
}

/// One interceptor's engagement coordinates (angles in radians).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterceptorState<T> {
    /// Range to the target (m).
    pub range: T,
    pub los_elevation: T,
    pub los_azimuth: T,
    pub lead_elevation: T,
    pub lead_azimuth: T,
    /// Speed (m/s); never modified by integration.
    pub speed: T,
}

/// Time derivatives of the five integrated state fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateRates<T> {
    pub range: T,
    pub los_elevation: T,
    pub los_azimuth: T,
    pub lead_elevation: T,
    pub lead_azimuth: T,
}

/// Pitch (`az`) and yaw (`ay`) lateral acceleration, m/s².
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LateralAccel<T> {
    pub az: T,
    pub ay: T,
}

/// Time-to-go estimate with its uncertainty component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TgoEstimate<T> {
    pub t_go: T,
    pub w: T,
    pub nav_gain: T,
}

/// `ṫ_go = drift + b_z a_z + b_y a_y + ẇ`.
///
/// `b_z` and `b_y` are the coefficients of the affine allocation constraint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TgoRate<T> {
    pub drift: T,
    pub b_z: T,
    pub b_y: T,
}

impl<T: Scalar> InterceptorState<T> {
    /// Builds a state with all angles wrapped into `(-π, π]`.
    pub fn new(range: T, los_elevation: T, los_azimuth: T, lead_elevation: T, lead_azimuth: T, speed: T) -> Self {
        Self { range, los_elevation, los_azimuth, lead_elevation, lead_azimuth, speed }.wrapped()
    }

    pub fn from_degrees(
        range: T,
        los_elevation: T,
        los_azimuth: T,
        lead_elevation: T,
        lead_azimuth: T,
        speed: T,
    ) -> Self {
        Self::new(
            range,
            los_elevation.to_radians(),
            los_azimuth.to_radians(),
            lead_elevation.to_radians(),
            lead_azimuth.to_radians(),
            speed,
        )
    }

    pub fn wrapped(self) -> Self {
        Self {
            los_elevation: wrap_angle(self.los_elevation),
            los_azimuth: wrap_angle(self.los_azimuth),
            lead_elevation: wrap_angle(self.lead_elevation),
            lead_azimuth: wrap_angle(self.lead_azimuth),
            ..self
        }
    }

    /// `self + h * rates`, without wrapping. Speed is carried over untouched.
    pub fn advanced(&self, rates: &StateRates<T>, h: T) -> Self {
        Self {
            range: self.range + h * rates.range,
            los_elevation: self.los_elevation + h * rates.los_elevation,
            los_azimuth: self.los_azimuth + h * rates.los_azimuth,
            lead_elevation: self.lead_elevation + h * rates.lead_elevation,
            lead_azimuth: self.lead_azimuth + h * rates.lead_azimuth,
            speed: self.speed,
        }
    }

    pub fn effective_lead_angle(&self) -> T {
        effective_lead_angle(self)
    }
}

impl<T: Scalar> StateRates<T> {
    /// Weighted RK4 combination `(k1 + 2 k2 + 2 k3 + k4) / 6`.
    pub fn rk4_blend(k1: &Self, k2: &Self, k3: &Self, k4: &Self) -> Self {
        let two = T::lit(2.0);
        let six = T::lit(6.0);
        let f = |a: T, b: T, c: T, d: T| (a + two * b + two * c + d) / six;
        Self {
            range: f(k1.range, k2.range, k3.range, k4.range),
            los_elevation: f(k1.los_elevation, k2.los_elevation, k3.los_elevation, k4.los_elevation),
            los_azimuth: f(k1.los_azimuth, k2.los_azimuth, k3.los_azimuth, k4.los_azimuth),
            lead_elevation: f(k1.lead_elevation, k2.lead_elevation, k3.lead_elevation, k4.lead_elevation),
            lead_azimuth: f(k1.lead_azimuth, k2.lead_azimuth, k3.lead_azimuth, k4.lead_azimuth),
        }
    }
}

impl<T: Scalar> LateralAccel<T> {
    pub fn new(az: T, ay: T) -> Self {
        Self { az, ay }
    }

    pub fn zero() -> Self {
        Self { az: T::zero(), ay: T::zero() }
    }

    pub fn is_zero(&self) -> bool {
        self.az == T::zero() && self.ay == T::zero()
    }
}

fn check_nav_gain<T: Scalar>(nav_gain: T) -> Result<(), KinematicsError> {
    if nav_gain > T::lit(2.0) {
        Ok(())
    } else {
        Err(KinematicsError::NavGain)
    }
}

/// Relative engagement kinematics in spherical LOS coordinates.
///
/// ```text
/// ṙ   = -V cosθ_M cosψ_M
/// θ̇_L = -V sinθ_M / r
/// ψ̇_L = -V cosθ_M sinψ_M / (r cosθ_L)
/// θ̇_M = a_z/V - ψ̇_L sinθ_L sinψ_M - θ̇_L cosψ_M
/// ψ̇_M = a_y/(V cosθ_M) + ψ̇_L tanθ_M cosψ_M sinθ_L - ψ̇_L cosθ_L - θ̇_L tanθ_M sinψ_M
/// ```
pub fn state_derivatives<T: Scalar>(
    s: &InterceptorState<T>,
    u: &LateralAccel<T>,
) -> Result<StateRates<T>, KinematicsError> {
    if !(s.range > T::lit(MIN_RANGE_GUARD)) {
        return Err(KinematicsError::BelowRangeGuard);
    }
    if !(s.speed > T::zero()) {
        return Err(KinematicsError::NonPositiveSpeed);
    }
    let eps = T::lit(DEN_EPS);
    let (sin_tl, cos_tl) = s.los_elevation.sin_cos();
    let (sin_tm, cos_tm) = s.lead_elevation.sin_cos();
    let (sin_pm, cos_pm) = s.lead_azimuth.sin_cos();
    if cos_tl.abs() < eps {
        return Err(KinematicsError::Singular("cos(LOS elevation)"));
    }
    if cos_tm.abs() < eps {
        return Err(KinematicsError::Singular("cos(lead elevation)"));
    }
    let v = s.speed;
    let r = s.range;
    let tan_tm = sin_tm / cos_tm;

    let r_dot = -v * cos_tm * cos_pm;
    let tl_dot = -v * sin_tm / r;
    let pl_dot = -v * cos_tm * sin_pm / (r * cos_tl);
    let tm_dot = u.az / v - pl_dot * sin_tl * sin_pm - tl_dot * cos_pm;
    let pm_dot = u.ay / (v * cos_tm) + pl_dot * tan_tm * cos_pm * sin_tl - pl_dot * cos_tl - tl_dot * tan_tm * sin_pm;

    Ok(StateRates {
        range: r_dot,
        los_elevation: tl_dot,
        los_azimuth: pl_dot,
        lead_elevation: tm_dot,
        lead_azimuth: pm_dot,
    })
}

/// `σ_M = arccos(cos ψ_M cos θ_M)`, principal value in `[0, π]`.
pub fn effective_lead_angle<T: Scalar>(s: &InterceptorState<T>) -> T {
    let c = s.lead_azimuth.cos() * s.lead_elevation.cos();
    c.max(-T::one()).min(T::one()).acos()
}

/// `1 - sin²σ / (4N - 2)`.
fn lead_penalty<T: Scalar>(sigma: T, nav_gain: T) -> T {
    let s = sigma.sin();
    T::one() - s * s / (T::lit(4.0) * nav_gain - T::lit(2.0))
}

/// Drift of the time-to-go, `-cos σ (1 - sin²σ / (4N - 2))`.
pub fn tgo_drift<T: Scalar>(sigma: T, nav_gain: T) -> T {
    -sigma.cos() * lead_penalty(sigma, nav_gain)
}

/// `t_go = (r / V)(1 + sin²σ / (4N - 2)) + w`.
pub fn time_to_go<T: Scalar>(s: &InterceptorState<T>, nav_gain: T, w: T) -> Result<TgoEstimate<T>, KinematicsError> {
    check_nav_gain(nav_gain)?;
    if !(s.speed > T::zero()) {
        return Err(KinematicsError::NonPositiveSpeed);
    }
    let sin_sigma = effective_lead_angle(s).sin();
    let stretch = T::one() + sin_sigma * sin_sigma / (T::lit(4.0) * nav_gain - T::lit(2.0));
    Ok(TgoEstimate { t_go: s.range / s.speed * stretch + w, w, nav_gain })
}

/// Drift and control coefficients of `ṫ_go` (with `ẇ` excluded).
pub fn tgo_rate_coefficients<T: Scalar>(s: &InterceptorState<T>, nav_gain: T) -> Result<TgoRate<T>, KinematicsError> {
    check_nav_gain(nav_gain)?;
    if !(s.speed > T::zero()) {
        return Err(KinematicsError::NonPositiveSpeed);
    }
    let two = T::lit(2.0);
    let scale = s.range / (s.speed * s.speed * (T::lit(4.0) * nav_gain - two));
    let cos_pm = s.lead_azimuth.cos();
    let b_z = scale * (two * s.lead_elevation).sin() * cos_pm * cos_pm;
    let b_y = scale * (two * s.lead_azimuth).sin() * s.lead_elevation.cos();
    Ok(TgoRate { drift: tgo_drift(effective_lead_angle(s), nav_gain), b_z, b_y })
}

/// `σ̇_M = V sinσ/r + sinθ_M cosψ_M a_z/(V sinσ) + sinψ_M a_y/(V sinσ)`.
///
/// On the collision course (`σ ≈ 0`) or the direct retreat (`σ ≈ π`) the
/// arccos is not differentiable; with zero command the point is an
/// equilibrium (rate 0), otherwise the one-sided limit `±|a|/V` is returned.
pub fn lead_angle_rate<T: Scalar>(s: &InterceptorState<T>, u: &LateralAccel<T>) -> Result<T, KinematicsError> {
    if !(s.speed > T::zero()) {
        return Err(KinematicsError::NonPositiveSpeed);
    }
    if !(s.range > T::lit(MIN_RANGE_GUARD)) {
        return Err(KinematicsError::BelowRangeGuard);
    }
    let sigma = effective_lead_angle(s);
    let sin_sigma = sigma.sin();
    let v = s.speed;
    if sin_sigma.abs() < T::lit(DEN_EPS) {
        if u.is_zero() {
            return Ok(T::zero());
        }
        let magnitude = u.az.hypot(u.ay) / v;
        return Ok(if sigma < T::FRAC_PI_2() { magnitude } else { -magnitude });
    }
    let (sin_tm, _) = s.lead_elevation.sin_cos();
    let (sin_pm, cos_pm) = s.lead_azimuth.sin_cos();
    Ok(v * sin_sigma / s.range + (sin_tm * cos_pm * u.az + sin_pm * u.ay) / (v * sin_sigma))
}
