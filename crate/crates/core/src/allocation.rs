//! Splitting the scalar command into pitch and yaw accelerations.
//!
//! Each interceptor must satisfy `b_z a_z + b_y a_y = U`; among all such pairs
//! the one minimising `‖(a_z / c_z, a_y / c_y)‖_ℓ` is selected.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::LateralAccel;
use crate::scalar::Scalar;

/// Threshold below which a coefficient or command is treated as zero.
pub const DEGENERACY_EPS: f64 = 1e-12;

pub const GRAVITY: f64 = 9.81;

/// Lateral acceleration limit per channel, 40 g.
pub const DEFAULT_ACCEL_LIMIT: f64 = 40.0 * GRAVITY;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Norm<T> {
    One,
    P(T),
    Inf,
}

impl<T: Scalar> Norm<T> {
    pub fn validate(&self) -> Result<(), AllocationError> {
        match *self {
            Norm::P(p) if !(p > T::one() && p.is_finite()) => Err(AllocationError::InvalidExponent(p.as_f64())),
            _ => Ok(()),
        }
    }

    /// `‖(x, y)‖` in this norm.
    pub fn eval(&self, x: T, y: T) -> T {
        let (x, y) = (x.abs(), y.abs());
        match *self {
            Norm::One => x + y,
            Norm::Inf => x.max(y),
            Norm::P(p) => {
                let m = x.max(y);
                if m == T::zero() {
                    return T::zero();
                }
                m * ((x / m).powf(p) + (y / m).powf(p)).powf(p.recip())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AllocationError {
    #[error("command {command} cannot be met: both constraint coefficients vanish")]
    Degenerate { command: f64 },
    #[error("channel weights must be positive and finite (c_z = {0}, c_y = {1})")]
    InvalidWeights(f64, f64),
    #[error("norm exponent must be finite and greater than 1, got {0}")]
    InvalidExponent(f64),
    #[error("non-finite allocation input")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AllocationProblem<T> {
    pub b_z: T,
    pub b_y: T,
    pub command: T,
    pub c_z: T,
    pub c_y: T,
    pub norm: Norm<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    /// Nothing to do: the command and coefficients both vanish.
    Idle,
    PNorm,
    L1Pitch,
    L1Yaw,
    LinfSameSign,
    LinfOppositeSign,
    /// Only one coefficient is non-zero, so only that channel is used.
    SingleChannel,
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AllocationResult<T> {
    pub accel: LateralAccel<T>,
    pub cost: T,
    pub branch: Branch,
}

impl<T: Scalar> AllocationProblem<T> {
    pub fn new(b_z: T, b_y: T, command: T, c_z: T, c_y: T, norm: Norm<T>) -> Self {
        Self { b_z, b_y, command, c_z, c_y, norm }
    }

    pub fn cost(&self, a: &LateralAccel<T>) -> T {
        self.norm.eval(a.az / self.c_z, a.ay / self.c_y)
    }

    pub fn residual(&self, a: &LateralAccel<T>) -> T {
        self.b_z * a.az + self.b_y * a.ay - self.command
    }

    fn check(&self) -> Result<(), AllocationError> {
        if !(self.b_z.is_finite() && self.b_y.is_finite() && self.command.is_finite()) {
            return Err(AllocationError::NonFinite);
        }
        if !(self.c_z > T::zero() && self.c_y > T::zero() && self.c_z.is_finite() && self.c_y.is_finite()) {
            return Err(AllocationError::InvalidWeights(self.c_z.as_f64(), self.c_y.as_f64()));
        }
        self.norm.validate()
    }

    /// `Some(result)` when the problem is degenerate and the answer is fixed.
    fn degenerate(&self) -> Result<Option<AllocationResult<T>>, AllocationError> {
        self.check()?;
        let eps = T::lit(DEGENERACY_EPS);
        if self.b_z.abs().max(self.b_y.abs()) > eps {
            return Ok(None);
        }
        if self.command.abs() <= eps {
            Ok(Some(self.finish(LateralAccel::zero(), Branch::Idle)))
        } else {
            Err(AllocationError::Degenerate { command: self.command.as_f64() })
        }
    }

    fn finish(&self, accel: LateralAccel<T>, branch: Branch) -> AllocationResult<T> {
        AllocationResult { accel, cost: self.cost(&accel), branch }
    }

    /// Solution along direction `w`, scaled onto the constraint line.
    fn along(&self, wz: T, wy: T, branch: Branch) -> AllocationResult<T> {
        let s = self.command / (self.b_z * wz + self.b_y * wy);
        self.finish(LateralAccel::new(s * wz, s * wy), branch)
    }

    fn single_channel(&self) -> Option<AllocationResult<T>> {
        let eps = T::lit(DEGENERACY_EPS);
        if self.b_y.abs() <= eps {
            Some(self.along(T::one(), T::zero(), Branch::SingleChannel))
        } else if self.b_z.abs() <= eps {
            Some(self.along(T::zero(), T::one(), Branch::SingleChannel))
        } else {
            None
        }
    }
}

/// Smooth-norm case `1 < p < ∞`.
pub fn allocate_p<T: Scalar>(prob: &AllocationProblem<T>) -> Result<AllocationResult<T>, AllocationError> {
    if let Some(r) = prob.degenerate()? {
        return Ok(r);
    }
    let Norm::P(p) = prob.norm else {
        return Err(AllocationError::InvalidExponent(f64::NAN));
    };
    if let Some(r) = prob.single_channel() {
        return Ok(r);
    }
    // Stationarity gives |a_i| ∝ c_i^(p/(p-1)) |b_i|^(1/(p-1)). The weights are
    // built in log space so exponents near 1 neither overflow nor underflow.
    let q = (p - T::one()).recip();
    let log_w = |c: T, b: T| p * q * c.ln() + q * b.abs().ln();
    let (lz, ly) = (log_w(prob.c_z, prob.b_z), log_w(prob.c_y, prob.b_y));
    let top = lz.max(ly);
    let wz = (lz - top).exp() * prob.b_z.signum();
    let wy = (ly - top).exp() * prob.b_y.signum();
    Ok(prob.along(wz, wy, Branch::PNorm))
}

/// `ℓ₁` case: all effort goes to the cheaper channel; ties use pitch.
pub fn allocate_l1<T: Scalar>(prob: &AllocationProblem<T>) -> Result<AllocationResult<T>, AllocationError> {
    if let Some(r) = prob.degenerate()? {
        return Ok(r);
    }
    if prob.c_y * prob.b_y.abs() > prob.c_z * prob.b_z.abs() {
        Ok(prob.along(T::zero(), T::one(), Branch::L1Yaw))
    } else {
        Ok(prob.along(T::one(), T::zero(), Branch::L1Pitch))
    }
}

/// `ℓ∞` case: equal weighted magnitudes in both channels.
pub fn allocate_linf<T: Scalar>(prob: &AllocationProblem<T>) -> Result<AllocationResult<T>, AllocationError> {
    if let Some(r) = prob.degenerate()? {
        return Ok(r);
    }
    if let Some(r) = prob.single_channel() {
        return Ok(r);
    }
    let branch =
        if (prob.b_z > T::zero()) == (prob.b_y > T::zero()) { Branch::LinfSameSign } else { Branch::LinfOppositeSign };
    Ok(prob.along(prob.c_z * prob.b_z.signum(), prob.c_y * prob.b_y.signum(), branch))
}

pub fn allocate<T: Scalar>(prob: &AllocationProblem<T>) -> Result<AllocationResult<T>, AllocationError> {
    match prob.norm {
        Norm::One => allocate_l1(prob),
        Norm::P(_) => allocate_p(prob),
        Norm::Inf => allocate_linf(prob),
    }
}

/// Brute-force minimiser over a uniform grid of the free channel in `[-a_max, a_max]`.
/// The channel with the larger coefficient is solved from the constraint.
pub fn oracle_allocate<T: Scalar>(
    prob: &AllocationProblem<T>,
    grid_n: usize,
    a_max: T,
) -> Result<AllocationResult<T>, AllocationError> {
    if let Some(r) = prob.degenerate()? {
        return Ok(r);
    }
    let scan_z = prob.b_y.abs() >= prob.b_z.abs();
    let n = grid_n.max(2);
    let step = T::lit(2.0) * a_max / T::lit((n - 1) as f64);
    let mut best: Option<AllocationResult<T>> = None;
    for k in 0..n {
        let free = -a_max + step * T::lit(k as f64);
        let accel = if scan_z {
            LateralAccel::new(free, (prob.command - prob.b_z * free) / prob.b_y)
        } else {
            LateralAccel::new((prob.command - prob.b_y * free) / prob.b_z, free)
        };
        let cost = prob.cost(&accel);
        if best.is_none_or(|b| cost < b.cost) {
            best = Some(AllocationResult { accel, cost, branch: Branch::Oracle });
        }
    }
    Ok(best.expect("grid is non-empty"))
}

/// Componentwise clamp to `[-a_max, a_max]`.
pub fn saturate<T: Scalar>(a: LateralAccel<T>, a_max: T) -> LateralAccel<T> {
    LateralAccel::new(a.az.max(-a_max).min(a_max), a.ay.max(-a_max).min(a_max))
}

pub fn is_saturated<T: Scalar>(a: &LateralAccel<T>, a_max: T) -> bool {
    a.az.abs() > a_max || a.ay.abs() > a_max
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prob(b_z: f64, b_y: f64, u: f64, norm: Norm<f64>) -> AllocationProblem<f64> {
        AllocationProblem::new(b_z, b_y, u, 1.0, 1.0, norm)
    }

    fn close(a: LateralAccel<f64>, az: f64, ay: f64) -> bool {
        (a.az - az).abs() < 1e-12 && (a.ay - ay).abs() < 1e-12
    }

    #[test]
    fn p_norm_examples() {
        let r = allocate_p(&prob(1.0, 1.0, 2.0, Norm::P(2.0))).unwrap();
        assert!(close(r.accel, 1.0, 1.0));
        assert!((r.cost - 2f64.sqrt()).abs() < 1e-12);
        let r = allocate_p(&prob(0.5, 0.0, 1.0, Norm::P(2.0))).unwrap();
        assert!(close(r.accel, 2.0, 0.0));
        assert_eq!(r.branch, Branch::SingleChannel);
    }

    #[test]
    fn p_norm_weights_use_conjugate_exponent() {
        // p = 2, c_y = 2: minimise a_z^2 + a_y^2 / 4 on a_z + a_y = 5 gives a_y = 4 a_z.
        let r = allocate_p(&AllocationProblem::new(1.0, 1.0, 5.0, 1.0, 2.0, Norm::P(2.0))).unwrap();
        assert!(close(r.accel, 1.0, 4.0));
    }

    #[test]
    fn l1_examples() {
        let r = allocate_l1(&prob(2.0, 1.0, 4.0, Norm::One)).unwrap();
        assert!(close(r.accel, 2.0, 0.0));
        assert_eq!(r.branch, Branch::L1Pitch);
        let r = allocate_l1(&prob(1.0, 2.0, 4.0, Norm::One)).unwrap();
        assert!(close(r.accel, 0.0, 2.0));
        assert_eq!(r.branch, Branch::L1Yaw);
        let r = allocate_l1(&prob(1.0, 2.0, 0.0, Norm::One)).unwrap();
        assert!(close(r.accel, 0.0, 0.0) && r.cost == 0.0);
        let tie = allocate_l1(&prob(1.0, -1.0, 3.0, Norm::One)).unwrap();
        assert_eq!(tie.branch, Branch::L1Pitch);
    }

    #[test]
    fn linf_examples() {
        let r = allocate_linf(&prob(1.0, 1.0, 2.0, Norm::Inf)).unwrap();
        assert!(close(r.accel, 1.0, 1.0));
        assert_eq!(r.branch, Branch::LinfSameSign);
        let r = allocate_linf(&prob(1.0, -1.0, 2.0, Norm::Inf)).unwrap();
        assert!(close(r.accel, 1.0, -1.0));
        assert_eq!(r.branch, Branch::LinfOppositeSign);
        let r = allocate_linf(&prob(0.0, 4.0, 2.0, Norm::Inf)).unwrap();
        assert!(close(r.accel, 0.0, 0.5));
    }

    #[test]
    fn degenerate_handling() {
        for norm in [Norm::One, Norm::P(3.0), Norm::Inf] {
            let r = allocate(&prob(0.0, 1e-13, 1e-13, norm)).unwrap();
            assert_eq!(r.branch, Branch::Idle);
            assert!(r.accel.is_zero());
            assert!(matches!(allocate(&prob(0.0, 0.0, 1.0, norm)), Err(AllocationError::Degenerate { .. })));
        }
        assert!(matches!(allocate(&prob(1.0, 1.0, 1.0, Norm::P(1.0))), Err(AllocationError::InvalidExponent(_))));
        assert!(matches!(
            allocate(&AllocationProblem::new(1.0, 1.0, 1.0, 0.0, 1.0, Norm::One)),
            Err(AllocationError::InvalidWeights(..))
        ));
    }

    #[test]
    fn extreme_exponents_stay_finite() {
        let near_one = allocate_p(&AllocationProblem::new(3e-3_f64, 1e-3, 1.0, 1.0, 1e-3, Norm::P(1.01))).unwrap();
        assert!(near_one.accel.az.is_finite() && near_one.accel.ay.is_finite());
        assert!((near_one.accel.az - 1.0 / 3e-3).abs() < 1e-6 * near_one.accel.az);
        let large = allocate_p(&prob(2.0, -0.5, 1.0, Norm::P(400.0))).unwrap();
        let linf = allocate_linf(&prob(2.0, -0.5, 1.0, Norm::Inf)).unwrap();
        assert!((large.accel.az - linf.accel.az).abs() < 1e-2 * linf.accel.az.abs());
    }

    #[test]
    fn oracle_agrees_on_examples() {
        let a_max = 10.0;
        let n = 100_001;
        let cell = 2.0 * a_max / (n - 1) as f64;
        for (p, (az, ay)) in [
            (prob(1.0, 1.0, 2.0, Norm::P(2.0)), (1.0, 1.0)),
            (prob(1.0, 2.0, 4.0, Norm::One), (0.0, 2.0)),
            (prob(1.0, -1.0, 2.0, Norm::Inf), (1.0, -1.0)),
        ] {
            let o = oracle_allocate(&p, n, a_max).unwrap();
            assert!((o.accel.az - az).abs() <= cell && (o.accel.ay - ay).abs() <= 2.0 * cell, "{o:?}");
        }
    }

    #[test]
    fn saturation() {
        let lim = DEFAULT_ACCEL_LIMIT;
        assert!((lim - 392.4).abs() < 1e-12);
        let s = saturate(LateralAccel::new(500.0, -500.0), lim);
        assert!((s.az - 392.4).abs() < 1e-12 && (s.ay + 392.4).abs() < 1e-12);
        assert!(is_saturated(&LateralAccel::new(500.0, 0.0), lim));
        let inside = LateralAccel::new(12.0, -3.0);
        assert_eq!(saturate(inside, lim), inside);
        assert_eq!(saturate(LateralAccel::<f64>::zero(), lim), LateralAccel::zero());
    }

    #[test]
    fn norms() {
        assert_eq!(Norm::One.eval(3.0_f64, -4.0), 7.0);
        assert_eq!(Norm::Inf.eval(3.0, -4.0), 4.0);
        assert!((Norm::P(2.0_f64).eval(3.0, -4.0) - 5.0).abs() < 1e-15);
        assert!(Norm::P(500.0_f64).eval(1e200, 1e200).is_finite());
    }
}
