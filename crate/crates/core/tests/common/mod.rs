//! Test-only references shared by several integration targets.
#![allow(dead_code)]

use rand::Rng;
use salvo_core::kinematics::{InterceptorState, LateralAccel};

pub type Vec3 = [f64; 3];

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

fn scale(a: Vec3, k: f64) -> Vec3 {
    [a[0] * k, a[1] * k, a[2] * k]
}

fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

/// Unit vectors of the line-of-sight frame: along the sight line (interceptor
/// to target), then the elevation and azimuth directions.
fn los_frame(elev: f64, azim: f64) -> [Vec3; 3] {
    let (se, ce) = elev.sin_cos();
    let (sa, ca) = azim.sin_cos();
    [[ce * ca, ce * sa, se], [-se * ca, -se * sa, ce], [-sa, ca, 0.0]]
}

fn combine(frame: &[Vec3; 3], c: [f64; 3]) -> Vec3 {
    add(add(scale(frame[0], c[0]), scale(frame[1], c[1])), scale(frame[2], c[2]))
}

/// Inertial position (target at the origin), velocity, and the pitch and yaw
/// unit directions normal to the velocity.
pub struct Cartesian {
    pub position: Vec3,
    pub velocity: Vec3,
    pub pitch_axis: Vec3,
    pub yaw_axis: Vec3,
}

pub fn to_cartesian(s: &InterceptorState<f64>) -> Cartesian {
    let f = los_frame(s.los_elevation, s.los_azimuth);
    let (st, ct) = s.lead_elevation.sin_cos();
    let (sp, cp) = s.lead_azimuth.sin_cos();
    let heading = combine(&f, [ct * cp, st, ct * sp]);
    Cartesian {
        position: scale(f[0], -s.range),
        velocity: scale(heading, s.speed),
        pitch_axis: combine(&f, [-st * cp, ct, -st * sp]),
        yaw_axis: combine(&f, [-sp, 0.0, cp]),
    }
}

/// Recovers the spherical description from inertial position and velocity.
pub fn from_cartesian(position: Vec3, velocity: Vec3) -> [f64; 5] {
    let r = norm(position);
    let los = scale(position, -1.0 / r);
    let elev = los[2].clamp(-1.0, 1.0).asin();
    let azim = los[1].atan2(los[0]);
    let f = los_frame(elev, azim);
    let d = scale(velocity, 1.0 / norm(velocity));
    let lead_elev = dot(d, f[1]).clamp(-1.0, 1.0).asin();
    let lead_azim = dot(d, f[2]).atan2(dot(d, f[0]));
    [r, elev, azim, lead_elev, lead_azim]
}

/// Time derivative of the recovered spherical variables along the exact
/// constant-acceleration Cartesian flow, by a fourth-order central difference.
pub fn cartesian_rates(s: &InterceptorState<f64>, a: &LateralAccel<f64>, h: f64) -> [f64; 5] {
    let c = to_cartesian(s);
    let accel = add(scale(c.pitch_axis, a.az), scale(c.yaw_axis, a.ay));
    let at = |t: f64| {
        let p = add(add(c.position, scale(c.velocity, t)), scale(accel, 0.5 * t * t));
        let v = add(c.velocity, scale(accel, t));
        from_cartesian(p, v)
    };
    let (m2, m1, p1, p2) = (at(-2.0 * h), at(-h), at(h), at(2.0 * h));
    let mut out = [0.0; 5];
    for k in 0..5 {
        // angles are continuous over a tiny window unless they straddle the ±π cut
        let unwrap = |x: f64| {
            let base = m1[k];
            base + salvo_core::scalar::wrap_angle(x - base)
        };
        out[k] = (unwrap(m2[k]) - 8.0 * unwrap(m1[k]) + 8.0 * unwrap(p1[k]) - unwrap(p2[k])) / (12.0 * h);
    }
    out
}

/// Non-degenerate random engagement state: elevations kept away from ±90°.
pub fn random_state<R: Rng>(rng: &mut R) -> InterceptorState<f64> {
    let deg = |rng: &mut R, lim: f64| rng.gen_range(-lim..lim);
    InterceptorState::from_degrees(
        rng.gen_range(500.0..20_000.0),
        deg(rng, 80.0),
        deg(rng, 180.0),
        deg(rng, 80.0),
        deg(rng, 180.0),
        rng.gen_range(200.0..600.0),
    )
}

pub fn random_accel<R: Rng>(rng: &mut R) -> LateralAccel<f64> {
    LateralAccel::new(rng.gen_range(-400.0..400.0), rng.gen_range(-400.0..400.0))
}
