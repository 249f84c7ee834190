mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use salvo_core::kinematics::{state_derivatives, InterceptorState, LateralAccel};

use common::{cartesian_rates, from_cartesian, random_accel, random_state, to_cartesian};

#[test]
fn cartesian_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let s = random_state(&mut rng);
        let c = to_cartesian(&s);
        let back = from_cartesian(c.position, c.velocity);
        let orig = [s.range, s.los_elevation, s.los_azimuth, s.lead_elevation, s.lead_azimuth];
        for k in 0..5 {
            let d = if k == 0 { back[k] - orig[k] } else { salvo_core::scalar::wrap_angle(back[k] - orig[k]) };
            assert!(d.abs() < 1e-9 * orig[0].max(1.0), "{k}: {back:?} vs {orig:?}");
        }
    }
}

#[test]
fn spherical_rates_match_cartesian_flow() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..300 {
        let s = random_state(&mut rng);
        let a = random_accel(&mut rng);
        let d = state_derivatives(&s, &a).unwrap();
        let o = cartesian_rates(&s, &a, 1e-3);
        let ours = [d.range, d.los_elevation, d.los_azimuth, d.lead_elevation, d.lead_azimuth];
        for k in 0..5 {
            let err = (ours[k] - o[k]).abs() / o[k].abs().max(1.0);
            worst = worst.max(err);
        }
    }
    assert!(worst < 1e-6, "worst relative error {worst:e}");
}

#[test]
fn straight_flight_keeps_heading_inertially_fixed() {
    let s = InterceptorState::from_degrees(8000.0, 30.0, -40.0, 20.0, 35.0, 350.0);
    let o = cartesian_rates(&s, &LateralAccel::zero(), 1e-3);
    let d = state_derivatives(&s, &LateralAccel::zero()).unwrap();
    assert!((o[3] - d.lead_elevation).abs() < 1e-9);
    assert!((o[4] - d.lead_azimuth).abs() < 1e-9);
}
