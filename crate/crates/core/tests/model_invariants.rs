use kerrosc_core::model::{hamiltonian, lindblad_ops};
use kerrosc_core::*;
use proptest::prelude::*;

proptest! {
    #[test]
    fn envelope_is_nonnegative_and_periodic(
        width in 0.01..2.0f64,
        period in 0.1..5.0f64,
        t0 in -3.0..3.0f64,
        t in -50.0..50.0f64,
    ) {
        let env = DriveEnvelope::pulse_train(t0, width, period);
        let f = env.value(t);
        prop_assert!(f >= 0.0);
        prop_assert!((env.value(t + period) - f).abs() < 1e-12 * (1.0 + f));
    }

    #[test]
    fn well_separated_pulses_reach_one_and_zero(
        width in 0.01..0.5f64,
        ratio in 10.0..40.0f64,
        t0 in -3.0..3.0f64,
        k in -20i32..20,
    ) {
        let period = ratio * width;
        let env = DriveEnvelope::pulse_train(t0, width, period);
        let centre = t0 + f64::from(k) * period;
        prop_assert!((env.value(centre) - 1.0).abs() < 1e-6);
        prop_assert!(env.value(centre + 0.5 * period) < 1e-6);
    }

    #[test]
    fn hamiltonian_is_hermitian(
        delta in -20.0..20.0f64,
        chi in -3.0..3.0f64,
        omega in 0.0..25.0f64,
        dim in 2usize..20,
        t in 0.0..10.0f64,
    ) {
        let space = FockSpace::new(dim).unwrap();
        let p = ModelParams::new(delta, chi, omega);
        let env = DriveEnvelope::pulse_train(0.0, 0.3, 1.7);
        prop_assert!(hamiltonian(&space, &p, &env, t).hermiticity_error() < 1e-12);
    }
}

#[test]
fn jump_operators_per_temperature() {
    let space = FockSpace::new(5).unwrap();
    assert_eq!(lindblad_ops(&space, &ModelParams::new(0.0, 1.0, 1.0)).unwrap().len(), 1);
    assert_eq!(lindblad_ops(&space, &ModelParams::new(0.0, 1.0, 1.0).with_n_bath(0.1)).unwrap().len(), 2);
}

#[test]
fn params_round_trip_through_json() {
    let p = ModelParams::new(-15.0, 0.7, 20.4).with_n_bath(0.1);
    let env = DriveEnvelope::pulse_train(0.0, 0.25, 2.0 * std::f64::consts::PI / 5.0);
    let back: ModelParams = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
    let env_back: DriveEnvelope = serde_json::from_str(&serde_json::to_string(&env).unwrap()).unwrap();
    assert_eq!(p, back);
    assert_eq!(env, env_back);
    let bad = r#"{"delta": 1, "chi": 1, "omega_drive": 1, "gama": 1}"#;
    assert!(serde_json::from_str::<ModelParams>(bad).is_err());
}
