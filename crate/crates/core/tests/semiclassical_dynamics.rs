use std::f64::consts::PI;

use kerrosc_core::semiclassical::*;
use kerrosc_core::*;
use proptest::prelude::*;

const HALF: DampingConvention = DampingConvention::Half;

fn conv() -> impl Strategy<Value = DampingConvention> {
    prop_oneof![Just(DampingConvention::Half), Just(DampingConvention::Full)]
}

fn envelope() -> impl Strategy<Value = DriveEnvelope> {
    prop_oneof![
        Just(DriveEnvelope::Constant),
        (0.05..1.0f64, 0.5..4.0f64).prop_map(|(w, period)| DriveEnvelope::pulse_train(0.0, w, period)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn flow_is_scale_covariant(
        delta in -20.0..20.0f64,
        chi in -3.0..3.0f64,
        omega in 0.0..25.0f64,
        lambda in 0.2..5.0f64,
        re in -4.0..4.0f64,
        im in -4.0..4.0f64,
        t in 0.0..10.0f64,
        env in envelope(),
        c in conv(),
    ) {
        let p = ModelParams::new(delta, chi, omega);
        let s = scale_params(&p, lambda).unwrap();
        let a = C64::new(re, im);
        let lhs = amplitude_rhs(a * lambda, t, &s, &env, c);
        let rhs = amplitude_rhs(a, t, &p, &env, c) * lambda;
        let scale = 1.0 + rhs.norm() + lambda * (delta.abs() + chi.abs() * (1.0 + 2.0 * a.norm_sqr())) * a.norm();
        prop_assert!((lhs - rhs).norm() < 1e-12 * scale, "{lhs} vs {rhs}");
    }

    #[test]
    fn roots_satisfy_the_cubic(
        delta in -20.0..20.0f64,
        chi in prop_oneof![-3.0..-0.01f64, 0.01..3.0f64],
        omega in 0.01..10.0f64,
        c in conv(),
    ) {
        let p = ModelParams::new(delta, chi, omega);
        let roots = steady_amplitudes(&p, c);
        prop_assert!((1..=3).contains(&roots.len()));
        let k = c.kappa(p.gamma);
        for r in &roots.roots {
            prop_assert!(r.n >= 0.0);
            let d = p.delta + p.chi + 2.0 * p.chi * r.n;
            let residual = r.n * (d * d + k * k) - omega * omega;
            prop_assert!(residual.abs() < 1e-10 * (1.0 + omega * omega), "residual {residual}");
            let flow = amplitude_rhs(r.alpha, 0.0, &p, &DriveEnvelope::Constant, c);
            prop_assert!(flow.norm() < 1e-9 * (1.0 + omega));
        }
    }

    #[test]
    fn three_roots_iff_bistable_window(
        delta in -20.0..-1.0f64,
        chi in 0.1..3.0f64,
        omega in 0.01..10.0f64,
        c in conv(),
    ) {
        let p = ModelParams::new(delta, chi, omega);
        let test = bistability_test(&p, c);
        let roots = steady_amplitudes(&p, c);
        let near_fold = roots.roots.iter().any(|r| r.degenerate) || test.margins[2].abs() < 1e-9;
        if test.margins[0] > 0.0 && test.margins[1] > 0.0 && !near_fold {
            prop_assert_eq!(test.bistable, roots.len() == 3);
        }
        if roots.len() == 3 && !near_fold {
            let stable: Vec<bool> = roots.roots.iter().map(|r| r.stable).collect();
            prop_assert_eq!(stable, vec![true, false, true]);
        }
    }
}

#[test]
fn stable_roots_attract_nearby_orbits() {
    let p = ModelParams::new(-8.0, 2.0, 2.7);
    for r in steady_amplitudes(&p, HALF).stable() {
        let start = r.alpha + C64::new(1e-3, -1e-3);
        let orbit = integrate_amplitude(start, &[0.0, 60.0], &p, &DriveEnvelope::Constant, HALF, &default_solver()).unwrap();
        assert!((orbit[1].alpha - r.alpha).norm() < 1e-8);
    }
    // the unstable root repels
    let mid = steady_amplitudes(&p, HALF).roots[1];
    let orbit = integrate_amplitude(mid.alpha + C64::new(1e-3, 0.0), &[0.0, 60.0], &p, &DriveEnvelope::Constant, HALF, &default_solver()).unwrap();
    assert!((orbit[1].alpha - mid.alpha).norm() > 0.1);
}

#[test]
fn free_amplitude_decays_exponentially() {
    let p = ModelParams::new(0.0, 0.0, 0.0);
    let times: Vec<f64> = (0..=10).map(|k| k as f64).collect();
    let orbit = integrate_amplitude(C64::new(1.0, 0.0), &times, &p, &DriveEnvelope::Constant, HALF, &default_solver()).unwrap();
    for a in orbit {
        assert!((a.alpha.norm() - (-a.t / 2.0).exp()).abs() < 1e-8);
    }
}

#[test]
fn scaled_orbit_is_a_dilation() {
    let p = ModelParams::new(-8.0, 2.0, 2.7);
    let env = DriveEnvelope::pulse_train(0.0, 0.5, 2.0);
    let times: Vec<f64> = (0..=40).map(|k| 0.5 * k as f64).collect();
    let a0 = C64::new(0.3, -0.2);
    let base = integrate_amplitude(a0, &times, &p, &env, HALF, &default_solver()).unwrap();
    for lambda in [2.0, 3.0] {
        let s = scale_params(&p, lambda).unwrap();
        let scaled = integrate_amplitude(a0 * lambda, &times, &s, &env, HALF, &default_solver()).unwrap();
        for (x, y) in base.iter().zip(&scaled) {
            assert!((y.alpha - x.alpha * lambda).norm() < 1e-6);
        }
    }
}

#[test]
fn hysteresis_loop_edges_are_folds() {
    let p = ModelParams::new(-15.0, 2.0, 0.0);
    let up: Vec<f64> = (0..=600).map(|k| 0.01 * k as f64).collect();
    let down: Vec<f64> = up.iter().rev().copied().collect();
    let a = hysteresis_sweep(&p, &up, SweepDirection::Up, HALF).unwrap();
    let mut b = hysteresis_sweep(&p, &down, SweepDirection::Down, HALF).unwrap();
    b.reverse();
    let differ: Vec<f64> = a.iter().zip(&b).filter(|(x, y)| (x.n - y.n).abs() > 1e-9).map(|(x, _)| x.omega).collect();
    assert!(!differ.is_empty());
    let (lo, hi) = (differ[0], *differ.last().unwrap());
    // the window where the branches differ is where margin 3 is positive
    for (x, _) in a.iter().zip(&b) {
        let m3 = bistability_test(&p.with_omega(x.omega), HALF).margins[2];
        if x.omega >= lo && x.omega <= hi {
            assert!(m3 > 0.0, "Ω={}", x.omega);
        } else if x.omega < lo - 0.011 || x.omega > hi + 0.011 {
            assert!(m3 < 0.0, "Ω={}", x.omega);
        }
    }
}

#[test]
fn linear_lyapunov_is_contraction_rate() {
    let env = DriveEnvelope::pulse_train(0.0, 0.1, 2.0 * PI / 5.0);
    for p in [ModelParams::new(-15.0, 0.7, 0.0), ModelParams::new(-3.0, 0.0, 5.0)] {
        let est = lyapunov_exponent(&p, &env, &LyapunovConfig::default()).unwrap();
        assert!((est.exponent + 0.5).abs() < 0.05, "{est:?}");
        assert!(est.converged);
        let full = LyapunovConfig { damping: DampingConvention::Full, ..Default::default() };
        let est = lyapunov_exponent(&p, &env, &full).unwrap();
        assert!((est.exponent + 1.0).abs() < 0.05, "{est:?}");
    }
}

#[test]
fn chaotic_preset_has_positive_exponent() {
    let env = DriveEnvelope::pulse_train(0.0, 0.25, 2.0 * PI / 5.0);
    let p = ModelParams::new(-15.0, 0.7, 20.4);
    let est = lyapunov_exponent(&p, &env, &LyapunovConfig::default()).unwrap();
    assert!(est.exponent > 0.05, "{est:?}");
}

#[test]
fn constant_drive_section_is_a_point() {
    let p = ModelParams::new(-8.0, 2.0, 2.7);
    let spec = PoincareSpec { period: Some(2.0), ..PoincareSpec::new(0.0, 50) };
    let sec = poincare_section(&p, &DriveEnvelope::Constant, C64::new(0.0, 0.0), &spec, HALF, &default_solver()).unwrap();
    assert!(sec.scatter() < 1e-6);
    assert!(poincare_section(&p, &DriveEnvelope::Constant, C64::new(0.0, 0.0), &PoincareSpec::new(0.0, 5), HALF, &default_solver()).is_err());
}
