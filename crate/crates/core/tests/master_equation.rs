use approx::assert_abs_diff_eq;
use kerrosc_core::master::*;
use kerrosc_core::model::{hamiltonian, lindblad_ops};
use kerrosc_core::*;
use nalgebra::DMatrix;
use proptest::prelude::*;

/// `−i[H, ρ] + Σ (LρL† − ½{L†L, ρ})` with dense products.
fn dense_rhs(rho: &DMatrix<C64>, t: f64, space: &FockSpace, p: &ModelParams, env: &DriveEnvelope) -> DMatrix<C64> {
    let h = hamiltonian(space, p, env, t).into_matrix();
    let mi = C64::new(0.0, -1.0);
    let mut out = (&h * rho - rho * &h) * mi;
    for l in lindblad_ops(space, p).unwrap() {
        let ld = l.matrix.adjoint();
        let ll = &ld * &l.matrix;
        out += &l.matrix * rho * &ld - (&ll * rho + rho * &ll) * C64::new(0.5, 0.0);
    }
    out
}

fn random_density(dim: usize, coeffs: &[f64]) -> DensityMatrix {
    // ρ = A A† / Tr(A A†) from a random complex A
    let a = DMatrix::from_fn(dim, dim, |i, j| {
        let k = 2 * (i * dim + j);
        C64::new(coeffs[k % coeffs.len()], coeffs[(k + 1) % coeffs.len()])
    });
    let m = &a * a.adjoint();
    let tr = m.trace();
    DensityMatrix::from_matrix(m / tr).unwrap()
}

fn params() -> impl Strategy<Value = ModelParams> {
    (-20.0..20.0f64, -3.0..3.0f64, 0.0..8.0f64, 0.2..3.0f64, 0.0..1.0f64).prop_map(
        |(delta, chi, omega, gamma, n_bath)| ModelParams {
            delta,
            chi,
            omega_drive: omega,
            gamma,
            n_bath,
        },
    )
}

fn envelope() -> impl Strategy<Value = DriveEnvelope> {
    prop_oneof![
        Just(DriveEnvelope::Constant),
        (0.05..1.0f64, 0.5..4.0f64, 0.0..2.0f64)
            .prop_map(|(w, period, t0)| DriveEnvelope::pulse_train(t0, w, period)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generator_matches_dense_products(
        p in params(),
        env in envelope(),
        dim in 2usize..9,
        t in 0.0..10.0f64,
        coeffs in prop::collection::vec(-1.0..1.0f64, 16..40),
    ) {
        let space = FockSpace::new(dim).unwrap();
        let rho = random_density(dim, &coeffs);
        let fast = lindblad_rhs(&rho, t, &space, &p, &env).unwrap();
        let slow = dense_rhs(rho.matrix(), t, &space, &p, &env);
        let scale = 1.0 + slow.norm();
        prop_assert!((&fast - &slow).norm() < 1e-12 * scale, "diff {}", (&fast - &slow).norm());
    }

    #[test]
    fn generator_is_traceless_and_hermitian(
        p in params(),
        env in envelope(),
        dim in 2usize..12,
        t in 0.0..10.0f64,
        coeffs in prop::collection::vec(-1.0..1.0f64, 16..40),
    ) {
        let space = FockSpace::new(dim).unwrap();
        let rho = random_density(dim, &coeffs);
        let d = lindblad_rhs(&rho, t, &space, &p, &env).unwrap();
        let scale = 1.0 + d.norm();
        prop_assert!(d.trace().norm() < 1e-12 * scale);
        prop_assert!((&d - d.adjoint()).norm() == 0.0);
    }

    #[test]
    fn evolution_stays_physical(
        delta in -10.0..10.0f64,
        chi in -2.0..2.0f64,
        omega in 0.0..3.0f64,
        n_bath in 0.0..0.5f64,
        env in envelope(),
    ) {
        let p = ModelParams { delta, chi, omega_drive: omega, gamma: 1.0, n_bath };
        let space = FockSpace::new(12).unwrap();
        let states = evolve_density(
            &DensityMatrix::vacuum(12),
            &[0.0, 0.5, 1.0, 2.0],
            &space,
            &p,
            &env,
            &MasterConfig::default(),
        )
        .unwrap();
        for rho in &states {
            prop_assert!((rho.trace() - 1.0).norm() < 1e-8);
            prop_assert!(rho.hermiticity_error() <= 1e-10);
            prop_assert!(rho.min_eigenvalue() > -1e-8);
            let pur = purity(rho);
            prop_assert!(pur <= 1.0 + 1e-9 && pur > 0.0);
            let dist = number_distribution(rho);
            prop_assert!((dist.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-8);
        }
    }
}

#[test]
fn undriven_decay_law() {
    for gamma in [0.5, 1.0, 2.0] {
        let p = ModelParams { gamma, ..ModelParams::new(-3.0, 0.7, 0.0) };
        let space = FockSpace::new(8).unwrap();
        let times = [0.0, 0.3, 1.0, 2.5, 5.0];
        let states = evolve_density(&DensityMatrix::fock(8, 4), &times, &space, &p, &DriveEnvelope::Constant, &MasterConfig::default()).unwrap();
        for (t, rho) in times.iter().zip(&states) {
            let expect = 4.0 * (-gamma * t).exp();
            assert!((mean_excitation(rho) - expect).abs() < 1e-7 * 4.0, "t={t}");
        }
    }
}

#[test]
fn thermal_bath_steady_state() {
    // undriven, the stationary state is thermal with ⟨n⟩ = N
    let p = ModelParams::new(2.0, 0.5, 0.0).with_n_bath(0.3);
    let space = FockSpace::new(30).unwrap();
    let rho = steady_state(&space, &p, &DriveEnvelope::Constant, &SteadyStateConfig::default()).unwrap();
    assert_abs_diff_eq!(mean_excitation(&rho), 0.3, epsilon = 1e-8);
    let q: f64 = 0.3 / 1.3;
    for n in 0..6 {
        assert_abs_diff_eq!(rho.element(n, n).re, (1.0 - q) * q.powi(n as i32), epsilon = 1e-9);
    }
}

#[test]
fn steady_state_is_independent_of_initial_state() {
    let p = ModelParams::new(-15.0, 2.0, 3.0);
    let space = FockSpace::new(20).unwrap();
    let cfg = SteadyStateConfig::integrate();
    let a = steady_state_from(&DensityMatrix::vacuum(20), &space, &p, &DriveEnvelope::Constant, &cfg).unwrap();
    let b = steady_state_from(&DensityMatrix::fock(20, 3), &space, &p, &DriveEnvelope::Constant, &cfg).unwrap();
    assert!(a.trace_distance(&b) < 1e-6, "{}", a.trace_distance(&b));
    let direct = steady_state(&space, &p, &DriveEnvelope::Constant, &SteadyStateConfig::default()).unwrap();
    assert!(a.trace_distance(&direct) < 1e-6);
    let l = lindblad_rhs(&direct, 0.0, &space, &p, &DriveEnvelope::Constant).unwrap();
    assert!(l.norm() < 1e-10);
}

#[test]
fn steady_state_bistable_mixture() {
    let p = ModelParams::new(-8.0, 2.0, 2.7);
    let (dim, rho) = auto_dimension(&p, &AutoDimensionConfig::default()).unwrap();
    assert!(dim >= 20);
    rho.validate().unwrap();
    assert!(purity(&rho) < 0.9);
    let ex = exact_mean_excitation(&p).unwrap();
    assert!((mean_excitation(&rho) / ex - 1.0).abs() < 1e-8);
}

#[test]
fn trace_distance_of_orthogonal_states() {
    assert_abs_diff_eq!(DensityMatrix::fock(4, 0).trace_distance(&DensityMatrix::fock(4, 2)), 1.0, epsilon = 1e-12);
    let mix = DensityMatrix::mixture(&[(0.5, &DensityMatrix::fock(4, 0)), (0.5, &DensityMatrix::fock(4, 1))]).unwrap();
    assert_abs_diff_eq!(mix.trace_distance(&DensityMatrix::fock(4, 0)), 0.5, epsilon = 1e-12);
}

#[test]
fn mean_amplitude_of_coherent_state() {
    let beta = C64::new(0.8, -0.4);
    let psi = StateVector::coherent(30, beta).unwrap();
    let rho = psi.projector();
    assert!((mean_amplitude(&rho) - beta).norm() < 1e-10);
}

#[test]
fn steady_amplitude_matches_classical_small_drive() {
    // far from the nonlinearity the quantum ⟨a⟩ follows the classical root
    let p = ModelParams::new(-3.0, 0.05, 0.2);
    let space = FockSpace::new(20).unwrap();
    let rho = steady_state(&space, &p, &DriveEnvelope::Constant, &SteadyStateConfig::default()).unwrap();
    let roots = kerrosc_core::semiclassical::steady_amplitudes(&p, DampingConvention::Half);
    assert_eq!(roots.len(), 1);
    assert!((mean_amplitude(&rho) - roots.roots[0].alpha).norm() < 1e-2);
}

#[test]
fn pulsed_evolution_is_deterministic() {
    let p = ModelParams::new(-8.0, 2.0, 2.7);
    let env = DriveEnvelope::pulse_train(0.0, 0.5, 2.0);
    let space = FockSpace::new(12).unwrap();
    let run = || evolve_density(&DensityMatrix::vacuum(12), &[0.0, 3.0], &space, &p, &env, &MasterConfig::default()).unwrap();
    assert_eq!(run(), run());
}

#[test]
fn fock_extrema() {
    let rho = DensityMatrix::fock(6, 2);
    let e = distribution_extrema(&number_distribution(&rho));
    assert_eq!(e.maxima, vec![2]);
    assert!(e.minima.is_empty());
}
