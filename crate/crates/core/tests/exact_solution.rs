use kerrosc_core::master::*;
use kerrosc_core::*;
use proptest::prelude::*;

/// Complex ln Γ by shifting to large real part and applying Stirling's
/// series.
fn ln_gamma(z: C64) -> C64 {
    let mut shift = C64::new(0.0, 0.0);
    let mut z = z;
    while z.re < 20.0 {
        shift += z.ln();
        z += 1.0;
    }
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    let series = inv
        * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0))));
    (z - 0.5) * z.ln() - z + 0.5 * (2.0 * std::f64::consts::PI).ln() + series - shift
}

/// `ln F(c, c*, z)` summing `|Γ(c)|²/|Γ(c+k)|² zᵏ/k!` term by term.
fn ln_f_oracle(c: C64, z: f64) -> f64 {
    let base = 2.0 * ln_gamma(c).re;
    let terms: Vec<f64> = (0..4000)
        .map(|k| {
            let kf = k as f64;
            base - 2.0 * ln_gamma(c + kf).re + kf * z.ln() - ln_gamma(C64::new(kf + 1.0, 0.0)).re
        })
        .collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

fn oracle_mean(p: &ModelParams) -> f64 {
    let c = C64::new((p.delta + p.chi) / p.chi, -p.gamma / (2.0 * p.chi));
    let z = 2.0 * (p.omega_drive / p.chi).powi(2);
    let pre = p.omega_drive.powi(2) / ((p.delta + p.chi).powi(2) + (p.gamma / 2.0).powi(2));
    pre * (ln_f_oracle(c + 1.0, z) - ln_f_oracle(c, z)).exp()
}

#[test]
fn ln_gamma_oracle_sanity() {
    // Γ(5) = 24, |Γ(i)|² = π / sinh π
    assert!((ln_gamma(C64::new(5.0, 0.0)).re - 24f64.ln()).abs() < 1e-12);
    let pi = std::f64::consts::PI;
    assert!((2.0 * ln_gamma(C64::new(0.0, 1.0)).re - (pi / pi.sinh()).ln()).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn series_matches_log_gamma_oracle(
        delta in -20.0..20.0f64,
        chi in prop_oneof![-3.0..-0.3f64, 0.3..3.0f64],
        omega in 0.1..8.0f64,
    ) {
        let p = ModelParams::new(delta, chi, omega);
        let got = exact_mean_excitation(&p).unwrap();
        let want = oracle_mean(&p);
        prop_assert!((got / want - 1.0).abs() < 1e-9, "{got} vs {want}");
    }
}

#[test]
fn exact_solution_matches_master_equation() {
    for (delta, chi, omega) in [(-15.0, 2.0, 4.0), (-8.0, 2.0, 2.7), (3.0, -1.0, 2.0), (1.0, 0.5, 1.0)] {
        let p = ModelParams::new(delta, chi, omega);
        let (_, rho) = auto_dimension(&p, &AutoDimensionConfig::default()).unwrap();
        let exact = exact_mean_excitation(&p).unwrap();
        assert!((mean_excitation(&rho) / exact - 1.0).abs() < 1e-8, "{delta} {chi} {omega}");
    }
}

#[test]
fn quantum_curve_is_single_valued_and_smooth() {
    let p = ModelParams::new(-15.0, 2.0, 0.0);
    let ns: Vec<f64> = (0..=120)
        .map(|k| exact_mean_excitation(&p.with_omega(0.05 * k as f64)).unwrap())
        .collect();
    assert!(ns.windows(2).all(|w| w[1] > w[0]));
    // no jumps: second differences stay small compared with the rise
    let rise = ns.last().unwrap() - ns[0];
    let worst = ns.windows(3).map(|w| (w[2] - 2.0 * w[1] + w[0]).abs()).fold(0.0, f64::max);
    assert!(worst < 0.05 * rise);
}
