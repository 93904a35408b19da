//! Closed-form steady-state excitation number of the driven Kerr oscillator.
//!
//! The steady state admits an exact solution in terms of the series
//!
//! ```text
//! F(c, c*, z) = Σₖ Γ(c)Γ(c*) / (Γ(c+k)Γ(c*+k)) · zᵏ / k!
//! ```
//!
//! with `c = (Δ+χ)/χ − iγ/(2χ)` and `z = 2(Ω/χ)²`, giving
//!
//! ```text
//! ⟨a†a⟩ = Ω² / ((Δ+χ)² + (γ/2)²) · F(c+1, c*+1, z) / F(c, c*, z).
//! ```
//!
//! Consecutive terms have ratio `z / ((c+k)(c*+k)(k+1))`, a positive real
//! number, so the series is summed in log space to survive the large
//! intermediate terms that appear for `z` of order 10²–10³.

use crate::error::{Error, Result};
use crate::model::{ModelParams, C64};

/// Relative size below which a decreasing term ends the summation.
const TERM_CUTOFF: f64 = 1e-16;
const MAX_TERMS: usize = 100_000;

/// The coefficients entering the exact solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactSolutionInputs {
    pub c: C64,
    pub z: f64,
}

impl ExactSolutionInputs {
    pub fn from_params(p: &ModelParams) -> Result<Self> {
        if p.chi == 0.0 {
            return Err(Error::Unsupported(
                "exact solution requires chi != 0; use lorentzian_mean_excitation".into(),
            ));
        }
        Ok(Self {
            c: C64::new((p.delta + p.chi) / p.chi, -p.gamma / (2.0 * p.chi)),
            z: 2.0 * (p.omega_drive / p.chi).powi(2),
        })
    }
}

/// Natural logarithm of `F(c, c*, z)` together with the imaginary residue
/// accumulated by the complex term products.
pub fn ln_series(c: C64, z: f64) -> (f64, f64) {
    if z == 0.0 {
        return (0.0, 0.0);
    }
    let ln_z = z.ln();
    // running log-sum-exp: sum = exp(ln_scale) * acc
    let mut ln_term = 0.0f64;
    let mut ln_scale = 0.0f64;
    let mut acc = 1.0f64;
    let mut imag_residue = 0.0f64;
    for k in 0..MAX_TERMS {
        let ck = c + k as f64;
        let denom = ck * ck.conj();
        imag_residue = imag_residue.max(denom.im.abs() / denom.re.abs());
        let ratio_ln = ln_z - denom.re.ln() - ((k + 1) as f64).ln();
        ln_term += ratio_ln;
        if ln_term > ln_scale {
            acc = acc * (ln_scale - ln_term).exp() + 1.0;
            ln_scale = ln_term;
        } else {
            acc += (ln_term - ln_scale).exp();
        }
        if ratio_ln < 0.0 && ln_term - (ln_scale + acc.ln()) < TERM_CUTOFF.ln() {
            break;
        }
    }
    (ln_scale + acc.ln(), imag_residue)
}

/// Exact steady-state mean excitation number `⟨a†a⟩` for constant drive.
pub fn exact_mean_excitation(p: &ModelParams) -> Result<f64> {
    p.validate()?;
    let inputs = ExactSolutionInputs::from_params(p)?;
    if p.omega_drive == 0.0 {
        return Ok(0.0);
    }
    let shift = p.delta + p.chi;
    let prefactor = p.omega_drive.powi(2) / (shift * shift + (p.gamma / 2.0).powi(2));
    let (ln_upper, res_upper) = ln_series(inputs.c + 1.0, inputs.z);
    let (ln_lower, res_lower) = ln_series(inputs.c, inputs.z);
    debug_assert!(res_upper.max(res_lower) < 1e-10);
    Ok(prefactor * (ln_upper - ln_lower).exp())
}

/// The `χ = 0` limit: a driven damped harmonic oscillator.
pub fn lorentzian_mean_excitation(p: &ModelParams) -> f64 {
    p.omega_drive.powi(2) / (p.delta.powi(2) + (p.gamma / 2.0).powi(2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn undriven_is_zero() {
        assert_eq!(exact_mean_excitation(&ModelParams::new(-15.0, 2.0, 0.0)).unwrap(), 0.0);
    }

    #[test]
    fn zero_chi_is_unsupported() {
        let p = ModelParams::new(1.0, 0.0, 1.0);
        assert!(matches!(exact_mean_excitation(&p), Err(Error::Unsupported(_))));
        assert!((lorentzian_mean_excitation(&p) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn weak_nonlinearity_approaches_lorentzian() {
        // with the Kerr shift folded into the detuning the χ→0 limit is the
        // harmonic result at detuning Δ+χ
        let p = ModelParams::new(1.0, 1e-4, 0.05);
        let exact = exact_mean_excitation(&p).unwrap();
        let harmonic = lorentzian_mean_excitation(&ModelParams::new(1.0 + 1e-4, 0.0, 0.05));
        assert!((exact / harmonic - 1.0).abs() < 1e-3, "{exact} vs {harmonic}");
    }

    #[test]
    fn imaginary_residue_vanishes() {
        for (d, chi, om) in [(-15.0, 2.0, 5.0), (-8.0, 2.0, 2.7), (3.0, -0.5, 10.0)] {
            let p = ModelParams::new(d, chi, om);
            let inputs = ExactSolutionInputs::from_params(&p).unwrap();
            let (_, res) = ln_series(inputs.c, inputs.z);
            assert!(res < 1e-10);
            let (_, res_conj) = ln_series(inputs.c.conj(), inputs.z);
            assert!(res_conj < 1e-10);
            assert_eq!(ln_series(inputs.c, inputs.z).0, ln_series(inputs.c.conj(), inputs.z).0);
        }
    }

    #[test]
    fn large_argument_does_not_overflow() {
        let p = ModelParams::new(-15.0, 0.2, 30.0); // z = 45000
        let n = exact_mean_excitation(&p).unwrap();
        assert!(n.is_finite() && n > 0.0);
    }
}
