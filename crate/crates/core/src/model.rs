//! Physical model: parameters, drive envelope, truncated Fock space and the
//! operators entering the master equation.
//!
//! The Hamiltonian in the frame rotating at the drive frequency is
//!
//! ```text
//! H = Δ a†a + χ (a†a)² + f(t) Ω (a† + a)
//! ```
//!
//! with ħ = 1 and Ω real. Dissipation is described by the jump operators
//! `√((N+1)γ) a` and `√(Nγ) a†`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = num_complex::Complex64;

/// Physical rates in units of the dissipation rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Detuning Δ = ω₀ − ω.
    pub delta: f64,
    /// Kerr strength χ.
    pub chi: f64,
    /// Real drive amplitude Ω.
    pub omega_drive: f64,
    /// Dissipation rate γ.
    #[serde(default = "one")]
    pub gamma: f64,
    /// Mean thermal quanta N of the bath.
    #[serde(default)]
    pub n_bath: f64,
}

fn one() -> f64 {
    1.0
}

impl ModelParams {
    /// Zero-temperature parameters with γ = 1.
    pub fn new(delta: f64, chi: f64, omega_drive: f64) -> Self {
        Self {
            delta,
            chi,
            omega_drive,
            gamma: 1.0,
            n_bath: 0.0,
        }
    }

    pub fn with_omega(self, omega_drive: f64) -> Self {
        Self {
            omega_drive,
            ..self
        }
    }

    pub fn with_n_bath(self, n_bath: f64) -> Self {
        Self { n_bath, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("delta", self.delta),
            ("chi", self.chi),
            ("omega_drive", self.omega_drive),
            ("gamma", self.gamma),
            ("n_bath", self.n_bath),
        ] {
            if !v.is_finite() {
                return Err(Error::param(name, "must be finite"));
            }
        }
        if self.gamma <= 0.0 {
            return Err(Error::InvalidRate {
                name: "gamma",
                value: self.gamma,
            });
        }
        if self.n_bath < 0.0 {
            return Err(Error::param("n_bath", "must be non-negative"));
        }
        if self.omega_drive < 0.0 {
            return Err(Error::param("omega_drive", "must be non-negative"));
        }
        Ok(())
    }
}

/// A train of Gaussian pulses `Σₙ exp(−(t − t0 − nτ)²/T²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseTrain {
    /// Centre of pulse `n = 0`.
    #[serde(default)]
    pub t0: f64,
    /// Pulse width T.
    pub width: f64,
    /// Separation τ between pulse centres.
    pub period: f64,
    /// Number of pulses `n = 0..count`; unbounded in both directions when
    /// absent, which makes the envelope exactly periodic.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pulse_count: Option<u32>,
}

/// Pulses further than this many widths from `t` are dropped; their
/// contribution is below `exp(-36)`.
const PULSE_CUTOFF_WIDTHS: f64 = 6.0;

/// Time dependence `f(t)` of the drive amplitude.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DriveEnvelope {
    #[default]
    Constant,
    PulseTrain(PulseTrain),
}

impl DriveEnvelope {
    pub fn pulse_train(t0: f64, width: f64, period: f64) -> Self {
        DriveEnvelope::PulseTrain(PulseTrain {
            t0,
            width,
            period,
            pulse_count: None,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if let DriveEnvelope::PulseTrain(p) = self {
            if !(p.width > 0.0 && p.width.is_finite()) {
                return Err(Error::param("width", "pulse width must be positive"));
            }
            if !(p.period > 0.0 && p.period.is_finite()) {
                return Err(Error::param("period", "pulse period must be positive"));
            }
            if !p.t0.is_finite() {
                return Err(Error::param("t0", "must be finite"));
            }
        }
        Ok(())
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, DriveEnvelope::Constant)
    }

    /// Pulse repetition period, if the drive is pulsed.
    pub fn period(&self) -> Option<f64> {
        match self {
            DriveEnvelope::Constant => None,
            DriveEnvelope::PulseTrain(p) => Some(p.period),
        }
    }

    /// Largest step an adaptive integrator may take without risking
    /// stepping over a pulse.
    pub fn max_step(&self) -> f64 {
        match self {
            DriveEnvelope::Constant => f64::INFINITY,
            DriveEnvelope::PulseTrain(p) => 0.5 * p.width,
        }
    }

    /// Envelope value `f(t)`.
    pub fn value(&self, t: f64) -> f64 {
        match self {
            DriveEnvelope::Constant => 1.0,
            DriveEnvelope::PulseTrain(p) => {
                let reach = PULSE_CUTOFF_WIDTHS * p.width;
                let mut lo = ((t - p.t0 - reach) / p.period).ceil();
                let mut hi = ((t - p.t0 + reach) / p.period).floor();
                if let Some(count) = p.pulse_count {
                    lo = lo.max(0.0);
                    hi = hi.min(f64::from(count) - 1.0);
                }
                let mut sum = 0.0;
                let mut n = lo;
                while n <= hi {
                    let s = (t - p.t0 - n * p.period) / p.width;
                    sum += (-s * s).exp();
                    n += 1.0;
                }
                sum
            }
        }
    }
}

/// Truncated Fock space `{|0⟩, …, |dim−1⟩}` with cached ladder operators.
#[derive(Debug, Clone)]
pub struct FockSpace {
    dim: usize,
    sqrt_n: Vec<f64>,
    lowering: DMatrix<C64>,
    raising: DMatrix<C64>,
    number: DMatrix<C64>,
    number_sq: DMatrix<C64>,
}

impl FockSpace {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidDimension(dim));
        }
        let sqrt_n: Vec<f64> = (0..dim).map(|n| (n as f64).sqrt()).collect();
        let lowering = DMatrix::from_fn(dim, dim, |i, j| {
            if j == i + 1 {
                C64::new(sqrt_n[j], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let raising = lowering.adjoint();
        let number = DMatrix::from_fn(dim, dim, |i, j| {
            if i == j {
                C64::new(i as f64, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let number_sq = &number * &number;
        Ok(Self {
            dim,
            sqrt_n,
            lowering,
            raising,
            number,
            number_sq,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `√n` for `n = 0..dim`, the non-zero entries of the ladder operators.
    pub fn sqrt_n(&self) -> &[f64] {
        &self.sqrt_n
    }

    /// Annihilation operator `a`.
    pub fn lowering(&self) -> &DMatrix<C64> {
        &self.lowering
    }

    /// Creation operator `a†`.
    pub fn raising(&self) -> &DMatrix<C64> {
        &self.raising
    }

    pub fn number(&self) -> &DMatrix<C64> {
        &self.number
    }

    pub fn number_squared(&self) -> &DMatrix<C64> {
        &self.number_sq
    }
}

/// A square complex matrix equal to its conjugate transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator(DMatrix<C64>);

impl HermitianOperator {
    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.0
    }

    /// Largest elementwise deviation from hermiticity.
    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(&self.0)
    }
}

pub(crate) fn hermiticity_error(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..=j {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Diagonal of the undriven Hamiltonian, `Δn + χn²`.
pub(crate) fn bare_energies(dim: usize, p: &ModelParams) -> Vec<f64> {
    (0..dim)
        .map(|n| {
            let n = n as f64;
            p.delta * n + p.chi * n * n
        })
        .collect()
}

/// The Hamiltonian at time `t`.
pub fn hamiltonian(
    space: &FockSpace,
    p: &ModelParams,
    env: &DriveEnvelope,
    t: f64,
) -> HermitianOperator {
    let drive = env.value(t) * p.omega_drive;
    let h = space.number() * C64::from(p.delta)
        + space.number_squared() * C64::from(p.chi)
        + (space.raising() + space.lowering()) * C64::from(drive);
    HermitianOperator(h)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JumpKind {
    /// Proportional to `a`.
    Lowering,
    /// Proportional to `a†`.
    Raising,
}

/// A Lindblad jump operator `√rate · a` or `√rate · a†`.
#[derive(Debug, Clone)]
pub struct JumpOperator {
    pub kind: JumpKind,
    pub rate: f64,
    pub matrix: DMatrix<C64>,
}

impl JumpOperator {
    pub fn amplitude(&self) -> f64 {
        self.rate.sqrt()
    }
}

/// Jump operators `√((N+1)γ) a` and, for `N > 0`, `√(Nγ) a†`.
pub fn lindblad_ops(space: &FockSpace, p: &ModelParams) -> Result<Vec<JumpOperator>> {
    if !(p.gamma > 0.0) {
        return Err(Error::InvalidRate {
            name: "gamma",
            value: p.gamma,
        });
    }
    if !(p.n_bath >= 0.0) {
        return Err(Error::param("n_bath", "must be non-negative"));
    }
    let decay = (p.n_bath + 1.0) * p.gamma;
    let mut ops = vec![JumpOperator {
        kind: JumpKind::Lowering,
        rate: decay,
        matrix: space.lowering() * C64::from(decay.sqrt()),
    }];
    if p.n_bath > 0.0 {
        let pump = p.n_bath * p.gamma;
        ops.push(JumpOperator {
            kind: JumpKind::Raising,
            rate: pump,
            matrix: space.raising() * C64::from(pump.sqrt()),
        });
    }
    Ok(ops)
}
