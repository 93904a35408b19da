//! Fast invariant suite behind the `validate` subcommand.

use std::f64::consts::FRAC_2_PI;

use kerrosc_core::master::{evolve_density, mean_excitation, MasterConfig, HERMITICITY_TOL, POSITIVITY_TOL, TRACE_TOL};
use kerrosc_core::semiclassical::{default_solver, integrate_amplitude, scale_params};
use kerrosc_core::trajectories::{ensemble_run, QsdSystem, TrajectoryConfig};
use kerrosc_core::wigner::{wigner_at, wigner_grid};
use kerrosc_core::{DampingConvention, DensityMatrix, DriveEnvelope, FockSpace, GridSpec, ModelParams, StateVector, C64};

#[derive(Debug, Clone)]
pub struct Outcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &'static str, passed: bool, detail: String) -> Outcome {
    Outcome { name, passed, detail }
}

fn failed(name: &'static str, e: impl std::fmt::Display) -> Outcome {
    outcome(name, false, format!("error: {e}"))
}

fn vacuum_peak() -> Outcome {
    let w = wigner_at(&DensityMatrix::vacuum(4), C64::new(0.0, 0.0));
    let err = (w - FRAC_2_PI).abs();
    outcome("vacuum Wigner peak is 2/pi", err <= 1e-6, format!("W(0) = {w:.12}, error {err:.1e}"))
}

fn one_quantum_origin() -> Outcome {
    let w = wigner_at(&DensityMatrix::fock(4, 1), C64::new(0.0, 0.0));
    let err = (w + FRAC_2_PI).abs();
    outcome("|1> Wigner value at the origin is -2/pi", err <= 1e-6, format!("W(0) = {w:.12}, error {err:.1e}"))
}

fn grid_normalisation() -> Outcome {
    let mut worst: f64 = 0.0;
    for rho in [DensityMatrix::vacuum(6), DensityMatrix::fock(6, 1), DensityMatrix::fock(6, 3)] {
        match wigner_grid(&rho, &GridSpec::default()) {
            Ok(g) => worst = worst.max(g.normalization_residual.abs()),
            Err(e) => return failed("Wigner grid normalisation", e),
        }
    }
    outcome("Wigner grid normalisation", worst <= 1e-2, format!("worst |integral - 1| = {worst:.1e}"))
}

fn master_preserves_physicality() -> Outcome {
    let name = "master equation keeps trace, hermiticity and positivity";
    let p = ModelParams::new(-8.0, 2.0, 2.7);
    let env = DriveEnvelope::pulse_train(0.0, 0.5, 2.0);
    let dim = 16;
    let times: Vec<f64> = (0..=20).map(|k| 0.25 * k as f64).collect();
    let space = FockSpace::new(dim).expect("dimension");
    let cfg = MasterConfig {
        check_positivity: false,
        ..MasterConfig::default()
    };
    let states = match evolve_density(&DensityMatrix::vacuum(dim), &times, &space, &p, &env, &cfg) {
        Ok(s) => s,
        Err(e) => return failed(name, e),
    };
    let (mut tr, mut herm, mut neg): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for rho in &states {
        tr = tr.max((rho.trace() - 1.0).norm());
        herm = herm.max(rho.hermiticity_error());
        neg = neg.max(-rho.min_eigenvalue());
    }
    outcome(
        name,
        tr <= TRACE_TOL && herm <= HERMITICITY_TOL && neg <= POSITIVITY_TOL,
        format!("|tr - 1| {tr:.1e}, hermiticity {herm:.1e}, most negative eigenvalue {:.1e}", -neg),
    )
}

fn decay_law() -> Outcome {
    let name = "undriven excitation decays as exp(-gamma t)";
    let mut worst: f64 = 0.0;
    for gamma in [0.5, 1.0, 2.0] {
        let p = ModelParams {
            gamma,
            ..ModelParams::new(-3.0, 0.7, 0.0)
        };
        let times = [0.0, 0.5, 1.0, 2.0, 4.0];
        let space = FockSpace::new(8).expect("dimension");
        let states = match evolve_density(&DensityMatrix::fock(8, 4), &times, &space, &p, &DriveEnvelope::Constant, &MasterConfig::default()) {
            Ok(s) => s,
            Err(e) => return failed(name, e),
        };
        for (t, rho) in times.iter().zip(&states) {
            let expect = 4.0 * (-gamma * t).exp();
            worst = worst.max((mean_excitation(rho) - expect).abs() / 4.0);
        }
    }
    outcome(name, worst <= 1e-6, format!("worst relative deviation {worst:.1e}"))
}

fn scaling_identity() -> Outcome {
    let name = "classical scaling identity";
    let p = ModelParams::new(-8.0, 2.0, 2.7);
    let env = DriveEnvelope::pulse_train(0.0, 0.5, 2.0);
    let times: Vec<f64> = (0..=40).map(|k| 0.5 * k as f64).collect();
    let a0 = C64::new(0.3, -0.2);
    let conv = DampingConvention::Half;
    let run = || -> kerrosc_core::Result<f64> {
        let base = integrate_amplitude(a0, &times, &p, &env, conv, &default_solver())?;
        let mut worst: f64 = 0.0;
        for lambda in [2.0, 3.0] {
            let q = scale_params(&p, lambda)?;
            let scaled = integrate_amplitude(a0 * lambda, &times, &q, &env, conv, &default_solver())?;
            for (x, y) in base.iter().zip(&scaled) {
                worst = worst.max((y.alpha - x.alpha * lambda).norm());
            }
        }
        Ok(worst)
    };
    match run() {
        Ok(w) => outcome(name, w <= 1e-6, format!("largest |alpha_scaled - lambda alpha| = {w:.1e}")),
        Err(e) => failed(name, e),
    }
}

fn seed_partition() -> Outcome {
    let name = "ensemble results are independent of seed partition";
    let p = ModelParams::new(-8.0, 2.0, 2.7);
    let dim = 10;
    let run = || -> kerrosc_core::Result<bool> {
        let sys = QsdSystem::new(&FockSpace::new(dim)?, &p, &DriveEnvelope::Constant)?;
        let cfg = TrajectoryConfig {
            dt: 1e-3,
            snapshot_times: vec![0.2],
        };
        let grid = [0.0, 0.1, 0.2];
        let psi = StateVector::vacuum(dim);
        let seeds: Vec<u64> = (0..12).collect();
        let whole = ensemble_run(&psi, &grid, &seeds, &sys, &cfg)?;
        let odd: Vec<u64> = seeds.iter().copied().filter(|s| s % 2 == 1).rev().collect();
        let even: Vec<u64> = seeds.iter().copied().filter(|s| s % 2 == 0).collect();
        let merged = ensemble_run(&psi, &grid, &odd, &sys, &cfg)?.merge(ensemble_run(&psi, &grid, &even, &sys, &cfg)?)?;
        Ok(whole.summary()? == merged.summary()? && whole.density_at(0.2)? == merged.density_at(0.2)?)
    };
    match run() {
        Ok(same) => outcome(name, same, if same { "bit-identical".into() } else { "results differ".into() }),
        Err(e) => failed(name, e),
    }
}

/// Run every check; each is independent and reports its own failure.
pub fn run_suite() -> Vec<Outcome> {
    vec![
        vacuum_peak(),
        one_quantum_origin(),
        grid_normalisation(),
        master_preserves_physicality(),
        decay_law(),
        seed_partition(),
        scaling_identity(),
    ]
}
