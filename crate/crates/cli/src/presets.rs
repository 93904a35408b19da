//! Named experiments, one per published figure.

use std::f64::consts::PI;

use kerrosc_core::{DampingConvention, DriveEnvelope, GridSpec, ModelParams};

use crate::config::*;
use crate::error::{CliError, Result};

pub struct Preset {
    pub name: &'static str,
    pub aliases: &'static [&'static str],
    /// Parameters as printed in the figure caption.
    pub caption: &'static str,
    build: fn() -> ExperimentConfig,
}

impl Preset {
    pub fn config(&self) -> ExperimentConfig {
        (self.build)()
    }
}

/// Pulse separation of the chaotic presets, τ = 2π/5.
pub const CHAOS_PERIOD: f64 = 2.0 * PI / 5.0;

fn base(name: &str, description: &str, params: ModelParams, study: Study) -> ExperimentConfig {
    ExperimentConfig {
        name: name.to_owned(),
        description: description.to_owned(),
        params,
        envelope: DriveEnvelope::Constant,
        engine: Engine::All,
        study,
        damping_convention: DampingConvention::Half,
        dim: None,
        solver: SolverSettings::default(),
        ensemble: EnsembleSettings::default(),
        grid: GridSpec::default(),
        out_dir: None,
    }
}

fn bistable_params() -> ModelParams {
    ModelParams::new(-8.0, 2.0, 2.7)
}

fn chaos_params() -> ModelParams {
    ModelParams::new(-15.0, 0.7, 20.4)
}

fn fig1() -> ExperimentConfig {
    base(
        "fig1-hysteresis",
        "steady excitation versus drive: closed-form quantum curve and classical up/down branches",
        ModelParams::new(-15.0, 2.0, 0.0),
        Study::Hysteresis(HysteresisStudy {
            omega: Range { min: 0.05, max: 6.0, step: 0.05 },
        }),
    )
}

fn fig2() -> ExperimentConfig {
    let mut c = base(
        "fig2-bistable",
        "bistability at a few quanta: steady Wigner function, classical section and a switching trajectory",
        bistable_params(),
        Study::Bistability(BistabilityStudy {
            t_end: 20.0,
            switching_time: 10_000.0,
            series_step: 0.1,
            poincare_period: 1.0,
            poincare_points: 200,
            mode_bin: 0.2,
        }),
    );
    c.dim = Some(24);
    c.ensemble.trajectories = 500;
    c
}

fn fig3() -> ExperimentConfig {
    let mut c = base(
        "fig3-amplitude-sweep",
        "steady Wigner functions across the bistable drive window",
        bistable_params(),
        Study::AmplitudeSweep(AmplitudeSweepStudy {
            omegas: vec![2.1, 2.3, 2.5, 2.7, 2.9, 3.1],
        }),
    );
    c.dim = Some(24);
    c
}

fn fig4() -> ExperimentConfig {
    base(
        "fig4-scaling",
        "Wigner functions under the classical scaling map",
        bistable_params(),
        Study::Scaling(ScalingStudy {
            lambdas: vec![1.0, 2.0, 3.0],
            orbit_time: 20.0,
        }),
    )
}

fn fig5() -> ExperimentConfig {
    let mut c = base(
        "fig5-interference",
        "interference fringes under a Gaussian pulse train",
        bistable_params(),
        Study::Interference(InterferenceStudy {
            widths: vec![0.5, 0.1],
            t_end: 40.0,
            samples_per_period: 20,
            constant_reference: true,
        }),
    );
    c.envelope = DriveEnvelope::pulse_train(0.0, 0.5, 2.0);
    c.dim = Some(24);
    c
}

fn fig6() -> ExperimentConfig {
    let mut c = base(
        "fig6-purity",
        "purity against pulse width and pulse separation",
        bistable_params(),
        Study::Purity(PurityStudy {
            fixed_period: 2.5,
            widths: (1..=10).map(|k| k as f64 / 10.0).collect(),
            fixed_width: 0.5,
            periods: (0..=6).map(|k| 1.0 + 0.5 * k as f64).collect(),
            t_end: 40.0,
            samples_per_period: 20,
        }),
    );
    c.envelope = DriveEnvelope::pulse_train(0.0, 0.5, 2.5);
    c.dim = Some(24);
    c
}

/// Pulsed runs at dim 40 pass through near-pure states whose small
/// eigenvalues sit below the default step error.
fn tight_master(c: &mut ExperimentConfig) {
    c.solver.master.rtol = 1e-10;
    c.solver.master.atol = 1e-12;
}

fn chaos(name: &str, width: f64, snapshot_time: f64) -> ExperimentConfig {
    let mut c = base(
        name,
        "dissipative chaos at a few quanta: ensemble Wigner function against the classical section",
        chaos_params(),
        Study::Chaos(ChaosStudy {
            snapshot_time,
            series_step: 0.05,
            poincare_points: 500,
        }),
    );
    c.envelope = DriveEnvelope::pulse_train(0.0, width, CHAOS_PERIOD);
    c.dim = Some(40);
    c.grid = GridSpec::square(6.0, 121);
    tight_master(&mut c);
    c
}

fn fig7() -> ExperimentConfig {
    chaos("fig7-chaos-T0.25", 0.25, 100.0)
}

fn fig8() -> ExperimentConfig {
    chaos("fig8-chaos-T0.205", 0.205, 100.0)
}

fn fig9() -> ExperimentConfig {
    chaos("fig9-chaos-T0.15", 0.15, 100.0)
}

fn fig10() -> ExperimentConfig {
    chaos("fig10-chaos-T0.1", 0.1, 100.0)
}

fn fig11() -> ExperimentConfig {
    chaos("fig11-max-n", 0.1, 100.6)
}

fn fig12() -> ExperimentConfig {
    chaos("fig12-min-n", 0.1, 100.4)
}

fn max_sampling() -> Sampling {
    Sampling {
        label: "max".into(),
        pieces: vec![SamplingPiece { upto: 19.0, t0: 39.1 }, SamplingPiece { upto: 26.0, t0: 39.0 }],
    }
}

fn min_sampling() -> Sampling {
    Sampling {
        label: "min".into(),
        pieces: vec![SamplingPiece { upto: 8.5, t0: 40.2 }, SamplingPiece { upto: 26.0, t0: 40.1 }],
    }
}

fn fig13() -> ExperimentConfig {
    let mut c = base(
        "fig13-lyapunov-sweep",
        "largest classical Lyapunov exponent against pulse strength",
        chaos_params(),
        Study::LyapunovSweep(LyapunovSweepStudy {
            omega: Range { min: 1.0, max: 26.0, step: 0.5 },
            samplings: vec![max_sampling(), min_sampling()],
            conventions: vec![DampingConvention::Half, DampingConvention::Full],
        }),
    );
    c.engine = Engine::Semiclassical;
    c.envelope = DriveEnvelope::pulse_train(0.0, 0.1, CHAOS_PERIOD);
    c
}

fn fig14() -> ExperimentConfig {
    let mut c = base(
        "fig14-minmax-n",
        "largest and smallest excitation over a pulse period against pulse strength",
        chaos_params(),
        Study::MinMaxExcitation(MinMaxStudy {
            omega: Range { min: 1.0, max: 26.0, step: 0.5 },
            t_end: 40.0,
            samples_per_period: 40,
        }),
    );
    c.envelope = DriveEnvelope::pulse_train(0.0, 0.1, CHAOS_PERIOD);
    c.dim = Some(40);
    tight_master(&mut c);
    c
}

pub static PRESETS: &[Preset] = &[
    Preset { name: "fig1-hysteresis", aliases: &[], caption: "Δ/γ = -15, χ/γ = 2", build: fig1 },
    Preset { name: "fig2-bistable", aliases: &[], caption: "Δ/γ = -8, χ/γ = 2, Ω/γ = 2.7", build: fig2 },
    Preset {
        name: "fig3-amplitude-sweep",
        aliases: &[],
        caption: "Δ/γ = -8, χ/γ = 2, Ω/γ = 2.1, 2.3, 2.5, 2.7, 2.9, 3.1",
        build: fig3,
    },
    Preset {
        name: "fig4-scaling",
        aliases: &[],
        caption: "Δ/γ = -8, χ/γ = 2, Ω/γ = 2.7, λ = 2, 3",
        build: fig4,
    },
    Preset {
        name: "fig5-interference",
        aliases: &[],
        caption: "Δ/γ = -8, χ/γ = 2, Ω/γ = 2.7, (a) T = 0.5/γ, τ = 2/γ, (b) T = 0.1/γ, τ = 2/γ",
        build: fig5,
    },
    Preset {
        name: "fig6-purity",
        aliases: &[],
        caption: "Δ/γ = -8, χ/γ = 2, Ω/γ = 2.7, (a) τ = 2.5/γ, (b) T = 0.5/γ",
        build: fig6,
    },
    Preset {
        name: "fig7-chaos-T0.25",
        aliases: &["fig7-chaos"],
        caption: "χ/γ = 0.7, Ω/γ = 20.4, Δ/γ = -15, T = 0.25/γ, τ = 2π/5γ, γt = 100",
        build: fig7,
    },
    Preset {
        name: "fig8-chaos-T0.205",
        aliases: &["fig8-chaos"],
        caption: "χ/γ = 0.7, Ω/γ = 20.4, Δ/γ = -15, T = 0.205/γ, τ = 2π/5γ, γt = 100",
        build: fig8,
    },
    Preset {
        name: "fig9-chaos-T0.15",
        aliases: &["fig9-chaos"],
        caption: "χ/γ = 0.7, Ω/γ = 20.4, Δ/γ = -15, T = 0.15/γ, τ = 2π/5γ, γt = 100",
        build: fig9,
    },
    Preset {
        name: "fig10-chaos-T0.1",
        aliases: &["fig10-chaos"],
        caption: "χ/γ = 0.7, Ω/γ = 20.4, Δ/γ = -15, T = 0.1/γ, τ = 2π/5γ, γt = 100",
        build: fig10,
    },
    Preset {
        name: "fig11-max-n",
        aliases: &[],
        caption: "χ/γ = 0.7, Ω/γ = 20.4, Δ/γ = -15, T = 0.1/γ, τ = 2π/5γ, γt = 100.6",
        build: fig11,
    },
    Preset {
        name: "fig12-min-n",
        aliases: &[],
        caption: "χ/γ = 0.7, Ω/γ = 20.4, Δ/γ = -15, T = 0.1/γ, τ = 2π/5γ, γt = 100.4",
        build: fig12,
    },
    Preset {
        name: "fig13-lyapunov-sweep",
        aliases: &[],
        caption: "χ/γ = 0.7, Δ/γ = -15, T = 0.1/γ, τ = 2π/5γ, 1 ≤ Ω/γ ≤ 26; \
                  sections at γt = 39.1 (Ω/γ ≤ 19), 39 (Ω/γ ≥ 19.5), 40.2 (Ω/γ ≤ 8.5), 40.1 (Ω/γ ≥ 9)",
        build: fig13,
    },
    Preset {
        name: "fig14-minmax-n",
        aliases: &[],
        caption: "χ/γ = 0.7, Δ/γ = -15, T = 0.1/γ, τ = 2π/5γ, 1 ≤ Ω/γ ≤ 26",
        build: fig14,
    },
];

pub fn find(name: &str) -> Result<&'static Preset> {
    PRESETS
        .iter()
        .find(|p| p.name == name || p.aliases.contains(&name))
        .ok_or_else(|| CliError::UnknownPreset {
            name: name.to_owned(),
            available: PRESETS.iter().map(|p| p.name).collect::<Vec<_>>().join(", "),
        })
}
