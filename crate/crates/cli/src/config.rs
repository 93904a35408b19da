//! Experiment configuration files.
//!
//! A config is a JSON document; unknown keys are rejected everywhere so a
//! typo fails loudly instead of silently falling back to a default.

use std::path::{Path, PathBuf};

use kerrosc_core::master::MasterConfig;
use kerrosc_core::semiclassical::default_solver;
use kerrosc_core::trajectories::DEFAULT_DT;
use kerrosc_core::{DampingConvention, DriveEnvelope, GridSpec, ModelParams, SolverConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Master,
    Qsd,
    Semiclassical,
    /// Every engine the study supports, plus a cross-check report.
    #[default]
    All,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Master => "master",
            Engine::Qsd => "qsd",
            Engine::Semiclassical => "semiclassical",
            Engine::All => "all",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Bundle name; also the output subdirectory.
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub params: ModelParams,
    #[serde(default)]
    pub envelope: DriveEnvelope,
    #[serde(default)]
    pub engine: Engine,
    pub study: Study,
    #[serde(default)]
    pub damping_convention: DampingConvention,
    /// Fock-space dimension. Required for pulsed drives; chosen
    /// automatically from the steady state otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default)]
    pub ensemble: EnsembleSettings,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSettings {
    /// Adaptive stepper for the master equation.
    #[serde(default = "master_solver")]
    pub master: SolverConfig,
    /// Adaptive stepper for the classical amplitude equation.
    #[serde(default = "default_solver")]
    pub semiclassical: SolverConfig,
}

fn master_solver() -> SolverConfig {
    MasterConfig::default().solver
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            master: master_solver(),
            semiclassical: default_solver(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSettings {
    /// Ensemble size when `seeds` is absent; seeds are then `0..trajectories`.
    #[serde(default = "default_trajectories")]
    pub trajectories: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
}

fn default_trajectories() -> usize {
    100
}

fn default_dt() -> f64 {
    DEFAULT_DT
}

impl Default for EnsembleSettings {
    fn default() -> Self {
        Self {
            trajectories: default_trajectories(),
            dt: default_dt(),
            seeds: None,
        }
    }
}

impl EnsembleSettings {
    pub fn seed_list(&self) -> Vec<u64> {
        match &self.seeds {
            Some(s) => s.clone(),
            None => (0..self.trajectories as u64).collect(),
        }
    }
}

/// What to compute. Each kind supports a subset of the engines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Study {
    Hysteresis(HysteresisStudy),
    Bistability(BistabilityStudy),
    AmplitudeSweep(AmplitudeSweepStudy),
    Scaling(ScalingStudy),
    Interference(InterferenceStudy),
    Purity(PurityStudy),
    Chaos(ChaosStudy),
    LyapunovSweep(LyapunovSweepStudy),
    MinMaxExcitation(MinMaxStudy),
}

/// Inclusive grid `min, min + step, …, max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl Range {
    pub fn values(&self) -> Vec<f64> {
        let n = ((self.max - self.min) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|k| self.min + k as f64 * self.step).collect()
    }

    fn validate(&self, name: &str) -> Result<()> {
        let ok = self.min.is_finite() && self.max >= self.min && self.step > 0.0 && self.step.is_finite();
        if !ok {
            return Err(CliError::Config(format!(
                "study.{name}: need finite min <= max and step > 0"
            )));
        }
        Ok(())
    }
}

/// Steady excitation against drive strength: closed form, master equation
/// and the classical up/down branches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HysteresisStudy {
    pub omega: Range,
}

/// Constant-drive bistability: steady Wigner function, classical roots and
/// section, a long switching trajectory and an ensemble from vacuum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BistabilityStudy {
    /// End of the vacuum-start transient (master and ensemble).
    pub t_end: f64,
    /// Length of the single switching trajectory.
    pub switching_time: f64,
    /// Sampling step of time series.
    pub series_step: f64,
    /// Stroboscopic period for the constant-drive section.
    pub poincare_period: f64,
    pub poincare_points: usize,
    /// Histogram bin for the switching-trajectory modes.
    pub mode_bin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmplitudeSweepStudy {
    pub omegas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingStudy {
    pub lambdas: Vec<f64>,
    /// Length of the classical orbit compared against its dilation.
    pub orbit_time: f64,
}

/// Pulsed drive with the pulse widths given here; the period and phase come
/// from `envelope`. Wigner snapshots are taken in the last period before
/// `t_end`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterferenceStudy {
    pub widths: Vec<f64>,
    pub t_end: f64,
    pub samples_per_period: usize,
    /// Also report the constant-drive steady state.
    #[serde(default)]
    pub constant_reference: bool,
}

/// Purity over the last period before `t_end`, scanned in width at fixed
/// period and in period at fixed width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PurityStudy {
    pub fixed_period: f64,
    pub widths: Vec<f64>,
    pub fixed_width: f64,
    pub periods: Vec<f64>,
    pub t_end: f64,
    pub samples_per_period: usize,
}

/// Pulsed chaotic regime: excitation time series, Wigner snapshot, section
/// through `snapshot_time` and the largest Lyapunov exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChaosStudy {
    pub snapshot_time: f64,
    pub series_step: f64,
    pub poincare_points: usize,
}

/// A piecewise choice of section time: `t0` applies to drives up to `upto`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingPiece {
    pub upto: f64,
    pub t0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sampling {
    pub label: String,
    pub pieces: Vec<SamplingPiece>,
}

impl Sampling {
    pub fn t0_for(&self, omega: f64) -> Option<f64> {
        self.pieces.iter().find(|p| omega <= p.upto + 1e-9).map(|p| p.t0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LyapunovSweepStudy {
    pub omega: Range,
    pub samplings: Vec<Sampling>,
    /// Damping conventions to sweep; defaults to the config's flag.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub conventions: Vec<DampingConvention>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinMaxStudy {
    pub omega: Range,
    /// Extremes are taken over the last period before this time.
    pub t_end: f64,
    pub samples_per_period: usize,
}

impl Study {
    pub fn kind(&self) -> &'static str {
        match self {
            Study::Hysteresis(_) => "hysteresis",
            Study::Bistability(_) => "bistability",
            Study::AmplitudeSweep(_) => "amplitude_sweep",
            Study::Scaling(_) => "scaling",
            Study::Interference(_) => "interference",
            Study::Purity(_) => "purity",
            Study::Chaos(_) => "chaos",
            Study::LyapunovSweep(_) => "lyapunov_sweep",
            Study::MinMaxExcitation(_) => "min_max_excitation",
        }
    }

    pub fn engines(&self) -> &'static [Engine] {
        use Engine::*;
        match self {
            Study::Hysteresis(_) => &[Master, Semiclassical],
            Study::Bistability(_) => &[Master, Qsd, Semiclassical],
            Study::AmplitudeSweep(_) => &[Master, Semiclassical],
            Study::Scaling(_) => &[Master, Semiclassical],
            Study::Interference(_) => &[Master, Qsd],
            Study::Purity(_) => &[Master],
            Study::Chaos(_) => &[Master, Qsd, Semiclassical],
            Study::LyapunovSweep(_) => &[Semiclassical],
            Study::MinMaxExcitation(_) => &[Master, Semiclassical],
        }
    }

    fn needs_pulses(&self) -> bool {
        matches!(
            self,
            Study::Interference(_) | Study::Chaos(_) | Study::LyapunovSweep(_) | Study::MinMaxExcitation(_)
        )
    }

    fn needs_constant(&self) -> bool {
        matches!(
            self,
            Study::Hysteresis(_) | Study::Bistability(_) | Study::AmplitudeSweep(_) | Study::Scaling(_)
        )
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("study.{name} = {v}: must be positive")))
    }
}

fn nonempty<T>(name: &str, v: &[T]) -> Result<()> {
    if v.is_empty() {
        Err(CliError::Config(format!("study.{name}: must not be empty")))
    } else {
        Ok(())
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path == "." {
                CliError::Config(inner.to_string())
            } else {
                CliError::Config(format!("field `{path}`: {inner}"))
            }
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    /// The engines this run will execute.
    pub fn engines(&self) -> Result<Vec<Engine>> {
        let supported = self.study.engines();
        match self.engine {
            Engine::All => Ok(supported.to_vec()),
            e if supported.contains(&e) => Ok(vec![e]),
            e => Err(CliError::Config(format!(
                "engine `{}` does not apply to a {} study (supported: {})",
                e.name(),
                self.study.kind(),
                supported.iter().map(|e| e.name()).collect::<Vec<_>>().join(", ")
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) || self.name.starts_with('.') {
            return Err(CliError::Config(format!("name `{}`: must be a plain file name", self.name)));
        }
        self.params.validate()?;
        self.envelope.validate()?;
        self.grid.validate()?;
        self.solver.master.validate()?;
        self.solver.semiclassical.validate()?;
        self.engines()?;
        if let Some(d) = self.dim {
            kerrosc_core::FockSpace::new(d)?;
        }
        if !(self.ensemble.dt > 0.0 && self.ensemble.dt.is_finite()) {
            return Err(CliError::Config("ensemble.dt: must be positive".into()));
        }
        if self.ensemble.seed_list().is_empty() {
            return Err(CliError::Config("ensemble: need at least one trajectory".into()));
        }
        if self.study.needs_pulses() && self.envelope.is_constant() {
            return Err(CliError::Config(format!(
                "a {} study needs a pulse_train envelope",
                self.study.kind()
            )));
        }
        if self.study.needs_constant() && !self.envelope.is_constant() {
            return Err(CliError::Config(format!(
                "a {} study needs a constant envelope",
                self.study.kind()
            )));
        }
        if !self.envelope.is_constant() && self.dim.is_none() && !matches!(self.study, Study::LyapunovSweep(_)) {
            return Err(CliError::Config("dim: required for a pulsed drive".into()));
        }
        match &self.study {
            Study::Hysteresis(s) => {
                s.omega.validate("omega")?;
                if s.omega.min < 0.0 {
                    return Err(CliError::Config("study.omega.min: must be non-negative".into()));
                }
            }
            Study::Bistability(s) => {
                positive("t_end", s.t_end)?;
                positive("switching_time", s.switching_time)?;
                positive("series_step", s.series_step)?;
                positive("poincare_period", s.poincare_period)?;
                positive("mode_bin", s.mode_bin)?;
            }
            Study::AmplitudeSweep(s) => {
                nonempty("omegas", &s.omegas)?;
                for &o in &s.omegas {
                    if !(o >= 0.0 && o.is_finite()) {
                        return Err(CliError::Config(format!("study.omegas: {o} is not a valid drive")));
                    }
                }
            }
            Study::Scaling(s) => {
                nonempty("lambdas", &s.lambdas)?;
                for &l in &s.lambdas {
                    positive("lambdas", l)?;
                }
                positive("orbit_time", s.orbit_time)?;
            }
            Study::Interference(s) => {
                nonempty("widths", &s.widths)?;
                for &w in &s.widths {
                    positive("widths", w)?;
                }
                positive("t_end", s.t_end)?;
                if s.samples_per_period == 0 {
                    return Err(CliError::Config("study.samples_per_period: must be positive".into()));
                }
            }
            Study::Purity(s) => {
                positive("fixed_period", s.fixed_period)?;
                positive("fixed_width", s.fixed_width)?;
                for &w in s.widths.iter().chain(&s.periods) {
                    positive("widths/periods", w)?;
                }
                positive("t_end", s.t_end)?;
                if s.samples_per_period == 0 {
                    return Err(CliError::Config("study.samples_per_period: must be positive".into()));
                }
            }
            Study::Chaos(s) => {
                positive("snapshot_time", s.snapshot_time)?;
                positive("series_step", s.series_step)?;
            }
            Study::LyapunovSweep(s) => {
                s.omega.validate("omega")?;
                nonempty("samplings", &s.samplings)?;
                for smp in &s.samplings {
                    if smp.t0_for(s.omega.max).is_none() {
                        return Err(CliError::Config(format!(
                            "study.samplings `{}`: pieces must cover the whole drive range",
                            smp.label
                        )));
                    }
                }
            }
            Study::MinMaxExcitation(s) => {
                s.omega.validate("omega")?;
                positive("t_end", s.t_end)?;
                if s.samples_per_period == 0 {
                    return Err(CliError::Config("study.samples_per_period: must be positive".into()));
                }
            }
        }
        Ok(())
    }
}

/// Command-line overrides applied on top of a preset or config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seeds: Option<Vec<u64>>,
    pub trajectories: Option<usize>,
    pub dt: Option<f64>,
    pub damping_convention: Option<DampingConvention>,
    pub engine: Option<Engine>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(n) = self.trajectories {
            cfg.ensemble.trajectories = n;
            cfg.ensemble.seeds = None;
        }
        if let Some(s) = &self.seeds {
            cfg.ensemble.seeds = Some(s.clone());
            cfg.ensemble.trajectories = s.len();
        }
        if let Some(dt) = self.dt {
            cfg.ensemble.dt = dt;
        }
        if let Some(c) = self.damping_convention {
            cfg.damping_convention = c;
            if let Study::LyapunovSweep(s) = &mut cfg.study {
                s.conventions = vec![c];
            }
        }
        if let Some(e) = self.engine {
            cfg.engine = e;
        }
    }
}

/// Parse a seed list such as `0..100` or `1,5,9` or `0..10,42`.
pub fn parse_seeds(text: &str) -> std::result::Result<Vec<u64>, String> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let a: u64 = a.trim().parse().map_err(|_| format!("bad seed range `{part}`"))?;
            let b: u64 = b.trim().parse().map_err(|_| format!("bad seed range `{part}`"))?;
            if b <= a {
                return Err(format!("empty seed range `{part}`"));
            }
            out.extend(a..b);
        } else {
            out.push(part.parse().map_err(|_| format!("bad seed `{part}`"))?);
        }
    }
    if out.is_empty() {
        return Err("no seeds given".into());
    }
    let mut sorted = out.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != out.len() {
        return Err("duplicate seeds".into());
    }
    Ok(out)
}
