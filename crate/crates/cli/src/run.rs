//! Executes an [`ExperimentConfig`] into a [`Bundle`].

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use kerrosc_core::master::{
    auto_dimension, evolve_density, exact_mean_excitation, mean_excitation, number_distribution, purity,
    steady_state, AutoDimensionConfig, MasterConfig, SteadyStateConfig,
};
use kerrosc_core::semiclassical::{
    bistability_test, chaos_onsets, classify_dynamics, hysteresis_sweep, integrate_amplitude,
    lyapunov_exponent, poincare_section, scale_params, steady_amplitudes, DynamicsClass, LyapunovConfig,
    PoincareSection, PoincareSpec, SweepDirection,
};
use kerrosc_core::trajectories::{ensemble_run, histogram_modes, run_trajectory, EnsembleResult, QsdSystem, TrajectoryConfig};
use kerrosc_core::wigner::{find_peaks, negativity_volume, wigner_grid_auto, Peak};
use kerrosc_core::{DampingConvention, DensityMatrix, DriveEnvelope, FockSpace, GridSpec, ModelParams, StateVector, WignerGrid, C64};
use serde::Serialize;

use crate::config::*;
use crate::error::{CliError, Result};
use crate::output::{Bundle, Cell, Csv};
use crate::plots;

/// Grid expansions allowed when a Wigner function spills off its grid.
const GRID_EXPANSIONS: usize = 3;
/// Prominence, relative to the tallest bin, of a switching-histogram mode.
const MODE_PROMINENCE: f64 = 0.1;
/// Wigner peaks and trajectory modes must lie this close to a classical root.
const ROOT_MATCH: f64 = 0.5;
/// Distinctness scale for section points.
const SECTION_TOL: f64 = 1e-4;

/// One pass/fail comparison between engines.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn below(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            passed: value <= tolerance,
        }
    }
}

/// Everything a run produces except the write-time metadata.
pub struct Outcome {
    pub bundle: Bundle,
    pub engines: Vec<Engine>,
    pub checks: Vec<Check>,
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    engines: Vec<Engine>,
    bundle: Bundle,
    checks: Vec<Check>,
}

impl Ctx<'_> {
    fn has(&self, e: Engine) -> bool {
        self.engines.contains(&e)
    }

    fn conv(&self) -> DampingConvention {
        self.cfg.damping_convention
    }

    fn master_cfg(&self) -> MasterConfig {
        MasterConfig {
            solver: self.cfg.solver.master,
            ..MasterConfig::default()
        }
    }

    fn traj_cfg(&self, snapshots: Vec<f64>) -> TrajectoryConfig {
        TrajectoryConfig {
            dt: self.cfg.ensemble.dt,
            snapshot_times: snapshots,
        }
    }

    /// Steady state at the configured dimension, or the automatic one.
    fn steady(&self, p: &ModelParams) -> Result<(usize, DensityMatrix)> {
        match self.cfg.dim {
            Some(d) => {
                let rho = steady_state(&FockSpace::new(d)?, p, &DriveEnvelope::Constant, &SteadyStateConfig::default())?;
                Ok((d, rho))
            }
            None => Ok(auto_dimension(p, &AutoDimensionConfig::default())?),
        }
    }

    fn dim(&self) -> usize {
        self.cfg.dim.expect("validated: pulsed runs carry a dimension")
    }

    fn wigner(&mut self, name: &str, rho: &DensityMatrix) -> Result<WignerGrid> {
        let g = wigner_grid_auto(rho, &self.cfg.grid, GRID_EXPANSIONS)?;
        let mut bytes = Vec::new();
        g.write_csv(&mut bytes).expect("in-memory write");
        self.bundle.add(name, bytes);
        self.bundle.json(name.replace(".csv", ".json"), &g.metadata());
        Ok(g)
    }

    fn ensemble(&self, psi0: &StateVector, grid: &[f64], sys: &QsdSystem, snapshots: Vec<f64>) -> Result<EnsembleResult> {
        let seeds = self.cfg.ensemble.seed_list();
        let ens = ensemble_run(psi0, grid, &seeds, sys, &self.traj_cfg(snapshots))?;
        if !ens.failures().is_empty() {
            let (seed, why) = ens.failures().iter().next().unwrap();
            return Err(CliError::Numerical(format!(
                "{} of {} trajectories failed (seed {seed}: {why})",
                ens.failures().len(),
                seeds.len()
            )));
        }
        Ok(ens)
    }
}

/// `start, start + step, …` up to and including `end`.
fn time_grid(start: f64, end: f64, step: f64) -> Vec<f64> {
    let n = ((end - start) / step + 1e-9).floor() as usize;
    let mut out: Vec<f64> = (0..=n).map(|k| start + k as f64 * step).collect();
    if (end - out[n]).abs() <= 1e-6 * step {
        out[n] = end;
    } else {
        out.push(end);
    }
    out
}

/// `samples + 1` times spanning the period that ends at `t_end`.
fn last_period(t_end: f64, period: f64, samples: usize) -> Vec<f64> {
    (0..=samples)
        .map(|k| t_end - period + period * k as f64 / samples as f64)
        .collect()
}

fn with_width(env: &DriveEnvelope, width: f64) -> DriveEnvelope {
    match env {
        DriveEnvelope::PulseTrain(p) => DriveEnvelope::PulseTrain(kerrosc_core::PulseTrain { width, ..*p }),
        DriveEnvelope::Constant => *env,
    }
}

fn with_period(env: &DriveEnvelope, period: f64) -> DriveEnvelope {
    match env {
        DriveEnvelope::PulseTrain(p) => DriveEnvelope::PulseTrain(kerrosc_core::PulseTrain { period, ..*p }),
        DriveEnvelope::Constant => *env,
    }
}

fn series_csv(times: &[f64], values: &[f64]) -> Csv {
    let mut csv = Csv::new(&["t", "n"]);
    for (t, n) in times.iter().zip(values) {
        csv.floats(&[*t, *n]);
    }
    csv
}

fn ensemble_csv(ens: &EnsembleResult) -> Result<(Csv, kerrosc_core::trajectories::EnsembleSummary)> {
    let s = ens.summary()?;
    let mut csv = Csv::new(&["t", "n_mean", "n_std_error"]);
    for k in 0..s.times.len() {
        csv.floats(&[s.times[k], s.mean_excitation[k], s.std_error[k]]);
    }
    Ok((csv, s))
}

fn section_csv(sec: &PoincareSection) -> Csv {
    let mut csv = Csv::new(&["k", "t", "re", "im"]);
    for (i, z) in sec.points.iter().enumerate() {
        let k = sec.transient_skip + i;
        csv.row(&[Cell::U(k as u64), Cell::F(sec.t0 + k as f64 * sec.tau), Cell::F(z.re), Cell::F(z.im)]);
    }
    csv
}

/// Largest distance from each target to its nearest candidate.
fn worst_match(targets: &[C64], candidates: &[C64]) -> f64 {
    targets
        .iter()
        .map(|t| candidates.iter().map(|c| (c - t).norm()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

fn peak_alphas(peaks: &[Peak]) -> Vec<C64> {
    peaks.iter().map(Peak::alpha).collect()
}

/// Run a config and collect its files. Deterministic for a fixed config.
pub fn execute(cfg: &ExperimentConfig) -> Result<Outcome> {
    cfg.validate()?;
    let mut ctx = Ctx {
        cfg,
        engines: cfg.engines()?,
        bundle: Bundle::default(),
        checks: Vec::new(),
    };
    match &cfg.study {
        Study::Hysteresis(s) => hysteresis(&mut ctx, s)?,
        Study::Bistability(s) => bistability(&mut ctx, s)?,
        Study::AmplitudeSweep(s) => amplitude_sweep(&mut ctx, s)?,
        Study::Scaling(s) => scaling(&mut ctx, s)?,
        Study::Interference(s) => interference(&mut ctx, s)?,
        Study::Purity(s) => purity_scan(&mut ctx, s)?,
        Study::Chaos(s) => chaos(&mut ctx, s)?,
        Study::LyapunovSweep(s) => lyapunov_scan(&mut ctx, s)?,
        Study::MinMaxExcitation(s) => min_max(&mut ctx, s)?,
    }
    let Ctx {
        mut bundle,
        engines,
        checks,
        ..
    } = ctx;
    bundle.text("config.json", cfg.to_json() + "\n");
    if cfg.engine == Engine::All && !checks.is_empty() {
        bundle.json("cross_check.json", &checks);
    }
    Ok(Outcome {
        bundle,
        engines,
        checks,
    })
}

#[derive(Serialize)]
struct HysteresisSummary {
    dim: Option<usize>,
    /// Drive window where the classical branches differ.
    classical_window: Option<[f64; 2]>,
    max_relative_error: Option<f64>,
}

fn hysteresis(ctx: &mut Ctx, s: &HysteresisStudy) -> Result<()> {
    let p = ctx.cfg.params;
    let omegas = s.omega.values();
    let mut header = vec!["omega"];
    let (mut exact, mut numeric) = (Vec::new(), Vec::new());
    let mut dim = None;
    if ctx.has(Engine::Master) {
        header.extend(["n_exact", "n_master"]);
        let top = p.with_omega(*omegas.last().unwrap());
        let d = match ctx.cfg.dim {
            Some(d) => d,
            None => auto_dimension(&top, &AutoDimensionConfig::default())?.0,
        };
        let space = FockSpace::new(d)?;
        for &om in &omegas {
            let q = p.with_omega(om);
            exact.push(exact_mean_excitation(&q)?);
            let rho = steady_state(&space, &q, &DriveEnvelope::Constant, &SteadyStateConfig::default())?;
            numeric.push(mean_excitation(&rho));
        }
        dim = Some(d);
    }
    let (mut up, mut down) = (Vec::new(), Vec::new());
    if ctx.has(Engine::Semiclassical) {
        header.extend(["n_up", "n_down", "bistable"]);
        up = hysteresis_sweep(&p, &omegas, SweepDirection::Up, ctx.conv())?;
        let rev: Vec<f64> = omegas.iter().rev().copied().collect();
        down = hysteresis_sweep(&p, &rev, SweepDirection::Down, ctx.conv())?;
        down.reverse();
    }
    let mut csv = Csv::new(&header);
    let mut window: Option<[f64; 2]> = None;
    for (k, &om) in omegas.iter().enumerate() {
        let mut row = vec![Cell::F(om)];
        if !exact.is_empty() {
            row.extend([Cell::F(exact[k]), Cell::F(numeric[k])]);
        }
        if !up.is_empty() {
            let bistable = bistability_test(&p.with_omega(om), ctx.conv()).bistable;
            row.extend([Cell::F(up[k].n), Cell::F(down[k].n), Cell::from(bistable)]);
            if (up[k].n - down[k].n).abs() > 1e-9 {
                window = Some(match window {
                    None => [om, om],
                    Some([lo, _]) => [lo, om],
                });
            }
        }
        csv.row(&row);
    }
    ctx.bundle.csv("hysteresis.csv", csv);
    let max_rel = (!exact.is_empty()).then(|| {
        exact
            .iter()
            .zip(&numeric)
            .map(|(e, n)| if *e > 0.0 { (n / e - 1.0).abs() } else { (n - e).abs() })
            .fold(0.0, f64::max)
    });
    if let Some(err) = max_rel {
        ctx.checks.push(Check::below("closed form vs master steady state (max relative error)", err, 1e-3));
    }
    ctx.bundle.json(
        "summary.json",
        &HysteresisSummary {
            dim,
            classical_window: window,
            max_relative_error: max_rel,
        },
    );
    Ok(())
}

#[derive(Serialize, Default)]
struct BistabilitySummary {
    #[serde(skip_serializing_if = "Option::is_none")]
    dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bistable: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    margins: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    section_scatter: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    steady_n: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    steady_n_exact: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    purity: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    wigner_peaks: Vec<Peak>,
    #[serde(skip_serializing_if = "Option::is_none")]
    master_n_at_t_end: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ensemble_n_at_t_end: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    switching_modes: Vec<f64>,
}

fn roots_csv(p: &ModelParams, conv: DampingConvention) -> (Csv, kerrosc_core::semiclassical::SteadyRoots) {
    let roots = steady_amplitudes(p, conv);
    let mut csv = Csv::new(&["n", "re", "im", "stable"]);
    for r in &roots.roots {
        csv.row(&[Cell::F(r.n), Cell::F(r.alpha.re), Cell::F(r.alpha.im), Cell::from(r.stable)]);
    }
    (csv, roots)
}

fn bistability(ctx: &mut Ctx, s: &BistabilityStudy) -> Result<()> {
    let p = ctx.cfg.params;
    let env = DriveEnvelope::Constant;
    let mut sum = BistabilitySummary::default();
    let series = time_grid(0.0, s.t_end, s.series_step);
    let (roots_csv, roots) = roots_csv(&p, ctx.conv());
    let stable: Vec<_> = roots.stable().copied().collect();

    if ctx.has(Engine::Semiclassical) {
        ctx.bundle.csv("roots.csv", roots_csv);
        let test = bistability_test(&p, ctx.conv());
        sum.bistable = Some(test.bistable);
        sum.margins = Some(test.margins);
        let spec = PoincareSpec {
            period: Some(s.poincare_period),
            ..PoincareSpec::new(0.0, s.poincare_points)
        };
        let sec = poincare_section(&p, &env, C64::new(0.0, 0.0), &spec, ctx.conv(), &ctx.cfg.solver.semiclassical)?;
        sum.section_scatter = Some(sec.scatter());
        ctx.bundle.csv("poincare.csv", section_csv(&sec));
    }

    let mut master_end = None;
    if ctx.has(Engine::Master) {
        let (dim, rho) = ctx.steady(&p)?;
        let g = ctx.wigner("wigner.csv", &rho)?;
        let peaks = find_peaks(&g);
        let mut dist = Csv::new(&["n", "p"]);
        for (n, pn) in number_distribution(&rho).as_slice().iter().enumerate() {
            dist.row(&[Cell::from(n), Cell::F(*pn)]);
        }
        ctx.bundle.csv("number_distribution.csv", dist);
        let space = FockSpace::new(dim)?;
        let states = evolve_density(&DensityMatrix::vacuum(dim), &series, &space, &p, &env, &ctx.master_cfg())?;
        let ns: Vec<f64> = states.iter().map(mean_excitation).collect();
        ctx.bundle.csv("excitation_master.csv", series_csv(&series, &ns));
        master_end = ns.last().copied();
        let exact = exact_mean_excitation(&p)?;
        let steady_n = mean_excitation(&rho);
        ctx.checks.push(Check::below(
            "closed form vs master steady state (relative error)",
            (steady_n / exact - 1.0).abs(),
            1e-3,
        ));
        if stable.len() >= 2 {
            let targets: Vec<C64> = stable.iter().map(|r| r.alpha).collect();
            ctx.checks.push(Check::below(
                "Wigner peaks vs stable classical roots (worst distance)",
                worst_match(&targets, &peak_alphas(&peaks)),
                ROOT_MATCH,
            ));
        }
        sum.dim = Some(dim);
        sum.steady_n = Some(steady_n);
        sum.steady_n_exact = Some(exact);
        sum.purity = Some(purity(&rho));
        sum.wigner_peaks = peaks;
        sum.master_n_at_t_end = master_end;
    }

    if ctx.has(Engine::Qsd) {
        let dim = match sum.dim {
            Some(d) => d,
            None => ctx.steady(&p)?.0,
        };
        let sys = QsdSystem::new(&FockSpace::new(dim)?, &p, &env)?;
        let psi0 = StateVector::vacuum(dim);
        let ens = ctx.ensemble(&psi0, &series, &sys, Vec::new())?;
        let (csv, es) = ensemble_csv(&ens)?;
        ctx.bundle.csv("excitation_qsd.csv", csv);
        let (mean, se) = (*es.mean_excitation.last().unwrap(), *es.std_error.last().unwrap());
        sum.ensemble_n_at_t_end = Some([mean, se]);
        if let Some(m) = master_end {
            ctx.checks.push(Check::below(
                "ensemble vs master mean excitation at t_end (standard errors)",
                (mean - m).abs() / se.max(f64::MIN_POSITIVE),
                3.0,
            ));
        }
        let long = time_grid(0.0, s.switching_time, s.series_step);
        let seed = ctx.cfg.ensemble.seed_list()[0];
        let rec = run_trajectory(&psi0, &long, seed, &sys, &ctx.traj_cfg(Vec::new()))?;
        ctx.bundle.csv("trajectory.csv", series_csv(&rec.times, &rec.excitation));
        let settled: Vec<f64> = rec
            .times
            .iter()
            .zip(&rec.excitation)
            .filter(|(t, _)| **t >= s.t_end)
            .map(|(_, n)| *n)
            .collect();
        sum.switching_modes = histogram_modes(&settled, s.mode_bin, MODE_PROMINENCE);
        if stable.len() >= 2 {
            let as_c = |v: &[f64]| v.iter().map(|&n| C64::new(n, 0.0)).collect::<Vec<_>>();
            let root_n: Vec<f64> = stable.iter().map(|r| r.n).collect();
            let dist = if sum.switching_modes.len() == root_n.len() {
                worst_match(&as_c(&root_n), &as_c(&sum.switching_modes))
            } else {
                f64::INFINITY
            };
            ctx.checks.push(Check::below(
                "switching-trajectory modes vs stable root excitations (worst distance)",
                dist,
                ROOT_MATCH,
            ));
        }
    }
    ctx.bundle.json("summary.json", &sum);
    Ok(())
}

#[derive(Serialize)]
struct SweepRow {
    omega: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_master: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wigner_peaks: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    classical_roots: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bistable: Option<bool>,
}

fn amplitude_sweep(ctx: &mut Ctx, s: &AmplitudeSweepStudy) -> Result<()> {
    let mut rows = Vec::new();
    for &om in &s.omegas {
        let p = ctx.cfg.params.with_omega(om);
        let mut row = SweepRow {
            omega: om,
            dim: None,
            n_master: None,
            wigner_peaks: None,
            classical_roots: None,
            bistable: None,
        };
        if ctx.has(Engine::Master) {
            let (dim, rho) = ctx.steady(&p)?;
            let g = ctx.wigner(&format!("wigner_omega{om}.csv"), &rho)?;
            row.dim = Some(dim);
            row.n_master = Some(mean_excitation(&rho));
            row.wigner_peaks = Some(find_peaks(&g).len());
        }
        if ctx.has(Engine::Semiclassical) {
            row.classical_roots = Some(steady_amplitudes(&p, ctx.conv()).len());
            row.bistable = Some(bistability_test(&p, ctx.conv()).bistable);
        }
        rows.push(row);
    }
    ctx.bundle.json("summary.json", &rows);
    Ok(())
}

#[derive(Serialize)]
struct ScalingRow {
    lambda: f64,
    params: ModelParams,
    #[serde(skip_serializing_if = "Option::is_none")]
    dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_master: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wigner_peaks: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    classical_roots: Option<usize>,
    /// Largest `|α_λ(t) − λα(t)|` along the orbit from the origin.
    #[serde(skip_serializing_if = "Option::is_none")]
    dilation_error: Option<f64>,
}

fn scaling(ctx: &mut Ctx, s: &ScalingStudy) -> Result<()> {
    let p = ctx.cfg.params;
    let env = DriveEnvelope::Constant;
    let times = time_grid(0.0, s.orbit_time, 0.1);
    let origin = C64::new(0.0, 0.0);
    let solver = ctx.cfg.solver.semiclassical;
    let base = ctx
        .has(Engine::Semiclassical)
        .then(|| integrate_amplitude(origin, &times, &p, &env, ctx.conv(), &solver))
        .transpose()?;
    let mut rows = Vec::new();
    for &lambda in &s.lambdas {
        let q = scale_params(&p, lambda)?;
        let mut row = ScalingRow {
            lambda,
            params: q,
            dim: None,
            n_master: None,
            wigner_peaks: None,
            classical_roots: None,
            dilation_error: None,
        };
        if ctx.has(Engine::Master) {
            // the scaled state holds about λ² times the quanta
            let (dim, rho) = match ctx.cfg.dim {
                Some(d) => {
                    let d = (d as f64 * lambda * lambda).ceil() as usize;
                    let rho = steady_state(&FockSpace::new(d)?, &q, &env, &SteadyStateConfig::default())?;
                    (d, rho)
                }
                None => auto_dimension(&q, &AutoDimensionConfig::default())?,
            };
            let g = ctx.wigner(&format!("wigner_lambda{lambda}.csv"), &rho)?;
            row.dim = Some(dim);
            row.n_master = Some(mean_excitation(&rho));
            row.wigner_peaks = Some(find_peaks(&g).len());
        }
        if let Some(base) = &base {
            row.classical_roots = Some(steady_amplitudes(&q, ctx.conv()).len());
            let orbit = integrate_amplitude(origin, &times, &q, &env, ctx.conv(), &solver)?;
            let err = base
                .iter()
                .zip(&orbit)
                .map(|(a, b)| (b.alpha - a.alpha * lambda).norm())
                .fold(0.0, f64::max);
            ctx.checks.push(Check::below(format!("classical dilation at lambda = {lambda}"), err, 1e-6));
            row.dilation_error = Some(err);
        }
        rows.push(row);
    }
    ctx.bundle.json("summary.json", &rows);
    Ok(())
}

/// Snapshot metrics over one period.
#[derive(Serialize, Clone)]
struct PeriodSample {
    t: f64,
    n: f64,
    purity: f64,
    min_w: f64,
    negativity: f64,
}

#[derive(Serialize)]
struct InterferenceCase {
    engine: &'static str,
    width: f64,
    period: f64,
    /// The most negative snapshot of the last period.
    snapshot: PeriodSample,
}

#[derive(Serialize)]
struct InterferenceSummary {
    cases: Vec<InterferenceCase>,
    #[serde(skip_serializing_if = "Option::is_none")]
    constant_drive_negativity: Option<f64>,
}

fn sample_period(
    ctx: &mut Ctx,
    file: &str,
    samples: &[(f64, DensityMatrix)],
    engine: &'static str,
    csv: &mut Csv,
    width: f64,
) -> Result<PeriodSample> {
    let mut best: Option<(PeriodSample, &DensityMatrix)> = None;
    for (t, rho) in samples {
        let g = wigner_grid_auto(rho, &ctx.cfg.grid, GRID_EXPANSIONS)?;
        let s = PeriodSample {
            t: *t,
            n: mean_excitation(rho),
            purity: purity(rho),
            min_w: g.min(),
            negativity: negativity_volume(&g),
        };
        csv.row(&[Cell::S(engine), Cell::F(width), Cell::F(s.t), Cell::F(s.n), Cell::F(s.purity), Cell::F(s.min_w), Cell::F(s.negativity)]);
        if best.as_ref().map_or(true, |(b, _)| s.min_w < b.min_w) {
            best = Some((s, rho));
        }
    }
    let (s, rho) = best.expect("at least one sample");
    ctx.wigner(file, rho)?;
    Ok(s)
}

fn interference(ctx: &mut Ctx, s: &InterferenceStudy) -> Result<()> {
    let p = ctx.cfg.params;
    let dim = ctx.dim();
    let space = FockSpace::new(dim)?;
    let period = ctx.cfg.envelope.period().expect("pulsed");
    let window = last_period(s.t_end, period, s.samples_per_period);
    let mut times = vec![0.0];
    times.extend(&window);
    let mut csv = Csv::new(&["engine", "width", "t", "n", "purity", "min_w", "negativity"]);
    let mut cases = Vec::new();
    for &width in &s.widths {
        let env = with_width(&ctx.cfg.envelope, width);
        let mut master_end = None;
        if ctx.has(Engine::Master) {
            let states = evolve_density(&DensityMatrix::vacuum(dim), &times, &space, &p, &env, &ctx.master_cfg())?;
            let samples: Vec<(f64, DensityMatrix)> = window.iter().copied().zip(states.into_iter().skip(1)).collect();
            master_end = samples.last().map(|(_, r)| r.clone());
            let snap = sample_period(ctx, &format!("wigner_T{width}.csv"), &samples, "master", &mut csv, width)?;
            cases.push(InterferenceCase { engine: "master", width, period, snapshot: snap });
        }
        if ctx.has(Engine::Qsd) {
            let sys = QsdSystem::new(&space, &p, &env)?;
            let ens = ctx.ensemble(&StateVector::vacuum(dim), &times, &sys, window.clone())?;
            let samples = ens.density_matrices()?;
            let snap = sample_period(ctx, &format!("wigner_qsd_T{width}.csv"), &samples, "qsd", &mut csv, width)?;
            cases.push(InterferenceCase { engine: "qsd", width, period, snapshot: snap });
            if let Some(m) = master_end {
                let t_last = samples.last().unwrap().0;
                let es = ens.summary()?;
                let (mean, se) = (*es.mean_excitation.last().unwrap(), *es.std_error.last().unwrap());
                ctx.checks.push(Check::below(
                    format!("T = {width}: ensemble vs master excitation at t = {t_last} (standard errors)"),
                    (mean - mean_excitation(&m)).abs() / se.max(f64::MIN_POSITIVE),
                    3.0,
                ));
            }
        }
    }
    ctx.bundle.csv("interference.csv", csv);
    let mut constant = None;
    if s.constant_reference && ctx.has(Engine::Master) {
        let rho = steady_state(&space, &p, &DriveEnvelope::Constant, &SteadyStateConfig::default())?;
        let g = ctx.wigner("wigner_constant.csv", &rho)?;
        constant = Some(negativity_volume(&g));
    }
    ctx.bundle.json(
        "summary.json",
        &InterferenceSummary {
            cases,
            constant_drive_negativity: constant,
        },
    );
    Ok(())
}

#[derive(Serialize, Clone, Copy)]
pub struct PurityPoint {
    pub width: f64,
    pub period: f64,
    /// Mean purity over the last period before `t_end`.
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

/// Purity statistics over the last period before `t_end`, from vacuum.
pub fn period_purity(
    p: &ModelParams,
    env: &DriveEnvelope,
    dim: usize,
    t_end: f64,
    samples: usize,
    cfg: &MasterConfig,
) -> kerrosc_core::Result<PurityPoint> {
    let period = env.period().unwrap_or(1.0);
    let mut times = vec![0.0];
    times.extend(last_period(t_end, period, samples));
    let space = FockSpace::new(dim)?;
    let states = evolve_density(&DensityMatrix::vacuum(dim), &times, &space, p, env, cfg)?;
    let pur: Vec<f64> = states[1..].iter().map(purity).collect();
    let width = match env {
        DriveEnvelope::PulseTrain(pt) => pt.width,
        DriveEnvelope::Constant => f64::INFINITY,
    };
    Ok(PurityPoint {
        width,
        period,
        mean: pur.iter().sum::<f64>() / pur.len() as f64,
        min: pur.iter().copied().fold(f64::INFINITY, f64::min),
        max: pur.iter().copied().fold(0.0, f64::max),
    })
}

#[derive(Serialize)]
struct PuritySummary {
    width_scan: Vec<PurityPoint>,
    period_scan: Vec<PurityPoint>,
}

fn purity_scan(ctx: &mut Ctx, s: &PurityStudy) -> Result<()> {
    let p = ctx.cfg.params;
    let dim = ctx.dim();
    let mcfg = ctx.master_cfg();
    let base = with_period(&with_width(&ctx.cfg.envelope, s.fixed_width), s.fixed_period);
    let mut csv = Csv::new(&["scan", "width", "period", "purity_mean", "purity_min", "purity_max"]);
    let mut scan = |label: &str, envs: Vec<DriveEnvelope>| -> Result<Vec<PurityPoint>> {
        envs.iter()
            .map(|env| {
                let pt = period_purity(&p, env, dim, s.t_end, s.samples_per_period, &mcfg)?;
                csv.row(&[Cell::S(label), Cell::F(pt.width), Cell::F(pt.period), Cell::F(pt.mean), Cell::F(pt.min), Cell::F(pt.max)]);
                Ok(pt)
            })
            .collect()
    };
    let width_scan = scan(
        "width",
        s.widths.iter().map(|&w| with_period(&with_width(&base, w), s.fixed_period)).collect(),
    )?;
    let period_scan = scan(
        "period",
        s.periods.iter().map(|&tau| with_period(&with_width(&base, s.fixed_width), tau)).collect(),
    )?;
    ctx.bundle.csv("purity.csv", csv);
    ctx.bundle.json("summary.json", &PuritySummary { width_scan, period_scan });
    Ok(())
}

#[derive(Serialize, Default)]
struct ChaosSummary {
    snapshot_time: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    master: Option<Excursion>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ensemble: Option<EnsembleExcursion>,
    #[serde(skip_serializing_if = "Option::is_none")]
    section_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    section_distinct: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lyapunov: Option<kerrosc_core::semiclassical::LyapunovEstimate>,
}

/// Excitation at the snapshot and its range over the preceding period.
#[derive(Serialize, Clone, Copy)]
struct Excursion {
    n: f64,
    n_min: f64,
    n_max: f64,
    negativity: f64,
    min_w: f64,
}

#[derive(Serialize)]
struct EnsembleExcursion {
    n: f64,
    std_error: f64,
    n_min: f64,
    n_max: f64,
    negativity: f64,
    min_w: f64,
    trajectories: usize,
}

fn range_over(times: &[f64], values: &[f64], from: f64, to: f64) -> (f64, f64) {
    times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= from - 1e-9 && **t <= to + 1e-9)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, v)| (lo.min(*v), hi.max(*v)))
}

fn chaos(ctx: &mut Ctx, s: &ChaosStudy) -> Result<()> {
    let p = ctx.cfg.params;
    let env = ctx.cfg.envelope;
    let period = env.period().expect("pulsed");
    let dim = ctx.dim();
    let space = FockSpace::new(dim)?;
    let series = time_grid(0.0, s.snapshot_time, s.series_step);
    let mut sum = ChaosSummary {
        snapshot_time: s.snapshot_time,
        ..Default::default()
    };
    let window = (s.snapshot_time - period, s.snapshot_time);

    if ctx.has(Engine::Master) {
        let mut ns = Vec::with_capacity(series.len());
        let mut last = None;
        kerrosc_core::master::evolve_density_with(
            &DensityMatrix::vacuum(dim),
            &series,
            &space,
            &p,
            &env,
            &ctx.master_cfg(),
            |_, rho| {
                ns.push(mean_excitation(rho));
                last = Some(rho.clone());
            },
        )?;
        let rho = last.expect("non-empty series");
        ctx.bundle.csv("excitation_master.csv", series_csv(&series, &ns));
        let g = ctx.wigner("wigner_master.csv", &rho)?;
        let (lo, hi) = range_over(&series, &ns, window.0, window.1);
        sum.master = Some(Excursion {
            n: *ns.last().unwrap(),
            n_min: lo,
            n_max: hi,
            negativity: negativity_volume(&g),
            min_w: g.min(),
        });
    }

    if ctx.has(Engine::Qsd) {
        let sys = QsdSystem::new(&space, &p, &env)?;
        let ens = ctx.ensemble(&StateVector::vacuum(dim), &series, &sys, vec![s.snapshot_time])?;
        let (csv, es) = ensemble_csv(&ens)?;
        ctx.bundle.csv("excitation_qsd.csv", csv);
        let rho = ens.density_at(s.snapshot_time)?;
        let g = ctx.wigner("wigner_qsd.csv", &rho)?;
        let (lo, hi) = range_over(&es.times, &es.mean_excitation, window.0, window.1);
        let (n, se) = (*es.mean_excitation.last().unwrap(), *es.std_error.last().unwrap());
        if let Some(m) = &sum.master {
            ctx.checks.push(Check::below(
                "ensemble vs master excitation at the snapshot (standard errors)",
                (n - m.n).abs() / se.max(f64::MIN_POSITIVE),
                3.0,
            ));
        }
        sum.ensemble = Some(EnsembleExcursion {
            n,
            std_error: se,
            n_min: lo,
            n_max: hi,
            negativity: negativity_volume(&g),
            min_w: g.min(),
            trajectories: es.trajectories,
        });
    }

    if ctx.has(Engine::Semiclassical) {
        let solver = ctx.cfg.solver.semiclassical;
        let orbit = integrate_amplitude(C64::new(0.0, 0.0), &series, &p, &env, ctx.conv(), &solver)?;
        let mut csv = Csv::new(&["t", "re", "im", "n"]);
        for a in &orbit {
            csv.floats(&[a.t, a.alpha.re, a.alpha.im, a.alpha.norm_sqr()]);
        }
        ctx.bundle.csv("excitation_semiclassical.csv", csv);
        let sec = poincare_section(
            &p,
            &env,
            C64::new(0.0, 0.0),
            &PoincareSpec::new(s.snapshot_time, s.poincare_points),
            ctx.conv(),
            &solver,
        )?;
        ctx.bundle.csv("poincare.csv", section_csv(&sec));
        sum.section_points = Some(sec.points.len());
        sum.section_distinct = Some(sec.distinct_points(SECTION_TOL));
        let lcfg = LyapunovConfig {
            damping: ctx.conv(),
            solver,
            ..LyapunovConfig::default()
        };
        sum.lyapunov = Some(lyapunov_exponent(&p, &env, &lcfg)?);
    }
    ctx.bundle.json("summary.json", &sum);
    Ok(())
}

/// Onsets and negative windows of one Lyapunov curve.
#[derive(Serialize, Clone)]
pub struct CurveSummary {
    pub convention: DampingConvention,
    pub sampling: String,
    /// Regular-to-chaotic crossings.
    pub onsets: Vec<f64>,
    /// Drive intervals after the first onset where `L < −tol`.
    pub regular_windows: Vec<[f64; 2]>,
}

/// Maximal runs of consecutive drives with `L < −tol`, after `after`.
pub fn regular_windows(omegas: &[f64], exponents: &[f64], tol: f64, after: f64) -> Vec<[f64; 2]> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for i in 0..=omegas.len() {
        let regular = i < omegas.len() && omegas[i] > after && exponents[i] < -tol;
        match (regular, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push([omegas[s], omegas[i - 1]]);
                start = None;
            }
            _ => {}
        }
    }
    out
}

fn lyapunov_scan(ctx: &mut Ctx, s: &LyapunovSweepStudy) -> Result<()> {
    let omegas = s.omega.values();
    let conventions = if s.conventions.is_empty() {
        vec![ctx.conv()]
    } else {
        s.conventions.clone()
    };
    let mut csv = Csv::new(&["convention", "sampling", "omega", "t0", "exponent", "half_window", "converged"]);
    let mut curves = Vec::new();
    for &conv in &conventions {
        for smp in &s.samplings {
            let mut exps = Vec::with_capacity(omegas.len());
            for &om in &omegas {
                let t0 = smp.t0_for(om).expect("validated");
                let lcfg = LyapunovConfig {
                    t0,
                    damping: conv,
                    solver: ctx.cfg.solver.semiclassical,
                    ..LyapunovConfig::default()
                };
                let est = lyapunov_exponent(&ctx.cfg.params.with_omega(om), &ctx.cfg.envelope, &lcfg)?;
                csv.row(&[
                    Cell::S(conv.name()),
                    Cell::S(&smp.label),
                    Cell::F(om),
                    Cell::F(t0),
                    Cell::F(est.exponent),
                    Cell::F(est.half_window),
                    Cell::from(est.converged),
                ]);
                exps.push(est.exponent);
            }
            let tol = LyapunovConfig::default().tolerance;
            let onsets = chaos_onsets(&omegas, &exps, tol);
            let after = onsets.first().copied().unwrap_or(f64::INFINITY);
            curves.push(CurveSummary {
                convention: conv,
                sampling: smp.label.clone(),
                regular_windows: regular_windows(&omegas, &exps, tol, after),
                onsets,
            });
        }
    }
    ctx.bundle.csv("lyapunov.csv", csv);
    ctx.bundle.json("summary.json", &curves);
    Ok(())
}

fn min_max(ctx: &mut Ctx, s: &MinMaxStudy) -> Result<()> {
    let env = ctx.cfg.envelope;
    let period = env.period().expect("pulsed");
    let window = last_period(s.t_end, period, s.samples_per_period);
    let mut times = vec![0.0];
    times.extend(&window);
    let mut header = vec!["omega"];
    if ctx.has(Engine::Master) {
        header.extend(["n_max_master", "n_min_master"]);
    }
    if ctx.has(Engine::Semiclassical) {
        header.extend(["n_max_classical", "n_min_classical", "regime"]);
    }
    let mut csv = Csv::new(&header);
    for om in s.omega.values() {
        let p = ctx.cfg.params.with_omega(om);
        let mut row = vec![Cell::F(om)];
        if ctx.has(Engine::Master) {
            let dim = ctx.dim();
            let states = evolve_density(&DensityMatrix::vacuum(dim), &times, &FockSpace::new(dim)?, &p, &env, &ctx.master_cfg())?;
            let ns: Vec<f64> = states[1..].iter().map(mean_excitation).collect();
            row.push(Cell::F(ns.iter().copied().fold(f64::NEG_INFINITY, f64::max)));
            row.push(Cell::F(ns.iter().copied().fold(f64::INFINITY, f64::min)));
        }
        if ctx.has(Engine::Semiclassical) {
            let solver = ctx.cfg.solver.semiclassical;
            let orbit = integrate_amplitude(C64::new(0.0, 0.0), &times, &p, &env, ctx.conv(), &solver)?;
            let ns: Vec<f64> = orbit[1..].iter().map(|a| a.alpha.norm_sqr()).collect();
            row.push(Cell::F(ns.iter().copied().fold(f64::NEG_INFINITY, f64::max)));
            row.push(Cell::F(ns.iter().copied().fold(f64::INFINITY, f64::min)));
            let lcfg = LyapunovConfig {
                damping: ctx.conv(),
                solver,
                ..LyapunovConfig::default()
            };
            let regime = match classify_dynamics(&p, &env, &lcfg)?.class {
                DynamicsClass::Regular => "regular",
                DynamicsClass::Marginal => "marginal",
                DynamicsClass::Chaotic => "chaotic",
                DynamicsClass::TransientChaos => "transient_chaos",
            };
            row.push(Cell::S(regime));
        }
        csv.row(&row);
    }
    ctx.bundle.csv("minmax.csv", csv);
    Ok(())
}

/// Provenance written next to the data files.
#[derive(Serialize)]
pub struct Metadata<'a> {
    pub name: &'a str,
    pub code_version: String,
    pub created_unix: u64,
    pub runtime_seconds: f64,
    pub study: &'static str,
    pub engines: Vec<&'static str>,
    pub damping_convention: DampingConvention,
    pub params: ModelParams,
    pub envelope: DriveEnvelope,
    pub dim: Option<usize>,
    pub solver: SolverSettings,
    pub dt: f64,
    pub seeds: Vec<u64>,
    pub grid: GridSpec,
    pub files: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub cross_check: Vec<Check>,
}

pub struct RunReport {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub checks: Vec<Check>,
}

/// Run `cfg` and write its bundle to `root/<name>`, metadata last.
pub fn run_to_dir(cfg: &ExperimentConfig, root: &Path, with_plots: bool) -> Result<RunReport> {
    let started = Instant::now();
    let Outcome {
        mut bundle,
        engines,
        checks,
    } = execute(cfg)?;
    if with_plots {
        bundle.text("plot.py", plots::script(&cfg.study, &bundle));
    }
    let dir = root.join(&cfg.name);
    let mut files = bundle.write_to(&dir)?;
    let meta = Metadata {
        name: &cfg.name,
        code_version: format!("kerrosc {}", env!("CARGO_PKG_VERSION")),
        created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        runtime_seconds: started.elapsed().as_secs_f64(),
        study: cfg.study.kind(),
        engines: engines.iter().map(|e| e.name()).collect(),
        damping_convention: cfg.damping_convention,
        params: cfg.params,
        envelope: cfg.envelope,
        dim: cfg.dim,
        solver: cfg.solver,
        dt: cfg.ensemble.dt,
        seeds: cfg.ensemble.seed_list(),
        grid: cfg.grid,
        files: bundle.names().map(str::to_owned).collect(),
        cross_check: checks.clone(),
    };
    let path = dir.join("metadata.json");
    let mut bytes = serde_json::to_vec_pretty(&meta).expect("serialisable");
    bytes.push(b'\n');
    crate::output::write_atomic(&path, &bytes)?;
    files.push(path);
    Ok(RunReport { dir, files, checks })
}
