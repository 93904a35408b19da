//! Quantum state diffusion: pure-state trajectories whose ensemble average
//! reproduces the master equation.
//!
//! Each step advances the norm-decreasing linear part
//! `G = −iH(t) − ½ Σ L†L` with classical RK4 and adds the state-dependent
//! drift and noise terms of the diffusion equation to first order, using
//! expectation values taken at the start of the step:
//!
//! ```text
//! Σⱼ [(⟨Lⱼ⟩* Lⱼ − ½|⟨Lⱼ⟩|²) ψ dt + (Lⱼ − ⟨Lⱼ⟩) ψ dξⱼ]
//! ```
//!
//! followed by renormalisation. Noise comes from ChaCha20 seeded with the
//! trajectory seed; each complex increment is built from two standard normal
//! draws (real part first) scaled by `√(dt/2)`, channel by channel.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::master::DensityMatrix;
use crate::model::{bare_energies, DriveEnvelope, FockSpace, ModelParams, C64};

/// Norm deviation tolerated in a [`StateVector`].
pub const NORM_TOL: f64 = 1e-10;
/// Steps whose pre-normalisation norm falls below this fail.
const NORM_FLOOR: f64 = 1e-12;

const ZERO: C64 = C64::new(0.0, 0.0);

/// A normalised state vector in the truncated Fock basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector(Vec<C64>);

impl StateVector {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() < 2 {
            return Err(Error::InvalidDimension(amplitudes.len()));
        }
        let psi = Self(amplitudes);
        let norm = psi.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("state norm {norm} differs from 1")));
        }
        Ok(psi)
    }

    /// Normalise arbitrary non-zero amplitudes.
    pub fn normalized(mut amplitudes: Vec<C64>) -> Result<Self> {
        let norm = norm(&amplitudes);
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidState("cannot normalise a zero vector".into()));
        }
        amplitudes.iter_mut().for_each(|v| *v /= norm);
        Self::new(amplitudes)
    }

    pub fn vacuum(dim: usize) -> Self {
        Self::fock(dim, 0)
    }

    pub fn fock(dim: usize, n: usize) -> Self {
        assert!(n < dim, "Fock level {n} outside dimension {dim}");
        let mut v = vec![ZERO; dim];
        v[n] = C64::new(1.0, 0.0);
        Self(v)
    }

    /// Coherent state `|α⟩`, truncated and renormalised.
    pub fn coherent(dim: usize, alpha: C64) -> Result<Self> {
        let mut amp = Vec::with_capacity(dim);
        let mut c = C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
        for n in 0..dim {
            amp.push(c);
            c *= alpha / ((n + 1) as f64).sqrt();
        }
        Self::normalized(amp)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn mean_excitation(&self) -> f64 {
        mean_excitation(&self.0)
    }

    pub fn projector(&self) -> DensityMatrix {
        DensityMatrix::pure(&self.0)
    }
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

fn mean_excitation(v: &[C64]) -> f64 {
    v.iter().enumerate().map(|(n, c)| n as f64 * c.norm_sqr()).sum()
}

/// The model compiled for stepping: cached Fock-space coefficients and
/// jump-channel rates.
#[derive(Debug, Clone)]
pub struct QsdSystem {
    dim: usize,
    sqrt_n: Vec<f64>,
    /// Diagonal of `−i(Δn + χn²) − ½ Σ L†L`.
    diag: Vec<C64>,
    /// `√((N+1)γ)`
    decay_amp: f64,
    /// `√(Nγ)`, zero when there is no thermal channel.
    pump_amp: f64,
    omega: f64,
    env: DriveEnvelope,
}

impl QsdSystem {
    pub fn new(space: &FockSpace, p: &ModelParams, env: &DriveEnvelope) -> Result<Self> {
        p.validate()?;
        env.validate()?;
        let dim = space.dim();
        let k1 = (p.n_bath + 1.0) * p.gamma;
        let k2 = p.n_bath * p.gamma;
        let energies = bare_energies(dim, p);
        let diag = (0..dim)
            .map(|n| {
                let aad = if n + 1 < dim { (n + 1) as f64 } else { 0.0 };
                C64::new(-0.5 * (k1 * n as f64 + k2 * aad), -energies[n])
            })
            .collect();
        Ok(Self {
            dim,
            sqrt_n: space.sqrt_n().to_vec(),
            diag,
            decay_amp: k1.sqrt(),
            pump_amp: k2.sqrt(),
            omega: p.omega_drive,
            env: *env,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of independent noise channels.
    pub fn channels(&self) -> usize {
        if self.pump_amp > 0.0 {
            2
        } else {
            1
        }
    }

    /// `out = G ψ` for drive strength `g = f(t)Ω`.
    fn generator(&self, g: f64, psi: &[C64], out: &mut [C64]) {
        let d = self.dim;
        let s = &self.sqrt_n;
        let mig = C64::new(0.0, -g);
        for n in 0..d {
            let mut hop = ZERO;
            if n + 1 < d {
                hop += psi[n + 1] * s[n + 1];
            }
            if n > 0 {
                hop += psi[n - 1] * s[n];
            }
            out[n] = self.diag[n] * psi[n] + mig * hop;
        }
    }

    /// One step in place. `noise` holds one complex Wiener increment per
    /// channel; `ws` is scratch space reused between steps.
    pub fn step(
        &self,
        psi: &mut [C64],
        t: f64,
        dt: f64,
        noise: &[C64],
        ws: &mut Workspace,
    ) -> Result<()> {
        let d = self.dim;
        if psi.len() != d || noise.len() != self.channels() {
            return Err(Error::InvalidState("state or noise has the wrong length".into()));
        }
        if !(dt > 0.0) {
            return Err(Error::param("dt", "must be positive"));
        }
        ws.resize(d);
        let s = &self.sqrt_n;

        // jump terms from the pre-step state
        let mut a_mean = ZERO;
        for n in 0..d - 1 {
            a_mean += psi[n].conj() * psi[n + 1] * s[n + 1];
        }
        let mut channels = [(ZERO, ZERO); 2];
        channels[0] = (a_mean * self.decay_amp, noise[0]);
        if self.channels() == 2 {
            channels[1] = (a_mean.conj() * self.pump_amp, noise[1]);
        }
        ws.jump.fill(ZERO);
        let mut self_coef = ZERO;
        for (ch, &(ell, dxi)) in channels[..self.channels()].iter().enumerate() {
            let coef = ell.conj() * dt + dxi;
            if ch == 0 {
                for n in 0..d - 1 {
                    ws.jump[n] += psi[n + 1] * (s[n + 1] * self.decay_amp) * coef;
                }
            } else {
                for n in 1..d {
                    ws.jump[n] += psi[n - 1] * (s[n] * self.pump_amp) * coef;
                }
            }
            self_coef += ell.norm_sqr() * 0.5 * dt + ell * dxi;
        }

        // RK4 on the linear part
        let g0 = self.env.value(t) * self.omega;
        let gm = self.env.value(t + 0.5 * dt) * self.omega;
        let g1 = self.env.value(t + dt) * self.omega;
        let Workspace { k1, k2, k3, k4, tmp, jump } = ws;
        self.generator(g0, psi, k1);
        for n in 0..d {
            tmp[n] = psi[n] + k1[n] * (0.5 * dt);
        }
        self.generator(gm, tmp, k2);
        for n in 0..d {
            tmp[n] = psi[n] + k2[n] * (0.5 * dt);
        }
        self.generator(gm, tmp, k3);
        for n in 0..d {
            tmp[n] = psi[n] + k3[n] * dt;
        }
        self.generator(g1, tmp, k4);
        for n in 0..d {
            let lin = (k1[n] + (k2[n] + k3[n]) * 2.0 + k4[n]) * (dt / 6.0);
            psi[n] = psi[n] + lin + jump[n] - psi[n] * self_coef;
        }

        let nrm = norm(psi);
        if !(nrm >= NORM_FLOOR) || !nrm.is_finite() {
            return Err(Error::StepFailure {
                t,
                reason: format!("state norm {nrm:e} before renormalisation"),
            });
        }
        psi.iter_mut().for_each(|v| *v /= nrm);
        Ok(())
    }
}

/// Scratch buffers for [`QsdSystem::step`].
#[derive(Debug, Clone, Default)]
pub struct Workspace {
    k1: Vec<C64>,
    k2: Vec<C64>,
    k3: Vec<C64>,
    k4: Vec<C64>,
    tmp: Vec<C64>,
    jump: Vec<C64>,
}

impl Workspace {
    fn resize(&mut self, d: usize) {
        for v in [
            &mut self.k1,
            &mut self.k2,
            &mut self.k3,
            &mut self.k4,
            &mut self.tmp,
            &mut self.jump,
        ] {
            v.resize(d, ZERO);
        }
    }
}

/// A single diffusion step from `psi` with externally supplied noise.
pub fn qsd_step(
    psi: &StateVector,
    t: f64,
    dt: f64,
    noise: &[C64],
    space: &FockSpace,
    p: &ModelParams,
    env: &DriveEnvelope,
) -> Result<StateVector> {
    let sys = QsdSystem::new(space, p, env)?;
    let mut out = psi.0.clone();
    sys.step(&mut out, t, dt, noise, &mut Workspace::default())?;
    Ok(StateVector(out))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryConfig {
    /// Upper bound on the step; each output interval is divided into equal
    /// steps no longer than this.
    pub dt: f64,
    /// Output times at which the full state is kept. Each must be one of
    /// the output grid times.
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
}

pub const DEFAULT_DT: f64 = 2e-4;

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self {
            dt: DEFAULT_DT,
            snapshot_times: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRecord {
    pub seed: u64,
    pub times: Vec<f64>,
    /// `⟨a†a⟩` at each time.
    pub excitation: Vec<f64>,
    /// States at the requested snapshot times, in time order.
    pub snapshots: Vec<(f64, StateVector)>,
}

impl TrajectoryRecord {
    pub fn snapshot(&self, t: f64) -> Option<&StateVector> {
        self.snapshots.iter().find(|(ts, _)| *ts == t).map(|(_, s)| s)
    }
}

/// Noise source drawing fine increments of variance `h_fine` and summing
/// `coarsen` of them per step, so runs at `dt` and `dt/2` can share one
/// Brownian path.
struct NoiseStream {
    rng: ChaCha20Rng,
    channels: usize,
    coarsen: usize,
}

impl NoiseStream {
    fn new(seed: u64, channels: usize, coarsen: usize) -> Self {
        Self {
            rng: ChaCha20Rng::seed_from_u64(seed),
            channels,
            coarsen,
        }
    }

    fn fill(&mut self, h: f64, out: &mut [C64]) {
        let scale = (0.5 * h / self.coarsen as f64).sqrt();
        out.fill(ZERO);
        for _ in 0..self.coarsen {
            for v in out.iter_mut().take(self.channels) {
                let re: f64 = StandardNormal.sample(&mut self.rng);
                let im: f64 = StandardNormal.sample(&mut self.rng);
                *v += C64::new(re, im) * scale;
            }
        }
    }
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::param("t_grid", "must not be empty"));
    }
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::param("t_grid", "must be strictly increasing"));
    }
    Ok(())
}

fn simulate(
    psi0: &StateVector,
    t_grid: &[f64],
    seed: u64,
    sys: &QsdSystem,
    cfg: &TrajectoryConfig,
    refine: usize,
    coarsen: usize,
) -> Result<TrajectoryRecord> {
    check_grid(t_grid)?;
    if !(cfg.dt > 0.0) {
        return Err(Error::param("dt", "must be positive"));
    }
    if psi0.dim() != sys.dim {
        return Err(Error::InvalidState("state and system dimensions differ".into()));
    }
    let mut wanted: Vec<f64> = cfg.snapshot_times.clone();
    wanted.sort_by(f64::total_cmp);
    for t in &wanted {
        if !t_grid.contains(t) {
            return Err(Error::param("snapshot_times", format!("{t} is not an output time")));
        }
    }
    let mut wanted = wanted.into_iter().peekable();

    let mut psi = psi0.0.clone();
    let mut ws = Workspace::default();
    let mut noise = vec![ZERO; sys.channels()];
    let mut stream = NoiseStream::new(seed, sys.channels(), coarsen);
    let mut excitation = Vec::with_capacity(t_grid.len());
    let mut snapshots = Vec::new();
    let mut record = |t: f64, psi: &[C64], excitation: &mut Vec<f64>| {
        excitation.push(mean_excitation(psi));
        while wanted.peek() == Some(&t) {
            wanted.next();
            snapshots.push((t, StateVector(psi.to_vec())));
        }
    };
    record(t_grid[0], &psi, &mut excitation);
    for w in t_grid.windows(2) {
        let span = w[1] - w[0];
        let steps = ((span / cfg.dt) - 1e-9).ceil().max(1.0) as usize * refine;
        let h = span / steps as f64;
        for k in 0..steps {
            let t = w[0] + k as f64 * h;
            stream.fill(h, &mut noise);
            sys.step(&mut psi, t, h, &noise, &mut ws)?;
        }
        record(w[1], &psi, &mut excitation);
    }
    Ok(TrajectoryRecord {
        seed,
        times: t_grid.to_vec(),
        excitation,
        snapshots,
    })
}

/// One seeded trajectory from `psi0` at `t_grid[0]`, recorded on `t_grid`.
pub fn run_trajectory(
    psi0: &StateVector,
    t_grid: &[f64],
    seed: u64,
    sys: &QsdSystem,
    cfg: &TrajectoryConfig,
) -> Result<TrajectoryRecord> {
    simulate(psi0, t_grid, seed, sys, cfg, 1, 1)
}

/// Per-seed trajectories of an ensemble.
///
/// Statistics are reduced over seeds in ascending order with pairwise
/// summation, so the result depends only on the set of seeds and not on how
/// they were distributed over runs that were later merged.
#[derive(Debug, Clone, Default)]
pub struct EnsembleResult {
    records: BTreeMap<u64, TrajectoryRecord>,
    failures: BTreeMap<u64, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleSummary {
    pub times: Vec<f64>,
    pub mean_excitation: Vec<f64>,
    pub std_error: Vec<f64>,
    pub trajectories: usize,
    /// Seeds whose trajectory failed and were left out.
    pub failed_seeds: Vec<u64>,
}

fn pairwise_sum<T, F>(items: &[T], f: &F) -> C64Acc
where
    F: Fn(&T) -> C64Acc,
{
    match items.len() {
        0 => C64Acc::Empty,
        1 => f(&items[0]),
        n => {
            let (a, b) = items.split_at(n / 2);
            pairwise_sum(a, f).add(pairwise_sum(b, f))
        }
    }
}

/// Accumulator for the pairwise reduction.
enum C64Acc {
    Empty,
    Scalars(Vec<f64>),
    Matrix(DMatrix<C64>),
}

impl C64Acc {
    fn add(self, other: C64Acc) -> C64Acc {
        match (self, other) {
            (C64Acc::Empty, x) | (x, C64Acc::Empty) => x,
            (C64Acc::Scalars(mut a), C64Acc::Scalars(b)) => {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                C64Acc::Scalars(a)
            }
            (C64Acc::Matrix(a), C64Acc::Matrix(b)) => C64Acc::Matrix(a + b),
            _ => unreachable!("mixed accumulators"),
        }
    }
}

impl EnsembleResult {
    pub fn trajectory_count(&self) -> usize {
        self.records.len()
    }

    pub fn records(&self) -> impl Iterator<Item = &TrajectoryRecord> {
        self.records.values()
    }

    pub fn failures(&self) -> &BTreeMap<u64, String> {
        &self.failures
    }

    pub fn times(&self) -> Option<&[f64]> {
        self.records.values().next().map(|r| r.times.as_slice())
    }

    /// Combine two ensembles over disjoint seed sets run on the same grid.
    pub fn merge(mut self, other: EnsembleResult) -> Result<Self> {
        if let (Some(a), Some(b)) = (self.times(), other.times()) {
            if a != b {
                return Err(Error::InvalidState("ensembles use different time grids".into()));
            }
        }
        for (seed, rec) in other.records {
            if self.records.contains_key(&seed) || self.failures.contains_key(&seed) {
                return Err(Error::InvalidState(format!("seed {seed} appears in both ensembles")));
            }
            self.records.insert(seed, rec);
        }
        for (seed, msg) in other.failures {
            if self.records.contains_key(&seed) || self.failures.contains_key(&seed) {
                return Err(Error::InvalidState(format!("seed {seed} appears in both ensembles")));
            }
            self.failures.insert(seed, msg);
        }
        Ok(self)
    }

    fn ordered(&self) -> Vec<&TrajectoryRecord> {
        self.records.values().collect()
    }

    /// Mean excitation and its standard error at each output time.
    pub fn summary(&self) -> Result<EnsembleSummary> {
        let recs = self.ordered();
        let m = recs.len();
        let times = self
            .times()
            .ok_or_else(|| Error::InvalidState("ensemble has no surviving trajectories".into()))?
            .to_vec();
        let C64Acc::Scalars(sum) = pairwise_sum(&recs, &|r| C64Acc::Scalars(r.excitation.clone()))
        else {
            unreachable!()
        };
        let mean: Vec<f64> = sum.iter().map(|s| s / m as f64).collect();
        let std_error = if m > 1 {
            let C64Acc::Scalars(sq) = pairwise_sum(&recs, &|r| {
                C64Acc::Scalars(
                    r.excitation.iter().zip(&mean).map(|(x, mu)| (x - mu) * (x - mu)).collect(),
                )
            }) else {
                unreachable!()
            };
            sq.iter().map(|s| (s / (m - 1) as f64 / m as f64).sqrt()).collect()
        } else {
            vec![0.0; mean.len()]
        };
        Ok(EnsembleSummary {
            times,
            mean_excitation: mean,
            std_error,
            trajectories: m,
            failed_seeds: self.failures.keys().copied().collect(),
        })
    }

    /// Average of `|ψ⟩⟨ψ|` over trajectories at snapshot time `t`.
    pub fn density_at(&self, t: f64) -> Result<DensityMatrix> {
        let recs = self.ordered();
        if recs.is_empty() {
            return Err(Error::InvalidState("ensemble has no surviving trajectories".into()));
        }
        let mut states = Vec::with_capacity(recs.len());
        for r in &recs {
            states.push(
                r.snapshot(t)
                    .ok_or_else(|| Error::param("t", format!("no snapshot stored at t = {t}")))?,
            );
        }
        let C64Acc::Matrix(sum) =
            pairwise_sum(&states, &|s| C64Acc::Matrix(s.projector().into_matrix()))
        else {
            unreachable!()
        };
        let mut rho = DensityMatrix::from_matrix_unchecked(sum / C64::from(recs.len() as f64));
        rho.hermitize();
        Ok(rho)
    }

    /// Averaged density matrices at every snapshot time.
    pub fn density_matrices(&self) -> Result<Vec<(f64, DensityMatrix)>> {
        let Some(first) = self.records.values().next() else {
            return Err(Error::InvalidState("ensemble has no surviving trajectories".into()));
        };
        first
            .snapshots
            .iter()
            .map(|(t, _)| Ok((*t, self.density_at(*t)?)))
            .collect()
    }
}

/// Run one trajectory per seed (in parallel) and collect the results.
/// Failed trajectories are reported per seed instead of aborting the run.
pub fn ensemble_run(
    psi0: &StateVector,
    t_grid: &[f64],
    seeds: &[u64],
    sys: &QsdSystem,
    cfg: &TrajectoryConfig,
) -> Result<EnsembleResult> {
    if seeds.is_empty() {
        return Err(Error::param("seeds", "need at least one seed"));
    }
    let mut sorted = seeds.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::param("seeds", "must be distinct"));
    }
    check_grid(t_grid)?;
    let runs: Vec<(u64, Result<TrajectoryRecord>)> = sorted
        .par_iter()
        .map(|&seed| (seed, run_trajectory(psi0, t_grid, seed, sys, cfg)))
        .collect();
    let mut out = EnsembleResult::default();
    for (seed, run) in runs {
        match run {
            Ok(rec) => {
                out.records.insert(seed, rec);
            }
            Err(e @ (Error::StepFailure { .. } | Error::Integration { .. })) => {
                out.failures.insert(seed, e.to_string());
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DtCalibration {
    /// Accepted step.
    pub dt: f64,
    /// `(dt, drift)` for every step tried.
    pub history: Vec<(f64, f64)>,
}

/// Halve `dt` until the ensemble-mean excitation at the final grid time
/// changes by less than `tol` when the step is halved again.
///
/// The `dt` and `dt/2` runs of each seed share one Brownian path, so the
/// drift measures discretisation error rather than sampling noise.
pub fn calibrate_dt(
    psi0: &StateVector,
    t_grid: &[f64],
    seeds: &[u64],
    sys: &QsdSystem,
    dt_start: f64,
    tol: f64,
    min_dt: f64,
) -> Result<DtCalibration> {
    if seeds.is_empty() {
        return Err(Error::param("seeds", "need at least one seed"));
    }
    let mut dt = dt_start;
    let mut history = Vec::new();
    while dt >= min_dt {
        let cfg = TrajectoryConfig {
            dt,
            snapshot_times: Vec::new(),
        };
        let drift: f64 = seeds
            .par_iter()
            .map(|&seed| -> Result<f64> {
                let coarse = simulate(psi0, t_grid, seed, sys, &cfg, 1, 2)?;
                let fine = simulate(psi0, t_grid, seed, sys, &cfg, 2, 1)?;
                Ok(fine.excitation.last().unwrap() - coarse.excitation.last().unwrap())
            })
            .collect::<Result<Vec<f64>>>()?
            .iter()
            .sum::<f64>()
            .abs()
            / seeds.len() as f64;
        history.push((dt, drift));
        if drift < tol {
            return Ok(DtCalibration { dt, history });
        }
        dt *= 0.5;
    }
    Err(Error::Unsupported(format!(
        "dt calibration did not reach drift {tol:e} above dt = {min_dt:e}"
    )))
}

/// Modes of the distribution of `samples`: centres of histogram bins (width
/// `bin_width`) that are local maxima with
/// topographic prominence of at least `min_prominence` times the highest bin.
pub fn histogram_modes(samples: &[f64], bin_width: f64, min_prominence: f64) -> Vec<f64> {
    let hi = samples.iter().copied().filter(|x| x.is_finite()).fold(0.0, f64::max);
    if samples.is_empty() || !(bin_width > 0.0) {
        return Vec::new();
    }
    let lo = samples.iter().copied().filter(|x| x.is_finite()).fold(hi, f64::min);
    let bins = ((hi - lo) / bin_width).floor() as usize + 1;
    // two empty bins on each side so edge bins can be maxima
    let mut counts = vec![0.0; bins + 4];
    for &x in samples.iter().filter(|x| x.is_finite()) {
        counts[2 + ((x - lo) / bin_width).floor() as usize] += 1.0;
    }
    let h = counts;
    let top = h.iter().copied().fold(0.0, f64::max);
    let mut modes = Vec::new();
    let mut i = 1;
    while i < h.len() - 1 {
        // plateau [i, j]
        let mut j = i;
        while j + 1 < h.len() && h[j + 1] == h[i] {
            j += 1;
        }
        if h[i] > h[i - 1] && j + 1 < h.len() && h[i] > h[j + 1] {
            let base = |range: &mut dyn Iterator<Item = usize>| {
                let mut m = h[i];
                for k in range {
                    if h[k] > h[i] {
                        break;
                    }
                    m = m.min(h[k]);
                }
                m
            };
            let left = base(&mut (0..i).rev());
            let right = base(&mut (j + 1..h.len()));
            if h[i] - left.max(right) >= min_prominence * top {
                let centre = 0.5 * (i + j) as f64;
                modes.push(lo + (centre - 1.5) * bin_width);
            }
        }
        i = j + 1;
    }
    modes
}
