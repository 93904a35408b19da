//! The classical amplitude equation of the driven Kerr oscillator
//!
//! ```text
//! dα/dt = −i(Δ + χ + 2χ|α|²)α − i f(t)Ω − κα
//! ```
//!
//! with its steady states, hysteresis branches, stroboscopic sections and
//! Lyapunov exponents. The drive term follows from the Heisenberg equation of
//! the Hamiltonian in [`crate::model`], so `α` is directly comparable with
//! `⟨a⟩` and with Wigner-function peak positions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DriveEnvelope, ModelParams, C64};
use crate::ode::{Dopri5, SolverConfig};

/// Amplitude damping rate in units of γ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DampingConvention {
    /// κ = γ/2, the rate matching the quantum `⟨a⟩` decay.
    #[default]
    Half,
    /// κ = γ.
    Full,
}

impl DampingConvention {
    pub fn kappa(self, gamma: f64) -> f64 {
        match self {
            DampingConvention::Half => 0.5 * gamma,
            DampingConvention::Full => gamma,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DampingConvention::Half => "half",
            DampingConvention::Full => "full",
        }
    }
}

impl std::str::FromStr for DampingConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "half" => Ok(Self::Half),
            "full" => Ok(Self::Full),
            _ => Err(Error::param("damping_convention", "expected `half` or `full`")),
        }
    }
}

/// `dα/dt` at time `t`.
pub fn amplitude_rhs(
    alpha: C64,
    t: f64,
    p: &ModelParams,
    env: &DriveEnvelope,
    conv: DampingConvention,
) -> C64 {
    let freq = p.delta + p.chi + 2.0 * p.chi * alpha.norm_sqr();
    let drive = env.value(t) * p.omega_drive;
    C64::new(0.0, -1.0) * (alpha * freq + drive) - alpha * conv.kappa(p.gamma)
}

/// The classical scaling map `χ → χ/λ²`, `Ω → λΩ`, `Δ → Δ + χ(1 − 1/λ²)`,
/// under which `α → λα` maps solutions onto solutions.
pub fn scale_params(p: &ModelParams, lambda: f64) -> Result<ModelParams> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::param("lambda", "must be positive"));
    }
    let inv2 = 1.0 / (lambda * lambda);
    Ok(ModelParams {
        delta: p.delta + p.chi * (1.0 - inv2),
        chi: p.chi * inv2,
        omega_drive: lambda * p.omega_drive,
        ..*p
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SteadyRoot {
    /// `|α|²`
    pub n: f64,
    pub alpha: C64,
    pub stable: bool,
    /// Set at (or numerically next to) a fold, where two roots merge.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteadyRoots {
    /// Sorted by increasing `n`.
    pub roots: Vec<SteadyRoot>,
}

impl SteadyRoots {
    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    pub fn stable(&self) -> impl Iterator<Item = &SteadyRoot> {
        self.roots.iter().filter(|r| r.stable)
    }
}

/// Coefficients of `4χ²n³ + 4χδn² + (δ² + κ²)n − Ω²` (highest first),
/// with `δ = Δ + χ`.
pub fn steady_cubic(p: &ModelParams, conv: DampingConvention) -> [f64; 4] {
    let d = p.delta + p.chi;
    let k = conv.kappa(p.gamma);
    [
        4.0 * p.chi * p.chi,
        4.0 * p.chi * d,
        d * d + k * k,
        -p.omega_drive * p.omega_drive,
    ]
}

fn poly(c: &[f64; 4], x: f64) -> f64 {
    ((c[0] * x + c[1]) * x + c[2]) * x + c[3]
}

fn poly_deriv(c: &[f64; 4], x: f64) -> f64 {
    (3.0 * c[0] * x + 2.0 * c[1]) * x + c[2]
}

/// Real roots of the cubic, solved via the depressed form.
fn real_cubic_roots(c: &[f64; 4]) -> Vec<f64> {
    let (b, cc, d) = (c[1] / c[0], c[2] / c[0], c[3] / c[0]);
    let shift = b / 3.0;
    let p = cc - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * cc / 3.0 + d;
    let disc = q * q / 4.0 + p * p * p / 27.0;
    let mut roots = if disc > 0.0 {
        let s = disc.sqrt();
        vec![(-q / 2.0 + s).cbrt() + (-q / 2.0 - s).cbrt()]
    } else if p == 0.0 {
        vec![0.0]
    } else {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = ((3.0 * q) / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        (0..3)
            .map(|k| m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos())
            .collect()
    };
    for r in &mut roots {
        *r -= shift;
    }
    roots
}

/// Steady amplitude on the root `n` of the cubic.
pub fn steady_alpha(n: f64, p: &ModelParams, conv: DampingConvention) -> C64 {
    let freq = p.delta + p.chi + 2.0 * p.chi * n;
    C64::new(0.0, -p.omega_drive) / C64::new(conv.kappa(p.gamma), freq)
}

/// Stationary solutions of the amplitude equation under constant drive.
pub fn steady_amplitudes(p: &ModelParams, conv: DampingConvention) -> SteadyRoots {
    let kappa = conv.kappa(p.gamma);
    let c = steady_cubic(p, conv);
    let mut ns: Vec<f64> = if p.omega_drive == 0.0 {
        vec![0.0]
    } else if p.chi == 0.0 {
        vec![-c[3] / c[2]]
    } else {
        real_cubic_roots(&c)
            .into_iter()
            .map(|n| {
                let dp = poly_deriv(&c, n);
                if dp != 0.0 {
                    n - poly(&c, n) / dp
                } else {
                    n
                }
            })
            .filter(|&n| n > 0.0)
            .collect()
    };
    ns.sort_by(f64::total_cmp);
    ns.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1.0));
    let scale = c[2].abs().max(c[3].abs()).max(1e-300);
    let roots = ns
        .into_iter()
        .map(|n| {
            let d1 = p.delta + p.chi + 2.0 * p.chi * n;
            let d3 = p.delta + p.chi + 6.0 * p.chi * n;
            let det = kappa * kappa + d1 * d3;
            let degenerate = p.chi != 0.0 && poly_deriv(&c, n).abs() <= 1e-8 * scale;
            SteadyRoot {
                n,
                alpha: steady_alpha(n, p, conv),
                stable: kappa > 0.0 && det > 0.0,
                degenerate,
            }
        })
        .collect();
    SteadyRoots { roots }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BistabilityTest {
    pub bistable: bool,
    /// Slack of each inequality; positive means satisfied.
    ///
    /// 0. `−χ(Δ+χ)`
    /// 1. `|δ/κ| − √3`
    /// 2. `(1 − 3k²)³ − (1 + 27χΩ²/δ³ + 9k²)²` with `k = κ/δ`
    pub margins: [f64; 3],
}

/// The analytic conditions for three real steady states.
pub fn bistability_test(p: &ModelParams, conv: DampingConvention) -> BistabilityTest {
    let d = p.delta + p.chi;
    let kappa = conv.kappa(p.gamma);
    let m1 = -p.chi * d;
    let m2 = (d / kappa).abs() - 3f64.sqrt();
    let m3 = if d == 0.0 {
        f64::NEG_INFINITY
    } else {
        let k2 = (kappa / d).powi(2);
        (1.0 - 3.0 * k2).powi(3) - (1.0 + 27.0 * p.chi * p.omega_drive.powi(2) / d.powi(3) + 9.0 * k2).powi(2)
    };
    BistabilityTest {
        bistable: m1 > 0.0 && m2 > 0.0 && m3 > 0.0,
        margins: [m1, m2, m3],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepDirection {
    Up,
    Down,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchPoint {
    pub omega: f64,
    pub n: f64,
    pub alpha: C64,
}

/// Quasi-static continuation along `omegas`: stay on the stable root closest
/// in `n` to the previous point, jumping to the remaining stable branch when
/// the current one folds away.
///
/// `omegas` must be increasing for [`SweepDirection::Up`] and decreasing for
/// [`SweepDirection::Down`].
pub fn hysteresis_sweep(
    p: &ModelParams,
    omegas: &[f64],
    direction: SweepDirection,
    conv: DampingConvention,
) -> Result<Vec<BranchPoint>> {
    let monotone = omegas.windows(2).all(|w| match direction {
        SweepDirection::Up => w[1] > w[0],
        SweepDirection::Down => w[1] < w[0],
    });
    if !monotone {
        return Err(Error::param("omega_range", "must be monotone in the sweep direction"));
    }
    let mut out = Vec::with_capacity(omegas.len());
    let mut previous: Option<f64> = None;
    for &omega in omegas {
        let roots = steady_amplitudes(&p.with_omega(omega), conv);
        let mut stable = roots.stable().peekable();
        if stable.peek().is_none() {
            return Err(Error::Unsupported(format!("no stable steady state at Ω = {omega}")));
        }
        let pick = match previous {
            Some(prev) => stable
                .min_by(|a, b| (a.n - prev).abs().total_cmp(&(b.n - prev).abs()))
                .unwrap(),
            None => match direction {
                SweepDirection::Up => stable.next().unwrap(),
                SweepDirection::Down => stable.last().unwrap(),
            },
        };
        previous = Some(pick.n);
        out.push(BranchPoint {
            omega,
            n: pick.n,
            alpha: pick.alpha,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Amplitude {
    pub t: f64,
    pub alpha: C64,
}

/// Accuracy of classical integrations; tight by default since chaotic
/// orbits amplify every error.
pub fn default_solver() -> SolverConfig {
    SolverConfig::with_tolerances(1e-10, 1e-12)
}

fn stepper(len: usize, env: &DriveEnvelope, cfg: &SolverConfig) -> Result<Dopri5> {
    cfg.validate()?;
    env.validate()?;
    Ok(Dopri5::new(len, cfg.with_h_max(cfg.h_max.min(env.max_step()))))
}

/// Integrate the amplitude equation from `alpha0` at `times[0]`, recording
/// the amplitude at every entry of `times`.
pub fn integrate_amplitude(
    alpha0: C64,
    times: &[f64],
    p: &ModelParams,
    env: &DriveEnvelope,
    conv: DampingConvention,
    cfg: &SolverConfig,
) -> Result<Vec<Amplitude>> {
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::param("times", "must be increasing"));
    }
    let Some(&t0) = times.first() else {
        return Ok(Vec::new());
    };
    let mut dop = stepper(1, env, cfg)?;
    let mut rhs = |t: f64, y: &[C64], dy: &mut [C64]| dy[0] = amplitude_rhs(y[0], t, p, env, conv);
    let mut y = [alpha0];
    let mut t = t0;
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        dop.advance(&mut rhs, &mut t, target, &mut y, &mut |_, _| false)?;
        out.push(Amplitude { t, alpha: y[0] });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoincareSpec {
    /// Phase of the stroboscopic sampling.
    pub t0: f64,
    /// Sampling period; defaults to the pulse period of the drive.
    #[serde(default)]
    pub period: Option<f64>,
    pub n_points: usize,
    #[serde(default = "default_skip")]
    pub transient_skip: usize,
}

fn default_skip() -> usize {
    100
}

impl PoincareSpec {
    pub fn new(t0: f64, n_points: usize) -> Self {
        Self {
            t0,
            period: None,
            n_points,
            transient_skip: default_skip(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoincareSection {
    pub t0: f64,
    pub tau: f64,
    pub transient_skip: usize,
    pub points: Vec<C64>,
}

impl PoincareSection {
    /// Largest distance of a point from the centroid.
    pub fn scatter(&self) -> f64 {
        let n = self.points.len().max(1) as f64;
        let centre: C64 = self.points.iter().sum::<C64>() / n;
        self.points.iter().map(|z| (z - centre).norm()).fold(0.0, f64::max)
    }

    /// Number of points that are pairwise separated by more than `tol`.
    pub fn distinct_points(&self, tol: f64) -> usize {
        let mut kept: Vec<C64> = Vec::new();
        for &z in &self.points {
            if kept.iter().all(|k| (k - z).norm() > tol) {
                kept.push(z);
            }
        }
        kept.len()
    }
}

/// Stroboscopic samples `α(t0 + kτ)` for `k = skip, …, skip + n − 1`, with
/// the orbit started from `alpha0` at `t = 0`.
pub fn poincare_section(
    p: &ModelParams,
    env: &DriveEnvelope,
    alpha0: C64,
    spec: &PoincareSpec,
    conv: DampingConvention,
    cfg: &SolverConfig,
) -> Result<PoincareSection> {
    let tau = spec
        .period
        .or(env.period())
        .ok_or_else(|| Error::param("period", "constant drive needs an explicit sampling period"))?;
    if !(tau > 0.0) {
        return Err(Error::param("period", "must be positive"));
    }
    if spec.n_points == 0 {
        return Err(Error::param("n_points", "must be at least 1"));
    }
    if spec.t0 < 0.0 {
        return Err(Error::param("t0", "must be non-negative"));
    }
    let mut times = vec![0.0];
    times.extend(
        (spec.transient_skip..spec.transient_skip + spec.n_points).map(|k| spec.t0 + k as f64 * tau),
    );
    let orbit = integrate_amplitude(alpha0, &times, p, env, conv, cfg)?;
    let points: Vec<C64> = orbit[1..].iter().map(|a| a.alpha).collect();
    if points.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Integration {
            t: *times.last().unwrap(),
            reason: "non-finite amplitude".into(),
        });
    }
    Ok(PoincareSection {
        t0: spec.t0,
        tau,
        transient_skip: spec.transient_skip,
        points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LyapunovConfig {
    /// Separation the companion orbit is rescaled to.
    pub d0: f64,
    /// Rescaling interval as a fraction of the period.
    pub renormalization_fraction: f64,
    pub transient_periods: f64,
    pub measure_periods: f64,
    /// Start time of the orbit.
    pub t0: f64,
    /// Reference period for constant drive.
    pub period: Option<f64>,
    /// Allowed gap between the full- and half-time estimates.
    pub tolerance: f64,
    pub damping: DampingConvention,
    pub solver: SolverConfig,
}

impl Default for LyapunovConfig {
    fn default() -> Self {
        Self {
            d0: 1e-8,
            renormalization_fraction: 0.1,
            transient_periods: 50.0,
            measure_periods: 200.0,
            t0: 0.0,
            period: None,
            tolerance: 0.05,
            damping: DampingConvention::Half,
            solver: default_solver(),
        }
    }
}

impl LyapunovConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.d0 > 0.0) {
            return Err(Error::param("d0", "must be positive"));
        }
        if !(self.renormalization_fraction > 0.0) {
            return Err(Error::param("renormalization_fraction", "must be positive"));
        }
        if !(self.measure_periods >= 10.0 * self.renormalization_fraction) {
            return Err(Error::param(
                "measure_periods",
                "must span many renormalization intervals",
            ));
        }
        if !(self.transient_periods >= 0.0) {
            return Err(Error::param("transient_periods", "must be non-negative"));
        }
        self.solver.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LyapunovEstimate {
    /// Largest exponent over the full measurement window.
    pub exponent: f64,
    /// The same estimate over the first half of the window.
    pub half_window: f64,
    /// Whether the two estimates agree within the configured tolerance.
    pub converged: bool,
    pub measure_time: f64,
}

/// Growth of a companion orbit, accumulated per renormalization interval.
struct Benettin {
    /// Interval length.
    dt: f64,
    /// `ln(d/d0)` per interval, in time order, after the transient.
    growth: Vec<f64>,
}

fn benettin(
    p: &ModelParams,
    env: &DriveEnvelope,
    cfg: &LyapunovConfig,
    total_periods: f64,
) -> Result<Benettin> {
    cfg.validate()?;
    p.validate()?;
    let tau = cfg.period.or(env.period()).unwrap_or(1.0);
    let dt = tau * cfg.renormalization_fraction;
    let conv = cfg.damping;
    let mut rhs = |t: f64, y: &[C64], dy: &mut [C64]| {
        dy[0] = amplitude_rhs(y[0], t, p, env, conv);
        dy[1] = amplitude_rhs(y[1], t, p, env, conv);
    };
    let mut dop = stepper(2, env, &cfg.solver)?;
    let mut t = cfg.t0;
    let mut y = [C64::new(0.0, 0.0); 2];
    dop.advance(&mut rhs, &mut t, cfg.t0 + cfg.transient_periods * tau, &mut y, &mut |_, _| false)?;
    let dir = C64::new(1.0, 1.0) / 2f64.sqrt();
    y[1] = y[0] + dir * cfg.d0;
    dop.invalidate();
    let intervals = (total_periods / cfg.renormalization_fraction).round() as usize;
    let start = t;
    let mut growth = Vec::with_capacity(intervals);
    for k in 1..=intervals {
        dop.advance(&mut rhs, &mut t, start + k as f64 * dt, &mut y, &mut |_, _| false)?;
        let sep = y[1] - y[0];
        let d = sep.norm();
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::Integration {
                t,
                reason: "companion orbit collapsed onto the reference".into(),
            });
        }
        growth.push((d / cfg.d0).ln());
        y[1] = y[0] + sep * (cfg.d0 / d);
        dop.invalidate();
    }
    Ok(Benettin { dt, growth })
}

impl Benettin {
    /// Mean growth rate over intervals `[from, to)`.
    fn rate(&self, from: usize, to: usize) -> f64 {
        let to = to.min(self.growth.len());
        let from = from.min(to);
        if to == from {
            return f64::NAN;
        }
        self.growth[from..to].iter().sum::<f64>() / ((to - from) as f64 * self.dt)
    }
}

/// Largest Lyapunov exponent by repeated renormalization of a nearby orbit.
pub fn lyapunov_exponent(
    p: &ModelParams,
    env: &DriveEnvelope,
    cfg: &LyapunovConfig,
) -> Result<LyapunovEstimate> {
    let run = benettin(p, env, cfg, cfg.measure_periods)?;
    let n = run.growth.len();
    let exponent = run.rate(0, n);
    let half_window = run.rate(0, n / 2);
    Ok(LyapunovEstimate {
        exponent,
        half_window,
        converged: (exponent - half_window).abs() < cfg.tolerance,
        measure_time: n as f64 * run.dt,
    })
}

/// Exponents for each drive amplitude; sweeps run in parallel.
pub fn lyapunov_sweep(
    p: &ModelParams,
    env: &DriveEnvelope,
    omegas: &[f64],
    cfg: &LyapunovConfig,
) -> Vec<Result<LyapunovEstimate>> {
    omegas
        .par_iter()
        .map(|&om| lyapunov_exponent(&p.with_omega(om), env, cfg))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DynamicsClass {
    Regular,
    Marginal,
    Chaotic,
    /// Chaotic at early times but settling onto a regular attractor.
    TransientChaos,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DynamicsReport {
    pub class: DynamicsClass,
    /// Exponent over 50τ–150τ.
    pub early: f64,
    /// Exponent over 300τ–500τ.
    pub late: f64,
}

/// Classify the long-time dynamics, separating transient chaos from
/// sustained chaos by comparing early and late windows.
///
/// `cfg.transient_periods` and `cfg.measure_periods` are ignored; the
/// windows are fixed in units of the period measured from `cfg.t0`.
pub fn classify_dynamics(
    p: &ModelParams,
    env: &DriveEnvelope,
    cfg: &LyapunovConfig,
) -> Result<DynamicsReport> {
    const EARLY: (f64, f64) = (50.0, 150.0);
    const LATE: (f64, f64) = (300.0, 500.0);
    let run_cfg = LyapunovConfig {
        transient_periods: EARLY.0,
        ..*cfg
    };
    let run = benettin(p, env, &run_cfg, LATE.1 - EARLY.0)?;
    let idx = |periods: f64| ((periods - EARLY.0) / cfg.renormalization_fraction).round() as usize;
    let early = run.rate(idx(EARLY.0), idx(EARLY.1));
    let late = run.rate(idx(LATE.0), idx(LATE.1));
    let tol = cfg.tolerance;
    let class = if early > tol && late < -tol {
        DynamicsClass::TransientChaos
    } else if late > tol {
        DynamicsClass::Chaotic
    } else if late < -tol {
        DynamicsClass::Regular
    } else {
        DynamicsClass::Marginal
    };
    Ok(DynamicsReport { class, early, late })
}

/// Drive amplitudes where a sweep passes from regular (`L < −tol`) to chaotic
/// (`L > tol`) motion, linearly interpolated between the bracketing points.
/// Marginal points (`|L| ≤ tol`) in between do not end the regular stretch.
pub fn chaos_onsets(omegas: &[f64], exponents: &[f64], tol: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut last_regular: Option<usize> = None;
    for (i, &l) in exponents.iter().enumerate() {
        if l < -tol {
            last_regular = Some(i);
        } else if l > tol {
            if let Some(j) = last_regular.take() {
                let (l0, l1) = (exponents[j], l);
                let frac = -l0 / (l1 - l0);
                out.push(omegas[j] + frac * (omegas[i] - omegas[j]));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn fig2() -> ModelParams {
        ModelParams::new(-8.0, 2.0, 2.7)
    }

    #[test]
    fn undriven_origin_is_fixed() {
        let p = ModelParams::new(-8.0, 2.0, 0.0);
        for conv in [DampingConvention::Half, DampingConvention::Full] {
            assert_eq!(amplitude_rhs(C64::new(0.0, 0.0), 0.3, &p, &DriveEnvelope::Constant, conv), C64::new(0.0, 0.0));
        }
    }

    #[test]
    fn linear_decay() {
        let p = ModelParams::new(0.0, 0.0, 0.0);
        let a = C64::new(0.3, -1.2);
        let rhs = amplitude_rhs(a, 0.0, &p, &DriveEnvelope::Constant, DampingConvention::Half);
        assert_abs_diff_eq!((rhs + a * 0.5).norm(), 0.0, epsilon = 1e-15);
        let rhs = amplitude_rhs(a, 0.0, &p, &DriveEnvelope::Constant, DampingConvention::Full);
        assert_abs_diff_eq!((rhs + a).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn lorentzian_root() {
        let roots = steady_amplitudes(&ModelParams::new(1.0, 0.0, 1.0), DampingConvention::Half);
        assert_eq!(roots.len(), 1);
        assert_abs_diff_eq!(roots.roots[0].n, 0.8, epsilon = 1e-14);
        assert!(roots.roots[0].stable);
    }

    #[test]
    fn undriven_single_root() {
        let roots = steady_amplitudes(&ModelParams::new(-8.0, 2.0, 0.0), DampingConvention::Half);
        assert_eq!(roots.len(), 1);
        assert_eq!(roots.roots[0].n, 0.0);
        assert!(roots.roots[0].stable);
    }

    #[test]
    fn bistable_roots() {
        let roots = steady_amplitudes(&fig2(), DampingConvention::Half);
        assert_eq!(roots.len(), 3);
        let stable: Vec<bool> = roots.roots.iter().map(|r| r.stable).collect();
        assert_eq!(stable, [true, false, true]);
        for r in &roots.roots {
            let res = amplitude_rhs(r.alpha, 0.0, &fig2(), &DriveEnvelope::Constant, DampingConvention::Half);
            assert!(res.norm() < 1e-9);
            assert_abs_diff_eq!(r.alpha.norm_sqr(), r.n, epsilon = 1e-12);
        }
    }

    #[test]
    fn bistability_sign_condition() {
        assert!(bistability_test(&fig2(), DampingConvention::Half).bistable);
        let t = bistability_test(&ModelParams::new(8.0, 2.0, 2.7), DampingConvention::Half);
        assert!(!t.bistable);
        assert!(t.margins[0] < 0.0);
    }

    #[test]
    fn scaling_identity_values() {
        let s = scale_params(&fig2(), 2.0).unwrap();
        assert_abs_diff_eq!(s.chi, 0.5);
        assert_abs_diff_eq!(s.omega_drive, 5.4);
        assert_abs_diff_eq!(s.delta, -6.5);
        assert_eq!(scale_params(&fig2(), 1.0).unwrap(), fig2());
        assert!(scale_params(&fig2(), 0.0).is_err());
    }

    #[test]
    fn sweep_direction_is_checked() {
        let err = hysteresis_sweep(&fig2(), &[1.0, 2.0], SweepDirection::Down, DampingConvention::Half);
        assert!(err.is_err());
    }

    #[test]
    fn harmonic_sweeps_agree() {
        let p = ModelParams::new(-3.0, 0.0, 0.0);
        let up: Vec<f64> = (0..20).map(|k| 0.25 * k as f64).collect();
        let down: Vec<f64> = up.iter().rev().copied().collect();
        let a = hysteresis_sweep(&p, &up, SweepDirection::Up, DampingConvention::Half).unwrap();
        let mut b = hysteresis_sweep(&p, &down, SweepDirection::Down, DampingConvention::Half).unwrap();
        b.reverse();
        assert_eq!(a, b);
    }

    #[test]
    fn onsets_skip_marginal_points() {
        let om = [11.0, 11.5, 12.0, 12.5, 13.0, 13.5];
        let l = [-0.13, -0.003, -0.32, -0.17, 0.21, 0.28];
        let on = chaos_onsets(&om, &l, 0.05);
        assert_eq!(on.len(), 1);
        assert!(on[0] > 12.5 && on[0] < 13.0);
    }

    #[test]
    fn damping_convention_parses() {
        assert_eq!("full".parse::<DampingConvention>().unwrap(), DampingConvention::Full);
        assert!("quarter".parse::<DampingConvention>().is_err());
    }
}
