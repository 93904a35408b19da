//! Lindblad master-equation dynamics of the density matrix and the
//! observables derived from it.
//!
//! The generator is applied in its banded Fock-space form: `H` is
//! tridiagonal and the jump operators shift by one level, so one evaluation of
//! `dρ/dt` costs `O(dim²)` instead of the `O(dim³)` of dense products.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::banded::BandMatrix;
use crate::error::{Error, Result};
use crate::model::{bare_energies, hermiticity_error, DriveEnvelope, FockSpace, ModelParams, C64};
use crate::ode::{Dopri5, SolverConfig};

pub use crate::hypergeometric::{
    exact_mean_excitation, lorentzian_mean_excitation, ExactSolutionInputs,
};

/// Tolerances of the [`DensityMatrix`] invariants.
pub const HERMITICITY_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-8;
pub const POSITIVITY_TOL: f64 = 1e-8;

const ZERO: C64 = C64::new(0.0, 0.0);

/// A density matrix in the truncated Fock basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(DMatrix<C64>);

impl DensityMatrix {
    /// Wrap a matrix after checking hermiticity, unit trace and positivity.
    pub fn from_matrix(m: DMatrix<C64>) -> Result<Self> {
        let rho = Self(m);
        rho.validate()?;
        Ok(rho)
    }

    pub(crate) fn from_matrix_unchecked(m: DMatrix<C64>) -> Self {
        Self(m)
    }

    pub fn vacuum(dim: usize) -> Self {
        Self::fock(dim, 0)
    }

    /// The number state `|n⟩⟨n|`.
    pub fn fock(dim: usize, n: usize) -> Self {
        assert!(n < dim, "Fock level {n} outside dimension {dim}");
        let mut m = DMatrix::zeros(dim, dim);
        m[(n, n)] = C64::new(1.0, 0.0);
        Self(m)
    }

    /// `|ψ⟩⟨ψ|` for a normalised amplitude vector.
    pub fn pure(psi: &[C64]) -> Self {
        let d = psi.len();
        Self(DMatrix::from_fn(d, d, |i, j| psi[i] * psi[j].conj()))
    }

    /// Convex combination `Σ wᵢ ρᵢ`.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let d = parts
            .first()
            .ok_or_else(|| Error::InvalidState("empty mixture".into()))?
            .1
            .dim();
        let mut m = DMatrix::zeros(d, d);
        for (w, rho) in parts {
            if rho.dim() != d {
                return Err(Error::InvalidState("mixture of different dimensions".into()));
            }
            m += &rho.0 * C64::from(*w);
        }
        Self::from_matrix(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.0
    }

    /// Column-major view of the elements.
    pub fn as_slice(&self) -> &[C64] {
        self.0.as_slice()
    }

    pub fn element(&self, n: usize, m: usize) -> C64 {
        self.0[(n, m)]
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(&self.0)
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.0)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.0.is_square() || self.0.nrows() == 0 {
            return Err(Error::InvalidState("density matrix must be square".into()));
        }
        let herm = self.hermiticity_error();
        if !(herm <= HERMITICITY_TOL) {
            return Err(Error::InvalidState(format!("not Hermitian (error {herm:e})")));
        }
        self.validate_trace()?;
        let min = self.min_eigenvalue();
        if min < -POSITIVITY_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    fn validate_trace(&self) -> Result<()> {
        let tr = self.trace();
        if !((tr - 1.0).norm() <= TRACE_TOL) {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        Ok(())
    }

    /// Replace the matrix by its Hermitian part `(ρ + ρ†)/2`.
    pub fn hermitize(&mut self) {
        let d = self.0.nrows();
        hermitize_slice(self.0.as_mut_slice(), d);
    }

    /// Trace distance `½‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        let diff = &self.0 - &other.0;
        0.5 * hermitian_eigenvalues(&diff).iter().map(|v| v.abs()).sum::<f64>()
    }

    /// Embed into a larger Fock space, padding with zeros.
    pub fn embed(&self, dim: usize) -> Self {
        assert!(dim >= self.dim());
        let mut m = DMatrix::zeros(dim, dim);
        m.view_mut((0, 0), (self.dim(), self.dim())).copy_from(&self.0);
        Self(m)
    }
}

pub(crate) fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let herm = (m + m.adjoint()) * C64::from(0.5);
    let mut ev: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Returns `true` when any element changed.
fn hermitize_slice(data: &mut [C64], d: usize) -> bool {
    let mut changed = false;
    for j in 0..d {
        let jj = j * d + j;
        if data[jj].im != 0.0 {
            data[jj].im = 0.0;
            changed = true;
        }
        for i in 0..j {
            let upper = data[j * d + i];
            let lower = data[i * d + j];
            if upper != lower.conj() {
                let avg = (upper + lower.conj()) * 0.5;
                data[j * d + i] = avg;
                data[i * d + j] = avg.conj();
                changed = true;
            }
        }
    }
    changed
}

/// The master-equation generator specialised to the Kerr oscillator.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    dim: usize,
    energies: Vec<f64>,
    sqrt_n: Vec<f64>,
    /// Rate of the `a` channel, `(N+1)γ`.
    decay: f64,
    /// Rate of the `a†` channel, `Nγ`.
    pump: f64,
    omega: f64,
    env: DriveEnvelope,
}

impl Liouvillian {
    pub fn new(space: &FockSpace, p: &ModelParams, env: &DriveEnvelope) -> Result<Self> {
        p.validate()?;
        env.validate()?;
        Ok(Self {
            dim: space.dim(),
            energies: bare_energies(space.dim(), p),
            sqrt_n: space.sqrt_n().to_vec(),
            decay: (p.n_bath + 1.0) * p.gamma,
            pump: p.n_bath * p.gamma,
            omega: p.omega_drive,
            env: *env,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Diagonal of `a a†` in the truncated space (the top level is empty).
    #[inline]
    fn raise_lower(&self, i: usize) -> f64 {
        if i + 1 < self.dim {
            (i + 1) as f64
        } else {
            0.0
        }
    }

    /// `dρ/dt` at time `t` for a column-major `rho`; `out` is overwritten.
    pub fn apply(&self, t: f64, rho: &[C64], out: &mut [C64]) {
        let g = self.env.value(t) * self.omega;
        self.apply_with_drive(g, rho, out);
    }

    fn apply_with_drive(&self, g: f64, rho: &[C64], out: &mut [C64]) {
        let d = self.dim;
        let s = &self.sqrt_n;
        let at = |i: usize, j: usize| rho[j * d + i];
        let minus_i = C64::new(0.0, -1.0);
        for j in 0..d {
            for i in 0..=j {
                let r = at(i, j);
                // -i [H, ρ]
                let mut comm = r * (self.energies[i] - self.energies[j]);
                let mut hop = ZERO;
                if i + 1 < d {
                    hop += at(i + 1, j) * s[i + 1];
                }
                if i > 0 {
                    hop += at(i - 1, j) * s[i];
                }
                if j > 0 {
                    hop -= at(i, j - 1) * s[j];
                }
                if j + 1 < d {
                    hop -= at(i, j + 1) * s[j + 1];
                }
                comm += hop * g;
                let mut v = comm * minus_i;
                // √((N+1)γ) a
                if j + 1 < d {
                    v += at(i + 1, j + 1) * (self.decay * s[i + 1] * s[j + 1]);
                }
                v -= r * (0.5 * self.decay * (i + j) as f64);
                // √(Nγ) a†
                if self.pump > 0.0 {
                    if i > 0 {
                        v += at(i - 1, j - 1) * (self.pump * s[i] * s[j]);
                    }
                    v -= r * (0.5 * self.pump * (self.raise_lower(i) + self.raise_lower(j)));
                }
                if i == j {
                    v.im = 0.0;
                    out[j * d + i] = v;
                } else {
                    out[j * d + i] = v;
                    out[i * d + j] = v.conj();
                }
            }
        }
    }

    /// Assemble the constant-drive generator as a banded matrix acting on
    /// the row-major vectorisation `ρ(i, j) ↦ x[i·dim + j]`.
    fn banded(&self, g: f64) -> BandMatrix {
        let d = self.dim;
        let s = &self.sqrt_n;
        let n = d * d;
        let mut band = BandMatrix::zeros(n, d + 1, d + 1);
        let idx = |i: usize, j: usize| i * d + j;
        let minus_i = C64::new(0.0, -1.0);
        let i_unit = C64::new(0.0, 1.0);
        for i in 0..d {
            for j in 0..d {
                let row = idx(i, j);
                let mut diag = minus_i * (self.energies[i] - self.energies[j]);
                diag -= C64::from(0.5 * self.decay * (i + j) as f64);
                diag -= C64::from(0.5 * self.pump * (self.raise_lower(i) + self.raise_lower(j)));
                band.add(row, row, diag);
                if i + 1 < d {
                    band.add(row, idx(i + 1, j), minus_i * (g * s[i + 1]));
                }
                if i > 0 {
                    band.add(row, idx(i - 1, j), minus_i * (g * s[i]));
                }
                if j > 0 {
                    band.add(row, idx(i, j - 1), i_unit * (g * s[j]));
                }
                if j + 1 < d {
                    band.add(row, idx(i, j + 1), i_unit * (g * s[j + 1]));
                }
                if i + 1 < d && j + 1 < d {
                    band.add(row, idx(i + 1, j + 1), C64::from(self.decay * s[i + 1] * s[j + 1]));
                }
                if self.pump > 0.0 && i > 0 && j > 0 {
                    band.add(row, idx(i - 1, j - 1), C64::from(self.pump * s[i] * s[j]));
                }
            }
        }
        band
    }
}

/// `dρ/dt` of the master equation at time `t`.
pub fn lindblad_rhs(
    rho: &DensityMatrix,
    t: f64,
    space: &FockSpace,
    p: &ModelParams,
    env: &DriveEnvelope,
) -> Result<DMatrix<C64>> {
    if rho.dim() != space.dim() {
        return Err(Error::InvalidState("state and space dimensions differ".into()));
    }
    let l = Liouvillian::new(space, p, env)?;
    let d = space.dim();
    let mut out = DMatrix::zeros(d, d);
    l.apply(t, rho.as_slice(), out.as_mut_slice());
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MasterConfig {
    pub solver: SolverConfig,
    /// Check positivity (an eigen-decomposition) at every output time.
    #[serde(default = "yes")]
    pub check_positivity: bool,
}

fn yes() -> bool {
    true
}

impl Default for MasterConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::with_tolerances(1e-8, 1e-10),
            check_positivity: true,
        }
    }
}

/// Incremental integrator of the master equation.
pub struct MasterPropagator {
    generator: Liouvillian,
    stepper: Dopri5,
    t: f64,
    state: Vec<C64>,
    check_positivity: bool,
}

impl MasterPropagator {
    pub fn new(
        rho0: &DensityMatrix,
        t0: f64,
        space: &FockSpace,
        p: &ModelParams,
        env: &DriveEnvelope,
        cfg: &MasterConfig,
    ) -> Result<Self> {
        cfg.solver.validate()?;
        if rho0.dim() != space.dim() {
            return Err(Error::InvalidState("state and space dimensions differ".into()));
        }
        rho0.validate()?;
        Ok(Self {
            generator: Liouvillian::new(space, p, env)?,
            stepper: Dopri5::new(
                rho0.dim() * rho0.dim(),
                cfg.solver.with_h_max(cfg.solver.h_max.min(env.max_step())),
            ),
            t: t0,
            state: rho0.as_slice().to_vec(),
            check_positivity: cfg.check_positivity,
        })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    /// Advance to `t_end` and return the state there.
    pub fn advance_to(&mut self, t_end: f64) -> Result<DensityMatrix> {
        let d = self.generator.dim;
        let gen = &self.generator;
        let mut rhs = |t: f64, y: &[C64], dy: &mut [C64]| gen.apply(t, y, dy);
        let mut guard = |_t: f64, y: &mut [C64]| hermitize_slice(y, d);
        self.stepper
            .advance(&mut rhs, &mut self.t, t_end, &mut self.state, &mut guard)?;
        let rho = self.state();
        let checked = if self.check_positivity {
            rho.validate()
        } else {
            rho.validate_trace()
        };
        checked.map_err(|e| Error::Integration {
            t: self.t,
            reason: format!("state left the physical set: {e}"),
        })?;
        Ok(rho)
    }

    pub fn state(&self) -> DensityMatrix {
        let d = self.generator.dim;
        DensityMatrix(DMatrix::from_column_slice(d, d, &self.state))
    }

    /// Frobenius norm of `dρ/dt` at the current state.
    pub fn residual(&self) -> f64 {
        let mut out = vec![ZERO; self.state.len()];
        self.generator.apply(self.t, &self.state, &mut out);
        out.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Evolve `rho0` from `times[0]` and return the state at every entry of
/// `times` (which must be increasing; the first entry returns `rho0`).
pub fn evolve_density(
    rho0: &DensityMatrix,
    times: &[f64],
    space: &FockSpace,
    p: &ModelParams,
    env: &DriveEnvelope,
    cfg: &MasterConfig,
) -> Result<Vec<DensityMatrix>> {
    let mut out = Vec::with_capacity(times.len());
    evolve_density_with(rho0, times, space, p, env, cfg, |_, rho| out.push(rho.clone()))?;
    Ok(out)
}

/// Like [`evolve_density`] but hands each state to `observe` instead of
/// collecting them.
pub fn evolve_density_with<O>(
    rho0: &DensityMatrix,
    times: &[f64],
    space: &FockSpace,
    p: &ModelParams,
    env: &DriveEnvelope,
    cfg: &MasterConfig,
    mut observe: O,
) -> Result<()>
where
    O: FnMut(f64, &DensityMatrix),
{
    let Some(&t0) = times.first() else {
        return Ok(());
    };
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::param("times", "must be increasing"));
    }
    let mut prop = MasterPropagator::new(rho0, t0, space, p, env, cfg)?;
    observe(t0, rho0);
    for &t in &times[1..] {
        let rho = prop.advance_to(t)?;
        observe(t, &rho);
    }
    Ok(())
}

/// `⟨a†a⟩`.
pub fn mean_excitation(rho: &DensityMatrix) -> f64 {
    (0..rho.dim()).map(|n| n as f64 * rho.0[(n, n)].re).sum()
}

/// `⟨a⟩`.
pub fn mean_amplitude(rho: &DensityMatrix) -> C64 {
    // Tr(ρ a) = Σ ρ_{n+1,n} √(n+1)
    (0..rho.dim() - 1)
        .map(|n| rho.0[(n + 1, n)] * ((n + 1) as f64).sqrt())
        .sum()
}

/// `Tr ρ²`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.0.iter().map(|v| v.norm_sqr()).sum()
}

/// Excitation-number distribution `p(n) = ρₙₙ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NumberDistribution(Vec<f64>);

/// Populations below this are treated as zero when locating extrema, so
/// round-off in the empty tail does not create spurious extrema.
const EXTREMA_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Extrema {
    pub maxima: Vec<usize>,
    pub minima: Vec<usize>,
}

impl NumberDistribution {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.iter().any(|v| !(*v >= -1e-10 && *v <= 1.0 + 1e-10)) {
            return Err(Error::InvalidState("probabilities must lie in [0, 1]".into()));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidState(format!("probabilities sum to {total}")));
        }
        Ok(Self(p))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn mean(&self) -> f64 {
        self.0.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }

    /// Local maxima and minima of `p(n)`.
    ///
    /// Plateaus count once, at their smallest `n`. `n = 0` is a maximum when
    /// it exceeds its neighbour; the top level is never reported since the
    /// truncation cuts it off.
    pub fn extrema(&self) -> Extrema {
        // collapse plateaus into (start, value) runs
        let mut runs: Vec<(usize, f64)> = Vec::new();
        for (n, &v) in self.0.iter().enumerate() {
            let v = if v < EXTREMA_FLOOR { 0.0 } else { v };
            match runs.last() {
                Some(&(_, last)) if last == v => {}
                _ => runs.push((n, v)),
            }
        }
        let mut out = Extrema::default();
        for k in 0..runs.len() {
            let (n, v) = runs[k];
            let right = runs.get(k + 1).map(|r| r.1);
            let Some(right) = right else { break };
            if k == 0 {
                if v > right {
                    out.maxima.push(n);
                }
                continue;
            }
            let left = runs[k - 1].1;
            if v > left && v > right {
                out.maxima.push(n);
            } else if v < left && v < right {
                out.minima.push(n);
            }
        }
        out
    }
}

pub fn number_distribution(rho: &DensityMatrix) -> NumberDistribution {
    NumberDistribution((0..rho.dim()).map(|n| rho.0[(n, n)].re.max(0.0)).collect())
}

pub fn distribution_extrema(p: &NumberDistribution) -> Extrema {
    p.extrema()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SteadyStateMethod {
    /// Solve `L ρ = 0` with the banded generator, fixing `ρ₀₀` and
    /// renormalising.
    #[default]
    Direct,
    /// Integrate until `‖dρ/dt‖_F < eps`.
    Integrate,
}

const POLISH_SOLVER: SolverConfig = SolverConfig {
    rtol: 1e-13,
    atol: 1e-16,
    h_max: f64::INFINITY,
    h_min: 1e-14,
    max_steps: 50_000_000,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SteadyStateConfig {
    #[serde(default)]
    pub method: SteadyStateMethod,
    /// Convergence threshold on the Frobenius norm of `dρ/dt`.
    pub eps: f64,
    /// Give up integrating after this time.
    pub t_max: f64,
    /// Interval between convergence checks while integrating.
    pub check_interval: f64,
    pub master: MasterConfig,
}

impl Default for SteadyStateConfig {
    fn default() -> Self {
        Self {
            method: SteadyStateMethod::Direct,
            eps: 1e-10,
            t_max: 1e4,
            check_interval: 1.0,
            master: MasterConfig {
                solver: SolverConfig::with_tolerances(1e-10, 1e-13),
                check_positivity: false,
            },
        }
    }
}

impl SteadyStateConfig {
    pub fn integrate() -> Self {
        Self {
            method: SteadyStateMethod::Integrate,
            ..Self::default()
        }
    }
}

/// Stationary state under constant drive.
pub fn steady_state(
    space: &FockSpace,
    p: &ModelParams,
    env: &DriveEnvelope,
    cfg: &SteadyStateConfig,
) -> Result<DensityMatrix> {
    steady_state_from(&DensityMatrix::vacuum(space.dim()), space, p, env, cfg)
}

/// Stationary state, integrating from `rho0` when the method integrates.
pub fn steady_state_from(
    rho0: &DensityMatrix,
    space: &FockSpace,
    p: &ModelParams,
    env: &DriveEnvelope,
    cfg: &SteadyStateConfig,
) -> Result<DensityMatrix> {
    if !env.is_constant() {
        return Err(Error::Unsupported(
            "steady state requires a constant drive; pulsed dynamics settles on a periodic orbit"
                .into(),
        ));
    }
    let generator = Liouvillian::new(space, p, env)?;
    let rho = match cfg.method {
        SteadyStateMethod::Direct => direct_steady_state(&generator, p.omega_drive)?,
        SteadyStateMethod::Integrate => {
            let mut prop = MasterPropagator::new(rho0, 0.0, space, p, env, &cfg.master)?;
            let mut polished = false;
            loop {
                let residual = prop.residual();
                if residual < cfg.eps {
                    break prop.state();
                }
                if prop.time() >= cfg.t_max {
                    return Err(Error::Integration {
                        t: prop.time(),
                        reason: format!("no steady state within t_max (residual {residual:e})"),
                    });
                }
                // Near the fixed point the relative tolerance on the large
                // populations, amplified by ‖L‖, sets a floor on the residual;
                // finish with tolerances near round-off.
                if !polished && residual < cfg.eps.sqrt() {
                    let tight = MasterConfig {
                        solver: cfg.master.solver.with_tolerances_of(&POLISH_SOLVER),
                        ..cfg.master
                    };
                    let t = prop.time();
                    prop = MasterPropagator::new(&prop.state(), t, space, p, env, &tight)?;
                    polished = true;
                }
                let next = (prop.time() + cfg.check_interval).min(cfg.t_max);
                prop.advance_to(next)?;
            }
        }
    };
    rho.validate()?;
    Ok(rho)
}

fn direct_steady_state(generator: &Liouvillian, omega: f64) -> Result<DensityMatrix> {
    let d = generator.dim;
    let mut band = generator.banded(omega);
    // Trace preservation makes one equation redundant; replace the (0,0)
    // equation by the normalisation ρ₀₀ = 1 and rescale afterwards.
    band.clear_row(0);
    band.set(0, 0, C64::new(1.0, 0.0));
    let mut b = vec![ZERO; d * d];
    b[0] = C64::new(1.0, 0.0);
    let x = band.solve(b)?;
    // x is row-major; DMatrix is column-major
    let mut m = DMatrix::from_fn(d, d, |i, j| x[i * d + j]);
    let tr = m.trace();
    m /= tr;
    let mut rho = DensityMatrix(m);
    rho.hermitize();
    Ok(rho)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutoDimensionConfig {
    pub start: usize,
    pub max: usize,
    /// Bound on the population of the highest retained level.
    pub top_population: f64,
    /// Bound on the change of `⟨a†a⟩` between successive sizes.
    pub mean_change: f64,
}

impl Default for AutoDimensionConfig {
    fn default() -> Self {
        Self {
            start: 20,
            max: 320,
            top_population: 1e-6,
            mean_change: 1e-6,
        }
    }
}

/// Smallest dimension of the doubling sequence `start, 2·start, …` whose
/// steady state has a negligible top-level population and whose mean
/// excitation agrees with the previous size.
pub fn auto_dimension(
    p: &ModelParams,
    cfg: &AutoDimensionConfig,
) -> Result<(usize, DensityMatrix)> {
    let ss = SteadyStateConfig::default();
    let mut dim = cfg.start.max(2);
    let mut previous: Option<f64> = None;
    loop {
        let space = FockSpace::new(dim)?;
        let rho = steady_state(&space, p, &DriveEnvelope::Constant, &ss)?;
        let mean = mean_excitation(&rho);
        let top = rho.element(dim - 1, dim - 1).re;
        let settled = previous.is_some_and(|prev| (prev - mean).abs() < cfg.mean_change);
        if top < cfg.top_population && settled {
            return Ok((dim, rho));
        }
        if dim * 2 > cfg.max {
            return Err(Error::Unsupported(format!(
                "Fock truncation did not converge below dimension {}",
                cfg.max
            )));
        }
        previous = Some(mean);
        dim *= 2;
    }
}
