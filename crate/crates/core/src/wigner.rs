//! Wigner functions on Cartesian phase-space grids, `α = x + iy`.
//!
//! The function is evaluated as the expectation of the displaced parity,
//!
//! ```text
//! W(α) = (2/π) Σₙ (−1)ⁿ ⟨n| D†(α) ρ D(α) |n⟩,
//! ```
//!
//! whose Fock matrix elements have the closed form
//! `(2/π)(−1)ⁿ ℓₙ⁽ᵠ⁾(4|α|²) e^{−iqθ}` for the `(n, n+q)` entry, with
//! `ℓₙ⁽ᵠ⁾(u) = √(n!/(n+q)!) u^{q/2} e^{−u/2} Lₙ⁽ᵠ⁾(u)` evaluated by a
//! normalised three-term recurrence. No displacement matrix is truncated,
//! so the result is exact for the truncated `ρ`.
//!
//! The normalisation is `∬W dx dy = 1`, so `|W| ≤ 2/π`.

use std::f64::consts::FRAC_2_PI;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::master::DensityMatrix;
use crate::model::C64;

/// Allowed `|∬W − 1|` before a grid is flagged as too small.
pub const NORMALIZATION_TOL: f64 = 1e-2;
/// Peaks lower than this fraction of the maximum are ignored.
pub const PEAK_THRESHOLD: f64 = 1e-3;
pub const MIN_POINTS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub y_min: f64,
    pub y_max: f64,
    pub ny: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self::square(5.0, 201)
    }
}

impl GridSpec {
    /// `n × n` points over `[−half_width, half_width]²`.
    pub fn square(half_width: f64, n: usize) -> Self {
        Self {
            x_min: -half_width,
            x_max: half_width,
            nx: n,
            y_min: -half_width,
            y_max: half_width,
            ny: n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < MIN_POINTS || self.ny < MIN_POINTS {
            return Err(Error::param(
                "grid",
                format!("need at least {MIN_POINTS} points per axis"),
            ));
        }
        if !(self.x_max > self.x_min) || !(self.y_max > self.y_min) {
            return Err(Error::param("grid", "ranges must be non-empty"));
        }
        Ok(())
    }

    pub fn xs(&self) -> Vec<f64> {
        linspace(self.x_min, self.x_max, self.nx)
    }

    pub fn ys(&self) -> Vec<f64> {
        linspace(self.y_min, self.y_max, self.ny)
    }

    fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    fn dy(&self) -> f64 {
        (self.y_max - self.y_min) / (self.ny - 1) as f64
    }

    /// Same spacing (or finer) over ranges grown by `factor` about the centre.
    fn expanded(&self, factor: f64) -> Self {
        let grow = |lo: f64, hi: f64, n: usize| {
            let (c, h) = (0.5 * (lo + hi), 0.5 * (hi - lo) * factor);
            let n = (((n - 1) as f64 * factor).ceil() as usize + 1) | 1;
            (c - h, c + h, n)
        };
        let (x_min, x_max, nx) = grow(self.x_min, self.x_max, self.nx);
        let (y_min, y_max, ny) = grow(self.y_min, self.y_max, self.ny);
        Self { x_min, x_max, nx, y_min, y_max, ny }
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    let h = (b - a) / (n - 1) as f64;
    (0..n).map(|i| if i + 1 == n { b } else { a + i as f64 * h }).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WignerGrid {
    pub spec: GridSpec,
    /// Row-major samples: `values[j * nx + i] = W(xs[i] + i·ys[j])`.
    pub values: Vec<f64>,
    /// `∬W dx dy − 1` by the trapezoidal rule.
    pub normalization_residual: f64,
    /// Set when the residual exceeds [`NORMALIZATION_TOL`]: the grid does
    /// not cover the state.
    pub undersized: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    pub x: f64,
    pub y: f64,
    pub value: f64,
}

impl Peak {
    pub fn alpha(&self) -> C64 {
        C64::new(self.x, self.y)
    }
}

impl WignerGrid {
    pub fn xs(&self) -> Vec<f64> {
        self.spec.xs()
    }

    pub fn ys(&self) -> Vec<f64> {
        self.spec.ys()
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.spec.nx + i]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Trapezoidal `∬ f(W) dx dy`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        let (nx, ny) = (self.spec.nx, self.spec.ny);
        let mut acc = 0.0;
        for j in 0..ny {
            let wy = if j == 0 || j + 1 == ny { 0.5 } else { 1.0 };
            let mut row = 0.0;
            for i in 0..nx {
                let wx = if i == 0 || i + 1 == nx { 0.5 } else { 1.0 };
                row += wx * f(self.values[j * nx + i]);
            }
            acc += wy * row;
        }
        acc * self.spec.dx() * self.spec.dy()
    }

    /// Marginal `∫ W(x, y) dy` at each `x`.
    pub fn x_marginal(&self) -> Vec<f64> {
        let (nx, ny) = (self.spec.nx, self.spec.ny);
        let dy = self.spec.dy();
        (0..nx)
            .map(|i| {
                (0..ny)
                    .map(|j| {
                        let w = if j == 0 || j + 1 == ny { 0.5 } else { 1.0 };
                        w * self.values[j * nx + i]
                    })
                    .sum::<f64>()
                    * dy
            })
            .collect()
    }

    /// Write the grid as CSV: a header of `x` values, then one row per `y`
    /// led by that `y`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let xs = self.xs();
        write!(out, "y\\x")?;
        for x in &xs {
            write!(out, ",{x}")?;
        }
        writeln!(out)?;
        for (j, y) in self.ys().iter().enumerate() {
            write!(out, "{y}")?;
            for i in 0..xs.len() {
                write!(out, ",{:.12e}", self.value(i, j))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn metadata(&self) -> WignerMetadata {
        WignerMetadata {
            grid: self.spec,
            normalization: "integral W dx dy = 1, alpha = x + i y".into(),
            normalization_residual: self.normalization_residual,
            undersized: self.undersized,
            min: self.min(),
            max: self.max(),
            negativity_volume: negativity_volume(self),
            peaks: find_peaks(self),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WignerMetadata {
    pub grid: GridSpec,
    pub normalization: String,
    pub normalization_residual: f64,
    pub undersized: bool,
    pub min: f64,
    pub max: f64,
    pub negativity_volume: f64,
    pub peaks: Vec<Peak>,
}

/// Coefficients of `W` at a single phase-space radius, reused across
/// angles.
struct Evaluator<'a> {
    rho: &'a DensityMatrix,
    ln_fact: Vec<f64>,
    /// `ℓₙ⁽ᵠ⁾` for the current radius, indexed `[q][n]`.
    ell: Vec<Vec<f64>>,
}

impl<'a> Evaluator<'a> {
    fn new(rho: &'a DensityMatrix) -> Self {
        let d = rho.dim();
        let mut ln_fact = vec![0.0; d + 1];
        for k in 1..=d {
            ln_fact[k] = ln_fact[k - 1] + (k as f64).ln();
        }
        let ell = (0..d).map(|q| vec![0.0; d - q]).collect();
        Self { rho, ln_fact, ell }
    }

    fn load_radius(&mut self, r2: f64) {
        let u = 4.0 * r2;
        for (q, row) in self.ell.iter_mut().enumerate() {
            let qf = q as f64;
            let l0 = if q == 0 {
                (-0.5 * u).exp()
            } else if u == 0.0 {
                0.0
            } else {
                (-0.5 * u + 0.5 * qf * u.ln() - 0.5 * self.ln_fact[q]).exp()
            };
            row[0] = l0;
            if row.len() > 1 {
                row[1] = l0 * (1.0 + qf - u) / (1.0 + qf).sqrt();
            }
            for n in 1..row.len().saturating_sub(1) {
                let nf = n as f64;
                row[n + 1] = ((2.0 * nf + 1.0 + qf - u) * row[n]
                    - (nf * (nf + qf)).sqrt() * row[n - 1])
                    / ((nf + 1.0) * (nf + 1.0 + qf)).sqrt();
            }
        }
    }

    fn value(&self, theta: f64) -> f64 {
        let d = self.rho.dim();
        let m = self.rho.matrix();
        let mut acc = 0.0;
        for n in 0..d {
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * m[(n, n)].re * self.ell[0][n];
        }
        for q in 1..d {
            let phase = C64::from_polar(1.0, -(q as f64) * theta);
            let mut s = C64::new(0.0, 0.0);
            for n in 0..d - q {
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                s += m[(n + q, n)] * (sign * self.ell[q][n]);
            }
            acc += 2.0 * (s * phase).re;
        }
        FRAC_2_PI * acc
    }
}

/// `W(α)` at a single point.
pub fn wigner_at(rho: &DensityMatrix, alpha: C64) -> f64 {
    let mut ev = Evaluator::new(rho);
    ev.load_radius(alpha.norm_sqr());
    ev.value(alpha.arg())
}

/// Sample the Wigner function of `rho` on `spec`.
pub fn wigner_grid(rho: &DensityMatrix, spec: &GridSpec) -> Result<WignerGrid> {
    spec.validate()?;
    let xs = spec.xs();
    let ys = spec.ys();
    let values: Vec<f64> = ys
        .par_iter()
        .flat_map_iter(|&y| {
            let mut ev = Evaluator::new(rho);
            xs.iter()
                .map(|&x| {
                    ev.load_radius(x * x + y * y);
                    ev.value(y.atan2(x))
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let mut grid = WignerGrid {
        spec: *spec,
        values,
        normalization_residual: 0.0,
        undersized: false,
    };
    grid.normalization_residual = grid.integrate(|w| w) - 1.0;
    grid.undersized = grid.normalization_residual.abs() > NORMALIZATION_TOL;
    Ok(grid)
}

/// Like [`wigner_grid`] but grows the ranges (keeping the spacing) until the
/// normalisation check passes, up to `max_expansions` times.
pub fn wigner_grid_auto(
    rho: &DensityMatrix,
    spec: &GridSpec,
    max_expansions: usize,
) -> Result<WignerGrid> {
    let mut spec = *spec;
    let mut grid = wigner_grid(rho, &spec)?;
    for _ in 0..max_expansions {
        if !grid.undersized {
            break;
        }
        spec = spec.expanded(1.5);
        grid = wigner_grid(rho, &spec)?;
    }
    Ok(grid)
}

/// Volume of the negative part, `∬|W| − ∬W = 2∬max(−W, 0)`.
///
/// Equal to `∬|W| − 1` on a normalised grid, but exactly zero for a
/// non-negative function whatever the quadrature error.
pub fn negativity_volume(w: &WignerGrid) -> f64 {
    2.0 * w.integrate(|v| (-v).max(0.0))
}

/// Strict local maxima over the 8 neighbours, above
/// [`PEAK_THRESHOLD`]`·max W`, sorted by decreasing value.
pub fn find_peaks(w: &WignerGrid) -> Vec<Peak> {
    let (nx, ny) = (w.spec.nx, w.spec.ny);
    let floor = PEAK_THRESHOLD * w.max();
    let xs = w.xs();
    let ys = w.ys();
    let mut peaks = Vec::new();
    for j in 1..ny - 1 {
        for i in 1..nx - 1 {
            let v = w.value(i, j);
            if v <= floor {
                continue;
            }
            let is_peak = (j - 1..=j + 1)
                .flat_map(|jj| (i - 1..=i + 1).map(move |ii| (ii, jj)))
                .filter(|&(ii, jj)| (ii, jj) != (i, j))
                .all(|(ii, jj)| v > w.value(ii, jj));
            if is_peak {
                peaks.push(Peak {
                    x: xs[i],
                    y: ys[j],
                    value: v,
                });
            }
        }
    }
    peaks.sort_by(|a, b| b.value.total_cmp(&a.value));
    peaks
}
