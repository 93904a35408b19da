//! Adaptive Dormand–Prince 5(4) integrator over complex state vectors.
//!
//! Both the vectorised density matrix and the classical amplitude are stored
//! as `[C64]`, so one stepper serves every deterministic engine.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::C64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on the step size.
    #[serde(
        default = "SolverConfig::default_h_max",
        skip_serializing_if = "is_unbounded"
    )]
    pub h_max: f64,
    /// Steps smaller than this abort the integration.
    #[serde(default = "SolverConfig::default_h_min")]
    pub h_min: f64,
    #[serde(default = "SolverConfig::default_max_steps")]
    pub max_steps: u64,
}

fn is_unbounded(v: &f64) -> bool {
    v.is_infinite()
}

impl SolverConfig {
    fn default_h_max() -> f64 {
        f64::INFINITY
    }
    fn default_h_min() -> f64 {
        1e-14
    }
    fn default_max_steps() -> u64 {
        50_000_000
    }

    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            ..Self::default()
        }
    }

    /// Keep the step bounds but take the tolerances of `other`.
    pub fn with_tolerances_of(self, other: &SolverConfig) -> Self {
        Self {
            rtol: other.rtol,
            atol: other.atol,
            ..self
        }
    }

    pub fn with_h_max(self, h_max: f64) -> Self {
        Self { h_max, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0) || !(self.atol > 0.0) {
            return Err(Error::param("solver", "tolerances must be positive"));
        }
        if !(self.h_max > 0.0) || !(self.h_min >= 0.0) {
            return Err(Error::param("solver", "step bounds must be positive"));
        }
        Ok(())
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            h_max: Self::default_h_max(),
            h_min: Self::default_h_min(),
            max_steps: Self::default_max_steps(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: u64,
    pub rejected: u64,
    pub evaluations: u64,
}

// Dormand–Prince tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Reusable Dormand–Prince stepper.
///
/// The stepper remembers its last step size and the derivative at the end of
/// the last accepted step, so repeated calls to [`Dopri5::advance`] between
/// output times do not restart the step-size controller.
#[derive(Debug, Clone)]
pub struct Dopri5 {
    cfg: SolverConfig,
    k: [Vec<C64>; 7],
    y_stage: Vec<C64>,
    y_new: Vec<C64>,
    h: Option<f64>,
    fsal_valid: bool,
    stats: StepStats,
}

impl Dopri5 {
    pub fn new(len: usize, cfg: SolverConfig) -> Self {
        let zero = vec![C64::new(0.0, 0.0); len];
        Self {
            cfg,
            k: std::array::from_fn(|_| zero.clone()),
            y_stage: zero.clone(),
            y_new: zero,
            h: None,
            fsal_valid: false,
            stats: StepStats::default(),
        }
    }

    pub fn stats(&self) -> StepStats {
        self.stats
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    /// Forget the cached derivative; required after the state is modified
    /// outside the stepper.
    pub fn invalidate(&mut self) {
        self.fsal_valid = false;
    }

    /// Integrate `y' = f(t, y)` from `t` to `t_end` in place.
    ///
    /// `after_step` runs after every accepted step and may modify the state;
    /// it must return `true` when it did.
    pub fn advance<F, G>(
        &mut self,
        f: &mut F,
        t: &mut f64,
        t_end: f64,
        y: &mut [C64],
        after_step: &mut G,
    ) -> Result<()>
    where
        F: FnMut(f64, &[C64], &mut [C64]),
        G: FnMut(f64, &mut [C64]) -> bool,
    {
        let span = t_end - *t;
        if span <= 0.0 {
            return Ok(());
        }
        if !self.fsal_valid {
            f(*t, y, &mut self.k[0]);
            self.stats.evaluations += 1;
            self.fsal_valid = true;
        }
        let mut h = match self.h {
            Some(h) => h,
            None => self.initial_step(f, *t, y),
        }
        .min(self.cfg.h_max);

        let mut steps = 0u64;
        while *t < t_end {
            steps += 1;
            if steps > self.cfg.max_steps {
                return Err(Error::Integration {
                    t: *t,
                    reason: format!("exceeded {} steps", self.cfg.max_steps),
                });
            }
            let remaining = t_end - *t;
            let last = h >= remaining * (1.0 - 1e-12);
            let h_step = if last { remaining } else { h };
            let err = self.trial_step(f, *t, h_step, y);
            if !err.is_finite() {
                self.stats.rejected += 1;
                h = h_step * 0.1;
                if h < self.cfg.h_min {
                    return Err(Error::Integration {
                        t: *t,
                        reason: "non-finite derivative".into(),
                    });
                }
                continue;
            }
            if err <= 1.0 {
                self.stats.accepted += 1;
                *t = if last { t_end } else { *t + h_step };
                y.copy_from_slice(&self.y_new);
                self.k.swap(0, 6);
                if after_step(*t, y) {
                    f(*t, y, &mut self.k[0]);
                    self.stats.evaluations += 1;
                }
                let fac = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                // keep the controller's step when the last step was clipped
                // to land on `t_end`
                let base = if last { h.max(h_step) } else { h_step };
                h = (base * fac).min(self.cfg.h_max);
            } else {
                self.stats.rejected += 1;
                let fac = (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
                h = h_step * fac;
                if h < self.cfg.h_min {
                    return Err(Error::Integration {
                        t: *t,
                        reason: format!("step size underflow (h = {h:e})"),
                    });
                }
            }
        }
        self.h = Some(h);
        Ok(())
    }

    fn initial_step<F>(&mut self, f: &mut F, t: f64, y: &[C64]) -> f64
    where
        F: FnMut(f64, &[C64], &mut [C64]),
    {
        let sc = |v: &C64| self.cfg.atol + self.cfg.rtol * v.norm();
        let n = y.len().max(1) as f64;
        let d0 = (y.iter().map(|v| (v.norm() / sc(v)).powi(2)).sum::<f64>() / n).sqrt();
        let d1 = (y
            .iter()
            .zip(&self.k[0])
            .map(|(v, k)| (k.norm() / sc(v)).powi(2))
            .sum::<f64>()
            / n)
            .sqrt();
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        for (s, (v, k)) in self.y_stage.iter_mut().zip(y.iter().zip(&self.k[0])) {
            *s = v + k * h0;
        }
        f(t + h0, &self.y_stage, &mut self.k[1]);
        self.stats.evaluations += 1;
        let d2 = (y
            .iter()
            .zip(self.k[1].iter().zip(&self.k[0]))
            .map(|(v, (k1, k0))| ((k1 - k0).norm() / sc(v)).powi(2))
            .sum::<f64>()
            / n)
            .sqrt()
            / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1)
    }

    /// One trial step; fills `y_new` and `k[6]`, returns the scaled error.
    fn trial_step<F>(&mut self, f: &mut F, t: f64, h: f64, y: &[C64]) -> f64
    where
        F: FnMut(f64, &[C64], &mut [C64]),
    {
        let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
        let ys = &mut self.y_stage;

        for i in 0..y.len() {
            ys[i] = y[i] + k1[i] * (h * A21);
        }
        f(t + C2 * h, ys, k2);
        for i in 0..y.len() {
            ys[i] = y[i] + (k1[i] * A31 + k2[i] * A32) * h;
        }
        f(t + C3 * h, ys, k3);
        for i in 0..y.len() {
            ys[i] = y[i] + (k1[i] * A41 + k2[i] * A42 + k3[i] * A43) * h;
        }
        f(t + C4 * h, ys, k4);
        for i in 0..y.len() {
            ys[i] = y[i] + (k1[i] * A51 + k2[i] * A52 + k3[i] * A53 + k4[i] * A54) * h;
        }
        f(t + C5 * h, ys, k5);
        for i in 0..y.len() {
            ys[i] = y[i]
                + (k1[i] * A61 + k2[i] * A62 + k3[i] * A63 + k4[i] * A64 + k5[i] * A65) * h;
        }
        f(t + h, ys, k6);
        let y_new = &mut self.y_new;
        for i in 0..y.len() {
            y_new[i] = y[i]
                + (k1[i] * A71 + k3[i] * A73 + k4[i] * A74 + k5[i] * A75 + k6[i] * A76) * h;
        }
        f(t + h, y_new, k7);
        self.stats.evaluations += 6;

        let mut acc = 0.0;
        for i in 0..y.len() {
            let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7)
                * h;
            let sc = self.cfg.atol + self.cfg.rtol * y[i].norm().max(y_new[i].norm());
            acc += e.norm_sqr() / (sc * sc);
        }
        (acc / y.len().max(1) as f64).sqrt()
    }
}

/// Integrate from `t0` through each time in `t_out` (increasing), calling
/// `observe` with the state at every output time.
pub fn integrate_to_times<F, O>(
    f: &mut F,
    t0: f64,
    y0: &[C64],
    t_out: &[f64],
    cfg: SolverConfig,
    mut observe: O,
) -> Result<StepStats>
where
    F: FnMut(f64, &[C64], &mut [C64]),
    O: FnMut(f64, &[C64]),
{
    cfg.validate()?;
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut stepper = Dopri5::new(y.len(), cfg);
    for &target in t_out {
        if target < t {
            return Err(Error::param("t_out", "output times must be increasing"));
        }
        stepper.advance(f, &mut t, target, &mut y, &mut |_, _| false)?;
        observe(t, &y);
    }
    Ok(stepper.stats())
}
