//! Uniform time grids and discrete hitting curves.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Locale-independent text form of `v` that parses back to the same value;
/// very large or small magnitudes use exponent notation.
pub fn csv_number(v: f64) -> String {
    format!("{v:?}")
}

/// Uniform discretization `t_k = k * dt`, `k = 0..=n_steps`.
///
/// Curves on a grid have one entry per interval `(t_k, t_{k+1}]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    dt: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(dt: f64, n_steps: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "time step must be positive, got {dt}"
            )));
        }
        if n_steps == 0 {
            return Err(Error::InvalidParams("time grid needs at least one step".into()));
        }
        Ok(Self { dt, n_steps })
    }

    /// Grid covering `[0, horizon]` with step `dt`; the step count is rounded
    /// to the nearest integer so that `horizon = 5, dt = 1e-3` gives 5000.
    pub fn with_horizon(dt: f64, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "time step must be positive, got {dt}"
            )));
        }
        let n = (horizon / dt).round();
        if n < 1.0 {
            return Err(Error::InvalidParams(format!(
                "horizon {horizon} s is shorter than one step of {dt} s"
            )));
        }
        Self::new(dt, n as usize)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.n_steps as f64
    }

    /// `t_k = k * dt`.
    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    /// End times `t_1, ..., t_n` of every interval.
    pub fn end_times(&self) -> impl Iterator<Item = f64> + '_ {
        (1..=self.n_steps).map(move |k| self.time(k))
    }

    /// Per-interval masses `F(t_{k+1}) - F(t_k)` of a cumulative function.
    pub fn interval_masses(&self, cdf: impl Fn(f64) -> f64) -> Vec<f64> {
        let mut prev = cdf(0.0);
        (1..=self.n_steps)
            .map(|k| {
                let next = cdf(self.time(k));
                let mass = next - prev;
                prev = next;
                mass
            })
            .collect()
    }

    pub(crate) fn same_as(&self, other: &TimeGrid) -> bool {
        self.n_steps == other.n_steps && (self.dt - other.dt).abs() <= 1e-12 * self.dt
    }
}

/// Hitting probability of one receiver on a time grid.
///
/// `step_prob[k]` is the probability of absorption during `(t_k, t_{k+1}]`
/// and `cumulative[k]` the running sum up to and including interval `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HittingCurve {
    pub grid: TimeGrid,
    pub step_prob: Vec<f64>,
    pub cumulative: Vec<f64>,
    /// Total negative mass removed when clamping model steps to zero.
    pub negative_residual: f64,
}

impl HittingCurve {
    /// Builds a curve from per-interval masses; negative entries are clamped
    /// to zero and their magnitude accumulated in `negative_residual`.
    pub fn from_steps(grid: TimeGrid, raw: Vec<f64>) -> Self {
        debug_assert_eq!(raw.len(), grid.n_steps());
        let mut residual = 0.0;
        let step_prob: Vec<f64> = raw
            .into_iter()
            .map(|p| {
                if p < 0.0 {
                    residual -= p;
                    0.0
                } else {
                    p
                }
            })
            .collect();
        let cumulative = step_prob
            .iter()
            .scan(0.0, |acc, &p| {
                *acc += p;
                Some(*acc)
            })
            .collect();
        Self {
            grid,
            step_prob,
            cumulative,
            negative_residual: residual,
        }
    }

    /// Builds a curve from cumulative values at `t_1..t_n`; steps are the
    /// successive differences.
    pub fn from_cumulative(grid: TimeGrid, cumulative: Vec<f64>) -> Self {
        debug_assert_eq!(cumulative.len(), grid.n_steps());
        let step_prob = cumulative
            .iter()
            .scan(0.0, |prev, &c| {
                let d = c - *prev;
                *prev = c;
                Some(d)
            })
            .collect();
        Self {
            grid,
            step_prob,
            cumulative,
            negative_residual: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.step_prob.len()
    }

    pub fn is_empty(&self) -> bool {
        self.step_prob.is_empty()
    }

    pub fn final_fraction(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    /// Step masses divided by `dt`: the mean hitting rate per interval.
    pub fn mean_rate(&self) -> Vec<f64> {
        let dt = self.grid.dt();
        self.step_prob.iter().map(|p| p / dt).collect()
    }

    /// First `m` intervals of the curve on the correspondingly shorter grid.
    pub fn truncated(&self, m: usize) -> Result<Self> {
        let grid = TimeGrid::new(self.grid.dt(), m)?;
        if m > self.len() {
            return Err(Error::GridMismatch(format!(
                "cannot truncate {} steps to {m}",
                self.len()
            )));
        }
        Ok(Self::from_steps(grid, self.step_prob[..m].to_vec()))
    }
}
