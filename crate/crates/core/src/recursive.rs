//! Discrete-time recursive SIMO estimator and its one-expansion approximation.
//!
//! Every receiver starts from its single-receiver response. Molecules that
//! receiver `j` absorbed during interval `k` would, had `j` been absent, have
//! kept diffusing; they are treated as re-released from `j`'s virtual release
//! point at the end of that interval, and the part of them that would then
//! reach receiver `i` during interval `n` is removed from `i`'s response:
//!
//! ```text
//! p_i[n] = s_i[n] - sum_{j != i} sum_{k < n} p_j[k] * q_{j->i}[n - 1 - k]
//! ```
//!
//! `s_i` and `q_{j->i}` are exact per-interval masses (CDF differences) of the
//! single-receiver response from the transmitter and from `j`'s release
//! point. The comprehensive model feeds the SIMO responses `p_j` back into
//! the sum; the approximation uses the single-receiver `s_j` instead.

use log::warn;

use crate::curve::{HittingCurve, TimeGrid};
use crate::error::{Error, Result};
use crate::geometry::Topology;
use crate::siso::{siso_cdf, SisoParams};

/// Negative step mass beyond which the recursion reports overshoot.
pub const NEGATIVE_MASS_WARN: f64 = 1e-9;

/// Single-receiver curve with exact interval masses.
pub fn siso_curve(p: &SisoParams, grid: &TimeGrid) -> HittingCurve {
    HittingCurve::from_steps(*grid, grid.interval_masses(|t| siso_cdf(t, p)))
}

/// Transmitter-to-receiver masses `s_i` and re-release kernels `q_{j->i}`.
struct Kernels {
    direct: Vec<Vec<f64>>,
    /// `cross[i][j]`, reversed in time so that the convolution is a plain
    /// dot product over aligned slices. Empty on the diagonal.
    cross_rev: Vec<Vec<Vec<f64>>>,
}

impl Kernels {
    fn build(topology: &Topology, grid: &TimeGrid) -> Result<Self> {
        let n_rx = topology.len();
        let direct = (0..n_rx)
            .map(|i| {
                let p = SisoParams::from_topology(topology, i)?;
                Ok(grid.interval_masses(|t| siso_cdf(t, &p)))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut cross_rev = vec![vec![Vec::new(); n_rx]; n_rx];
        for (i, row) in cross_rev.iter_mut().enumerate() {
            for (j, slot) in row.iter_mut().enumerate() {
                if i == j {
                    continue;
                }
                let r0 = topology.cross_distance(j, i)?;
                let p = SisoParams::new(r0, topology.receivers()[i].radius, topology.diffusion())?;
                let mut q = grid.interval_masses(|t| siso_cdf(t, &p));
                q.reverse();
                *slot = q;
            }
        }
        Ok(Self { direct, cross_rev })
    }
}

/// Dot product with four independent accumulators.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let k = 4 * c;
        acc[0] += a[k] * b[k];
        acc[1] += a[k + 1] * b[k + 1];
        acc[2] += a[k + 2] * b[k + 2];
        acc[3] += a[k + 3] * b[k + 3];
    }
    let mut tail = 0.0;
    for k in 4 * chunks..a.len() {
        tail += a[k] * b[k];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `sum_{k < n} source[k] * q[n - 1 - k]` with `q` stored reversed.
fn delayed_convolution(source: &[f64], q_rev: &[f64], n: usize) -> f64 {
    let len = q_rev.len();
    dot(&source[..n], &q_rev[len - n..])
}

fn finish(grid: &TimeGrid, raw: Vec<Vec<f64>>, model: &str) -> Vec<HittingCurve> {
    raw.into_iter()
        .enumerate()
        .map(|(i, steps)| {
            let worst = steps.iter().copied().fold(0.0f64, f64::min);
            if worst < -NEGATIVE_MASS_WARN {
                warn!(
                    "{model}: receiver {} has negative step mass {worst:e} (dt = {} s); clamped to zero",
                    i + 1,
                    grid.dt()
                );
            }
            HittingCurve::from_steps(*grid, steps)
        })
        .collect()
}

fn require_receivers(topology: &Topology, exact: Option<usize>) -> Result<()> {
    match exact {
        Some(n) if topology.len() != n => Err(Error::ReceiverCount {
            expected: "exactly 2",
            found: topology.len(),
        }),
        _ if topology.is_empty() => Err(Error::ReceiverCount {
            expected: "at least 1",
            found: 0,
        }),
        _ => Ok(()),
    }
}

/// Comprehensive recursive model for any number of receivers.
///
/// All receivers advance together in one forward pass; step `n` of each
/// curve only reads steps `< n` of the others.
pub fn recursive_nrx(topology: &Topology, grid: &TimeGrid) -> Result<Vec<HittingCurve>> {
    require_receivers(topology, None)?;
    let kernels = Kernels::build(topology, grid)?;
    let n_rx = topology.len();
    let n_steps = grid.n_steps();
    let mut simo: Vec<Vec<f64>> = vec![vec![0.0; n_steps]; n_rx];
    for n in 0..n_steps {
        for i in 0..n_rx {
            let mut stolen = 0.0;
            for j in (0..n_rx).filter(|&j| j != i) {
                stolen += delayed_convolution(&simo[j], &kernels.cross_rev[i][j], n);
            }
            simo[i][n] = kernels.direct[i][n] - stolen;
        }
    }
    Ok(finish(grid, simo, "recursive model"))
}

/// Comprehensive recursive model for exactly two receivers.
pub fn recursive_2rx(topology: &Topology, grid: &TimeGrid) -> Result<(HittingCurve, HittingCurve)> {
    require_receivers(topology, Some(2))?;
    let mut curves = recursive_nrx(topology, grid)?;
    let rx2 = curves.pop().expect("two curves");
    let rx1 = curves.pop().expect("two curves");
    Ok((rx1, rx2))
}

/// Simplified approximation: only single-receiver responses inside the sum.
pub fn approx_nrx(topology: &Topology, grid: &TimeGrid) -> Result<Vec<HittingCurve>> {
    require_receivers(topology, None)?;
    let kernels = Kernels::build(topology, grid)?;
    let n_rx = topology.len();
    let n_steps = grid.n_steps();
    let raw = (0..n_rx)
        .map(|i| {
            (0..n_steps)
                .map(|n| {
                    let stolen: f64 = (0..n_rx)
                        .filter(|&j| j != i)
                        .map(|j| delayed_convolution(&kernels.direct[j], &kernels.cross_rev[i][j], n))
                        .sum();
                    kernels.direct[i][n] - stolen
                })
                .collect()
        })
        .collect();
    Ok(finish(grid, raw, "approximation model"))
}

pub fn approx_2rx(topology: &Topology, grid: &TimeGrid) -> Result<(HittingCurve, HittingCurve)> {
    require_receivers(topology, Some(2))?;
    let mut curves = approx_nrx(topology, grid)?;
    let rx2 = curves.pop().expect("two curves");
    let rx1 = curves.pop().expect("two curves");
    Ok((rx1, rx2))
}
