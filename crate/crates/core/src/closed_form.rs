//! Closed-form two-receiver responses.
//!
//! In the Laplace domain the coupled recursion solves to
//!
//! ```text
//! P1(s) = [c1 e^{-k1 sqrt(s)} - c2 c12 e^{-(k2 + k12) sqrt(s)}]
//!         / [1 - c12 c21 e^{-(k12 + k21) sqrt(s)}]
//! ```
//!
//! Expanding the denominator as a geometric series (valid while
//! `c12 c21 < 1`) turns each numerator term into a train of terms
//! `A e^{-B sqrt(s)}`, each of which inverts to the same Levy-type density as
//! the single-receiver channel. Time-domain evaluation is a finite sum once
//! amplitudes fall below the truncation threshold.

use serde::{Deserialize, Serialize};

use crate::curve::{HittingCurve, TimeGrid};
use crate::error::{Error, Result};
use crate::geometry::Topology;
use crate::siso::{laplace_coeffs, levy_cumulative, levy_rate, LaplaceCoeffs, SisoParams};

pub const DEFAULT_TRUNCATION_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TermSign {
    Plus,
    Minus,
}

impl TermSign {
    pub fn value(self) -> f64 {
        match self {
            TermSign::Plus => 1.0,
            TermSign::Minus => -1.0,
        }
    }
}

/// One `sign * A * exp(-B sqrt(s))` term of the expansion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesTerm {
    /// Expansion order `i`.
    pub order: usize,
    pub amplitude: f64,
    /// Width in s^(1/2).
    pub width: f64,
    pub sign: TermSign,
}

impl SeriesTerm {
    pub fn rate(&self, t: f64) -> f64 {
        self.sign.value() * levy_rate(self.amplitude, self.width, t)
    }

    pub fn cumulative(&self, t: f64) -> f64 {
        self.sign.value() * levy_cumulative(self.amplitude, self.width, t)
    }
}

/// Truncated series for one receiver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormModel {
    pub terms: Vec<SeriesTerm>,
    pub truncation_eps: f64,
    pub receiver: usize,
}

impl ClosedFormModel {
    /// Hitting rate (1/s) at `t`; zero for `t <= 0`.
    pub fn eval_pdf(&self, t: f64) -> f64 {
        self.terms.iter().map(|term| term.rate(t)).sum()
    }

    /// Absorbed fraction by `t`, integrating every term analytically.
    pub fn eval_cdf(&self, t: f64) -> f64 {
        self.terms.iter().map(|term| term.cumulative(t)).sum()
    }

    /// Limit of [`eval_cdf`](Self::eval_cdf) as `t -> inf`.
    pub fn total_fraction(&self) -> f64 {
        self.terms
            .iter()
            .map(|term| term.sign.value() * term.amplitude)
            .sum()
    }

    pub fn positive_terms(&self) -> impl Iterator<Item = &SeriesTerm> {
        self.terms.iter().filter(|t| t.sign == TermSign::Plus)
    }

    pub fn negative_terms(&self) -> impl Iterator<Item = &SeriesTerm> {
        self.terms.iter().filter(|t| t.sign == TermSign::Minus)
    }

    /// Samples the cumulative response at the interval ends of `grid`.
    pub fn curve(&self, grid: &TimeGrid) -> HittingCurve {
        HittingCurve::from_cumulative(*grid, grid.end_times().map(|t| self.eval_cdf(t)).collect())
    }
}

/// Coefficients with `receiver` relabelled as Rx1.
fn coeffs_for(topology: &Topology, receiver: usize) -> Result<LaplaceCoeffs> {
    let c = laplace_coeffs(topology)?;
    match receiver {
        0 => Ok(c),
        1 => Ok(c.swapped()),
        index => Err(Error::ReceiverIndex { index, count: 2 }),
    }
}

fn single_receiver_model(topology: &Topology, receiver: usize, eps: f64) -> Result<ClosedFormModel> {
    let p = SisoParams::from_topology(topology, receiver)?;
    Ok(ClosedFormModel {
        terms: vec![SeriesTerm {
            order: 0,
            amplitude: p.capture_fraction(),
            width: p.width(),
            sign: TermSign::Plus,
        }],
        truncation_eps: eps,
        receiver,
    })
}

/// Expands the closed form for `receiver` until amplitudes drop below `eps`.
///
/// Each sign family keeps its first sub-threshold term, so the last emitted
/// amplitude is at most `eps`. A one-receiver topology yields the single
/// transmitter term.
pub fn build_series(topology: &Topology, receiver: usize, eps: f64) -> Result<ClosedFormModel> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParams(format!(
            "truncation eps must lie in (0, 1), got {eps}"
        )));
    }
    if topology.len() == 1 {
        return single_receiver_model(topology, receiver, eps);
    }
    let c = coeffs_for(topology, receiver)?;
    let gain = c.loop_gain();
    if gain >= 1.0 {
        return Err(Error::RocViolation { product: gain });
    }
    let loop_width = c.k12 + c.k21;
    let families = [
        (TermSign::Plus, c.c1, c.k1),
        (TermSign::Minus, c.c2 * c.c12, c.k2 + c.k12),
    ];
    let mut active = [true, true];
    let mut terms = Vec::new();
    let mut order = 0usize;
    while active.iter().any(|&a| a) {
        let ratio = gain.powi(order as i32);
        for (f, &(sign, a0, b0)) in families.iter().enumerate() {
            if !active[f] {
                continue;
            }
            let amplitude = a0 * ratio;
            if amplitude <= 0.0 {
                active[f] = false;
                continue;
            }
            terms.push(SeriesTerm {
                order,
                amplitude,
                width: b0 + order as f64 * loop_width,
                sign,
            });
            if amplitude < eps {
                active[f] = false;
            }
        }
        order += 1;
    }
    Ok(ClosedFormModel {
        terms,
        truncation_eps: eps,
        receiver,
    })
}

/// The `i = 0` slice of the series: the simplified approximation.
pub fn approx_model(topology: &Topology, receiver: usize) -> Result<ClosedFormModel> {
    if topology.len() == 1 {
        return single_receiver_model(topology, receiver, 1.0);
    }
    let c = coeffs_for(topology, receiver)?;
    Ok(ClosedFormModel {
        terms: vec![
            SeriesTerm {
                order: 0,
                amplitude: c.c1,
                width: c.k1,
                sign: TermSign::Plus,
            },
            SeriesTerm {
                order: 0,
                amplitude: c.c2 * c.c12,
                width: c.k2 + c.k12,
                sign: TermSign::Minus,
            },
        ],
        truncation_eps: 1.0,
        receiver,
    })
}

/// Approximate hitting rate of `receiver` at `t`.
pub fn approx_pdf(topology: &Topology, receiver: usize, t: f64) -> Result<f64> {
    Ok(approx_model(topology, receiver)?.eval_pdf(t))
}

pub fn approx_cdf(topology: &Topology, receiver: usize, t: f64) -> Result<f64> {
    Ok(approx_model(topology, receiver)?.eval_cdf(t))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocDiagnostic {
    /// `c12 * c21`.
    pub loop_gain: f64,
    /// `1 - c12 * c21`; positive inside the region of convergence.
    pub margin: f64,
}

impl RocDiagnostic {
    pub fn converges(&self) -> bool {
        self.margin > 0.0
    }
}

/// Checks the series convergence condition in its strictest real-axis form
/// (`s -> 0+`).
pub fn roc_check(topology: &Topology) -> Result<RocDiagnostic> {
    let c = laplace_coeffs(topology)?;
    let gain = c.loop_gain();
    Ok(RocDiagnostic {
        loop_gain: gain,
        margin: 1.0 - gain,
    })
}

/// Convergence slack at a general complex `s = sigma + i omega`:
/// `exp(k * Re sqrt(s)) - c` with `c = c12 c21`, `k = k12 + k21`. The
/// expansion converges at `s` when this is positive.
pub fn roc_slack_at(coeffs: &LaplaceCoeffs, sigma: f64, omega: f64) -> f64 {
    let modulus = sigma.hypot(omega);
    let re_sqrt = ((modulus + sigma) / 2.0).max(0.0).sqrt();
    ((coeffs.k12 + coeffs.k21) * re_sqrt).exp() - coeffs.loop_gain()
}
