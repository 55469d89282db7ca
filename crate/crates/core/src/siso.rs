//! Single-receiver (point transmitter, one absorbing sphere) channel.
//!
//! The first-passage density of a point release at distance `r0` from the
//! center of an absorbing sphere of radius `rr` in unbounded 3-D space is
//!
//! ```text
//! f(t) = (rr / r0) * (r0 - rr) / sqrt(4 pi D t^3) * exp(-(r0 - rr)^2 / (4 D t))
//! F(t) = (rr / r0) * erfc((r0 - rr) / sqrt(4 D t))
//! ```
//!
//! Everything else in the crate is assembled from these two functions.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Topology;

/// Number of composite-Simpson panels for the angular normalizer.
const ANGULAR_PANELS: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SisoParams {
    /// Distance from the release point to the receiver center (um).
    pub r0: f64,
    /// Receiver radius (um).
    pub rr: f64,
    /// Diffusion coefficient (um^2/s).
    pub diffusion: f64,
}

impl SisoParams {
    pub fn new(r0: f64, rr: f64, diffusion: f64) -> Result<Self> {
        if !(rr > 0.0 && rr.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "receiver radius must be positive, got {rr}"
            )));
        }
        if !(r0 > rr && r0.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "need r0 > rr (release point outside the receiver): r0 = {r0}, rr = {rr}"
            )));
        }
        if !(diffusion > 0.0 && diffusion.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "diffusion coefficient must be positive, got {diffusion}"
            )));
        }
        Ok(Self { r0, rr, diffusion })
    }

    /// Parameters of receiver `i` seen from the transmitter, ignoring every
    /// other receiver.
    pub fn from_topology(topology: &Topology, i: usize) -> Result<Self> {
        let rx = topology.receiver(i)?;
        Self::new(topology.center_distance(i)?, rx.radius, topology.diffusion())
    }

    /// Total fraction eventually absorbed, `rr / r0`.
    pub fn capture_fraction(&self) -> f64 {
        self.rr / self.r0
    }

    /// Width `(r0 - rr) / sqrt(D)` in s^(1/2).
    pub fn width(&self) -> f64 {
        (self.r0 - self.rr) / self.diffusion.sqrt()
    }

    /// Time of the hitting-rate maximum, `(r0 - rr)^2 / (6 D)`.
    pub fn peak_time(&self) -> f64 {
        let d = self.r0 - self.rr;
        d * d / (6.0 * self.diffusion)
    }
}

/// Inverse transform of `amplitude * exp(-width * sqrt(s))`: the hitting rate
/// shape shared by the single-receiver channel and every closed-form term.
pub(crate) fn levy_rate(amplitude: f64, width: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    amplitude / (4.0 * PI * t).sqrt() * (width / t) * (-width * width / (4.0 * t)).exp()
}

/// Time integral of [`levy_rate`] from 0 to `t`.
pub(crate) fn levy_cumulative(amplitude: f64, width: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    amplitude * libm::erfc(width / (2.0 * t.sqrt()))
}

/// Hitting rate (1/s) at time `t`; zero for `t <= 0`.
pub fn siso_pdf(t: f64, p: &SisoParams) -> f64 {
    levy_rate(p.capture_fraction(), p.width(), t)
}

/// Fraction of molecules absorbed by time `t`; zero for `t <= 0`.
pub fn siso_cdf(t: f64, p: &SisoParams) -> f64 {
    levy_cumulative(p.capture_fraction(), p.width(), t)
}

/// `ln(erfc(x))` for `x >= 0`, without underflow for large `x`.
fn ln_erfc(x: f64) -> f64 {
    if x < 25.0 {
        libm::erfc(x).ln()
    } else {
        let x2 = x * x;
        let series = 1.0 - 1.0 / (2.0 * x2) + 3.0 / (4.0 * x2 * x2) - 15.0 / (8.0 * x2 * x2 * x2);
        -x2 - (x * PI.sqrt()).ln() + series.ln()
    }
}

/// Unnormalized angular weight at polar angle `theta` (measured from the
/// receiver-center-to-transmitter axis), scaled by `1 / erfc(d / s)` so it
/// stays finite at small `t`.
fn angular_weight(theta: f64, t: f64, p: &SisoParams) -> f64 {
    let ratio = p.rr / p.r0;
    let cos = theta.cos();
    let r0_star = (p.r0 * p.r0 + p.rr * p.rr - 2.0 * p.r0 * p.rr * cos)
        .max(0.0)
        .sqrt();
    let scale = (4.0 * p.diffusion * t).sqrt();
    let ln_num = ln_erfc(r0_star / scale) - ln_erfc((p.r0 - p.rr) / scale);
    let denom = (1.0 - 2.0 * ratio * cos + ratio * ratio).powf(1.5);
    theta.sin() * ln_num.exp() / denom
}

/// Composite Simpson rule on `[a, b]` with `panels` (even) subintervals.
pub(crate) fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let n = panels + panels % 2;
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + k as f64 * h);
    }
    sum * h / 3.0
}

/// Normalized polar-angle density (1/rad) of hit positions accumulated up to
/// time `t`; integrates to one over `[0, pi]`.
///
/// `theta = 0` is the point of the sphere facing the transmitter.
pub fn angular_pdf(theta: f64, t: f64, p: &SisoParams) -> f64 {
    if t <= 0.0 || !(0.0..=PI).contains(&theta) {
        return 0.0;
    }
    let norm = simpson(|th| angular_weight(th, t, p), 0.0, PI, ANGULAR_PANELS);
    angular_weight(theta, t, p) / norm
}

/// Angular density scaled by the absorbed fraction `F(t)`: integrates to
/// `siso_cdf(t)` over `[0, pi]`.
pub fn angular_hit_density(theta: f64, t: f64, p: &SisoParams) -> f64 {
    angular_pdf(theta, t, p) * siso_cdf(t, p)
}

/// Probability that a hit accumulated up to `t` lands with polar angle in
/// `[lo, hi]`.
pub fn angular_mass(lo: f64, hi: f64, t: f64, p: &SisoParams) -> f64 {
    let panels = ANGULAR_PANELS.max(((hi - lo) / PI * ANGULAR_PANELS as f64) as usize);
    let norm = simpson(|th| angular_weight(th, t, p), 0.0, PI, ANGULAR_PANELS);
    simpson(|th| angular_weight(th, t, p), lo, hi, panels) / norm
}

/// Amplitudes `c` and widths `k` of the two-receiver Laplace-domain model.
///
/// `c12`/`k12` describe molecules virtually re-released from Rx2 toward Rx1,
/// `c21`/`k21` the reverse direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplaceCoeffs {
    pub c1: f64,
    pub c2: f64,
    pub c12: f64,
    pub c21: f64,
    pub k1: f64,
    pub k2: f64,
    pub k12: f64,
    pub k21: f64,
}

impl LaplaceCoeffs {
    /// Decay ratio of the geometric series, `c12 * c21`.
    pub fn loop_gain(&self) -> f64 {
        self.c12 * self.c21
    }

    /// The same coefficients seen with the receiver labels exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            c1: self.c2,
            c2: self.c1,
            c12: self.c21,
            c21: self.c12,
            k1: self.k2,
            k2: self.k1,
            k12: self.k21,
            k21: self.k12,
        }
    }
}

pub fn laplace_coeffs(topology: &Topology) -> Result<LaplaceCoeffs> {
    if topology.len() != 2 {
        return Err(Error::ReceiverCount {
            expected: "exactly 2",
            found: topology.len(),
        });
    }
    let sqrt_d = topology.diffusion().sqrt();
    let r1 = topology.receivers()[0].radius;
    let r2 = topology.receivers()[1].radius;
    let r01 = topology.center_distance(0)?;
    let r02 = topology.center_distance(1)?;
    let r0_12 = topology.cross_distance(0, 1)?;
    let r0_21 = topology.cross_distance(1, 0)?;
    Ok(LaplaceCoeffs {
        c1: r1 / r01,
        c2: r2 / r02,
        c12: r1 / r0_21,
        c21: r2 / r0_12,
        k1: (r01 - r1) / sqrt_d,
        k2: (r02 - r2) / sqrt_d,
        k12: (r0_21 - r1) / sqrt_d,
        k21: (r0_12 - r2) / sqrt_d,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_planar_2rx, PlanarSpec2Rx};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn p15() -> SisoParams {
        SisoParams::new(15.0, 6.0, 79.4).unwrap()
    }

    #[test]
    fn zero_at_origin() {
        assert_eq!(siso_pdf(0.0, &p15()), 0.0);
        assert_eq!(siso_cdf(0.0, &p15()), 0.0);
        assert_eq!(siso_pdf(-1.0, &p15()), 0.0);
        assert!(siso_pdf(1e-6, &p15()) >= 0.0);
    }

    #[test]
    fn cdf_reference_values() {
        // 0.4 * erfc(9 / sqrt(317.6)), evaluated with an independent erfc.
        assert!((siso_cdf(1.0, &p15()) - 0.190_042_458_258_609_44).abs() < 1e-13);
        assert!((siso_cdf(5.0, &p15()) - 0.299_769_876_202_831_1).abs() < 1e-13);
        assert!((siso_cdf(1e12, &p15()) - 0.4).abs() < 1e-6);
    }

    #[test]
    fn pdf_matches_central_difference_of_cdf() {
        let p = p15();
        let h = 1e-5;
        let fd = (siso_cdf(1.0 + h, &p) - siso_cdf(1.0 - h, &p)) / (2.0 * h);
        let pdf = siso_pdf(1.0, &p);
        assert!(((fd - pdf) / pdf).abs() < 1e-8, "{fd} vs {pdf}");
    }

    #[test]
    fn peak_time_is_maximum() {
        let p = p15();
        let tp = p.peak_time();
        assert!((tp - 81.0 / 476.4).abs() < 1e-15);
        assert!((tp - 0.1700).abs() < 1e-4);
        let at = siso_pdf(tp, &p);
        assert!(at > siso_pdf(tp * 0.999, &p));
        assert!(at > siso_pdf(tp * 1.001, &p));
    }

    #[test]
    fn invalid_params() {
        assert!(SisoParams::new(6.0, 6.0, 1.0).is_err());
        assert!(SisoParams::new(6.0, 0.0, 1.0).is_err());
        assert!(SisoParams::new(6.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn angular_density_normalized() {
        let p = SisoParams::new(12.0, 4.0, 79.4).unwrap();
        let total = simpson(|th| angular_pdf(th, 1.0, &p), 0.0, PI, 2048);
        assert!((total - 1.0).abs() < 1e-6, "{total}");
        assert_eq!(angular_pdf(0.0, 1.0, &p), 0.0);
        let hits = simpson(|th| angular_hit_density(th, 1.0, &p), 0.0, PI, 2048);
        assert!((hits - siso_cdf(1.0, &p)).abs() < 1e-8);
        // Finite at tiny t, where erfc itself underflows.
        let v = angular_pdf(0.3, 1e-4, &p);
        assert!(v.is_finite() && v > 0.0);
    }

    #[test]
    fn angular_mode_faces_transmitter() {
        let p = SisoParams::new(12.0, 4.0, 79.4).unwrap();
        let n = 2000;
        let (mode, _) = (0..=n)
            .map(|k| {
                let th = PI * k as f64 / n as f64;
                (th, angular_pdf(th, 0.5, &p))
            })
            .fold((0.0, f64::MIN), |acc, x| if x.1 > acc.1 { x } else { acc });
        assert!(mode < FRAC_PI_2, "mode at {mode}");
        assert!(angular_mass(0.0, FRAC_PI_2, 0.5, &p) > 0.5);
    }

    #[test]
    fn laplace_coefficients_scenario1() {
        let spec = PlanarSpec2Rx {
            r1: 2.0,
            r2: 5.0,
            r01: 6.0,
            r02: 16.0,
            phi: PI,
            diffusion: 79.4,
        };
        let c = laplace_coeffs(&build_planar_2rx(&spec).unwrap()).unwrap();
        assert!((c.c1 - 1.0 / 3.0).abs() < 1e-15);
        assert!((c.c21 - 0.25).abs() < 1e-12);
        assert!((c.k1 - 4.0 / 79.4f64.sqrt()).abs() < 1e-14);

        let c = laplace_coeffs(&build_planar_2rx(&spec.with_phi(FRAC_PI_2)).unwrap()).unwrap();
        // r0(2->1) = sqrt((16 - 5)^2 + 6^2) = sqrt(157).
        assert!((c.c12 - 2.0 / 157f64.sqrt()).abs() < 1e-12);
        assert!((c.c21 - 5.0 / 272f64.sqrt()).abs() < 1e-12);
        assert!(c.loop_gain() < 1.0);
        assert_eq!(c.swapped().swapped(), c);
    }
}
