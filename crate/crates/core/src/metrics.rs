//! Curve comparison: RMS error, maximum gap and correlation on cumulative
//! ("fraction of molecules") curves, plus the separation-angle sweep.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::closed_form::{approx_model, build_series};
use crate::curve::{csv_number, HittingCurve, TimeGrid};
use crate::error::{Error, Result};
use crate::geometry::{build_planar_2rx, PlanarSpec2Rx, Topology};
use crate::montecarlo::{simulate, SimConfig};
use crate::recursive::{approx_nrx, recursive_nrx};

pub const SWEEP_CSV_HEADER: [&str; 7] = [
    "angle_deg",
    "rms_rx1",
    "rms_rx2",
    "maxabs_rx1",
    "maxabs_rx2",
    "pearson_rx1",
    "pearson_rx2",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveComparison {
    pub rms: f64,
    pub max_abs: f64,
    pub pearson: f64,
    pub n_points: usize,
}

/// RMS, maximum absolute difference and Pearson correlation between two
/// equal-length sample vectors.
///
/// Identical series have correlation exactly 1. Correlation with a constant
/// series is otherwise undefined and reported as 0.
pub fn compare_samples(a: &[f64], b: &[f64]) -> Result<CurveComparison> {
    if a.len() != b.len() {
        return Err(Error::GridMismatch(format!("{} vs {} samples", a.len(), b.len())));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::GridMismatch(format!("need at least 2 samples, got {n}")));
    }
    let nf = n as f64;
    let mut sq = 0.0;
    let mut max_abs = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        sq += d * d;
        max_abs = max_abs.max(d.abs());
    }
    let rms = (sq / nf).sqrt();
    let mean_a = a.iter().sum::<f64>() / nf;
    let mean_b = b.iter().sum::<f64>() / nf;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - mean_a, y - mean_b);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    let pearson = if a == b {
        1.0
    } else if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        (sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0)
    };
    Ok(CurveComparison {
        rms,
        max_abs: max_abs.max(rms),
        pearson,
        n_points: n,
    })
}

/// Compares the cumulative curves of `a` and `b`, which must share a grid.
pub fn compare(a: &HittingCurve, b: &HittingCurve) -> Result<CurveComparison> {
    if !a.grid.same_as(&b.grid) {
        return Err(Error::GridMismatch(format!(
            "dt {} s x {} steps vs dt {} s x {} steps",
            a.grid.dt(),
            a.grid.n_steps(),
            b.grid.dt(),
            b.grid.n_steps()
        )));
    }
    compare_samples(&a.cumulative, &b.cumulative)
}

/// Linearly interpolates the cumulative curve (with `F(0) = 0`) onto `grid`.
pub fn resample(curve: &HittingCurve, grid: &TimeGrid) -> Result<HittingCurve> {
    let source = curve.grid.horizon();
    let target = grid.horizon();
    if target > source * (1.0 + 1e-12) {
        return Err(Error::Extrapolation {
            target,
            available: source,
        });
    }
    let dt = curve.grid.dt();
    let n = curve.len();
    let value_at = |k: usize| if k == 0 { 0.0 } else { curve.cumulative[k - 1] };
    let cumulative = grid
        .end_times()
        .map(|t| {
            let x = t / dt;
            let lo = (x.floor() as usize).min(n);
            if lo >= n {
                return value_at(n);
            }
            let frac = x - lo as f64;
            if frac <= 1e-12 {
                return value_at(lo);
            }
            if frac >= 1.0 - 1e-12 {
                return value_at(lo + 1);
            }
            value_at(lo) + frac * (value_at(lo + 1) - value_at(lo))
        })
        .collect();
    Ok(HittingCurve::from_cumulative(*grid, cumulative))
}

/// Which analytical model a sweep evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ModelKind {
    /// Discrete-time comprehensive recursion.
    Recursive,
    /// Discrete-time simplified approximation.
    Approx,
    /// Truncated closed-form series.
    Closed { eps: f64 },
    /// Closed form of the simplified approximation.
    ApproxClosed,
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Recursive => "recursive",
            ModelKind::Approx => "approx",
            ModelKind::Closed { .. } => "closed",
            ModelKind::ApproxClosed => "approx-closed",
        }
    }

    /// Evaluates every receiver's curve on `grid`.
    pub fn curves(&self, topology: &Topology, grid: &TimeGrid) -> Result<Vec<HittingCurve>> {
        match *self {
            ModelKind::Recursive => recursive_nrx(topology, grid),
            ModelKind::Approx => approx_nrx(topology, grid),
            ModelKind::Closed { eps } => (0..topology.len())
                .map(|i| Ok(build_series(topology, i, eps)?.curve(grid)))
                .collect(),
            ModelKind::ApproxClosed => (0..topology.len())
                .map(|i| Ok(approx_model(topology, i)?.curve(grid)))
                .collect(),
        }
    }
}

#[derive(Debug)]
pub struct SweepRow {
    /// Separation angle (rad).
    pub angle: f64,
    /// Model-vs-simulation comparison for Rx1 and Rx2.
    pub result: Result<[CurveComparison; 2]>,
}

/// Model-vs-simulation comparison at every separation angle in `angles`.
///
/// The model runs on the oracle's curve grid.
pub fn angle_sweep(
    spec: &PlanarSpec2Rx,
    angles: &[f64],
    model: ModelKind,
    oracle: &SimConfig,
) -> Vec<SweepRow> {
    angles
        .iter()
        .map(|&angle| SweepRow {
            angle,
            result: sweep_point(spec, angle, model, oracle),
        })
        .collect()
}

fn sweep_point(
    spec: &PlanarSpec2Rx,
    angle: f64,
    model: ModelKind,
    oracle: &SimConfig,
) -> Result<[CurveComparison; 2]> {
    let topology = build_planar_2rx(&spec.with_phi(angle))?;
    let grid = oracle.curve_grid()?;
    let modelled = model.curves(&topology, &grid)?;
    let simulated = simulate(&topology, oracle)?.curves;
    Ok([
        compare(&modelled[0], &simulated[0])?,
        compare(&modelled[1], &simulated[1])?,
    ])
}

/// Writes sweep rows as CSV; failed rows are skipped and returned.
pub fn write_sweep_csv<'a, W: Write>(rows: &'a [SweepRow], writer: W) -> Result<Vec<&'a SweepRow>> {
    let mut w = csv::WriterBuilder::new().from_writer(writer);
    w.write_record(SWEEP_CSV_HEADER)?;
    let mut failed = Vec::new();
    for row in rows {
        match &row.result {
            Ok([a, b]) => w.write_record([
                csv_number(row.angle.to_degrees()),
                csv_number(a.rms),
                csv_number(b.rms),
                csv_number(a.max_abs),
                csv_number(b.max_abs),
                csv_number(a.pearson),
                csv_number(b.pearson),
            ])?,
            Err(_) => failed.push(row),
        }
    }
    w.flush()?;
    Ok(failed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(grid: TimeGrid, scale: f64) -> HittingCurve {
        let cum = (1..=grid.n_steps()).map(|k| scale * (k as f64).sqrt()).collect();
        HittingCurve::from_cumulative(grid, cum)
    }

    #[test]
    fn identical_curves() {
        let g = TimeGrid::new(0.1, 50).unwrap();
        let a = ramp(g, 0.01);
        let c = compare(&a, &a).unwrap();
        assert_eq!(c.rms, 0.0);
        assert_eq!(c.max_abs, 0.0);
        assert!((c.pearson - 1.0).abs() < 1e-15);
        assert_eq!(c.n_points, 50);
    }

    #[test]
    fn constant_offset() {
        let g = TimeGrid::new(0.1, 50).unwrap();
        let a = ramp(g, 0.01);
        let mut b = a.clone();
        b.cumulative.iter_mut().for_each(|v| *v += 0.003);
        let c = compare(&a, &b).unwrap();
        assert!((c.rms - 0.003).abs() < 1e-15);
        assert!((c.max_abs - 0.003).abs() < 1e-15);
        assert!((c.pearson - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grid_mismatch_rejected() {
        let a = ramp(TimeGrid::new(0.1, 50).unwrap(), 0.01);
        let b = ramp(TimeGrid::new(0.1, 40).unwrap(), 0.01);
        assert!(matches!(compare(&a, &b), Err(Error::GridMismatch(_))));
        assert!(compare_samples(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn constant_series_correlation() {
        let c = compare_samples(&[0.0, 0.0, 0.0], &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(c.pearson, 1.0);
        let c = compare_samples(&[0.0, 0.0, 0.0], &[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(c.pearson, 0.0);
    }

    #[test]
    fn resample_identity_and_endpoints() {
        let g = TimeGrid::new(1e-3, 5000).unwrap();
        let a = ramp(g, 1e-3);
        let same = resample(&a, &g).unwrap();
        assert_eq!(same.cumulative, a.cumulative);
        let coarse = resample(&a, &TimeGrid::new(0.05, 100).unwrap()).unwrap();
        assert_eq!(coarse.final_fraction(), a.final_fraction());
        assert!(resample(&a, &TimeGrid::new(1e-3, 5001).unwrap()).is_err());
    }

    #[test]
    fn coarsen_and_refine() {
        let fine = TimeGrid::new(1e-2, 100).unwrap();
        let a = ramp(fine, 0.05);
        let coarse = resample(&a, &TimeGrid::new(2e-2, 50).unwrap()).unwrap();
        let back = resample(&coarse, &fine).unwrap();
        // Only odd samples move, by at most the local curvature of sqrt.
        for k in 0..100 {
            let err = (back.cumulative[k] - a.cumulative[k]).abs();
            if k % 2 == 1 {
                assert_eq!(err, 0.0);
            } else {
                let kk = (k + 1) as f64;
                let local = 0.05 * ((kk + 1.0).sqrt() - 2.0 * kk.sqrt() + (kk - 1.0).sqrt()).abs();
                assert!(err <= local / 2.0 + 1e-15, "{k}: {err} > {local}");
            }
        }
    }
}
