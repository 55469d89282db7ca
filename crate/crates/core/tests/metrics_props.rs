use mcvd_core::metrics::{compare_samples, write_sweep_csv, ModelKind, SWEEP_CSV_HEADER};
use mcvd_core::scenarios::scenario;
use mcvd_core::{angle_sweep, compare, resample, HittingCurve, SimConfig, TimeGrid};
use proptest::prelude::*;

fn samples() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..200).prop_flat_map(|n| {
        (
            prop::collection::vec(-1.0..1.0f64, n),
            prop::collection::vec(-1.0..1.0f64, n),
        )
    })
}

proptest! {
    #[test]
    fn comparison_is_symmetric((a, b) in samples()) {
        let ab = compare_samples(&a, &b).unwrap();
        let ba = compare_samples(&b, &a).unwrap();
        prop_assert_eq!(ab.rms, ba.rms);
        prop_assert_eq!(ab.max_abs, ba.max_abs);
        prop_assert!((ab.pearson - ba.pearson).abs() < 1e-12);
    }

    #[test]
    fn rms_bounded_by_max((a, b) in samples()) {
        let c = compare_samples(&a, &b).unwrap();
        prop_assert!(c.rms >= 0.0 && c.rms <= c.max_abs);
        prop_assert!(c.max_abs <= c.rms * (a.len() as f64).sqrt() + 1e-15);
        prop_assert!((-1.0..=1.0).contains(&c.pearson));
    }

    #[test]
    fn self_correlation_is_one((a, _) in samples()) {
        prop_assume!(a.iter().any(|&x| x != a[0]));
        let c = compare_samples(&a, &a).unwrap();
        prop_assert!((c.pearson - 1.0).abs() < 1e-12);
        prop_assert_eq!(c.rms, 0.0);
    }

    #[test]
    fn resampling_preserves_endpoint(steps in prop::collection::vec(0.0..1e-3f64, 100), factor in 1usize..10) {
        let grid = TimeGrid::new(1e-2, 100).unwrap();
        let curve = HittingCurve::from_steps(grid, steps);
        let coarse = TimeGrid::new(1e-2 * factor as f64, 100 / factor).unwrap();
        let r = resample(&curve, &coarse).unwrap();
        let k = coarse.n_steps() * factor - 1;
        prop_assert!((r.final_fraction() - curve.cumulative[k]).abs() < 1e-15);
        prop_assert_eq!(r.cumulative.len(), coarse.n_steps());
    }
}

#[test]
fn grid_mismatch_is_an_error() {
    let a = HittingCurve::from_steps(TimeGrid::new(1e-2, 10).unwrap(), vec![0.01; 10]);
    let b = HittingCurve::from_steps(TimeGrid::new(2e-2, 10).unwrap(), vec![0.01; 10]);
    assert!(compare(&a, &b).is_err());
}

#[test]
fn sweep_rows_and_csv() {
    let spec = scenario(1).unwrap();
    let oracle = SimConfig::new(500, 1e-4, 1.0, 1).with_curve_dt(1e-2);
    let angles = [60f64.to_radians(), 180f64.to_radians()];
    let rows = angle_sweep(&spec, &angles, ModelKind::Recursive, &oracle);
    assert_eq!(rows.len(), 2);
    for row in &rows {
        let [a, b] = row.result.as_ref().unwrap();
        assert_eq!(a.n_points, 100);
        assert!(a.rms < 0.05 && b.rms < 0.05);
    }
    let mut buf = Vec::new();
    let failed = write_sweep_csv(&rows, &mut buf).unwrap();
    assert!(failed.is_empty());
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), SWEEP_CSV_HEADER.join(","));
    let first: Vec<f64> = lines
        .next()
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    assert!((first[0] - 60.0).abs() < 1e-9);
    assert_eq!(first.len(), 7);
}

#[test]
fn symmetric_layout_gives_matching_errors() {
    let spec = mcvd_core::PlanarSpec2Rx {
        r1: 4.0,
        r2: 4.0,
        r01: 10.0,
        r02: 10.0,
        phi: 0.0,
        diffusion: 79.4,
    };
    let oracle = SimConfig::new(20_000, 1e-4, 5.0, 2).with_curve_dt(1e-2);
    let rows = angle_sweep(&spec, &[std::f64::consts::PI], ModelKind::Recursive, &oracle);
    let [a, b] = rows[0].result.as_ref().unwrap();
    // Both errors are dominated by independent sampling noise of similar size.
    assert!((a.rms - b.rms).abs() < 0.006, "{} vs {}", a.rms, b.rms);
}
