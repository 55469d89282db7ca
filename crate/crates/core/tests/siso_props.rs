use mcvd_core::siso::{angular_hit_density, angular_mass, angular_pdf};
use mcvd_core::{siso_cdf, siso_pdf, SisoParams};
use proptest::prelude::*;

/// First-passage density to an absorbing sphere, written out independently.
fn oracle_pdf(t: f64, r0: f64, rr: f64, d: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let gap = r0 - rr;
    rr / r0 * gap / (4.0 * std::f64::consts::PI * d * t.powi(3)).sqrt() * (-gap * gap / (4.0 * d * t)).exp()
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let fm = f(0.5 * (a + b));
    recurse(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, 40)
}

/// Integral of the oracle density over [0, t], split at the peak.
fn oracle_cdf(t: f64, r0: f64, rr: f64, d: f64) -> f64 {
    let f = |s: f64| oracle_pdf(s, r0, rr, d);
    let peak = (r0 - rr).powi(2) / (6.0 * d);
    if t <= peak {
        adaptive_simpson(&f, 0.0, t, 1e-10)
    } else {
        adaptive_simpson(&f, 0.0, peak, 1e-10) + adaptive_simpson(&f, peak, t, 1e-10)
    }
}

fn params() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.5..10.0f64, 0.2..30.0f64, 5.0..300.0f64).prop_map(|(rr, gap, d)| (rr + gap, rr, d))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cdf_is_integral_of_pdf((r0, rr, d) in params(), t in 1e-3..20.0f64) {
        let p = SisoParams::new(r0, rr, d).unwrap();
        let expected = oracle_cdf(t, r0, rr, d);
        let got = siso_cdf(t, &p);
        prop_assert!((got - expected).abs() < 1e-6, "cdf {got} vs quadrature {expected}");
        let rate = siso_pdf(t, &p);
        prop_assert!((rate - oracle_pdf(t, r0, rr, d)).abs() <= 1e-12 * rate.max(1.0));
    }

    #[test]
    fn pdf_and_cdf_ranges((r0, rr, d) in params(), t in 0.0..100.0f64) {
        let p = SisoParams::new(r0, rr, d).unwrap();
        prop_assert!(siso_pdf(t, &p) >= 0.0);
        let f = siso_cdf(t, &p);
        prop_assert!((0.0..=rr / r0).contains(&f), "{f} outside [0, {}]", rr / r0);
    }

    #[test]
    fn scale_invariance((r0, rr, d) in params(), t in 1e-3..20.0f64, lambda in 0.1..10.0f64) {
        let a = siso_cdf(t, &SisoParams::new(r0, rr, d).unwrap());
        let b = siso_cdf(t, &SisoParams::new(lambda * r0, lambda * rr, lambda * lambda * d).unwrap());
        prop_assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
    }

    #[test]
    fn rate_peaks_at_analytic_time((r0, rr, d) in params()) {
        let p = SisoParams::new(r0, rr, d).unwrap();
        let peak = p.peak_time();
        let h = peak / 1000.0;
        let best = (1..4000)
            .map(|k| k as f64 * h)
            .max_by(|a, b| siso_pdf(*a, &p).total_cmp(&siso_pdf(*b, &p)))
            .unwrap();
        prop_assert!((best - peak).abs() <= h, "argmax {best} vs {peak}");
    }

    #[test]
    fn cdf_is_nondecreasing((r0, rr, d) in params(), t in 1e-4..50.0f64, dt in 0.0..1.0f64) {
        let p = SisoParams::new(r0, rr, d).unwrap();
        prop_assert!(siso_cdf(t + dt, &p) >= siso_cdf(t, &p));
    }
}

#[test]
fn angular_masses_partition_unity() {
    let p = SisoParams::new(12.0, 4.0, 79.4).unwrap();
    let n = 18;
    let w = std::f64::consts::PI / n as f64;
    for t in [0.05, 0.5, 5.0] {
        let total: f64 = (0..n)
            .map(|b| angular_mass(b as f64 * w, (b + 1) as f64 * w, t, &p))
            .sum();
        assert!((total - 1.0).abs() < 1e-7, "t = {t}: {total}");
        // Tx-facing band catches more than the far band.
        assert!(
            angular_mass(0.0, w, t, &p) / (1.0 - w.cos())
                > angular_mass(std::f64::consts::PI - w, std::f64::consts::PI, t, &p) / (1.0 - w.cos())
        );
    }
    assert!(angular_pdf(0.0, 1.0, &p) == 0.0);
    let hit = simpson_oracle(|th| angular_hit_density(th, 1.0, &p));
    assert!((hit - siso_cdf(1.0, &p)).abs() < 1e-7);
}

fn simpson_oracle(f: impl Fn(f64) -> f64) -> f64 {
    adaptive_simpson(&f, 0.0, std::f64::consts::PI, 1e-10)
}
