//! Special functions cross-checked against statrs and against each other.

use proptest::prelude::*;
use savgol_ci::special::{beta_inc, f_cdf, normal_cdf, normal_quantile};
use statrs::distribution::{ContinuousCDF, FisherSnedecor, Normal};
use statrs::function::beta::beta_reg;

#[test]
fn f_cdf_matches_statrs() {
    for (d1, d2) in [(1.0, 1.0), (2.0, 7.0), (32.0, 33.0), (33.0, 32.0), (5.0, 100.0), (60.0, 3.0)] {
        let reference = FisherSnedecor::new(d1, d2).unwrap();
        for x in [0.01, 0.2, 0.5, 0.64, 0.9, 1.0, 1.3, 2.5, 8.0, 40.0] {
            let (ours, theirs) = (f_cdf(x, d1, d2), reference.cdf(x));
            assert!((ours - theirs).abs() <= 1e-8 * theirs.max(1e-300) + 1e-14, "F({x}; {d1}, {d2}): {ours} vs {theirs}");
        }
    }
}

#[test]
fn normal_cdf_matches_statrs() {
    let reference = Normal::new(0.0, 1.0).unwrap();
    for i in -80..=80 {
        let x = i as f64 * 0.1;
        let (ours, theirs) = (normal_cdf(x), reference.cdf(x));
        // statrs' erf is good to roughly 1e-10 relative in the tails
        assert!((ours - theirs).abs() <= 1e-14 + 1e-10 * theirs, "Φ({x}): {ours} vs {theirs}");
    }
    assert!((normal_cdf(-2.8) - 0.002_555_130_330_427_93).abs() < 1e-17);
}

#[test]
fn f_cdf_reference_values() {
    // F(x; 32, 33) at the 0.64 ratio sits in the lower tail, comfortably inside 95%
    let p = f_cdf(0.64, 32.0, 33.0);
    assert!(p > 0.025 && p < 0.15, "{p}");
}

proptest! {
    #[test]
    fn beta_inc_matches_statrs(a in 0.5f64..60.0, b in 0.5f64..60.0, x in 0.0f64..1.0) {
        let (ours, theirs) = (beta_inc(a, b, x), beta_reg(a, b, x));
        prop_assert!((ours - theirs).abs() <= 1e-8 * theirs.abs().max(1e-12) + 1e-15, "{ours} vs {theirs}");
    }

    #[test]
    fn f_cdf_reciprocal_symmetry(x in 0.01f64..50.0, d1 in 1.0f64..80.0, d2 in 1.0f64..80.0) {
        let lhs = f_cdf(x, d1, d2);
        let rhs = 1.0 - f_cdf(1.0 / x, d2, d1);
        prop_assert!((lhs - rhs).abs() < 1e-10, "{lhs} vs {rhs}");
    }

    #[test]
    fn f_cdf_monotone(x in 0.01f64..20.0, dx in 0.0f64..5.0, d1 in 1.0f64..60.0, d2 in 1.0f64..60.0) {
        prop_assert!(f_cdf(x + dx, d1, d2) >= f_cdf(x, d1, d2) - 1e-15);
    }

    #[test]
    fn quantile_round_trip(log_p in -13.8f64..0.0, upper in any::<bool>()) {
        // p spans [1e-6, 1 - 1e-6]
        let p = if upper { 1.0 - log_p.exp() } else { log_p.exp() };
        let p = p.clamp(1e-6, 1.0 - 1e-6);
        let x = normal_quantile(p);
        prop_assert!((normal_cdf(x) - p).abs() < 1e-9, "p={p} x={x}");
    }
}

#[test]
fn quantile_matches_statrs() {
    let reference = Normal::new(0.0, 1.0).unwrap();
    for p in [1e-6, 1e-4, 0.01, 0.025, 0.1, 0.3, 0.5, 0.7, 0.9, 0.975, 0.99, 1.0 - 1e-6] {
        let (ours, theirs) = (normal_quantile(p), reference.inverse_cdf(p));
        assert!((ours - theirs).abs() < 1e-9, "p={p}: {ours} vs {theirs}");
    }
}
