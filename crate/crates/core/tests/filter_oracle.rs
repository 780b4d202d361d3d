//! The coefficient bank checked against a brute-force weighted least-squares
//! fit that assembles the normal equations directly and solves them by
//! Gaussian elimination with partial pivoting.

use proptest::prelude::*;
use savgol_ci::filter::{abscissae, quadratic_weight};
use savgol_ci::{apply_filter, build_coefficient_bank, build_weights, FilterSpec, Weighting};

/// Fit `n` power-basis coefficients to `(x, y)` under weights `w`.
fn brute_force_fit(x: &[f64], y: &[f64], w: &[f64], n: usize) -> Vec<f64> {
    let mut a = vec![vec![0.0; n + 1]; n];
    for r in 0..n {
        for c in 0..n {
            a[r][c] = x.iter().zip(w).map(|(xi, wi)| wi * xi.powi((r + c) as i32)).sum();
        }
        a[r][n] = x.iter().zip(w).zip(y).map(|((xi, wi), yi)| wi * xi.powi(r as i32) * yi).sum();
    }
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        for r in (col + 1)..n {
            let f = a[r][col] / a[col][col];
            for c in col..=n {
                a[r][c] -= f * a[col][c];
            }
        }
    }
    let mut coef = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = ((r + 1)..n).map(|c| a[r][c] * coef[c]).sum();
        coef[r] = (a[r][n] - s) / a[r][r];
    }
    coef
}

fn poly_value(coef: &[f64], x: f64) -> f64 {
    coef.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn poly_slope(coef: &[f64], x: f64) -> f64 {
    coef.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c * x.powi(k as i32 - 1)).sum()
}

/// Output `t` by refitting the pinned window from scratch.
fn brute_force_output(spec: &FilterSpec, y: &[f64], t: usize) -> (f64, f64) {
    let (m, q) = (spec.m(), y.len());
    let (start, j) = if t < m {
        (0, t)
    } else if t >= q - m {
        (q - 2 * m - 1, t - (q - 2 * m - 1))
    } else {
        (t - m, m)
    };
    let x = abscissae(m);
    let w = build_weights(spec);
    let coef = brute_force_fit(&x, &y[start..start + 2 * m + 1], &w, spec.n());
    // x has spacing 1/m, so one sample step is dx = 1/m
    (poly_value(&coef, x[j]), poly_slope(&coef, x[j]) / m as f64)
}

fn close(a: f64, b: f64, tol: f64, scale: f64) -> bool {
    (a - b).abs() <= tol * scale.max(b.abs()).max(1.0)
}

fn spec_strategy() -> impl Strategy<Value = FilterSpec> {
    (2usize..=7, prop_oneof![Just(Weighting::OptimalQuadratic), Just(Weighting::Uniform)])
        .prop_flat_map(|(n, w)| (Just(n), n..=12usize, Just(w)))
        .prop_map(|(n, m, w)| FilterSpec::with_weighting(n, m, w).unwrap())
}

fn grid() -> impl Iterator<Item = FilterSpec> {
    (1usize..=9).flat_map(|n| {
        (FilterSpec::min_half_window(n)..=15).flat_map(move |m| {
            [Weighting::OptimalQuadratic, Weighting::Uniform]
                .into_iter()
                .map(move |w| FilterSpec::with_weighting(n, m, w).unwrap())
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn matches_brute_force_fit(
        spec in spec_strategy(),
        extra in 0usize..25,
        seed in prop::collection::vec(-50.0f64..50.0, 60),
    ) {
        let q = spec.window() + extra;
        let y: Vec<f64> = (0..q).map(|i| seed[i % seed.len()] + 0.1 * i as f64).collect();
        let out = apply_filter(&spec, &y).unwrap();
        let scale = y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for t in 0..q {
            let (yf, dyf) = brute_force_output(&spec, &y, t);
            prop_assert!(close(out.yf[t], yf, 1e-9, scale), "yf[{t}] {} vs {yf}", out.yf[t]);
            prop_assert!(close(out.dyf[t], dyf, 1e-9, scale), "dyf[{t}] {} vs {dyf}", out.dyf[t]);
        }
    }

    #[test]
    fn linear_in_the_input(
        spec in spec_strategy(),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        y1 in prop::collection::vec(-10.0f64..10.0, 30),
        y2 in prop::collection::vec(-10.0f64..10.0, 30),
    ) {
        let combo: Vec<f64> = y1.iter().zip(&y2).map(|(u, v)| a * u + b * v).collect();
        let (o1, o2) = (apply_filter(&spec, &y1).unwrap(), apply_filter(&spec, &y2).unwrap());
        let oc = apply_filter(&spec, &combo).unwrap();
        for t in 0..30 {
            let e = a * o1.yf[t] + b * o2.yf[t];
            prop_assert!(close(oc.yf[t], e, 1e-12, 60.0));
            let e = a * o1.dyf[t] + b * o2.dyf[t];
            prop_assert!(close(oc.dyf[t], e, 1e-12, 60.0));
        }
    }
}

#[test]
fn reproduces_in_model_polynomials_including_edges() {
    for spec in grid() {
        let n = spec.n();
        let q = spec.window() + 17;
        // degree n-1 polynomial on a shifted, scaled grid
        let coef: Vec<f64> = (0..n).map(|k| ((k * 7 + 3) % 5) as f64 - 2.0).collect();
        let y: Vec<f64> = (0..q).map(|i| poly_value(&coef, (i as f64 - 4.0) * 0.15)).collect();
        let dy: Vec<f64> = (0..q).map(|i| 0.15 * poly_slope(&coef, (i as f64 - 4.0) * 0.15)).collect();
        let out = apply_filter(&spec, &y).unwrap();
        let scale = y.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        for t in 0..q {
            assert!(close(out.yf[t], y[t], 1e-9, scale), "{spec:?} yf[{t}]");
            assert!(close(out.dyf[t], dy[t], 1e-9, scale), "{spec:?} dyf[{t}]");
        }
    }
}

#[test]
fn ramp_has_constant_derivative() {
    let alpha = -2.75;
    let y: Vec<f64> = (0..50).map(|t| 3.0 + alpha * t as f64).collect();
    for spec in grid().filter(|s| s.n() >= 2) {
        let out = apply_filter(&spec, &y).unwrap();
        assert!(out.dyf.iter().all(|d| (d - alpha).abs() < 1e-9), "{spec:?}");
    }
}

#[test]
fn single_window_equals_global_fit() {
    let spec = FilterSpec::new(4, 6).unwrap();
    let y: Vec<f64> = (0..13).map(|i| ((i * 31) % 17) as f64).collect();
    let out = apply_filter(&spec, &y).unwrap();
    let coef = brute_force_fit(&abscissae(6), &y, &build_weights(&spec), 4);
    for (t, x) in abscissae(6).iter().enumerate() {
        assert!(close(out.yf[t], poly_value(&coef, *x), 1e-10, 20.0));
    }
}

#[test]
fn row_sums() {
    for spec in grid() {
        let bank = build_coefficient_bank(&spec).unwrap();
        for j in 0..spec.window() {
            let s: f64 = bank.smooth_row(j).iter().sum();
            assert!((s - 1.0).abs() < 1e-12, "{spec:?} smooth row {j}: {s}");
            if spec.n() >= 2 {
                let d: f64 = bank.deriv_row(j).iter().sum();
                assert!(d.abs() < 1e-12, "{spec:?} deriv row {j}: {d}");
            }
        }
    }
}

#[test]
fn centre_row_symmetry() {
    for spec in grid() {
        let bank = build_coefficient_bank(&spec).unwrap();
        let m = spec.m();
        let (c, d) = (bank.smooth_row(m), bank.deriv_row(m));
        let w = spec.window();
        for i in 0..w {
            assert_eq!(c[i], c[w - 1 - i], "{spec:?}");
            assert_eq!(d[i], -d[w - 1 - i], "{spec:?}");
        }
    }
}

#[test]
fn weights_have_unit_mean_and_vanish_outside() {
    for m in 1..=40 {
        let spec = FilterSpec::new(1, m).unwrap();
        let w = build_weights(&spec);
        let mean = w.iter().sum::<f64>() / w.len() as f64;
        assert!((mean - 1.0).abs() < 1e-14, "m={m}: {mean}");
        assert!(w.iter().all(|v| *v > 0.0));
        assert!(quadratic_weight(0.0, m).abs() < 1e-15);
        assert!(quadratic_weight((2 * m + 2) as f64, m).abs() < 1e-14);
    }
}

#[test]
fn odd_n_and_next_even_share_interior_rows() {
    for n in [1usize, 3, 5, 7] {
        for m in FilterSpec::min_half_window(n + 1)..=14 {
            for w in [Weighting::OptimalQuadratic, Weighting::Uniform] {
                let odd = build_coefficient_bank(&FilterSpec::with_weighting(n, m, w).unwrap()).unwrap();
                let even = build_coefficient_bank(&FilterSpec::with_weighting(n + 1, m, w).unwrap()).unwrap();
                for (a, b) in odd.smooth_row(m).iter().zip(even.smooth_row(m)) {
                    assert!((a - b).abs() < 1e-10, "n={n} m={m}");
                }
            }
        }
    }
}

fn deriv_power(n: usize, m: usize, w: Weighting) -> Vec<f64> {
    build_coefficient_bank(&FilterSpec::with_weighting(n, m, w).unwrap()).unwrap().deriv_sum_squares()
}

#[test]
fn extra_parameter_never_shrinks_unweighted_derivative_variance() {
    // nested ordinary least squares: every row's variance is monotone in n
    for n in [1usize, 3, 5, 7] {
        for m in FilterSpec::min_half_window(n + 1)..=14 {
            let (so, se) = (deriv_power(n, m, Weighting::Uniform), deriv_power(n + 1, m, Weighting::Uniform));
            for j in 0..2 * m + 1 {
                assert!(se[j] >= so[j] - 1e-12, "n={n} m={m} row {j}");
            }
        }
    }
}

#[test]
fn extra_parameter_never_shrinks_weighted_centre_row_variance() {
    for n in [1usize, 3, 5, 7] {
        for m in FilterSpec::min_half_window(n + 1)..=14 {
            let w = Weighting::OptimalQuadratic;
            let (so, se) = (deriv_power(n, m, w), deriv_power(n + 1, m, w));
            assert!(se[m] >= so[m] - 1e-12, "n={n} m={m}");
        }
    }
}

#[test]
fn weighted_tail_rows_can_favour_the_even_n() {
    // With quadratic weights the estimator is not the OLS one, so a tail row of
    // (n+1, m) can have a smaller coefficient power than the same row of (n, m).
    let w = Weighting::OptimalQuadratic;
    let (so, se) = (deriv_power(3, 4, w), deriv_power(4, 4, w));
    assert!((so[2] - 0.076437).abs() < 1e-5, "{}", so[2]);
    assert!((se[2] - 0.074389).abs() < 1e-5, "{}", se[2]);
}
