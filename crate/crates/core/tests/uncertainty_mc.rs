use savgol_ci::{
    build_coefficient_bank, fit_polynomial, monte_carlo_validate, monte_carlo_validate_with, output_sd,
    apply_filter, Execution, FilterSpec, MonteCarloConfig, NoiseEstimate, Weighting,
};

fn smooth_signal(q: usize) -> Vec<f64> {
    (0..q).map(|i| 10.0 + (i as f64 * 0.11).sin() * 3.0 + 0.02 * i as f64).collect()
}

#[test]
fn empirical_spread_matches_propagated_sd() {
    let spec = FilterSpec::new(5, 9).unwrap();
    let signal = smooth_signal(67);
    let report = monte_carlo_validate(&spec, &signal, 0.5, 1000, 11).unwrap();
    assert!(report.max_relative_deviation_yf() < 0.1, "{}", report.max_relative_deviation_yf());
    assert!(report.max_relative_deviation_dyf() < 0.1, "{}", report.max_relative_deviation_dyf());
}

#[test]
fn interior_coverage_near_nominal() {
    let spec = FilterSpec::new(3, 6).unwrap();
    let signal = smooth_signal(80);
    let config = MonteCarloConfig { trials: 2000, seed: 5, ..MonteCarloConfig::default() };
    let report = monte_carlo_validate_with(&spec, &signal, 1.0, &config).unwrap();
    for t in 6..80 - 6 {
        assert!((report.coverage_yf[t] - 0.95).abs() <= 0.02, "t={t}: {}", report.coverage_yf[t]);
        assert!((report.coverage_dyf[t] - 0.95).abs() <= 0.02, "t={t}: {}", report.coverage_dyf[t]);
    }
}

#[test]
fn zero_noise_gives_zero_spread() {
    let spec = FilterSpec::new(5, 4).unwrap();
    let report = monte_carlo_validate(&spec, &smooth_signal(30), 0.0, 100, 1).unwrap();
    assert!(report.empirical_syf.iter().chain(&report.empirical_sdyf).all(|v| *v == 0.0));
}

#[test]
fn spread_scales_with_sigma() {
    let spec = FilterSpec::new(5, 6).unwrap();
    let signal = smooth_signal(40);
    let one = monte_carlo_validate(&spec, &signal, 0.3, 300, 9).unwrap();
    let two = monte_carlo_validate(&spec, &signal, 0.6, 300, 9).unwrap();
    for t in 0..40 {
        assert!((two.empirical_sdyf[t] / one.empirical_sdyf[t] - 2.0).abs() < 1e-6);
        assert!((two.empirical_syf[t] / one.empirical_syf[t] - 2.0).abs() < 1e-6);
    }
}

#[test]
fn schedule_independent() {
    let spec = FilterSpec::new(5, 9).unwrap();
    let signal = smooth_signal(67);
    let seq = MonteCarloConfig { trials: 400, seed: 3, execution: Execution::Sequential, ..Default::default() };
    let par = MonteCarloConfig { execution: Execution::Parallel, ..seq };
    let a = monte_carlo_validate_with(&spec, &signal, 0.351, &seq).unwrap();
    let b = monte_carlo_validate_with(&spec, &signal, 0.351, &par).unwrap();
    assert_eq!(a, b);
}

#[test]
fn tails_inflate_output_sd() {
    for n in [1usize, 3, 5, 7] {
        for m in FilterSpec::min_half_window(n)..=15 {
            let spec = FilterSpec::new(n, m).unwrap();
            let bank = build_coefficient_bank(&spec).unwrap();
            let q = 2 * m + 21;
            let sds = output_sd(&bank, &NoiseEstimate::known(1.0), q).unwrap();
            // the outermost sample carries the widest band
            for t in 1..q {
                assert!(sds.syf[0] >= sds.syf[t] - 1e-12, "n={n} m={m} t={t}");
                if n >= 2 {
                    assert!(sds.sdyf[0] >= sds.sdyf[t] - 1e-12, "n={n} m={m} t={t}");
                }
            }
            assert!(sds.syf[0] >= sds.syf[m]);
            assert!(sds.sdyf[0] >= sds.sdyf[m]);
            // mirrored tail
            for t in 0..q {
                assert!((sds.syf[t] - sds.syf[q - 1 - t]).abs() < 1e-14);
            }
        }
    }
}

#[test]
fn global_fit_matches_uniform_filter_on_one_window() {
    for n in 2..=7 {
        for m in n..=10 {
            let spec = FilterSpec::with_weighting(n, m, Weighting::Uniform).unwrap();
            let y: Vec<f64> = (0..2 * m + 1).map(|i| ((i * 7919 + n) % 23) as f64 * 0.37).collect();
            let sg = apply_filter(&spec, &y).unwrap();
            let fit = fit_polynomial(&y, n - 1).unwrap();
            for (a, b) in sg.yf.iter().zip(&fit.fitted) {
                assert!((a - b).abs() < 1e-8 * b.abs().max(1.0), "n={n} m={m}: {a} vs {b}");
            }
        }
    }
}
