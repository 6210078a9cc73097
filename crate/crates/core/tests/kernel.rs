use innovcp::rng::derive_seed;
use innovcp::{fit, generate, nw_mean, BandwidthRule, DgpSpec, FitConfig, FitMode, InnovationSpec, KernelSpec, Model, Series};

#[test]
fn flat_model_residuals_are_standardized() {
    let series = generate(&DgpSpec::null(Model::iid(), InnovationSpec::StdNormal, 500, 3)).unwrap();
    let f = fit(&series, &FitConfig::default()).unwrap();
    let n = f.residuals.len() as f64;
    let mean = f.residuals.iter().sum::<f64>() / n;
    let var = f.residuals.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    assert!(mean.abs() <= 0.1, "mean {mean}");
    assert!((var - 1.0).abs() <= 0.15, "variance {var}");
}

#[test]
fn homoscedastic_residuals_are_raw_differences() {
    let series = generate(&DgpSpec::null(Model::ar1_half(), InnovationSpec::StdNormal, 120, 4)).unwrap();
    let config = FitConfig::new(KernelSpec::Gaussian, BandwidthRule::default(), FitMode::Homoscedastic);
    let f = fit(&series, &config).unwrap();
    let h = config.bandwidth.bandwidth(120).unwrap();
    for (j, (x, y)) in series.lagged().iter().zip(series.responses()).enumerate() {
        let m = nw_mean(*x, &series, KernelSpec::Gaussian, h).unwrap();
        assert_eq!(f.m_hat[j], m);
        assert_eq!(f.residuals[j], y - m);
        assert_eq!(f.sigma_hat[j], 1.0);
    }
}

#[test]
fn triweight_vanishes_smoothly_at_support_edges() {
    let k = KernelSpec::Triweight;
    for u in [-1.0, 1.0] {
        assert_eq!(k.eval(u), 0.0);
        let d = 1e-6;
        let slope = (k.eval(u * (1.0 - d)) - k.eval(u)) / d;
        assert!(slope.abs() < 1e-9, "slope {slope} at {u}");
    }
}

/// Sup of `|m_hat(x) - 0.5 x|` over design points between the 10% and 90%
/// sample quantiles.
fn sup_error(n: usize, seed: u64) -> f64 {
    let series: Series = generate(&DgpSpec::null(Model::ar1_half(), InnovationSpec::StdNormal, n, seed)).unwrap();
    // m_hat does not depend on the mode; homoscedastic avoids the variance floor
    let config = FitConfig::new(KernelSpec::Gaussian, BandwidthRule::default(), FitMode::Homoscedastic);
    let f = fit(&series, &config).unwrap();
    let mut sorted = f.design.clone();
    sorted.sort_by(f64::total_cmp);
    let (a, b) = (sorted[n / 10], sorted[n - n / 10 - 1]);
    f.design
        .iter()
        .zip(&f.m_hat)
        .filter(|(x, _)| (a..=b).contains(*x))
        .map(|(x, m)| (m - 0.5 * x).abs())
        .fold(0.0, f64::max)
}

#[test]
fn mean_estimate_converges_uniformly() {
    let medians: Vec<f64> = [200usize, 800, 3200]
        .iter()
        .map(|&n| {
            let mut e: Vec<f64> = (0..50).map(|s| sup_error(n, derive_seed(n as u64, s))).collect();
            e.sort_by(f64::total_cmp);
            0.5 * (e[24] + e[25])
        })
        .collect();
    assert!(medians[0] > medians[1] && medians[1] > medians[2], "{medians:?}");
}
