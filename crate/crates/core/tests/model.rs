mod common;

use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use innovcp::model::skew_normal_params;
use innovcp::rng::{derive_seed, rng_from_seed};
use innovcp::{generate, DgpSpec, InnovationSpec, Model};

use common::ks_distance;

/// Mean and variance of the skew-normal law by trapezoidal quadrature of
/// `2/w phi(z) Phi(alpha z)`, `z = (x - loc)/w`.
fn skew_normal_moments(loc: f64, w: f64, alpha: f64) -> (f64, f64) {
    let std = Normal::standard();
    let density = |x: f64| {
        let z = (x - loc) / w;
        2.0 / w * std.pdf(z) * std.cdf(alpha * z)
    };
    let (lo, hi, steps) = (-15.0, 15.0, 300_000);
    let dx = (hi - lo) / steps as f64;
    let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for i in 0..=steps {
        let x = lo + i as f64 * dx;
        let c = if i == 0 || i == steps { 0.5 } else { 1.0 };
        let f = c * density(x) * dx;
        m0 += f;
        m1 += f * x;
        m2 += f * x * x;
    }
    assert!((m0 - 1.0).abs() < 1e-9, "density mass {m0}");
    (m1, m2 - m1 * m1)
}

#[test]
fn skew_normal_parameters_standardize_by_quadrature() {
    for zeta in [0.0, 0.1, 0.2, 0.3, 0.5, 0.7, 1.0] {
        let (loc, scale, alpha) = skew_normal_params(zeta);
        let (mean, var) = skew_normal_moments(loc, scale, alpha);
        assert!(mean.abs() < 1e-9, "zeta={zeta}: mean {mean}");
        assert!((var - 1.0).abs() < 1e-9, "zeta={zeta}: variance {var}");
    }
}

fn draw_moments(spec: &InnovationSpec, n: usize, seed: u64) -> (f64, f64, f64) {
    let sampler = spec.sampler().unwrap();
    let mut rng = rng_from_seed(seed);
    let (mut s1, mut s2, mut s4) = (0.0, 0.0, 0.0);
    for _ in 0..n {
        let x = sampler.sample(&mut rng);
        s1 += x;
        s2 += x * x;
        s4 += x * x * x * x;
    }
    let nf = n as f64;
    (s1 / nf, s2 / nf - (s1 / nf).powi(2), s4 / nf)
}

#[test]
fn unit_variance_families_within_four_standard_errors() {
    let n = 1_000_000;
    let finite_kurtosis = [
        InnovationSpec::StdNormal,
        InnovationSpec::VarMixture { zeta: 0.3 },
        InnovationSpec::VarMixture { zeta: 0.9 },
        InnovationSpec::StdStudentT { nu: 8.0 },
        InnovationSpec::SkewNormal { zeta: 0.3 },
        InnovationSpec::SkewNormal { zeta: 1.0 },
    ];
    for (i, spec) in finite_kurtosis.iter().enumerate() {
        let (mean, var, m4) = draw_moments(spec, n, 100 + i as u64);
        let se_mean = (1.0 / n as f64).sqrt();
        let se_var = ((m4 - 1.0) / n as f64).sqrt();
        assert!(mean.abs() <= 4.0 * se_mean, "{spec:?}: mean {mean}");
        assert!((var - 1.0).abs() <= 4.0 * se_var, "{spec:?}: variance {var}");
    }
    // t(3)-based laws have no fourth moment, so only the mean has a standard error
    for (i, spec) in [InnovationSpec::ScaledTMixture { zeta: 0.4 }, InnovationSpec::StdStudentT { nu: 3.0 }]
        .iter()
        .enumerate()
    {
        let (mean, _, _) = draw_moments(spec, n, 200 + i as u64);
        assert!(mean.abs() <= 4.0 * (1.0 / n as f64).sqrt(), "{spec:?}: mean {mean}");
    }
}

#[test]
fn skew_normal_draws_match_spec_tolerances() {
    let (mean, var, _) = draw_moments(&InnovationSpec::SkewNormal { zeta: 0.3 }, 1_000_000, 5);
    assert!(mean.abs() <= 0.005);
    assert!((var - 1.0).abs() <= 0.01);
}

fn pooled(model: Model, n: usize, seeds: u64, burn_in_factor: usize, salt: u64) -> Vec<Vec<f64>> {
    (0..seeds)
        .map(|s| {
            let mut spec = DgpSpec::null(model, InnovationSpec::StdNormal, n, derive_seed(salt, s));
            spec.burn_in_factor = burn_in_factor;
            generate(&spec).unwrap().into_values()
        })
        .collect()
}

fn variance(paths: &[Vec<f64>]) -> f64 {
    let all: Vec<f64> = paths.iter().flatten().copied().collect();
    let mean = all.iter().sum::<f64>() / all.len() as f64;
    all.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / all.len() as f64
}

fn lag1_autocorrelation(paths: &[Vec<f64>]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for p in paths {
        for w in p.windows(2) {
            num += w[0] * w[1];
        }
        den += p.iter().map(|x| x * x).sum::<f64>();
    }
    num / den
}

#[test]
fn ar1_stationary_variance_and_correlation() {
    let paths = pooled(Model::ar1_half(), 200, 1000, 9, 1);
    let v = variance(&paths);
    assert!((v - 4.0 / 3.0).abs() < 0.03, "variance {v}");
    let r = lag1_autocorrelation(&paths);
    assert!((r - 0.5).abs() < 0.02, "lag-1 autocorrelation {r}");
}

#[test]
fn arch1_stationary_variance_is_one() {
    let v = variance(&pooled(Model::arch1_paper(), 200, 1000, 9, 2));
    assert!((v - 1.0).abs() < 0.03, "variance {v}");
}

#[test]
fn iid_model_has_no_lag1_correlation() {
    let paths = pooled(Model::iid(), 50, 2000, 9, 3);
    let r = lag1_autocorrelation(&paths);
    assert!(r.abs() < 0.02, "lag-1 autocorrelation {r}");
}

#[test]
fn longer_burn_in_leaves_the_law_unchanged() {
    for model in [Model::ar1_half(), Model::arch1_paper()] {
        let short: Vec<f64> = pooled(model, 1000, 200, 9, 4).concat();
        let long: Vec<f64> = pooled(model, 1000, 200, 19, 5).concat();
        let d = ks_distance(&short, &long);
        assert!(d < 0.02, "{model:?}: Kolmogorov distance {d}");
    }
}

#[test]
fn generation_is_bit_reproducible() {
    let spec = DgpSpec {
        post_change: InnovationSpec::SkewNormal { zeta: 0.5 },
        theta0: 0.5,
        ..DgpSpec::null(Model::arch1_paper(), InnovationSpec::StdNormal, 300, 42)
    };
    let a = generate(&spec).unwrap().into_values();
    let b = generate(&spec).unwrap().into_values();
    assert_eq!(a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
}
