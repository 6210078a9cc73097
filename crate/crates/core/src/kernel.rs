//! Nadaraya-Watson estimators of the conditional mean and variance, and the
//! standardized residuals built from them.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Series;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelSpec {
    #[default]
    Gaussian,
    /// `35/32 (1 - u^2)^3` on `[-1, 1]`.
    Triweight,
}

impl KernelSpec {
    #[inline]
    pub fn eval(self, u: f64) -> f64 {
        match self {
            KernelSpec::Gaussian => INV_SQRT_2PI * (-0.5 * u * u).exp(),
            KernelSpec::Triweight => {
                if u.abs() >= 1.0 {
                    0.0
                } else {
                    let b = 1.0 - u * u;
                    35.0 / 32.0 * b * b * b
                }
            }
        }
    }
}

impl std::str::FromStr for KernelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(KernelSpec::Gaussian),
            "triweight" => Ok(KernelSpec::Triweight),
            _ => Err(Error::InvalidParameter(format!("unknown kernel {s:?}"))),
        }
    }
}

/// How the bandwidth depends on the number of lag pairs `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum BandwidthRule {
    /// `c * n^exponent`
    PowerLaw { c: f64, exponent: f64 },
    Fixed { h: f64 },
}

impl Default for BandwidthRule {
    fn default() -> Self {
        BandwidthRule::PowerLaw {
            c: 1.0,
            exponent: -0.25,
        }
    }
}

impl BandwidthRule {
    pub fn power_law(c: f64) -> Self {
        BandwidthRule::PowerLaw {
            c,
            exponent: -0.25,
        }
    }

    pub fn bandwidth(&self, n: usize) -> Result<f64> {
        let h = match *self {
            BandwidthRule::PowerLaw { c, exponent } => c * (n as f64).powf(exponent),
            BandwidthRule::Fixed { h } => h,
        };
        if h.is_finite() && h > 0.0 {
            Ok(h)
        } else {
            Err(Error::InvalidParameter(format!(
                "bandwidth must be positive and finite, got {h} from {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitMode {
    /// Residuals `(X_j - m(X_{j-1})) / sigma(X_{j-1})`.
    #[default]
    Heteroscedastic,
    /// Residuals `X_j - m(X_{j-1})`.
    Homoscedastic,
}

impl std::str::FromStr for FitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hetero" | "heteroscedastic" => Ok(FitMode::Heteroscedastic),
            "homo" | "homoscedastic" => Ok(FitMode::Homoscedastic),
            _ => Err(Error::InvalidParameter(format!("unknown mode {s:?}"))),
        }
    }
}

pub const DEFAULT_VAR_FLOOR: f64 = 1e-12;

/// Estimator settings. `variance_bandwidth` defaults to the mean bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub kernel: KernelSpec,
    pub bandwidth: BandwidthRule,
    pub variance_bandwidth: Option<BandwidthRule>,
    pub mode: FitMode,
    pub var_floor: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            kernel: KernelSpec::Gaussian,
            bandwidth: BandwidthRule::default(),
            variance_bandwidth: None,
            mode: FitMode::Heteroscedastic,
            var_floor: DEFAULT_VAR_FLOOR,
        }
    }
}

impl FitConfig {
    pub fn new(kernel: KernelSpec, bandwidth: BandwidthRule, mode: FitMode) -> Self {
        FitConfig {
            kernel,
            bandwidth,
            mode,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// `X_{j-1}`, j = 1..n
    pub design: Vec<f64>,
    /// `X_j`, j = 1..n
    pub response: Vec<f64>,
    pub m_hat: Vec<f64>,
    pub sigma_hat: Vec<f64>,
    pub residuals: Vec<f64>,
    pub bandwidth_used: f64,
    pub variance_bandwidth_used: f64,
    pub mode: FitMode,
}

impl FitResult {
    pub fn n(&self) -> usize {
        self.residuals.len()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::io("<fit csv>", std::io::Error::other(e));
        w.write_record(["j", "x_prev", "x", "m_hat", "sigma_hat", "residual"])
            .map_err(io)?;
        for j in 0..self.n() {
            w.write_record([
                (j + 1).to_string(),
                self.design[j].to_string(),
                self.response[j].to_string(),
                self.m_hat[j].to_string(),
                self.sigma_hat[j].to_string(),
                self.residuals[j].to_string(),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| Error::io("<fit csv>", e))
    }
}

fn check_bandwidth(h: f64) -> Result<()> {
    if h.is_finite() && h > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("bandwidth must be > 0, got {h}")))
    }
}

/// Kernel weights of all design points around `x`, written into `buf`.
/// Returns their sum, failing when it vanishes.
fn fill_weights(
    x: f64,
    design: &[f64],
    kernel: KernelSpec,
    h: f64,
    buf: &mut Vec<f64>,
) -> Result<f64> {
    buf.clear();
    buf.extend(design.iter().map(|&xi| kernel.eval((x - xi) / h)));
    let sum: f64 = buf.iter().sum();
    if sum > 0.0 {
        Ok(sum)
    } else {
        Err(Error::EmptyNeighborhood { x, h })
    }
}

fn weighted_mean(weights: &[f64], sum: f64, y: &[f64]) -> f64 {
    weights.iter().zip(y).map(|(w, v)| w * v).sum::<f64>() / sum
}

fn weighted_spread(weights: &[f64], sum: f64, y: &[f64], center: f64) -> Result<f64> {
    let v = weights
        .iter()
        .zip(y)
        .map(|(w, v)| {
            let d = v - center;
            w * d * d
        })
        .sum::<f64>()
        / sum;
    if v < -1e-12 {
        return Err(Error::InternalConsistency(format!(
            "negative variance estimate {v}"
        )));
    }
    Ok(v.max(0.0))
}

/// `sum_i K((x - X_{i-1})/h) X_i / sum_i K((x - X_{i-1})/h)`, i = 1..n.
pub fn nw_mean(x: f64, series: &Series, kernel: KernelSpec, h: f64) -> Result<f64> {
    check_bandwidth(h)?;
    let mut buf = Vec::with_capacity(series.n());
    let sum = fill_weights(x, series.lagged(), kernel, h, &mut buf)?;
    Ok(weighted_mean(&buf, sum, series.responses()))
}

/// Kernel-weighted spread of `X_i` around `nw_mean(x)`, same bandwidth for both.
pub fn nw_variance(x: f64, series: &Series, kernel: KernelSpec, h: f64) -> Result<f64> {
    nw_variance_with(x, series, kernel, h, h)
}

/// As [`nw_variance`] with separate bandwidths for the mean and the spread.
pub fn nw_variance_with(
    x: f64,
    series: &Series,
    kernel: KernelSpec,
    h_mean: f64,
    h_var: f64,
) -> Result<f64> {
    check_bandwidth(h_mean)?;
    check_bandwidth(h_var)?;
    let mut buf = Vec::with_capacity(series.n());
    let sum = fill_weights(x, series.lagged(), kernel, h_mean, &mut buf)?;
    let m = weighted_mean(&buf, sum, series.responses());
    let sum = if h_var == h_mean {
        sum
    } else {
        fill_weights(x, series.lagged(), kernel, h_var, &mut buf)?
    };
    weighted_spread(&buf, sum, series.responses(), m)
}

/// Evaluates the estimators at every design point `X_{j-1}` (the sums
/// include `i = j`) and forms the residuals.
pub fn fit(series: &Series, config: &FitConfig) -> Result<FitResult> {
    let n = series.n();
    let h = config.bandwidth.bandwidth(n)?;
    let h_var = match config.variance_bandwidth {
        Some(rule) => rule.bandwidth(n)?,
        None => h,
    };
    let design = series.lagged();
    let response = series.responses();

    let mut m_hat = Vec::with_capacity(n);
    let mut sigma_hat = Vec::with_capacity(n);
    let mut residuals = Vec::with_capacity(n);
    let mut degenerate = Vec::new();
    let mut buf = Vec::with_capacity(n);

    for (j, (&x, &y)) in design.iter().zip(response).enumerate() {
        let sum = fill_weights(x, design, config.kernel, h, &mut buf)?;
        let m = weighted_mean(&buf, sum, response);
        m_hat.push(m);
        match config.mode {
            FitMode::Homoscedastic => {
                sigma_hat.push(1.0);
                residuals.push(y - m);
            }
            FitMode::Heteroscedastic => {
                let sum = if h_var == h {
                    sum
                } else {
                    fill_weights(x, design, config.kernel, h_var, &mut buf)?
                };
                let v = weighted_spread(&buf, sum, response, m)?;
                if v <= config.var_floor {
                    degenerate.push(j + 1);
                    sigma_hat.push(f64::NAN);
                    residuals.push(f64::NAN);
                    continue;
                }
                let s = v.sqrt();
                sigma_hat.push(s);
                residuals.push((y - m) / s);
            }
        }
    }
    if !degenerate.is_empty() {
        return Err(Error::DegenerateVariance {
            indices: degenerate,
        });
    }

    Ok(FitResult {
        design: design.to_vec(),
        response: response.to_vec(),
        m_hat,
        sigma_hat,
        residuals,
        bandwidth_used: h,
        variance_bandwidth_used: h_var,
        mode: config.mode,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(v: &[f64]) -> Series {
        Series::from_values(v.to_vec()).unwrap()
    }

    #[test]
    fn constant_series() {
        let s = series(&[2.5; 20]);
        assert!((nw_mean(1.0, &s, KernelSpec::Gaussian, 0.3).unwrap() - 2.5).abs() < 1e-15);
        // zero up to rounding in the weighted mean
        assert!(nw_variance(2.5, &s, KernelSpec::Gaussian, 0.3).unwrap() < 1e-28);
    }

    #[test]
    fn two_pair_hand_example() {
        // independent mpmath evaluation at 30 digits
        let s = series(&[0.0, 1.0, 3.0]);
        let m = nw_mean(0.0, &s, KernelSpec::Gaussian, 1.0).unwrap();
        assert!((m - 1.755_081_337_596_290_9).abs() < 1e-14, "{m}");
        let v = nw_variance(0.0, &s, KernelSpec::Gaussian, 1.0).unwrap();
        assert!((v - 0.940_014_848_806_378).abs() < 1e-14, "{v}");
    }

    #[test]
    fn triweight_compact_support() {
        let s = series(&[0.0, 1.0, 0.5, 0.2]);
        match nw_mean(5.0, &s, KernelSpec::Triweight, 1.0) {
            Err(Error::EmptyNeighborhood { x, h }) => {
                assert_eq!(x, 5.0);
                assert_eq!(h, 1.0);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(KernelSpec::Triweight.eval(1.0), 0.0);
        assert_eq!(KernelSpec::Triweight.eval(-1.0), 0.0);
        assert!((KernelSpec::Triweight.eval(0.0) - 35.0 / 32.0).abs() < 1e-15);
    }

    #[test]
    fn kernels_integrate_to_one() {
        for k in [KernelSpec::Gaussian, KernelSpec::Triweight] {
            let steps = 200_000;
            let (lo, hi) = (-10.0, 10.0);
            let du = (hi - lo) / steps as f64;
            let (mut mass, mut first) = (0.0, 0.0);
            for i in 0..steps {
                let u = lo + (i as f64 + 0.5) * du;
                mass += k.eval(u) * du;
                first += u * k.eval(u) * du;
            }
            assert!((mass - 1.0).abs() < 1e-8, "{k:?} {mass}");
            assert!(first.abs() < 1e-10);
        }
    }

    #[test]
    fn triweight_derivative_vanishes_at_edges() {
        let d = 1e-6;
        let k = KernelSpec::Triweight;
        let slope = (k.eval(1.0) - k.eval(1.0 - d)) / d;
        assert!(slope.abs() < 1e-9);
    }

    #[test]
    fn homoscedastic_residuals() {
        let s = series(&[0.1, -0.4, 0.9, 1.3, -0.2, 0.0, 0.7]);
        let cfg = FitConfig::new(KernelSpec::Gaussian, BandwidthRule::Fixed { h: 0.5 }, FitMode::Homoscedastic);
        let f = fit(&s, &cfg).unwrap();
        for j in 0..f.n() {
            assert_eq!(f.sigma_hat[j], 1.0);
            assert_eq!(f.residuals[j], s.responses()[j] - f.m_hat[j]);
            let m = nw_mean(s.lagged()[j], &s, KernelSpec::Gaussian, 0.5).unwrap();
            assert_eq!(m, f.m_hat[j]);
        }
    }

    #[test]
    fn degenerate_variance_lists_indices() {
        // Triweight with tiny bandwidth: each design point only sees itself.
        let s = series(&[0.0, 1.0, 2.0, 3.0, 4.0]);
        let cfg = FitConfig::new(KernelSpec::Triweight, BandwidthRule::Fixed { h: 0.1 }, FitMode::Heteroscedastic);
        match fit(&s, &cfg) {
            Err(Error::DegenerateVariance { indices }) => assert_eq!(indices, vec![1, 2, 3, 4]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bandwidth_rules() {
        let h = BandwidthRule::default().bandwidth(256).unwrap();
        assert!((h - 0.25).abs() < 1e-15);
        assert!(BandwidthRule::Fixed { h: 0.0 }.bandwidth(10).is_err());
        assert!(BandwidthRule::power_law(-1.0).bandwidth(10).is_err());
        assert_eq!(BandwidthRule::Fixed { h: 0.7 }.bandwidth(3).unwrap(), 0.7);
    }

    #[test]
    fn variance_matches_second_moment_form() {
        let s = series(&[0.3, -0.2, 1.1, 0.4, -0.9, 0.6, 0.2, -0.1, 0.8, -0.5]);
        for x in [-0.7, 0.0, 0.25, 0.9] {
            let h = 0.6;
            let w: Vec<f64> = s.lagged().iter().map(|xi| (-0.5 * ((x - xi) / h).powi(2)).exp()).collect();
            let total: f64 = w.iter().sum();
            let m1 = w.iter().zip(s.responses()).map(|(w, y)| w * y).sum::<f64>() / total;
            let m2 = w.iter().zip(s.responses()).map(|(w, y)| w * y * y).sum::<f64>() / total;
            let v = nw_variance(x, &s, KernelSpec::Gaussian, h).unwrap();
            assert!((v - (m2 - m1 * m1)).abs() < 1e-12, "x={x}: {v} vs {}", m2 - m1 * m1);
        }
    }

    #[test]
    fn separate_variance_bandwidth() {
        let s = series(&[0.3, -0.2, 1.1, 0.4, -0.9, 0.6, 0.2, -0.1]);
        let mut cfg = FitConfig::new(KernelSpec::Gaussian, BandwidthRule::Fixed { h: 0.5 }, FitMode::Heteroscedastic);
        cfg.variance_bandwidth = Some(BandwidthRule::Fixed { h: 1.5 });
        let f = fit(&s, &cfg).unwrap();
        assert_eq!(f.variance_bandwidth_used, 1.5);
        let x = s.lagged()[2];
        let v = nw_variance_with(x, &s, KernelSpec::Gaussian, 0.5, 1.5).unwrap();
        assert_eq!(f.sigma_hat[2], v.sqrt());
    }

    #[test]
    fn csv_export_has_header_and_rows() {
        let s = series(&[0.3, -0.2, 1.1, 0.4]);
        let f = fit(&s, &FitConfig::default()).unwrap();
        let mut out = Vec::new();
        f.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "j,x_prev,x,m_hat,sigma_hat,residual");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("1,0.3,-0.2,"));
    }
}
