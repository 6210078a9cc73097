//! Two-sample sequential empirical process of the residuals and its
//! Kolmogorov-Smirnov functional.
//!
//! For a split after residual `k` the process is
//!
//! ```text
//! T(k, t) = sqrt(n) * (W_k / n) * ((W - W_k) / n) * (F_k(t) - F*_k(t))
//! ```
//!
//! where `W_k` is the weight carried by the first `k` residuals, `F_k` the
//! weighted ECDF of those residuals and `F*_k` that of the rest. Writing
//! `C_k(t)` for the weight of the first `k` residuals at or below `t`, this
//! equals `sqrt(n) / n^2 * (C_k(t) W - C_n(t) W_k)`, which needs no division
//! and vanishes when either side carries no weight.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{fit, FitConfig, FitMode, FitResult};
use crate::model::Series;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum WeightSpec {
    #[default]
    Trivial,
    /// 1 on `[a + kappa, b - kappa]`, 0 outside `[a, b]`, C3 ramps between.
    Interval { a: f64, b: f64, kappa: f64 },
}

/// `35u^4 - 84u^5 + 70u^6 - 20u^7`: rises from 0 to 1 on `[0, 1]` with the
/// first three derivatives vanishing at both ends.
fn smoothstep7(u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    let u2 = u * u;
    let u4 = u2 * u2;
    u4 * (35.0 + u * (-84.0 + u * (70.0 - 20.0 * u)))
}

impl WeightSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            WeightSpec::Trivial => Ok(()),
            WeightSpec::Interval { a, b, kappa } => {
                if a.is_finite() && b.is_finite() && kappa > 0.0 && a + kappa < b - kappa {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!(
                        "weight interval needs kappa > 0 and a + kappa < b - kappa (a={a}, b={b}, kappa={kappa})"
                    )))
                }
            }
        }
    }

    pub fn weight(&self, x: f64) -> f64 {
        match *self {
            WeightSpec::Trivial => 1.0,
            WeightSpec::Interval { a, b, kappa } => {
                if x <= a || x >= b {
                    0.0
                } else if x < a + kappa {
                    smoothstep7((x - a) / kappa)
                } else if x > b - kappa {
                    smoothstep7((b - x) / kappa)
                } else {
                    1.0
                }
            }
        }
    }
}

impl std::str::FromStr for WeightSpec {
    type Err = Error;

    /// `trivial` or `interval:a,b,kappa`.
    fn from_str(s: &str) -> Result<Self> {
        if s == "trivial" {
            return Ok(WeightSpec::Trivial);
        }
        let bad = || Error::InvalidParameter(format!("weight must be trivial or interval:a,b,kappa, got {s:?}"));
        let rest = s.strip_prefix("interval:").ok_or_else(bad)?;
        let parts: Vec<f64> = rest
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        let [a, b, kappa] = parts[..] else {
            return Err(bad());
        };
        let spec = WeightSpec::Interval { a, b, kappa };
        spec.validate()?;
        Ok(spec)
    }
}

pub fn weight(spec: &WeightSpec, x: f64) -> f64 {
    spec.weight(x)
}

/// Weighted ECDF of the first `k` residuals at `t`; 0 when `k = 0` or the
/// first `k` weights sum to 0.
pub fn seq_ecdf(residuals: &[f64], weights: &[f64], k: usize, t: f64) -> f64 {
    let k = k.min(residuals.len());
    let (mut hit, mut total) = (0.0, 0.0);
    for (&r, &w) in residuals[..k].iter().zip(&weights[..k]) {
        total += w;
        if r <= t {
            hit += w;
        }
    }
    if total > 0.0 {
        hit / total
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub ks_stat: f64,
    pub p_value: Option<f64>,
    /// Split `k` maximizing `max_t |T(k/n, t)|`, smallest on ties.
    pub changepoint_index: usize,
    /// Residual value at which the maximum is attained.
    pub t_at_max: f64,
    /// `(k/n, max_t |T(k/n, t)|)` for k = 1..n-1.
    pub s_profile: Vec<(f64, f64)>,
    pub mode: FitMode,
    pub n: usize,
}

impl TestReport {
    pub fn s_star(&self) -> f64 {
        self.changepoint_index as f64 / self.n as f64
    }

    pub fn with_p_value(mut self, p: f64) -> Self {
        self.p_value = Some(p);
        self
    }

    pub fn write_profile_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |e| Error::io("<profile csv>", e);
        writeln!(out, "s,max_abs_T").map_err(io)?;
        for (s, v) in &self.s_profile {
            writeln!(out, "{s},{v}").map_err(io)?;
        }
        out.flush().map_err(io)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "stat": self.ks_stat,
            "p_value": self.p_value,
            "changepoint_index": self.changepoint_index,
            "s_star": self.s_star(),
            "mode": self.mode,
            "n": self.n,
        })
    }
}

/// Evaluates the process on residuals with the given weights, exactly on
/// every split `k = 1..n-1` and every distinct residual value.
pub fn ks_process(residuals: &[f64], weights: &[f64], mode: FitMode) -> Result<TestReport> {
    let n = residuals.len();
    if n < 2 {
        return Err(Error::InvalidSeries(format!(
            "need at least 2 residuals, got {n}"
        )));
    }
    if weights.len() != n {
        return Err(Error::InternalConsistency(format!(
            "{} weights for {n} residuals",
            weights.len()
        )));
    }
    if let Some(j) = residuals.iter().position(|r| !r.is_finite()) {
        return Err(Error::InternalConsistency(format!(
            "non-finite residual at index {}",
            j + 1
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| residuals[a].total_cmp(&residuals[b]));
    let mut rank = vec![0usize; n];
    let mut levels: Vec<f64> = Vec::with_capacity(n);
    // C_n at each distinct level
    let mut level_mass: Vec<f64> = Vec::with_capacity(n);
    for &j in &order {
        if levels.last() != Some(&residuals[j]) {
            levels.push(residuals[j]);
            level_mass.push(level_mass.last().copied().unwrap_or(0.0));
        }
        rank[j] = levels.len() - 1;
        *level_mass.last_mut().unwrap() += weights[j];
    }

    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for &w in weights {
        prefix.push(prefix.last().unwrap() + w);
    }
    let total = prefix[n];
    let scale = (n as f64).sqrt() / (n as f64 * n as f64);

    // profile[k] and the level index attaining it
    let mut profile = vec![0.0f64; n];
    let mut arg_level = vec![0usize; n];
    for (l, &cn) in level_mass.iter().enumerate() {
        let mut c = 0.0;
        for k in 1..n {
            if rank[k - 1] <= l {
                c += weights[k - 1];
            }
            let v = (c * total - cn * prefix[k]).abs() * scale;
            if v > profile[k] {
                profile[k] = v;
                arg_level[k] = l;
            }
        }
    }

    let mut best = 1;
    for k in 2..n {
        if profile[k] > profile[best] {
            best = k;
        }
    }
    Ok(TestReport {
        ks_stat: profile[best],
        p_value: None,
        changepoint_index: best,
        t_at_max: levels[arg_level[best]],
        s_profile: (1..n).map(|k| (k as f64 / n as f64, profile[k])).collect(),
        mode,
        n,
    })
}

pub fn test_process(fit: &FitResult, wspec: &WeightSpec) -> Result<TestReport> {
    wspec.validate()?;
    let weights: Vec<f64> = fit.design.iter().map(|&x| wspec.weight(x)).collect();
    ks_process(&fit.residuals, &weights, fit.mode)
}

/// Fit followed by the test process.
pub fn run_test(series: &Series, config: &FitConfig, wspec: &WeightSpec) -> Result<TestReport> {
    let fitted = fit(series, config)?;
    test_process(&fitted, wspec)
}
