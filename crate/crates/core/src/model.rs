//! Series container, innovation laws and the autoregressive data-generating
//! processes `X_j = m(X_{j-1}) + sigma(X_{j-1}) * eps_j` with an optional
//! change in the innovation law.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, SimRng};

/// Observed values `X_0, ..., X_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    values: Vec<f64>,
    label: Option<String>,
}

impl Series {
    pub fn new(values: Vec<f64>, label: Option<String>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidSeries(format!(
                "need at least 2 values, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSeries(format!(
                "non-finite value {} at index {i}",
                values[i]
            )));
        }
        Ok(Series { values, label })
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        Self::new(values, None)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    /// Number of lag pairs `(X_{j-1}, X_j)`.
    pub fn n(&self) -> usize {
        self.values.len() - 1
    }

    /// Design points `X_0, ..., X_{n-1}`.
    pub fn lagged(&self) -> &[f64] {
        &self.values[..self.values.len() - 1]
    }

    /// Responses `X_1, ..., X_n`.
    pub fn responses(&self) -> &[f64] {
        &self.values[1..]
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Innovation distribution families used in the simulation study.
///
/// `MeanMixture` does not have unit variance (it is `1 + 4 zeta^2`); the
/// mixtures built on the Student-t use the standardized `t(3)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum InnovationSpec {
    StdNormal,
    /// `N(-2 zeta, 1)` or `N(2 zeta, 1)` with probability 1/2 each.
    MeanMixture { zeta: f64 },
    /// `N(0, (1-zeta)^2)` or `N(0, 2-(1-zeta)^2)` with probability 1/2 each.
    VarMixture { zeta: f64 },
    /// `t(nu)` scaled to unit variance.
    StdStudentT { nu: f64 },
    /// Standardized `t(3)` shifted by `-2 zeta` or `+2 zeta`.
    ShiftedTMixture { zeta: f64 },
    /// Standardized `t(3)` scaled by `1-zeta` or `sqrt(2-(1-zeta)^2)`.
    ScaledTMixture { zeta: f64 },
    /// Skew-normal with shape `10 zeta`, located and scaled to mean 0, variance 1.
    SkewNormal { zeta: f64 },
    Normal { mean: f64, sd: f64 },
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite, got {v}")))
    }
}

fn unit_interval_open(name: &str, zeta: f64) -> Result<()> {
    if (0.0..1.0).contains(&zeta) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name}: zeta must lie in [0, 1), got {zeta}"
        )))
    }
}

fn nonneg(name: &str, zeta: f64) -> Result<()> {
    if zeta.is_finite() && zeta >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name}: zeta must be finite and >= 0, got {zeta}"
        )))
    }
}

impl InnovationSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            InnovationSpec::StdNormal => Ok(()),
            InnovationSpec::MeanMixture { zeta } => nonneg("mean-mixture", zeta),
            InnovationSpec::VarMixture { zeta } => unit_interval_open("var-mixture", zeta),
            InnovationSpec::StdStudentT { nu } => {
                if nu.is_finite() && nu > 2.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!(
                        "standardized Student-t needs nu > 2, got {nu}"
                    )))
                }
            }
            InnovationSpec::ShiftedTMixture { zeta } => nonneg("shifted-t-mixture", zeta),
            InnovationSpec::ScaledTMixture { zeta } => unit_interval_open("scaled-t-mixture", zeta),
            InnovationSpec::SkewNormal { zeta } => finite("skew-normal zeta", zeta),
            InnovationSpec::Normal { mean, sd } => {
                finite("normal mean", mean)?;
                if sd.is_finite() && sd > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!(
                        "normal sd must be > 0, got {sd}"
                    )))
                }
            }
        }
    }

    /// Population mean and variance, where finite.
    pub fn moments(&self) -> (f64, f64) {
        match *self {
            InnovationSpec::StdNormal => (0.0, 1.0),
            InnovationSpec::MeanMixture { zeta } => (0.0, 1.0 + 4.0 * zeta * zeta),
            InnovationSpec::VarMixture { .. } => (0.0, 1.0),
            InnovationSpec::StdStudentT { .. } => (0.0, 1.0),
            InnovationSpec::ShiftedTMixture { zeta } => (0.0, 1.0 + 4.0 * zeta * zeta),
            InnovationSpec::ScaledTMixture { .. } => (0.0, 1.0),
            InnovationSpec::SkewNormal { .. } => (0.0, 1.0),
            InnovationSpec::Normal { mean, sd } => (mean, sd * sd),
        }
    }

    pub fn sampler(&self) -> Result<InnovationSampler> {
        self.validate()?;
        InnovationSampler::build(self)
    }
}

/// Skew-normal location, scale and shape as used for the `zeta` family:
/// shape `alpha = 10 zeta`; location and scale chosen for mean 0, variance 1.
pub fn skew_normal_params(zeta: f64) -> (f64, f64, f64) {
    let a = 10.0 * zeta;
    let a2 = a * a;
    let a4 = a2 * a2;
    let location = -(2.0 * PI * (a2 + a4)
        / (PI * PI + (2.0 * PI * PI - 2.0 * PI) * a2 + (PI * PI - 2.0 * PI) * a4))
        .sqrt();
    let scale = (PI * (1.0 + a2)).sqrt() / (PI + (PI - 2.0) * a2).sqrt();
    (location, scale, a)
}

/// A validated innovation law ready for repeated sampling.
#[derive(Debug, Clone)]
pub struct InnovationSampler {
    kind: SamplerKind,
}

#[derive(Debug, Clone)]
enum SamplerKind {
    Normal { mean: f64, sd: f64 },
    MeanMixture { shift: f64 },
    VarMixture { sd_low: f64, sd_high: f64 },
    StdT { t: StudentT<f64>, scale: f64 },
    ShiftedT { t: StudentT<f64>, scale: f64, shift: f64 },
    ScaledT { t: StudentT<f64>, scale: f64, low: f64, high: f64 },
    SkewNormal { delta: f64, location: f64, scale: f64 },
}

fn std_t(nu: f64) -> Result<(StudentT<f64>, f64)> {
    let t = StudentT::new(nu).map_err(|e| Error::InvalidParameter(format!("student-t: {e}")))?;
    Ok((t, ((nu - 2.0) / nu).sqrt()))
}

impl InnovationSampler {
    fn build(spec: &InnovationSpec) -> Result<Self> {
        let kind = match *spec {
            InnovationSpec::StdNormal => SamplerKind::Normal { mean: 0.0, sd: 1.0 },
            InnovationSpec::Normal { mean, sd } => SamplerKind::Normal { mean, sd },
            InnovationSpec::MeanMixture { zeta } => SamplerKind::MeanMixture { shift: 2.0 * zeta },
            InnovationSpec::VarMixture { zeta } => {
                let low = (1.0 - zeta) * (1.0 - zeta);
                SamplerKind::VarMixture {
                    sd_low: low.sqrt(),
                    sd_high: (2.0 - low).sqrt(),
                }
            }
            InnovationSpec::StdStudentT { nu } => {
                let (t, scale) = std_t(nu)?;
                SamplerKind::StdT { t, scale }
            }
            InnovationSpec::ShiftedTMixture { zeta } => {
                let (t, scale) = std_t(3.0)?;
                SamplerKind::ShiftedT {
                    t,
                    scale,
                    shift: 2.0 * zeta,
                }
            }
            InnovationSpec::ScaledTMixture { zeta } => {
                let (t, scale) = std_t(3.0)?;
                let low = 1.0 - zeta;
                SamplerKind::ScaledT {
                    t,
                    scale,
                    low,
                    high: (2.0 - low * low).sqrt(),
                }
            }
            InnovationSpec::SkewNormal { zeta } => {
                let (location, scale, alpha) = skew_normal_params(zeta);
                SamplerKind::SkewNormal {
                    delta: alpha / (1.0 + alpha * alpha).sqrt(),
                    location,
                    scale,
                }
            }
        };
        Ok(InnovationSampler { kind })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            SamplerKind::Normal { mean, sd } => mean + sd * std_normal(rng),
            SamplerKind::MeanMixture { shift } => {
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                sign * shift + std_normal(rng)
            }
            SamplerKind::VarMixture { sd_low, sd_high } => {
                let sd = if rng.random::<bool>() { sd_high } else { sd_low };
                sd * std_normal(rng)
            }
            SamplerKind::StdT { t, scale } => scale * t.sample(rng),
            SamplerKind::ShiftedT { t, scale, shift } => {
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                scale * t.sample(rng) + sign * shift
            }
            SamplerKind::ScaledT {
                t,
                scale,
                low,
                high,
            } => {
                let factor = if rng.random::<bool>() { high } else { low };
                factor * scale * t.sample(rng)
            }
            SamplerKind::SkewNormal {
                delta,
                location,
                scale,
            } => {
                let z0: f64 = std_normal(rng);
                let z1: f64 = std_normal(rng);
                let sn = delta * z0.abs() + (1.0 - delta * delta).sqrt() * z1;
                location + scale * sn
            }
        }
    }
}

#[inline]
fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// One draw from `spec`.
pub fn sample_innovation<R: Rng + ?Sized>(spec: &InnovationSpec, rng: &mut R) -> Result<f64> {
    Ok(spec.sampler()?.sample(rng))
}

/// Conditional mean function `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MeanFn {
    Zero,
    Linear { slope: f64 },
}

impl MeanFn {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            MeanFn::Zero => 0.0,
            MeanFn::Linear { slope } => slope * x,
        }
    }
}

/// Conditional scale function `sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScaleFn {
    Constant { value: f64 },
    /// `sqrt(omega + alpha x^2)`
    Arch { omega: f64, alpha: f64 },
}

impl ScaleFn {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            ScaleFn::Constant { value } => value,
            ScaleFn::Arch { omega, alpha } => (omega + alpha * x * x).sqrt(),
        }
    }
}

/// The pair `(m, sigma)` of an autoregression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelRepr", into = "ModelRepr")]
pub struct Model {
    pub mean: MeanFn,
    pub scale: ScaleFn,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ModelRepr {
    Preset(String),
    Explicit { mean: MeanFn, scale: ScaleFn },
}

impl TryFrom<ModelRepr> for Model {
    type Error = Error;

    fn try_from(r: ModelRepr) -> Result<Self> {
        match r {
            ModelRepr::Preset(name) => Model::preset(&name),
            ModelRepr::Explicit { mean, scale } => {
                let m = Model { mean, scale };
                m.validate()?;
                Ok(m)
            }
        }
    }
}

impl From<Model> for ModelRepr {
    fn from(m: Model) -> Self {
        match m.preset_name() {
            Some(name) => ModelRepr::Preset(name.to_string()),
            None => ModelRepr::Explicit {
                mean: m.mean,
                scale: m.scale,
            },
        }
    }
}

pub const AR1_HALF: &str = "ar1-half";
pub const ARCH1_PAPER: &str = "arch1-paper";

impl Model {
    /// `X_j = 0.5 X_{j-1} + eps_j`
    pub const fn ar1_half() -> Self {
        Model {
            mean: MeanFn::Linear { slope: 0.5 },
            scale: ScaleFn::Constant { value: 1.0 },
        }
    }

    /// `X_j = sqrt(0.75 + 0.25 X_{j-1}^2) eps_j`
    pub const fn arch1_paper() -> Self {
        Model {
            mean: MeanFn::Zero,
            scale: ScaleFn::Arch {
                omega: 0.75,
                alpha: 0.25,
            },
        }
    }

    pub const fn iid() -> Self {
        Model {
            mean: MeanFn::Zero,
            scale: ScaleFn::Constant { value: 1.0 },
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            AR1_HALF => Ok(Self::ar1_half()),
            ARCH1_PAPER => Ok(Self::arch1_paper()),
            "iid" => Ok(Self::iid()),
            other => Err(Error::Config(format!(
                "unknown model preset {other:?} (expected {AR1_HALF}, {ARCH1_PAPER} or iid)"
            ))),
        }
    }

    fn preset_name(&self) -> Option<&'static str> {
        if *self == Self::ar1_half() {
            Some(AR1_HALF)
        } else if *self == Self::arch1_paper() {
            Some(ARCH1_PAPER)
        } else if *self == Self::iid() {
            Some("iid")
        } else {
            None
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.mean {
            MeanFn::Zero => {}
            MeanFn::Linear { slope } => finite("slope", slope)?,
        }
        match self.scale {
            ScaleFn::Constant { value } if value.is_finite() && value > 0.0 => Ok(()),
            ScaleFn::Arch { omega, alpha }
                if omega.is_finite() && alpha.is_finite() && omega > 0.0 && alpha >= 0.0 =>
            {
                Ok(())
            }
            s => Err(Error::InvalidParameter(format!(
                "scale function must be strictly positive: {s:?}"
            ))),
        }
    }
}

fn default_burn_in() -> usize {
    9
}

fn default_theta0() -> f64 {
    1.0
}

/// Full description of one simulated series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    pub model: Model,
    pub pre_change: InnovationSpec,
    pub post_change: InnovationSpec,
    /// Fraction of retained innovations drawn before the change; 1 means no change.
    #[serde(default = "default_theta0")]
    pub theta0: f64,
    pub n: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in_factor: usize,
    #[serde(default)]
    pub seed: u64,
}

impl DgpSpec {
    /// A spec with no change point.
    pub fn null(model: Model, innovation: InnovationSpec, n: usize, seed: u64) -> Self {
        DgpSpec {
            model,
            pre_change: innovation,
            post_change: innovation,
            theta0: 1.0,
            n,
            burn_in_factor: default_burn_in(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.pre_change.validate()?;
        self.post_change.validate()?;
        if !(self.theta0 > 0.0 && self.theta0 <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "theta0 must lie in (0, 1], got {}",
                self.theta0
            )));
        }
        if self.n < 1 {
            return Err(Error::InvalidParameter("n must be positive".into()));
        }
        if self.burn_in_factor < 1 {
            return Err(Error::InvalidParameter(
                "burn_in_factor must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Number of retained innovations drawn from the pre-change law.
    pub fn pre_change_count(&self) -> usize {
        if self.theta0 >= 1.0 {
            self.n
        } else {
            (self.n as f64 * self.theta0).floor() as usize
        }
    }

    pub fn from_toml(s: &str) -> Result<Self> {
        let spec: DgpSpec = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Simulates `(1 + burn_in_factor) n` steps from `X = 0` and keeps the last
/// `n + 1` values. Retained innovations `1..=floor(n theta0)` come from the
/// pre-change law, the rest from the post-change law.
pub fn generate(spec: &DgpSpec) -> Result<Series> {
    spec.validate()?;
    let mut rng = rng_from_seed(spec.seed);
    generate_with(spec, &mut rng)
}

pub(crate) fn generate_with(spec: &DgpSpec, rng: &mut SimRng) -> Result<Series> {
    let pre = spec.pre_change.sampler()?;
    let post = spec.post_change.sampler()?;
    let n = spec.n;
    let total = (1 + spec.burn_in_factor) * n;
    let first_kept = total - n;
    let last_pre = first_kept + spec.pre_change_count();

    let mut values = Vec::with_capacity(n + 1);
    let mut x = 0.0_f64;
    if first_kept == 0 {
        values.push(x);
    }
    for step in 1..=total {
        let eps = if step <= last_pre {
            pre.sample(rng)
        } else {
            post.sample(rng)
        };
        x = spec.model.mean.eval(x) + spec.model.scale.eval(x) * eps;
        if !x.is_finite() {
            return Err(Error::NumericOverflow { step });
        }
        if step >= first_kept {
            values.push(x);
        }
    }
    Series::new(values, None)
}
