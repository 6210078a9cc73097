//! Monte Carlo rejection-rate studies over families of change-point
//! alternatives.
//!
//! A study is a grid of cells `(n, zeta, c)`; each cell runs independent
//! generate / fit / test / p-value replications and reports the fraction
//! rejected at the configured level.

use std::fmt::Write as _;
use std::io::Write;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{BandwidthRule, FitConfig, FitMode, KernelSpec};
use crate::model::{generate, DgpSpec, InnovationSpec, Model};
use crate::nulldist::NullTable;
use crate::rng::SeedMixer;
use crate::seqtest::{run_test, WeightSpec};

/// Alternatives from the simulation study, named by model and post-change law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StudyFamily {
    /// AR(1), `N(0,1)` then mean mixture.
    Ar1MeanMixture,
    /// AR(1), `N(0,1)` then variance mixture.
    Ar1VarMixture,
    Arch1MeanMixture,
    Arch1VarMixture,
    /// ARCH(1), standardized `t(3)` then standardized `t(3 + 10 zeta)`.
    Arch1StudentT,
    /// ARCH(1), standardized `t(3)` then shifted `t(3)` mixture.
    Arch1ShiftedT,
    /// ARCH(1), standardized `t(3)` then scaled `t(3)` mixture.
    Arch1ScaledT,
    Ar1SkewNormal,
    Arch1SkewNormal,
    /// AR(1), `N(0, 0.5^2)` then `N(0, (0.5 + zeta)^2)`, homoscedastic residuals.
    Ar1VarianceChange,
}

const DEFAULT_ZETAS: [f64; 8] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.6, 0.8, 1.0];
const DEFAULT_ZETAS_099: [f64; 8] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.6, 0.8, 0.99];

impl StudyFamily {
    pub const ALL: [StudyFamily; 10] = [
        StudyFamily::Ar1MeanMixture,
        StudyFamily::Ar1VarMixture,
        StudyFamily::Arch1MeanMixture,
        StudyFamily::Arch1VarMixture,
        StudyFamily::Arch1StudentT,
        StudyFamily::Arch1ShiftedT,
        StudyFamily::Arch1ScaledT,
        StudyFamily::Ar1SkewNormal,
        StudyFamily::Arch1SkewNormal,
        StudyFamily::Ar1VarianceChange,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StudyFamily::Ar1MeanMixture => "ar1-mean-mixture",
            StudyFamily::Ar1VarMixture => "ar1-var-mixture",
            StudyFamily::Arch1MeanMixture => "arch1-mean-mixture",
            StudyFamily::Arch1VarMixture => "arch1-var-mixture",
            StudyFamily::Arch1StudentT => "arch1-student-t",
            StudyFamily::Arch1ShiftedT => "arch1-shifted-t",
            StudyFamily::Arch1ScaledT => "arch1-scaled-t",
            StudyFamily::Ar1SkewNormal => "ar1-skew-normal",
            StudyFamily::Arch1SkewNormal => "arch1-skew-normal",
            StudyFamily::Ar1VarianceChange => "ar1-variance-change",
        }
    }

    pub fn model(self) -> Model {
        match self {
            StudyFamily::Ar1MeanMixture
            | StudyFamily::Ar1VarMixture
            | StudyFamily::Ar1SkewNormal
            | StudyFamily::Ar1VarianceChange => Model::ar1_half(),
            _ => Model::arch1_paper(),
        }
    }

    pub fn pre_change(self) -> InnovationSpec {
        match self {
            StudyFamily::Arch1StudentT | StudyFamily::Arch1ShiftedT | StudyFamily::Arch1ScaledT => {
                InnovationSpec::StdStudentT { nu: 3.0 }
            }
            StudyFamily::Ar1VarianceChange => InnovationSpec::Normal { mean: 0.0, sd: 0.5 },
            _ => InnovationSpec::StdNormal,
        }
    }

    pub fn post_change(self, zeta: f64) -> InnovationSpec {
        match self {
            StudyFamily::Ar1MeanMixture | StudyFamily::Arch1MeanMixture => {
                InnovationSpec::MeanMixture { zeta }
            }
            StudyFamily::Ar1VarMixture | StudyFamily::Arch1VarMixture => {
                InnovationSpec::VarMixture { zeta }
            }
            StudyFamily::Arch1StudentT => InnovationSpec::StdStudentT {
                nu: 3.0 + 10.0 * zeta,
            },
            StudyFamily::Arch1ShiftedT => InnovationSpec::ShiftedTMixture { zeta },
            StudyFamily::Arch1ScaledT => InnovationSpec::ScaledTMixture { zeta },
            StudyFamily::Ar1SkewNormal | StudyFamily::Arch1SkewNormal => {
                InnovationSpec::SkewNormal { zeta }
            }
            StudyFamily::Ar1VarianceChange => InnovationSpec::Normal {
                mean: 0.0,
                sd: 0.5 + zeta,
            },
        }
    }

    pub fn default_mode(self) -> FitMode {
        match self {
            StudyFamily::Ar1VarianceChange => FitMode::Homoscedastic,
            _ => FitMode::Heteroscedastic,
        }
    }

    /// The standard zeta grid for this family.
    pub fn default_zetas(self) -> Vec<f64> {
        match self {
            StudyFamily::Ar1VarMixture | StudyFamily::Arch1VarMixture | StudyFamily::Arch1ScaledT => {
                DEFAULT_ZETAS_099.to_vec()
            }
            _ => DEFAULT_ZETAS.to_vec(),
        }
    }

    pub fn default_n_values(self) -> Vec<usize> {
        match self {
            StudyFamily::Arch1StudentT | StudyFamily::Ar1SkewNormal | StudyFamily::Arch1SkewNormal => {
                vec![100, 200, 500]
            }
            _ => vec![100, 200],
        }
    }
}

impl std::str::FromStr for StudyFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StudyFamily::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown study family {s:?}")))
    }
}

fn default_replications() -> usize {
    500
}
fn default_level() -> f64 {
    0.05
}
fn default_constants() -> Vec<f64> {
    vec![1.0]
}
fn default_theta0() -> f64 {
    0.5
}
fn default_burn_in() -> usize {
    9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub family: StudyFamily,
    /// Defaults to the family's standard grid.
    #[serde(default)]
    pub zetas: Option<Vec<f64>>,
    #[serde(default)]
    pub n_values: Option<Vec<usize>>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_level")]
    pub level: f64,
    /// `c` in the bandwidth `c * n^(-1/4)`.
    #[serde(default = "default_constants")]
    pub bandwidth_constants: Vec<f64>,
    /// Defaults to the family's mode.
    #[serde(default)]
    pub mode: Option<FitMode>,
    #[serde(default)]
    pub kernel: KernelSpec,
    #[serde(default = "default_theta0")]
    pub theta0: f64,
    #[serde(default = "default_burn_in")]
    pub burn_in_factor: usize,
    #[serde(default)]
    pub base_seed: u64,
}

impl StudyConfig {
    pub fn for_family(family: StudyFamily) -> Self {
        StudyConfig {
            family,
            zetas: None,
            n_values: None,
            replications: default_replications(),
            level: default_level(),
            bandwidth_constants: default_constants(),
            mode: None,
            kernel: KernelSpec::Gaussian,
            theta0: default_theta0(),
            burn_in_factor: default_burn_in(),
            base_seed: 0,
        }
    }

    pub fn from_toml(s: &str) -> Result<Self> {
        let cfg: StudyConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn zetas(&self) -> Vec<f64> {
        self.zetas.clone().unwrap_or_else(|| self.family.default_zetas())
    }

    pub fn n_values(&self) -> Vec<usize> {
        self.n_values
            .clone()
            .unwrap_or_else(|| self.family.default_n_values())
    }

    pub fn mode(&self) -> FitMode {
        self.mode.unwrap_or_else(|| self.family.default_mode())
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications < 1 {
            return Err(Error::Config("replications must be >= 1".into()));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::Config(format!("level must lie in (0, 1), got {}", self.level)));
        }
        if self.bandwidth_constants.is_empty()
            || self.bandwidth_constants.iter().any(|c| !(c.is_finite() && *c > 0.0))
        {
            return Err(Error::Config("bandwidth constants must be positive".into()));
        }
        if self.n_values().iter().any(|&n| n < 2) {
            return Err(Error::Config("sample sizes must be >= 2".into()));
        }
        for zeta in self.zetas() {
            self.family
                .post_change(zeta)
                .validate()
                .map_err(|e| Error::Config(format!("zeta = {zeta}: {e}")))?;
        }
        Ok(())
    }

    /// Cell coordinates in output order.
    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for &c in &self.bandwidth_constants {
            for n in self.n_values() {
                for zeta in self.zetas() {
                    cells.push(Cell { n, zeta, c });
                }
            }
        }
        cells
    }

    pub fn dgp(&self, cell: &Cell, seed: u64) -> DgpSpec {
        DgpSpec {
            model: self.family.model(),
            pre_change: self.family.pre_change(),
            post_change: self.family.post_change(cell.zeta),
            theta0: self.theta0,
            n: cell.n,
            burn_in_factor: self.burn_in_factor,
            seed,
        }
    }

    pub fn fit_config(&self, cell: &Cell) -> FitConfig {
        FitConfig::new(self.kernel, BandwidthRule::power_law(cell.c), self.mode())
    }

    pub fn replication_seed(&self, cell: &Cell, rep: usize) -> u64 {
        SeedMixer::new(self.base_seed)
            .str(self.family.name())
            .u64(cell.n as u64)
            .f64(cell.zeta)
            .f64(cell.c)
            .u64(rep as u64)
            .finish()
    }

    /// Test statistic of one replication.
    pub fn replicate(&self, cell: &Cell, rep: usize) -> Result<f64> {
        let series = generate(&self.dgp(cell, self.replication_seed(cell, rep)))?;
        Ok(run_test(&series, &self.fit_config(cell), &WeightSpec::Trivial)?.ks_stat)
    }

    /// Statistics of all replications of a cell, in replication order.
    pub fn cell_statistics(&self, cell: &Cell) -> Vec<Result<f64>> {
        (0..self.replications)
            .into_par_iter()
            .map(|rep| self.replicate(cell, rep))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub n: usize,
    pub zeta: f64,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RejectionRow {
    pub family: StudyFamily,
    pub n: usize,
    pub zeta: f64,
    pub c: f64,
    pub rejections: usize,
    /// Replications that produced a statistic.
    pub completed: usize,
    pub failures: usize,
    pub rejection_rate: f64,
    /// `sqrt(p (1 - p) / completed)`; 0 for a single replication.
    pub stderr: f64,
    /// More than 1% of replications failed.
    pub flagged: bool,
}

impl RejectionRow {
    fn from_counts(family: StudyFamily, cell: &Cell, rejections: usize, completed: usize, failures: usize) -> Self {
        let (rate, stderr) = if completed == 0 {
            (f64::NAN, f64::NAN)
        } else {
            let p = rejections as f64 / completed as f64;
            (p, (p * (1.0 - p) / completed as f64).sqrt())
        };
        let total = completed + failures;
        RejectionRow {
            family,
            n: cell.n,
            zeta: cell.zeta,
            c: cell.c,
            rejections,
            completed,
            failures,
            rejection_rate: rate,
            stderr,
            flagged: failures * 100 > total,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RejectionTable {
    pub level: f64,
    pub replications: usize,
    pub rows: Vec<RejectionRow>,
}

impl RejectionTable {
    pub fn get(&self, n: usize, zeta: f64, c: f64) -> Option<&RejectionRow> {
        self.rows
            .iter()
            .find(|r| r.n == n && r.zeta == zeta && r.c == c)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| Error::io("<study csv>", std::io::Error::other(e));
        w.write_record(["family", "n", "zeta", "c", "rejection_rate", "stderr", "failures"])
            .map_err(err)?;
        for r in &self.rows {
            w.write_record([
                r.family.name().to_string(),
                r.n.to_string(),
                r.zeta.to_string(),
                r.c.to_string(),
                r.rejection_rate.to_string(),
                r.stderr.to_string(),
                r.failures.to_string(),
            ])
            .map_err(err)?;
        }
        w.flush().map_err(|e| Error::io("<study csv>", e))
    }

    /// Rejection percentages, one line per `(family, n, c)` and one column per zeta.
    pub fn to_text(&self) -> String {
        let mut zetas: Vec<f64> = Vec::new();
        let mut keys: Vec<(StudyFamily, usize, f64)> = Vec::new();
        for r in &self.rows {
            if !zetas.contains(&r.zeta) {
                zetas.push(r.zeta);
            }
            if !keys.contains(&(r.family, r.n, r.c)) {
                keys.push((r.family, r.n, r.c));
            }
        }
        let label = |k: &(StudyFamily, usize, f64)| format!("{} n={} c={}", k.0.name(), k.1, k.2);
        let width = keys.iter().map(|k| label(k).len()).max().unwrap_or(0).max(3);
        let mut s = String::new();
        let _ = write!(s, "{:<width$}", "%");
        for z in &zetas {
            let _ = write!(s, " | {:>8}", format!("z={z}"));
        }
        s.push('\n');
        s.push_str(&"-".repeat(width + zetas.len() * 11));
        s.push('\n');
        for k in &keys {
            let _ = write!(s, "{:<width$}", label(k));
            for z in &zetas {
                let cell = self
                    .rows
                    .iter()
                    .find(|r| (r.family, r.n, r.c) == *k && r.zeta == *z);
                match cell {
                    Some(r) if r.flagged => {
                        let _ = write!(s, " | {:>7.1}!", 100.0 * r.rejection_rate);
                    }
                    Some(r) => {
                        let _ = write!(s, " | {:>8.1}", 100.0 * r.rejection_rate);
                    }
                    None => {
                        let _ = write!(s, " | {:>8}", "");
                    }
                }
            }
            s.push('\n');
        }
        s
    }
}

/// Runs every cell of the study. `on_cell` sees each row as soon as its
/// cell completes.
pub fn run_study(
    config: &StudyConfig,
    table: &NullTable,
    mut on_cell: impl FnMut(&RejectionRow),
) -> Result<RejectionTable> {
    config.validate()?;
    let mut rows = Vec::new();
    for cell in config.cells() {
        let stats = config.cell_statistics(&cell);
        let mut rejections = 0;
        let mut completed = 0;
        let mut failures = 0;
        for s in &stats {
            match s {
                Ok(stat) => {
                    completed += 1;
                    if table.p_value(*stat) <= config.level {
                        rejections += 1;
                    }
                }
                Err(e) => {
                    failures += 1;
                    log::debug!("replication failed: {e}");
                }
            }
        }
        let row = RejectionRow::from_counts(config.family, &cell, rejections, completed, failures);
        if row.flagged {
            warn!(
                "{} n={} zeta={} c={}: {} of {} replications failed",
                config.family.name(),
                cell.n,
                cell.zeta,
                cell.c,
                failures,
                config.replications
            );
        }
        info!(
            "{} n={} zeta={} c={}: rejection {:.3} (se {:.3})",
            config.family.name(),
            cell.n,
            cell.zeta,
            cell.c,
            row.rejection_rate,
            row.stderr
        );
        on_cell(&row);
        rows.push(row);
    }
    Ok(RejectionTable {
        level: config.level,
        replications: config.replications,
        rows,
    })
}
