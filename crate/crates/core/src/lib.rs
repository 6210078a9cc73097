//! Testing for a change in the innovation distribution of nonparametric
//! autoregressions `X_j = m(X_{j-1}) + sigma(X_{j-1}) eps_j`.
//!
//! The pipeline estimates `m` and `sigma` with Nadaraya-Watson smoothers,
//! standardizes the residuals and compares the weighted empirical
//! distribution of the first `k` residuals with that of the remaining ones
//! over all splits `k`. The Kolmogorov-Smirnov functional of that two-sample
//! process is asymptotically distributed as the supremum of a completely
//! tucked Brownian sheet, whatever the innovation law, so a single simulated
//! table ([`nulldist::NullTable`]) calibrates every test.
//!
//! ```
//! use innovcp::{generate, run_test, DgpSpec, FitConfig, InnovationSpec, Model, WeightSpec};
//!
//! let spec = DgpSpec::null(Model::ar1_half(), InnovationSpec::StdNormal, 100, 7);
//! let series = generate(&spec).unwrap();
//! let report = run_test(&series, &FitConfig::default(), &WeightSpec::Trivial).unwrap();
//! assert!(report.ks_stat > 0.0);
//! assert!((1..100).contains(&report.changepoint_index));
//! ```

pub mod error;
pub mod ingest;
pub mod kernel;
pub mod model;
pub mod nulldist;
pub mod rng;
pub mod seqtest;
pub mod study;

pub use error::{Error, Result};
pub use ingest::{ingest, ColumnRef, IngestSpec, Ingested, Transform};
pub use kernel::{
    fit, nw_mean, nw_variance, BandwidthRule, FitConfig, FitMode, FitResult, KernelSpec,
};
pub use model::{
    generate, sample_innovation, DgpSpec, InnovationSpec, MeanFn, Model, ScaleFn, Series,
};
pub use nulldist::{build_table, simulate_sheet_sup, NullTable};
pub use seqtest::{ks_process, run_test, seq_ecdf, test_process, weight, TestReport, WeightSpec};
pub use study::{run_study, RejectionTable, StudyConfig, StudyFamily};
