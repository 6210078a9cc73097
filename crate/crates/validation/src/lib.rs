//! Shared fixtures for the acceptance and calibration suites in `tests/`.

use std::path::PathBuf;
use std::sync::OnceLock;

use innovcp::nulldist::{self, NullTable};

/// `INNOVCP_CACHE_DIR` when set, else a directory under the workspace target.
pub fn scratch_dir() -> PathBuf {
    match std::env::var_os("INNOVCP_CACHE_DIR") {
        Some(dir) => PathBuf::from(dir),
        None => PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../target/innovcp-validation"),
    }
}

/// Loads a null table with the default replication count from the scratch
/// directory, simulating and caching it on first use.
pub fn cached_table(grid: usize, seed: u64) -> NullTable {
    nulldist::load_or_build(&scratch_dir(), grid, nulldist::DEFAULT_REPLICATIONS, seed)
        .expect("null table")
        .0
}

/// The default null table (grid 256, 10^5 replications), shared within a
/// test binary.
pub fn default_table() -> &'static NullTable {
    static TABLE: OnceLock<NullTable> = OnceLock::new();
    TABLE.get_or_init(|| cached_table(nulldist::DEFAULT_GRID, nulldist::DEFAULT_SEED))
}

/// Two-sample Kolmogorov distance between empirical distributions.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let t = a[i].min(b[j]);
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

/// Direct evaluation of `|T(k/n, t)|` from its definition: weighted ECDFs
/// of the first `k` and the last `n - k` residuals.
pub fn brute_t(residuals: &[f64], weights: &[f64], k: usize, t: f64) -> f64 {
    let n = residuals.len() as f64;
    let (head, tail) = (&residuals[..k], &residuals[k..]);
    let (wh, wt) = (&weights[..k], &weights[k..]);
    let sh: f64 = wh.iter().sum();
    let st: f64 = wt.iter().sum();
    let ecdf = |r: &[f64], w: &[f64], s: f64| {
        if s == 0.0 {
            return 0.0;
        }
        r.iter().zip(w).filter(|(x, _)| **x <= t).map(|(_, w)| w).sum::<f64>() / s
    };
    (n.sqrt() * (sh / n) * (st / n) * (ecdf(head, wh, sh) - ecdf(tail, wt, st))).abs()
}
