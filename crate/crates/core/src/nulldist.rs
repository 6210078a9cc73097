//! Limiting null law of the test statistic: the supremum of `|G|` for a
//! completely tucked Brownian sheet `G` on `[0,1]^2`, with covariance
//! `(s ∧ s' - s s')(z ∧ z' - z z')`.
//!
//! The sheet is simulated on an `m x m` grid by summing iid `N(0, 1/m^2)`
//! cell increments in both directions and then pinning all four edges:
//! `G(s,z) = W(s,z) - s W(1,z) - z W(s,1) + s z W(1,1)`.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

pub const DEFAULT_GRID: usize = 256;
pub const DEFAULT_REPLICATIONS: usize = 100_000;
pub const DEFAULT_SEED: u64 = 20_120_124;
pub const MIN_GRID: usize = 16;
pub const MIN_REPLICATIONS: usize = 1000;
const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "# innovcp null table";

/// Reusable buffers for simulating tucked sheets on a fixed grid.
#[derive(Debug, Clone)]
pub struct SheetSampler {
    m: usize,
    field: Vec<f64>,
}

impl SheetSampler {
    pub fn new(m: usize) -> Result<Self> {
        if m < MIN_GRID {
            return Err(Error::InvalidParameter(format!(
                "grid size must be >= {MIN_GRID}, got {m}"
            )));
        }
        Ok(SheetSampler {
            m,
            field: vec![0.0; (m + 1) * (m + 1)],
        })
    }

    pub fn grid_size(&self) -> usize {
        self.m
    }

    /// Simulates one sheet and returns the tucked field at nodes `(i/m, j/m)`,
    /// row-major with stride `m + 1`.
    pub fn sample_field<R: Rng + ?Sized>(&mut self, rng: &mut R) -> &[f64] {
        let m = self.m;
        let stride = m + 1;
        let sd = 1.0 / m as f64;
        let f = &mut self.field;
        f[..stride].fill(0.0);
        for i in 1..=m {
            let (prev, cur) = f[(i - 1) * stride..(i + 1) * stride].split_at_mut(stride);
            cur[0] = 0.0;
            let mut row = 0.0;
            for j in 1..=m {
                let z: f64 = StandardNormal.sample(rng);
                row += sd * z;
                cur[j] = prev[j] + row;
            }
        }
        let corner = f[m * stride + m];
        let inv = 1.0 / m as f64;
        for i in 0..=m {
            let s = i as f64 * inv;
            let right = f[i * stride + m];
            for j in 0..=m {
                let z = j as f64 * inv;
                let top = f[m * stride + j];
                f[i * stride + j] -= s * top + z * right - s * z * corner;
            }
        }
        // pin the edges exactly; the subtraction leaves rounding residue there
        for k in 0..=m {
            f[k] = 0.0;
            f[m * stride + k] = 0.0;
            f[k * stride] = 0.0;
            f[k * stride + m] = 0.0;
        }
        &self.field
    }

    pub fn sample_sup<R: Rng + ?Sized>(&mut self, rng: &mut R) -> f64 {
        self.sample_field(rng)
            .iter()
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
    }
}

/// Max of `|G|` over the grid nodes of one simulated sheet.
pub fn simulate_sheet_sup<R: Rng + ?Sized>(grid_size: usize, rng: &mut R) -> Result<f64> {
    Ok(SheetSampler::new(grid_size)?.sample_sup(rng))
}

/// Sorted Monte Carlo draws of the supremum.
#[derive(Debug, Clone, PartialEq)]
pub struct NullTable {
    sorted_sups: Vec<f64>,
    grid_size: usize,
    replications: usize,
    seed: u64,
}

impl NullTable {
    pub fn from_sorted(sorted_sups: Vec<f64>, grid_size: usize, seed: u64) -> Result<Self> {
        let replications = sorted_sups.len();
        if replications < MIN_REPLICATIONS {
            return Err(Error::NullTableFormat(format!(
                "need at least {MIN_REPLICATIONS} entries, got {replications}"
            )));
        }
        if sorted_sups.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::NullTableFormat("entries must be finite and >= 0".into()));
        }
        if sorted_sups.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::NullTableFormat("entries are not sorted".into()));
        }
        Ok(NullTable {
            sorted_sups,
            grid_size,
            replications,
            seed,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.sorted_sups
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn replications(&self) -> usize {
        self.replications
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `(1 + #{entries >= stat}) / (1 + R)`
    pub fn p_value(&self, stat: f64) -> f64 {
        let below = self.sorted_sups.partition_point(|&v| v < stat);
        let at_or_above = self.replications - below;
        (1 + at_or_above) as f64 / (1 + self.replications) as f64
    }

    /// Empirical quantile: the `ceil(p R)`-th smallest entry.
    pub fn quantile(&self, p: f64) -> f64 {
        let r = self.replications;
        let idx = ((p * r as f64).ceil() as usize).clamp(1, r) - 1;
        self.sorted_sups[idx]
    }

    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{MAGIC}")?;
        writeln!(out, "format_version={FORMAT_VERSION}")?;
        writeln!(out, "grid_size={}", self.grid_size)?;
        writeln!(out, "replications={}", self.replications)?;
        writeln!(out, "seed={}", self.seed)?;
        for v in &self.sorted_sups {
            writeln!(out, "{v}")?;
        }
        out.flush()
    }

    pub fn read<R: BufRead>(input: R) -> Result<Self> {
        let mut header = std::collections::HashMap::new();
        let mut values = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line.map_err(|e| Error::io("<null table>", e))?;
            let line = line.trim();
            if i == 0 {
                if line != MAGIC {
                    return Err(Error::NullTableFormat(format!("bad magic line {line:?}")));
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            if let Some((k, v)) = line.split_once('=') {
                header.insert(k.to_string(), v.to_string());
                continue;
            }
            let v: f64 = line.parse().map_err(|_| Error::Parse {
                line: i + 1,
                message: format!("not a number: {line:?}"),
            })?;
            values.push(v);
        }
        let field = |k: &str| -> Result<String> {
            header
                .get(k)
                .cloned()
                .ok_or_else(|| Error::NullTableFormat(format!("missing header field {k}")))
        };
        let num = |k: &str| -> Result<u64> {
            field(k)?
                .parse()
                .map_err(|_| Error::NullTableFormat(format!("header field {k} is not an integer")))
        };
        let version = num("format_version")?;
        if version != u64::from(FORMAT_VERSION) {
            return Err(Error::NullTableFormat(format!(
                "unsupported format version {version}"
            )));
        }
        let replications = num("replications")? as usize;
        if replications != values.len() {
            return Err(Error::NullTableFormat(format!(
                "header says {replications} entries, found {}",
                values.len()
            )));
        }
        Self::from_sorted(values, num("grid_size")? as usize, num("seed")?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(BufReader::new(file))
    }

    /// Writes via a temporary file in the target directory and renames it.
    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, |w| self.write(w))
    }

    pub fn write_quantiles_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "quantile,value")?;
        for p in [0.90, 0.95, 0.99] {
            writeln!(out, "{p},{}", self.quantile(p))?;
        }
        out.flush()
    }
}

pub fn write_atomic(
    path: &Path,
    body: impl FnOnce(&mut std::io::BufWriter<&mut tempfile::NamedTempFile>) -> std::io::Result<()>,
) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| Error::io(&dir, e))?;
    {
        let mut w = std::io::BufWriter::new(&mut tmp);
        body(&mut w).map_err(|e| Error::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// `replications` independent suprema, sorted. Replication `i` uses its own
/// generator seeded from `(seed, i)`, so the table does not depend on the
/// number of threads.
pub fn build_table(grid_size: usize, replications: usize, seed: u64) -> Result<NullTable> {
    if replications < MIN_REPLICATIONS {
        return Err(Error::InvalidParameter(format!(
            "need at least {MIN_REPLICATIONS} replications, got {replications}"
        )));
    }
    let proto = SheetSampler::new(grid_size)?;
    let mut sups: Vec<f64> = (0..replications as u64)
        .into_par_iter()
        .map_init(
            || proto.clone(),
            |sampler, i| {
                let mut rng = rng_from_seed(derive_seed(seed, i));
                sampler.sample_sup(&mut rng)
            },
        )
        .collect();
    sups.sort_by(f64::total_cmp);
    NullTable::from_sorted(sups, grid_size, seed)
}

/// File name of a cached table inside a cache directory.
pub fn cache_file_name(grid_size: usize, replications: usize, seed: u64) -> String {
    format!("nulltable-v{FORMAT_VERSION}-g{grid_size}-r{replications}-s{seed}.txt")
}

/// Loads the cached table for these parameters, building and caching it
/// first when absent. The flag reports whether a build happened.
pub fn load_or_build(
    cache_dir: &Path,
    grid_size: usize,
    replications: usize,
    seed: u64,
) -> Result<(NullTable, bool)> {
    let path = cache_dir.join(cache_file_name(grid_size, replications, seed));
    if path.exists() {
        let table = NullTable::load(&path)?;
        if table.grid_size == grid_size && table.seed == seed {
            return Ok((table, false));
        }
    }
    let table = build_table(grid_size, replications, seed)?;
    table.save(&path)?;
    Ok((table, true))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_table() -> NullTable {
        let v: Vec<f64> = (0..1000).map(|i| i as f64 / 1000.0).collect();
        NullTable::from_sorted(v, 16, 0).unwrap()
    }

    #[test]
    fn edges_pinned() {
        let mut s = SheetSampler::new(16).unwrap();
        let mut rng = rng_from_seed(3);
        for _ in 0..20 {
            let f = s.sample_field(&mut rng);
            for k in 0..=16 {
                assert_eq!(f[k], 0.0);
                assert_eq!(f[16 * 17 + k], 0.0);
                assert_eq!(f[k * 17], 0.0);
                assert_eq!(f[k * 17 + 16], 0.0);
            }
            assert!(f[8 * 17 + 8] != 0.0);
        }
    }

    #[test]
    fn grid_too_small() {
        assert!(SheetSampler::new(15).is_err());
        assert!(build_table(16, 999, 0).is_err());
    }

    #[test]
    fn p_value_edges() {
        let t = toy_table();
        assert_eq!(t.p_value(0.0), 1.0);
        assert_eq!(t.p_value(5.0), 1.0 / 1001.0);
        let v = t.values();
        let median = 0.5 * (v[499] + v[500]);
        assert!((t.p_value(median) - 0.5).abs() <= 1.0 / 1001.0);
        let mut last = 1.0;
        for i in 0..200 {
            let p = t.p_value(i as f64 * 0.006);
            assert!(p <= last);
            last = p;
        }
    }

    #[test]
    fn quantiles() {
        let t = toy_table();
        assert_eq!(t.quantile(0.95), 0.949);
        assert_eq!(t.quantile(0.0), 0.0);
        assert_eq!(t.quantile(1.0), 0.999);
    }

    #[test]
    fn file_round_trip() {
        let t = build_table(16, 1000, 11).unwrap();
        let mut buf = Vec::new();
        t.write(&mut buf).unwrap();
        let back = NullTable::read(&buf[..]).unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn malformed_files() {
        assert!(matches!(
            NullTable::read(&b"hello\n"[..]),
            Err(Error::NullTableFormat(_))
        ));
        let t = toy_table();
        let mut buf = Vec::new();
        t.write(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap().replace("replications=1000", "replications=1001");
        assert!(NullTable::read(text.as_bytes()).is_err());
        let text = format!("{MAGIC}\nformat_version=9\ngrid_size=16\nreplications=0\nseed=0\n");
        assert!(NullTable::read(text.as_bytes()).is_err());
    }

    #[test]
    fn unsorted_rejected() {
        let mut v: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        v.swap(1, 2);
        assert!(NullTable::from_sorted(v, 16, 0).is_err());
    }
}
