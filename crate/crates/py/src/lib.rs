//! Python module `innovcp`: simulation, kernel fits, the change-point test
//! and null tables. Series are plain lists of floats.

use std::path::PathBuf;

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use innovcp_core::nulldist;
use innovcp_core::rng::rng_from_seed;
use innovcp_core::{
    BandwidthRule, DgpSpec, Error, FitConfig, FitMode, FitResult, InnovationSpec, KernelSpec,
    Model, Series, StudyConfig, TestReport, WeightSpec,
};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn fit_config(mode: &str, kernel: &str, bandwidth_c: f64) -> PyResult<FitConfig> {
    let mode: FitMode = mode.parse().map_err(py_err)?;
    let kernel: KernelSpec = kernel.parse().map_err(py_err)?;
    Ok(FitConfig::new(kernel, BandwidthRule::power_law(bandwidth_c), mode))
}

fn report_dict<'py>(py: Python<'py>, r: &TestReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("stat", r.ks_stat)?;
    d.set_item("p_value", r.p_value)?;
    d.set_item("changepoint_index", r.changepoint_index)?;
    d.set_item("s_star", r.s_star())?;
    d.set_item("t_at_max", r.t_at_max)?;
    d.set_item("profile", r.s_profile.clone())?;
    d.set_item("n", r.n)?;
    Ok(d)
}

fn fit_dict<'py>(py: Python<'py>, f: &FitResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("m_hat", f.m_hat.clone())?;
    d.set_item("sigma_hat", f.sigma_hat.clone())?;
    d.set_item("residuals", f.residuals.clone())?;
    d.set_item("bandwidth", f.bandwidth_used)?;
    Ok(d)
}

/// Simulates `n + 1` values of a preset model (`ar1-half`, `arch1-paper`,
/// `iid`) with standard normal innovations and no change.
#[pyfunction]
#[pyo3(signature = (model = "ar1-half", n = 200, seed = 0))]
fn simulate(model: &str, n: usize, seed: u64) -> PyResult<Vec<f64>> {
    let spec = DgpSpec::null(Model::preset(model).map_err(py_err)?, InnovationSpec::StdNormal, n, seed);
    Ok(innovcp_core::generate(&spec).map_err(py_err)?.into_values())
}

/// Simulates from a process description in TOML, as accepted by
/// `innovcp simulate --config`.
#[pyfunction]
fn generate(config: &str) -> PyResult<Vec<f64>> {
    let spec = DgpSpec::from_toml(config).map_err(py_err)?;
    Ok(innovcp_core::generate(&spec).map_err(py_err)?.into_values())
}

#[pyfunction]
#[pyo3(signature = (values, mode = "hetero", kernel = "gaussian", bandwidth_c = 1.0))]
fn fit<'py>(
    py: Python<'py>,
    values: Vec<f64>,
    mode: &str,
    kernel: &str,
    bandwidth_c: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let config = fit_config(mode, kernel, bandwidth_c)?;
    let series = Series::from_values(values).map_err(py_err)?;
    let f = py.detach(|| innovcp_core::fit(&series, &config)).map_err(py_err)?;
    fit_dict(py, &f)
}

/// Fits the series and evaluates the test statistic. With `table` the
/// result carries a p-value.
#[pyfunction]
#[pyo3(signature = (values, mode = "hetero", kernel = "gaussian", bandwidth_c = 1.0, weight = "trivial", table = None))]
fn run_test<'py>(
    py: Python<'py>,
    values: Vec<f64>,
    mode: &str,
    kernel: &str,
    bandwidth_c: f64,
    weight: &str,
    table: Option<&NullTable>,
) -> PyResult<Bound<'py, PyDict>> {
    let config = fit_config(mode, kernel, bandwidth_c)?;
    let wspec: WeightSpec = weight.parse().map_err(py_err)?;
    let series = Series::from_values(values).map_err(py_err)?;
    let mut report = py
        .detach(|| innovcp_core::run_test(&series, &config, &wspec))
        .map_err(py_err)?;
    if let Some(t) = table {
        let p = t.inner.p_value(report.ks_stat);
        report = report.with_p_value(p);
    }
    report_dict(py, &report)
}

/// The statistic for given residuals; unit weights unless `weights` is set.
#[pyfunction]
#[pyo3(signature = (residuals, weights = None))]
fn ks_process<'py>(
    py: Python<'py>,
    residuals: Vec<f64>,
    weights: Option<Vec<f64>>,
) -> PyResult<Bound<'py, PyDict>> {
    let weights = weights.unwrap_or_else(|| vec![1.0; residuals.len()]);
    let report = innovcp_core::ks_process(&residuals, &weights, FitMode::Heteroscedastic).map_err(py_err)?;
    report_dict(py, &report)
}

/// Sup of one simulated tucked Brownian sheet on a `grid x grid` mesh.
#[pyfunction]
fn simulate_sheet_sup(grid: usize, seed: u64) -> PyResult<f64> {
    innovcp_core::simulate_sheet_sup(grid, &mut rng_from_seed(seed)).map_err(py_err)
}

/// Rejection table of a study described in TOML, as a list of row dicts.
#[pyfunction]
fn run_study<'py>(py: Python<'py>, config: &str, table: &NullTable) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let config = StudyConfig::from_toml(config).map_err(py_err)?;
    let result = py
        .detach(|| innovcp_core::run_study(&config, &table.inner, |_| {}))
        .map_err(py_err)?;
    result
        .rows
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("family", r.family.name())?;
            d.set_item("n", r.n)?;
            d.set_item("zeta", r.zeta)?;
            d.set_item("c", r.c)?;
            d.set_item("rejection_rate", r.rejection_rate)?;
            d.set_item("stderr", r.stderr)?;
            d.set_item("failures", r.failures)?;
            Ok(d)
        })
        .collect()
}

/// Sorted simulated sups of the tucked Brownian sheet.
#[pyclass(frozen)]
struct NullTable {
    inner: nulldist::NullTable,
}

#[pymethods]
impl NullTable {
    #[staticmethod]
    #[pyo3(signature = (grid = nulldist::DEFAULT_GRID, reps = nulldist::DEFAULT_REPLICATIONS, seed = nulldist::DEFAULT_SEED))]
    fn build(py: Python<'_>, grid: usize, reps: usize, seed: u64) -> PyResult<Self> {
        let inner = py.detach(|| nulldist::build_table(grid, reps, seed)).map_err(py_err)?;
        Ok(NullTable { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(NullTable {
            inner: nulldist::NullTable::load(&path).map_err(py_err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(py_err)
    }

    fn p_value(&self, stat: f64) -> f64 {
        self.inner.p_value(stat)
    }

    fn quantile(&self, p: f64) -> PyResult<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(PyValueError::new_err(format!("p must lie in [0, 1], got {p}")));
        }
        Ok(self.inner.quantile(p))
    }

    #[getter]
    fn grid_size(&self) -> usize {
        self.inner.grid_size()
    }

    #[getter]
    fn replications(&self) -> usize {
        self.inner.replications()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed()
    }

    fn __len__(&self) -> usize {
        self.inner.replications()
    }

    fn __repr__(&self) -> String {
        format!(
            "NullTable(grid_size={}, replications={}, seed={})",
            self.inner.grid_size(),
            self.inner.replications(),
            self.inner.seed()
        )
    }
}

#[pymodule]
fn innovcp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<NullTable>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(run_test, m)?)?;
    m.add_function(wrap_pyfunction!(ks_process, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_sheet_sup, m)?)?;
    m.add_function(wrap_pyfunction!(run_study, m)?)?;
    Ok(())
}
