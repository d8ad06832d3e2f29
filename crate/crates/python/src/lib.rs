//! Python module `apsel`.
//!
//! Datasets, QUBO instances and solutions are wrapped as classes. Nested
//! settings (annealer, classifier, search, whole run configs) are passed as
//! plain dicts with the same keys as the TOML config, and structured results
//! come back as dicts.

use std::path::PathBuf;

use apsel_core::dataset::{self, CsvSchema, FingerprintDataset, RssColumns, RssRange};
use apsel_core::locate::{ClassifierSpec, Localizer};
use apsel_core::pipeline::{self, RunConfig};
use apsel_core::qubo::QuboInstance;
use apsel_core::search::{self, SearchConfig};
use apsel_core::solver::{self, AnnealConfig, Solution, SolverSpec, DEFAULT_EXHAUSTIVE_CAP};
use apsel_core::stats::{self, ContingencyTable, CramerDims, ImportanceVector, RedundancyMatrix};
use apsel_core::synthetic::{self, SyntheticConfig};
use apsel_core::{Error, Stage};
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;

create_exception!(
    apsel,
    ApselError,
    PyException,
    "Base class of every apsel failure."
);
create_exception!(
    apsel,
    ConfigError,
    ApselError,
    "Invalid configuration or arguments."
);
create_exception!(
    apsel,
    DataError,
    ApselError,
    "Unreadable or inconsistent input data."
);
create_exception!(apsel, SolverError, ApselError, "QUBO solver failure.");
create_exception!(
    apsel,
    LocalizerError,
    ApselError,
    "Classifier training or evaluation failure."
);

fn err(e: Error) -> PyErr {
    let msg = e.to_string();
    match e.stage() {
        Stage::Config => ConfigError::new_err(msg),
        Stage::Data => DataError::new_err(msg),
        Stage::Solver => SolverError::new_err(msg),
        Stage::Localizer => LocalizerError::new_err(msg),
    }
}

trait OrRaise<T> {
    fn or_raise(self) -> PyResult<T>;
}

impl<T> OrRaise<T> for apsel_core::Result<T> {
    fn or_raise(self) -> PyResult<T> {
        self.map_err(err)
    }
}

/// dict (or None for defaults) -> config struct, through JSON.
fn from_dict<T: DeserializeOwned + Default>(obj: Option<&Bound<'_, PyAny>>) -> PyResult<T> {
    let Some(obj) = obj.filter(|o| !o.is_none()) else {
        return Ok(T::default());
    };
    let json = obj.py().import("json")?;
    let text: String = json.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&text).map_err(|e| ConfigError::new_err(e.to_string()))
}

fn to_dict<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| ApselError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Validated RSS fingerprint with floor labels.
#[pyclass(name = "FingerprintDataset", module = "apsel", frozen, from_py_object)]
#[derive(Clone)]
struct PyDataset {
    inner: FingerprintDataset,
}

#[pymethods]
impl PyDataset {
    /// Builds a dataset from rows of RSS values and one floor label per row.
    #[new]
    #[pyo3(signature = (rss, floors, ap_ids=None, sentinel=100.0, rss_min=-104.0, rss_max=0.0))]
    fn new(
        rss: Vec<Vec<f64>>,
        floors: Vec<String>,
        ap_ids: Option<Vec<String>>,
        sentinel: f64,
        rss_min: f64,
        rss_max: f64,
    ) -> PyResult<Self> {
        let n = rss.first().map_or(0, Vec::len);
        if rss.iter().any(|r| r.len() != n) {
            return Err(DataError::new_err("rows have different lengths"));
        }
        let ids = ap_ids.unwrap_or_else(|| (1..=n).map(|i| format!("WAP{i:03}")).collect());
        let range = RssRange {
            min: rss_min,
            max: rss_max,
            sentinel,
        };
        FingerprintDataset::new(rss.concat(), ids, floors, range)
            .map(|inner| PyDataset { inner })
            .or_raise()
    }

    /// Reads a CSV. RSS columns are those whose header starts with
    /// `rss_prefix`, or the index range `rss_columns = (start, end)`.
    #[staticmethod]
    #[pyo3(signature = (path, rss_prefix="WAP", floor_column="FLOOR", sentinel=100.0, rss_min=-104.0, rss_max=0.0, rss_columns=None))]
    fn load_csv(
        path: PathBuf,
        rss_prefix: &str,
        floor_column: &str,
        sentinel: f64,
        rss_min: f64,
        rss_max: f64,
        rss_columns: Option<(usize, usize)>,
    ) -> PyResult<Self> {
        let schema = CsvSchema {
            rss_columns: match rss_columns {
                Some((start, end)) => RssColumns::Range { start, end },
                None => RssColumns::Prefix(rss_prefix.into()),
            },
            floor_column: floor_column.into(),
            range: RssRange {
                min: rss_min,
                max: rss_max,
                sentinel,
            },
        };
        FingerprintDataset::load_csv(path, &schema)
            .map(|inner| PyDataset { inner })
            .or_raise()
    }

    fn save_csv(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save_csv(path).or_raise()
    }

    #[getter]
    fn n_samples(&self) -> usize {
        self.inner.n_samples()
    }

    #[getter]
    fn n_aps(&self) -> usize {
        self.inner.n_aps()
    }

    #[getter]
    fn n_floors(&self) -> usize {
        self.inner.n_floors()
    }

    #[getter]
    fn ap_ids(&self) -> Vec<String> {
        self.inner.ap_ids().to_vec()
    }

    /// Floor label of every row.
    #[getter]
    fn floors(&self) -> Vec<String> {
        let names = self.inner.floor_names();
        self.inner
            .labels()
            .iter()
            .map(|&l| names[l].clone())
            .collect()
    }

    /// RSS rows as stored, sentinel included.
    fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.inner.n_samples())
            .map(|r| self.inner.row(r).to_vec())
            .collect()
    }

    fn summary<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_dict(py, &self.inner.summary())
    }

    /// Keeps the columns where `x` is 1.
    fn reduce(&self, x: Vec<u8>) -> PyResult<Self> {
        dataset::reduce(&self.inner, &x)
            .map(|inner| PyDataset { inner })
            .or_raise()
    }

    fn __len__(&self) -> usize {
        self.inner.n_samples()
    }

    fn __repr__(&self) -> String {
        format!(
            "FingerprintDataset(samples={}, aps={}, floors={})",
            self.inner.n_samples(),
            self.inner.n_aps(),
            self.inner.n_floors()
        )
    }
}

/// Importance vector, redundancy matrix and the balance `alpha`.
#[pyclass(name = "QuboInstance", module = "apsel", frozen, from_py_object)]
#[derive(Clone)]
struct PyInstance {
    inner: QuboInstance,
}

#[pymethods]
impl PyInstance {
    #[new]
    #[pyo3(signature = (importance, redundancy, alpha=0.5))]
    fn new(importance: Vec<f64>, redundancy: Vec<Vec<f64>>, alpha: f64) -> PyResult<Self> {
        let inner = QuboInstance::new(
            ImportanceVector::new(importance).or_raise()?,
            RedundancyMatrix::from_rows(redundancy).or_raise()?,
            alpha,
        )
        .or_raise()?;
        Ok(PyInstance { inner })
    }

    /// Instance built from a dataset: Cramér's V of each AP's binned signal
    /// against the floor, and absolute Pearson correlation between APs.
    #[staticmethod]
    #[pyo3(signature = (dataset, alpha=0.5, bins=10))]
    fn from_dataset(
        py: Python<'_>,
        dataset: &PyDataset,
        alpha: f64,
        bins: usize,
    ) -> PyResult<Self> {
        let d = &dataset.inner;
        let inner = py
            .detach(|| {
                let imp = stats::importance_vector(&dataset::discretize(d, bins)?);
                QuboInstance::new(imp, stats::redundancy_matrix(d), alpha)
            })
            .or_raise()?;
        Ok(PyInstance { inner })
    }

    fn with_alpha(&self, alpha: f64) -> PyResult<Self> {
        self.inner
            .with_alpha(alpha)
            .map(|inner| PyInstance { inner })
            .or_raise()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha()
    }

    #[getter]
    fn importance(&self) -> Vec<f64> {
        self.inner.importance().values().to_vec()
    }

    #[getter]
    fn redundancy(&self) -> Vec<Vec<f64>> {
        let r = self.inner.redundancy();
        (0..r.dim()).map(|i| r.row(i).to_vec()).collect()
    }

    /// `-alpha * sum I_i x_i + (1 - alpha) * sum R_ij x_i x_j`.
    fn energy(&self, x: Vec<u8>) -> PyResult<f64> {
        self.inner.energy(&x).or_raise()
    }

    /// Symmetric matrix `P` with `energy(x) == x' P x`.
    fn matrix(&self) -> Vec<Vec<f64>> {
        let p = self.inner.build_matrix();
        (0..p.dim()).map(|i| p.row(i).to_vec()).collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "QuboInstance(n={}, alpha={})",
            self.inner.n(),
            self.inner.alpha()
        )
    }
}

#[pyclass(name = "Solution", module = "apsel", frozen, skip_from_py_object)]
struct PySolution {
    #[pyo3(get)]
    x: Vec<u8>,
    #[pyo3(get)]
    energy: f64,
    #[pyo3(get)]
    k: usize,
    #[pyo3(get)]
    solver: String,
    #[pyo3(get)]
    wall_time_ms: f64,
}

impl From<Solution> for PySolution {
    fn from(s: Solution) -> Self {
        PySolution {
            wall_time_ms: s.wall_time.as_secs_f64() * 1e3,
            x: s.x,
            energy: s.energy,
            k: s.k,
            solver: s.solver,
        }
    }
}

#[pymethods]
impl PySolution {
    /// Indices of the selected APs.
    #[getter]
    fn selected(&self) -> Vec<usize> {
        apsel_core::selection::selected_indices(&self.x)
    }

    fn __repr__(&self) -> String {
        format!(
            "Solution(k={}, energy={}, solver={:?})",
            self.k, self.energy, self.solver
        )
    }
}

/// Simulated annealing. `config` keys: initial_temperature, cooling_rate,
/// sweeps, restarts, seed.
#[pyfunction]
#[pyo3(signature = (instance, config=None))]
fn solve_sa(
    py: Python<'_>,
    instance: &PyInstance,
    config: Option<&Bound<'_, PyAny>>,
) -> PyResult<PySolution> {
    let cfg: AnnealConfig = from_dict(config)?;
    let inst = &instance.inner;
    py.detach(|| solver::solve_sa(inst, &cfg))
        .map(Into::into)
        .or_raise()
}

/// Exact minimum by enumeration; ties go to the smallest selection.
#[pyfunction]
#[pyo3(signature = (instance, cap=DEFAULT_EXHAUSTIVE_CAP))]
fn solve_exhaustive(py: Python<'_>, instance: &PyInstance, cap: usize) -> PyResult<PySolution> {
    let inst = &instance.inner;
    py.detach(|| solver::solve_exhaustive_capped(inst, cap))
        .map(Into::into)
        .or_raise()
}

/// Exact minimum over selections of at most `k_max` APs.
#[pyfunction]
fn constrained_min(py: Python<'_>, instance: &PyInstance, k_max: usize) -> PyResult<PySolution> {
    let inst = &instance.inner;
    py.detach(|| solver::constrained_min(inst, k_max))
        .map(Into::into)
        .or_raise()
}

#[pyfunction]
fn cramers_v(table: Vec<Vec<u64>>) -> PyResult<f64> {
    let t = ContingencyTable::from_counts(table).or_raise()?;
    Ok(stats::cramers_v(&t, CramerDims::Effective))
}

#[pyfunction]
fn pearson(u: Vec<f64>, v: Vec<f64>) -> PyResult<f64> {
    stats::pearson(&u, &v).or_raise()
}

/// Stratified split into `(train, test)`.
#[pyfunction]
#[pyo3(signature = (dataset, test_fraction=0.3, seed=42))]
fn split(dataset: &PyDataset, test_fraction: f64, seed: u64) -> PyResult<(PyDataset, PyDataset)> {
    let (a, b) = dataset::split(&dataset.inner, test_fraction, seed).or_raise()?;
    Ok((PyDataset { inner: a }, PyDataset { inner: b }))
}

/// Held-out floor accuracy of the selection `x`. `classifier` keys: kind
/// ("knn" or "forest"), k_neighbors, trees, max_depth, seed.
#[pyfunction]
#[pyo3(signature = (x, train, test, classifier=None))]
fn evaluate<'py>(
    py: Python<'py>,
    x: Vec<u8>,
    train: &PyDataset,
    test: &PyDataset,
    classifier: Option<&Bound<'py, PyAny>>,
) -> PyResult<Bound<'py, PyAny>> {
    let spec: ClassifierSpec = from_dict(classifier)?;
    let loc = Localizer::new(train.inner.clone(), test.inner.clone(), spec).or_raise()?;
    let report = py.detach(|| loc.report(&x)).or_raise()?;
    to_dict(py, &report)
}

fn solver_spec(name: &str, anneal: Option<&Bound<'_, PyAny>>) -> PyResult<SolverSpec> {
    let spec =
        SolverSpec::from_name(name, from_dict(anneal)?, DEFAULT_EXHAUSTIVE_CAP).or_raise()?;
    spec.validate().or_raise()?;
    Ok(spec)
}

/// Bisection on alpha against held-out accuracy; returns the search trace.
/// `search` keys: epsilon, alpha_precision, max_iterations, mode
/// ("robust" or "paper-faithful"), accuracy_slack.
#[pyfunction]
#[pyo3(signature = (instance, train, test, solver="sa", anneal=None, classifier=None, search=None))]
#[allow(clippy::too_many_arguments)]
fn binary_search_alpha<'py>(
    py: Python<'py>,
    instance: &PyInstance,
    train: &PyDataset,
    test: &PyDataset,
    solver: &str,
    anneal: Option<&Bound<'py, PyAny>>,
    classifier: Option<&Bound<'py, PyAny>>,
    search: Option<&Bound<'py, PyAny>>,
) -> PyResult<Bound<'py, PyAny>> {
    let spec = solver_spec(solver, anneal)?;
    let cfg: SearchConfig = from_dict(search)?;
    let loc = Localizer::new(
        train.inner.clone(),
        test.inner.clone(),
        from_dict(classifier)?,
    )
    .or_raise()?;
    let inst = &instance.inner;
    let trace = py
        .detach(|| search::binary_search_alpha(inst, &loc, &spec, &cfg))
        .or_raise()?;
    to_dict(py, &trace)
}

/// Scores `points` evenly spaced alphas in [0, 1].
#[pyfunction]
#[pyo3(signature = (instance, train, test, points=101, solver="sa", anneal=None, classifier=None, accuracy_slack=0.01))]
#[allow(clippy::too_many_arguments)]
fn sweep_alpha<'py>(
    py: Python<'py>,
    instance: &PyInstance,
    train: &PyDataset,
    test: &PyDataset,
    points: usize,
    solver: &str,
    anneal: Option<&Bound<'py, PyAny>>,
    classifier: Option<&Bound<'py, PyAny>>,
    accuracy_slack: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let spec = solver_spec(solver, anneal)?;
    let loc = Localizer::new(
        train.inner.clone(),
        test.inner.clone(),
        from_dict(classifier)?,
    )
    .or_raise()?;
    let inst = &instance.inner;
    let grid = search::uniform_grid(points);
    let trace = py
        .detach(|| search::sweep_alpha(inst, &loc, &spec, &grid, accuracy_slack))
        .or_raise()?;
    to_dict(py, &trace)
}

/// Synthetic dataset plus the role of each AP:
/// `(dataset, {"informative": [...], "redundant": [[copy, source], ...], "noise": [...]})`.
#[pyfunction]
#[pyo3(signature = (config=None))]
fn generate_synthetic<'py>(
    py: Python<'py>,
    config: Option<&Bound<'py, PyAny>>,
) -> PyResult<(PyDataset, Bound<'py, PyAny>)> {
    let cfg: SyntheticConfig = from_dict(config)?;
    let s = synthetic::generate(&cfg).or_raise()?;
    let layout = serde_json::json!({
        "informative": s.informative,
        "redundant": s.redundant,
        "noise": s.noise,
    });
    Ok((PyDataset { inner: s.dataset }, to_dict(py, &layout)?))
}

fn run_config(config: Option<&Bound<'_, PyAny>>) -> PyResult<RunConfig> {
    match config {
        Some(c) if c.extract::<PathBuf>().is_ok() && !c.is_instance_of::<pyo3::types::PyDict>() => {
            RunConfig::load(c.extract::<PathBuf>()?).or_raise()
        }
        other => from_dict(other),
    }
}

/// Whole pipeline (load, stats, bisection, evaluation) writing artifacts to
/// the configured output directory. `config` is a TOML path or a dict with
/// the same keys; returns the run report.
#[pyfunction]
#[pyo3(signature = (config=None))]
fn run_pipeline<'py>(
    py: Python<'py>,
    config: Option<&Bound<'py, PyAny>>,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = run_config(config)?;
    let report = py.detach(|| pipeline::run_pipeline(&cfg)).or_raise()?;
    to_dict(py, &report)
}

#[pymodule]
fn apsel(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PyInstance>()?;
    m.add_class::<PySolution>()?;
    m.add_function(wrap_pyfunction!(solve_sa, m)?)?;
    m.add_function(wrap_pyfunction!(solve_exhaustive, m)?)?;
    m.add_function(wrap_pyfunction!(constrained_min, m)?)?;
    m.add_function(wrap_pyfunction!(cramers_v, m)?)?;
    m.add_function(wrap_pyfunction!(pearson, m)?)?;
    m.add_function(wrap_pyfunction!(split, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(binary_search_alpha, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_alpha, m)?)?;
    m.add_function(wrap_pyfunction!(generate_synthetic, m)?)?;
    m.add_function(wrap_pyfunction!(run_pipeline, m)?)?;
    m.add("ApselError", py.get_type::<ApselError>())?;
    m.add("ConfigError", py.get_type::<ConfigError>())?;
    m.add("DataError", py.get_type::<DataError>())?;
    m.add("SolverError", py.get_type::<SolverError>())?;
    m.add("LocalizerError", py.get_type::<LocalizerError>())?;
    Ok(())
}
