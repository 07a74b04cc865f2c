//! Python bindings: `import pycesurv`.

use cesurv::experiment::to_json;
use cesurv::{
    Bundled, DataSource, DatasetSpec, Error, EstimatorConfig, EventValue, Norm, PipelineOptions,
    SampleMatrix, SelectionPolicy, SimConfig, SurvivalDataset, TieMethod,
};
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: Error) -> PyErr {
    match e.exit_code() {
        3 => PyArithmeticError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn estimator(k: usize, norm: &str, ties: &str, jitter_seed: u64) -> PyResult<EstimatorConfig> {
    let norm = match norm {
        "max" => Norm::Max,
        "euclidean" => Norm::Euclidean,
        other => return Err(PyValueError::new_err(format!("unknown norm '{other}'"))),
    };
    let ties = match ties {
        "average" => TieMethod::Average,
        "jitter" => TieMethod::Jitter,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown tie method '{other}'"
            )))
        }
    };
    Ok(EstimatorConfig {
        k,
        norm,
        ties,
        jitter_seed,
        ..EstimatorConfig::default()
    })
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<SampleMatrix> {
    SampleMatrix::from_rows(&rows).map_err(py_err)
}

/// Copula entropy of the columns of `rows` (a list of samples). Negative
/// values indicate dependence; CE = -MI.
#[pyfunction]
#[pyo3(signature = (rows, k=3, norm="max", ties="average", jitter_seed=0))]
fn copula_entropy(
    rows: Vec<Vec<f64>>,
    k: usize,
    norm: &str,
    ties: &str,
    jitter_seed: u64,
) -> PyResult<f64> {
    cesurv::copula_entropy(&matrix(rows)?, &estimator(k, norm, ties, jitter_seed)?).map_err(py_err)
}

/// Kozachenko-Leonenko entropy of raw samples, in nats.
#[pyfunction]
#[pyo3(signature = (rows, k=3, norm="max"))]
fn knn_entropy(rows: Vec<Vec<f64>>, k: usize, norm: &str) -> PyResult<f64> {
    cesurv::knn_entropy(&matrix(rows)?, &estimator(k, norm, "average", 0)?).map_err(py_err)
}

/// Rank-normalized copy of `rows`, entries in (0, 1].
#[pyfunction]
#[pyo3(signature = (rows, ties="average", jitter_seed=0))]
fn empirical_copula(rows: Vec<Vec<f64>>, ties: &str, jitter_seed: u64) -> PyResult<Vec<Vec<f64>>> {
    let u = cesurv::empirical_copula(&matrix(rows)?, &estimator(3, "max", ties, jitter_seed)?)
        .map_err(py_err)?;
    Ok(u.rows().map(<[f64]>::to_vec).collect())
}

/// Harrell's C-index of predicted survival times; returns `(c, comparable_pairs)`.
#[pyfunction]
fn c_index(pred: Vec<f64>, time: Vec<f64>, status: Vec<u8>) -> PyResult<(f64, u64)> {
    cesurv::c_index(&pred, &time, &status).map_err(py_err)
}

/// Mean absolute error over events; returns `(mae, n_events)`.
#[pyfunction]
fn mae(pred: Vec<f64>, time: Vec<f64>, status: Vec<u8>) -> PyResult<(f64, usize)> {
    cesurv::mae(&pred, &time, &status).map_err(py_err)
}

/// A right-censored survival dataset.
#[pyclass(name = "Dataset", module = "pycesurv", frozen)]
struct PyDataset(SurvivalDataset);

#[pymethods]
impl PyDataset {
    #[new]
    fn new(
        covariates: Vec<Vec<f64>>,
        time: Vec<f64>,
        status: Vec<u8>,
        names: Vec<String>,
    ) -> PyResult<Self> {
        SurvivalDataset::new(matrix(covariates)?, time, status, names)
            .map(Self)
            .map_err(py_err)
    }

    /// `"cancer"` or `"veteran"`.
    #[staticmethod]
    fn bundled(name: &str) -> PyResult<Self> {
        let b = Bundled::from_name(name).map_err(py_err)?;
        Ok(Self(b.load().map_err(py_err)?.dataset))
    }

    #[staticmethod]
    #[pyo3(signature = (path, time_col="time", status_col="status", event_value=None, covariates=None))]
    fn load(
        path: &str,
        time_col: &str,
        status_col: &str,
        event_value: Option<&str>,
        covariates: Option<Vec<String>>,
    ) -> PyResult<Self> {
        let mut spec = DatasetSpec::new(path, time_col, status_col);
        spec.covariate_cols = covariates;
        if let Some(v) = event_value {
            spec.status_event_value = EventValue::parse(v);
        }
        Ok(Self(cesurv::load_dataset(&spec).map_err(py_err)?.dataset))
    }

    /// Censored Weibull data. `config` is a JSON object with simulation
    /// fields; missing fields take their defaults.
    #[staticmethod]
    #[pyo3(signature = (seed=0, n_subjects=None, config=None))]
    fn simulate(seed: u64, n_subjects: Option<usize>, config: Option<&str>) -> PyResult<Self> {
        let mut cfg: SimConfig = match config {
            Some(s) => serde_json::from_str(s).map_err(|e| PyValueError::new_err(e.to_string()))?,
            None => SimConfig::default(),
        };
        cfg.seed = seed;
        if let Some(n) = n_subjects {
            cfg.n_subjects = n;
        }
        cesurv::simulate(&cfg).map(Self).map_err(py_err)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.0.save(path.as_ref()).map_err(py_err)
    }

    #[getter]
    fn names(&self) -> Vec<String> {
        self.0.names.clone()
    }

    #[getter]
    fn time(&self) -> Vec<f64> {
        self.0.time.clone()
    }

    #[getter]
    fn status(&self) -> Vec<u8> {
        self.0.status.clone()
    }

    #[getter]
    fn covariates(&self) -> Vec<Vec<f64>> {
        self.0.covariates.rows().map(<[f64]>::to_vec).collect()
    }

    #[getter]
    fn n_rows(&self) -> usize {
        self.0.n_rows()
    }

    #[getter]
    fn n_events(&self) -> usize {
        self.0.n_events()
    }

    fn __len__(&self) -> usize {
        self.0.n_rows()
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(n_rows={}, n_events={}, names={:?})",
            self.0.n_rows(),
            self.0.n_events(),
            self.0.names
        )
    }
}

/// Covariates ordered by CE with the outcome, most negative first, as
/// `(name, ce, rank)` tuples.
#[pyfunction]
#[pyo3(signature = (dataset, with_status=false, k=3, norm="max", ties="average", jitter_seed=0))]
fn rank_variables(
    dataset: &PyDataset,
    with_status: bool,
    k: usize,
    norm: &str,
    ties: &str,
    jitter_seed: u64,
) -> PyResult<Vec<(String, f64, usize)>> {
    let r = cesurv::rank_variables(
        &dataset.0,
        with_status,
        &estimator(k, norm, ties, jitter_seed)?,
    )
    .map_err(py_err)?;
    Ok(r.entries
        .into_iter()
        .map(|e| (e.name, e.ce, e.rank))
        .collect())
}

/// Fitted Weibull accelerated-failure-time model.
#[pyclass(name = "AftModel", module = "pycesurv", frozen)]
struct PyAftModel(cesurv::AftModel);

#[pymethods]
impl PyAftModel {
    /// Fits on the named covariates, or all of them when `covariates` is None.
    #[staticmethod]
    #[pyo3(signature = (dataset, covariates=None))]
    fn fit(dataset: &PyDataset, covariates: Option<Vec<String>>) -> PyResult<Self> {
        let included = covariates.unwrap_or_else(|| dataset.0.names.clone());
        cesurv::fit(&dataset.0, &included).map(Self).map_err(py_err)
    }

    fn predict_median(&self, x: Vec<f64>) -> PyResult<f64> {
        self.0.predict_median(&x).map_err(py_err)
    }

    fn predict(&self, dataset: &PyDataset) -> PyResult<Vec<f64>> {
        self.0.predict_dataset(&dataset.0).map_err(py_err)
    }

    fn to_json(&self) -> PyResult<String> {
        to_json(&self.0).map_err(py_err)
    }

    #[getter]
    fn intercept(&self) -> f64 {
        self.0.intercept
    }

    #[getter]
    fn coefficients(&self) -> Vec<f64> {
        self.0.coefficients.clone()
    }

    #[getter]
    fn log_scale(&self) -> f64 {
        self.0.log_scale
    }

    #[getter]
    fn scale(&self) -> f64 {
        self.0.scale()
    }

    #[getter]
    fn included(&self) -> Vec<String> {
        self.0.included.clone()
    }

    #[getter]
    fn converged(&self) -> bool {
        self.0.converged
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.0.iterations
    }

    #[getter]
    fn log_likelihood(&self) -> f64 {
        self.0.log_likelihood
    }

    fn __repr__(&self) -> String {
        format!(
            "AftModel(intercept={}, coefficients={:?}, scale={}, converged={})",
            self.0.intercept,
            self.0.coefficients,
            self.0.scale(),
            self.0.converged
        )
    }
}

/// Full pipeline on `source` (a file path, `bundled:<name>` or `simulated`);
/// returns the report as JSON text.
#[pyfunction]
#[pyo3(signature = (source, top=None, threshold=None, with_status=false, seed=0, k=3, norm="max", ties="average"))]
#[allow(clippy::too_many_arguments)]
fn run_experiment(
    source: &str,
    top: Option<usize>,
    threshold: Option<f64>,
    with_status: bool,
    seed: u64,
    k: usize,
    norm: &str,
    ties: &str,
) -> PyResult<String> {
    let policy = match (top, threshold) {
        (Some(m), None) => SelectionPolicy::TopM(m),
        (None, Some(t)) => SelectionPolicy::Threshold(t),
        _ => {
            return Err(PyValueError::new_err(
                "pass exactly one of top and threshold",
            ))
        }
    };
    let (name, src) = match source {
        "simulated" => (
            "simulation".to_string(),
            DataSource::Simulated(SimConfig {
                seed,
                ..SimConfig::default()
            }),
        ),
        s if s.starts_with("bundled:") => {
            let b = Bundled::from_name(&s["bundled:".len()..]).map_err(py_err)?;
            (b.name().to_string(), DataSource::Bundled(b))
        }
        path => (
            "experiment".to_string(),
            DataSource::File(DatasetSpec::new(path, "time", "status")),
        ),
    };
    let opts = PipelineOptions {
        estimator: estimator(k, norm, ties, 0)?,
        with_status,
        policy,
    };
    let report = cesurv::run_experiment(&name, &src, &opts).map_err(py_err)?;
    to_json(&report).map_err(py_err)
}

/// Simulation study plus both bundled datasets; returns JSON text.
#[pyfunction]
#[pyo3(signature = (seed=0))]
fn reproduce_paper(seed: u64) -> PyResult<String> {
    let report = cesurv::reproduce_paper(seed, &EstimatorConfig::default()).map_err(py_err)?;
    to_json(&report).map_err(py_err)
}

#[pymodule]
fn pycesurv(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PyAftModel>()?;
    m.add_function(wrap_pyfunction!(copula_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(knn_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(empirical_copula, m)?)?;
    m.add_function(wrap_pyfunction!(rank_variables, m)?)?;
    m.add_function(wrap_pyfunction!(c_index, m)?)?;
    m.add_function(wrap_pyfunction!(mae, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(reproduce_paper, m)?)?;
    Ok(())
}
