//! Python bindings. Vertices and words use 1-based labels; reports come
//! back as plain dicts and lists.

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use markov_quant::antichain::{implicit_exponent, theorem_ratio_series, DEFAULT_CAP};
use markov_quant::geometry::{error_curve, realize, CurveOptions};
use markov_quant::spectral::solve_sr as solve;
use markov_quant::verify::{run_suite, VerifyConfig};
use markov_quant::{
    analyze as analyze_system, enumerate_antichain, fixtures, validate_system, AntichainOptions, Error,
    ModelConfig, Scope, Word,
};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(e) => PyOSError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn word(labels: Vec<usize>) -> PyResult<Word> {
    if labels.contains(&0) {
        return Err(PyValueError::new_err("vertex labels are 1-based"));
    }
    Ok(Word::from_labels(&labels))
}

#[pyclass(frozen, name = "MarkovSystem", module = "markov_quant")]
struct PyMarkovSystem {
    inner: markov_quant::MarkovSystem,
}

#[pymethods]
impl PyMarkovSystem {
    /// Parses the JSON model format used by the command-line tool.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = ModelConfig::from_json(text).and_then(|c| c.to_system()).map_err(py_err)?;
        Ok(PyMarkovSystem { inner })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PyMarkovSystem { inner: markov_quant::load_model(path).map_err(py_err)? })
    }

    /// One of the reference systems `"a"`, `"b"`, `"c"`.
    #[staticmethod]
    fn fixture(name: &str) -> PyResult<Self> {
        fixtures::by_name(name)
            .map(|inner| PyMarkovSystem { inner })
            .ok_or_else(|| PyValueError::new_err(format!("unknown fixture {name:?}")))
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&ModelConfig::from_system(&self.inner)).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n_vertices()
    }

    fn p_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.inner.n_vertices();
        (0..n).map(|i| (0..n).map(|j| self.inner.p(i, j)).collect()).collect()
    }

    fn c_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.inner.n_vertices();
        (0..n).map(|i| (0..n).map(|j| self.inner.c(i, j)).collect()).collect()
    }

    /// Violation messages; empty for a valid model.
    fn validate(&self) -> Vec<String> {
        validate_system(&self.inner).violations.iter().map(|v| v.to_string()).collect()
    }

    /// `(p_σ, c_σ, μ(J_σ))` for a word of 1-based labels.
    fn path_weight(&self, labels: Vec<usize>) -> PyResult<(f64, f64, f64)> {
        let w = self.inner.path_weight(&word(labels)?).map_err(py_err)?;
        Ok((w.p_weight, w.c_weight, w.measure_weight))
    }

    /// `(left, length)` of the cylinder interval of a word.
    fn cylinder_interval(&self, labels: Vec<usize>) -> PyResult<(f64, f64)> {
        let rz = realize(&self.inner).map_err(py_err)?;
        let i = rz.cylinder_interval(&word(labels)?).map_err(py_err)?;
        Ok((i.left, i.length))
    }

    fn __repr__(&self) -> String {
        format!("MarkovSystem(n={}, edges={})", self.inner.n_vertices(), self.inner.edges().count())
    }
}

/// Critical value `s_r` of the whole system.
#[pyfunction]
fn solve_sr(sys: &PyMarkovSystem, r: f64) -> PyResult<f64> {
    Ok(solve(&sys.inner, &Scope::Full, r).map_err(py_err)?.root)
}

#[pyfunction]
fn analyze(py: Python<'_>, sys: &PyMarkovSystem, r: f64) -> PyResult<Py<PyAny>> {
    to_py(py, &analyze_system(&sys.inner, r).map_err(py_err)?)
}

#[derive(Serialize)]
struct AntichainSummary {
    k: u32,
    r: f64,
    phi: u64,
    l1: usize,
    l2: usize,
    mass: f64,
    sum_energy: f64,
    t_k: Option<f64>,
    words: Option<Vec<Vec<usize>>>,
}

/// Summary of `Λ_{k,r}`; `words=True` also lists the words when at most
/// `cap` of them exist.
#[pyfunction]
#[pyo3(signature = (sys, r, k, words = false, cap = DEFAULT_CAP))]
fn antichain(py: Python<'_>, sys: &PyMarkovSystem, r: f64, k: u32, words: bool, cap: u64) -> PyResult<Py<PyAny>> {
    let options = AntichainOptions { materialize: words, cap, ..Default::default() };
    let ac = py.detach(|| enumerate_antichain(&sys.inner, r, k, &options)).map_err(py_err)?;
    if words && ac.words().is_none() {
        return Err(py_err(Error::Capacity { phi: ac.phi, cap }));
    }
    let summary = AntichainSummary {
        k,
        r,
        phi: ac.phi,
        l1: ac.depth_min,
        l2: ac.depth_max,
        mass: ac.mass(),
        sum_energy: ac.sum_energy(),
        t_k: implicit_exponent(&ac).ok(),
        words: ac.words().map(|ws| ws.iter().map(Word::labels).collect()),
    };
    to_py(py, &summary)
}

#[pyfunction]
fn ratio_series(py: Python<'_>, sys: &PyMarkovSystem, r: f64, k_min: u32, k_max: u32) -> PyResult<Py<PyAny>> {
    let report = analyze_system(&sys.inner, r).map_err(py_err)?;
    let rows = py
        .detach(|| theorem_ratio_series(&sys.inner, &report.structure, k_min..=k_max))
        .map_err(py_err)?;
    to_py(py, &rows)
}

#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (sys, r, k_min, k_max, refine = false, depth_offset = 6, cap = DEFAULT_CAP))]
fn quantize(
    py: Python<'_>,
    sys: &PyMarkovSystem,
    r: f64,
    k_min: u32,
    k_max: u32,
    refine: bool,
    depth_offset: u32,
    cap: u64,
) -> PyResult<Py<PyAny>> {
    let report = analyze_system(&sys.inner, r).map_err(py_err)?;
    let options = CurveOptions { refine, depth_offset, cap, ..Default::default() };
    let rows = py
        .detach(|| error_curve(&sys.inner, &report.structure, k_min..=k_max, &options))
        .map_err(py_err)?;
    to_py(py, &rows)
}

#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (sys, r = vec![1.0], k_min = 6, k_max = 16, quantize_k_min = 6, quantize_k_max = 12, seed = 0))]
fn verify(
    py: Python<'_>,
    sys: &PyMarkovSystem,
    r: Vec<f64>,
    k_min: u32,
    k_max: u32,
    quantize_k_min: u32,
    quantize_k_max: u32,
    seed: u64,
) -> PyResult<Py<PyAny>> {
    let config = VerifyConfig { r, k_min, k_max, quantize_k_min, quantize_k_max, seed, ..Default::default() };
    let result = py.detach(|| run_suite(&sys.inner, &config)).map_err(py_err)?;
    to_py(py, &result)
}

#[pymodule]
#[pyo3(name = "markov_quant")]
fn markov_quant_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMarkovSystem>()?;
    m.add_function(wrap_pyfunction!(solve_sr, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(antichain, m)?)?;
    m.add_function(wrap_pyfunction!(ratio_series, m)?)?;
    m.add_function(wrap_pyfunction!(quantize, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
