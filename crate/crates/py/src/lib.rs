//! Python bindings: `import dirac_lasso`.

use std::path::PathBuf;

use dirac_lasso_core as core;
use core::config::{ExperimentConfig, ExperimentKind};
use core::lasso::{find_degeneracy, make_conical_disc, DiscFamily, ScanGrid};
use core::models::{self, OperatorFamily, Parity};
use core::{Error, SpectralWindow, SymmetricOperator};
use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn json_to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

#[pyclass(name = "Window", frozen)]
struct PyWindow(SpectralWindow);

#[pymethods]
impl PyWindow {
    #[new]
    fn new(lower: f64, upper: f64, k: usize) -> PyResult<Self> {
        SpectralWindow::new(lower, upper, k).map(Self).map_err(err)
    }

    /// Window around the `k` lowest eigenvalues of `op`.
    #[staticmethod]
    fn lowest(op: &PyOperator, k: usize) -> PyResult<Self> {
        let values = core::spectral::eigenvalues(&op.0).map_err(err)?;
        core::config::lowest_window(&values, k)
            .map(Self)
            .ok_or_else(|| PyValueError::new_err(format!("k = {k} out of range")))
    }

    #[getter]
    fn lower(&self) -> f64 {
        self.0.lower()
    }

    #[getter]
    fn upper(&self) -> f64 {
        self.0.upper()
    }

    #[getter]
    fn k(&self) -> usize {
        self.0.k()
    }

    fn __repr__(&self) -> String {
        format!("Window({}, {}, k={})", self.0.lower(), self.0.upper(), self.0.k())
    }
}

#[pyclass(name = "Operator", frozen)]
struct PyOperator(SymmetricOperator);

#[pymethods]
impl PyOperator {
    #[new]
    fn new(rows: Vec<Vec<f64>>) -> PyResult<Self> {
        SymmetricOperator::from_rows(&rows).map(Self).map_err(err)
    }

    #[staticmethod]
    fn diagonal(values: Vec<f64>) -> Self {
        Self(SymmetricOperator::from_diagonal(&values))
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        self.0.to_rows()
    }

    fn eigenvalues(&self) -> PyResult<Vec<f64>> {
        core::spectral::eigenvalues(&self.0).map_err(err)
    }
}

#[pyclass(name = "Loop", frozen)]
struct PyLoop(OperatorFamily);

#[pymethods]
impl PyLoop {
    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    /// `"odd"`, `"even"` or `None` when unknown.
    #[getter]
    fn parity(&self) -> Option<&'static str> {
        self.0.parity().map(|p| match p {
            Parity::Odd => "odd",
            Parity::Even => "even",
        })
    }

    fn sample(&self, t: f64) -> PyOperator {
        PyOperator(self.0.sample(t))
    }
}

#[pyclass(name = "Disc", frozen)]
struct PyDisc(DiscFamily);

#[pymethods]
impl PyDisc {
    #[new]
    fn new(center: &PyOperator, boundary: &PyLoop) -> PyResult<Self> {
        DiscFamily::new(center.0.clone(), boundary.0.clone()).map(Self).map_err(err)
    }

    #[staticmethod]
    fn conical() -> Self {
        Self(make_conical_disc())
    }

    #[staticmethod]
    #[pyo3(signature = (boundary, nodes = 256))]
    fn boundary_mean(boundary: &PyLoop, nodes: usize) -> PyResult<Self> {
        DiscFamily::with_boundary_mean(boundary.0.clone(), nodes).map(Self).map_err(err)
    }

    #[staticmethod]
    fn basepoint(boundary: &PyLoop) -> PyResult<Self> {
        DiscFamily::with_basepoint_center(boundary.0.clone()).map(Self).map_err(err)
    }

    fn at(&self, r: f64, theta: f64) -> PyOperator {
        PyOperator(self.0.at(r, theta))
    }

    /// Scan plus refinement; returns the certificate as a dict, raises
    /// `ValueError` when no degeneracy is found.
    #[pyo3(signature = (window, tol = 1e-8, rings = 32, angles = 64, max_candidates = 8))]
    fn find_degeneracy<'py>(
        &self,
        py: Python<'py>,
        window: &PyWindow,
        tol: f64,
        rings: usize,
        angles: usize,
        max_candidates: usize,
    ) -> PyResult<Bound<'py, PyAny>> {
        let (_, cert) =
            find_degeneracy(&self.0, &window.0, ScanGrid { rings, angles }, tol, max_candidates).map_err(err)?;
        json_to_py(py, &cert)
    }
}

#[pyfunction]
fn halfturn_loop(base: &PyOperator) -> PyResult<PyLoop> {
    Ok(PyLoop(models::make_halfturn_loop(base.0.clone()).map_err(err)?.family()))
}

#[pyfunction]
fn fullturn_loop(base: &PyOperator) -> PyResult<PyLoop> {
    Ok(PyLoop(models::make_fullturn_loop(base.0.clone()).map_err(err)?.family()))
}

#[pyfunction]
#[pyo3(signature = (m, base, turns = 1))]
fn spin_loop(m: usize, base: &PyOperator, turns: u32) -> PyResult<PyLoop> {
    Ok(PyLoop(models::make_spin_loop_with_turns(m, base.0.clone(), turns).map_err(err)?.family()))
}

#[pyfunction]
fn commuting_loop(diagonal: Vec<f64>, amplitude: f64) -> PyLoop {
    PyLoop(models::make_commuting_loop(&diagonal, amplitude))
}

/// `clusters` is a list of `(value, multiplicity)` pairs.
#[pyfunction]
fn odd_multiplicity_base(clusters: Vec<(f64, usize)>, epsilon: f64, seed: u64) -> PyResult<PyOperator> {
    models::make_odd_multiplicity_base(&clusters, epsilon, seed).map(PyOperator).map_err(err)
}

/// `(numerical, closed_form)` spectra of the truncated circle operator.
#[pyfunction]
fn circle_dirac_spectrum(truncation: usize, delta: f64) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let model = models::make_circle_dirac(truncation, delta).map_err(err)?;
    let numeric = core::spectral::eigenvalues(&model.operator()).map_err(err)?;
    Ok((numeric, model.analytic_spectrum()))
}

#[pyfunction]
fn clifford_generators(m: usize) -> PyResult<Vec<Vec<Vec<Complex64>>>> {
    let rep = core::clifford::build_clifford(m).map_err(err)?;
    Ok(rep
        .generators()
        .iter()
        .map(|g| (0..g.nrows()).map(|i| g.row(i).iter().copied().collect()).collect())
        .collect())
}

/// `+1` (real type) or `-1` (quaternionic type); `None` in the complex case.
#[pyfunction]
fn structure_epsilon(m: usize) -> PyResult<Option<i32>> {
    let rep = core::clifford::build_clifford(m).map_err(err)?;
    match core::clifford::find_structure_map(&rep) {
        Ok(s) => Ok(Some(s.epsilon())),
        Err(Error::ComplexType { .. }) => Ok(None),
        Err(e) => Err(err(e)),
    }
}

#[pyfunction]
#[pyo3(signature = (family, window, samples = 64))]
fn transport<'py>(py: Python<'py>, family: &PyLoop, window: &PyWindow, samples: usize) -> PyResult<Bound<'py, PyAny>> {
    let (path, ret) = core::transport(&family.0, &window.0, samples).map_err(err)?;
    json_to_py(
        py,
        &serde_json::json!({
            "sign": ret.sign,
            "determinant": ret.determinant,
            "closure_residual": ret.closure_residual,
            "accepted_samples": path.samples.len(),
            "max_step_distance": path.max_step_distance,
        }),
    )
}

#[pyfunction]
fn predicted_sign(parity: &str, k: usize) -> PyResult<i32> {
    let p = match parity {
        "odd" => Parity::Odd,
        "even" => Parity::Even,
        other => return Err(PyValueError::new_err(format!("parity must be 'odd' or 'even', got {other:?}"))),
    };
    Ok(core::predicted_sign(p, k).as_i32())
}

/// Runs a config (JSON text) and returns the report dict; artifacts go to `out_dir`.
#[pyfunction]
fn run_experiment<'py>(py: Python<'py>, kind: &str, config_json: &str, out_dir: PathBuf) -> PyResult<Bound<'py, PyAny>> {
    let kind: ExperimentKind = serde_json::from_value(serde_json::Value::String(kind.to_string()))
        .map_err(|_| PyValueError::new_err(format!("unknown experiment kind {kind:?}")))?;
    let config = ExperimentConfig::from_json(config_json).map_err(err)?;
    let report = core::experiment::run_experiment(kind, &config, &out_dir).map_err(err)?;
    json_to_py(py, &report)
}

#[pyfunction]
fn reproduce_all<'py>(py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
    let rows = py.detach(|| core::reproduce::reproduce_all(&core::reproduce::Tolerances::default()));
    json_to_py(py, &rows)
}

#[pymodule]
fn dirac_lasso(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyWindow>()?;
    m.add_class::<PyOperator>()?;
    m.add_class::<PyLoop>()?;
    m.add_class::<PyDisc>()?;
    m.add_function(wrap_pyfunction!(halfturn_loop, m)?)?;
    m.add_function(wrap_pyfunction!(fullturn_loop, m)?)?;
    m.add_function(wrap_pyfunction!(spin_loop, m)?)?;
    m.add_function(wrap_pyfunction!(commuting_loop, m)?)?;
    m.add_function(wrap_pyfunction!(odd_multiplicity_base, m)?)?;
    m.add_function(wrap_pyfunction!(circle_dirac_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(clifford_generators, m)?)?;
    m.add_function(wrap_pyfunction!(structure_epsilon, m)?)?;
    m.add_function(wrap_pyfunction!(transport, m)?)?;
    m.add_function(wrap_pyfunction!(predicted_sign, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(reproduce_all, m)?)?;
    Ok(())
}
