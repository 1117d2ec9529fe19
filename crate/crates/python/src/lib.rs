//! Python bindings. Matrices cross the boundary as lists of rows of Python
//! complex numbers.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use weakwalk::curves::{self, OperatorCurve};
use weakwalk::harness::{self, EnsembleReport};
use weakwalk::instrument::{self, MultiInstrument};
use weakwalk::matcore::{self, ComplexMatrix};
use weakwalk::verify;
use weakwalk::walk::{self, QuantumState, WalkConfig};

type Rows = Vec<Vec<Complex64>>;

fn err(e: weakwalk::Error) -> PyErr {
    match e {
        weakwalk::Error::MaxStepsExceeded { .. } | weakwalk::Error::DegenerateProbability { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_matrix(rows: &Rows) -> PyResult<ComplexMatrix> {
    let d = rows.len();
    let mut data = Vec::with_capacity(d * d);
    for row in rows {
        if row.len() != d {
            return Err(PyValueError::new_err(format!("expected a square matrix, got a row of length {}", row.len())));
        }
        data.extend_from_slice(row);
    }
    ComplexMatrix::from_row_major(d, &data).map_err(err)
}

fn to_rows(m: &ComplexMatrix) -> Rows {
    (0..m.dim()).map(|i| (0..m.dim()).map(|j| m.get(i, j)).collect()).collect()
}

fn to_state(rho: &Rows) -> PyResult<QuantumState> {
    QuantumState::new(to_matrix(rho)?).map_err(err)
}

fn report_dict<'py>(py: Python<'py>, r: &EnsembleReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("n_trajectories", r.n_trajectories)?;
    d.set_item("outcome_counts", r.outcome_counts.clone())?;
    d.set_item("empirical_freqs", r.empirical_freqs.clone())?;
    d.set_item("target_probs", r.target_probs.clone())?;
    d.set_item("standard_errors", r.standard_errors.clone())?;
    d.set_item("z_scores", r.z_scores.clone())?;
    d.set_item("mean_final_state_trace_distance", r.mean_final_state_trace_distance.clone())?;
    d.set_item("max_final_state_trace_distance", r.max_final_state_trace_distance.clone())?;
    d.set_item("aborted", r.aborted)?;
    d.set_item("wall_clock", r.wall_clock)?;
    d.set_item("gate_passed", r.gate().passed && r.abort_gate_passed())?;
    Ok(d)
}

/// A validated two-outcome measurement.
#[pyclass(name = "Instrument", module = "weakwalk_py")]
struct PyInstrument {
    inner: instrument::Instrument,
}

#[pymethods]
impl PyInstrument {
    #[new]
    fn new(m1: Rows, m2: Rows) -> PyResult<Self> {
        let inner = instrument::validate(&to_matrix(&m1)?, &to_matrix(&m2)?).map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn class_name(&self) -> &'static str {
        self.inner.class().name()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn completeness_residual(&self) -> f64 {
        self.inner.completeness_residual()
    }

    fn operators(&self) -> (Rows, Rows) {
        (to_rows(self.inner.m1()), to_rows(self.inner.m2()))
    }

    fn outcome_probabilities(&self, rho: Rows) -> PyResult<(f64, f64)> {
        Ok(self.inner.outcome_probabilities(to_state(&rho)?.rho()))
    }

    fn __repr__(&self) -> String {
        format!("Instrument(class={}, dim={})", self.inner.class(), self.inner.dim())
    }
}

/// Weak-measurement operator family of an instrument.
#[pyclass(name = "OperatorCurve", module = "weakwalk_py")]
struct PyOperatorCurve {
    inner: OperatorCurve,
}

#[pymethods]
impl PyOperatorCurve {
    #[new]
    #[pyo3(signature = (instrument, x_clamp = curves::DEFAULT_X_CLAMP))]
    fn new(instrument: &PyInstrument, x_clamp: f64) -> PyResult<Self> {
        let inner = OperatorCurve::with_clamp(instrument.inner.clone(), x_clamp).map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn class_name(&self) -> &'static str {
        self.inner.class().name()
    }

    fn proj_curve(&self, x: f64) -> PyResult<Rows> {
        Ok(to_rows(&self.inner.proj_curve(x).map_err(err)?))
    }

    fn ab_pair(&self, x: f64) -> PyResult<(Rows, Rows)> {
        let (a, b) = self.inner.ab_pair(x).map_err(err)?;
        Ok((to_rows(&a), to_rows(&b)))
    }

    fn block_unitary(&self, x: f64) -> PyResult<Rows> {
        Ok(to_rows(&self.inner.block_unitary(x).map_err(err)?))
    }

    fn weak_op(&self, x: f64, y: f64) -> PyResult<Rows> {
        Ok(to_rows(&self.inner.weak_op(x, y).map_err(err)?))
    }

    fn effective_op(&self, x: f64) -> PyResult<Rows> {
        Ok(to_rows(&self.inner.effective_op(x).map_err(err)?))
    }

    fn unitary_interp(&self, x: f64) -> PyResult<Rows> {
        Ok(to_rows(&self.inner.unitary_interp(x).map_err(err)?))
    }

    /// Runs an ensemble of walks from x = 0 and compares it with the direct measurement.
    #[pyo3(signature = (rho, epsilon, threshold, trajectories, seed = 0))]
    fn run_ensemble<'py>(
        &self,
        py: Python<'py>,
        rho: Rows,
        epsilon: f64,
        threshold: f64,
        trajectories: usize,
        seed: u64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let state = to_state(&rho)?;
        let config = WalkConfig::new(epsilon, threshold, seed).map_err(err)?;
        let report = py
            .detach(|| harness::run_ensemble(&self.inner, &state, &config, trajectories))
            .map_err(err)?;
        report_dict(py, &report)
    }
}

#[pyfunction]
fn compose_constant(x: f64, y: f64) -> f64 {
    curves::compose_constant(x, y)
}

#[pyfunction]
fn hitting_prob_closed(x: f64, threshold: f64) -> f64 {
    walk::hitting_prob_closed(x, threshold)
}

#[pyfunction]
fn hitting_prob_lattice(threshold: f64, epsilon: f64) -> PyResult<Vec<(f64, f64)>> {
    walk::hitting_prob_lattice(threshold, epsilon).map_err(err)
}

/// (scalar, deviation) of the best fit M ≈ q(I + E).
#[pyfunction]
fn weakness(m: Rows) -> PyResult<(Complex64, f64)> {
    let w = instrument::weakness(&to_matrix(&m)?);
    Ok((w.scalar, w.deviation))
}

#[pyfunction]
fn trace_distance(rho: Rows, sigma: Rows) -> PyResult<f64> {
    matcore::trace_distance(&to_matrix(&rho)?, &to_matrix(&sigma)?).map_err(err)
}

/// Runs an n-outcome measurement as a chain of two-outcome walks.
#[pyfunction]
#[pyo3(signature = (operators, rho, epsilon, threshold, trajectories, seed = 0))]
fn compare_multi<'py>(
    py: Python<'py>,
    operators: Vec<Rows>,
    rho: Rows,
    epsilon: f64,
    threshold: f64,
    trajectories: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let ops = operators.iter().map(to_matrix).collect::<PyResult<Vec<_>>>()?;
    let multi = MultiInstrument::new(ops).map_err(err)?;
    let state = to_state(&rho)?;
    let config = WalkConfig::new(epsilon, threshold, seed).map_err(err)?;
    let report = py
        .detach(|| harness::compare_multi(&multi, &state, &config, trajectories))
        .map_err(err)?;
    report_dict(py, &report)
}

/// Runs an invariant suite; returns (passed, printable report).
#[pyfunction]
#[pyo3(signature = (suite, seeds = 100))]
fn run_suite(py: Python<'_>, suite: &str, seeds: usize) -> PyResult<(bool, String)> {
    let suite = verify::Suite::parse(suite).map_err(err)?;
    let report = py.detach(|| verify::run(suite, seeds)).map_err(err)?;
    Ok((report.passed(), report.to_string()))
}

#[pymodule]
fn weakwalk_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstrument>()?;
    m.add_class::<PyOperatorCurve>()?;
    m.add_function(wrap_pyfunction!(compose_constant, m)?)?;
    m.add_function(wrap_pyfunction!(hitting_prob_closed, m)?)?;
    m.add_function(wrap_pyfunction!(hitting_prob_lattice, m)?)?;
    m.add_function(wrap_pyfunction!(weakness, m)?)?;
    m.add_function(wrap_pyfunction!(trace_distance, m)?)?;
    m.add_function(wrap_pyfunction!(compare_multi, m)?)?;
    m.add_function(wrap_pyfunction!(run_suite, m)?)?;
    Ok(())
}
