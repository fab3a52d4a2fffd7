//! Python bindings for maskgrid.
//!
//! States are lists of complex amplitudes; structured reports come back as
//! plain dicts and lists.

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyModule;
use serde::Serialize;

use maskgrid::linalg::{substream, CMatrix};
use maskgrid::{families, figures, geometry, measure, protocol, reduce, search, statespace};

create_exception!(
    pymaskgrid,
    MaskgridError,
    PyException,
    "Error raised by maskgrid."
);

fn err(e: maskgrid::Error) -> PyErr {
    MaskgridError::new_err(e.to_string())
}

/// Serializes through JSON into native Python objects.
fn to_py<T: Serialize>(py: Python<'_>, v: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| err(e.into()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn state(amps: Vec<Complex64>) -> PyResult<statespace::PureState> {
    statespace::PureState::new(amps).map_err(err)
}

fn to_states(list: Vec<Vec<Complex64>>) -> PyResult<Vec<statespace::PureState>> {
    list.into_iter().map(state).collect()
}

fn rows(m: &CMatrix) -> Vec<Vec<Complex64>> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect())
        .collect()
}

fn amps(states: Vec<statespace::PureState>) -> Vec<Vec<Complex64>> {
    states.into_iter().map(|p| p.into_amps()).collect()
}

/// An isometry `|k⟩ → Σ_{j,m} a_{kjm} |j⟩|m⟩`.
#[pyclass(name = "Masker", module = "pymaskgrid", frozen, skip_from_py_object)]
struct PyMasker {
    inner: maskgrid::Masker,
}

#[pymethods]
impl PyMasker {
    /// Loads a masker from its JSON text.
    #[staticmethod]
    #[pyo3(signature = (text, allow_non_isometry = false))]
    fn from_json(text: &str, allow_non_isometry: bool) -> PyResult<Self> {
        maskgrid::Masker::from_json(text, allow_non_isometry)
            .map(|inner| Self { inner })
            .map_err(err)
    }

    #[staticmethod]
    fn builtin3() -> Self {
        Self {
            inner: maskgrid::builtin_example_3d(),
        }
    }

    #[staticmethod]
    fn builtin4() -> Self {
        Self {
            inner: maskgrid::builtin_example_4d(),
        }
    }

    #[staticmethod]
    fn qubit(alpha: f64) -> Self {
        Self {
            inner: maskgrid::masker::qubit_circle_masker(alpha),
        }
    }

    #[staticmethod]
    #[pyo3(signature = (da, db, seed = 0))]
    fn haar_random(da: usize, db: usize, seed: u64) -> Self {
        Self {
            inner: maskgrid::Masker::haar_random(da, db, &mut substream(seed, 0)),
        }
    }

    #[getter]
    fn da(&self) -> usize {
        self.inner.da()
    }

    #[getter]
    fn db(&self) -> usize {
        self.inner.db()
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[pyo3(signature = (tol = 1e-9))]
    fn is_isometry(&self, tol: f64) -> bool {
        self.inner.is_isometry(tol)
    }

    /// Amplitudes of the image, indexed `j·dB + m`.
    fn apply(&self, amps: Vec<Complex64>) -> PyResult<Vec<Complex64>> {
        Ok(self
            .inner
            .apply(&state(amps)?)
            .map_err(err)?
            .amps()
            .to_vec())
    }

    /// `(ρ_A, ρ_B)` of the image, as nested lists.
    fn reduced_states(
        &self,
        amps: Vec<Complex64>,
    ) -> PyResult<(Vec<Vec<Complex64>>, Vec<Vec<Complex64>>)> {
        let img = self.inner.apply(&state(amps)?).map_err(err)?;
        Ok((
            rows(reduce::partial_trace_b(&img).matrix()),
            rows(reduce::partial_trace_a(&img).matrix()),
        ))
    }

    fn __repr__(&self) -> String {
        format!("Masker(da={}, db={})", self.inner.da(), self.inner.db())
    }
}

/// Amplitudes from hyperspherical angles `x` (radii) and `y` (phases).
#[pyfunction]
fn angles_to_amplitudes(x: Vec<f64>, y: Vec<f64>) -> PyResult<Vec<Complex64>> {
    let a = statespace::HyperAngles::new(x, y).map_err(err)?;
    Ok(statespace::angles_to_amplitudes(&a).into_amps())
}

/// Largest deviation of any state's reduced states from the anchor's.
#[pyfunction]
fn masking_residual(
    masker: &PyMasker,
    states: Vec<Vec<Complex64>>,
    anchor: Vec<Complex64>,
) -> PyResult<f64> {
    let r = reduce::masking_residual(&masker.inner, &to_states(states)?, &state(anchor)?)
        .map_err(err)?;
    Ok(r.overall_max)
}

#[pyfunction]
#[pyo3(signature = (masker, states, tol = reduce::DEFAULT_TOL))]
fn is_masked_set(masker: &PyMasker, states: Vec<Vec<Complex64>>, tol: f64) -> PyResult<bool> {
    reduce::is_masked_set(&masker.inner, &to_states(states)?, tol).map_err(err)
}

#[pyfunction]
fn xi_embed(amps: Vec<Complex64>) -> PyResult<Vec<f64>> {
    Ok(geometry::xi_embed(&state(amps)?).coords().to_vec())
}

/// Linear constraints `A·ξ + D = 0` as dicts with keys `tag`, `A`, `D`.
#[pyfunction]
#[pyo3(signature = (masker, anchor = None))]
fn masking_constraints(
    py: Python<'_>,
    masker: &PyMasker,
    anchor: Option<Vec<Complex64>>,
) -> PyResult<Py<PyAny>> {
    let anchor = anchor.map(state).transpose()?;
    let c = geometry::masking_constraints(&masker.inner, anchor.as_ref()).map_err(err)?;
    to_py(py, &c)
}

#[pyfunction]
#[pyo3(signature = (masker, tol = maskgrid::appendix::VANISH_TOL))]
fn cascade_scan(py: Python<'_>, masker: &PyMasker, tol: f64) -> PyResult<Py<PyAny>> {
    let r = maskgrid::cascade_scan(&masker.inner, tol).map_err(err)?;
    to_py(py, &r)
}

#[pyfunction]
#[pyo3(signature = (masker, anchor, epsilon, samples, seed = 0, delta = measure::DEFAULT_DELTA))]
fn residual_fraction(
    py: Python<'_>,
    masker: &PyMasker,
    anchor: Vec<Complex64>,
    epsilon: f64,
    samples: u64,
    seed: u64,
    delta: f64,
) -> PyResult<Py<PyAny>> {
    let anchor = state(anchor)?;
    let m = &masker.inner;
    let est = py
        .detach(|| measure::residual_fraction(m, &anchor, epsilon, samples, seed, delta))
        .map_err(err)?;
    to_py(py, &est)
}

#[pyfunction]
#[pyo3(signature = (masker, anchor, eps_grid, samples, seed = 0, delta = measure::DEFAULT_DELTA))]
fn epsilon_sweep(
    py: Python<'_>,
    masker: &PyMasker,
    anchor: Vec<Complex64>,
    eps_grid: Vec<f64>,
    samples: u64,
    seed: u64,
    delta: f64,
) -> PyResult<Py<PyAny>> {
    let anchor = state(anchor)?;
    let m = &masker.inner;
    let report = py
        .detach(|| measure::epsilon_sweep(m, &anchor, &eps_grid, samples, seed, delta))
        .map_err(err)?;
    to_py(py, &report)
}

/// Returns `(masker, objective, converged, trace)`.
#[pyfunction]
#[pyo3(signature = (states, db = None, step = 0.2, max_iter = 2000, tol = 1e-10, seed = 0))]
fn optimize_masker(
    py: Python<'_>,
    states: Vec<Vec<Complex64>>,
    db: Option<usize>,
    step: f64,
    max_iter: usize,
    tol: f64,
    seed: u64,
) -> PyResult<(PyMasker, f64, bool, Vec<f64>)> {
    let states = to_states(states)?;
    let da = states.first().map(|p| p.dim()).unwrap_or(0);
    let config = search::SearchConfig {
        step,
        max_iter,
        tol,
        seed,
        ..search::SearchConfig::default()
    };
    let r = py
        .detach(|| search::optimize_masker(&states, (da, db.unwrap_or(da)), &config))
        .map_err(err)?;
    Ok((
        PyMasker { inner: r.masker },
        r.objective,
        r.converged,
        r.trace,
    ))
}

/// States of the three-dimensional example's set through the anchor angles
/// `(x_1, x_2, y_1, y_2)`.
#[pyfunction]
#[pyo3(signature = (anchor, count, seed = 0))]
fn omega_3d(anchor: Vec<f64>, count: usize, seed: u64) -> PyResult<Vec<Vec<Complex64>>> {
    let a = statespace::HyperAngles::from_flat(&anchor).map_err(err)?;
    Ok(amps(families::omega_3d(&a, count, seed).map_err(err)?))
}

/// States of the four-dimensional example's set through the block
/// coordinates `(ζ_1, ζ_2, y_1, y_2, y_3)`.
#[pyfunction]
#[pyo3(signature = (anchor, count, seed = 0))]
fn omega_4d(anchor: Vec<f64>, count: usize, seed: u64) -> PyResult<Vec<Vec<Complex64>>> {
    let z = families::Zeta4::from_slice(&anchor).map_err(err)?;
    Ok(amps(families::omega_4d(&z, count, seed).map_err(err)?))
}

/// Leakage per side and per-codeword decode fidelity of a codebook.
#[pyfunction]
fn share_audit(
    py: Python<'_>,
    masker: &PyMasker,
    codebook: Vec<Vec<Complex64>>,
    anchor: Vec<Complex64>,
) -> PyResult<Py<PyAny>> {
    let fam =
        protocol::SecretFamily::new(masker.inner.clone(), to_states(codebook)?, state(anchor)?)
            .map_err(err)?;
    let leakage = protocol::single_share_leakage(&fam).map_err(err)?;
    let fidelities = protocol::decode_fidelities(&fam).map_err(err)?;
    to_py(
        py,
        &serde_json::json!({ "leakage": leakage, "fidelities": fidelities }),
    )
}

/// Figure grid `fig1`, `fig2a` or `fig2b` at the default anchors.
#[pyfunction]
#[pyo3(signature = (name, grid = 64))]
fn figure(py: Python<'_>, name: &str, grid: usize) -> PyResult<Py<PyAny>> {
    let data = match name {
        "fig1" => figures::fig1(&figures::fig1_anchor(), grid),
        "fig2a" => figures::fig2a(&families::Zeta4::figure_anchor(), grid),
        "fig2b" => figures::fig2b(&families::Zeta4::figure_anchor(), grid),
        _ => return Err(MaskgridError::new_err(format!("unknown figure '{name}'"))),
    }
    .map_err(err)?;
    to_py(py, &data)
}

#[pymodule]
pub fn pymaskgrid(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("MaskgridError", m.py().get_type::<MaskgridError>())?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyMasker>()?;
    m.add_function(wrap_pyfunction!(angles_to_amplitudes, m)?)?;
    m.add_function(wrap_pyfunction!(masking_residual, m)?)?;
    m.add_function(wrap_pyfunction!(is_masked_set, m)?)?;
    m.add_function(wrap_pyfunction!(xi_embed, m)?)?;
    m.add_function(wrap_pyfunction!(masking_constraints, m)?)?;
    m.add_function(wrap_pyfunction!(cascade_scan, m)?)?;
    m.add_function(wrap_pyfunction!(residual_fraction, m)?)?;
    m.add_function(wrap_pyfunction!(epsilon_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(optimize_masker, m)?)?;
    m.add_function(wrap_pyfunction!(omega_3d, m)?)?;
    m.add_function(wrap_pyfunction!(omega_4d, m)?)?;
    m.add_function(wrap_pyfunction!(share_audit, m)?)?;
    m.add_function(wrap_pyfunction!(figure, m)?)?;
    Ok(())
}
