//! Python module `pyhapchem`: grids, fields, Green functions, kernel fitting
//! and the three solvers.

use hapchem::domain::{self, io};
use hapchem::fit;
use hapchem::greens::{self, GreensBasis};
use hapchem::harness::{self, ExperimentConfig};
use hapchem::kernel::{self, PeriodizedKernel, RadialKernel};
use hapchem::pde::{self, ChemicalSpec, Interaction, ModelFunctions, RunConfig, RunOutput};
use hapchem::specfun::{self, BesselOrder};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: hapchem::Error) -> PyErr {
    match e {
        hapchem::Error::NumericalAbort { .. } => PyRuntimeError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

#[pyclass(name = "Grid", frozen, from_py_object)]
#[derive(Clone)]
struct PyGrid(domain::Grid);

#[pymethods]
impl PyGrid {
    #[new]
    fn new(dim: usize, half_length: f64, n: usize) -> PyResult<Self> {
        domain::Grid::new(dim, half_length, n)
            .map(PyGrid)
            .map_err(to_py)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn half_length(&self) -> f64 {
        self.0.half_length()
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn spacing(&self) -> f64 {
        self.0.spacing()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Grid(dim={}, half_length={}, n={})",
            self.0.dim(),
            self.0.half_length(),
            self.0.n()
        )
    }
}

#[pyclass(name = "Field", from_py_object)]
#[derive(Clone)]
struct PyField(domain::Field);

#[pymethods]
impl PyField {
    #[new]
    fn new(grid: &PyGrid, values: Vec<f64>) -> PyResult<Self> {
        domain::Field::new(grid.0, values)
            .map(PyField)
            .map_err(to_py)
    }

    #[staticmethod]
    fn constant(grid: &PyGrid, value: f64) -> Self {
        PyField(domain::Field::constant(grid.0, value))
    }

    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<Self> {
        io::field_from_csv(text).map(PyField).map_err(to_py)
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid(*self.0.grid())
    }

    /// Cell values in row-major order.
    fn values(&self) -> Vec<f64> {
        self.0.values().to_vec()
    }

    /// Cell-centre coordinates, one list per cell.
    fn points(&self) -> Vec<Vec<f64>> {
        (0..self.0.grid().len()).map(|i| self.0.point(i)).collect()
    }

    fn integral(&self) -> f64 {
        self.0.integral()
    }

    fn min(&self) -> f64 {
        self.0.min()
    }

    fn max(&self) -> f64 {
        self.0.max()
    }

    fn norm_l2(&self) -> f64 {
        domain::norm_l2(&self.0)
    }

    fn to_csv(&self) -> String {
        io::field_to_csv(&self.0)
    }

    fn __len__(&self) -> usize {
        self.0.values().len()
    }
}

#[pyclass(name = "FitResult", frozen, get_all)]
struct PyFitResult {
    diffusivities: Vec<f64>,
    coefficients: Vec<f64>,
    residual_w11: f64,
    residual_h1: f64,
    residual_l2: f64,
    gram_condition_estimate: f64,
    ill_conditioned: bool,
    csv: String,
}

impl From<fit::FitResult> for PyFitResult {
    fn from(f: fit::FitResult) -> Self {
        PyFitResult {
            csv: f.to_csv(),
            diffusivities: f.diffusivities,
            coefficients: f.coefficients,
            residual_w11: f.residual_w11,
            residual_h1: f.residual_h1,
            residual_l2: f.residual_l2,
            gram_condition_estimate: f.gram_condition_estimate,
            ill_conditioned: f.ill_conditioned,
        }
    }
}

#[pyclass(name = "RunResult", frozen)]
struct PyRunResult(RunOutput);

#[pymethods]
impl PyRunResult {
    #[getter]
    fn times(&self) -> Vec<f64> {
        self.0.series.times().to_vec()
    }

    #[getter]
    fn snapshots(&self) -> Vec<PyField> {
        self.0
            .series
            .snapshots()
            .iter()
            .cloned()
            .map(PyField)
            .collect()
    }

    #[getter]
    fn chemicals(&self) -> Vec<PyField> {
        self.0.state.v.iter().cloned().map(PyField).collect()
    }

    #[getter]
    fn steps(&self) -> usize {
        self.0.steps
    }

    #[getter]
    fn mass_drift(&self) -> f64 {
        self.0.mass_drift()
    }

    #[getter]
    fn min_u(&self) -> f64 {
        self.0.min_u()
    }

    #[getter]
    fn max_u(&self) -> f64 {
        self.0.max_u()
    }

    /// `(accumulated ||grad beta(u)||^2, 2 int Phi(u0) + accumulated ||g(u) V||^2)`.
    fn energy_budget(&self) -> (f64, f64) {
        self.0.energy_budget()
    }

    fn diagnostics_csv(&self) -> String {
        pde::diagnostics_csv(&self.0.state.diagnostics)
    }

    /// `L^2(Q_T)` distance to another run with the same snapshot times.
    fn distance(&self, other: &PyRunResult) -> PyResult<f64> {
        harness::compare_runs(&self.0.series, &other.0.series).map_err(to_py)
    }
}

/// `K_nu(r)` for `nu` in `{0, +-1/2, +-1}`.
#[pyfunction]
fn bessel_k(nu: f64, r: f64) -> PyResult<f64> {
    let order = BesselOrder::from_f64(nu).map_err(to_py)?;
    specfun::bessel_k(order, r).map_err(to_py)
}

#[pyfunction]
fn periodic_convolve(a: &PyField, b: &PyField) -> PyResult<PyField> {
    domain::periodic_convolve(&a.0, &b.0)
        .map(PyField)
        .map_err(to_py)
}

/// Periodic Green function of `-d Laplace + 1`, in offset layout.
#[pyfunction]
fn greens_function(d: f64, grid: &PyGrid) -> PyResult<PyField> {
    greens::greens_periodic_spectral(d, &grid.0)
        .map(PyField)
        .map_err(to_py)
}

#[pyfunction]
fn elliptic_solve(d: f64, u: &PyField) -> PyResult<PyField> {
    greens::elliptic_solve(d, &u.0).map(PyField).map_err(to_py)
}

fn target_kernel(kind: &str, param: f64, grid: &domain::Grid) -> hapchem::Result<PeriodizedKernel> {
    match kind {
        "gaussian" => kernel::periodize(&RadialKernel::gaussian(param, grid.dim())?, grid, 1e-12),
        "greens" => greens::greens_kernel(param, grid),
        "adhesion" => {
            let omega = std::sync::Arc::new(move |_: f64| param);
            kernel::periodize(
                &kernel::adhesion_potential(omega, grid.dim(), "adhesion")?,
                grid,
                1e-12,
            )
        }
        other => Err(hapchem::Error::Validation(format!(
            "unknown kernel kind {other}"
        ))),
    }
}

/// Fits `sum_j a_j w_j` to a `gaussian` (param = sigma), `greens` (param = d)
/// or `adhesion` (param = constant omega) kernel with the first `m` default
/// diffusivities accumulating at `d_star`.
#[pyfunction]
#[pyo3(signature = (kind, param, grid, m, d_star = 0.05, regularization = None))]
fn fit_kernel(
    kind: &str,
    param: f64,
    grid: &PyGrid,
    m: usize,
    d_star: f64,
    regularization: Option<f64>,
) -> PyResult<PyFitResult> {
    let inner = || -> hapchem::Result<fit::FitResult> {
        let target = target_kernel(kind, param, &grid.0)?;
        let basis = GreensBasis::new(grid.0, &fit::default_diffusivities(m, d_star)?.values)?;
        let lambda = regularization.unwrap_or_else(|| fit::default_regularization(&basis));
        fit::fit_coefficients(&target, &basis, lambda)
    };
    inner().map(PyFitResult::from).map_err(to_py)
}

fn model(gamma: f64, eta: f64) -> hapchem::Result<ModelFunctions> {
    let beta = if gamma == 1.0 {
        pde::Beta::Linear
    } else {
        pde::Beta::Power { gamma }
    };
    ModelFunctions::new(beta, pde::Mobility::VolumeFilling, eta)
}

fn config(grid: domain::Grid, t_end: f64, snapshot_every: f64, dt: Option<f64>) -> RunConfig {
    let mut cfg = RunConfig::new(grid, t_end, snapshot_every);
    cfg.dt = dt;
    cfg
}

/// Keller-Segel run with chemicals `(d_j, a_j)`; `xi = 0` is parabolic-elliptic.
#[pyfunction]
#[pyo3(signature = (u0, d, a, xi, t_end, snapshot_every, gamma = 2.0, eta = 0.0, dt = None))]
#[allow(clippy::too_many_arguments)]
fn run_chemotaxis(
    py: Python<'_>,
    u0: &PyField,
    d: Vec<f64>,
    a: Vec<f64>,
    xi: f64,
    t_end: f64,
    snapshot_every: f64,
    gamma: f64,
    eta: f64,
    dt: Option<f64>,
) -> PyResult<PyRunResult> {
    let u0 = u0.0.clone();
    py.detach(|| {
        let m = model(gamma, eta)?;
        let chem = ChemicalSpec::new(d, a, xi)?;
        pde::run(
            &m,
            &Interaction::Chemotaxis(chem),
            &u0,
            None,
            &config(*u0.grid(), t_end, snapshot_every, dt),
        )
    })
    .map(PyRunResult)
    .map_err(to_py)
}

/// Nonlocal run with `W = strength * w_d`, the Green function of `-d Laplace + 1`.
#[pyfunction]
#[pyo3(signature = (u0, d, strength, t_end, snapshot_every, gamma = 2.0, eta = 0.0, dt = None))]
#[allow(clippy::too_many_arguments)]
fn run_nonlocal_greens(
    py: Python<'_>,
    u0: &PyField,
    d: f64,
    strength: f64,
    t_end: f64,
    snapshot_every: f64,
    gamma: f64,
    eta: f64,
    dt: Option<f64>,
) -> PyResult<PyRunResult> {
    let u0 = u0.0.clone();
    py.detach(|| {
        let m = model(gamma, eta)?;
        let w = greens::greens_kernel(d, u0.grid())?.scaled(strength);
        pde::run(
            &m,
            &Interaction::Nonlocal(w),
            &u0,
            None,
            &config(*u0.grid(), t_end, snapshot_every, dt),
        )
    })
    .map(PyRunResult)
    .map_err(to_py)
}

/// Runs the system described by a configuration file.
#[pyfunction]
fn run_config(py: Python<'_>, path: std::path::PathBuf) -> PyResult<PyRunResult> {
    py.detach(|| {
        let cfg = ExperimentConfig::from_path(&path)?;
        pde::run(
            &cfg.model,
            &cfg.interaction()?,
            &cfg.initial_density()?,
            None,
            &cfg.run,
        )
    })
    .map(PyRunResult)
    .map_err(to_py)
}

/// Runs the built-in invariant checks; returns `(name, passed, detail)` rows.
#[pyfunction]
fn selftest(py: Python<'_>) -> Vec<(String, bool, String)> {
    py.detach(|| {
        harness::selftest::run_all()
            .into_iter()
            .map(|c| (c.name.to_string(), c.passed, c.detail))
            .collect()
    })
}

#[pymodule]
fn pyhapchem(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PyField>()?;
    m.add_class::<PyFitResult>()?;
    m.add_class::<PyRunResult>()?;
    m.add_function(wrap_pyfunction!(bessel_k, m)?)?;
    m.add_function(wrap_pyfunction!(periodic_convolve, m)?)?;
    m.add_function(wrap_pyfunction!(greens_function, m)?)?;
    m.add_function(wrap_pyfunction!(elliptic_solve, m)?)?;
    m.add_function(wrap_pyfunction!(fit_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(run_chemotaxis, m)?)?;
    m.add_function(wrap_pyfunction!(run_nonlocal_greens, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    m.add_function(wrap_pyfunction!(selftest, m)?)?;
    Ok(())
}
