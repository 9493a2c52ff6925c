//! Python module `quasieq`.
//!
//! ```python
//! import quasieq
//! p = quasieq.example_4_1()
//! r = p.solve(sigma_c=2.0)
//! r.status, r.iterations, r.final
//! ```

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use quasieq::io::trace_csv_string;
use quasieq::problems::{self, ProblemInstance, ProblemSpec};
use quasieq::verify::{self, ResidualReport};
use quasieq::{Error, Point, RhoSchedule, SigmaSchedule, SolveResult};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::InvalidArgument(_) | Error::InvalidSchedule(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn point(coords: Vec<f64>) -> PyResult<Point> {
    Point::new(coords).map_err(py_err)
}

/// A problem instance: bifunction, feasible set, start point and solver
/// defaults.
#[pyclass(name = "Problem", module = "quasieq", frozen)]
struct PyProblem {
    inst: ProblemInstance,
}

/// Outcome of `Problem.solve`.
#[pyclass(name = "SolveResult", module = "quasieq", frozen)]
struct PySolveResult {
    dim: usize,
    result: SolveResult,
}

fn residual_dict<'py>(py: Python<'py>, r: &ResidualReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("value", r.value)?;
    d.set_item("witness", r.witness.as_slice().to_vec())?;
    d.set_item("resolution", r.resolution)?;
    d.set_item("points_scanned", r.points_scanned)?;
    Ok(d)
}

#[pymethods]
impl PyProblem {
    #[getter]
    fn name(&self) -> &str {
        &self.inst.name
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inst.dim()
    }

    #[getter]
    fn x0(&self) -> Vec<f64> {
        self.inst.x0.as_slice().to_vec()
    }

    /// `(lower, upper)` corners of the set's bounding box.
    #[getter]
    fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let (lo, hi) = self.inst.set.bounding_box();
        (lo.into_vec(), hi.into_vec())
    }

    fn eval(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
        self.inst.bifunction().eval(&point(x)?, &point(y)?).map_err(py_err)
    }

    /// Gradient of `f(x, ·)` at `y`.
    fn grad2(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<Vec<f64>> {
        let g = self.inst.bifunction().grad2(&point(x)?, &point(y)?).map_err(py_err)?;
        Ok(g.into_vec())
    }

    fn project(&self, p: Vec<f64>) -> PyResult<Vec<f64>> {
        Ok(self.inst.set.project(&point(p)?).map_err(py_err)?.into_vec())
    }

    #[pyo3(signature = (x, resolution = 1e-3))]
    fn gap<'py>(&self, py: Python<'py>, x: Vec<f64>, resolution: f64) -> PyResult<Bound<'py, PyDict>> {
        let r = verify::gap(self.inst.bifunction(), &self.inst.set, &point(x)?, resolution).map_err(py_err)?;
        residual_dict(py, &r)
    }

    #[pyo3(signature = (x, rho, resolution = 1e-3))]
    fn quasi_residual<'py>(
        &self,
        py: Python<'py>,
        x: Vec<f64>,
        rho: f64,
        resolution: f64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let r = verify::quasi_residual(self.inst.bifunction(), &self.inst.set, &point(x)?, rho, resolution)
            .map_err(py_err)?;
        residual_dict(py, &r)
    }

    #[pyo3(signature = (x, resolution = 1e-3))]
    fn dual_residual<'py>(&self, py: Python<'py>, x: Vec<f64>, resolution: f64) -> PyResult<Bound<'py, PyDict>> {
        let r = verify::dual_residual(self.inst.bifunction(), &self.inst.set, &point(x)?, resolution)
            .map_err(py_err)?;
        residual_dict(py, &r)
    }

    /// Runs the solver. Keyword arguments override the instance defaults;
    /// `sigma_c` selects `σ_k = sigma_c / (k + 1)`.
    #[pyo3(signature = (*, x0 = None, alpha = None, theta = None, rho = None, sigma_c = None,
                        tol_xy = None, tol_step = None, max_iters = None, seed = None))]
    #[allow(clippy::too_many_arguments)]
    fn solve(
        &self,
        py: Python<'_>,
        x0: Option<Vec<f64>>,
        alpha: Option<f64>,
        theta: Option<f64>,
        rho: Option<f64>,
        sigma_c: Option<f64>,
        tol_xy: Option<f64>,
        tol_step: Option<f64>,
        max_iters: Option<usize>,
        seed: Option<u64>,
    ) -> PyResult<PySolveResult> {
        let mut cfg = self.inst.config.clone();
        if let Some(v) = alpha {
            cfg.alpha = v;
        }
        if let Some(v) = theta {
            cfg.theta = v;
        }
        if let Some(v) = rho {
            cfg.rho = RhoSchedule::Constant(v);
        }
        if let Some(v) = sigma_c {
            cfg.sigma = SigmaSchedule::Harmonic(v);
        }
        if let Some(v) = tol_xy {
            cfg.tol_xy = v;
        }
        if let Some(v) = tol_step {
            cfg.tol_step = v;
        }
        if let Some(v) = max_iters {
            cfg.max_iters = v;
        }
        if let Some(v) = seed {
            cfg.seed = v;
        }
        let start = match x0 {
            Some(v) => point(v)?,
            None => self.inst.x0.clone(),
        };
        let inst = &self.inst;
        let result = py
            .detach(|| quasieq::solve(inst.bifunction(), &inst.set, &start, &cfg))
            .map_err(py_err)?;
        Ok(PySolveResult {
            dim: inst.dim(),
            result,
        })
    }

    /// Selector JSON that rebuilds this instance with `from_json`.
    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inst.to_spec()).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    fn __repr__(&self) -> String {
        format!("Problem({}, dim={})", self.inst.name, self.inst.dim())
    }
}

#[pymethods]
impl PySolveResult {
    #[getter]
    fn status(&self) -> &'static str {
        self.result.status.as_str()
    }

    #[getter]
    fn note(&self) -> &'static str {
        self.result.status.note()
    }

    #[getter]
    fn is_breakdown(&self) -> bool {
        self.result.status.is_breakdown()
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.result.iterations
    }

    #[getter]
    fn r#final(&self) -> Vec<f64> {
        self.result.final_point.as_slice().to_vec()
    }

    /// `min(‖x − y‖, ‖x − x_next‖)` of the last iteration.
    #[getter]
    fn final_error(&self) -> f64 {
        self.result.final_error()
    }

    #[getter]
    fn start_projected(&self) -> bool {
        self.result.start_projected
    }

    /// `(k, err_xy, err_step)` per iteration; `err_step` is `None` when the
    /// iteration stopped before the step.
    fn errors(&self) -> Vec<(usize, f64, Option<f64>)> {
        self.result.trace.iter().map(|r| (r.k, r.err_xy, r.err_step)).collect()
    }

    fn trace_csv(&self) -> String {
        trace_csv_string(self.dim, &self.result.trace)
    }

    fn __repr__(&self) -> String {
        format!(
            "SolveResult(status={}, iterations={})",
            self.result.status.as_str(),
            self.result.iterations
        )
    }
}

fn wrap(inst: ProblemInstance) -> PyProblem {
    PyProblem { inst }
}

#[pyfunction]
#[pyo3(signature = (r = 2.0, delta = 10.0))]
fn example_4_1(r: f64, delta: f64) -> PyResult<PyProblem> {
    problems::example_4_1(r, delta).map(wrap).map_err(py_err)
}

#[pyfunction]
fn example_4_2_small() -> PyProblem {
    wrap(problems::example_4_2_small())
}

#[pyfunction]
fn example_4_2_ten() -> PyProblem {
    wrap(problems::example_4_2_ten())
}

#[pyfunction]
fn counterexample_cubic() -> PyProblem {
    wrap(problems::counterexample_cubic())
}

#[pyfunction]
fn random_fractional(n: usize, seed: u64) -> PyResult<PyProblem> {
    problems::random_fractional(n, seed).map(wrap).map_err(py_err)
}

/// Builds a problem from the same selector JSON the command-line config
/// uses under `problem`.
#[pyfunction]
fn from_json(spec: &str) -> PyResult<PyProblem> {
    let spec: ProblemSpec = serde_json::from_str(spec).map_err(|e| PyValueError::new_err(e.to_string()))?;
    spec.build().map(wrap).map_err(py_err)
}

#[pymodule]
#[pyo3(name = "quasieq")]
fn quasieq_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProblem>()?;
    m.add_class::<PySolveResult>()?;
    m.add_function(wrap_pyfunction!(example_4_1, m)?)?;
    m.add_function(wrap_pyfunction!(example_4_2_small, m)?)?;
    m.add_function(wrap_pyfunction!(example_4_2_ten, m)?)?;
    m.add_function(wrap_pyfunction!(counterexample_cubic, m)?)?;
    m.add_function(wrap_pyfunction!(random_fractional, m)?)?;
    m.add_function(wrap_pyfunction!(from_json, m)?)?;
    Ok(())
}
