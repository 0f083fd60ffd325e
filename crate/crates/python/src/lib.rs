//! Python bindings for the `quasilin` solver.
//!
//! Structured results (reports, solver outcomes) come back as plain dicts
//! built from their JSON form; fields come back as lists of floats.

use std::sync::Arc;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use quasilin::oracle::{self, SemilinearSolution};
use quasilin::solver::{self, SolveResult, SolverConfig, TwoSolutionOptions};
use quasilin::{DomainSpec, EnergyConfig, Family, GammaModel, HypothesisReport, Reaction, SampleSpec};
use serde::Serialize;

create_exception!(quasilin_py, QuasilinError, PyException);
create_exception!(quasilin_py, UnconvergedError, QuasilinError);

fn err(e: quasilin::Error) -> PyErr {
    match e {
        quasilin::Error::InvalidParameter(_) | quasilin::Error::Domain(_) => PyValueError::new_err(e.to_string()),
        e if e.is_unconverged() => UnconvergedError::new_err(e.to_string()),
        e => QuasilinError::new_err(e.to_string()),
    }
}

/// Converts through JSON so every serde type maps onto dicts, lists and floats.
fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| QuasilinError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn solve_to_py<'py>(py: Python<'py>, r: &SolveResult) -> PyResult<Bound<'py, PyAny>> {
    let d = to_py(py, r)?;
    d.set_item("u", r.u.clone())?;
    Ok(d)
}

/// Report dict with an extra `ok` flag: every check holds on the sample.
fn audit_to_py<'py>(py: Python<'py>, r: &HypothesisReport) -> PyResult<Bound<'py, PyAny>> {
    let d = to_py(py, r)?;
    d.set_item("ok", r.all_hold())?;
    Ok(d)
}

#[pyclass(name = "Grid", module = "quasilin_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGrid {
    inner: Arc<quasilin::Grid>,
}

#[pymethods]
impl PyGrid {
    /// Uniform grid on `[0, L₁] (× [0, L₂])` with `n` interior nodes per axis.
    #[new]
    fn new(extent: Vec<f64>, n: Vec<usize>) -> PyResult<Self> {
        let spec = DomainSpec {
            dim: extent.len(),
            extent,
            n,
        };
        Ok(Self {
            inner: quasilin::Grid::shared(&spec).map_err(err)?,
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn n_dof(&self) -> usize {
        self.inner.n_dof()
    }

    #[getter]
    fn h(&self) -> Vec<f64> {
        self.inner.h().to_vec()
    }

    fn lambda1(&self) -> PyResult<f64> {
        Ok(self.inner.eigen().map_err(err)?.lambda1)
    }

    fn lambda1_closed_form(&self) -> f64 {
        self.inner.lambda1_closed_form()
    }

    fn phi1(&self) -> PyResult<Vec<f64>> {
        Ok(self.inner.eigen().map_err(err)?.phi1.clone())
    }

    #[pyo3(signature = (height, margin = 0.2))]
    fn plateau(&self, height: f64, margin: f64) -> PyResult<Vec<f64>> {
        self.inner.plateau_field(height, margin).map_err(err)
    }

    fn coords(&self) -> Vec<Vec<f64>> {
        (0..self.inner.n_dof())
            .map(|k| self.inner.coords(k)[..self.inner.dim()].to_vec())
            .collect()
    }

    fn l2_norm(&self, u: Vec<f64>) -> PyResult<f64> {
        self.check(&u)?;
        Ok(self.inner.l2_norm(&u))
    }

    fn h10_norm(&self, u: Vec<f64>) -> PyResult<f64> {
        self.check(&u)?;
        Ok(self.inner.h10_norm(&u))
    }

    /// CSV text with header `x[,y],value`, boundary nodes included.
    fn field_csv(&self, u: Vec<f64>) -> PyResult<String> {
        self.check(&u)?;
        Ok(self.inner.field_csv(&u))
    }

    fn __repr__(&self) -> String {
        format!("Grid(extent={:?}, n={:?})", self.inner.extent(), self.inner.n())
    }
}

impl PyGrid {
    fn check(&self, u: &[f64]) -> PyResult<()> {
        if u.len() == self.inner.n_dof() {
            Ok(())
        } else {
            Err(PyValueError::new_err(format!(
                "field has {} values, grid has {} dofs",
                u.len(),
                self.inner.n_dof()
            )))
        }
    }
}

#[pyclass(name = "Gamma", module = "quasilin_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGamma {
    inner: GammaModel,
}

#[pymethods]
impl PyGamma {
    #[staticmethod]
    fn constant(c: f64) -> PyResult<Self> {
        GammaModel::constant(c).map(|inner| Self { inner }).map_err(err)
    }

    #[staticmethod]
    #[pyo3(name = "double_phase")]
    #[allow(non_snake_case)]
    fn double_phase(A: f64, B: f64, p: f64) -> PyResult<Self> {
        GammaModel::double_phase(A, B, p).map(|inner| Self { inner }).map_err(err)
    }

    /// `guarded = False` admits `b >= 8a` so the convexity audit can reject it.
    #[staticmethod]
    #[pyo3(signature = (a, b, guarded = true))]
    fn rational_decay(a: f64, b: f64, guarded: bool) -> PyResult<Self> {
        let g = if guarded {
            GammaModel::rational_decay(a, b)
        } else {
            GammaModel::rational_decay_unguarded(a, b)
        };
        g.map(|inner| Self { inner }).map_err(err)
    }

    #[staticmethod]
    fn tabulated(t: Vec<f64>, values: Vec<f64>) -> PyResult<Self> {
        GammaModel::tabulated(t, values).map(|inner| Self { inner }).map_err(err)
    }

    fn gamma(&self, t: f64) -> PyResult<f64> {
        self.inner.eval_gamma(t).map_err(err)
    }

    fn big_gamma(&self, t: f64) -> PyResult<f64> {
        self.inner.eval_big_gamma(t).map_err(err)
    }

    fn beta(&self, xi: Vec<f64>) -> Vec<f64> {
        self.inner.beta(&xi)
    }

    #[getter]
    fn gamma_min(&self) -> f64 {
        self.inner.gamma_min()
    }

    #[getter]
    fn gamma_max(&self) -> f64 {
        self.inner.gamma_max()
    }

    #[getter]
    fn gamma_inf(&self) -> Option<f64> {
        self.inner.gamma_inf()
    }

    /// Bounds, limit and convexity audits (q1–q4) on a log sample.
    #[pyo3(signature = (tmax = 1e8, samples = 10_000))]
    fn audit<'py>(&self, py: Python<'py>, tmax: f64, samples: usize) -> PyResult<Bound<'py, PyAny>> {
        let s = SampleSpec::log(1e-8, tmax, samples);
        let mut r = self.inner.check_bounds_and_limit(&s);
        r.merge(self.inner.check_convexity(&s, false));
        r.merge(self.inner.check_convexity(&s, true));
        audit_to_py(py, &r)
    }

    fn describe<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.describe())
    }
}

fn family(name: &str, a: Option<f64>, alpha: Option<f64>, beta: Option<f64>, shift: Option<f64>, lam: Option<f64>) -> PyResult<Family> {
    let need = |v: Option<f64>, key: &str| v.ok_or_else(|| PyValueError::new_err(format!("family `{name}` needs `{key}`")));
    Ok(match name {
        "sin_a" => Family::SinA { a: need(a, "a")? },
        "power_ratio_ab" => Family::PowerRatio {
            alpha: need(alpha, "alpha")?,
            beta: need(beta, "beta")?,
        },
        "min_powers_ab" => Family::MinPowers {
            alpha: need(alpha, "alpha")?,
            beta: need(beta, "beta")?,
        },
        "log1p" => Family::Log1p,
        "exp_logpow_a" => Family::ExpLogPow {
            alpha: need(alpha, "alpha")?,
        },
        "exp_loglog" => Family::ExpLogLog {
            shift: need(shift, "shift")?,
        },
        "asymlinear_lambda" => Family::AsymLinear {
            lambda: need(lam, "lam")?,
        },
        "linear_lambda" => Family::Linear {
            lambda: need(lam, "lam")?,
        },
        other => return Err(PyValueError::new_err(format!("unknown family `{other}`"))),
    })
}

#[pyclass(name = "Reaction", module = "quasilin_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyReaction {
    inner: Reaction,
}

#[pymethods]
impl PyReaction {
    /// `f = ν g` with `g` from a built-in family.
    #[staticmethod]
    #[pyo3(signature = (family_name, nu, *, a = None, alpha = None, beta = None, shift = None, c_lin = None))]
    fn sublinear(
        family_name: &str,
        nu: f64,
        a: Option<f64>,
        alpha: Option<f64>,
        beta: Option<f64>,
        shift: Option<f64>,
        c_lin: Option<f64>,
    ) -> PyResult<Self> {
        let mut r = Reaction::sublinear(family(family_name, a, alpha, beta, shift, None)?, nu).map_err(err)?;
        if let Some(c) = c_lin {
            r = r.with_c_lin(c).map_err(err)?;
        }
        Ok(Self { inner: r })
    }

    #[staticmethod]
    #[pyo3(signature = (family_name, *, lam = None, a = None, alpha = None, beta = None, shift = None))]
    fn linear_growth(
        family_name: &str,
        lam: Option<f64>,
        a: Option<f64>,
        alpha: Option<f64>,
        beta: Option<f64>,
        shift: Option<f64>,
    ) -> PyResult<Self> {
        let fam = family(family_name, a, alpha, beta, shift, lam)?;
        Reaction::linear_growth(fam).map(|inner| Self { inner }).map_err(err)
    }

    #[staticmethod]
    fn pure_linear(lam: f64) -> PyResult<Self> {
        Reaction::pure_linear(lam).map(|inner| Self { inner }).map_err(err)
    }

    #[staticmethod]
    fn tabulated_sublinear(t: Vec<f64>, values: Vec<f64>, nu: f64) -> PyResult<Self> {
        let fam = Family::tabulated(t, values).map_err(err)?;
        Reaction::sublinear(fam, nu).map(|inner| Self { inner }).map_err(err)
    }

    fn f(&self, t: f64) -> f64 {
        self.inner.eval_f(t)
    }

    fn big_f(&self, t: f64) -> PyResult<f64> {
        self.inner.eval_big_f(t).map_err(err)
    }

    fn nonexistence_threshold(&self, gamma: &PyGamma) -> PyResult<f64> {
        self.inner.nonexistence_threshold(&gamma.inner).map_err(err)
    }

    #[pyo3(signature = (tmax = 1e8, samples = 10_000))]
    fn audit_sublinear<'py>(&self, py: Python<'py>, tmax: f64, samples: usize) -> PyResult<Bound<'py, PyAny>> {
        audit_to_py(py, &self.inner.audit_sublinear(&SampleSpec::log(1e-8, tmax, samples)))
    }

    #[pyo3(signature = (gamma, lambda1, tmax = 1e8, samples = 10_000))]
    fn audit_linear_growth<'py>(
        &self,
        py: Python<'py>,
        gamma: &PyGamma,
        lambda1: f64,
        tmax: f64,
        samples: usize,
    ) -> PyResult<Bound<'py, PyAny>> {
        let s = SampleSpec::log(1e-8, tmax, samples);
        audit_to_py(py, &self.inner.audit_linear_growth(&gamma.inner, lambda1, &s))
    }

    fn describe<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.describe())
    }
}

#[pyclass(name = "Energy", module = "quasilin_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyEnergy {
    inner: EnergyConfig,
}

#[pymethods]
impl PyEnergy {
    /// `E(u) = Φ(u) − ∫F(u₊) − ∫hu` on `grid`; `h` defaults to zero.
    #[new]
    #[pyo3(signature = (grid, gamma, reaction, h = None))]
    fn new(grid: &PyGrid, gamma: &PyGamma, reaction: &PyReaction, h: Option<Vec<f64>>) -> PyResult<Self> {
        let h = h.unwrap_or_else(|| vec![0.0; grid.inner.n_dof()]);
        EnergyConfig::new(grid.inner.clone(), gamma.inner.clone(), reaction.inner.clone(), h)
            .map(|inner| Self { inner })
            .map_err(err)
    }

    /// μ-family member `E_μ` with penalty weight `alpha_j`.
    fn with_mu(&self, mu: f64, alpha_j: f64) -> PyResult<Self> {
        self.inner.clone().with_mu(mu, alpha_j).map(|inner| Self { inner }).map_err(err)
    }

    fn with_h(&self, h: Vec<f64>) -> PyResult<Self> {
        self.inner.with_h(h).map(|inner| Self { inner }).map_err(err)
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid {
            inner: self.inner.grid().clone(),
        }
    }

    fn value(&self, u: Vec<f64>) -> PyResult<f64> {
        self.inner.energy_value(&u).map_err(err)
    }

    /// Dict with `value, quasilinear, reaction, datum, mu`.
    fn report<'py>(&self, py: Python<'py>, u: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.energy(&u).map_err(err)?)
    }

    fn gradient(&self, u: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.gradient(&u).map_err(err)
    }

    fn residual(&self, u: Vec<f64>) -> PyResult<f64> {
        self.inner.residual_norm(&u).map_err(err)
    }
}

fn solver_config(tol: f64, max_iters: usize, seed: u64, n_starts: usize, ball_radius: Option<f64>) -> PyResult<SolverConfig> {
    let s = SolverConfig {
        tol_residual: tol,
        max_iters,
        seed,
        n_starts,
        ball_radius,
        ..Default::default()
    };
    s.validate().map_err(err)?;
    Ok(s)
}

/// Descent from `u0`; the result dict carries the field under `"u"`.
#[pyfunction]
#[pyo3(signature = (energy, u0, *, tol = 1e-8, max_iters = 5000, ball_radius = None))]
fn minimize<'py>(
    py: Python<'py>,
    energy: &PyEnergy,
    u0: Vec<f64>,
    tol: f64,
    max_iters: usize,
    ball_radius: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let s = solver_config(tol, max_iters, 0, 0, ball_radius)?;
    let r = solver::minimize(&energy.inner, &s, &u0).map_err(err)?;
    solve_to_py(py, &r)
}

#[pyfunction]
#[pyo3(signature = (energy, *, n_starts = 20, seed = 0, tol = 1e-8, max_iters = 5000))]
fn global_minimize<'py>(
    py: Python<'py>,
    energy: &PyEnergy,
    n_starts: usize,
    seed: u64,
    tol: f64,
    max_iters: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let s = solver_config(tol, max_iters, seed, n_starts, None)?;
    let m = solver::global_minimize(&energy.inner, &s).map_err(err)?;
    let d = to_py(py, &m)?;
    d.set_item("best", solve_to_py(py, &m.best)?)?;
    Ok(d)
}

/// Largest datum amplitude along `direction` with a certified positive sphere level.
#[pyfunction]
#[pyo3(signature = (energy, direction, *, t_max = 1e3, gap = 1e-3, n_radii = 16))]
fn h_smallness_search<'py>(
    py: Python<'py>,
    energy: &PyEnergy,
    direction: Vec<f64>,
    t_max: f64,
    gap: f64,
    n_radii: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let opts = TwoSolutionOptions { t_max, gap, n_radii };
    let r = solver::h_smallness_search(&energy.inner, &SolverConfig::default(), &direction, &opts).map_err(err)?;
    to_py(py, &r)
}

/// Local minimizer plus mountain-pass solution; fields under `"u_min"` and `"u_mp"`.
#[pyfunction]
#[pyo3(signature = (energy, *, t_max = 1e3, gap = 1e-3, n_radii = 16))]
fn two_solution_search<'py>(
    py: Python<'py>,
    energy: &PyEnergy,
    t_max: f64,
    gap: f64,
    n_radii: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let opts = TwoSolutionOptions { t_max, gap, n_radii };
    let r = solver::two_solution_search(&energy.inner, &SolverConfig::default(), &opts).map_err(err)?;
    let d = to_py(py, &r)?;
    d.set_item("u_min", r.u_min.u.clone())?;
    d.set_item("u_mp", r.u_mp.saddle.u.clone())?;
    Ok(d)
}

/// Mountain-pass levels along an increasing μ grid.
#[pyfunction]
#[pyo3(signature = (energy, mu_grid, alpha_j, *, t_max = 1e3, gap = 1e-3, n_radii = 16))]
fn mu_continuation<'py>(
    py: Python<'py>,
    energy: &PyEnergy,
    mu_grid: Vec<f64>,
    alpha_j: f64,
    t_max: f64,
    gap: f64,
    n_radii: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let opts = TwoSolutionOptions { t_max, gap, n_radii };
    let r = solver::mu_continuation(&energy.inner, &SolverConfig::default(), &mu_grid, alpha_j, &opts).map_err(err)?;
    to_py(py, &r)
}

/// Sine-mode solution of `−Δu + u = λu + h`; `None` at resonance.
#[pyfunction]
fn semilinear_solve(grid: &PyGrid, lam: f64, h: Vec<f64>) -> PyResult<Option<Vec<f64>>> {
    Ok(match oracle::semilinear_solve(&grid.inner, lam, &h).map_err(err)? {
        SemilinearSolution::Solution(u) => Some(u),
        SemilinearSolution::NoSolution { .. } => None,
    })
}

#[pyfunction]
#[pyo3(signature = (energy, u, eps = 1e-5))]
fn fd_gradient(energy: &PyEnergy, u: Vec<f64>, eps: f64) -> PyResult<Vec<f64>> {
    oracle::fd_gradient(&energy.inner, &u, eps).map_err(err)
}

#[pymodule]
fn quasilin_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("QuasilinError", m.py().get_type::<QuasilinError>())?;
    m.add("UnconvergedError", m.py().get_type::<UnconvergedError>())?;
    m.add_class::<PyGrid>()?;
    m.add_class::<PyGamma>()?;
    m.add_class::<PyReaction>()?;
    m.add_class::<PyEnergy>()?;
    m.add_function(wrap_pyfunction!(minimize, m)?)?;
    m.add_function(wrap_pyfunction!(global_minimize, m)?)?;
    m.add_function(wrap_pyfunction!(h_smallness_search, m)?)?;
    m.add_function(wrap_pyfunction!(two_solution_search, m)?)?;
    m.add_function(wrap_pyfunction!(mu_continuation, m)?)?;
    m.add_function(wrap_pyfunction!(semilinear_solve, m)?)?;
    m.add_function(wrap_pyfunction!(fd_gradient, m)?)?;
    Ok(())
}
