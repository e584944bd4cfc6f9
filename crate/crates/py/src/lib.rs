//! Python bindings: grids, problem presets, assembled operators, single
//! timesteps and full runs.

use std::path::PathBuf;

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use hmfem::cli::write_run;
use hmfem::integrator::{init_w0, RunOptions, RunResult};
use hmfem::solvers::{jacobian, residual, step};
use hmfem::{CsrMatrix, DofGrid, Error, FemOperators, Method, ProblemSpec, SolverConfig, State};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        Error::Singular { .. } | Error::NotSpd { .. } | Error::Step { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn parse_method(name: &str) -> PyResult<Method> {
    name.parse().map_err(py_err)
}

#[pyclass(name = "Grid", frozen)]
struct PyGrid(DofGrid);

#[pymethods]
impl PyGrid {
    #[new]
    fn new(lx: f64, ly: f64, n: usize) -> PyResult<Self> {
        DofGrid::new(lx, ly, n).map(Self).map_err(py_err)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn h(&self) -> f64 {
        self.0.h()
    }

    #[getter]
    fn lx(&self) -> f64 {
        self.0.lx()
    }

    #[getter]
    fn ly(&self) -> f64 {
        self.0.ly()
    }

    #[getter]
    fn num_dofs(&self) -> usize {
        self.0.num_dofs()
    }

    fn dof_of_node(&self, i: usize, j: usize) -> PyResult<usize> {
        self.0.dof_of_node(i, j).map_err(py_err)
    }

    fn node_coords(&self, i: usize, j: usize) -> (f64, f64) {
        let [x, y] = self.0.node_coords(i, j);
        (x, y)
    }

    /// Coordinates of the representative node of every dof.
    fn dof_coords(&self) -> Vec<(f64, f64)> {
        self.0
            .dof_coords()
            .into_iter()
            .map(|[x, y]| (x, y))
            .collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Grid(lx={}, ly={}, n={}, num_dofs={})",
            self.0.lx(),
            self.0.ly(),
            self.0.n(),
            self.0.num_dofs()
        )
    }
}

#[pyclass(name = "Problem", frozen)]
struct PyProblem(ProblemSpec);

#[pymethods]
impl PyProblem {
    #[getter]
    fn name(&self) -> &str {
        &self.0.name
    }

    #[getter]
    fn side(&self) -> f64 {
        self.0.lx
    }

    #[getter]
    fn p_norm(&self) -> f64 {
        self.0.p_norm_1inf
    }

    fn u0(&self, x: f64, y: f64) -> f64 {
        self.0.u0(x, y)
    }

    fn grad_p(&self, x: f64, y: f64) -> (f64, f64) {
        let [a, b] = self.0.grad_p(x, y);
        (a, b)
    }

    fn grid(&self, n: usize) -> PyResult<PyGrid> {
        self.0.grid(n).map(PyGrid).map_err(py_err)
    }

    /// Nodal interpolation of the initial condition.
    fn sample(&self, n: usize) -> PyResult<Vec<f64>> {
        let grid = self.0.grid(n).map_err(py_err)?;
        hmfem::problems::sample_nodes(&self.0, &grid).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("Problem({:?})", self.0.name)
    }
}

#[pyfunction]
fn preset(id: u32) -> PyResult<PyProblem> {
    hmfem::preset(id).map(PyProblem).map_err(py_err)
}

#[pyclass(name = "SparseMatrix", frozen)]
struct PySparse(CsrMatrix);

#[pymethods]
impl PySparse {
    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.0.nrows(), self.0.ncols())
    }

    #[getter]
    fn nnz(&self) -> usize {
        self.0.nnz()
    }

    fn matvec(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.0.matvec(&x).map_err(py_err)
    }

    /// `(rows, cols, values)` of the stored entries.
    fn triplets(&self) -> (Vec<usize>, Vec<usize>, Vec<f64>) {
        let mut out = (Vec::new(), Vec::new(), Vec::new());
        for (r, c, v) in self.0.triplets() {
            out.0.push(r);
            out.1.push(c);
            out.2.push(v);
        }
        out
    }

    fn to_dense(&self) -> Vec<Vec<f64>> {
        let d = self.0.to_dense();
        (0..d.nrows()).map(|r| d.row(r).to_vec()).collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "SparseMatrix(shape={:?}, nnz={})",
            self.shape(),
            self.0.nnz()
        )
    }
}

#[pyclass(name = "Operators", frozen)]
struct PyOperators(FemOperators);

#[pymethods]
impl PyOperators {
    #[new]
    fn new(problem: &PyProblem, n: usize) -> PyResult<Self> {
        let p = &problem.0;
        let grid = p.grid(n).map_err(py_err)?;
        FemOperators::new(grid, &|x, y| p.grad_p(x, y))
            .map(Self)
            .map_err(py_err)
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid(self.0.grid().clone())
    }

    #[getter]
    fn mass(&self) -> PySparse {
        PySparse(self.0.mass.clone())
    }

    #[getter]
    fn stiffness(&self) -> PySparse {
        PySparse(self.0.stiffness.clone())
    }

    /// `K = M + A`
    #[getter]
    fn system(&self) -> PySparse {
        PySparse(self.0.system.clone())
    }

    #[getter]
    fn drift(&self) -> PySparse {
        PySparse(self.0.drift.clone())
    }

    fn advection(&self, u: Vec<f64>) -> PyResult<PySparse> {
        self.0.advection(&u).map(PySparse).map_err(py_err)
    }

    fn advection_derivative(&self, w: Vec<f64>) -> PyResult<PySparse> {
        self.0
            .advection_derivative(&w)
            .map(PySparse)
            .map_err(py_err)
    }

    /// `W0 = M^{-1} K U0`
    fn initial_w(&self, u: Vec<f64>) -> PyResult<Vec<f64>> {
        init_w0(&self.0, &u).map_err(py_err)
    }

    fn residual(&self, u: Vec<f64>, w: Vec<f64>, z: Vec<f64>, tau: f64) -> PyResult<Vec<f64>> {
        let s = self.0.advection(&u).map_err(py_err)?;
        let state = State::new(u, w).map_err(py_err)?;
        residual(&self.0, &s, &state, &z, tau).map_err(py_err)
    }

    fn jacobian(&self, u: Vec<f64>, w: Vec<f64>, tau: f64) -> PyResult<PySparse> {
        let state = State::new(u, w).map_err(py_err)?;
        jacobian(&self.0, &state, tau).map(PySparse).map_err(py_err)
    }

    /// One implicit timestep; returns `(u, w, iterations, rel_err, residual_norm)`.
    #[pyo3(signature = (u, w, method = "modified", tau = 0.1, tol = 1e-6, k_max = 20))]
    #[allow(clippy::too_many_arguments)]
    fn step(
        &self,
        py: Python<'_>,
        u: Vec<f64>,
        w: Vec<f64>,
        method: &str,
        tau: f64,
        tol: f64,
        k_max: usize,
    ) -> PyResult<(Vec<f64>, Vec<f64>, usize, f64, f64)> {
        let cfg = SolverConfig {
            tau,
            tol,
            k_max,
            method: parse_method(method)?,
        };
        cfg.validate().map_err(py_err)?;
        let state = State::new(u, w).map_err(py_err)?;
        let (next, rep) = py.detach(|| step(&self.0, &state, &cfg)).map_err(py_err)?;
        Ok((
            next.u,
            next.w,
            rep.iterations,
            rep.final_rel_err,
            rep.residual_norm,
        ))
    }
}

#[pyclass(name = "RunResult", frozen)]
struct PyRunResult(RunResult);

#[pymethods]
impl PyRunResult {
    #[getter]
    fn problem(&self) -> &str {
        &self.0.problem
    }

    #[getter]
    fn method(&self) -> &'static str {
        self.0.config.method.name()
    }

    #[getter]
    fn stop_reason(&self) -> &'static str {
        self.0.stop_reason.name()
    }

    #[getter]
    fn failure(&self) -> Option<String> {
        self.0.failure.clone()
    }

    #[getter]
    fn steps(&self) -> usize {
        self.0.steps()
    }

    #[getter]
    fn times(&self) -> Vec<f64> {
        self.0.times.clone()
    }

    #[getter]
    fn u_max(&self) -> Vec<f64> {
        self.0.diagnostics.iter().map(|d| d.u_max).collect()
    }

    #[getter]
    fn u_mnorm(&self) -> Vec<f64> {
        self.0.diagnostics.iter().map(|d| d.u_mnorm).collect()
    }

    #[getter]
    fn w_mnorm(&self) -> Vec<f64> {
        self.0.diagnostics.iter().map(|d| d.w_mnorm).collect()
    }

    #[getter]
    fn iterations(&self) -> Vec<usize> {
        self.0.reports.iter().map(|r| r.iterations).collect()
    }

    #[getter]
    fn rel_errs(&self) -> Vec<f64> {
        self.0.reports.iter().map(|r| r.final_rel_err).collect()
    }

    #[getter]
    fn residual_norms(&self) -> Vec<f64> {
        self.0.reports.iter().map(|r| r.residual_norm).collect()
    }

    #[getter]
    fn total_iterations(&self) -> usize {
        self.0.total_iterations()
    }

    /// Seconds spent inside the timestep solver.
    #[getter]
    fn wall_time(&self) -> f64 {
        self.0.total_wall_time().as_secs_f64()
    }

    /// `tau` divided by the sufficient timestep bound of the theory.
    #[getter]
    fn tau_ratio(&self) -> f64 {
        self.0.tau_admissibility.ratio
    }

    #[getter]
    fn final_u(&self) -> Vec<f64> {
        self.0.final_state().u.clone()
    }

    #[getter]
    fn final_w(&self) -> Vec<f64> {
        self.0.final_state().w.clone()
    }

    /// `[(step, t, u, w), ...]`
    fn snapshots(&self) -> Vec<(usize, f64, Vec<f64>, Vec<f64>)> {
        self.0
            .snapshots
            .iter()
            .map(|s| (s.step, s.t, s.state.u.clone(), s.state.w.clone()))
            .collect()
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid(self.0.ops.grid().clone())
    }

    /// Writes snapshot CSVs and the convergence log, as the CLI does.
    fn write(&self, dir: PathBuf) -> PyResult<()> {
        write_run(&self.0, &dir).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "RunResult(method={}, steps={}, stop_reason={})",
            self.method(),
            self.0.steps(),
            self.stop_reason()
        )
    }
}

#[pyfunction]
#[pyo3(signature = (test, method = "modified", n = 17, tau = 0.1, t_end = 10.0, tol = 1e-6, k_max = 20, snapshot_every = 10, cap = 0.3))]
#[allow(clippy::too_many_arguments)]
fn run(
    py: Python<'_>,
    test: u32,
    method: &str,
    n: usize,
    tau: f64,
    t_end: f64,
    tol: f64,
    k_max: usize,
    snapshot_every: usize,
    cap: f64,
) -> PyResult<PyRunResult> {
    let problem = hmfem::preset(test).map_err(py_err)?;
    let cfg = SolverConfig {
        tau,
        tol,
        k_max,
        method: parse_method(method)?,
    };
    let opts = RunOptions {
        t_end,
        snapshot_every,
        n,
        cap,
    };
    py.detach(|| hmfem::run(&problem, &cfg, &opts))
        .map(PyRunResult)
        .map_err(py_err)
}

#[pymodule]
#[pyo3(name = "hmfem")]
fn hmfem_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PyProblem>()?;
    m.add_class::<PySparse>()?;
    m.add_class::<PyOperators>()?;
    m.add_class::<PyRunResult>()?;
    m.add_function(wrap_pyfunction!(preset, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add("METHODS", ["newton", "chord", "modified", "semilinear"])?;
    Ok(())
}
