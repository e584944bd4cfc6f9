//! One implicit-Euler timestep of
//!
//! ```text
//! (M + tau S(U)) W - tau R U = Z,    Z = M W(t)
//! K U - M W = 0
//! ```
//!
//! by Newton, Chord, Modified Newton, or the semilinear scheme. All
//! iterative methods start from `(U(t), W(t))`, stop once
//! `||U^{k+1} - U^k||_2 / ||U^k||_2 <= tol` or after `k_max` iterations, and
//! solve the full `2N x 2N` block system by LU each iteration.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::assembly::FemOperators;
use crate::error::{check_len, Error, Result};
use crate::sparse::{block2x2, norm2, CsrMatrix, Lu};

/// Below this `||U^k||_2` the stopping test uses the absolute change.
pub const REL_ERR_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Newton,
    Chord,
    Modified,
    Semilinear,
}

impl Method {
    pub const NEWTON_TYPE: [Method; 3] = [Method::Newton, Method::Chord, Method::Modified];

    pub fn name(self) -> &'static str {
        match self {
            Method::Newton => "newton",
            Method::Chord => "chord",
            Method::Modified => "modified",
            Method::Semilinear => "semilinear",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "newton" => Ok(Method::Newton),
            "chord" => Ok(Method::Chord),
            "modified" | "modified-newton" => Ok(Method::Modified),
            "semilinear" => Ok(Method::Semilinear),
            _ => Err(Error::Config(format!("unknown method '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub tau: f64,
    pub tol: f64,
    pub k_max: usize,
    pub method: Method,
}

impl SolverConfig {
    pub fn new(method: Method, tau: f64) -> Self {
        Self {
            tau,
            tol: 1e-6,
            k_max: 20,
            method,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Config(format!(
                "tau must be positive, got {}",
                self.tau
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.k_max < 1 {
            return Err(Error::Config("k_max must be at least 1".into()));
        }
        Ok(())
    }
}

/// Coefficient vectors of `u_N` and `w_N = u_N - Laplacian u_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub u: Vec<f64>,
    pub w: Vec<f64>,
}

impl State {
    pub fn new(u: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        if u.len() != w.len() {
            return Err(Error::shape("state", u.len(), w.len()));
        }
        Ok(Self { u, w })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            u: vec![0.0; n],
            w: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// `[U; W]`
    pub fn stacked(&self) -> Vec<f64> {
        let mut v = self.u.clone();
        v.extend_from_slice(&self.w);
        v
    }

    pub fn from_stacked(v: &[f64]) -> Self {
        let n = v.len() / 2;
        Self {
            u: v[..n].to_vec(),
            w: v[n..].to_vec(),
        }
    }

    /// `||K U - M W||_2 / max(||M W||_2, floor)`
    pub fn elliptic_residual(&self, ops: &FemOperators) -> Result<f64> {
        let ku = ops.system.matvec(&self.u)?;
        let mw = ops.mass.matvec(&self.w)?;
        let diff: Vec<f64> = ku.iter().zip(&mw).map(|(a, b)| a - b).collect();
        Ok(norm2(&diff) / norm2(&mw).max(crate::sparse::RESIDUAL_FLOOR))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub iterations: usize,
    pub final_rel_err: f64,
    /// `||F(U, W)||_2` at the accepted state.
    pub residual_norm: f64,
    pub wall_time: Duration,
    pub converged: bool,
}

fn check_state(ops: &FemOperators, state: &State) -> Result<()> {
    let n = ops.num_dofs();
    check_len("state U", &state.u, n)?;
    check_len("state W", &state.w, n)
}

/// `F(U, W) = [(M + tau S(U)) W - tau R U - Z; K U - M W]`, with `s_u = S(U)`.
pub fn residual(
    ops: &FemOperators,
    s_u: &CsrMatrix,
    state: &State,
    z: &[f64],
    tau: f64,
) -> Result<Vec<f64>> {
    check_state(ops, state)?;
    check_len("residual Z", z, ops.num_dofs())?;
    let mw = ops.mass.matvec(&state.w)?;
    let sw = s_u.matvec(&state.w)?;
    let ru = ops.drift.matvec(&state.u)?;
    let ku = ops.system.matvec(&state.u)?;
    let mut f = Vec::with_capacity(2 * z.len());
    f.extend((0..z.len()).map(|i| mw[i] + tau * sw[i] - tau * ru[i] - z[i]));
    f.extend(ku.iter().zip(&mw).map(|(k, m)| k - m));
    Ok(f)
}

/// `J_F(U, W) = [[tau B(W) - tau R, M + tau S(U)], [K, -M]]`.
pub fn jacobian(ops: &FemOperators, state: &State, tau: f64) -> Result<CsrMatrix> {
    check_state(ops, state)?;
    let s = ops.advection(&state.u)?;
    let b = ops.advection_derivative(&state.w)?;
    newton_matrix(ops, &s, &b, tau)
}

fn newton_matrix(ops: &FemOperators, s: &CsrMatrix, b: &CsrMatrix, tau: f64) -> Result<CsrMatrix> {
    let top_left = b.linear_combination(tau, &ops.drift, -tau)?;
    let top_right = ops.mass.linear_combination(1.0, s, tau)?;
    block2x2(&top_left, &top_right, &ops.system, &ops.mass.scaled(-1.0))
}

fn modified_matrix(ops: &FemOperators, s: &CsrMatrix, tau: f64) -> Result<CsrMatrix> {
    let top_right = ops.mass.linear_combination(1.0, s, tau)?;
    block2x2(
        &ops.drift.scaled(-tau),
        &top_right,
        &ops.system,
        &ops.mass.scaled(-1.0),
    )
}

fn relative_change(new: &[f64], old: &[f64]) -> f64 {
    let diff: f64 = new
        .iter()
        .zip(old)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let base = norm2(old);
    if base < REL_ERR_FLOOR {
        diff
    } else {
        diff / base
    }
}

fn stack_rhs(top: Vec<f64>) -> Vec<f64> {
    let n = top.len();
    let mut r = top;
    r.resize(2 * n, 0.0);
    r
}

fn finish(
    ops: &FemOperators,
    state: State,
    z: &[f64],
    cfg: &SolverConfig,
    iterations: usize,
    final_rel_err: f64,
    started: Instant,
) -> Result<(State, StepReport)> {
    let s = ops.advection(&state.u)?;
    let residual_norm = norm2(&residual(ops, &s, &state, z, cfg.tau)?);
    let converged = final_rel_err <= cfg.tol;
    if !converged && cfg.method != Method::Semilinear {
        log::warn!(
            "{} did not converge in {} iterations (rel err {:e})",
            cfg.method,
            iterations,
            final_rel_err
        );
    }
    let report = StepReport {
        iterations,
        final_rel_err,
        residual_norm,
        wall_time: started.elapsed(),
        converged: converged || cfg.method == Method::Semilinear,
    };
    Ok((state, report))
}

/// Iterates `solve(k, current) -> next` until the relative change in `U`
/// drops to `tol` or `k_max` iterations have run.
fn iterate(
    cfg: &SolverConfig,
    start: &State,
    mut solve: impl FnMut(usize, &State) -> Result<State>,
) -> Result<(State, usize, f64)> {
    let mut current = start.clone();
    let mut rel_err = f64::INFINITY;
    let mut k = 0;
    while rel_err > cfg.tol && k < cfg.k_max {
        let next = solve(k, &current)?;
        rel_err = relative_change(&next.u, &current.u);
        current = next;
        k += 1;
    }
    Ok((current, k, rel_err))
}

/// Newton: the Jacobian is rebuilt at every iterate and
/// `J_F(U^k, W^k) [U^{k+1}; W^{k+1}] = [tau S(U^k) W^k + Z; 0]`.
pub fn step_newton(
    ops: &FemOperators,
    state_t: &State,
    cfg: &SolverConfig,
) -> Result<(State, StepReport)> {
    check_state(ops, state_t)?;
    let started = Instant::now();
    let z = ops.mass.matvec(&state_t.w)?;
    let (state, k, err) = iterate(cfg, state_t, |_, cur| {
        let s = ops.advection(&cur.u)?;
        let b = ops.advection_derivative(&cur.w)?;
        let j = newton_matrix(ops, &s, &b, cfg.tau)?;
        let sw = s.matvec(&cur.w)?;
        let top = sw.iter().zip(&z).map(|(a, zi)| cfg.tau * a + zi).collect();
        Ok(State::from_stacked(&Lu::new(&j)?.solve(&stack_rhs(top))?))
    })?;
    finish(ops, state, &z, cfg, k, err, started)
}

/// Chord: the Jacobian is frozen at `(U^0, W^0)` and factored once; the
/// right-hand side is `tau S(U^k) (W^0 - W^k) + tau S(U^0) W^k + Z`.
pub fn step_chord(
    ops: &FemOperators,
    state_t: &State,
    cfg: &SolverConfig,
) -> Result<(State, StepReport)> {
    check_state(ops, state_t)?;
    let started = Instant::now();
    let z = ops.mass.matvec(&state_t.w)?;
    let s0 = ops.advection(&state_t.u)?;
    let b0 = ops.advection_derivative(&state_t.w)?;
    let lu = Lu::new(&newton_matrix(ops, &s0, &b0, cfg.tau)?)?;
    let w0 = &state_t.w;
    let (state, k, err) = iterate(cfg, state_t, |k, cur| {
        let a = if k == 0 {
            vec![0.0; z.len()]
        } else {
            let dw: Vec<f64> = w0.iter().zip(&cur.w).map(|(a, b)| a - b).collect();
            ops.advection(&cur.u)?.matvec(&dw)?
        };
        let b = s0.matvec(&cur.w)?;
        let top = (0..z.len())
            .map(|i| cfg.tau * a[i] + cfg.tau * b[i] + z[i])
            .collect();
        Ok(State::from_stacked(&lu.solve(&stack_rhs(top))?))
    })?;
    finish(ops, state, &z, cfg, k, err, started)
}

/// Modified Newton: the `B(W)` block is dropped, giving the fixed-point map
/// `[[-tau R, M + tau S(U^k)], [K, -M]] [U^{k+1}; W^{k+1}] = [Z; 0]`.
pub fn step_modified(
    ops: &FemOperators,
    state_t: &State,
    cfg: &SolverConfig,
) -> Result<(State, StepReport)> {
    check_state(ops, state_t)?;
    let started = Instant::now();
    let z = ops.mass.matvec(&state_t.w)?;
    let rhs = stack_rhs(z.clone());
    let (state, k, err) = iterate(cfg, state_t, |_, cur| {
        let s = ops.advection(&cur.u)?;
        let j = modified_matrix(ops, &s, cfg.tau)?;
        Ok(State::from_stacked(&Lu::new(&j)?.solve(&rhs)?))
    })?;
    finish(ops, state, &z, cfg, k, err, started)
}

/// Semilinear scheme with coefficients frozen at time `t`:
/// `(M + tau S(U(t))) W = M W(t) + tau R U(t)`, then `K U = M W`.
pub fn step_semilinear(
    ops: &FemOperators,
    state_t: &State,
    cfg: &SolverConfig,
) -> Result<(State, StepReport)> {
    check_state(ops, state_t)?;
    let started = Instant::now();
    let z = ops.mass.matvec(&state_t.w)?;
    let s = ops.advection(&state_t.u)?;
    let lhs = ops.mass.linear_combination(1.0, &s, cfg.tau)?;
    let ru = ops.drift.matvec(&state_t.u)?;
    let rhs: Vec<f64> = z.iter().zip(&ru).map(|(a, b)| a + cfg.tau * b).collect();
    let w = Lu::new(&lhs)?.solve(&rhs)?;
    let mw = ops.mass.matvec(&w)?;
    let u = Lu::new(&ops.system)?.solve(&mw)?;
    let rel_err = relative_change(&u, &state_t.u);
    finish(ops, State { u, w }, &z, cfg, 1, rel_err, started)
}

/// Dispatches on `cfg.method`.
pub fn step(
    ops: &FemOperators,
    state_t: &State,
    cfg: &SolverConfig,
) -> Result<(State, StepReport)> {
    match cfg.method {
        Method::Newton => step_newton(ops, state_t, cfg),
        Method::Chord => step_chord(ops, state_t, cfg),
        Method::Modified => step_modified(ops, state_t, cfg),
        Method::Semilinear => step_semilinear(ops, state_t, cfg),
    }
}
