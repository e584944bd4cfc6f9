//! Implicit-Euler outer loop.

use std::fmt;

use crate::assembly::FemOperators;
use crate::error::{check_len, Error, Result};
use crate::problems::{sample_nodes, ProblemSpec};
use crate::solvers::{step, Method, SolverConfig, State, StepReport};
use crate::sparse::{m_norm, norm_inf, solve};

pub const DEFAULT_AMPLITUDE_CAP: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    ReachedT,
    AmplitudeCap,
    SolverFailure,
}

impl StopReason {
    pub fn name(self) -> &'static str {
        match self {
            StopReason::ReachedT => "reached_T",
            StopReason::AmplitudeCap => "amplitude_cap",
            StopReason::SolverFailure => "solver_failure",
        }
    }
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-time-level diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub t: f64,
    /// `max_I |U_I|`
    pub u_max: f64,
    pub u_mnorm: f64,
    pub w_mnorm: f64,
    pub elliptic_residual: f64,
}

impl Diagnostics {
    pub fn measure(ops: &FemOperators, state: &State, t: f64) -> Result<Self> {
        Ok(Self {
            t,
            u_max: norm_inf(&state.u),
            u_mnorm: m_norm(&ops.mass, &state.u)?,
            w_mnorm: m_norm(&ops.mass, &state.w)?,
            elliptic_residual: state.elliptic_residual(ops)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub state: State,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub t_end: f64,
    pub snapshot_every: usize,
    pub n: usize,
    pub cap: f64,
}

impl RunOptions {
    pub fn new(n: usize, t_end: f64) -> Self {
        Self {
            t_end,
            snapshot_every: 10,
            n,
            cap: DEFAULT_AMPLITUDE_CAP,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub problem: String,
    pub config: SolverConfig,
    /// Time of every recorded level, starting at 0.
    pub times: Vec<f64>,
    /// One entry per time level, aligned with `times`.
    pub diagnostics: Vec<Diagnostics>,
    /// One report per completed step.
    pub reports: Vec<StepReport>,
    pub snapshots: Vec<Snapshot>,
    pub stop_reason: StopReason,
    pub failure: Option<String>,
    pub tau_admissibility: TauAdmissibility,
    pub ops: FemOperators,
}

impl RunResult {
    pub fn final_state(&self) -> &State {
        &self
            .snapshots
            .last()
            .expect("initial snapshot is always recorded")
            .state
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("t = 0 is always recorded")
    }

    pub fn steps(&self) -> usize {
        self.reports.len()
    }

    pub fn total_iterations(&self) -> usize {
        self.reports.iter().map(|r| r.iterations).sum()
    }

    pub fn total_wall_time(&self) -> std::time::Duration {
        self.reports.iter().map(|r| r.wall_time).sum()
    }

    pub fn max_u(&self) -> f64 {
        self.diagnostics.iter().fold(0.0, |m, d| m.max(d.u_max))
    }
}

/// `W0 = M^{-1} K U0`.
pub fn init_w0(ops: &FemOperators, u0: &[f64]) -> Result<Vec<f64>> {
    check_len("initial U", u0, ops.num_dofs())?;
    solve(&ops.mass, &ops.system.matvec(u0)?)
}

/// Number of steps of size `tau` needed to reach `t_end`.
pub fn step_count(t_end: f64, tau: f64) -> usize {
    let ratio = t_end / tau;
    // 10 / 0.1 must give 100, not 101
    let rounded = ratio.round();
    if (ratio - rounded).abs() <= 1e-9 * ratio.max(1.0) {
        rounded as usize
    } else {
        ratio.ceil() as usize
    }
}

/// Advances `problem` with the given solver until `t_end`, the amplitude
/// cap, or a failed linear solve.
pub fn run(problem: &ProblemSpec, cfg: &SolverConfig, opts: &RunOptions) -> Result<RunResult> {
    cfg.validate()?;
    if !(opts.t_end >= 0.0) {
        return Err(Error::Config(format!(
            "end time must be >= 0, got {}",
            opts.t_end
        )));
    }
    if opts.snapshot_every < 1 {
        return Err(Error::Config("snapshot_every must be at least 1".into()));
    }
    let grid = problem.grid(opts.n)?;
    let u0 = sample_nodes(problem, &grid)?;
    let grad_p = |x: f64, y: f64| problem.grad_p(x, y);
    let ops = FemOperators::new(grid, &grad_p)?;
    let w0 = init_w0(&ops, &u0)?;
    let mut state = State::new(u0, w0)?;

    let first = Diagnostics::measure(&ops, &state, 0.0)?;
    let tau_admissibility = TauAdmissibility::evaluate(
        cfg.method,
        cfg.tau,
        ops.grid().h(),
        problem.p_norm_1inf,
        first.w_mnorm,
        opts.t_end,
        &TheoryConstants::default(),
    );
    if tau_admissibility.ratio > 1.0 {
        log::info!(
            "tau = {} exceeds the theoretical bound {:e} by a factor {:.3e} (constants set to 1)",
            cfg.tau,
            tau_admissibility.bound,
            tau_admissibility.ratio
        );
    }

    let total = step_count(opts.t_end, cfg.tau);
    let mut result = RunResult {
        problem: problem.name.clone(),
        config: *cfg,
        times: vec![0.0],
        diagnostics: vec![first],
        reports: Vec::with_capacity(total),
        snapshots: vec![Snapshot {
            step: 0,
            t: 0.0,
            state: state.clone(),
        }],
        stop_reason: StopReason::ReachedT,
        failure: None,
        tau_admissibility,
        ops,
    };

    for k in 1..=total {
        let t = k as f64 * cfg.tau;
        let (next, report) = match step(&result.ops, &state, cfg) {
            Ok(out) => out,
            Err(source) => {
                let err = Error::Step {
                    step: k,
                    t,
                    source: Box::new(source),
                };
                log::error!("{err}");
                result.stop_reason = StopReason::SolverFailure;
                result.failure = Some(err.to_string());
                break;
            }
        };
        state = next;
        let diag = Diagnostics::measure(&result.ops, &state, t)?;
        result.times.push(t);
        result.diagnostics.push(diag);
        result.reports.push(report);
        let capped = diag.u_max >= opts.cap;
        if capped || k == total || k % opts.snapshot_every == 0 {
            result.snapshots.push(Snapshot {
                step: k,
                t,
                state: state.clone(),
            });
        }
        if capped {
            result.stop_reason = StopReason::AmplitudeCap;
            break;
        }
    }
    if result.stop_reason == StopReason::SolverFailure
        && result.snapshots.last().map(|s| s.step) != Some(result.steps())
    {
        result.snapshots.push(Snapshot {
            step: result.steps(),
            t: result.final_time(),
            state,
        });
    }
    Ok(result)
}

/// Constants of the convergence theory; the theory gives no values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryConstants {
    pub c_inv: f64,
    pub c0_inv: f64,
    pub c1: f64,
    pub eps_tol: f64,
}

impl Default for TheoryConstants {
    fn default() -> Self {
        Self {
            c_inv: 1.0,
            c0_inv: 1.0,
            c1: 1.0,
            eps_tol: 1.0,
        }
    }
}

/// Sufficient timestep bound for the chosen method and `tau / bound`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauAdmissibility {
    pub bound: f64,
    pub ratio: f64,
}

impl TauAdmissibility {
    pub fn evaluate(
        method: Method,
        tau: f64,
        h: f64,
        p_norm: f64,
        w_mnorm: f64,
        t_end: f64,
        c: &TheoryConstants,
    ) -> Self {
        let inv = |x: f64| if x > 0.0 { 1.0 / x } else { f64::INFINITY };
        let growth = (3.0 * t_end * p_norm).exp() * w_mnorm;
        let drift = inv(6.0 * p_norm);
        let uniqueness = h * h * inv(16.0 * c.c0_inv * w_mnorm);
        let h52 = h.powf(2.5);
        let bound = match method {
            Method::Newton => {
                let d1 = c.c_inv.powi(2) * (c.eps_tol + growth) + 2.0 * p_norm;
                drift.min(uniqueness).min(h52 * inv(2.0 * d1))
            }
            Method::Chord => {
                let d2 = c.c_inv.powi(2) * (4.0 * c.c1 + 2.0 * c.eps_tol + growth) + 2.0 * p_norm;
                drift.min(uniqueness).min(h52 * inv(d2))
            }
            Method::Modified => {
                let d3 = c.c_inv.powi(2) * growth + 2.0 * p_norm;
                drift.min(uniqueness).min(h52 * inv(d3))
            }
            Method::Semilinear => inv(2.0 * p_norm).min(uniqueness),
        };
        Self {
            bound,
            ratio: tau / bound,
        }
    }
}

/// Result of checking the a-priori energy bound along a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AprioriReport {
    /// `max_t ||w_N(t)|| / (exp(3 t ||p||_{1,inf}) ||w_N(0)||)`
    pub max_growth_ratio: f64,
    /// `max_t ||u_N(t)|| / ||w_N(t)||`
    pub max_u_over_w: f64,
    /// `max_t (||u_N(t)|| - ||w_N(t)||)`
    pub max_u_excess: f64,
    pub bound_holds: bool,
    pub u_below_w: bool,
}

pub fn apriori_check(diag: &[Diagnostics], p_norm: f64) -> AprioriReport {
    let w0 = diag.first().map_or(0.0, |d| d.w_mnorm);
    let mut report = AprioriReport {
        max_growth_ratio: 0.0,
        max_u_over_w: 0.0,
        max_u_excess: f64::NEG_INFINITY,
        bound_holds: true,
        u_below_w: true,
    };
    for d in diag {
        let bound = (3.0 * d.t * p_norm).exp() * w0;
        let ratio = if bound > 0.0 {
            d.w_mnorm / bound
        } else if d.w_mnorm > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        report.max_growth_ratio = report.max_growth_ratio.max(ratio);
        if d.w_mnorm > 0.0 {
            report.max_u_over_w = report.max_u_over_w.max(d.u_mnorm / d.w_mnorm);
        }
        report.max_u_excess = report.max_u_excess.max(d.u_mnorm - d.w_mnorm);
    }
    report.bound_holds = report.max_growth_ratio <= 1.0;
    report.u_below_w = report.max_u_excess <= 1e-9;
    report
}
