//! Command-line front end.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Parser;

use crate::error::{Error, Result};
use crate::integrator::{run, RunOptions, RunResult, StopReason};
use crate::output::{emit_comparison, emit_convergence_log, emit_snapshot, ComparisonRow};
use crate::problems::preset;
use crate::solvers::{Method, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodChoice {
    One(Method),
    /// Newton, Chord and Modified Newton in turn, plus a comparison table.
    AllNewtonType,
}

fn parse_method(s: &str) -> std::result::Result<MethodChoice, String> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(MethodChoice::AllNewtonType);
    }
    s.parse()
        .map(MethodChoice::One)
        .map_err(|e: Error| e.to_string())
}

fn positive_f64(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be a positive number, got {v}"))
    }
}

fn nonnegative_f64(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be a non-negative number, got {v}"))
    }
}

/// Run one of the benchmark problems with an implicit Newton-type solver.
#[derive(Debug, Clone, PartialEq, Parser)]
#[command(name = "hmfem", version, about)]
pub struct RunConfig {
    /// Test case, 1 to 5.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..=5))]
    pub test: u32,

    /// newton, chord, modified, semilinear, or all (the three Newton-type methods).
    #[arg(long, default_value = "modified", value_parser = parse_method)]
    pub method: MethodChoice,

    /// Partition points per direction.
    #[arg(long, default_value_t = 17, value_parser = clap::value_parser!(u64).range(3..))]
    pub n: u64,

    /// Time step.
    #[arg(long, default_value_t = 0.1, value_parser = positive_f64, allow_hyphen_values = true)]
    pub tau: f64,

    /// End time.
    #[arg(long = "T", default_value_t = 10.0, value_parser = nonnegative_f64, allow_hyphen_values = true)]
    pub t_end: f64,

    /// Relative-change stopping tolerance.
    #[arg(long, default_value_t = 1e-6, value_parser = positive_f64, allow_hyphen_values = true)]
    pub tol: f64,

    /// Maximum inner iterations per step.
    #[arg(long = "kmax", default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    pub k_max: u64,

    /// Write a snapshot every this many steps.
    #[arg(long = "snapshot-every", default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub snapshot_every: u64,

    /// Output directory.
    #[arg(long = "out")]
    pub out_dir: PathBuf,

    /// Stop once max |U| reaches this amplitude.
    #[arg(long, default_value_t = crate::integrator::DEFAULT_AMPLITUDE_CAP, value_parser = positive_f64)]
    pub cap: f64,
}

impl RunConfig {
    pub fn solver_config(&self, method: Method) -> SolverConfig {
        SolverConfig {
            tau: self.tau,
            tol: self.tol,
            k_max: self.k_max as usize,
            method,
        }
    }

    pub fn run_options(&self) -> RunOptions {
        RunOptions {
            t_end: self.t_end,
            snapshot_every: self.snapshot_every as usize,
            n: self.n as usize,
            cap: self.cap,
        }
    }

    pub fn methods(&self) -> Vec<Method> {
        match self.method {
            MethodChoice::One(m) => vec![m],
            MethodChoice::AllNewtonType => Method::NEWTON_TYPE.to_vec(),
        }
    }
}

pub fn parse_args<I, T>(argv: I) -> std::result::Result<RunConfig, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    RunConfig::try_parse_from(argv)
}

/// Writes snapshots and the convergence log of one run into `dir`.
pub fn write_run(result: &RunResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for snap in &result.snapshots {
        let path = dir.join(format!("snapshot_{:06}.csv", snap.step));
        emit_snapshot(&snap.state, result.ops.grid(), snap.t, &path)?;
    }
    emit_convergence_log(result, &dir.join("convergence.csv"))
}

/// Executes a parsed configuration and returns the process exit status.
pub fn execute(cfg: &RunConfig) -> Result<i32> {
    let problem = preset(cfg.test)?;
    let methods = cfg.methods();
    let mut rows = Vec::new();
    let mut status = 0;
    for method in &methods {
        let solver = cfg.solver_config(*method);
        let result = run(&problem, &solver, &cfg.run_options())?;
        let dir = if methods.len() == 1 {
            cfg.out_dir.clone()
        } else {
            cfg.out_dir.join(method.name())
        };
        write_run(&result, &dir)?;
        log::info!(
            "{} / {}: {} steps, {} iterations, {:.3} s, {}",
            problem.name,
            method,
            result.steps(),
            result.total_iterations(),
            result.total_wall_time().as_secs_f64(),
            result.stop_reason
        );
        if result.stop_reason == StopReason::SolverFailure {
            if let Some(msg) = &result.failure {
                eprintln!("{msg}");
            }
            status = 1;
        }
        rows.push(ComparisonRow::from_result(&result));
    }
    if methods.len() > 1 {
        emit_comparison(&rows, &cfg.out_dir.join("comparison.csv"))?;
    }
    Ok(status)
}
