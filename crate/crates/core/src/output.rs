//! CSV snapshot and convergence-log formats.
//!
//! Snapshots list the full `n x n` node lattice, periodic rows and columns
//! included, as `x,y,u,w` with 17 significant digits, `j`-major. The
//! convergence log has one row per timestep followed by a `#` summary line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::DofGrid;
use crate::integrator::{RunResult, StopReason};
use crate::solvers::{Method, State};

pub const SNAPSHOT_HEADER: &str = "x,y,u,w";
pub const CONVERGENCE_HEADER: &str = "t,iters,rel_err,residual,u_max,w_mnorm,wall_ms";

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

pub fn write_snapshot(out: &mut impl Write, state: &State, grid: &DofGrid) -> std::io::Result<()> {
    writeln!(out, "{SNAPSHOT_HEADER}")?;
    let n = grid.n();
    for j in 0..n {
        for i in 0..n {
            let d = grid.dof_of_node(i, j).expect("lattice node");
            let [x, y] = grid.node_coords(i, j);
            writeln!(
                out,
                "{x:.16e},{y:.16e},{:.16e},{:.16e}",
                state.u[d], state.w[d]
            )?;
        }
    }
    Ok(())
}

/// Writes one snapshot file; `_t` is carried in the file name by callers.
pub fn emit_snapshot(state: &State, grid: &DofGrid, _t: f64, path: &Path) -> Result<()> {
    let mut out = create(path)?;
    write_snapshot(&mut out, state, grid)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

/// One parsed snapshot row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotRow {
    pub x: f64,
    pub y: f64,
    pub u: f64,
    pub w: f64,
}

pub fn read_snapshot(path: &Path) -> Result<Vec<SnapshotRow>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (k, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if k == 0 {
            if line != SNAPSHOT_HEADER {
                return Err(Error::Config(format!("bad snapshot header '{line}'")));
            }
            continue;
        }
        let f: Vec<f64> = line
            .split(',')
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|e| Error::Config(format!("line {}: {e}", k + 1)))?;
        if f.len() != 4 {
            return Err(Error::Config(format!("line {}: expected 4 fields", k + 1)));
        }
        rows.push(SnapshotRow {
            x: f[0],
            y: f[1],
            u: f[2],
            w: f[3],
        });
    }
    Ok(rows)
}

pub fn write_convergence_log(out: &mut impl Write, result: &RunResult) -> std::io::Result<()> {
    writeln!(out, "{CONVERGENCE_HEADER}")?;
    for (report, diag) in result.reports.iter().zip(&result.diagnostics[1..]) {
        writeln!(
            out,
            "{},{},{:.6e},{:.6e},{:.16e},{:.16e},{:.3}",
            diag.t,
            report.iterations,
            report.final_rel_err,
            report.residual_norm,
            diag.u_max,
            diag.w_mnorm,
            report.wall_time.as_secs_f64() * 1e3
        )?;
    }
    writeln!(
        out,
        "# total_iterations={},total_wall_ms={:.3},steps={},stop_reason={}",
        result.total_iterations(),
        result.total_wall_time().as_secs_f64() * 1e3,
        result.steps(),
        result.stop_reason
    )
}

pub fn emit_convergence_log(result: &RunResult, path: &Path) -> Result<()> {
    let mut out = create(path)?;
    write_convergence_log(&mut out, result)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

/// Per-method totals in the layout of the method comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub method: Method,
    /// Largest iteration count over all steps.
    pub max_iterations: usize,
    pub min_iterations: usize,
    /// Largest final relative error over all steps.
    pub max_rel_err: f64,
    pub total_seconds: f64,
    pub stop_reason: StopReason,
}

impl ComparisonRow {
    pub fn from_result(result: &RunResult) -> Self {
        let iters = result.reports.iter().map(|r| r.iterations);
        Self {
            method: result.config.method,
            max_iterations: iters.clone().max().unwrap_or(0),
            min_iterations: iters.min().unwrap_or(0),
            max_rel_err: result
                .reports
                .iter()
                .fold(0.0, |m, r| m.max(r.final_rel_err)),
            total_seconds: result.total_wall_time().as_secs_f64(),
            stop_reason: result.stop_reason,
        }
    }
}

pub fn emit_comparison(rows: &[ComparisonRow], path: &Path) -> Result<()> {
    let mut out = create(path)?;
    let mut body = || -> std::io::Result<()> {
        writeln!(
            out,
            "method,min_iters,max_iters,max_rel_err,time_s,stop_reason"
        )?;
        for r in rows {
            writeln!(
                out,
                "{},{},{},{:.3e},{:.6},{}",
                r.method,
                r.min_iterations,
                r.max_iterations,
                r.max_rel_err,
                r.total_seconds,
                r.stop_reason
            )?;
        }
        out.flush()
    };
    body().map_err(|e| Error::io(path, e))
}
