use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid partition: need at least 3 points per direction, got {n}")]
    InvalidPartition { n: usize },

    #[error("invalid domain {lx} x {ly}: {reason}")]
    InvalidDomain {
        lx: f64,
        ly: f64,
        reason: &'static str,
    },

    #[error("node ({i}, {j}) outside the {n} x {n} node lattice")]
    NodeOutOfRange { i: usize, j: usize, n: usize },

    #[error("entry ({row}, {col}) outside a {nrows} x {ncols} matrix")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        nrows: usize,
        ncols: usize,
    },

    #[error("shape mismatch in {context}: expected {expected}, found {found}")]
    Shape {
        context: &'static str,
        expected: String,
        found: String,
    },

    #[error("matrix is singular to working precision (pivot {pivot:e} at column {column})")]
    Singular { pivot: f64, column: usize },

    #[error("matrix is not positive definite (quadratic form {value:e})")]
    NotSpd { value: f64 },

    #[error("{what} is not finite at ({x}, {y})")]
    Evaluation { what: &'static str, x: f64, y: f64 },

    #[error("unknown test case {0}; presets are numbered 1 to 5")]
    UnknownPreset(u32),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("dense oracle refuses n = {n}; it is limited to n <= {max}")]
    OracleTooLarge { n: usize, max: usize },

    #[error("timestep {step} (t = {t}) failed: {source}")]
    Step {
        step: usize,
        t: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn shape(
        context: &'static str,
        expected: impl ToString,
        found: impl ToString,
    ) -> Self {
        Error::Shape {
            context,
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn check_len(context: &'static str, v: &[f64], expected: usize) -> Result<()> {
    if v.len() != expected {
        return Err(Error::shape(context, expected, v.len()));
    }
    Ok(())
}
