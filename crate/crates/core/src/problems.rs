//! The five benchmark configurations and nodal sampling of initial data.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::DofGrid;

pub type ScalarField = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type VectorField = Arc<dyn Fn(f64, f64) -> [f64; 2] + Send + Sync>;

/// Domain, initial potential and drift gradient of one problem.
///
/// Only `grad p` is stored; every operator depends on `p` through
/// `V(p) = (-p_y, p_x)`.
#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub lx: f64,
    pub ly: f64,
    pub u0: ScalarField,
    pub grad_p: VectorField,
    /// `||p||_{1,inf}` used by the a-priori diagnostics.
    pub p_norm_1inf: f64,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("lx", &self.lx)
            .field("ly", &self.ly)
            .field("p_norm_1inf", &self.p_norm_1inf)
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    pub fn new(
        name: impl Into<String>,
        side: f64,
        u0: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        grad_p: impl Fn(f64, f64) -> [f64; 2] + Send + Sync + 'static,
        p_norm_1inf: f64,
    ) -> Self {
        Self {
            name: name.into(),
            lx: side,
            ly: side,
            u0: Arc::new(u0),
            grad_p: Arc::new(grad_p),
            p_norm_1inf,
        }
    }

    pub fn u0(&self, x: f64, y: f64) -> f64 {
        (self.u0)(x, y)
    }

    pub fn grad_p(&self, x: f64, y: f64) -> [f64; 2] {
        (self.grad_p)(x, y)
    }

    /// Grid with `n` points per direction over this problem's domain.
    pub fn grid(&self, n: usize) -> Result<DofGrid> {
        DofGrid::new(self.lx, self.ly, n)
    }
}

const DRIFT_12X: [f64; 2] = [12.0, 0.0];

/// Test cases 1 to 5.
pub fn preset(id: u32) -> Result<ProblemSpec> {
    let spec = match id {
        1 => ProblemSpec::new(
            "test1: sin(10 pi y) on [0,1]^2",
            1.0,
            |_, y| 1e-5 * (10.0 * PI * y).sin(),
            |_, _| DRIFT_12X,
            12.0,
        ),
        2 => ProblemSpec::new(
            "test2: sin(3y) on [0,pi]^2",
            PI,
            |_, y| 1e-5 * (3.0 * y).sin(),
            |_, _| DRIFT_12X,
            12.0,
        ),
        3 => ProblemSpec::new(
            "test3: sin(3x) on [0,pi]^2",
            PI,
            |x, _| 1e-5 * (3.0 * x).sin(),
            |_, _| DRIFT_12X,
            12.0,
        ),
        4 => ProblemSpec::new(
            "test4: xy(x-2)sin(x) on [0,pi]^2",
            PI,
            |x, y| 1e-10 * x * y * (x - 2.0) * x.sin(),
            |_, _| DRIFT_12X,
            12.0,
        ),
        // p = ln(1e13 exp(-((x-10)^2 + (y-10)^2) / 64))
        5 => ProblemSpec::new(
            "test5: gaussian dipole on [0,20]^2",
            20.0,
            |x, y| {
                let (dx, dy) = (x - 10.0, y - 10.0);
                -1e-5 * dx * (-0.5 * dx * dx - 0.5 * dy * dy).exp()
            },
            |x, y| [-(x - 10.0) / 32.0, -(y - 10.0) / 32.0],
            // sup of |grad p| over the square, attained at the corners
            10.0 * std::f64::consts::SQRT_2 / 32.0,
        ),
        other => return Err(Error::UnknownPreset(other)),
    };
    Ok(spec)
}

/// Nodal interpolation of `u0`: each dof takes the value at its
/// representative node `(i, j)`, `i, j < n - 1`.
pub fn sample_nodes(spec: &ProblemSpec, grid: &DofGrid) -> Result<Vec<f64>> {
    let tol = 1e-12 * spec.lx.max(spec.ly);
    if (grid.lx() - spec.lx).abs() > tol || (grid.ly() - spec.ly).abs() > tol {
        return Err(Error::Config(format!(
            "grid domain {} x {} does not match problem domain {} x {}",
            grid.lx(),
            grid.ly(),
            spec.lx,
            spec.ly
        )));
    }
    grid.dof_coords()
        .into_iter()
        .map(|[x, y]| {
            let v = spec.u0(x, y);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Evaluation {
                    what: "initial condition",
                    x,
                    y,
                })
            }
        })
        .collect()
}
