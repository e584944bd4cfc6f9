//! Discrete operators of the coupled system on a [`DofGrid`].
//!
//! With `V(f) = (-f_y, f_x)` and P1 basis functions `phi_I`:
//!
//! * `M_IJ = (phi_I, phi_J)` (mass)
//! * `A_IJ = (grad phi_I, grad phi_J)` (stiffness), `K = M + A`
//! * `R_IJ = (V(p) . grad phi_J, phi_I)` (drift)
//! * `S_IJ(U) = (V(u_N) . grad phi_J, phi_I)` (advection, skew-symmetric)
//! * `B(W) = [S(e_1) W, ..., S(e_N) W]`, the derivative of `S(U) W` in `U`
//!
//! Gradients are constant on each triangle, so the integrals for `M`, `A`,
//! `S` and `B` are exact. `R` uses the edge-midpoint rule, exact for
//! integrands of degree two, i.e. whenever `grad p` is affine.

use crate::error::{check_len, Error, Result};
use crate::grid::{DofGrid, Element};
use crate::sparse::CsrMatrix;

/// Drift field gradient `grad p` evaluated at a point.
pub type GradField<'a> = &'a dyn Fn(f64, f64) -> [f64; 2];

/// `V(a) . b` for the rotated field `V(a) = (-a_y, a_x)`.
#[inline]
pub fn rotated_dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

const EDGE_MIDPOINTS: [[f64; 3]; 3] = [[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]];

/// Operators that stay fixed over a run.
#[derive(Debug, Clone)]
pub struct FemOperators {
    grid: DofGrid,
    pub mass: CsrMatrix,
    pub stiffness: CsrMatrix,
    /// `K = M + A`
    pub system: CsrMatrix,
    /// Drift transport `R`.
    pub drift: CsrMatrix,
}

impl FemOperators {
    pub fn new(grid: DofGrid, grad_p: GradField<'_>) -> Result<Self> {
        let mass = assemble_mass(&grid);
        let stiffness = assemble_stiffness(&grid);
        let system = mass.linear_combination(1.0, &stiffness, 1.0)?;
        let drift = assemble_drift(&grid, grad_p)?;
        Ok(Self {
            grid,
            mass,
            stiffness,
            system,
            drift,
        })
    }

    pub fn grid(&self) -> &DofGrid {
        &self.grid
    }

    pub fn num_dofs(&self) -> usize {
        self.grid.num_dofs()
    }

    /// `S(U)` on this grid.
    pub fn advection(&self, u: &[f64]) -> Result<CsrMatrix> {
        assemble_advection(&self.grid, u)
    }

    /// `B(W)` on this grid.
    pub fn advection_derivative(&self, w: &[f64]) -> Result<CsrMatrix> {
        assemble_advection_derivative(&self.grid, w)
    }
}

fn element_loop(
    grid: &DofGrid,
    mut local: impl FnMut(&Element, &mut [[f64; 3]; 3]) -> Result<()>,
) -> Result<CsrMatrix> {
    let n = grid.num_dofs();
    let mut triplets = Vec::with_capacity(9 * grid.elements().len());
    for e in grid.elements() {
        let mut block = [[0.0; 3]; 3];
        local(e, &mut block)?;
        for a in 0..3 {
            for b in 0..3 {
                triplets.push((e.dofs[a], e.dofs[b], block[a][b]));
            }
        }
    }
    CsrMatrix::from_triplets(n, n, &triplets)
}

pub fn assemble_mass(grid: &DofGrid) -> CsrMatrix {
    element_loop(grid, |e, block| {
        for (a, row) in block.iter_mut().enumerate() {
            for (b, v) in row.iter_mut().enumerate() {
                *v = e.area / 12.0 * if a == b { 2.0 } else { 1.0 };
            }
        }
        Ok(())
    })
    .expect("element dofs are in range")
}

pub fn assemble_stiffness(grid: &DofGrid) -> CsrMatrix {
    element_loop(grid, |e, block| {
        for (a, row) in block.iter_mut().enumerate() {
            for (b, v) in row.iter_mut().enumerate() {
                let (ga, gb) = (e.grads[a], e.grads[b]);
                *v = e.area * (ga[0] * gb[0] + ga[1] * gb[1]);
            }
        }
        Ok(())
    })
    .expect("element dofs are in range")
}

/// Drift matrix `R` for the field `grad p`.
pub fn assemble_drift(grid: &DofGrid, grad_p: GradField<'_>) -> Result<CsrMatrix> {
    element_loop(grid, |e, block| {
        let weight = e.area / 3.0;
        for bary in EDGE_MIDPOINTS {
            let [x, y] = e.point(bary);
            let g = grad_p(x, y);
            if !(g[0].is_finite() && g[1].is_finite()) {
                return Err(Error::Evaluation {
                    what: "drift gradient",
                    x,
                    y,
                });
            }
            for (a, row) in block.iter_mut().enumerate() {
                for (b, v) in row.iter_mut().enumerate() {
                    *v += weight * bary[a] * rotated_dot(g, e.grads[b]);
                }
            }
        }
        Ok(())
    })
}

/// Advection matrix `S(U)`.
///
/// On each element `V(u_N) . grad phi_J` is constant and `phi_I` integrates
/// to `area / 3`, so every row of the local block is the same.
pub fn assemble_advection(grid: &DofGrid, u: &[f64]) -> Result<CsrMatrix> {
    check_len("advection coefficients", u, grid.num_dofs())?;
    element_loop(grid, |e, block| {
        let grad_u = e.gradient_of(u);
        let third = e.area / 3.0;
        for row in block.iter_mut() {
            for (b, v) in row.iter_mut().enumerate() {
                *v = third * rotated_dot(grad_u, e.grads[b]);
            }
        }
        Ok(())
    })
}

/// `B(W)`, whose column `j` is `S(e_j) W`.
///
/// Element `e` contributes `area / 3 * V(grad phi_j) . grad w_N` to
/// `B_Ij` for the vertex dofs `I`, `j` of `e`; no `S(e_j)` is formed.
pub fn assemble_advection_derivative(grid: &DofGrid, w: &[f64]) -> Result<CsrMatrix> {
    check_len("advection derivative coefficients", w, grid.num_dofs())?;
    element_loop(grid, |e, block| {
        let grad_w = e.gradient_of(w);
        let third = e.area / 3.0;
        for row in block.iter_mut() {
            for (b, v) in row.iter_mut().enumerate() {
                *v = third * rotated_dot(e.grads[b], grad_w);
            }
        }
        Ok(())
    })
}
