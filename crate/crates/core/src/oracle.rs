//! Brute-force reference implementations for verification on small grids.
//!
//! Nothing here shares code with the fast paths beyond the dof numbering:
//! triangles are rebuilt from the node lattice, basis functions are
//! evaluated from vertex coordinates, every entry is a direct 7-point
//! (degree 5) quadrature of its defining inner product over all triangles,
//! and linear systems are solved by plain Gaussian elimination.

use crate::assembly::FemOperators;
use crate::error::{Error, Result};
use crate::grid::DofGrid;
use crate::solvers::{residual, SolverConfig, State, REL_ERR_FLOOR};
use crate::sparse::DenseMatrix;

/// Largest `n` the oracle accepts.
pub const MAX_ORACLE_N: usize = 9;

struct Triangle {
    dofs: [usize; 3],
    vertices: [[f64; 2]; 3],
}

impl Triangle {
    fn area(&self) -> f64 {
        let [[x0, y0], [x1, y1], [x2, y2]] = self.vertices;
        0.5 * ((x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0)).abs()
    }

    /// Barycentric coordinates by Cramer's rule.
    fn lambda(&self, p: [f64; 2]) -> [f64; 3] {
        let [[x0, y0], [x1, y1], [x2, y2]] = self.vertices;
        let det = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0);
        let l1 = ((p[0] - x0) * (y2 - y0) - (x2 - x0) * (p[1] - y0)) / det;
        let l2 = ((x1 - x0) * (p[1] - y0) - (p[0] - x0) * (y1 - y0)) / det;
        [1.0 - l1 - l2, l1, l2]
    }

    /// Value of the global hat function of `dof` restricted to this triangle.
    fn hat(&self, dof: usize, p: [f64; 2]) -> f64 {
        let l = self.lambda(p);
        (0..3).filter(|&a| self.dofs[a] == dof).map(|a| l[a]).sum()
    }

    /// Gradient of the restricted hat function by exact affine differences.
    fn hat_gradient(&self, dof: usize) -> [f64; 2] {
        let o = self.vertices[0];
        let f0 = self.hat(dof, o);
        [
            self.hat(dof, [o[0] + 1.0, o[1]]) - f0,
            self.hat(dof, [o[0], o[1] + 1.0]) - f0,
        ]
    }

    fn supports(&self, dof: usize) -> bool {
        self.dofs.contains(&dof)
    }

    fn quadrature(&self) -> Vec<([f64; 2], f64)> {
        let area = self.area();
        seven_point_rule()
            .into_iter()
            .map(|(b, w)| {
                let mut p = [0.0; 2];
                for (v, bi) in self.vertices.iter().zip(b) {
                    p[0] += bi * v[0];
                    p[1] += bi * v[1];
                }
                (p, w * area)
            })
            .collect()
    }
}

/// Degree-5 rule on a triangle: barycentric points and weights summing to 1.
pub fn seven_point_rule() -> Vec<([f64; 3], f64)> {
    let s = 15f64.sqrt();
    let (a1, b1, w1) = (
        (9.0 + 2.0 * s) / 21.0,
        (6.0 - s) / 21.0,
        (155.0 - s) / 1200.0,
    );
    let (a2, b2, w2) = (
        (9.0 - 2.0 * s) / 21.0,
        (6.0 + s) / 21.0,
        (155.0 + s) / 1200.0,
    );
    vec![
        ([1.0 / 3.0; 3], 9.0 / 40.0),
        ([a1, b1, b1], w1),
        ([b1, a1, b1], w1),
        ([b1, b1, a1], w1),
        ([a2, b2, b2], w2),
        ([b2, a2, b2], w2),
        ([b2, b2, a2], w2),
    ]
}

fn triangles(grid: &DofGrid) -> Vec<Triangle> {
    let n = grid.n();
    let mut out = Vec::new();
    for j in 0..n - 1 {
        for i in 0..n - 1 {
            let node = |a: usize, b: usize| -> (usize, [f64; 2]) {
                (
                    grid.dof_of_node(a, b).expect("lattice node"),
                    grid.node_coords(a, b),
                )
            };
            for corners in [
                [(i, j), (i + 1, j), (i + 1, j + 1)],
                [(i, j), (i + 1, j + 1), (i, j + 1)],
            ] {
                let v: Vec<_> = corners.iter().map(|&(a, b)| node(a, b)).collect();
                out.push(Triangle {
                    dofs: [v[0].0, v[1].0, v[2].0],
                    vertices: [v[0].1, v[1].1, v[2].1],
                });
            }
        }
    }
    out
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn check_size(grid: &DofGrid) -> Result<()> {
    if grid.n() > MAX_ORACLE_N {
        return Err(Error::OracleTooLarge {
            n: grid.n(),
            max: MAX_ORACLE_N,
        });
    }
    Ok(())
}

/// Dense operators computed entry by entry.
#[derive(Debug, Clone)]
pub struct DenseOracle {
    pub n: usize,
    pub mass: DenseMatrix,
    pub stiffness: DenseMatrix,
    pub drift: DenseMatrix,
    pub advection: DenseMatrix,
}

fn gradient_of(t: &Triangle, coeffs: &[f64]) -> [f64; 2] {
    let mut g = [0.0; 2];
    for &d in &t.dofs {
        // repeated dofs would be double counted; the lattice has none per triangle
        let gd = t.hat_gradient(d);
        g[0] += coeffs[d] * gd[0];
        g[1] += coeffs[d] * gd[1];
    }
    g
}

/// `out[I][J] = sum_T sum_q w_q f(T, q, I, J)` over every `(I, J)` pair.
fn dense_double_loop(
    grid: &DofGrid,
    tris: &[Triangle],
    f: impl Fn(&Triangle, [f64; 2], usize, usize) -> f64,
) -> DenseMatrix {
    let n = grid.num_dofs();
    let mut out = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for t in tris {
                if !(t.supports(i) && t.supports(j)) {
                    continue;
                }
                for (p, w) in t.quadrature() {
                    acc += w * f(t, p, i, j);
                }
            }
            out[(i, j)] = acc;
        }
    }
    out
}

/// Builds `M`, `A`, `R` and `S(U)` by direct quadrature.
pub fn dense_assemble_all(
    grid: &DofGrid,
    grad_p: &dyn Fn(f64, f64) -> [f64; 2],
    u: &[f64],
) -> Result<DenseOracle> {
    check_size(grid)?;
    crate::error::check_len("oracle U", u, grid.num_dofs())?;
    let tris = triangles(grid);
    let mass = dense_double_loop(grid, &tris, |t, p, i, j| t.hat(i, p) * t.hat(j, p));
    let stiffness = dense_double_loop(grid, &tris, |t, _, i, j| {
        let (gi, gj) = (t.hat_gradient(i), t.hat_gradient(j));
        gi[0] * gj[0] + gi[1] * gj[1]
    });
    let drift = dense_double_loop(grid, &tris, |t, p, i, j| {
        cross(grad_p(p[0], p[1]), t.hat_gradient(j)) * t.hat(i, p)
    });
    let advection = dense_double_loop(grid, &tris, |t, p, i, j| {
        cross(gradient_of(t, u), t.hat_gradient(j)) * t.hat(i, p)
    });
    Ok(DenseOracle {
        n: grid.n(),
        mass,
        stiffness,
        drift,
        advection,
    })
}

/// `S(U)` alone.
pub fn dense_advection(grid: &DofGrid, u: &[f64]) -> Result<DenseMatrix> {
    check_size(grid)?;
    crate::error::check_len("oracle U", u, grid.num_dofs())?;
    let tris = triangles(grid);
    Ok(dense_double_loop(grid, &tris, |t, p, i, j| {
        cross(gradient_of(t, u), t.hat_gradient(j)) * t.hat(i, p)
    }))
}

/// `B(W)_Ij = (V(grad phi_j) . grad w_N, phi_I)`, the `U_j`-derivative of `S(U) W`.
pub fn dense_advection_derivative(grid: &DofGrid, w: &[f64]) -> Result<DenseMatrix> {
    check_size(grid)?;
    crate::error::check_len("oracle W", w, grid.num_dofs())?;
    let tris = triangles(grid);
    Ok(dense_double_loop(grid, &tris, |t, p, i, j| {
        cross(t.hat_gradient(j), gradient_of(t, w)) * t.hat(i, p)
    }))
}

/// Column-by-column central differences of `f` at `x`.
pub fn central_difference_jacobian(
    f: impl Fn(&[f64]) -> Result<Vec<f64>>,
    x: &[f64],
    step: f64,
) -> Result<DenseMatrix> {
    let m = f(x)?.len();
    let mut jac = DenseMatrix::zeros(m, x.len());
    let mut xp = x.to_vec();
    for c in 0..x.len() {
        xp[c] = x[c] + step;
        let fp = f(&xp)?;
        xp[c] = x[c] - step;
        let fm = f(&xp)?;
        xp[c] = x[c];
        for r in 0..m {
            jac[(r, c)] = (fp[r] - fm[r]) / (2.0 * step);
        }
    }
    Ok(jac)
}

/// Finite-difference Jacobian of the timestep residual at `state`.
pub fn fd_jacobian(ops: &FemOperators, state: &State, tau: f64, step: f64) -> Result<DenseMatrix> {
    check_size(ops.grid())?;
    let n = ops.num_dofs();
    let z = ops.mass.matvec(&state.w)?;
    let f = |x: &[f64]| {
        let s = State::from_stacked(x);
        let su = ops.advection(&s.u)?;
        residual(ops, &su, &s, &z, tau)
    };
    let jac = central_difference_jacobian(f, &state.stacked(), step)?;
    debug_assert_eq!(jac.ncols(), 2 * n);
    Ok(jac)
}

/// Gaussian elimination with partial pivoting on a dense copy.
pub fn dense_solve(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.nrows();
    let mut m: Vec<Vec<f64>> = (0..n).map(|r| a.row(r).to_vec()).collect();
    let mut x = b.to_vec();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&r, &s| m[r][k].abs().total_cmp(&m[s][k].abs()))
            .expect("non-empty range");
        if m[p][k] == 0.0 {
            return Err(Error::Singular {
                pivot: 0.0,
                column: k,
            });
        }
        m.swap(k, p);
        x.swap(k, p);
        for r in k + 1..n {
            let l = m[r][k] / m[k][k];
            for c in k..n {
                m[r][c] -= l * m[k][c];
            }
            x[r] -= l * x[k];
        }
    }
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| m[r][c] * x[c]).sum();
        x[r] = (x[r] - s) / m[r][r];
    }
    Ok(x)
}

/// One Newton timestep from dense oracle operators only.
pub fn dense_newton_step(
    grid: &DofGrid,
    grad_p: &dyn Fn(f64, f64) -> [f64; 2],
    state_t: &State,
    cfg: &SolverConfig,
) -> Result<(State, usize)> {
    let base = dense_assemble_all(grid, grad_p, &state_t.u)?;
    let n = grid.num_dofs();
    let tau = cfg.tau;
    let z = base.mass.matvec(&state_t.w)?;
    let mut cur = state_t.clone();
    let mut k = 0;
    let mut err = f64::INFINITY;
    while err > cfg.tol && k < cfg.k_max {
        let s = dense_advection(grid, &cur.u)?;
        let b = dense_advection_derivative(grid, &cur.w)?;
        let mut j = DenseMatrix::zeros(2 * n, 2 * n);
        for r in 0..n {
            for c in 0..n {
                j[(r, c)] = tau * b[(r, c)] - tau * base.drift[(r, c)];
                j[(r, c + n)] = base.mass[(r, c)] + tau * s[(r, c)];
                j[(r + n, c)] = base.mass[(r, c)] + base.stiffness[(r, c)];
                j[(r + n, c + n)] = -base.mass[(r, c)];
            }
        }
        let sw = s.matvec(&cur.w)?;
        let mut rhs: Vec<f64> = sw.iter().zip(&z).map(|(a, zi)| tau * a + zi).collect();
        rhs.resize(2 * n, 0.0);
        let next = State::from_stacked(&dense_solve(&j, &rhs)?);
        let diff: f64 = next
            .u
            .iter()
            .zip(&cur.u)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let base_norm = cur.u.iter().map(|v| v * v).sum::<f64>().sqrt();
        err = if base_norm < REL_ERR_FLOOR {
            diff
        } else {
            diff / base_norm
        };
        cur = next;
        k += 1;
    }
    Ok((cur, k))
}
