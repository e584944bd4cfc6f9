//! Uniform structured triangulation of a periodic square.
//!
//! The node lattice has `n` points per direction, `x_i = i h`, `y_j = j h`
//! for `i, j in 0..n`. Nodes on the right and top edges are identified with
//! their periodic images on the left and bottom edges, which leaves
//! `(n - 1)^2` degrees of freedom numbered row-major in `j`.
//!
//! Every cell `[x_i, x_{i+1}] x [y_j, y_{j+1}]` is split along the diagonal
//! from its lower-left to its upper-right corner into two counter-clockwise
//! triangles:
//!
//! ```text
//!  (i,j+1) +------+ (i+1,j+1)
//!          |    / |
//!          |  /   |
//!          |/     |
//!    (i,j) +------+ (i+1,j)
//! ```

use crate::error::{Error, Result};

/// One P1 triangle with its local geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    /// Degrees of freedom of the three vertices, counter-clockwise.
    pub dofs: [usize; 3],
    /// Physical vertex coordinates (unwrapped, inside `[0, Lx] x [0, Ly]`).
    pub vertices: [[f64; 2]; 3],
    pub area: f64,
    /// Constant gradients of the three local barycentric basis functions.
    pub grads: [[f64; 2]; 3],
}

impl Element {
    fn new(dofs: [usize; 3], vertices: [[f64; 2]; 3]) -> Self {
        let [[x0, y0], [x1, y1], [x2, y2]] = vertices;
        let twice_area = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0);
        let grads = [
            [(y1 - y2) / twice_area, (x2 - x1) / twice_area],
            [(y2 - y0) / twice_area, (x0 - x2) / twice_area],
            [(y0 - y1) / twice_area, (x1 - x0) / twice_area],
        ];
        Self {
            dofs,
            vertices,
            area: 0.5 * twice_area,
            grads,
        }
    }

    /// Point with the given barycentric coordinates.
    pub fn point(&self, bary: [f64; 3]) -> [f64; 2] {
        let mut p = [0.0; 2];
        for (v, b) in self.vertices.iter().zip(bary) {
            p[0] += b * v[0];
            p[1] += b * v[1];
        }
        p
    }

    /// Barycentric coordinates (local P1 basis values) at `p`.
    pub fn barycentric(&self, p: [f64; 2]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (a, g) in self.grads.iter().enumerate() {
            // lambda_a is affine with gradient g and value 1 at vertex a
            let va = self.vertices[a];
            out[a] = 1.0 + g[0] * (p[0] - va[0]) + g[1] * (p[1] - va[1]);
        }
        out
    }

    /// Gradient of the P1 interpolant with vertex values `coeffs[dofs[a]]`.
    pub fn gradient_of(&self, coeffs: &[f64]) -> [f64; 2] {
        let mut g = [0.0; 2];
        for (a, grad) in self.grads.iter().enumerate() {
            let c = coeffs[self.dofs[a]];
            g[0] += c * grad[0];
            g[1] += c * grad[1];
        }
        g
    }
}

/// Periodic P1 mesh on `[0, Lx] x [0, Ly]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DofGrid {
    n: usize,
    lx: f64,
    ly: f64,
    h: f64,
    elements: Vec<Element>,
}

impl DofGrid {
    /// Builds the triangulation with `n` partition points per direction.
    ///
    /// Only square domains are supported.
    pub fn new(lx: f64, ly: f64, n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidPartition { n });
        }
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(Error::InvalidDomain {
                lx,
                ly,
                reason: "side lengths must be positive and finite",
            });
        }
        if (lx - ly).abs() > 1e-12 * lx.max(ly) {
            return Err(Error::InvalidDomain {
                lx,
                ly,
                reason: "only square domains are supported",
            });
        }
        let m = n - 1;
        let h = lx / m as f64;
        let xy = |i: usize, j: usize| [i as f64 * h, j as f64 * h];
        let dof = |i: usize, j: usize| (j % m) * m + (i % m);

        let mut elements = Vec::with_capacity(2 * m * m);
        for j in 0..m {
            for i in 0..m {
                elements.push(Element::new(
                    [dof(i, j), dof(i + 1, j), dof(i + 1, j + 1)],
                    [xy(i, j), xy(i + 1, j), xy(i + 1, j + 1)],
                ));
                elements.push(Element::new(
                    [dof(i, j), dof(i + 1, j + 1), dof(i, j + 1)],
                    [xy(i, j), xy(i + 1, j + 1), xy(i, j + 1)],
                ));
            }
        }
        Ok(Self {
            n,
            lx,
            ly,
            h,
            elements,
        })
    }

    /// Partition points per direction.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }

    pub fn ly(&self) -> f64 {
        self.ly
    }

    /// Mesh spacing.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Number of degrees of freedom, `(n - 1)^2`.
    pub fn num_dofs(&self) -> usize {
        (self.n - 1) * (self.n - 1)
    }

    /// Dofs per direction, `n - 1`.
    pub fn cells_per_side(&self) -> usize {
        self.n - 1
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    /// Degree of freedom carried by lattice node `(i, j)`, `0 <= i, j <= n - 1`.
    pub fn dof_of_node(&self, i: usize, j: usize) -> Result<usize> {
        if i >= self.n || j >= self.n {
            return Err(Error::NodeOutOfRange { i, j, n: self.n });
        }
        let m = self.n - 1;
        Ok((j % m) * m + (i % m))
    }

    /// Coordinates of lattice node `(i, j)`.
    pub fn node_coords(&self, i: usize, j: usize) -> [f64; 2] {
        [i as f64 * self.h, j as f64 * self.h]
    }

    /// Representative node `(i, j)` with `i, j < n - 1` of a dof.
    pub fn representative_node(&self, dof: usize) -> (usize, usize) {
        let m = self.n - 1;
        (dof % m, dof / m)
    }

    /// Coordinates of the representative node of each dof, in dof order.
    pub fn dof_coords(&self) -> Vec<[f64; 2]> {
        (0..self.num_dofs())
            .map(|d| {
                let (i, j) = self.representative_node(d);
                self.node_coords(i, j)
            })
            .collect()
    }
}
