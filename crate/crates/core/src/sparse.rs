//! Compressed sparse row storage and the linear algebra the solvers need.
//!
//! Summation order is fixed everywhere (ascending column within a row), so
//! identical inputs give bitwise identical outputs.

use crate::error::{check_len, Error, Result};

/// Floor for the right-hand-side norm in the solve residual contract.
pub const RESIDUAL_FLOOR: f64 = 1e-300;

/// Relative residual `||Ax - b|| / max(||b||, floor)` every solve must meet.
pub const SOLVE_RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            row_offsets: vec![0; nrows + 1],
            col_indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates.
    ///
    /// Duplicates are summed in the order they appear, and entries that sum
    /// to zero are kept as explicit zeros.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let mut counts = vec![0usize; nrows + 1];
        for &(r, c, _) in triplets {
            if r >= nrows || c >= ncols {
                return Err(Error::IndexOutOfRange {
                    row: r,
                    col: c,
                    nrows,
                    ncols,
                });
            }
            counts[r + 1] += 1;
        }
        for r in 0..nrows {
            counts[r + 1] += counts[r];
        }
        // bucket by row, keeping input order within the row (stable)
        let mut next = counts.clone();
        let mut bucket = vec![(0usize, 0.0f64); triplets.len()];
        for &(r, c, v) in triplets {
            bucket[next[r]] = (c, v);
            next[r] += 1;
        }

        let mut row_offsets = Vec::with_capacity(nrows + 1);
        let mut col_indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_offsets.push(0);
        for r in 0..nrows {
            let row = &mut bucket[counts[r]..counts[r + 1]];
            row.sort_by_key(|&(c, _)| c);
            let mut k = 0;
            while k < row.len() {
                let c = row[k].0;
                let mut sum = 0.0;
                while k < row.len() && row[k].0 == c {
                    sum += row[k].1;
                    k += 1;
                }
                col_indices.push(c);
                values.push(sum);
            }
            row_offsets.push(col_indices.len());
        }
        Ok(Self {
            nrows,
            ncols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let range = self.row_offsets[r]..self.row_offsets[r + 1];
        (&self.col_indices[range.clone()], &self.values[range])
    }

    /// Stored value at `(r, c)`, zero when the entry is not stored.
    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    /// Iterator over stored `(row, col, value)` entries in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.nrows];
        self.matvec_into(x, &mut y)?;
        Ok(y)
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        check_len("matvec input", x, self.ncols)?;
        if y.len() != self.nrows {
            return Err(Error::shape("matvec output", self.nrows, y.len()));
        }
        for (r, out) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            let mut acc = 0.0;
            for (&c, &v) in cols.iter().zip(vals) {
                acc += v * x[c];
            }
            *out = acc;
        }
        Ok(())
    }

    pub fn transpose(&self) -> Self {
        let triplets: Vec<_> = self.triplets().map(|(r, c, v)| (c, r, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, &triplets)
            .expect("transposed indices are in range")
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    /// `alpha * self + beta * other` on the union sparsity pattern.
    pub fn linear_combination(&self, alpha: f64, other: &CsrMatrix, beta: f64) -> Result<Self> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::shape(
                "matrix sum",
                format!("{}x{}", self.nrows, self.ncols),
                format!("{}x{}", other.nrows, other.ncols),
            ));
        }
        let mut row_offsets = Vec::with_capacity(self.nrows + 1);
        let mut col_indices = Vec::with_capacity(self.nnz() + other.nnz());
        let mut values = Vec::with_capacity(self.nnz() + other.nnz());
        row_offsets.push(0);
        for r in 0..self.nrows {
            let (ca, va) = self.row(r);
            let (cb, vb) = other.row(r);
            let (mut i, mut j) = (0, 0);
            while i < ca.len() || j < cb.len() {
                let take_a = j == cb.len() || (i < ca.len() && ca[i] <= cb[j]);
                let take_b = i == ca.len() || (j < cb.len() && cb[j] <= ca[i]);
                match (take_a, take_b) {
                    (true, true) => {
                        col_indices.push(ca[i]);
                        values.push(alpha * va[i] + beta * vb[j]);
                        i += 1;
                        j += 1;
                    }
                    (true, false) => {
                        col_indices.push(ca[i]);
                        values.push(alpha * va[i]);
                        i += 1;
                    }
                    _ => {
                        col_indices.push(cb[j]);
                        values.push(beta * vb[j]);
                        j += 1;
                    }
                }
            }
            row_offsets.push(col_indices.len());
        }
        Ok(Self {
            nrows: self.nrows,
            ncols: self.ncols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Largest stored magnitude.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.triplets() {
            d[(r, c)] += v;
        }
        d
    }
}

/// Assembles `[[a11, a12], [a21, a22]]` in row-major block order.
pub fn block2x2(
    a11: &CsrMatrix,
    a12: &CsrMatrix,
    a21: &CsrMatrix,
    a22: &CsrMatrix,
) -> Result<CsrMatrix> {
    let top = a11.nrows;
    let bottom = a21.nrows;
    let left = a11.ncols;
    let right = a12.ncols;
    let dims = |m: &CsrMatrix| format!("{}x{}", m.nrows, m.ncols);
    for (m, rows, cols, ctx) in [
        (a12, top, right, "block (1,2)"),
        (a21, bottom, left, "block (2,1)"),
        (a22, bottom, right, "block (2,2)"),
    ] {
        if m.nrows != rows || m.ncols != cols {
            return Err(Error::shape(ctx, format!("{rows}x{cols}"), dims(m)));
        }
    }

    let nrows = top + bottom;
    let mut row_offsets = Vec::with_capacity(nrows + 1);
    let mut col_indices = Vec::with_capacity(a11.nnz() + a12.nnz() + a21.nnz() + a22.nnz());
    let mut values = Vec::with_capacity(col_indices.capacity());
    row_offsets.push(0);
    for (lhs, rhs, rows) in [(a11, a12, top), (a21, a22, bottom)] {
        for r in 0..rows {
            let (c1, v1) = lhs.row(r);
            let (c2, v2) = rhs.row(r);
            col_indices.extend_from_slice(c1);
            values.extend_from_slice(v1);
            col_indices.extend(c2.iter().map(|c| c + left));
            values.extend_from_slice(v2);
            row_offsets.push(col_indices.len());
        }
    }
    Ok(CsrMatrix {
        nrows,
        ncols: left + right,
        row_offsets,
        col_indices,
        values,
    })
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            data: vec![0.0; nrows * ncols],
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.ncols..(r + 1) * self.ncols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("dense matvec input", x, self.ncols)?;
        Ok((0..self.nrows)
            .map(|r| self.row(r).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.ncols, self.nrows);
        for r in 0..self.nrows {
            for c in 0..self.ncols {
                t[(c, r)] = self[(r, c)];
            }
        }
        t
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.ncols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        &mut self.data[r * self.ncols + c]
    }
}

/// LU factorization with partial pivoting, `P A = L U`.
///
/// Keeps the sparse original for one step of iterative refinement when the
/// residual contract is missed.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    factors: DenseMatrix,
    perm: Vec<usize>,
    original: CsrMatrix,
}

impl Lu {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        if a.nrows != a.ncols {
            return Err(Error::shape(
                "LU factorization",
                "square matrix",
                format!("{}x{}", a.nrows, a.ncols),
            ));
        }
        let n = a.nrows;
        let mut f = a.to_dense();
        let scale = a.max_abs();
        let threshold = f64::EPSILON * scale;
        let mut perm: Vec<usize> = (0..n).collect();

        for k in 0..n {
            let (mut p, mut best) = (k, f[(k, k)].abs());
            for r in k + 1..n {
                let v = f[(r, k)].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best <= threshold || best == 0.0 {
                return Err(Error::Singular {
                    pivot: best,
                    column: k,
                });
            }
            if p != k {
                perm.swap(p, k);
                let (lo, hi) = f.data.split_at_mut(p * n);
                lo[k * n..(k + 1) * n].swap_with_slice(&mut hi[..n]);
            }
            let (head, tail) = f.data.split_at_mut((k + 1) * n);
            let pivot_row = &head[k * n..];
            let pivot = pivot_row[k];
            for row in tail.chunks_exact_mut(n) {
                if row[k] == 0.0 {
                    continue;
                }
                let l = row[k] / pivot;
                row[k] = l;
                for (x, &u) in row[k + 1..].iter_mut().zip(&pivot_row[k + 1..]) {
                    *x -= l * u;
                }
            }
        }
        Ok(Self {
            n,
            factors: f,
            perm,
            original: a.clone(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn substitute(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let f = &self.factors;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for r in 0..n {
            let row = f.row(r);
            let mut acc = x[r];
            for c in 0..r {
                acc -= row[c] * x[c];
            }
            x[r] = acc;
        }
        for r in (0..n).rev() {
            let row = f.row(r);
            let mut acc = x[r];
            for c in r + 1..n {
                acc -= row[c] * x[c];
            }
            x[r] = acc / row[r];
        }
        x
    }

    /// Solves `A x = b`, refining once if the residual contract is missed.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        check_len("solve right-hand side", b, self.n)?;
        let mut x = self.substitute(b);
        let bnorm = norm2(b).max(RESIDUAL_FLOOR);
        let mut r = self.residual(&x, b)?;
        if norm2(&r) / bnorm > SOLVE_RESIDUAL_TOL {
            let dx = self.substitute(&r);
            x.iter_mut().zip(&dx).for_each(|(xi, d)| *xi += d);
            r = self.residual(&x, b)?;
            log::debug!("refined solve, relative residual {:e}", norm2(&r) / bnorm);
        }
        Ok(x)
    }

    fn residual(&self, x: &[f64], b: &[f64]) -> Result<Vec<f64>> {
        let ax = self.original.matvec(x)?;
        Ok(b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect())
    }
}

/// Solves `A x = b` by LU with partial pivoting.
pub fn solve(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    Lu::new(a)?.solve(b)
}

/// `sqrt(v^T M v)`, the L2 norm of the P1 function with coefficients `v`.
pub fn m_norm(m: &CsrMatrix, v: &[f64]) -> Result<f64> {
    let mv = m.matvec(v)?;
    let q = dot(v, &mv);
    if q < 0.0 {
        let mut scale = 0.0;
        for (r, c, val) in m.triplets() {
            scale += (val * v[r] * v[c]).abs();
        }
        if q < -1e-12 * scale {
            return Err(Error::NotSpd { value: q });
        }
        return Ok(0.0);
    }
    Ok(q.sqrt())
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
