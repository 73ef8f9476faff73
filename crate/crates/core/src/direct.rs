//! Exact solves on the coarsest level.

use nalgebra::{Cholesky, DVector, Dyn};

use crate::error::{check_len, Error, Result};
use crate::operator::LevelOperator;
use crate::ops::OpCounter;
use crate::sparse::SparseMatrix;
use crate::structured::DENSE_LIMIT;


/// Fill-reducing order for a row-major grid: recursive bisection by grid
/// lines, separators last. 1D grids keep the natural order.
pub fn dissection_order(sizes: &[usize]) -> Vec<usize> {
    match *sizes {
        [n] => (0..n).collect(),
        [n1, n2] => {
            let mut order = Vec::with_capacity(n1 * n2);
            dissect(n2, (0, n1), (0, n2), &mut order);
            order
        }
        _ => unreachable!("grids are one- or two-dimensional"),
    }
}

fn dissect(stride: usize, rows: (usize, usize), cols: (usize, usize), order: &mut Vec<usize>) {
    let (h, w) = (rows.1 - rows.0, cols.1 - cols.0);
    if h == 0 || w == 0 {
        return;
    }
    if h * w <= 16 || h < 3 && w < 3 {
        for i in rows.0..rows.1 {
            order.extend((cols.0..cols.1).map(|j| i * stride + j));
        }
        return;
    }
    if h >= w {
        let mid = rows.0 + h / 2;
        dissect(stride, (rows.0, mid), cols, order);
        dissect(stride, (mid + 1, rows.1), cols, order);
        order.extend((cols.0..cols.1).map(|j| mid * stride + j));
    } else {
        let mid = cols.0 + w / 2;
        dissect(stride, rows, (cols.0, mid), order);
        dissect(stride, rows, (mid + 1, cols.1), order);
        order.extend((rows.0..rows.1).map(|i| i * stride + mid));
    }
}

/// Sparse Cholesky factor `P A P^T = L L^T` of a symmetric positive
/// definite matrix, computed row by row along the elimination tree.
#[derive(Debug, Clone)]
pub struct SparseCholesky {
    n: usize,
    // perm[new] = old
    perm: Vec<usize>,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

const NONE: usize = usize::MAX;

impl SparseCholesky {
    pub fn factor(a: &SparseMatrix, perm: Vec<usize>) -> Result<Self> {
        let n = a.rows();
        check_len(n, perm.len())?;
        let mut inv = vec![NONE; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        if inv.contains(&NONE) {
            return Err(Error::InvalidConfig("ordering is not a permutation".into()));
        }
        // upper part of the permuted matrix, stored by columns
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (old_i, &i) in inv.iter().enumerate() {
            let (js, vs) = a.row(old_i);
            for (&old_j, &v) in js.iter().zip(vs) {
                let j = inv[old_j];
                if i <= j {
                    cols[j].push((i, v));
                }
            }
        }

        let mut parent = vec![NONE; n];
        let mut ancestor = vec![NONE; n];
        for (k, col) in cols.iter().enumerate() {
            for &(i0, _) in col {
                let mut i = i0;
                while i != NONE && i < k {
                    let next = ancestor[i];
                    ancestor[i] = k;
                    if next == NONE {
                        parent[i] = k;
                    }
                    i = next;
                }
            }
        }

        let mut mark = vec![NONE; n];
        let mut stack = vec![0usize; n];
        let mut pattern = vec![0usize; n];
        // nonzero pattern of row k of L in topological order
        let reach = |k: usize, mark: &mut [usize], stack: &mut [usize], pattern: &mut [usize]| {
            let mut top = n;
            mark[k] = k;
            for &(i0, _) in &cols[k] {
                let mut len = 0;
                let mut i = i0;
                while mark[i] != k {
                    stack[len] = i;
                    len += 1;
                    mark[i] = k;
                    i = parent[i];
                }
                while len > 0 {
                    len -= 1;
                    top -= 1;
                    pattern[top] = stack[len];
                }
            }
            top
        };

        let mut counts = vec![1usize; n];
        for k in 0..n {
            let top = reach(k, &mut mark, &mut stack, &mut pattern);
            for &i in &pattern[top..] {
                counts[i] += 1;
            }
        }
        let mut col_ptr = vec![0usize; n + 1];
        for k in 0..n {
            col_ptr[k + 1] = col_ptr[k] + counts[k];
        }
        let nnz = col_ptr[n];
        let mut row_idx = vec![0usize; nnz];
        let mut values = vec![0.0; nnz];
        let mut next = col_ptr[..n].to_vec();
        let mut x = vec![0.0; n];
        mark.iter_mut().for_each(|m| *m = NONE);
        for k in 0..n {
            let top = reach(k, &mut mark, &mut stack, &mut pattern);
            for &(i, v) in &cols[k] {
                x[i] += v;
            }
            let mut d = x[k];
            x[k] = 0.0;
            for &i in &pattern[top..] {
                let lki = x[i] / values[col_ptr[i]];
                x[i] = 0.0;
                for p in col_ptr[i] + 1..next[i] {
                    x[row_idx[p]] -= values[p] * lki;
                }
                d -= lki * lki;
                row_idx[next[i]] = k;
                values[next[i]] = lki;
                next[i] += 1;
            }
            if !(d > 0.0) {
                return Err(Error::NotPositiveDefinite);
            }
            row_idx[next[k]] = k;
            values[next[k]] = d.sqrt();
            next[k] += 1;
        }
        Ok(Self {
            n,
            perm,
            col_ptr,
            row_idx,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Stored entries of `L`.
    pub fn factor_nnz(&self) -> usize {
        self.values.len()
    }

    pub fn solve_into(&self, b: &[f64], x: &mut [f64]) {
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for j in 0..self.n {
            let (lo, hi) = (self.col_ptr[j], self.col_ptr[j + 1]);
            y[j] /= self.values[lo];
            let yj = y[j];
            for p in lo + 1..hi {
                y[self.row_idx[p]] -= self.values[p] * yj;
            }
        }
        for j in (0..self.n).rev() {
            let (lo, hi) = (self.col_ptr[j], self.col_ptr[j + 1]);
            let mut s = y[j];
            for p in lo + 1..hi {
                s -= self.values[p] * y[self.row_idx[p]];
            }
            y[j] = s / self.values[lo];
        }
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
    }
}

#[derive(Debug, Clone)]
pub enum CoarseSolver {
    Dense(Cholesky<f64, Dyn>),
    Sparse(SparseCholesky),
    /// `A = C + rho e e^T` with `C e = 0`: the constant component is solved
    /// in closed form and `C` is factored with one unknown fixed to zero.
    Grounded {
        factor: SparseCholesky,
        ground: usize,
        rho: f64,
    },
}

/// Whether `c` maps the constant vector to zero, up to rounding.
fn annihilates_constants(c: &SparseMatrix) -> bool {
    let ones = vec![1.0; c.cols()];
    let ce = c.matvec(&ones).expect("square matrix");
    ce.iter().all(|v| v.abs() <= 1e-12 * c.norm_inf())
}

/// `c` without row and column `g`.
fn remove_index(c: &SparseMatrix, g: usize) -> SparseMatrix {
    let shift = |i: usize| if i > g { i - 1 } else { i };
    let mut trip = Vec::with_capacity(c.nnz());
    for i in (0..c.rows()).filter(|&i| i != g) {
        let (cols, vals) = c.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            if j != g {
                trip.push((shift(i), shift(j), v));
            }
        }
    }
    SparseMatrix::from_triplets(c.rows() - 1, c.cols() - 1, trip)
}

impl CoarseSolver {
    /// Factor a level operator once, in nested dissection order. A rank-one
    /// term along the null vector of the sparse part is handled by grounding;
    /// any other rank-one term needs a dense factor of at most
    /// [`DENSE_LIMIT`] unknowns.
    pub fn factor(op: &LevelOperator) -> Result<Self> {
        let n = op.combined().rows();
        let rho = op.rank_one_coefficient();
        let order = dissection_order(op.structured().sizes());
        if rho == 0.0 {
            return Ok(CoarseSolver::Sparse(SparseCholesky::factor(op.combined(), order)?));
        }
        if n > 1 && annihilates_constants(op.combined()) {
            // ground the last unknown of the ordering, a separator vertex
            let ground = *order.last().expect("nonempty level");
            let sub_order = order[..n - 1].iter().map(|&i| if i > ground { i - 1 } else { i }).collect();
            let factor = SparseCholesky::factor(&remove_index(op.combined(), ground), sub_order)?;
            return Ok(CoarseSolver::Grounded { factor, ground, rho });
        }
        if n > DENSE_LIMIT {
            return Err(Error::TooLarge {
                size: n,
                limit: DENSE_LIMIT,
            });
        }
        let chol = Cholesky::new(op.to_dense()?).ok_or(Error::NotPositiveDefinite)?;
        Ok(CoarseSolver::Dense(chol))
    }

    pub fn len(&self) -> usize {
        match self {
            CoarseSolver::Dense(c) => c.l_dirty().nrows(),
            CoarseSolver::Sparse(f) => f.len(),
            CoarseSolver::Grounded { factor, .. } => factor.len() + 1,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `x = A^{-1} b`; counts the triangular sweeps and vector updates.
    pub fn solve_into(&self, b: &[f64], x: &mut [f64], ops: &OpCounter) -> Result<()> {
        let n = self.len();
        check_len(n, b.len())?;
        check_len(n, x.len())?;
        match self {
            CoarseSolver::Dense(c) => {
                let mut v = DVector::from_column_slice(b);
                c.solve_mut(&mut v);
                x.copy_from_slice(v.as_slice());
                ops.add(2 * (n * n) as u64);
            }
            CoarseSolver::Sparse(f) => {
                f.solve_into(b, x);
                ops.add(4 * f.factor_nnz() as u64);
            }
            CoarseSolver::Grounded { factor, ground, rho } => {
                let mean_b = b.iter().sum::<f64>() / n as f64;
                let reduced: Vec<f64> = b
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != *ground)
                    .map(|(_, v)| v - mean_b)
                    .collect();
                let mut z = vec![0.0; n - 1];
                factor.solve_into(&reduced, &mut z);
                z.insert(*ground, 0.0);
                let mean_z = z.iter().sum::<f64>() / n as f64;
                let shift = mean_b / (rho * n as f64) - mean_z;
                for (xi, zi) in x.iter_mut().zip(&z) {
                    *xi = zi + shift;
                }
                ops.add(4 * factor.factor_nnz() as u64 + 5 * n as u64);
            }
        }
        Ok(())
    }
}
