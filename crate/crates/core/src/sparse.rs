//! Compressed-row sparse matrices, a thin wrapper over `sprs`.

use crate::error::{check_len, Result};
use crate::ops::OpCounter;
use nalgebra::DMatrix;
use sprs::{CsMat, TriMat};

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    inner: CsMat<f64>,
}

impl SparseMatrix {
    /// Duplicate entries are summed.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Self {
        let mut tri = TriMat::new((rows, cols));
        for (i, j, v) in triplets {
            tri.add_triplet(i, j, v);
        }
        Self::from_csmat(tri.to_csr())
    }

    pub fn from_csmat(mut inner: CsMat<f64>) -> Self {
        if !inner.is_csr() {
            inner = inner.to_csr();
        }
        Self { inner }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_csmat(CsMat::zero((rows, cols)))
    }

    pub fn identity(n: usize) -> Self {
        Self::from_csmat(CsMat::eye(n))
    }

    pub fn as_csmat(&self) -> &CsMat<f64> {
        &self.inner
    }

    pub fn rows(&self) -> usize {
        self.inner.rows()
    }

    pub fn cols(&self) -> usize {
        self.inner.cols()
    }

    pub fn nnz(&self) -> usize {
        self.inner.nnz()
    }

    pub fn values(&self) -> &[f64] {
        self.inner.data()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let range = self.inner.indptr().outer_inds_sz(i);
        (&self.inner.indices()[range.clone()], &self.inner.data()[range])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.inner.get(i, j).copied().unwrap_or(0.0)
    }

    /// `y = A x`.
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64], ops: &OpCounter) -> Result<()> {
        check_len(self.cols(), x.len())?;
        check_len(self.rows(), y.len())?;
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&j, v)| v * x[j]).sum();
        }
        ops.add(2 * self.nnz() as u64);
        Ok(())
    }

    /// `y += A x`.
    pub fn matvec_add(&self, x: &[f64], y: &mut [f64], ops: &OpCounter) -> Result<()> {
        check_len(self.cols(), x.len())?;
        check_len(self.rows(), y.len())?;
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            *yi += cols.iter().zip(vals).map(|(&j, v)| v * x[j]).sum::<f64>();
        }
        ops.add(2 * self.nnz() as u64);
        Ok(())
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.rows()];
        self.matvec_into(x, &mut y, &OpCounter::new())?;
        Ok(y)
    }

    pub fn transpose(&self) -> Self {
        Self::from_csmat(self.inner.transpose_view().to_csr())
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self::from_csmat(&self.inner * &other.inner)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_csmat(&self.inner + &other.inner)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::from_csmat(&self.inner - &other.inner)
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut inner = self.inner.clone();
        inner.scale(s);
        Self { inner }
    }

    /// `P^T A P`.
    pub fn triple_product(&self, p: &Self) -> Self {
        p.transpose().mul(&self.mul(p))
    }

    pub fn kron(&self, other: &Self) -> Self {
        Self::from_csmat(sprs::kronecker_product(self.inner.view(), other.inner.view()))
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows())
            .map(|i| self.row(i).1.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows().min(self.cols())).map(|i| self.get(i, i)).collect()
    }

    /// Largest `|i - j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.rows())
            .flat_map(|i| self.row(i).0.iter().map(move |&j| i.abs_diff(j)))
            .max()
            .unwrap_or(0)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let t = self.transpose();
        let diff = self.sub(&t);
        diff.values().iter().all(|v| v.abs() <= tol)
    }

    /// Drops stored entries with `|v| <= tol`.
    pub fn pruned(&self, tol: f64) -> Self {
        let trip = (0..self.rows()).flat_map(|i| {
            let (cols, vals) = self.row(i);
            cols.iter()
                .zip(vals)
                .filter(|(_, v)| v.abs() > tol)
                .map(move |(&j, &v)| (i, j, v))
                .collect::<Vec<_>>()
        });
        Self::from_triplets(self.rows(), self.cols(), trip)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.rows(), self.cols());
        for i in 0..self.rows() {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                m[(i, j)] += v;
            }
        }
        m
    }
}
