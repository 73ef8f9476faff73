//! The per-level operator `scale * Structured + R`.

use crate::error::{check_len, Result};
use crate::ops::OpCounter;
use crate::sparse::SparseMatrix;
use crate::structured::StructuredOperator;
use nalgebra::DMatrix;

pub trait LinearOperator {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `y = A x`.
    fn apply_into(&self, x: &[f64], y: &mut [f64], ops: &OpCounter) -> Result<()>;

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.len()];
        self.apply_into(x, &mut y, &OpCounter::new())?;
        Ok(y)
    }

    /// `r = b - A x`.
    fn residual_into(&self, x: &[f64], b: &[f64], r: &mut [f64], ops: &OpCounter) -> Result<()> {
        check_len(self.len(), b.len())?;
        self.apply_into(x, r, ops)?;
        r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
        ops.add(self.len() as u64);
        Ok(())
    }
}

impl LinearOperator for SparseMatrix {
    fn len(&self) -> usize {
        self.rows()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64], ops: &OpCounter) -> Result<()> {
        self.matvec_into(x, y, ops)
    }
}

/// `x -> scale * structured(x) + correction * x`.
///
/// The structured part is applied matrix-free from its symbol. `combined`
/// holds the same operator as one sparse matrix minus the dense rank-one
/// term, for row-wise sweeps and direct factorization.
#[derive(Debug, Clone)]
pub struct LevelOperator {
    structured: StructuredOperator,
    scale: f64,
    correction: SparseMatrix,
    combined: SparseMatrix,
}

impl LevelOperator {
    pub fn new(structured: StructuredOperator, scale: f64, correction: SparseMatrix) -> Self {
        assert_eq!(structured.len(), correction.rows(), "operator parts must agree in size");
        let combined = structured.to_sparse().scale(scale).add(&correction);
        Self {
            structured,
            scale,
            correction,
            combined,
        }
    }

    pub fn structured(&self) -> &StructuredOperator {
        &self.structured
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn correction(&self) -> &SparseMatrix {
        &self.correction
    }

    pub fn combined(&self) -> &SparseMatrix {
        &self.combined
    }

    /// Coefficient `rho` of the rank-one term `rho * e e^T`, zero if absent.
    pub fn rank_one_coefficient(&self) -> f64 {
        self.structured
            .rank_one()
            .map_or(0.0, |g| self.scale * g / self.len() as f64)
    }

    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        Ok(self.structured.materialize_dense()? * self.scale + self.correction.to_dense())
    }
}

impl LinearOperator for LevelOperator {
    fn len(&self) -> usize {
        self.structured.len()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64], ops: &OpCounter) -> Result<()> {
        self.structured.apply_into(x, y, ops)?;
        if self.scale != 1.0 {
            y.iter_mut().for_each(|yi| *yi *= self.scale);
            ops.add(self.len() as u64);
        }
        self.correction.matvec_add(x, y, ops)
    }
}
