//! Cutting operators, projectors `p = s * P(2+2cos) * T` and Galerkin
//! coarsening.
//!
//! The structured part is coarsened on symbols alone. For a product term the
//! coarse factor in each direction is `fold(s^2 * c * p^2 * g)`, where `c` is
//! the symbol picked up by the cutting matrix: `1` for the tau and circulant
//! decimations and `2 + 2cos t` for the DCT-III pairing `i in {2j-1, 2j}`.
//! The sparse correction is coarsened by an explicit triple product.

use crate::error::{check_len, Error, Result};
use crate::operator::LevelOperator;
use crate::ops::OpCounter;
use crate::sparse::SparseMatrix;
use crate::structured::{AlgebraKind, StructuredOperator};
use crate::symbols::{CosineSymbol, TensorSymbol};

/// 0/1 downsampling matrix `T` of size `fine x coarse`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CuttingOperator {
    kind: AlgebraKind,
    fine: usize,
    coarse: usize,
}

impl CuttingOperator {
    /// Dirichlet: `n0 = 2 n1 + 1`; periodic and reflective: `n0 = 2 n1`.
    pub fn new(kind: AlgebraKind, fine: usize) -> Result<Self> {
        let coarse = match kind {
            AlgebraKind::Tau if fine % 2 == 1 && fine >= 3 => (fine - 1) / 2,
            AlgebraKind::Circulant | AlgebraKind::Dct3 if fine.is_multiple_of(2) && fine >= 2 => fine / 2,
            _ => {
                return Err(Error::InfeasibleChain(format!(
                    "size {fine} cannot be coarsened in the {kind:?} algebra"
                )))
            }
        };
        Ok(Self { kind, fine, coarse })
    }

    pub fn fine(&self) -> usize {
        self.fine
    }

    pub fn coarse(&self) -> usize {
        self.coarse
    }

    /// Fine rows (0-based) holding a one in coarse column `j`.
    #[inline]
    fn rows(&self, j: usize) -> std::ops::Range<usize> {
        match self.kind {
            AlgebraKind::Tau => 2 * j + 1..2 * j + 2,
            AlgebraKind::Circulant => 2 * j..2 * j + 1,
            AlgebraKind::Dct3 => 2 * j..2 * j + 2,
        }
    }

    /// Symbol contributed by `T^T M(g) T`.
    pub fn symbol(&self) -> CosineSymbol {
        match self.kind {
            AlgebraKind::Tau | AlgebraKind::Circulant => CosineSymbol::constant(1.0),
            AlgebraKind::Dct3 => CosineSymbol::projector(),
        }
    }

    pub fn to_sparse(&self) -> SparseMatrix {
        SparseMatrix::from_triplets(
            self.fine,
            self.coarse,
            (0..self.coarse).flat_map(|j| self.rows(j).map(move |i| (i, j, 1.0))),
        )
    }
}

#[derive(Debug, Clone)]
pub struct Projector {
    kind: AlgebraKind,
    cuts: Vec<CuttingOperator>,
    smoothing: StructuredOperator,
    scale_per_dim: f64,
}

impl Projector {
    pub fn new(kind: AlgebraKind, fine_sizes: &[usize]) -> Result<Self> {
        let cuts = fine_sizes
            .iter()
            .map(|&n| CuttingOperator::new(kind, n))
            .collect::<Result<Vec<_>>>()?;
        let smoothing = StructuredOperator::new(
            kind,
            fine_sizes.to_vec(),
            TensorSymbol::separable_product(fine_sizes.len(), &CosineSymbol::projector()),
        );
        let scale_per_dim = match kind {
            AlgebraKind::Tau => std::f64::consts::FRAC_1_SQRT_2,
            _ => 1.0,
        };
        Ok(Self {
            kind,
            cuts,
            smoothing,
            scale_per_dim,
        })
    }

    pub fn kind(&self) -> AlgebraKind {
        self.kind
    }

    pub fn cuts(&self) -> &[CuttingOperator] {
        &self.cuts
    }

    pub fn fine_sizes(&self) -> Vec<usize> {
        self.cuts.iter().map(CuttingOperator::fine).collect()
    }

    pub fn coarse_sizes(&self) -> Vec<usize> {
        self.cuts.iter().map(CuttingOperator::coarse).collect()
    }

    pub fn fine_len(&self) -> usize {
        self.cuts.iter().map(CuttingOperator::fine).product()
    }

    pub fn coarse_len(&self) -> usize {
        self.cuts.iter().map(CuttingOperator::coarse).product()
    }

    /// The structured factor `P = M(2+2cos)` (tensor product in 2D).
    pub fn smoothing(&self) -> &StructuredOperator {
        &self.smoothing
    }

    /// Overall scalar `s^d`.
    pub fn scale(&self) -> f64 {
        self.scale_per_dim.powi(self.cuts.len() as i32)
    }

    /// `x = T y` (tensor product of the 1D cuts).
    fn insert(&self, y: &[f64], x: &mut [f64]) {
        x.iter_mut().for_each(|v| *v = 0.0);
        match self.cuts.as_slice() {
            [c] => {
                for (j, &yj) in y.iter().enumerate() {
                    for i in c.rows(j) {
                        x[i] = yj;
                    }
                }
            }
            [c1, c2] => {
                let (m2, n2) = (c2.coarse, c2.fine);
                for a in 0..c1.coarse {
                    for b in 0..m2 {
                        let v = y[a * m2 + b];
                        for i in c1.rows(a) {
                            for j in c2.rows(b) {
                                x[i * n2 + j] = v;
                            }
                        }
                    }
                }
            }
            _ => unreachable!(),
        }
    }

    /// `y = T^T x`.
    fn gather(&self, x: &[f64], y: &mut [f64]) {
        match self.cuts.as_slice() {
            [c] => {
                for (j, yj) in y.iter_mut().enumerate() {
                    *yj = c.rows(j).map(|i| x[i]).sum();
                }
            }
            [c1, c2] => {
                let (m2, n2) = (c2.coarse, c2.fine);
                for a in 0..c1.coarse {
                    for b in 0..m2 {
                        y[a * m2 + b] = c1
                            .rows(a)
                            .flat_map(|i| c2.rows(b).map(move |j| x[i * n2 + j]))
                            .sum();
                    }
                }
            }
            _ => unreachable!(),
        }
    }

    /// `x = p y`.
    pub fn prolong_into(&self, y: &[f64], x: &mut [f64], ops: &OpCounter) -> Result<()> {
        check_len(self.coarse_len(), y.len())?;
        check_len(self.fine_len(), x.len())?;
        let mut z = vec![0.0; x.len()];
        self.insert(y, &mut z);
        self.smoothing.apply_into(&z, x, ops)?;
        let s = self.scale();
        if s != 1.0 {
            x.iter_mut().for_each(|v| *v *= s);
            ops.add(x.len() as u64);
        }
        Ok(())
    }

    pub fn prolong(&self, y: &[f64]) -> Result<Vec<f64>> {
        let mut x = vec![0.0; self.fine_len()];
        self.prolong_into(y, &mut x, &OpCounter::new())?;
        Ok(x)
    }

    /// `y = p^T r`, the exact adjoint of [`Projector::prolong_into`].
    pub fn restrict_into(&self, r: &[f64], y: &mut [f64], ops: &OpCounter) -> Result<()> {
        check_len(self.fine_len(), r.len())?;
        check_len(self.coarse_len(), y.len())?;
        let mut z = vec![0.0; r.len()];
        self.smoothing.apply_into(r, &mut z, ops)?;
        self.gather(&z, y);
        ops.add(r.len() as u64);
        let s = self.scale();
        if s != 1.0 {
            y.iter_mut().for_each(|v| *v *= s);
            ops.add(y.len() as u64);
        }
        Ok(())
    }

    pub fn restrict(&self, r: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.coarse_len()];
        self.restrict_into(r, &mut y, &OpCounter::new())?;
        Ok(y)
    }

    /// The projector as an explicit `N(n0) x N(n1)` sparse matrix.
    pub fn to_sparse(&self) -> SparseMatrix {
        let mut cuts = self.cuts.iter().map(CuttingOperator::to_sparse);
        let first = cuts.next().expect("at least one dimension");
        let t = cuts.fold(first, |a, b| a.kron(&b));
        self.smoothing.to_sparse().mul(&t).scale(self.scale())
    }

    /// Coarse symbol of `p^T M(sym) p`, factor by factor.
    pub fn galerkin_structured(&self, sym: &TensorSymbol) -> TensorSymbol {
        let p = CosineSymbol::projector();
        let weight = p
            .product(&p)
            .product(&self.cuts[0].symbol())
            .scale(self.scale_per_dim * self.scale_per_dim);
        sym.map_factors(|g| weight.product(g).fold())
    }

    /// Coarse Strang coefficient: `p^T (gamma e e^T / N0) p = gamma' e e^T / N1`.
    pub fn galerkin_rank_one(&self, gamma: f64) -> Result<f64> {
        let w = self.restrict(&vec![1.0; self.fine_len()])?;
        let c = w[0];
        if w.iter().any(|v| (v - c).abs() > 1e-12 * c.abs()) {
            return Err(Error::InvalidConfig(
                "projector does not map constants to constants".into(),
            ));
        }
        Ok(gamma * c * c * self.coarse_len() as f64 / self.fine_len() as f64)
    }

    /// `p^T R p` by sparse triple product.
    pub fn galerkin_sparse(&self, r: &SparseMatrix) -> SparseMatrix {
        if r.nnz() == 0 {
            return SparseMatrix::zeros(self.coarse_len(), self.coarse_len());
        }
        r.triple_product(&self.to_sparse())
    }

    /// Coarse level operator `p^T A p`.
    pub fn coarsen(&self, op: &LevelOperator) -> Result<LevelOperator> {
        let fine = op.structured();
        check_len(self.fine_len(), fine.len())?;
        let rank_one = fine.rank_one().map(|g| self.galerkin_rank_one(g)).transpose()?;
        let structured = StructuredOperator::new(
            self.kind,
            self.coarse_sizes(),
            self.galerkin_structured(fine.symbol()),
        )
        .with_rank_one(rank_one);
        Ok(LevelOperator::new(
            structured,
            op.scale(),
            self.galerkin_sparse(op.correction()),
        ))
    }
}
