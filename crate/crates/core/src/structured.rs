//! Matrix-free operators in the tau (DST-I), circulant and DCT-III algebras.
//!
//! An operator is defined by a banded [`TensorSymbol`]. Application never
//! forms the matrix: each 1D factor acts on a line by extending it outside
//! `0..n` the way the algebra's eigenvectors extend (odd reflection for tau,
//! periodic wrap for circulant, even half-sample reflection for DCT-III) and
//! then convolving with the symbol's band. That costs `O(N * bandwidth)`.
//!
//! Periodic and reflective operators with a symbol vanishing at zero are
//! singular; the optional rank-one term `gamma * e e^T / N` (Strang
//! correction) is stored as a scalar.

use crate::error::{check_len, Error, Result};
use crate::ops::OpCounter;
use crate::sparse::SparseMatrix;
use crate::symbols::{CosineSymbol, TensorSymbol};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Largest `N` accepted by [`StructuredOperator::materialize_dense`].
pub const DENSE_LIMIT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AlgebraKind {
    Tau,
    Circulant,
    Dct3,
}

impl AlgebraKind {
    /// Angles at which the symbol gives the eigenvalues of a size-`n` matrix.
    pub fn eigen_grid(self, n: usize) -> Vec<f64> {
        match self {
            AlgebraKind::Tau => (1..=n).map(|j| j as f64 * PI / (n + 1) as f64).collect(),
            AlgebraKind::Circulant => (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect(),
            AlgebraKind::Dct3 => (0..n).map(|j| PI * j as f64 / n as f64).collect(),
        }
    }

    /// Source of extended index `j` (0-based, any integer) for a line of
    /// length `n`: the index it copies from and the sign, or `None` if it is
    /// identically zero.
    #[inline]
    fn source(self, n: usize, j: isize) -> Option<(usize, f64)> {
        let n_i = n as isize;
        match self {
            AlgebraKind::Tau => {
                let period = 2 * n_i + 2;
                let r = (j + 1).rem_euclid(period);
                if r == 0 || r == n_i + 1 {
                    None
                } else if r <= n_i {
                    Some(((r - 1) as usize, 1.0))
                } else {
                    Some(((period - r - 1) as usize, -1.0))
                }
            }
            AlgebraKind::Circulant => Some((j.rem_euclid(n_i) as usize, 1.0)),
            AlgebraKind::Dct3 => {
                let r = j.rem_euclid(2 * n_i);
                if r < n_i {
                    Some((r as usize, 1.0))
                } else {
                    Some(((2 * n_i - 1 - r) as usize, 1.0))
                }
            }
        }
    }

    /// `y = M(f) x` along one line.
    fn apply_line(self, f: &CosineSymbol, x: &[f64], y: &mut [f64], ext: &mut Vec<f64>) {
        let n = x.len();
        let m = f.bandwidth();
        ext.clear();
        ext.extend((-(m as isize)..(n + m) as isize).map(|j| {
            if (0..n as isize).contains(&j) {
                x[j as usize]
            } else {
                self.source(n, j).map_or(0.0, |(src, sign)| sign * x[src])
            }
        }));
        let c = f.coeffs();
        for (i, yi) in y.iter_mut().enumerate() {
            let centre = i + m;
            let mut acc = c[0] * ext[centre];
            for (k, ck) in c.iter().enumerate().skip(1) {
                acc += ck * (ext[centre - k] + ext[centre + k]);
            }
            *yi = acc;
        }
    }

    /// Dense `n x n` matrix of the 1D symbol `f`, from the closed-form
    /// Toeplitz-plus-Hankel entries of each algebra (image sums handle
    /// bands wider than the matrix).
    pub fn dense_1d(self, f: &CosineSymbol, n: usize) -> DMatrix<f64> {
        let m = f.bandwidth() as isize;
        let c = |k: isize| if k.abs() <= m { f.coeff(k) } else { 0.0 };
        let period = match self {
            AlgebraKind::Tau => 2 * n as isize + 2,
            AlgebraKind::Circulant => n as isize,
            AlgebraKind::Dct3 => 2 * n as isize,
        };
        let images = m / period + 2;
        DMatrix::from_fn(n, n, |i0, j0| {
            let (i, j) = (i0 as isize + 1, j0 as isize + 1);
            (-images..=images)
                .map(|s| {
                    let shift = s * period;
                    match self {
                        AlgebraKind::Tau => c(i - j + shift) - c(i + j + shift),
                        AlgebraKind::Circulant => c(i - j + shift),
                        AlgebraKind::Dct3 => c(i - j + shift) + c(i + j - 1 + shift),
                    }
                })
                .sum()
        })
    }

    /// Sparse band of the 1D symbol `f`.
    pub fn sparse_1d(self, f: &CosineSymbol, n: usize) -> SparseMatrix {
        let m = f.bandwidth() as isize;
        let trip = (0..n).flat_map(|i| {
            (-m..=m).filter_map(move |k| {
                let j = i as isize + k;
                self.source(n, j).map(|(src, sign)| (i, src, sign * f.coeff(k)))
            })
        });
        SparseMatrix::from_triplets(n, n, trip.collect::<Vec<_>>()).pruned(0.0)
    }
}

/// Symbol-defined operator on a `d`-dimensional grid stored in row-major
/// order (the last dimension varies fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuredOperator {
    kind: AlgebraKind,
    sizes: Vec<usize>,
    symbol: TensorSymbol,
    rank_one: Option<f64>,
}

impl StructuredOperator {
    /// # Panics
    /// If `sizes` does not match the symbol's dimension or has a zero entry.
    pub fn new(kind: AlgebraKind, sizes: Vec<usize>, symbol: TensorSymbol) -> Self {
        assert_eq!(sizes.len(), symbol.dim(), "one size per symbol dimension");
        assert!(sizes.iter().all(|&n| n > 0), "sizes must be positive");
        Self {
            kind,
            sizes,
            symbol,
            rank_one: None,
        }
    }

    pub fn with_rank_one(mut self, gamma: Option<f64>) -> Self {
        self.rank_one = gamma;
        self
    }

    pub fn kind(&self) -> AlgebraKind {
        self.kind
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn symbol(&self) -> &TensorSymbol {
        &self.symbol
    }

    pub fn rank_one(&self) -> Option<f64> {
        self.rank_one
    }

    /// Total number of unknowns `N(n)`.
    pub fn len(&self) -> usize {
        self.sizes.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.len()];
        self.apply_into(v, &mut y, &OpCounter::new())?;
        Ok(y)
    }

    /// `y = M v`.
    pub fn apply_into(&self, v: &[f64], y: &mut [f64], ops: &OpCounter) -> Result<()> {
        let n_total = self.len();
        check_len(n_total, v.len())?;
        check_len(n_total, y.len())?;
        y.iter_mut().for_each(|yi| *yi = 0.0);
        let mut ext = Vec::new();
        match *self.sizes.as_slice() {
            [n] => {
                for term in self.symbol.terms() {
                    let f = &term[0];
                    let mut tmp = vec![0.0; n];
                    self.kind.apply_line(f, v, &mut tmp, &mut ext);
                    y.iter_mut().zip(&tmp).for_each(|(a, b)| *a += b);
                    ops.add(line_ops(f, n) + n as u64);
                }
            }
            [n1, n2] => {
                let mut stage = vec![0.0; n_total];
                let mut col_in = vec![0.0; n1];
                let mut col_out = vec![0.0; n1];
                for term in self.symbol.terms() {
                    let (f1, f2) = (&term[0], &term[1]);
                    // second (fastest) dimension: contiguous rows
                    if f2.is_identity() {
                        stage.copy_from_slice(v);
                    } else {
                        for (src, dst) in v.chunks(n2).zip(stage.chunks_mut(n2)) {
                            self.kind.apply_line(f2, src, dst, &mut ext);
                        }
                        ops.add(n1 as u64 * line_ops(f2, n2));
                    }
                    // first dimension: strided columns, accumulated into y
                    if f1.is_identity() {
                        y.iter_mut().zip(&stage).for_each(|(a, b)| *a += b);
                    } else {
                        for j in 0..n2 {
                            for i in 0..n1 {
                                col_in[i] = stage[i * n2 + j];
                            }
                            self.kind.apply_line(f1, &col_in, &mut col_out, &mut ext);
                            for i in 0..n1 {
                                y[i * n2 + j] += col_out[i];
                            }
                        }
                        ops.add(n2 as u64 * line_ops(f1, n1));
                    }
                    ops.add(n_total as u64);
                }
            }
            _ => unreachable!("dimension is 1 or 2"),
        }
        if let Some(gamma) = self.rank_one {
            let shift = gamma * v.iter().sum::<f64>() / n_total as f64;
            y.iter_mut().for_each(|yi| *yi += shift);
            ops.add(2 * n_total as u64);
        }
        Ok(())
    }

    /// Adds the classical Strang rank-one term, `gamma = f(w)` at the first
    /// nonzero frequency in each dimension (`2pi/n` circulant, `pi/n` DCT-III).
    pub fn strang_correct(&self) -> Result<Self> {
        let step = match self.kind {
            AlgebraKind::Tau => return Err(Error::StrangOnTau),
            AlgebraKind::Circulant => 2.0 * PI,
            AlgebraKind::Dct3 => PI,
        };
        let at_zero = self.symbol.eval(&vec![0.0; self.sizes.len()]);
        let magnitude: f64 = self
            .symbol
            .terms()
            .iter()
            .flatten()
            .map(|f| f.max_abs_coeff())
            .sum();
        if at_zero.abs() > 1e-12 * (1.0 + magnitude) {
            return Err(Error::SymbolNotSingular(at_zero));
        }
        let freq: Vec<f64> = self.sizes.iter().map(|&n| step / n as f64).collect();
        let gamma = self.symbol.eval(&freq);
        Ok(self.clone().with_rank_one(Some(gamma)))
    }

    /// Eigenvalues of the operator without its rank-one term, in grid order.
    pub fn symbol_eigenvalues(&self) -> Vec<f64> {
        let grids: Vec<Vec<f64>> = self.sizes.iter().map(|&n| self.kind.eigen_grid(n)).collect();
        match grids.as_slice() {
            [g] => g.iter().map(|&t| self.symbol.eval(&[t])).collect(),
            [g1, g2] => g1
                .iter()
                .flat_map(|&t1| g2.iter().map(move |&t2| (t1, t2)))
                .map(|(t1, t2)| self.symbol.eval(&[t1, t2]))
                .collect(),
            _ => unreachable!(),
        }
    }

    pub fn materialize_dense(&self) -> Result<DMatrix<f64>> {
        let n_total = self.len();
        if n_total > DENSE_LIMIT {
            return Err(Error::TooLarge {
                size: n_total,
                limit: DENSE_LIMIT,
            });
        }
        let mut m = DMatrix::zeros(n_total, n_total);
        for term in self.symbol.terms() {
            let factors: Vec<DMatrix<f64>> = term
                .iter()
                .zip(&self.sizes)
                .map(|(f, &n)| self.kind.dense_1d(f, n))
                .collect();
            m += match factors.as_slice() {
                [a] => a.clone(),
                [a, b] => a.kronecker(b),
                _ => unreachable!(),
            };
        }
        if let Some(gamma) = self.rank_one {
            m.add_scalar_mut(gamma / n_total as f64);
        }
        Ok(m)
    }

    /// Sparse band of the operator without its rank-one term.
    pub fn to_sparse(&self) -> SparseMatrix {
        let mut acc: Option<SparseMatrix> = None;
        for term in self.symbol.terms() {
            let mut factors = term
                .iter()
                .zip(&self.sizes)
                .map(|(f, &n)| self.kind.sparse_1d(f, n));
            let first = factors.next().expect("at least one dimension");
            let piece = factors.fold(first, |a, b| a.kron(&b));
            acc = Some(match acc {
                None => piece,
                Some(s) => s.add(&piece),
            });
        }
        acc.expect("at least one term").pruned(0.0)
    }
}

fn line_ops(f: &CosineSymbol, n: usize) -> u64 {
    (2 * (2 * f.bandwidth() + 1) * n) as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::DVector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Uniform};

    fn lap1(kind: AlgebraKind, n: usize) -> StructuredOperator {
        StructuredOperator::new(kind, vec![n], TensorSymbol::laplacian(1))
    }

    #[test]
    fn apply_examples() {
        let y = lap1(AlgebraKind::Tau, 3).apply(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(y, vec![1.0, 0.0, 1.0]);
        let y = lap1(AlgebraKind::Circulant, 4).apply(&[1.0; 4]).unwrap();
        assert_eq!(y, vec![0.0; 4]);
        let corrected = lap1(AlgebraKind::Circulant, 4).with_rank_one(Some(2.0));
        let y = corrected.apply(&[1.0; 4]).unwrap();
        assert_eq!(y, vec![2.0; 4]);
        let dense = corrected.materialize_dense().unwrap() * DVector::from_element(4, 1.0);
        assert_abs_diff_eq!(dense, DVector::from_element(4, 2.0), epsilon = 1e-14);
    }

    #[test]
    fn apply_rejects_wrong_length() {
        assert!(matches!(
            lap1(AlgebraKind::Tau, 3).apply(&[1.0; 4]),
            Err(Error::LengthMismatch { expected: 3, actual: 4 })
        ));
    }

    #[test]
    fn materialize_examples() {
        let tau = lap1(AlgebraKind::Tau, 3).materialize_dense().unwrap();
        assert_eq!(tau, DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0]));
        let circ = lap1(AlgebraKind::Circulant, 3).materialize_dense().unwrap();
        assert_eq!(circ, DMatrix::from_row_slice(3, 3, &[2.0, -1.0, -1.0, -1.0, 2.0, -1.0, -1.0, -1.0, 2.0]));
        let dct = lap1(AlgebraKind::Dct3, 2).materialize_dense().unwrap();
        assert_eq!(dct, DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
    }

    /// Reconstruction `Q diag(f(grid)) Q^T` with the orthonormal DCT basis.
    fn dct_reconstruction(f: &CosineSymbol, n: usize) -> DMatrix<f64> {
        let q = DMatrix::from_fn(n, n, |i, j| {
            let w = if j == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
            w * (PI * j as f64 * (i as f64 + 0.5) / n as f64).cos()
        });
        let lam = DMatrix::from_diagonal(&DVector::from_iterator(
            n,
            AlgebraKind::Dct3.eigen_grid(n).into_iter().map(|t| f.eval(t)),
        ));
        &q * lam * q.transpose()
    }

    #[test]
    fn dct_entries_match_eigen_reconstruction() {
        for f in [
            CosineSymbol::laplacian(),
            CosineSymbol::new(vec![3.0, 0.5, -0.25, 0.125]),
        ] {
            for n in [2, 3, 5, 8] {
                let diff = AlgebraKind::Dct3.dense_1d(&f, n) - dct_reconstruction(&f, n);
                assert!(diff.abs().max() < 1e-13, "n={n} f={f:?}");
            }
        }
    }

    #[test]
    fn strang_examples() {
        let c = lap1(AlgebraKind::Circulant, 8).strang_correct().unwrap();
        assert_abs_diff_eq!(c.rank_one().unwrap(), 2.0 - 2.0 * (PI / 4.0).cos(), epsilon = 1e-15);
        assert_abs_diff_eq!(c.rank_one().unwrap(), 0.585786, epsilon = 1e-6);
        let eig = c.materialize_dense().unwrap().symmetric_eigenvalues();
        assert!(eig.min() > 0.0);
        let d = lap1(AlgebraKind::Dct3, 8).strang_correct().unwrap();
        assert_abs_diff_eq!(d.rank_one().unwrap(), 0.152241, epsilon = 1e-6);
        assert!(d.materialize_dense().unwrap().symmetric_eigenvalues().min() > 0.0);

        let shifted = StructuredOperator::new(
            AlgebraKind::Circulant,
            vec![8],
            TensorSymbol::univariate(CosineSymbol::new(vec![3.0, -1.0])),
        );
        assert!(matches!(shifted.strang_correct(), Err(Error::SymbolNotSingular(_))));
        assert!(matches!(lap1(AlgebraKind::Tau, 8).strang_correct(), Err(Error::StrangOnTau)));
    }

    #[test]
    fn materialize_size_guard() {
        let big = StructuredOperator::new(AlgebraKind::Tau, vec![65, 65], TensorSymbol::laplacian(2));
        assert!(matches!(big.materialize_dense(), Err(Error::TooLarge { .. })));
    }

    fn random_symbol(rng: &mut ChaCha8Rng) -> CosineSymbol {
        // nonnegative by construction: |q|^2 for a random trigonometric q
        let u = Uniform::new(-1.0, 1.0).unwrap();
        let q = CosineSymbol::new((0..3).map(|_| u.sample(rng)).collect::<Vec<_>>());
        q.product(&q)
    }

    #[test]
    fn apply_matches_dense_and_eigenvalues_match_symbol() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let u = Uniform::new(-1.0, 1.0).unwrap();
        for kind in [AlgebraKind::Tau, AlgebraKind::Circulant, AlgebraKind::Dct3] {
            for n in 4..=16 {
                let f = random_symbol(&mut rng);
                let op = StructuredOperator::new(kind, vec![n], TensorSymbol::univariate(f));
                let dense = op.materialize_dense().unwrap();
                assert!((&dense - dense.transpose()).abs().max() <= 1e-13);
                for _ in 0..10 {
                    let v: Vec<f64> = (0..n).map(|_| u.sample(&mut rng)).collect();
                    let fast = DVector::from_vec(op.apply(&v).unwrap());
                    let slow = &dense * DVector::from_vec(v);
                    assert!((&fast - &slow).norm() <= 1e-12 * slow.norm().max(1.0));
                }
                let mut eig: Vec<f64> = dense.symmetric_eigenvalues().iter().copied().collect();
                let mut expected = op.symbol_eigenvalues();
                eig.sort_by(f64::total_cmp);
                expected.sort_by(f64::total_cmp);
                for (a, b) in eig.iter().zip(&expected) {
                    assert_abs_diff_eq!(a, b, epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn two_dimensional_apply_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u = Uniform::new(-1.0, 1.0).unwrap();
        for kind in [AlgebraKind::Tau, AlgebraKind::Circulant, AlgebraKind::Dct3] {
            let sym = TensorSymbol::new(
                2,
                vec![
                    vec![random_symbol(&mut rng), random_symbol(&mut rng)],
                    vec![CosineSymbol::laplacian(), CosineSymbol::constant(1.0)],
                ],
            );
            let op = StructuredOperator::new(kind, vec![5, 7], sym).with_rank_one(Some(0.3));
            let dense = op.materialize_dense().unwrap();
            let v: Vec<f64> = (0..35).map(|_| u.sample(&mut rng)).collect();
            let fast = DVector::from_vec(op.apply(&v).unwrap());
            let slow = &dense * DVector::from_vec(v);
            assert!((&fast - &slow).norm() <= 1e-12 * slow.norm());
            let sparse = op.to_sparse().to_dense();
            let band_only = dense.add_scalar(-0.3 / 35.0);
            assert!((sparse - band_only).abs().max() < 1e-13);
        }
    }

    #[test]
    fn apply_cost_is_linear() {
        let mut prev = None;
        for q in 6..=12 {
            let n = 1usize << q;
            let op = lap1(AlgebraKind::Circulant, n);
            let ops = OpCounter::new();
            let mut y = vec![0.0; n];
            op.apply_into(&vec![1.0; n], &mut y, &ops).unwrap();
            if let Some(p) = prev {
                let ratio = ops.get() as f64 / p as f64;
                assert!((1.9..=2.6).contains(&ratio), "ratio {ratio}");
            }
            prev = Some(ops.get());
        }
    }
}
