//! Finite cosine series used as generating functions of structured matrices.
//!
//! A [`CosineSymbol`] with coefficients `c_0, ..., c_m` stands for
//! `f(t) = c_0 + 2 * sum_k c_k cos(k t)`. With this convention the
//! coefficients are literally the band entries of the associated symmetric
//! matrix: `c_0` on the diagonal and `c_k` on the k-th off-diagonals.
//!
//! A [`TensorSymbol`] is a sum of separable products, one [`CosineSymbol`]
//! factor per dimension. The 2D Laplacian symbol `f(t1) + f(t2)` is the
//! two-term sum `f(t1)*1 + 1*f(t2)`, and Galerkin coarsening maps each term to
//! a new separable product, so the representation is closed under coarsening.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Number of samples per dimension used by [`TensorSymbol::supnorm`].
pub const SUPNORM_SAMPLES: usize = 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CosineSymbol {
    coeffs: Vec<f64>,
}

impl CosineSymbol {
    /// Builds a symbol from `c_0..c_m`; trailing exact zeros are trimmed.
    pub fn new(coeffs: impl Into<Vec<f64>>) -> Self {
        let mut coeffs = coeffs.into();
        while coeffs.len() > 1 && coeffs[coeffs.len() - 1] == 0.0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Self { coeffs }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    /// `2 - 2cos t`, the symbol of `tridiag[-1, 2, -1]`.
    pub fn laplacian() -> Self {
        Self::new(vec![2.0, -1.0])
    }

    /// `2 + 2cos t`, the smoothing factor of the projectors.
    pub fn projector() -> Self {
        Self::new(vec![2.0, 1.0])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient `c_k`, zero outside the band. Negative `k` reads `c_|k|`.
    #[inline]
    pub fn coeff(&self, k: isize) -> f64 {
        self.coeffs.get(k.unsigned_abs()).copied().unwrap_or(0.0)
    }

    /// Half-bandwidth `m`.
    pub fn bandwidth(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn is_identity(&self) -> bool {
        self.coeffs == [1.0]
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs[0]
            + self.coeffs[1..]
                .iter()
                .enumerate()
                .map(|(k, c)| 2.0 * c * ((k + 1) as f64 * t).cos())
                .sum::<f64>()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| s * c).collect::<Vec<_>>())
    }

    /// Pointwise product, computed as a convolution of the symmetric
    /// Laurent coefficient sequences.
    pub fn product(&self, other: &Self) -> Self {
        let (m, n) = (self.bandwidth() as isize, other.bandwidth() as isize);
        let out = (0..=m + n)
            .map(|j| {
                (-m..=m)
                    .filter(|a| (j - a).abs() <= n)
                    .map(|a| self.coeff(a) * other.coeff(j - a))
                    .sum::<f64>()
            })
            .collect::<Vec<_>>();
        Self::new(out)
    }

    /// Decimation `g(t) -> (g(t/2) + g(t/2 + pi)) / 2`. Odd harmonics
    /// cancel, so the new coefficients are the even ones of `g`.
    pub fn fold(&self) -> Self {
        Self::new(self.coeffs.iter().step_by(2).copied().collect::<Vec<_>>())
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

/// Separable-sum-of-products symbol in one or two variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorSymbol {
    dim: usize,
    terms: Vec<Vec<CosineSymbol>>,
}

impl TensorSymbol {
    /// # Panics
    /// If `terms` is empty or a term does not have exactly `dim` factors.
    pub fn new(dim: usize, terms: Vec<Vec<CosineSymbol>>) -> Self {
        assert!((1..=2).contains(&dim), "dimension must be 1 or 2");
        assert!(!terms.is_empty(), "a tensor symbol needs at least one term");
        assert!(
            terms.iter().all(|t| t.len() == dim),
            "every term needs one factor per dimension"
        );
        Self { dim, terms }
    }

    pub fn univariate(f: CosineSymbol) -> Self {
        Self::new(1, vec![vec![f]])
    }

    /// `f(t1) + ... + f(td)` with the 1D factor `f` in every direction.
    pub fn separable_sum(dim: usize, f: &CosineSymbol) -> Self {
        let one = CosineSymbol::constant(1.0);
        let terms = (0..dim)
            .map(|r| {
                (0..dim)
                    .map(|s| if s == r { f.clone() } else { one.clone() })
                    .collect()
            })
            .collect();
        Self::new(dim, terms)
    }

    /// The single product `f(t1) * ... * f(td)`.
    pub fn separable_product(dim: usize, f: &CosineSymbol) -> Self {
        Self::new(dim, vec![vec![f.clone(); dim]])
    }

    pub fn laplacian(dim: usize) -> Self {
        Self::separable_sum(dim, &CosineSymbol::laplacian())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[Vec<CosineSymbol>] {
        &self.terms
    }

    pub fn eval(&self, t: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|term| term.iter().zip(t).map(|(f, &ti)| f.eval(ti)).product::<f64>())
            .sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut terms = self.terms.clone();
        for term in &mut terms {
            term[0] = term[0].scale(s);
        }
        Self::new(self.dim, terms)
    }

    /// Maps every factor through `f`, term by term.
    pub fn map_factors(&self, mut f: impl FnMut(&CosineSymbol) -> CosineSymbol) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|term| term.iter().map(&mut f).collect())
            .collect();
        Self::new(self.dim, terms)
    }

    pub fn max_bandwidth(&self) -> usize {
        self.terms
            .iter()
            .flatten()
            .map(CosineSymbol::bandwidth)
            .max()
            .unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms
            .iter()
            .all(|term| term.iter().any(CosineSymbol::is_zero))
    }

    /// `max |f|` over a uniform grid of [`SUPNORM_SAMPLES`] angles per
    /// dimension in `[0, pi]` (symbols are even and `2pi`-periodic).
    pub fn supnorm(&self) -> f64 {
        let grid: Vec<f64> = (0..SUPNORM_SAMPLES)
            .map(|k| PI * k as f64 / (SUPNORM_SAMPLES - 1) as f64)
            .collect();
        // Tabulate each factor once, then combine.
        let tables: Vec<Vec<Vec<f64>>> = self
            .terms
            .iter()
            .map(|term| {
                term.iter()
                    .map(|f| grid.iter().map(|&t| f.eval(t)).collect())
                    .collect()
            })
            .collect();
        match self.dim {
            1 => (0..grid.len())
                .map(|i| tables.iter().map(|t| t[0][i]).sum::<f64>().abs())
                .fold(0.0, f64::max),
            _ => {
                let mut best = 0.0f64;
                for i in 0..grid.len() {
                    for j in 0..grid.len() {
                        let v: f64 = tables.iter().map(|t| t[0][i] * t[1][j]).sum();
                        best = best.max(v.abs());
                    }
                }
                best
            }
        }
    }
}
