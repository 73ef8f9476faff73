//! Conservative finite differences for `-div(a grad u) = f` on `(0,1)^d`
//! and the splitting `A_n(a) = a_min * Struct + R_n(a)`.
//!
//! Every grid edge carries the coefficient sampled at its midpoint. The
//! matrix is `h^2`-scaled, so `a = 1` yields exactly the algebra matrix of
//! `2 - 2cos t` in each direction, and `R = A_n(a - a_min)` is positive
//! semidefinite.

use crate::coefficient::DiffusionCoefficient;
use crate::error::{Error, Result};
use crate::operator::{LevelOperator, LinearOperator};
use crate::sparse::SparseMatrix;
use crate::structured::{AlgebraKind, StructuredOperator};
use crate::symbols::TensorSymbol;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    Dirichlet,
    Periodic,
    Reflective,
}

impl BoundaryCondition {
    pub fn algebra(self) -> AlgebraKind {
        match self {
            BoundaryCondition::Dirichlet => AlgebraKind::Tau,
            BoundaryCondition::Periodic => AlgebraKind::Circulant,
            BoundaryCondition::Reflective => AlgebraKind::Dct3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BoundaryCondition::Dirichlet => "dirichlet",
            BoundaryCondition::Periodic => "periodic",
            BoundaryCondition::Reflective => "reflective",
        }
    }
}

impl fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BoundaryCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dirichlet" => Ok(Self::Dirichlet),
            "periodic" => Ok(Self::Periodic),
            "reflective" | "neumann" => Ok(Self::Reflective),
            other => Err(Error::InvalidConfig(format!("unknown boundary condition `{other}`"))),
        }
    }
}

/// Uniform grid with `n` interior unknowns per direction.
///
/// Dirichlet: `h = 1/(n+1)`, nodes at `i h`. Periodic and reflective:
/// `h = 1/n`, nodes at cell centres `(i - 1/2) h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    pub n: usize,
    pub bc: BoundaryCondition,
}

impl GridSpec {
    pub fn new(dim: usize, n: usize, bc: BoundaryCondition) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in {{1, 2}}")));
        }
        if n < 3 {
            return Err(Error::InvalidGrid(format!("n = {n} is below the minimum of 3")));
        }
        Ok(Self { dim, n, bc })
    }

    pub fn h(&self) -> f64 {
        match self.bc {
            BoundaryCondition::Dirichlet => 1.0 / (self.n + 1) as f64,
            _ => 1.0 / self.n as f64,
        }
    }

    pub fn sizes(&self) -> Vec<usize> {
        vec![self.n; self.dim]
    }

    /// `N(n) = n^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coordinate of 0-based node `k` along one direction.
    fn node(&self, k: usize) -> f64 {
        match self.bc {
            BoundaryCondition::Dirichlet => (k + 1) as f64 * self.h(),
            _ => (k as f64 + 0.5) * self.h(),
        }
    }
}

/// Edge of the 1D stencil along a line: the (0-based) nodes it joins, `None`
/// for a Dirichlet boundary, and the midpoint coordinate.
fn line_edges(grid: &GridSpec) -> Vec<(Option<usize>, Option<usize>, f64)> {
    let (n, h) = (grid.n, grid.h());
    match grid.bc {
        BoundaryCondition::Dirichlet => (0..=n)
            .map(|e| {
                let left = e.checked_sub(1);
                let right = (e < n).then_some(e);
                (left, right, (e as f64 + 0.5) * h)
            })
            .collect(),
        // the wrap edge is sampled at x = 1
        BoundaryCondition::Periodic => (0..n)
            .map(|k| (Some(k), Some((k + 1) % n), (k + 1) as f64 * h))
            .collect(),
        BoundaryCondition::Reflective => (0..n - 1)
            .map(|k| (Some(k), Some(k + 1), (k + 1) as f64 * h))
            .collect(),
    }
}

struct Edge {
    a: Option<usize>,
    b: Option<usize>,
    weight: f64,
}

fn edges(grid: &GridSpec, coeff: &DiffusionCoefficient) -> Result<Vec<Edge>> {
    if coeff.dim() != grid.dim {
        return Err(Error::InvalidConfig(format!(
            "coefficient `{}` is {}D but the grid is {}D",
            coeff.name(),
            coeff.dim(),
            grid.dim
        )));
    }
    let line = line_edges(grid);
    let n = grid.n;
    let mut out = Vec::with_capacity(grid.dim * grid.len() + 2 * n);
    match grid.dim {
        1 => {
            for &(a, b, x) in &line {
                out.push(Edge {
                    a,
                    b,
                    weight: coeff.sample(&[x])?,
                });
            }
        }
        _ => {
            // row-major: index = i * n + j, i along x, j along y
            for j in 0..n {
                let y = grid.node(j);
                for &(a, b, x) in &line {
                    out.push(Edge {
                        a: a.map(|i| i * n + j),
                        b: b.map(|i| i * n + j),
                        weight: coeff.sample(&[x, y])?,
                    });
                }
            }
            for i in 0..n {
                let x = grid.node(i);
                for &(a, b, y) in &line {
                    out.push(Edge {
                        a: a.map(|j| i * n + j),
                        b: b.map(|j| i * n + j),
                        weight: coeff.sample(&[x, y])?,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Smallest and largest coefficient sample used by [`assemble`].
pub fn coefficient_range(grid: &GridSpec, coeff: &DiffusionCoefficient) -> Result<(f64, f64)> {
    Ok(edges(grid, coeff)?
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| (lo.min(e.weight), hi.max(e.weight))))
}

/// Assembles the `h^2`-scaled five-point (three-point in 1D) matrix.
pub fn assemble(grid: &GridSpec, coeff: &DiffusionCoefficient) -> Result<SparseMatrix> {
    let edges = edges(grid, coeff)?;
    let mut trip = Vec::with_capacity(4 * edges.len());
    for e in &edges {
        if let Some(a) = e.a {
            trip.push((a, a, e.weight));
        }
        if let Some(b) = e.b {
            trip.push((b, b, e.weight));
        }
        if let (Some(a), Some(b)) = (e.a, e.b) {
            trip.push((a, b, -e.weight));
            trip.push((b, a, -e.weight));
        }
    }
    Ok(SparseMatrix::from_triplets(grid.len(), grid.len(), trip))
}

/// Right-hand side choices.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum RhsMode {
    /// `h^2 * (1, ..., 1)`
    #[default]
    Ones,
    /// Standard normal entries from a fixed seed.
    Random(u64),
    /// `A u` for a given `u`.
    Manufactured(Vec<f64>),
}

pub fn build_rhs(grid: &GridSpec, mode: &RhsMode, op: &impl LinearOperator) -> Result<Vec<f64>> {
    match mode {
        RhsMode::Ones => Ok(vec![grid.h() * grid.h(); grid.len()]),
        RhsMode::Random(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            Ok((0..grid.len()).map(|_| StandardNormal.sample(&mut rng)).collect())
        }
        RhsMode::Manufactured(u) => op.apply(u),
    }
}

/// `A_n(a) = a_min * Struct + R` together with a right-hand side.
///
/// For periodic and reflective conditions both `A_n(a)` and the structured
/// part are singular; the solved operator is `A_n(a) + a_min*gamma*e e^T/N`,
/// i.e. the structured part carries its Strang term and `R` stays sparse.
#[derive(Debug, Clone)]
pub struct AssembledProblem {
    grid: GridSpec,
    coefficient: String,
    operator: LevelOperator,
    rhs: Vec<f64>,
}

impl AssembledProblem {
    /// Assembles, splits and attaches a right-hand side.
    pub fn build(grid: &GridSpec, coeff: &DiffusionCoefficient, rhs: &RhsMode) -> Result<Self> {
        let a = assemble(grid, coeff)?;
        let mut problem = split(&a, grid, coeff)?;
        problem.rhs = build_rhs(grid, rhs, &problem.operator)?;
        Ok(problem)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn coefficient_name(&self) -> &str {
        &self.coefficient
    }

    pub fn a_min(&self) -> f64 {
        self.operator.scale()
    }

    pub fn structured(&self) -> &StructuredOperator {
        self.operator.structured()
    }

    pub fn correction(&self) -> &SparseMatrix {
        self.operator.correction()
    }

    pub fn operator(&self) -> &LevelOperator {
        &self.operator
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn with_rhs(mut self, rhs: Vec<f64>) -> Result<Self> {
        crate::error::check_len(self.grid.len(), rhs.len())?;
        self.rhs = rhs;
        Ok(self)
    }
}

/// Splits an assembled matrix. `a_min` is the smallest midpoint sample used
/// by [`assemble`]. The right-hand side defaults to [`RhsMode::Ones`].
pub fn split(a: &SparseMatrix, grid: &GridSpec, coeff: &DiffusionCoefficient) -> Result<AssembledProblem> {
    crate::error::check_len(grid.len(), a.rows())?;
    let (a_min, _) = coefficient_range(grid, coeff)?;
    let unit = StructuredOperator::new(grid.bc.algebra(), grid.sizes(), TensorSymbol::laplacian(grid.dim));
    let correction = a.sub(&unit.to_sparse().scale(a_min));
    let structured = match grid.bc {
        BoundaryCondition::Dirichlet => unit,
        _ => unit.strang_correct()?,
    };
    let operator = LevelOperator::new(structured, a_min, correction);
    Ok(AssembledProblem {
        grid: *grid,
        coefficient: coeff.name().to_string(),
        rhs: vec![grid.h() * grid.h(); grid.len()],
        operator,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficient::Preset;
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;

    fn preset(name: &str, dim: usize) -> DiffusionCoefficient {
        DiffusionCoefficient::parse(name, dim).unwrap()
    }

    #[test]
    fn assemble_examples() {
        let g = GridSpec::new(1, 3, BoundaryCondition::Dirichlet).unwrap();
        let a = assemble(&g, &preset("a1", 1)).unwrap().to_dense();
        assert_eq!(a, DMatrix::from_row_slice(3, 3, &[2., -1., 0., -1., 2., -1., 0., -1., 2.]));

        let g = GridSpec::new(1, 4, BoundaryCondition::Periodic).unwrap();
        let a = assemble(&g, &preset("a1", 1)).unwrap().to_dense();
        assert_eq!(a.row(0).iter().copied().collect::<Vec<_>>(), vec![2., -1., 0., -1.]);

        let g = GridSpec::new(1, 3, BoundaryCondition::Dirichlet).unwrap();
        let lin = DiffusionCoefficient::function("x", 1, 0.0, |p| p[0]);
        let a = assemble(&g, &lin).unwrap().to_dense();
        assert_abs_diff_eq!(a[(1, 0)], -0.375, epsilon = 1e-15);
        assert_abs_diff_eq!(a[(1, 1)], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a[(1, 2)], -0.625, epsilon = 1e-15);
    }

    #[test]
    fn unit_coefficient_gives_algebra_matrix() {
        for bc in [
            BoundaryCondition::Dirichlet,
            BoundaryCondition::Periodic,
            BoundaryCondition::Reflective,
        ] {
            for dim in [1, 2] {
                for n in [3, 4, 7, 8, 16] {
                    let g = GridSpec::new(dim, n, bc).unwrap();
                    let a = assemble(&g, &preset("a1", dim)).unwrap().to_dense();
                    let s = StructuredOperator::new(bc.algebra(), g.sizes(), TensorSymbol::laplacian(dim))
                        .materialize_dense()
                        .unwrap();
                    assert_eq!(a, s, "{bc} d={dim} n={n}");
                }
            }
        }
    }

    /// `u^T A u` summed edge by edge, independent of the assembly loop.
    fn quadratic_form(grid: &GridSpec, coeff: &DiffusionCoefficient, u: &[f64]) -> f64 {
        let n = grid.n;
        let h = grid.h();
        let at = |k: isize| -> Option<usize> {
            match grid.bc {
                BoundaryCondition::Periodic => Some(k.rem_euclid(n as isize) as usize),
                _ => (0..n as isize).contains(&k).then_some(k as usize),
            }
        };
        let mid = |k: isize| -> f64 {
            match grid.bc {
                BoundaryCondition::Dirichlet => (k as f64 + 1.5) * h,
                _ => (k as f64 + 1.0) * h,
            }
        };
        let node = |k: usize| grid.node(k);
        let range: Vec<isize> = match grid.bc {
            BoundaryCondition::Dirichlet => (-1..n as isize).collect(),
            BoundaryCondition::Periodic => (0..n as isize).collect(),
            BoundaryCondition::Reflective => (0..n as isize - 1).collect(),
        };
        let mut total = 0.0;
        let lines: Vec<Option<usize>> = if grid.dim == 1 { vec![None] } else { (0..n).map(Some).collect() };
        for dir in 0..grid.dim {
            for &other in &lines {
                for &k in &range {
                    let point = |x: f64| match (other, dir) {
                        (None, _) => vec![x],
                        (Some(o), 0) => vec![x, node(o)],
                        (Some(o), _) => vec![node(o), x],
                    };
                    let w = coeff.eval(&point(mid(k)));
                    let idx = |m: Option<usize>| {
                        m.map(|m| match (other, dir) {
                            (None, _) => m,
                            (Some(o), 0) => m * n + o,
                            (Some(o), _) => o * n + m,
                        })
                    };
                    let ua = idx(at(k)).map_or(0.0, |i| u[i]);
                    let ub = idx(at(k + 1)).map_or(0.0, |i| u[i]);
                    total += w * (ua - ub).powi(2);
                }
            }
        }
        total
    }

    #[test]
    fn assembly_matches_quadratic_form() {
        let coeffs = [("a2", 1), ("a3", 1), ("a2", 2), ("a4", 2), ("a5", 2), ("a7", 2)];
        let mut seed = 0;
        for (name, dim) in coeffs {
            for bc in [
                BoundaryCondition::Dirichlet,
                BoundaryCondition::Periodic,
                BoundaryCondition::Reflective,
            ] {
                let g = GridSpec::new(dim, 7, bc).unwrap();
                let c = preset(name, dim);
                let a = assemble(&g, &c).unwrap();
                seed += 1;
                let u = build_rhs(&g, &RhsMode::Random(seed), &a).unwrap();
                let au = a.matvec(&u).unwrap();
                let lhs: f64 = u.iter().zip(&au).map(|(x, y)| x * y).sum();
                let rhs = quadratic_form(&g, &c, &u);
                assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs(), "{name} {bc}");
            }
        }
    }

    #[test]
    fn split_reconstructs_and_correction_is_psd() {
        for (name, dim) in [
            ("a1", 1),
            ("a2", 1),
            ("a3", 1),
            ("a2k(2)", 1),
            ("a1", 2),
            ("a2", 2),
            ("a3", 2),
            ("a4", 2),
            ("a5", 2),
            ("a6", 2),
            ("a7", 2),
            ("a8", 2),
        ] {
            for bc in [
                BoundaryCondition::Dirichlet,
                BoundaryCondition::Periodic,
                BoundaryCondition::Reflective,
            ] {
                let n = if dim == 1 { 31 } else { 15 };
                let g = GridSpec::new(dim, n, bc).unwrap();
                let c = preset(name, dim);
                let a = assemble(&g, &c).unwrap();
                let p = split(&a, &g, &c).unwrap();
                let unit = p.structured().clone().with_rank_one(None).materialize_dense().unwrap();
                let rebuilt = unit * p.a_min() + p.correction().to_dense();
                assert!((rebuilt - a.to_dense()).abs().max() <= 1e-13 * a.norm_inf());
                let r = p.correction().to_dense();
                assert!(r.symmetric_eigenvalues().min() >= -1e-10, "{name} {bc}");
                assert!(p.correction().is_symmetric(0.0));
            }
        }
    }

    #[test]
    fn split_examples() {
        let g = GridSpec::new(1, 7, BoundaryCondition::Dirichlet).unwrap();
        let one = preset("a1", 1);
        let p = split(&assemble(&g, &one).unwrap(), &g, &one).unwrap();
        assert_eq!(p.a_min(), 1.0);
        assert!(p.correction().values().iter().all(|&v| v == 0.0));

        let a2 = preset("a2", 1);
        let p = split(&assemble(&g, &a2).unwrap(), &g, &a2).unwrap();
        assert_abs_diff_eq!(p.a_min(), (1.0f64 / 16.0).exp(), epsilon = 1e-15);

        let g = GridSpec::new(2, 15, BoundaryCondition::Dirichlet).unwrap();
        let a7 = DiffusionCoefficient::preset(Preset::Step(100.0), 2).unwrap();
        let p = split(&assemble(&g, &a7).unwrap(), &g, &a7).unwrap();
        assert_eq!(p.a_min(), 1.0);
        let dense = p.correction().to_dense();
        let oracle = (0..dense.nrows())
            .map(|i| dense.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        assert_abs_diff_eq!(p.correction().norm_inf(), oracle, epsilon = 1e-12);
        assert_abs_diff_eq!(oracle, 4.0 * 2.0 * 99.0, epsilon = 1e-12);
    }

    #[test]
    fn full_operator_is_spd_for_every_bc() {
        for bc in [
            BoundaryCondition::Dirichlet,
            BoundaryCondition::Periodic,
            BoundaryCondition::Reflective,
        ] {
            let g = GridSpec::new(2, 8, bc).unwrap();
            let p = AssembledProblem::build(&g, &preset("a5", 2), &RhsMode::Ones).unwrap();
            let d = p.operator().to_dense().unwrap();
            assert!((&d - d.transpose()).abs().max() < 1e-12);
            assert!(d.symmetric_eigenvalues().min() > 0.0, "{bc}");
        }
    }

    #[test]
    fn rhs_modes() {
        let g = GridSpec::new(1, 3, BoundaryCondition::Dirichlet).unwrap();
        let a = assemble(&g, &preset("a1", 1)).unwrap();
        assert_eq!(build_rhs(&g, &RhsMode::Ones, &a).unwrap(), vec![0.0625; 3]);
        assert_eq!(
            build_rhs(&g, &RhsMode::Manufactured(vec![1.0, 0.0, 0.0]), &a).unwrap(),
            vec![2.0, -1.0, 0.0]
        );
        assert_eq!(
            build_rhs(&g, &RhsMode::Random(42), &a).unwrap(),
            build_rhs(&g, &RhsMode::Random(42), &a).unwrap()
        );
        assert_ne!(
            build_rhs(&g, &RhsMode::Random(42), &a).unwrap(),
            build_rhs(&g, &RhsMode::Random(43), &a).unwrap()
        );
    }

    #[test]
    fn invalid_inputs() {
        assert!(GridSpec::new(3, 7, BoundaryCondition::Dirichlet).is_err());
        assert!(GridSpec::new(1, 2, BoundaryCondition::Dirichlet).is_err());
        let g = GridSpec::new(1, 7, BoundaryCondition::Dirichlet).unwrap();
        let bad = DiffusionCoefficient::function("x-0.5", 1, 0.0, |p| p[0] - 0.5);
        assert!(matches!(assemble(&g, &bad), Err(Error::CoefficientNotPositive { .. })));
    }
}
