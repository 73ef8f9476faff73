//! Dense checks of the two-grid convergence theory: smoothing and
//! approximation constants, A-norm contraction and spectral equivalence.
//!
//! Every generalized eigenproblem `(M, K)` with `K` positive definite is
//! reduced to the symmetric problem `L^-1 M L^-T` through `K = L L^T`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::coefficient::DiffusionCoefficient;
use crate::discretize::{coefficient_range, AssembledProblem, BoundaryCondition, GridSpec, RhsMode};
use crate::error::{Error, Result};
use crate::mgm::{build_hierarchy, CycleKind, HierarchyConfig};
use crate::smoothers::SmootherKind;

/// Largest problem the dense checks accept.
pub const ORACLE_LIMIT: usize = 1024;

/// Slack allowed between the measured contraction and its bound.
pub const BOUND_SLACK: f64 = 1e-8;

/// Slack on the coefficient interval in the equivalence check.
pub const EQUIVALENCE_SLACK: f64 = 1e-10;

fn check_size(n: usize) -> Result<()> {
    if n > ORACLE_LIMIT {
        return Err(Error::TooLarge {
            size: n,
            limit: ORACLE_LIMIT,
        });
    }
    Ok(())
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Eigenvalues of the pencil `(m, k)` in ascending order.
fn pencil_eigenvalues(m: &DMatrix<f64>, k: &DMatrix<f64>) -> Result<Vec<f64>> {
    let l = k.clone().cholesky().ok_or(Error::NotPositiveDefinite)?.l();
    let li = l.try_inverse().ok_or(Error::NotPositiveDefinite)?;
    let reduced = symmetrize(&li * m * li.transpose());
    let mut eig: Vec<f64> = reduced.symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

fn require_spd(a: &DMatrix<f64>) -> Result<()> {
    a.clone().cholesky().map(|_| ()).ok_or(Error::NotPositiveDefinite)
}

/// Largest `alpha` with `V^T A V <= A - alpha A X^-1 A`.
pub fn smoothing_constant(a: &DMatrix<f64>, v: &DMatrix<f64>, x: &DMatrix<f64>) -> Result<f64> {
    check_size(a.nrows())?;
    require_spd(a)?;
    let xinv = x.clone().cholesky().ok_or(Error::NotPositiveDefinite)?.inverse();
    let lhs = symmetrize(a - v.transpose() * a * v);
    let rhs = symmetrize(a * xinv * a);
    Ok(pencil_eigenvalues(&lhs, &rhs)?[0])
}

/// Smallest `beta` with `min_y |x - p y|^2 <= beta |x|_A^2` for all `x`.
pub fn approximation_constant(a: &DMatrix<f64>, p: &DMatrix<f64>) -> Result<f64> {
    check_size(a.nrows())?;
    require_spd(a)?;
    let svd = p.clone().svd(false, false);
    let smax = svd.singular_values.max();
    if p.ncols() > p.nrows() || svd.singular_values.min() <= 1e-12 * smax.max(1.0) {
        return Err(Error::RankDeficient);
    }
    let gram = p.transpose() * p;
    let proj = p * gram.cholesky().ok_or(Error::RankDeficient)?.inverse() * p.transpose();
    let complement = symmetrize(DMatrix::identity(a.nrows(), a.nrows()) - proj);
    let eig = pencil_eigenvalues(&complement, a)?;
    Ok(eig.last().copied().unwrap_or(0.0).max(0.0))
}

/// Extreme eigenvalues `(theta_1, theta_2)` of the pencil `(a, b)`.
pub fn spectral_equivalence(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<(f64, f64)> {
    check_size(a.nrows())?;
    require_spd(a)?;
    let eig = pencil_eigenvalues(a, b)?;
    Ok((eig[0], eig[eig.len() - 1]))
}

/// `|A^{1/2} M A^{-1/2}|_2`, the A-norm of an iteration matrix.
pub fn tgm_contraction(a: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<f64> {
    check_size(a.nrows())?;
    let eig = SymmetricEigen::new(symmetrize(a.clone()));
    if eig.eigenvalues.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::NotPositiveDefinite);
    }
    let q = &eig.eigenvectors;
    let sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
    let isqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
    let half = q * sqrt * q.transpose();
    let ihalf = q * isqrt * q.transpose();
    let t = half * m * ihalf;
    Ok(t.singular_values().max())
}

/// One row of the theory check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoryReport {
    pub bc: BoundaryCondition,
    pub coeff: String,
    pub n: usize,
    pub alpha_post: f64,
    pub beta: f64,
    pub bound: f64,
    pub measured_contraction: f64,
    pub theta1: f64,
    pub theta2: f64,
    #[serde(skip)]
    pub dim: usize,
    #[serde(skip)]
    pub coeff_min: f64,
    #[serde(skip)]
    pub coeff_max: f64,
}

impl TheoryReport {
    /// Invariants that do not hold, one message each.
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        let tag = format!("{} {} n={} d={}", self.bc, self.coeff, self.n, self.dim);
        if !(self.alpha_post > 0.0) {
            out.push(format!("{tag}: smoothing constant {} is not positive", self.alpha_post));
        }
        if !(self.beta >= self.alpha_post) {
            out.push(format!("{tag}: beta {} below alpha {}", self.beta, self.alpha_post));
        }
        if !(self.bound < 1.0) {
            out.push(format!("{tag}: bound {} not below 1", self.bound));
        }
        if !(self.measured_contraction <= self.bound + BOUND_SLACK) {
            out.push(format!(
                "{tag}: contraction {} exceeds bound {}",
                self.measured_contraction, self.bound
            ));
        }
        let (lo, hi) = (self.coeff_min - EQUIVALENCE_SLACK, self.coeff_max + EQUIVALENCE_SLACK);
        if !(self.theta1 >= lo && self.theta2 <= hi) {
            out.push(format!(
                "{tag}: equivalence interval [{}, {}] outside [{}, {}]",
                self.theta1, self.theta2, self.coeff_min, self.coeff_max
            ));
        }
        out
    }
}

/// Dense theory check of the Richardson two-grid method on one problem.
///
/// The contraction is measured for the full pre- and post-smoothed cycle;
/// the pre-smoother is non-expansive in the A-norm, so the post-smoothing
/// bound still applies.
pub fn theory_report(grid: &GridSpec, coeff: &DiffusionCoefficient) -> Result<TheoryReport> {
    check_size(grid.len())?;
    let problem = AssembledProblem::build(grid, coeff, &RhsMode::Ones)?;
    let cfg = HierarchyConfig::new(CycleKind::Tgm, SmootherKind::Richardson, SmootherKind::Richardson);
    let hierarchy = build_hierarchy(&problem, &cfg)?;
    let level = &hierarchy.levels()[0];
    let a = problem.operator().to_dense()?;
    let n = a.nrows();
    let v_post = DMatrix::identity(n, n) - &a * level.smoother().omega_post;
    let alpha_post = smoothing_constant(&a, &v_post, &DMatrix::identity(n, n))?;
    let p = level
        .projector()
        .expect("two-grid hierarchy has a projector")
        .to_sparse()
        .to_dense();
    let beta = approximation_constant(&a, &p)?;
    let bound = (1.0 - alpha_post / beta).max(0.0).sqrt();
    let measured_contraction = tgm_contraction(&a, &hierarchy.iteration_matrix()?)?;

    let unit = AssembledProblem::build(grid, &DiffusionCoefficient::constant(1.0, grid.dim), &RhsMode::Ones)?;
    let (theta1, theta2) = spectral_equivalence(&a, &unit.operator().to_dense()?)?;
    let (coeff_min, coeff_max) = coefficient_range(grid, coeff)?;
    Ok(TheoryReport {
        bc: grid.bc,
        coeff: coeff.name().to_string(),
        n: grid.n,
        alpha_post,
        beta,
        bound,
        measured_contraction,
        theta1,
        theta2,
        dim: grid.dim,
        coeff_min,
        coeff_max,
    })
}

/// Largest relative error accepted by the dense cross-checks.
pub const ORACLE_TOLERANCE: f64 = 1e-11;

/// Relative error of a fast computation against its dense counterpart.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleCheck {
    pub check: String,
    pub bc: BoundaryCondition,
    pub dim: usize,
    pub n: usize,
    pub coeff: String,
    pub rel_error: f64,
}

impl OracleCheck {
    pub fn passed(&self) -> bool {
        self.rel_error <= ORACLE_TOLERANCE
    }
}

fn rel_diff(got: &DMatrix<f64>, want: &DMatrix<f64>) -> f64 {
    (got - want).abs().max() / want.abs().max().max(f64::MIN_POSITIVE)
}

/// Coarse operator from symbol folding and the sparse triple product
/// against `p^T A p` with dense `p` and `A`.
pub fn galerkin_check(grid: &GridSpec, coeff: &DiffusionCoefficient) -> Result<OracleCheck> {
    check_size(grid.len())?;
    let problem = AssembledProblem::build(grid, coeff, &RhsMode::Ones)?;
    let projector = crate::transfer::Projector::new(grid.bc.algebra(), &grid.sizes())?;
    let p = projector.to_sparse().to_dense();
    let a = problem.operator().to_dense()?;
    let want = p.transpose() * a * &p;
    let got = projector.coarsen(problem.operator())?.to_dense()?;
    Ok(OracleCheck {
        check: "galerkin".into(),
        bc: grid.bc,
        dim: grid.dim,
        n: grid.n,
        coeff: coeff.name().to_string(),
        rel_error: rel_diff(&got, &want),
    })
}

fn dense_smoother(kind: SmootherKind, omega: f64, a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    match kind {
        SmootherKind::Richardson => Ok(DMatrix::identity(n, n) - a * omega),
        SmootherKind::GaussSeidel => {
            let lower = a.lower_triangle();
            let inv = lower.try_inverse().ok_or(Error::NotPositiveDefinite)?;
            Ok(DMatrix::identity(n, n) - inv * a)
        }
        SmootherKind::Cg { .. } => Err(Error::InvalidConfig("CG smoothing has no iteration matrix".into())),
    }
}

/// Error propagation of the cycle from dense matrices:
/// `M_s = V_post^nu (I - p (I - M_{s+1}) A_{s+1}^-1 p^T A_s) V_pre^nu`
/// with `M = 0` on the coarsest level and every coarse matrix formed as
/// `p^T A p`. `omegas` holds the (pre, post) Richardson weights per level.
pub fn dense_cycle_matrix(
    a: &DMatrix<f64>,
    projectors: &[DMatrix<f64>],
    config: &HierarchyConfig,
    omegas: &[(f64, f64)],
) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let Some((p, rest)) = projectors.split_first() else {
        return Ok(DMatrix::zeros(n, n));
    };
    let coarse = p.transpose() * a * p;
    let inner = dense_cycle_matrix(&coarse, rest, config, &omegas[1..])?;
    let nc = coarse.nrows();
    let coarse_inv = coarse.cholesky().ok_or(Error::NotPositiveDefinite)?.inverse();
    let mut m = DMatrix::identity(n, n) - p * (DMatrix::identity(nc, nc) - inner) * coarse_inv * p.transpose() * a;
    let pre = dense_smoother(config.pre, omegas[0].0, a)?;
    let post = dense_smoother(config.post, omegas[0].1, a)?;
    for _ in 0..config.nu_pre {
        m *= &pre;
    }
    for _ in 0..config.nu_post {
        m = &post * m;
    }
    Ok(m)
}

/// Matrix-free cycle, applied to unit vectors, against `dense_cycle_matrix`.
pub fn cycle_check(grid: &GridSpec, coeff: &DiffusionCoefficient, config: &HierarchyConfig) -> Result<OracleCheck> {
    check_size(grid.len())?;
    let problem = AssembledProblem::build(grid, coeff, &RhsMode::Ones)?;
    let hierarchy = build_hierarchy(&problem, config)?;
    let a = problem.operator().to_dense()?;
    let ps: Vec<DMatrix<f64>> = hierarchy
        .levels()
        .iter()
        .filter_map(|l| l.projector().map(|p| p.to_sparse().to_dense()))
        .collect();
    let omegas: Vec<(f64, f64)> = hierarchy
        .levels()
        .iter()
        .map(|l| (l.smoother().omega_pre, l.smoother().omega_post))
        .collect();
    let want = dense_cycle_matrix(&a, &ps, config, &omegas)?;
    let got = hierarchy.iteration_matrix()?;
    Ok(OracleCheck {
        check: format!("{} {}+{} levels={}", config.cycle, config.post.label(), config.pre.label(), hierarchy.depth()),
        bc: grid.bc,
        dim: grid.dim,
        n: grid.n,
        coeff: coeff.name().to_string(),
        rel_error: rel_diff(&got, &want),
    })
}

/// Galerkin and cycle cross-checks on one problem: the two-grid cycle for
/// three smoother pairs and the multigrid recursion down to a coarsest grid
/// of 3 (Dirichlet) or 4 unknowns per direction.
pub fn oracle_suite(grid: &GridSpec, coeff: &DiffusionCoefficient) -> Result<Vec<OracleCheck>> {
    use SmootherKind::{GaussSeidel as GS, Richardson as R};
    let mut out = vec![galerkin_check(grid, coeff)?];
    for (pre, post) in [(R, R), (GS, R), (R, GS)] {
        out.push(cycle_check(grid, coeff, &HierarchyConfig::new(CycleKind::Tgm, pre, post))?);
    }
    let coarsest = match grid.bc {
        BoundaryCondition::Dirichlet => 3,
        _ => 4,
    };
    for (pre, post) in [(R, R), (GS, R)] {
        let cfg = HierarchyConfig::new(CycleKind::Mgm, pre, post).with_coarsest(coarsest);
        out.push(cycle_check(grid, coeff, &cfg)?);
    }
    Ok(out)
}
