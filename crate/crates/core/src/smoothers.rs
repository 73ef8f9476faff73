//! Richardson, forward Gauss-Seidel and restarted CG smoothing steps.

use std::fmt;
use std::str::FromStr;

use crate::error::{check_len, Error, Result};
use crate::operator::{LevelOperator, LinearOperator};
use crate::ops::{axpy, dot, OpCounter};
use crate::sparse::SparseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmootherKind {
    Richardson,
    GaussSeidel,
    Cg { steps: usize },
}

impl SmootherKind {
    pub fn name(&self) -> &'static str {
        match self {
            SmootherKind::Richardson => "richardson",
            SmootherKind::GaussSeidel => "gauss-seidel",
            SmootherKind::Cg { .. } => "cg",
        }
    }

    /// Short label used in table headers.
    pub fn label(&self) -> &'static str {
        match self {
            SmootherKind::Richardson => "Richardson",
            SmootherKind::GaussSeidel => "Gauss-Seidel",
            SmootherKind::Cg { .. } => "CG",
        }
    }
}

impl fmt::Display for SmootherKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SmootherKind::Cg { steps } if *steps != 1 => write!(f, "cg({steps})"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for SmootherKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "richardson" | "r" => Ok(SmootherKind::Richardson),
            "gauss-seidel" | "gauss_seidel" | "gs" => Ok(SmootherKind::GaussSeidel),
            "cg" => Ok(SmootherKind::Cg { steps: 1 }),
            _ => {
                let steps = lower
                    .strip_prefix("cg(")
                    .and_then(|r| r.strip_suffix(')'))
                    .and_then(|k| k.trim().parse::<usize>().ok())
                    .filter(|&k| k >= 1)
                    .ok_or_else(|| Error::InvalidConfig(format!("unknown smoother '{s}'")))?;
                Ok(SmootherKind::Cg { steps })
            }
        }
    }
}

/// Which Richardson parameter a smoothing slot uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmootherRole {
    Pre,
    Post,
}

/// Richardson parameters of one level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelSmootherData {
    pub omega_pre: f64,
    pub omega_post: f64,
}

impl LevelSmootherData {
    /// `omega_pre = 2 / bound`, `omega_post = 1 / bound`, where `bound` is the
    /// sup-norm of the scaled level symbol plus the infinity norms of the
    /// sparse correction and of the rank-one term.
    pub fn for_operator(op: &LevelOperator) -> Self {
        let bound = Self::norm_bound(op);
        Self {
            omega_pre: 2.0 / bound,
            omega_post: 1.0 / bound,
        }
    }

    pub fn norm_bound(op: &LevelOperator) -> f64 {
        let structured = op.structured();
        let rank_one = structured.rank_one().map_or(0.0, |g| (op.scale() * g).abs());
        op.scale() * structured.symbol().supnorm() + op.correction().norm_inf() + rank_one
    }

    pub fn omega(&self, role: SmootherRole) -> f64 {
        match role {
            SmootherRole::Pre => self.omega_pre,
            SmootherRole::Post => self.omega_post,
        }
    }
}

/// `x <- x + omega (b - A x)`.
pub fn richardson(
    a: &impl LinearOperator,
    x: &mut [f64],
    b: &[f64],
    omega: f64,
    ops: &OpCounter,
) -> Result<()> {
    check_len(a.len(), x.len())?;
    let mut r = vec![0.0; x.len()];
    a.residual_into(x, b, &mut r, ops)?;
    axpy(omega, &r, x, ops);
    Ok(())
}

/// One forward sweep on `rows + rho e e^T`.
///
/// The rank-one part is handled through a running sum of the iterate, so a
/// sweep costs O(nnz) even though the full matrix is dense.
pub fn gauss_seidel(
    rows: &SparseMatrix,
    rho: f64,
    x: &mut [f64],
    b: &[f64],
    ops: &OpCounter,
) -> Result<()> {
    let n = rows.rows();
    check_len(n, x.len())?;
    check_len(n, b.len())?;
    let mut total: f64 = if rho != 0.0 { x.iter().sum() } else { 0.0 };
    for i in 0..n {
        let (cols, vals) = rows.row(i);
        let mut sum = b[i];
        let mut diag = 0.0;
        for (&j, &v) in cols.iter().zip(vals) {
            if j == i {
                diag = v;
            } else {
                sum -= v * x[j];
            }
        }
        if rho != 0.0 {
            sum -= rho * (total - x[i]);
            diag += rho;
        }
        if diag == 0.0 {
            return Err(Error::ZeroDiagonal(i));
        }
        let new = sum / diag;
        if rho != 0.0 {
            total += new - x[i];
        }
        x[i] = new;
    }
    ops.add(2 * rows.nnz() as u64 + if rho != 0.0 { 5 * n as u64 } else { n as u64 });
    Ok(())
}

/// `steps` iterations of plain CG started from `x`.
pub fn cg_steps(
    a: &impl LinearOperator,
    x: &mut [f64],
    b: &[f64],
    steps: usize,
    ops: &OpCounter,
) -> Result<()> {
    check_len(a.len(), x.len())?;
    let mut r = vec![0.0; x.len()];
    a.residual_into(x, b, &mut r, ops)?;
    let mut rr = dot(&r, &r, ops);
    if rr == 0.0 {
        return Ok(());
    }
    let mut p = r.clone();
    let mut ap = vec![0.0; x.len()];
    for step in 0..steps {
        a.apply_into(&p, &mut ap, ops)?;
        let curvature = dot(&p, &ap, ops);
        if !(curvature > 0.0) {
            break;
        }
        let alpha = rr / curvature;
        axpy(alpha, &p, x, ops);
        if step + 1 == steps {
            break;
        }
        axpy(-alpha, &ap, &mut r, ops);
        let rr_new = dot(&r, &r, ops);
        if rr_new == 0.0 {
            break;
        }
        let beta = rr_new / rr;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
        ops.add(2 * x.len() as u64);
        rr = rr_new;
    }
    Ok(())
}

/// Apply one smoothing step of `kind` on a level.
pub fn smooth(
    kind: SmootherKind,
    role: SmootherRole,
    op: &LevelOperator,
    data: &LevelSmootherData,
    x: &mut [f64],
    b: &[f64],
    ops: &OpCounter,
) -> Result<()> {
    match kind {
        SmootherKind::Richardson => richardson(op, x, b, data.omega(role), ops),
        SmootherKind::GaussSeidel => gauss_seidel(op.combined(), op.rank_one_coefficient(), x, b, ops),
        SmootherKind::Cg { steps } => cg_steps(op, x, b, steps, ops),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficient::DiffusionCoefficient;
    use crate::discretize::{AssembledProblem, BoundaryCondition, GridSpec, RhsMode};
    use nalgebra::{DMatrix, DVector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn problem(bc: BoundaryCondition, dim: usize, n: usize, coeff: &str) -> AssembledProblem {
        let g = GridSpec::new(dim, n, bc).unwrap();
        let c = DiffusionCoefficient::parse(coeff, dim).unwrap();
        AssembledProblem::build(&g, &c, &RhsMode::Ones).unwrap()
    }

    fn oracle_cases() -> Vec<AssembledProblem> {
        let mut out = Vec::new();
        for c in ["a1", "a2", "a3"] {
            out.push(problem(BoundaryCondition::Dirichlet, 1, 15, c));
            out.push(problem(BoundaryCondition::Dirichlet, 2, 7, c));
            out.push(problem(BoundaryCondition::Periodic, 1, 16, c));
            out.push(problem(BoundaryCondition::Reflective, 1, 16, c));
        }
        out.push(problem(BoundaryCondition::Periodic, 2, 8, "a8"));
        out.push(problem(BoundaryCondition::Dirichlet, 2, 7, "a7"));
        out
    }

    fn randn(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..n).map(|_| StandardNormal.sample(rng)).collect()
    }

    fn a_norm(a: &DMatrix<f64>, e: &[f64]) -> f64 {
        let v = DVector::from_column_slice(e);
        (v.dot(&(a * &v))).sqrt()
    }

    #[test]
    fn parse_and_display() {
        assert_eq!("gs".parse::<SmootherKind>().unwrap(), SmootherKind::GaussSeidel);
        assert_eq!("Richardson".parse::<SmootherKind>().unwrap(), SmootherKind::Richardson);
        assert_eq!("cg".parse::<SmootherKind>().unwrap(), SmootherKind::Cg { steps: 1 });
        assert_eq!("cg(3)".parse::<SmootherKind>().unwrap(), SmootherKind::Cg { steps: 3 });
        assert!("cg(0)".parse::<SmootherKind>().is_err());
        assert!("jacobi".parse::<SmootherKind>().is_err());
        assert_eq!(SmootherKind::Cg { steps: 3 }.to_string(), "cg(3)");
        assert_eq!(SmootherKind::GaussSeidel.to_string(), "gauss-seidel");
    }

    #[test]
    fn richardson_examples() {
        let a = SparseMatrix::identity(1).scale(2.0);
        let mut x = vec![0.0];
        richardson(&a, &mut x, &[1.0], 0.5, &OpCounter::new()).unwrap();
        assert_eq!(x, vec![0.5]);

        let p = problem(BoundaryCondition::Dirichlet, 1, 7, "a1");
        let data = LevelSmootherData::for_operator(p.operator());
        assert!((data.omega_pre - 0.5).abs() < 1e-12);
        assert!((data.omega_post - 0.25).abs() < 1e-12);
    }

    #[test]
    fn gauss_seidel_examples() {
        let t = SparseMatrix::from_triplets(
            3,
            3,
            [(0, 0, 2.0), (1, 1, 2.0), (2, 2, 2.0), (0, 1, -1.0), (1, 0, -1.0), (1, 2, -1.0), (2, 1, -1.0)],
        );
        let mut x = vec![0.0; 3];
        gauss_seidel(&t, 0.0, &mut x, &[1.0, 0.0, 0.0], &OpCounter::new()).unwrap();
        assert_eq!(x, vec![0.5, 0.25, 0.125]);
        let dense = t.to_dense();
        let dl = DMatrix::from_fn(3, 3, |i, j| if j <= i { dense[(i, j)] } else { 0.0 });
        let oracle = dl.lu().solve(&DVector::from_vec(vec![1.0, 0.0, 0.0])).unwrap();
        assert_eq!(x, oracle.as_slice());

        let d = SparseMatrix::from_triplets(2, 2, [(0, 0, 4.0), (1, 1, 5.0)]);
        let mut x = vec![7.0, -3.0];
        gauss_seidel(&d, 0.0, &mut x, &[2.0, 10.0], &OpCounter::new()).unwrap();
        assert_eq!(x, vec![0.5, 2.0]);

        let z = SparseMatrix::from_triplets(2, 2, [(0, 0, 1.0), (1, 0, 1.0)]);
        let err = gauss_seidel(&z, 0.0, &mut [0.0, 0.0], &[1.0, 1.0], &OpCounter::new());
        assert_eq!(err, Err(Error::ZeroDiagonal(1)));
    }

    #[test]
    fn gauss_seidel_with_rank_one_matches_dense_sweep() {
        let p = problem(BoundaryCondition::Periodic, 1, 16, "a2");
        let op = p.operator();
        let dense = op.to_dense().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x0 = randn(16, &mut rng);
        let b = randn(16, &mut rng);
        let mut x = x0.clone();
        gauss_seidel(op.combined(), op.rank_one_coefficient(), &mut x, &b, &OpCounter::new()).unwrap();
        let dl = DMatrix::from_fn(16, 16, |i, j| if j <= i { dense[(i, j)] } else { 0.0 });
        let u = &dense - &dl;
        let rhs = DVector::from_column_slice(&b) - u * DVector::from_column_slice(&x0);
        let oracle = dl.solve_lower_triangular(&rhs).unwrap();
        for (a, b) in x.iter().zip(oracle.iter()) {
            assert!((a - b).abs() < 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn cg_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = DMatrix::<f64>::from_fn(4, 4, |_, _| StandardNormal.sample(&mut rng));
        let spd = &m * m.transpose() + DMatrix::identity(4, 4);
        let a = SparseMatrix::from_triplets(4, 4, (0..16).map(|k| (k / 4, k % 4, spd[(k / 4, k % 4)])));
        let b = randn(4, &mut rng);
        let mut x = vec![0.0; 4];
        cg_steps(&a, &mut x, &b, 4, &OpCounter::new()).unwrap();
        let r = a.apply(&x).unwrap();
        let res: f64 = r.iter().zip(&b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        assert!(res <= 1e-10);

        let mut y = x.clone();
        let exact = spd.clone().cholesky().unwrap().solve(&DVector::from_column_slice(&b));
        y.copy_from_slice(exact.as_slice());
        let before = y.clone();
        let bb = a.apply(&before).unwrap();
        cg_steps(&a, &mut y, &bb, 2, &OpCounter::new()).unwrap();
        assert_eq!(y, before);

        let mut x1 = vec![0.0; 4];
        cg_steps(&a, &mut x1, &b, 1, &OpCounter::new()).unwrap();
        let ab = a.apply(&b).unwrap();
        let step = b.iter().map(|v| v * v).sum::<f64>() / b.iter().zip(&ab).map(|(p, q)| p * q).sum::<f64>();
        for (xi, bi) in x1.iter().zip(&b) {
            assert!((xi - step * bi).abs() < 1e-14 * (step * bi).abs().max(1e-300) + 1e-15);
        }
    }

    #[test]
    fn smoothers_do_not_increase_energy_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for p in oracle_cases() {
            let op = p.operator();
            let dense = op.to_dense().unwrap();
            let data = LevelSmootherData::for_operator(op);
            let n = op.len();
            for _ in 0..20 {
                let xs = randn(n, &mut rng);
                let b = op.apply(&xs).unwrap();
                let x0 = randn(n, &mut rng);
                let e0: Vec<f64> = x0.iter().zip(&xs).map(|(a, b)| a - b).collect();
                let before = a_norm(&dense, &e0);
                for kind in [SmootherKind::Richardson, SmootherKind::GaussSeidel, SmootherKind::Cg { steps: 1 }] {
                    for role in [SmootherRole::Pre, SmootherRole::Post] {
                        let mut x = x0.clone();
                        smooth(kind, role, op, &data, &mut x, &b, &OpCounter::new()).unwrap();
                        let e: Vec<f64> = x.iter().zip(&xs).map(|(a, b)| a - b).collect();
                        let after = a_norm(&dense, &e);
                        assert!(after <= before * (1.0 + 1e-12), "{kind} {role:?}: {after} > {before}");
                    }
                }
            }
        }
    }

    #[test]
    fn richardson_spectrum_and_post_smoothing_property() {
        for p in oracle_cases() {
            let op = p.operator();
            let a = op.to_dense().unwrap();
            let n = a.nrows();
            let data = LevelSmootherData::for_operator(op);
            for omega in [data.omega_pre, data.omega_post] {
                let v = DMatrix::identity(n, n) - &a * omega;
                let eig = v.symmetric_eigenvalues();
                assert!(eig.max() < 1.0 && eig.min() > -1.0 - 1e-12);
            }
            // largest alpha with V^T A V <= A - alpha A^2, via the pencil
            // (A - V^T A V, A^2)
            let v = DMatrix::identity(n, n) - &a * data.omega_post;
            let lhs = &a - v.transpose() * &a * &v;
            let a2 = &a * &a;
            let l = a2.cholesky().unwrap().l();
            let li = l.clone().try_inverse().unwrap();
            let pencil = &li * lhs * li.transpose();
            let alpha = pencil.symmetric_eigenvalues().min();
            assert!(alpha > 0.0, "alpha = {alpha}");
        }
    }

    #[test]
    fn smoothing_is_pure() {
        let p = problem(BoundaryCondition::Reflective, 2, 8, "a3");
        let op = p.operator();
        let data = LevelSmootherData::for_operator(op);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x0 = randn(op.len(), &mut rng);
        for kind in [SmootherKind::Richardson, SmootherKind::GaussSeidel, SmootherKind::Cg { steps: 2 }] {
            let mut x1 = x0.clone();
            let mut x2 = x0.clone();
            smooth(kind, SmootherRole::Pre, op, &data, &mut x1, p.rhs(), &OpCounter::new()).unwrap();
            smooth(kind, SmootherRole::Pre, op, &data, &mut x2, p.rhs(), &OpCounter::new()).unwrap();
            assert_eq!(x1, x2);
        }
    }
}
