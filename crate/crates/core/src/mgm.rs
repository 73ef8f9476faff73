//! Two-grid and V-cycle iterations, level hierarchy construction and the
//! outer solve loop.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::direct::CoarseSolver;
use crate::discretize::{AssembledProblem, BoundaryCondition};
use crate::error::{check_len, Error, Result};
use crate::operator::{LevelOperator, LinearOperator};
use crate::ops::{norm2, OpCounter};
use crate::smoothers::{smooth, LevelSmootherData, SmootherKind, SmootherRole};
use crate::structured::AlgebraKind;
use crate::transfer::Projector;

/// Relative residual above which an iteration is declared divergent.
pub const DIVERGENCE_LIMIT: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CycleKind {
    /// Exact solve on the first coarse level.
    Tgm,
    /// V-cycle down to the coarsest size.
    Mgm,
}

impl fmt::Display for CycleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CycleKind::Tgm => "tgm",
            CycleKind::Mgm => "mgm",
        })
    }
}

impl FromStr for CycleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tgm" | "two-grid" => Ok(CycleKind::Tgm),
            "mgm" | "v-cycle" | "vcycle" => Ok(CycleKind::Mgm),
            _ => Err(Error::InvalidConfig(format!("unknown method '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HierarchyConfig {
    pub cycle: CycleKind,
    pub pre: SmootherKind,
    pub post: SmootherKind,
    pub nu_pre: usize,
    pub nu_post: usize,
    /// Per-dimension size of the coarsest level; defaults to 15 for
    /// Dirichlet and 16 otherwise. Ignored by the two-grid method.
    pub coarsest: Option<usize>,
}

impl HierarchyConfig {
    pub fn new(cycle: CycleKind, pre: SmootherKind, post: SmootherKind) -> Self {
        Self {
            cycle,
            pre,
            post,
            nu_pre: 1,
            nu_post: 1,
            coarsest: None,
        }
    }

    pub fn with_coarsest(mut self, n: usize) -> Self {
        self.coarsest = Some(n);
        self
    }

    pub fn is_linear(&self) -> bool {
        !matches!(self.pre, SmootherKind::Cg { .. }) && !matches!(self.post, SmootherKind::Cg { .. })
    }
}

pub fn default_coarsest(bc: BoundaryCondition) -> usize {
    match bc {
        BoundaryCondition::Dirichlet => 15,
        BoundaryCondition::Periodic | BoundaryCondition::Reflective => 16,
    }
}

#[derive(Debug, Clone)]
pub struct Level {
    operator: LevelOperator,
    smoother: LevelSmootherData,
    projector: Option<Projector>,
}

impl Level {
    pub fn operator(&self) -> &LevelOperator {
        &self.operator
    }

    pub fn smoother(&self) -> &LevelSmootherData {
        &self.smoother
    }

    /// Projector to the next coarser level, absent on the coarsest one.
    pub fn projector(&self) -> Option<&Projector> {
        self.projector.as_ref()
    }

    pub fn len(&self) -> usize {
        self.operator.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// All level data, computed once before iterating.
#[derive(Debug, Clone)]
pub struct LevelHierarchy {
    config: HierarchyConfig,
    levels: Vec<Level>,
    coarse: CoarseSolver,
}

/// Per-dimension sizes from finest to coarsest.
fn size_chain(kind: AlgebraKind, n: usize, cycle: CycleKind, coarsest: usize) -> Result<Vec<usize>> {
    let halve = |m: usize| match kind {
        AlgebraKind::Tau if m % 2 == 1 && m >= 3 => Some((m - 1) / 2),
        AlgebraKind::Circulant | AlgebraKind::Dct3 if m.is_multiple_of(2) && m >= 2 => Some(m / 2),
        _ => None,
    };
    let infeasible = || {
        Error::InfeasibleChain(format!(
            "size {n} does not reduce to {coarsest} by halving in the {kind:?} algebra"
        ))
    };
    match cycle {
        CycleKind::Tgm => {
            let m = halve(n).ok_or_else(|| Error::InfeasibleChain(format!("size {n} has no coarse level")))?;
            Ok(vec![n, m])
        }
        CycleKind::Mgm => {
            let mut chain = vec![n];
            let mut m = n;
            while m > coarsest {
                m = halve(m).ok_or_else(infeasible)?;
                chain.push(m);
            }
            if m != coarsest {
                return Err(infeasible());
            }
            Ok(chain)
        }
    }
}

pub fn build_hierarchy(problem: &AssembledProblem, config: &HierarchyConfig) -> Result<LevelHierarchy> {
    if config.nu_pre == 0 && config.nu_post == 0 {
        return Err(Error::InvalidConfig("at least one smoothing step is required".into()));
    }
    let grid = problem.grid();
    let kind = grid.bc.algebra();
    let coarsest = config.coarsest.unwrap_or_else(|| default_coarsest(grid.bc));
    let chain = size_chain(kind, grid.n, config.cycle, coarsest)?;

    let mut levels = Vec::with_capacity(chain.len());
    let mut op = problem.operator().clone();
    for &m in &chain[1..] {
        let projector = Projector::new(kind, op.structured().sizes())?;
        debug_assert!(projector.coarse_sizes().iter().all(|&c| c == m));
        let coarse = projector.coarsen(&op)?;
        levels.push(Level {
            smoother: LevelSmootherData::for_operator(&op),
            operator: op,
            projector: Some(projector),
        });
        op = coarse;
    }
    let coarse = CoarseSolver::factor(&op)?;
    levels.push(Level {
        smoother: LevelSmootherData::for_operator(&op),
        operator: op,
        projector: None,
    });
    Ok(LevelHierarchy {
        config: config.clone(),
        levels,
        coarse,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// Relative residual after each outer iteration.
    pub history: Vec<f64>,
    pub converged: bool,
    /// Arithmetic operations of the iteration phase.
    pub ops: u64,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl SolveReport {
    pub fn final_residual(&self) -> f64 {
        self.history.last().copied().unwrap_or(0.0)
    }

    pub fn ops_per_iteration(&self) -> f64 {
        if self.iterations == 0 {
            0.0
        } else {
            self.ops as f64 / self.iterations as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_iter: 1000,
        }
    }
}

impl LevelHierarchy {
    pub fn config(&self) -> &HierarchyConfig {
        &self.config
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn len(&self) -> usize {
        self.levels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn level_sizes(&self) -> Vec<usize> {
        self.levels.iter().map(Level::len).collect()
    }

    pub fn coarse_solver(&self) -> &CoarseSolver {
        &self.coarse
    }

    /// One cycle on level `s`: `x` is updated in place.
    pub fn vcycle(&self, s: usize, x: &mut [f64], b: &[f64], ops: &OpCounter) -> Result<()> {
        let level = self.levels.get(s).ok_or_else(|| {
            Error::InvalidConfig(format!("level {s} out of range (depth {})", self.depth()))
        })?;
        check_len(level.len(), x.len())?;
        check_len(level.len(), b.len())?;
        let Some(projector) = level.projector.as_ref() else {
            return self.coarse.solve_into(b, x, ops);
        };
        let cfg = &self.config;
        let op = &level.operator;
        for _ in 0..cfg.nu_pre {
            smooth(cfg.pre, SmootherRole::Pre, op, &level.smoother, x, b, ops)?;
        }
        let mut r = vec![0.0; x.len()];
        op.residual_into(x, b, &mut r, ops)?;
        let mut rc = vec![0.0; projector.coarse_len()];
        projector.restrict_into(&r, &mut rc, ops)?;
        let mut ec = vec![0.0; rc.len()];
        self.vcycle(s + 1, &mut ec, &rc, ops)?;
        projector.prolong_into(&ec, &mut r, ops)?;
        x.iter_mut().zip(&r).for_each(|(xi, ei)| *xi += ei);
        ops.add(x.len() as u64);
        for _ in 0..cfg.nu_post {
            smooth(cfg.post, SmootherRole::Post, op, &level.smoother, x, b, ops)?;
        }
        Ok(())
    }

    /// One two-grid iteration; the hierarchy must have exactly two levels.
    pub fn tgm_iterate(&self, x: &mut [f64], b: &[f64], ops: &OpCounter) -> Result<()> {
        if self.depth() != 2 {
            return Err(Error::InvalidConfig(format!(
                "two-grid iteration needs 2 levels, hierarchy has {}",
                self.depth()
            )));
        }
        self.vcycle(0, x, b, ops)
    }

    /// Iterate from the zero vector until the relative residual drops below
    /// `tol`, `max_iter` is reached, or the iteration blows up.
    pub fn solve(&self, b: &[f64], opts: &SolveOptions) -> Result<(Vec<f64>, SolveReport)> {
        if !(opts.tol > 0.0) || opts.max_iter == 0 {
            return Err(Error::InvalidConfig("tol must be positive and max_iter at least 1".into()));
        }
        let n = self.len();
        check_len(n, b.len())?;
        let start = Instant::now();
        let ops = OpCounter::new();
        let mut x = vec![0.0; n];
        let bnorm = norm2(b);
        let mut report = SolveReport {
            iterations: 0,
            history: Vec::new(),
            converged: bnorm == 0.0,
            ops: 0,
            wall_time: Duration::ZERO,
        };
        let op = &self.levels[0].operator;
        let mut r = vec![0.0; n];
        while !report.converged && report.iterations < opts.max_iter {
            self.vcycle(0, &mut x, b, &ops)?;
            op.residual_into(&x, b, &mut r, &ops)?;
            let rel = norm2(&r) / bnorm;
            ops.add(2 * n as u64);
            report.iterations += 1;
            report.history.push(rel);
            report.converged = rel < opts.tol;
            if !rel.is_finite() || rel > DIVERGENCE_LIMIT {
                break;
            }
        }
        report.ops = ops.get();
        report.wall_time = start.elapsed();
        Ok((x, report))
    }

    /// The cycle's error propagation matrix, one column per unit vector.
    /// Only meaningful for linear smoothers.
    pub fn iteration_matrix(&self) -> Result<DMatrix<f64>> {
        if !self.config.is_linear() {
            return Err(Error::InvalidConfig("CG smoothing makes the cycle nonlinear".into()));
        }
        let n = self.len();
        if n > crate::structured::DENSE_LIMIT {
            return Err(Error::TooLarge {
                size: n,
                limit: crate::structured::DENSE_LIMIT,
            });
        }
        let zero = vec![0.0; n];
        let ops = OpCounter::new();
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut x = vec![0.0; n];
            x[j] = 1.0;
            self.vcycle(0, &mut x, &zero, &ops)?;
            m.set_column(j, &nalgebra::DVector::from_vec(x));
        }
        Ok(m)
    }
}
