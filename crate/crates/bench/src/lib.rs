//! Problem builders shared by the benchmarks.

use wlmg::{
    build_hierarchy, AssembledProblem, BoundaryCondition, CycleKind, DiffusionCoefficient, GridSpec, HierarchyConfig,
    LevelHierarchy, RhsMode, SmootherKind,
};

pub fn problem(bc: BoundaryCondition, dim: usize, n: usize, coeff: &str) -> AssembledProblem {
    let grid = GridSpec::new(dim, n, bc).expect("grid");
    let c = DiffusionCoefficient::parse(coeff, dim).expect("coefficient");
    AssembledProblem::build(&grid, &c, &RhsMode::Ones).expect("problem")
}

/// Multigrid hierarchy with a Gauss-Seidel pre-smoother and Richardson post-smoother.
pub fn hierarchy(problem: &AssembledProblem) -> LevelHierarchy {
    let cfg = HierarchyConfig::new(CycleKind::Mgm, SmootherKind::GaussSeidel, SmootherKind::Richardson);
    build_hierarchy(problem, &cfg).expect("hierarchy")
}
