#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coefficient;
pub mod direct;
pub mod discretize;
pub mod error;
pub mod operator;
pub mod mgm;
pub mod ops;
pub mod smoothers;
pub mod sparse;
pub mod structured;
pub mod tables;
pub mod symbols;
pub mod transfer;
pub mod verify;

pub use coefficient::{DiffusionCoefficient, Preset};
pub use discretize::{assemble, build_rhs, coefficient_range, split, AssembledProblem, BoundaryCondition, GridSpec, RhsMode};
pub use error::{Error, Result};
pub use operator::{LevelOperator, LinearOperator};
pub use ops::OpCounter;
pub use sparse::SparseMatrix;
pub use structured::{AlgebraKind, StructuredOperator};
pub use symbols::{CosineSymbol, TensorSymbol};
pub use transfer::{CuttingOperator, Projector};
pub use smoothers::{cg_steps, gauss_seidel, richardson, smooth, LevelSmootherData, SmootherKind, SmootherRole};
pub use direct::{dissection_order, CoarseSolver, SparseCholesky};
pub use mgm::{build_hierarchy, default_coarsest, CycleKind, HierarchyConfig, Level, LevelHierarchy, SolveOptions, SolveReport};
pub use verify::{approximation_constant, cycle_check, dense_cycle_matrix, galerkin_check, oracle_suite, smoothing_constant, spectral_equivalence, tgm_contraction, theory_report, OracleCheck, TheoryReport};
pub use tables::{column, reference_spread, run_cell, run_table, spread, CellResult, PairSpec, Reference, TableSpec, TABLE_IDS};
