//! The benchmark tables: configurations, published iteration counts and a
//! parallel cell runner.
//!
//! A pair labelled `X+Y` smooths with `Y` before the coarse correction and
//! with `X` after it, so `Richardson+Gauss-Seidel` is a Gauss-Seidel
//! pre-smoother followed by a Richardson post-smoother.

use std::time::Duration;

use rayon::prelude::*;
use serde::Serialize;

use crate::coefficient::DiffusionCoefficient;
use crate::discretize::{AssembledProblem, BoundaryCondition, GridSpec, RhsMode};
use crate::error::{Error, Result};
use crate::mgm::{build_hierarchy, CycleKind, HierarchyConfig, SolveOptions};
use crate::smoothers::SmootherKind;

/// Published count of one cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Reference {
    Count(usize),
    /// No convergence within the iteration budget.
    Dagger,
}

impl std::fmt::Display for Reference {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Reference::Count(k) => write!(f, "{k}"),
            Reference::Dagger => f.write_str("†"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairSpec {
    pub label: &'static str,
    pub pre: SmootherKind,
    pub post: SmootherKind,
    /// Rows follow `TableSpec::sizes`, columns `TableSpec::coeffs`.
    pub reference: Option<Vec<Vec<Reference>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableSpec {
    pub id: u8,
    pub caption: String,
    pub bc: BoundaryCondition,
    pub dim: usize,
    pub cycle: CycleKind,
    /// Unknowns per direction.
    pub sizes: Vec<usize>,
    pub coeffs: Vec<String>,
    pub pairs: Vec<PairSpec>,
    pub rhs: RhsMode,
    pub tol: f64,
}

pub const TABLE_IDS: [u8; 6] = [1, 2, 3, 4, 5, 6];

const R: SmootherKind = SmootherKind::Richardson;
const GS: SmootherKind = SmootherKind::GaussSeidel;
const CG: SmootherKind = SmootherKind::Cg { steps: 1 };

fn counts(rows: &[&[usize]]) -> Vec<Vec<Reference>> {
    rows.iter()
        .map(|r| r.iter().map(|&k| Reference::Count(k)).collect())
        .collect()
}

fn constant(rows: usize, cols: usize, k: usize) -> Vec<Vec<Reference>> {
    vec![vec![Reference::Count(k); cols]; rows]
}

/// Same as `constant`, with the single-level first row solved in one step.
fn constant_after_direct(rows: usize, cols: usize, k: usize) -> Vec<Vec<Reference>> {
    let mut out = constant(rows, cols, k);
    out[0] = vec![Reference::Count(1); cols];
    out
}

fn pair(label: &'static str, pre: SmootherKind, post: SmootherKind, reference: Vec<Vec<Reference>>) -> PairSpec {
    PairSpec {
        label,
        pre,
        post,
        reference: Some(reference),
    }
}

fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

impl TableSpec {
    /// Dirichlet configuration with published counts.
    pub fn published(id: u8) -> Result<Self> {
        let sizes_1d = vec![31, 63, 127, 255, 511];
        let sizes_2d = vec![31, 63, 127, 255];
        let base = |caption: &str, dim, cycle, sizes: Vec<usize>, coeffs: &[&str], pairs| TableSpec {
            id,
            caption: caption.to_string(),
            bc: BoundaryCondition::Dirichlet,
            dim,
            cycle,
            sizes,
            coeffs: names(coeffs),
            pairs,
            rhs: RhsMode::Ones,
            tol: 1e-7,
        };
        let spec = match id {
            1 => base(
                "TGM, 1D, Dirichlet",
                1,
                CycleKind::Tgm,
                sizes_1d,
                &["a1", "a2", "a3"],
                vec![
                    pair(
                        "Richardson+Richardson",
                        R,
                        R,
                        counts(&[&[2, 8, 5], &[2, 6, 4], &[2, 5, 4], &[2, 4, 4], &[2, 4, 3]]),
                    ),
                    pair("Richardson+Gauss-Seidel", GS, R, constant(5, 3, 8)),
                ],
            ),
            2 => base(
                "MGM, 1D, Dirichlet",
                1,
                CycleKind::Mgm,
                vec![15, 31, 63, 127, 255, 511],
                &["a1", "a2", "a3"],
                vec![
                    pair(
                        "Richardson+Richardson",
                        R,
                        R,
                        counts(&[&[1, 1, 1], &[2, 8, 5], &[7, 7, 7], &[8, 8, 8], &[8, 8, 8], &[8, 8, 8]]),
                    ),
                    pair(
                        "Richardson+Gauss-Seidel",
                        GS,
                        R,
                        {
                            let mut rows = constant_after_direct(6, 3, 9);
                            rows[1] = vec![Reference::Count(8); 3];
                            rows
                        },
                    ),
                ],
            ),
            3 => base(
                "TGM, 1D, Dirichlet, a(x) = e^x + 10^k",
                1,
                CycleKind::Tgm,
                sizes_1d,
                &["a1", "a2k(0)", "a2k(1)", "a2k(2)", "a2k(3)", "a2k(4)", "a2k(5)"],
                vec![
                    pair(
                        "Richardson+Richardson",
                        R,
                        R,
                        counts(&[
                            &[2, 5, 4, 3, 3, 3, 2],
                            &[2, 4, 4, 3, 3, 3, 2],
                            &[2, 4, 4, 3, 3, 3, 2],
                            &[2, 4, 3, 3, 3, 3, 2],
                            &[2, 3, 3, 3, 3, 2, 2],
                        ]),
                    ),
                    pair("Richardson+Gauss-Seidel", GS, R, constant(5, 7, 8)),
                ],
            ),
            4 => base(
                "TGM, 2D, Dirichlet",
                2,
                CycleKind::Tgm,
                sizes_2d,
                &["a1", "a2", "a3"],
                vec![
                    pair(
                        "Richardson+Richardson",
                        R,
                        R,
                        counts(&[&[16, 73, 38], &[16, 82, 41], &[16, 86, 43], &[16, 89, 44]]),
                    ),
                    pair(
                        "Richardson+Gauss-Seidel",
                        GS,
                        R,
                        counts(&[&[13, 14, 14], &[13, 15, 14], &[13, 15, 14], &[13, 15, 14]]),
                    ),
                ],
            ),
            5 => base(
                "MGM, 2D, Dirichlet",
                2,
                CycleKind::Mgm,
                vec![15, 31, 63, 127, 255],
                &["a1", "a2", "a3"],
                vec![
                    pair(
                        "Richardson+Richardson",
                        R,
                        R,
                        counts(&[&[1, 1, 1], &[16, 73, 38], &[16, 83, 42], &[16, 88, 43], &[16, 90, 44]]),
                    ),
                    pair(
                        "Richardson+Gauss-Seidel",
                        GS,
                        R,
                        counts(&[&[1, 1, 1], &[13, 14, 14], &[13, 15, 15], &[13, 15, 15], &[13, 15, 15]]),
                    ),
                ],
            ),
            6 => {
                let dagger = Reference::Dagger;
                let rcg = [[21, 24, 46, 1472], [26, 28, 59, 1990], [26, 30, 64, 1783], [27, 31, 60, 1973]];
                let mut rcg_ref = vec![vec![Reference::Count(1); 5]];
                for row in rcg {
                    let mut r: Vec<Reference> = row.iter().map(|&k| Reference::Count(k)).collect();
                    r.push(dagger);
                    rcg_ref.push(r);
                }
                base(
                    "MGM, 2D, Dirichlet, further coefficients († = no convergence within the budget)",
                    2,
                    CycleKind::Mgm,
                    vec![15, 31, 63, 127, 255],
                    &["a4", "a5", "a6", "a7", "a8"],
                    vec![
                        pair(
                            "Richardson+Gauss-Seidel",
                            GS,
                            R,
                            counts(&[
                                &[1, 1, 1, 1, 1],
                                &[14, 14, 13, 13, 13],
                                &[15, 15, 13, 13, 13],
                                &[15, 15, 14, 14, 14],
                                &[15, 15, 14, 14, 14],
                            ]),
                        ),
                        pair("Richardson+CG", CG, R, rcg_ref),
                        pair(
                            "Gauss-Seidel+CG",
                            CG,
                            GS,
                            {
                                let mut rows = constant_after_direct(5, 5, 0);
                                for row in &mut rows[1..] {
                                    *row = [12, 12, 11, 10, 10].map(Reference::Count).to_vec();
                                }
                                rows
                            },
                        ),
                    ],
                )
            }
            _ => return Err(Error::InvalidConfig(format!("no table {id}; choose 1 to 6"))),
        };
        Ok(spec)
    }

    /// The same grid of configurations under `bc`. Periodic and reflective
    /// variants use sizes `n + 1`, a seeded random right-hand side (the
    /// constant vector is an exact eigenvector there) and no references.
    pub fn for_bc(id: u8, bc: BoundaryCondition, seed: u64) -> Result<Self> {
        let mut spec = Self::published(id)?;
        if bc != BoundaryCondition::Dirichlet {
            spec.bc = bc;
            spec.sizes = spec.sizes.iter().map(|n| n + 1).collect();
            spec.rhs = RhsMode::Random(seed);
            spec.caption = spec.caption.replace("Dirichlet", bc.name());
            for p in &mut spec.pairs {
                p.reference = None;
            }
        }
        Ok(spec)
    }

    /// Drop sizes above `max_n` per direction.
    pub fn truncated(self, max_n: usize) -> Self {
        self.retain_sizes(|n| n <= max_n)
    }

    /// Keep the sizes matching `keep`, with their reference rows.
    pub fn retain_sizes(mut self, keep: impl Fn(usize) -> bool) -> Self {
        let mask: Vec<bool> = self.sizes.iter().map(|&n| keep(n)).collect();
        self.sizes.retain(|&n| keep(n));
        for p in &mut self.pairs {
            if let Some(rows) = p.reference.take() {
                p.reference = Some(rows.into_iter().zip(&mask).filter(|(_, &k)| k).map(|(r, _)| r).collect());
            }
        }
        self
    }

    /// Keep only the named pairs and coefficients (all when empty).
    pub fn restricted(mut self, pairs: &[&str], coeffs: &[&str]) -> Self {
        if !pairs.is_empty() {
            self.pairs.retain(|p| pairs.contains(&p.label));
        }
        if !coeffs.is_empty() {
            let keep: Vec<bool> = self.coeffs.iter().map(|c| coeffs.contains(&c.as_str())).collect();
            self.coeffs.retain(|c| coeffs.contains(&c.as_str()));
            for p in &mut self.pairs {
                if let Some(rows) = p.reference.as_mut() {
                    for row in rows {
                        *row = row.iter().zip(&keep).filter(|(_, &k)| k).map(|(r, _)| *r).collect();
                    }
                }
            }
        }
        self
    }

    /// Iteration budget of one cell: 1000, or for table 6 the number of
    /// unknowns clamped to [2000, 5000].
    pub fn max_iter(&self, n: usize) -> usize {
        if self.id == 6 {
            n.pow(self.dim as u32).clamp(2000, 5000)
        } else {
            1000
        }
    }

    /// Allowed deviation from the published count.
    pub fn tolerance(&self, pair: &PairSpec) -> usize {
        if self.dim == 2 && pair.pre == R && pair.post == R {
            3
        } else {
            2
        }
    }

    pub fn size_label(&self, n: usize) -> String {
        if self.dim == 1 {
            n.to_string()
        } else {
            format!("{n}^{}", self.dim)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResult {
    pub table: u8,
    pub bc: BoundaryCondition,
    pub dim: usize,
    pub method: CycleKind,
    pub pair: String,
    pub n: usize,
    pub unknowns: usize,
    pub levels: usize,
    pub coeff: String,
    pub iterations: usize,
    pub converged: bool,
    pub ops_per_iteration: f64,
    pub reference: Option<Reference>,
    pub tolerance: usize,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl CellResult {
    /// Iteration count, or `†` when the cell did not converge.
    pub fn display(&self) -> String {
        if self.converged {
            self.iterations.to_string()
        } else {
            "†".to_string()
        }
    }

    pub fn count(&self) -> Option<usize> {
        self.converged.then_some(self.iterations)
    }

    /// Signed difference to the published count when both are numbers.
    pub fn diff(&self) -> Option<i64> {
        match (self.reference?, self.count()) {
            (Reference::Count(r), Some(k)) => Some(k as i64 - r as i64),
            _ => None,
        }
    }

    /// `None` when there is no published value.
    pub fn within_tolerance(&self) -> Option<bool> {
        Some(match (self.reference?, self.count()) {
            (Reference::Count(r), Some(k)) => k.abs_diff(r) <= self.tolerance,
            (Reference::Dagger, None) => true,
            _ => false,
        })
    }
}

/// Runs one cell.
pub fn run_cell(spec: &TableSpec, pair: &PairSpec, n: usize, coeff: &str) -> Result<CellResult> {
    let grid = GridSpec::new(spec.dim, n, spec.bc)?;
    let coefficient = DiffusionCoefficient::parse(coeff, spec.dim)?;
    let problem = AssembledProblem::build(&grid, &coefficient, &spec.rhs)?;
    let cfg = HierarchyConfig::new(spec.cycle, pair.pre, pair.post);
    let hierarchy = build_hierarchy(&problem, &cfg)?;
    let opts = SolveOptions {
        tol: spec.tol,
        max_iter: spec.max_iter(n),
    };
    let (_, report) = hierarchy.solve(problem.rhs(), &opts)?;
    let si = spec.sizes.iter().position(|&m| m == n);
    let ci = spec.coeffs.iter().position(|c| c == coeff);
    let reference = match (&pair.reference, si, ci) {
        (Some(rows), Some(i), Some(j)) => rows.get(i).and_then(|r| r.get(j)).copied(),
        _ => None,
    };
    Ok(CellResult {
        table: spec.id,
        bc: spec.bc,
        dim: spec.dim,
        method: spec.cycle,
        pair: pair.label.to_string(),
        n,
        unknowns: grid.len(),
        levels: hierarchy.depth(),
        coeff: coeff.to_string(),
        iterations: report.iterations,
        converged: report.converged,
        ops_per_iteration: report.ops_per_iteration(),
        reference,
        tolerance: spec.tolerance(pair),
        wall_time: report.wall_time,
    })
}

/// All cells of a table, ordered pair, size, coefficient. Cells run in
/// parallel; the order of the result does not depend on scheduling.
pub fn run_table(spec: &TableSpec) -> Result<Vec<CellResult>> {
    let jobs: Vec<(&PairSpec, usize, &str)> = spec
        .pairs
        .iter()
        .flat_map(|p| {
            spec.sizes
                .iter()
                .flat_map(move |&n| spec.coeffs.iter().map(move |c| (p, n, c.as_str())))
        })
        .collect();
    // largest cells first keeps the pool busy
    let mut order: Vec<usize> = (0..jobs.len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(jobs[i].1));
    let mut results: Vec<(usize, Result<CellResult>)> = order
        .into_par_iter()
        .map(|i| (i, run_cell(spec, jobs[i].0, jobs[i].1, jobs[i].2)))
        .collect();
    results.sort_by_key(|(i, _)| *i);
    results.into_iter().map(|(_, r)| r).collect()
}

/// Cells of one pair and coefficient, ordered by size.
pub fn column<'a>(cells: &'a [CellResult], pair: &str, coeff: &str) -> Vec<&'a CellResult> {
    let mut col: Vec<&CellResult> = cells.iter().filter(|c| c.pair == pair && c.coeff == coeff).collect();
    col.sort_by_key(|c| c.n);
    col
}

/// `max - min` of the converged counts in a column, ignoring sizes that
/// are solved directly.
pub fn spread(col: &[&CellResult]) -> Option<usize> {
    let counts: Vec<usize> = col
        .iter()
        .filter(|c| !(c.method == CycleKind::Mgm && c.n <= crate::mgm::default_coarsest(c.bc)))
        .map(|c| c.count())
        .collect::<Option<Vec<_>>>()?;
    Some(counts.iter().max()? - counts.iter().min()?)
}

/// Spread of the published counts of a column, same exclusions.
pub fn reference_spread(col: &[&CellResult]) -> Option<usize> {
    let counts: Vec<usize> = col
        .iter()
        .filter(|c| !(c.method == CycleKind::Mgm && c.n <= crate::mgm::default_coarsest(c.bc)))
        .map(|c| match c.reference? {
            Reference::Count(k) => Some(k),
            Reference::Dagger => None,
        })
        .collect::<Option<Vec<_>>>()?;
    Some(counts.iter().max()? - counts.iter().min()?)
}
