use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use serde::Serialize;

use wlmg::{
    build_hierarchy, AssembledProblem, BoundaryCondition, CycleKind, DiffusionCoefficient, GridSpec, HierarchyConfig,
    RhsMode, SmootherKind, SolveOptions,
};

use crate::output::{parse_sizes, positive, sink, write_csv, write_markdown, Format};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RhsChoice {
    /// h^2 times the vector of ones
    Ones,
    /// Standard normal entries drawn from --seed
    Random,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// dirichlet, periodic or reflective
    #[arg(long, default_value = "dirichlet")]
    pub bc: BoundaryCondition,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub dim: u8,
    /// Preset name or expression in x, y
    #[arg(long, default_value = "a1")]
    pub coeff: String,
    /// tgm or mgm
    #[arg(long, default_value = "mgm")]
    pub method: CycleKind,
    #[arg(long, default_value = "richardson")]
    pub pre: SmootherKind,
    #[arg(long, default_value = "richardson")]
    pub post: SmootherKind,
    /// Unknowns per direction, comma separated
    #[arg(long, value_parser = parse_sizes, default_value = "31")]
    pub n: Vec<Vec<usize>>,
    #[arg(long, default_value_t = 1e-7, value_parser = positive)]
    pub tol: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_iter: usize,
    /// Smallest grid per direction of a multigrid hierarchy
    #[arg(long)]
    pub coarsest: Option<usize>,
    #[arg(long, value_enum, default_value = "ones")]
    pub rhs: RhsChoice,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Output file; stdout when omitted
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct SolveRow {
    bc: BoundaryCondition,
    dim: usize,
    coeff: String,
    method: CycleKind,
    pre: String,
    post: String,
    n: usize,
    unknowns: usize,
    levels: usize,
    iterations: usize,
    converged: bool,
    final_residual: f64,
    ops: u64,
    ops_per_iteration: f64,
    /// Relative residual after each iteration, `;`-separated.
    history: String,
}

pub fn run(args: &SolveArgs) -> Result<bool> {
    let dim = args.dim as usize;
    let coeff = DiffusionCoefficient::parse(&args.coeff, dim).context("invalid --coeff")?;
    let rhs = match args.rhs {
        RhsChoice::Ones => RhsMode::Ones,
        RhsChoice::Random => RhsMode::Random(args.seed),
    };
    let mut config = HierarchyConfig::new(args.method, args.pre, args.post);
    if let Some(c) = args.coarsest {
        config = config.with_coarsest(c);
    }
    let opts = SolveOptions {
        tol: args.tol,
        max_iter: args.max_iter,
    };
    let mut rows = Vec::new();
    for &n in args.n.iter().flatten() {
        let grid = GridSpec::new(dim, n, args.bc)?;
        let problem = AssembledProblem::build(&grid, &coeff, &rhs)?;
        let hierarchy = build_hierarchy(&problem, &config).with_context(|| format!("n = {n}"))?;
        let (_, report) = hierarchy.solve(problem.rhs(), &opts)?;
        rows.push(SolveRow {
            bc: args.bc,
            dim,
            coeff: coeff.name().to_string(),
            method: args.method,
            pre: args.pre.to_string(),
            post: args.post.to_string(),
            n,
            unknowns: grid.len(),
            levels: hierarchy.depth(),
            iterations: report.iterations,
            converged: report.converged,
            final_residual: report.final_residual(),
            ops: report.ops,
            ops_per_iteration: report.ops_per_iteration(),
            history: report.history.iter().map(|r| format!("{r:.6e}")).collect::<Vec<_>>().join(";"),
        });
    }
    let mut out = sink(&args.output)?;
    match args.format {
        Format::Csv => write_csv(out.as_mut(), &rows)?,
        Format::Markdown => {
            let header: Vec<String> = ["n", "unknowns", "levels", "iterations", "converged", "final residual", "ops/iteration"]
                .iter()
                .map(|s| s.to_string())
                .collect();
            let body: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.n.to_string(),
                        r.unknowns.to_string(),
                        r.levels.to_string(),
                        r.iterations.to_string(),
                        r.converged.to_string(),
                        format!("{:.3e}", r.final_residual),
                        format!("{:.1}", r.ops_per_iteration),
                    ]
                })
                .collect();
            writeln!(
                out,
                "{} {}D, {}, a = {}, pre {}, post {}\n",
                args.method.to_string().to_uppercase(),
                dim,
                args.bc,
                coeff.name(),
                args.pre,
                args.post
            )?;
            write_markdown(out.as_mut(), &header, &body)?;
            for r in &rows {
                writeln!(out, "\nResidual history, n = {}: {}", r.n, r.history.replace(';', ", "))?;
            }
        }
    }
    out.flush()?;
    Ok(rows.iter().all(|r| r.converged))
}
