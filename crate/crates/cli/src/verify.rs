use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;

use wlmg::{
    oracle_suite, spectral_equivalence, theory_report, AssembledProblem, BoundaryCondition, DiffusionCoefficient,
    GridSpec, RhsMode, TheoryReport,
};

use crate::output::{parse_sizes, sink, write_csv, write_markdown, Format};

/// Largest accepted ratio between the approximation constants of one
/// coefficient across sizes.
const BETA_RATIO_LIMIT: f64 = 2.0;

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value = "dirichlet")]
    pub bc: BoundaryCondition,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub dim: u8,
    /// Coefficients, comma separated
    #[arg(long, value_delimiter = ',', default_value = "a1,a2,a3")]
    pub coeff: Vec<String>,
    /// Unknowns per direction, comma separated
    #[arg(long, value_parser = parse_sizes, default_value = "7,15,31")]
    pub n: Vec<Vec<usize>>,
    /// Also cross-check coarse operators and cycle matrices against dense products
    #[arg(long)]
    pub oracles: bool,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Output file; stdout when omitted
    #[arg(long)]
    pub output: Option<PathBuf>,
}

pub fn run(args: &VerifyArgs) -> Result<bool> {
    let dim = args.dim as usize;
    let sizes: Vec<usize> = args.n.iter().flatten().copied().collect();
    let mut reports: Vec<TheoryReport> = Vec::new();
    let mut failures: Vec<String> = Vec::new();

    for name in &args.coeff {
        let coeff = DiffusionCoefficient::parse(name, dim).with_context(|| format!("invalid coefficient `{name}`"))?;
        let mut betas = Vec::new();
        for &n in &sizes {
            let grid = GridSpec::new(dim, n, args.bc)?;
            let r = theory_report(&grid, &coeff).with_context(|| format!("{name}, n = {n}"))?;
            failures.extend(r.failures());
            betas.push(r.beta);
            reports.push(r);
            if args.oracles {
                for chk in oracle_suite(&grid, &coeff)? {
                    if !chk.passed() {
                        failures.push(format!("{name} n={n} {}: relative error {:e}", chk.check, chk.rel_error));
                    }
                }
            }
        }
        let max = betas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = betas.iter().copied().fold(f64::INFINITY, f64::min);
        if betas.len() > 1 && max / min > BETA_RATIO_LIMIT {
            failures.push(format!("{name}: approximation constant varies by {:.3} across sizes", max / min));
        }
    }

    if let Some(&n) = sizes.first() {
        let grid = GridSpec::new(dim, n, args.bc)?;
        let a = AssembledProblem::build(&grid, &DiffusionCoefficient::constant(1.0, dim), &RhsMode::Ones)?
            .operator()
            .to_dense()?;
        let (t1, t2) = spectral_equivalence(&a, &a)?;
        eprintln!("self-test: equivalence of A with itself gives ({t1:.12}, {t2:.12})");
        if (t1 - 1.0).abs() > 1e-10 || (t2 - 1.0).abs() > 1e-10 {
            failures.push(format!("self-test interval ({t1}, {t2}) is not (1, 1)"));
        }
    }

    let mut out = sink(&args.output)?;
    match args.format {
        Format::Csv => write_csv(out.as_mut(), &reports)?,
        Format::Markdown => {
            let header: Vec<String> = ["bc", "coeff", "n", "alpha_post", "beta", "bound", "measured_contraction", "theta1", "theta2"]
                .iter()
                .map(|s| s.to_string())
                .collect();
            let rows: Vec<Vec<String>> = reports
                .iter()
                .map(|r| {
                    vec![
                        r.bc.to_string(),
                        r.coeff.clone(),
                        r.n.to_string(),
                        format!("{:.6}", r.alpha_post),
                        format!("{:.6}", r.beta),
                        format!("{:.6}", r.bound),
                        format!("{:.6}", r.measured_contraction),
                        format!("{:.6}", r.theta1),
                        format!("{:.6}", r.theta2),
                    ]
                })
                .collect();
            write_markdown(out.as_mut(), &header, &rows)?;
        }
    }
    out.flush()?;
    for f in &failures {
        eprintln!("FAIL {f}");
    }
    Ok(failures.is_empty())
}
