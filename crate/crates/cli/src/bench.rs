use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::Result;
use clap::Args;
use serde::Serialize;

use wlmg::tables::{column, run_table, spread, CellResult, TableSpec, TABLE_IDS};
use wlmg::{BoundaryCondition, CycleKind, Reference};

use crate::output::{sink, write_csv, write_markdown, Format};

/// Largest iteration-count spread accepted along a column without
/// reference values.
const SPREAD_LIMIT: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableChoice {
    One(u8),
    All,
}

impl FromStr for TableChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("all") {
            return Ok(TableChoice::All);
        }
        match s.parse::<u8>() {
            Ok(id) if TABLE_IDS.contains(&id) => Ok(TableChoice::One(id)),
            _ => Err(format!("expected 1-6 or all, got `{s}`")),
        }
    }
}

#[derive(Debug, Args)]
#[command(after_help = "Dirichlet tables are compared cell by cell against stored reference counts \
    (tolerance ±2, ±3 for 2D Richardson+Richardson). Periodic and reflective tables use sizes n+1, \
    a random right-hand side and are checked for an iteration spread of at most 3 along each \
    convergent column, over two-grid sizes and multigrid sizes with at least three levels. The exit status is 1 when any check fails.\n\
    A pair X+Y smooths with Y before and X after the coarse correction.")]
pub struct BenchArgs {
    /// Table id 1-6 or all
    #[arg(long, default_value = "all")]
    pub table: TableChoice,
    #[arg(long, default_value = "dirichlet")]
    pub bc: BoundaryCondition,
    /// Seed of the random right-hand side used for periodic and reflective tables
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Skip sizes above this many unknowns per direction
    #[arg(long)]
    pub max_n: Option<usize>,
    #[arg(long, value_enum, default_value = "markdown")]
    pub format: Format,
    /// Output file; stdout when omitted
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct CellRow<'a> {
    table: u8,
    bc: BoundaryCondition,
    dim: usize,
    method: CycleKind,
    pair: &'a str,
    pre: String,
    post: String,
    n: usize,
    unknowns: usize,
    levels: usize,
    coeff: &'a str,
    iterations: String,
    converged: bool,
    reference: Option<String>,
    diff: Option<i64>,
    tolerance: Option<usize>,
    within_tolerance: Option<bool>,
    ops_per_iteration: f64,
}

fn diff_label(c: &CellResult) -> String {
    let body = match (c.reference, c.count()) {
        (None, _) => return "-".into(),
        (Some(Reference::Count(r)), Some(k)) => format!("{:+}", k as i64 - r as i64),
        (Some(Reference::Dagger), None) => "0".into(),
        (Some(r), _) => format!("{} vs {r}", c.display()),
    };
    if c.within_tolerance() == Some(false) {
        format!("{body}*")
    } else {
        body
    }
}

struct Checked {
    spec: TableSpec,
    cells: Vec<CellResult>,
    failures: Vec<String>,
    summary: String,
}

fn check(spec: TableSpec, cells: Vec<CellResult>) -> Checked {
    let mut failures = Vec::new();
    let summary = if spec.pairs.iter().any(|p| p.reference.is_some()) {
        let judged: Vec<&CellResult> = cells.iter().filter(|c| c.within_tolerance().is_some()).collect();
        for c in judged.iter().filter(|c| c.within_tolerance() == Some(false)) {
            failures.push(format!(
                "{} n={} {}: {} vs {}",
                c.pair,
                c.n,
                c.coeff,
                c.display(),
                c.reference.map(|r| r.to_string()).unwrap_or_default()
            ));
        }
        format!("{}/{} cells within tolerance", judged.len() - failures.len(), judged.len())
    } else {
        let mut convergent = 0;
        for p in &spec.pairs {
            for coeff in &spec.coeffs {
                // a multigrid column settles once its hierarchy has three levels
                let col: Vec<&CellResult> = column(&cells, p.label, coeff)
                    .into_iter()
                    .filter(|c| c.method == CycleKind::Tgm || c.levels >= 3)
                    .collect();
                if let Some(s) = spread(&col) {
                    convergent += 1;
                    if s > SPREAD_LIMIT {
                        failures.push(format!("{} {coeff}: spread {s}", p.label));
                    }
                }
            }
        }
        format!(
            "{}/{convergent} convergent columns with spread <= {SPREAD_LIMIT}",
            convergent - failures.len()
        )
    };
    Checked {
        spec,
        cells,
        failures,
        summary,
    }
}

fn markdown(out: &mut dyn Write, t: &Checked) -> Result<()> {
    let spec = &t.spec;
    writeln!(out, "## Table {}: {}\n", spec.id, spec.caption)?;
    for p in &spec.pairs {
        writeln!(out, "{} (pre {}, post {})\n", p.label, p.pre, p.post)?;
        let mut header = vec!["N".to_string()];
        header.extend(spec.coeffs.iter().cloned());
        if p.reference.is_some() {
            header.push(format!("diff (± {})", spec.tolerance(p)));
        }
        let mut rows = Vec::new();
        for &n in &spec.sizes {
            let row_cells: Vec<&CellResult> = spec
                .coeffs
                .iter()
                .filter_map(|c| t.cells.iter().find(|x| x.pair == p.label && x.n == n && &x.coeff == c))
                .collect();
            let mut row = vec![spec.size_label(n)];
            row.extend(row_cells.iter().map(|c| c.display()));
            if p.reference.is_some() {
                row.push(row_cells.iter().map(|c| diff_label(c)).collect::<Vec<_>>().join(", "));
            }
            rows.push(row);
        }
        write_markdown(out, &header, &rows)?;
        writeln!(out)?;
    }
    writeln!(out, "{}\n", t.summary)?;
    Ok(())
}

pub fn run(args: &BenchArgs) -> Result<bool> {
    let ids: Vec<u8> = match args.table {
        TableChoice::All => TABLE_IDS.to_vec(),
        TableChoice::One(id) => vec![id],
    };
    let mut checked = Vec::new();
    for id in ids {
        let mut spec = TableSpec::for_bc(id, args.bc, args.seed)?;
        if let Some(max) = args.max_n {
            spec = spec.truncated(max);
        }
        let cells = run_table(&spec)?;
        let t = check(spec, cells);
        eprintln!("table {} ({}): {}", t.spec.id, t.spec.bc, t.summary);
        for f in &t.failures {
            eprintln!("  {f}");
        }
        checked.push(t);
    }

    let mut out = sink(&args.output)?;
    match args.format {
        Format::Csv => {
            let mut rows = Vec::new();
            for t in &checked {
                for c in &t.cells {
                    let pair = t.spec.pairs.iter().find(|p| p.label == c.pair).expect("pair of cell");
                    rows.push(CellRow {
                        table: c.table,
                        bc: c.bc,
                        dim: c.dim,
                        method: c.method,
                        pair: &c.pair,
                        pre: pair.pre.to_string(),
                        post: pair.post.to_string(),
                        n: c.n,
                        unknowns: c.unknowns,
                        levels: c.levels,
                        coeff: &c.coeff,
                        iterations: c.display(),
                        converged: c.converged,
                        reference: c.reference.map(|r| r.to_string()),
                        diff: c.diff(),
                        tolerance: c.reference.map(|_| c.tolerance),
                        within_tolerance: c.within_tolerance(),
                        ops_per_iteration: c.ops_per_iteration,
                    });
                }
            }
            write_csv(out.as_mut(), &rows)?;
        }
        Format::Markdown => {
            for t in &checked {
                markdown(out.as_mut(), t)?;
            }
        }
    }
    out.flush()?;
    Ok(checked.iter().all(|t| t.failures.is_empty()))
}
