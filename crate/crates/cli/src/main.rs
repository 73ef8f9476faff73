mod bench;
mod output;
mod solve;
mod verify;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

fn after_help() -> String {
    format!(
        "Coefficient presets: {}.\n\
         Any other --coeff value is read as an expression in x and y, e.g. \"1+x*x\".\n\
         Smoothers: richardson (r), gauss-seidel (gs), cg, cg(k).",
        wlmg::Preset::HELP
    )
}

#[derive(Parser)]
#[command(name = "wlmg", version, about = "Multigrid for weighted Laplacians with structured coarse operators", after_help = after_help())]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem per size and report iterations, residuals and op counts.
    #[command(after_help = after_help())]
    Solve(solve::SolveArgs),
    /// Run the benchmark tables, comparing against stored reference counts.
    Bench(bench::BenchArgs),
    /// Dense checks of two-grid theory constants.
    #[command(after_help = after_help())]
    Verify(verify::VerifyArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(args) => solve::run(&args),
        Command::Bench(args) => bench::run(&args),
        Command::Verify(args) => verify::run(&args),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
