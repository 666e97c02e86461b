//! Command-line front end over the batch pipeline.
//!
//! Exit codes: 0 when every warning processed cleanly, 1 when some warnings
//! recorded failures (or a patch broke the order check), 2 for unusable
//! configuration.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fragcheck::pipeline::{cmd_patch, cmd_validate, cmd_verify, render_table, RunConfig};
use fragcheck::runner::{DEFAULT_BUDGET, DEFAULT_INPUTS};

#[derive(Parser)]
#[command(name = "fragcheck", version, about = "Check static-analysis warnings by running their code paths")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Project manifest listing the source files
    #[arg(long)]
    manifest: PathBuf,
    /// Warnings file to process
    #[arg(long)]
    warnings: PathBuf,
    /// Directory for reports and per-warning outputs
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Grammar file; the built-in MiniC grammar when omitted
    #[arg(long)]
    grammar: Option<PathBuf>,
    /// Test inputs generated per warning
    #[arg(long, default_value_t = DEFAULT_INPUTS)]
    inputs: usize,
    /// Seed for input generation
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Loop unroll bound for the control-flow check
    #[arg(long, default_value_t = 2)]
    bound: usize,
    /// Token budget for the brute-force minimality audit (0 = off)
    #[arg(long, default_value_t = 0)]
    oracle_bound: usize,
    /// Interpreter step budget per test run
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u64,
    /// Line slack when matching failures to warned lines
    #[arg(long, default_value_t = 0)]
    line_tolerance: u32,
    /// Worker threads (0 = library default)
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

impl Common {
    fn into_config(self) -> RunConfig {
        RunConfig {
            grammar: self.grammar,
            manifest: self.manifest,
            warnings: self.warnings,
            inputs: self.inputs,
            seed: self.seed,
            bound: self.bound,
            oracle_bound: self.oracle_bound,
            budget: self.budget,
            line_tolerance: self.line_tolerance,
            workers: self.workers,
            outdir: self.out,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Patch each warning's fragment into a small parseable program
    Patch(Common),
    /// Check each patch: structure, statement order, and optional minimality
    Verify(Common),
    /// Run the full pipeline and classify every warning
    Validate(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let failed = match cli.command {
        Command::Patch(common) => cmd_patch(&common.into_config()).map(|b| b.has_failures()),
        Command::Verify(common) => cmd_verify(&common.into_config()).map(|b| b.has_failures()),
        Command::Validate(common) => cmd_validate(&common.into_config()).map(|report| {
            print!("{}", render_table(&report));
            report.has_failures()
        }),
    };
    match failed {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(1),
        Err(e) => {
            // everything fatal here is a config problem: bad flags, missing
            // paths, or project files that do not load
            eprintln!("fragcheck: {e}");
            ExitCode::from(2)
        }
    }
}
