use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use xva_core::cli::{load_config, run, Mode};

#[derive(Parser)]
#[command(name = "xva", version, about = "XVA engine for interest-rate swap portfolios")]
struct Args {
    #[command(subcommand)]
    verb: Verb,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override the worker thread count.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Run the invariant checks and exit nonzero on a hard violation.
    #[arg(long, global = true)]
    check: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Verb {
    /// Write the configured portfolio as CSV.
    Generate,
    /// One-period XVA of a discrete deal.
    Static,
    /// Dynamic XVA profiles of the portfolio.
    Dynamic,
    /// Learned CVA against nested Monte Carlo.
    Validate,
    /// XVA changes from adding trades.
    Incremental,
    /// Run the mode named in the config with all checks enabled.
    Check,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let (mut cfg, text) = match &args.config {
        Some(p) => match load_config(p) {
            Ok(v) => v,
            Err(e) => {
                eprintln!("{}: {e}", p.display());
                return ExitCode::from(2);
            }
        },
        None => Default::default(),
    };
    match args.verb {
        Verb::Generate => cfg.mode = Mode::Generate,
        Verb::Static => cfg.mode = Mode::Static,
        Verb::Dynamic => cfg.mode = Mode::Dynamic,
        Verb::Validate => cfg.mode = Mode::Validate,
        Verb::Incremental => cfg.mode = Mode::Incremental,
        Verb::Check => cfg.check = true,
    }
    cfg.seed = args.seed.unwrap_or(cfg.seed);
    cfg.out = args.out.unwrap_or(cfg.out);
    cfg.workers = args.workers.unwrap_or(cfg.workers);
    cfg.check |= args.check;

    let outcome = match run(&cfg, &text) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    println!("{} run wrote {} files to {}", cfg.mode.name(), outcome.files.len(), outcome.out.display());
    if cfg.check {
        let passed = outcome.checks.iter().filter(|c| c.passed).count();
        println!("checks: {passed} passed, {} failed", outcome.checks.len() - passed);
        for c in outcome.checks.iter().filter(|c| !c.passed) {
            println!("  {} [{}] {}", c.name, if c.hard { "hard" } else { "soft" }, c.detail);
        }
        if !outcome.hard_failures().is_empty() {
            return ExitCode::from(1);
        }
    }
    ExitCode::SUCCESS
}
