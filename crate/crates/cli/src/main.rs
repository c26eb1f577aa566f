use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use semiclass::harness::{configure, emit_report, run_experiment, EXPERIMENTS};
use semiclass::symbolics::{STANDARD_KERNELS, STANDARD_SYMBOLS};
use semiclass::{init_threads, Error, THREADS_ENV};

const VERDICT_FAILED: u8 = 2;
const CONFIG_ERROR: u8 = 3;

/// Semiclassical convergence experiments on discretized boundary operators.
#[derive(Parser)]
#[command(name = "semiclass", version, after_help = concat!(
    "Exit codes: 0 all verdicts pass, 1 runtime failure, 2 verdict failure, 3 configuration error.\n",
    "Threads: SEMICLASS_THREADS (default: machine parallelism)."
))]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write <id>.csv and <id>.json.
    Run {
        #[arg(long)]
        experiment: String,
        /// TOML file overlaid on the experiment's preset.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Record per-row wall time in the CSV (makes it nondeterministic).
        #[arg(long)]
        timings: bool,
        /// Print the resolved configuration and exit.
        #[arg(long)]
        print_config: bool,
    },
    /// List experiment ids.
    List,
    /// List the standard symbols and boundary kernels.
    Catalog,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(CONFIG_ERROR) } else { ExitCode::SUCCESS };
        }
    };
    match cli.command {
        Command::List => {
            for e in EXPERIMENTS {
                println!("{:<28}{}", e.id, e.summary);
            }
            ExitCode::SUCCESS
        }
        Command::Catalog => {
            println!("symbols:");
            for (id, about) in STANDARD_SYMBOLS {
                println!("  {id:<30}{about}");
            }
            println!("kernels:");
            for (id, about) in STANDARD_KERNELS {
                println!("  {id:<40}{about}");
            }
            println!("grammar: family[:key=value,...]");
            println!("  gauss   c b v0 k a|rx|lx x0, and vt0 kt xt0 with dim=2");
            println!("  bump    as gauss with rv in place of b");
            println!("  rank1   c alpha p beta q tau dim");
            println!("  zero    dim");
            ExitCode::SUCCESS
        }
        Command::Run { experiment, config, out, timings, print_config } => {
            run(&experiment, config, &out, timings, print_config)
        }
    }
}

fn run(id: &str, config: Option<PathBuf>, out: &std::path::Path, timings: bool, print_config: bool) -> ExitCode {
    let fail = |e: Error| {
        eprintln!("error: {e}");
        ExitCode::from(if e.is_config() { CONFIG_ERROR } else { 1 })
    };
    let mut cfg = match configure(id, config.as_deref()) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(CONFIG_ERROR);
        }
    };
    cfg.report.timings |= timings;
    if print_config {
        print!("{}", cfg.to_toml_string());
        return ExitCode::SUCCESS;
    }
    let threads = match init_threads() {
        Ok(n) => n,
        Err(e) => return fail(e),
    };
    eprintln!("{id}: {threads} threads ({THREADS_ENV})");
    let report = match run_experiment(&cfg) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    for row in report.rows.iter().filter(|r| r.error.is_some()) {
        println!("FAILED ROW  hbar={:e} {}: {}", row.hbar, row.label, row.error.as_deref().unwrap_or(""));
    }
    for v in &report.verdicts {
        let tag = if v.passed { "PASS" } else { "FAIL" };
        println!("{tag}  {:<22} {:>11.4e}  threshold {:<8e}  {}", v.name, v.measured, v.threshold, v.detail);
    }
    for note in &report.notes {
        println!("note: {note}");
    }
    match emit_report(&report, out) {
        Ok((csv, json)) => println!("wrote {} and {}", csv.display(), json.display()),
        Err(e) => return fail(e),
    }
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(VERDICT_FAILED)
    }
}
