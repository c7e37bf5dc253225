//! `wpt-dq` command line front end.
//!
//! Exit codes: 0 success, 2 config error, 3 numerical failure,
//! 4 acceptance-bound violation in --check mode.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use wpt_dq::error::Error;
use wpt_dq::scenario::{
    load_scenario, run_frequency_sweep, run_identify_sweep, run_phase_check, run_step_response,
    RunOptions, RunOutcome,
};

#[derive(Parser)]
#[command(name = "wpt-dq", version, about = "SP-compensated WPT dq-model toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario config file (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Output directory for CSVs and the manifest
    #[arg(long)]
    out: PathBuf,
    /// Also run the time-domain oracle where optional
    #[arg(long)]
    oracle: bool,
    /// Enforce the acceptance bounds; violations exit with code 4
    #[arg(long)]
    check: bool,
    /// Seed for optional noise injection; default runs are noise-free
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Frequency sweep: phasor vs dq steady state, optional oracle spots
    Sweep(Common),
    /// dc-voltage step: oracle envelope vs dq magnitude
    Step(Common),
    /// Initial-phase verification per frequency
    Phase(Common),
    /// Mutual-inductance identification over a (k, load) grid
    Identify(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, common) = match &cli.command {
        Command::Sweep(c) => ("sweep", c),
        Command::Step(c) => ("step", c),
        Command::Phase(c) => ("phase", c),
        Command::Identify(c) => ("identify", c),
    };

    let scenario = match load_scenario(&common.config) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let opts = RunOptions {
        oracle: common.oracle,
        check: common.check,
        seed: common.seed,
    };

    let result = match &cli.command {
        Command::Sweep(_) => run_frequency_sweep(&scenario, &common.out, &opts),
        Command::Step(_) => run_step_response(&scenario, &common.out, &opts),
        Command::Phase(_) => run_phase_check(&scenario, &common.out, &opts),
        Command::Identify(_) => run_identify_sweep(&scenario, &common.out, &opts),
    };

    match result {
        Ok(outcome) => report(name, &outcome, common.check),
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}

fn report(name: &str, outcome: &RunOutcome, check: bool) -> ExitCode {
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    for e in &outcome.hard_errors {
        eprintln!("point failed: {e}");
    }
    if check {
        for e in &outcome.check_failures {
            eprintln!("bound violated: {e}");
        }
    }
    if !outcome.hard_errors.is_empty() {
        eprintln!("{name}: completed with {} failed points", outcome.hard_errors.len());
        return ExitCode::from(3);
    }
    if check && !outcome.check_failures.is_empty() {
        eprintln!(
            "{name}: {} acceptance bound(s) violated",
            outcome.check_failures.len()
        );
        return ExitCode::from(4);
    }
    println!("{name}: ok");
    ExitCode::SUCCESS
}
