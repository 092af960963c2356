use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand as ClapSubcommand};

use fsistab::run::{exit_code, load_config, run_subcommand, Subcommand};

#[derive(Parser)]
#[command(name = "fsistab", version, about = "Linearized flow-plate interaction simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(ClapSubcommand)]
enum Command {
    /// Evolve from the initial data and write the energy trace.
    Simulate(Common),
    /// Dense spectrum of the generator.
    Spectrum(Common),
    /// Null-vector residual and compatibility check.
    Nullspace(Common),
    /// Exponential fit and Datko test of the energy trace.
    Decay(Common),
    /// Multiplier ledger along a run.
    Diagnose(Common),
    /// Built-in invariant checks.
    Selftest(Common),
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` config file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, overriding `out` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for random initial data.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let (cmd, common) = match cli.command {
        Command::Simulate(c) => (Subcommand::Simulate, c),
        Command::Spectrum(c) => (Subcommand::Spectrum, c),
        Command::Nullspace(c) => (Subcommand::Nullspace, c),
        Command::Decay(c) => (Subcommand::Decay, c),
        Command::Diagnose(c) => (Subcommand::Diagnose, c),
        Command::Selftest(c) => (Subcommand::Selftest, c),
    };
    let result = load_config(common.config.as_deref()).and_then(|mut cfg| {
        if let Some(out) = common.out {
            cfg.out = out;
        }
        if let Some(seed) = common.seed {
            cfg = cfg.with_seed(seed);
        }
        run_subcommand(cmd, &cfg)
    });
    match &result {
        Ok(outcome) => {
            for (k, v) in &outcome.summary {
                println!("{k} {v}");
            }
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            if !outcome.pass {
                eprintln!("fsistab {cmd}: check failed");
            }
        }
        Err(e) => eprintln!("fsistab {cmd}: {e}"),
    }
    ExitCode::from(exit_code(&result) as u8)
}
