//! `revflow`: command-line driver for volume-preserving mean curvature flow
//! experiments on revolution hypersurfaces.
//!
//! Exit codes: 0 success, 1 configuration error, 2 numerical failure.

mod commands;
mod config;
mod plot;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Classify, CmdResult};

#[derive(Debug, Parser)]
#[command(name = "revflow", version, about = "Volume-preserving mean curvature flow of revolution hypersurfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML config file, or a summary.json written by `run`
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides [output].dir)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for `sweep` (default: available parallelism)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Reserved for randomized experiments; the solvers are deterministic
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the ambient space hypotheses and print the report
    Validate,
    /// Print the a-priori radii and the small-volume threshold of the initial profile
    Bounds,
    /// Run the flow and write history.csv, profile snapshots, a plot and summary.json
    Run,
    /// Solve for a constant-mean-curvature profile and write it as `z,r` CSV
    Cmc,
    /// Run every combination of [sweep] parameters and write sweep.csv
    Sweep,
}

fn dispatch(cli: &Cli) -> CmdResult<()> {
    let path = cli.config.as_ref().ok_or_else(|| anyhow::anyhow!("--config <path> is required")).config()?;
    let loaded = config::load(path).config()?;
    let cfg = &loaded.config;
    let out = cli.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    match cli.command {
        Command::Validate => commands::validate(cfg),
        Command::Bounds => commands::bounds(cfg),
        Command::Run => {
            let s = commands::run(cfg, &out)?;
            let kind = serde_json::to_value(s.reason.kind).expect("kind serializes");
            match s.reason.location {
                Some(z) => println!("{} at z = {z} (t = {}, {} steps)", kind.as_str().unwrap_or(""), s.final_record.t, s.steps),
                None => println!("{} (t = {}, {} steps)", kind.as_str().unwrap_or(""), s.final_record.t, s.steps),
            }
            commands::run_status(&s.reason)
        }
        Command::Cmc => commands::cmc(cfg, &out),
        Command::Sweep => {
            let jobs = match cli.jobs {
                Some(0) => return Err(commands::Failure::Config(anyhow::anyhow!("--jobs must be positive"))),
                Some(j) => j,
                None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            };
            let rows = sweep::sweep(&loaded, &out, jobs)?;
            println!("{rows} runs written to {}", out.join("sweep.csv").display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors, which is reserved for numerical failures here
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}
