use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pipecrawl_cli::artifacts::{run_to_dir, EXIT_INPUT};
use pipecrawl_cli::suite::{read_manifest, read_spec, write_suite};
use pipecrawl_cli::verify::{evaluate, load_runs};
use pipecrawl_cli::{run_suite, CliError};

/// Exit code of `verify` when a criterion fails.
const EXIT_CRITERIA: u8 = 3;

#[derive(Parser)]
#[command(name = "pipecrawl", version, about = "In-pipe gamma assay crawler simulator")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario and write run_log.csv, report.json and per_foot.csv.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Generate a deterministic family of scenarios from a suite spec.
    GenSuite {
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every scenario of a generated suite, one process each.
    RunSuite {
        suite: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate acceptance criteria over completed runs.
    Verify {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INPUT as u8)
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<u8, CliError> {
    match cmd {
        Cmd::Run { scenario, out, seed } => {
            let a = run_to_dir(&scenario, &out, seed)?;
            let r = &a.report;
            if let Some(f) = &r.fault {
                eprintln!("fault: {f}");
            }
            eprintln!(
                "{:?} after {:.2} s simulated ({:.1} s wall)",
                r.termination, r.duration, a.meta.wall_seconds
            );
            Ok(a.meta.exit_code as u8)
        }
        Cmd::GenSuite { spec, out } => {
            let spec = read_spec(&spec)?;
            let m = write_suite(&spec, &out)?;
            eprintln!("wrote {} scenarios to {}", m.scenarios.len(), out.display());
            Ok(0)
        }
        Cmd::RunSuite { suite, out } => {
            let manifest = read_manifest(&suite)?;
            let files: Vec<PathBuf> = manifest.scenarios.iter().map(|e| suite.join(&e.file)).collect();
            let exe = std::env::current_exe().map_err(|e| CliError::io("pipecrawl", e))?;
            let runs = run_suite(&exe, &files, &out)?;
            let crashed: Vec<_> = runs.iter().filter(|r| !matches!(r.exit_code, Some(0 | 2))).collect();
            for r in &crashed {
                eprintln!("{}: exit {:?}", r.scenario.display(), r.exit_code);
            }
            eprintln!("ran {} scenarios into {}", runs.len(), out.display());
            Ok(if crashed.is_empty() { 0 } else { EXIT_INPUT as u8 })
        }
        Cmd::Verify { dirs } => {
            let runs = load_runs(&dirs)?;
            let summary = evaluate(&runs);
            println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
            Ok(if summary.pass { 0 } else { EXIT_CRITERIA })
        }
    }
}
