//! Command-line plumbing for pipecrawl: run artifacts, scenario suites and
//! bundle verification.

pub mod artifacts;
pub mod error;
pub mod suite;
pub mod verify;

pub use error::CliError;

use std::path::{Path, PathBuf};
use std::process::Command;

use rayon::prelude::*;

/// Worker count for suite execution: `PIPECRAWL_THREADS` when set, else the
/// number of available cores.
pub fn suite_threads() -> usize {
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    std::env::var("PIPECRAWL_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|n| *n > 0)
        .unwrap_or(cores)
}

/// Outcome of one scenario run as a child process.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteRun {
    pub scenario: PathBuf,
    pub out: PathBuf,
    pub exit_code: Option<i32>,
}

/// Runs each scenario in its own `pipecrawl run` process, at most
/// [`suite_threads`] at a time. Outputs go to `out/<file stem>`.
pub fn run_suite(exe: &Path, scenarios: &[PathBuf], out: &Path) -> Result<Vec<SuiteRun>, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(suite_threads())
        .build()
        .expect("thread pool");
    pool.install(|| {
        scenarios
            .par_iter()
            .map(|sc| {
                let stem = sc.file_stem().map_or_else(|| "run".into(), |s| s.to_os_string());
                let dir = out.join(stem);
                let status = Command::new(exe)
                    .arg("run")
                    .arg(sc)
                    .arg("--out")
                    .arg(&dir)
                    .status()
                    .map_err(|e| CliError::io(exe, e))?;
                Ok(SuiteRun {
                    scenario: sc.clone(),
                    out: dir,
                    exit_code: status.code(),
                })
            })
            .collect()
    })
}
