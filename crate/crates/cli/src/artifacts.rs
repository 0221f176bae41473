//! Files written by a single run.

use std::fs;
use std::path::Path;
use std::time::Instant;

use pipecrawl::radiometry::{FootSegment, PerFootReport};
use pipecrawl::report::{round9, to_rounded_json, RunReport};
use pipecrawl::sim::{run, SimConfig, TickRecord};
use pipecrawl::world::{load_scenario, Scenario};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const RUN_LOG: &str = "run_log.csv";
pub const REPORT: &str = "report.json";
pub const PER_FOOT: &str = "per_foot.csv";
pub const RUN_META: &str = "run_meta.json";

/// Process exit code for a scenario that could not be read or validated.
pub const EXIT_INPUT: i32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMeta {
    pub exit_code: i32,
    pub wall_seconds: f64,
}

#[derive(Debug)]
pub struct RunArtifacts {
    pub report: RunReport,
    pub meta: RunMeta,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn read_scenario(path: &Path) -> Result<(Scenario, String), CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let text = String::from_utf8_lossy(&bytes);
    let scenario = load_scenario(&text).map_err(|source| CliError::Scenario {
        path: path.to_path_buf(),
        source,
    })?;
    Ok((scenario, sha256_hex(&bytes)))
}

/// Runs the scenario at `path` and writes every artifact into `out`.
pub fn run_to_dir(path: &Path, out: &Path, seed: Option<u64>) -> Result<RunArtifacts, CliError> {
    let (scenario, digest) = read_scenario(path)?;
    let seed = seed.unwrap_or(scenario.seed);
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let t0 = Instant::now();
    let output = run(&scenario, &digest, seed, &SimConfig::default());
    let wall_seconds = t0.elapsed().as_secs_f64();

    write_log(&out.join(RUN_LOG), &output.log)?;
    let report_path = out.join(REPORT);
    fs::write(&report_path, to_rounded_json(&output.report)).map_err(|e| CliError::io(&report_path, e))?;
    write_per_foot(&out.join(PER_FOOT), output.report.per_foot.as_ref())?;
    let meta = RunMeta {
        exit_code: output.exit_code(),
        wall_seconds,
    };
    let meta_path = out.join(RUN_META);
    fs::write(&meta_path, serde_json::to_string_pretty(&meta).expect("meta serializes"))
        .map_err(|e| CliError::io(&meta_path, e))?;
    Ok(RunArtifacts {
        report: output.report,
        meta,
    })
}

fn write_log(path: &Path, log: &[TickRecord]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    for rec in log {
        w.serialize(rec)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

#[derive(Serialize)]
struct FootRow<'a> {
    pass: &'static str,
    index: i64,
    start_m: f64,
    end_m: f64,
    start_ft: f64,
    end_ft: f64,
    roi_counts: u64,
    exposure: f64,
    rate: f64,
    sigma: f64,
    position_sigma: f64,
    content: Option<f64>,
    flags: &'a str,
}

fn write_per_foot(path: &Path, report: Option<&PerFootReport>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    if let Some(r) = report {
        for (pass, segs) in [("forward", &r.forward), ("reverse", &r.reverse)] {
            for s in segs {
                let flags = s.flags.join(";");
                w.serialize(foot_row(pass, s, &flags))?;
            }
        }
    } else {
        // Header only, so downstream readers always see the same columns.
        w.write_record([
            "pass", "index", "start_m", "end_m", "start_ft", "end_ft", "roi_counts", "exposure",
            "rate", "sigma", "position_sigma", "content", "flags",
        ])?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn foot_row<'a>(pass: &'static str, s: &FootSegment, flags: &'a str) -> FootRow<'a> {
    FootRow {
        pass,
        index: s.index,
        start_m: round9(s.start_m),
        end_m: round9(s.end_m),
        start_ft: round9(s.start_ft),
        end_ft: round9(s.end_ft),
        roi_counts: s.roi_counts,
        exposure: round9(s.exposure),
        rate: round9(s.rate),
        sigma: round9(s.sigma),
        position_sigma: round9(s.position_sigma),
        content: s.content.map(round9),
        flags,
    }
}
