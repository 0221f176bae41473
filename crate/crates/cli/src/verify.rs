//! Evaluates acceptance criteria against a bundle of completed runs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::artifacts::{REPORT, RUN_META};
use crate::error::CliError;

pub const DRIFT_LIMIT: f64 = 0.10;
pub const DRIFT_QUORUM: f64 = 0.95;
pub const RUNTIME_LIMIT: f64 = 60.0;
pub const RECONVERGENCE_LIMIT: f64 = 0.03;
pub const SPREAD_LIMIT: f64 = 0.10;
pub const DOCK_LIMIT: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// Nothing in the bundle exercises the criterion.
    Skip,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub status: Status,
    pub evaluated: usize,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub runs: usize,
    pub pass: bool,
    pub criteria: Vec<CriterionResult>,
}

/// One run directory as read back from disk.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub dir: PathBuf,
    pub raw: String,
    pub report: Value,
    pub wall_seconds: Option<f64>,
}

impl RunRecord {
    fn truth(&self, key: &str) -> Option<f64> {
        self.report["truth"][key].as_f64()
    }

    fn str_at(&self, ptr: &str) -> Option<&str> {
        self.report.pointer(ptr).and_then(Value::as_str)
    }

    fn label(&self) -> String {
        self.dir.display().to_string()
    }
}

fn collect(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), CliError> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| CliError::io(dir, err)))
        .collect::<Result<_, _>>()?;
    entries.sort();
    if entries.iter().any(|p| p.file_name().is_some_and(|n| n == REPORT)) {
        out.push(dir.to_path_buf());
    }
    for p in entries.into_iter().filter(|p| p.is_dir()) {
        collect(&p, out)?;
    }
    Ok(())
}

/// Finds every run directory under `roots`. A root without any report is
/// an error.
pub fn load_runs(roots: &[PathBuf]) -> Result<Vec<RunRecord>, CliError> {
    let mut runs = Vec::new();
    for root in roots {
        let mut dirs = Vec::new();
        collect(root, &mut dirs)?;
        if dirs.is_empty() {
            return Err(CliError::NoReports(root.clone()));
        }
        for dir in dirs {
            let path = dir.join(REPORT);
            let raw = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
            let report: Value = serde_json::from_str(&raw).map_err(|e| CliError::Report {
                path: path.clone(),
                reason: e.to_string(),
            })?;
            if !report.get("termination").is_some_and(Value::is_string) {
                return Err(CliError::Report {
                    path,
                    reason: "missing termination".into(),
                });
            }
            let wall_seconds = fs::read_to_string(dir.join(RUN_META))
                .ok()
                .and_then(|t| serde_json::from_str::<Value>(&t).ok())
                .and_then(|m| m["wall_seconds"].as_f64());
            runs.push(RunRecord {
                dir,
                raw,
                report,
                wall_seconds,
            });
        }
    }
    Ok(runs)
}

fn result(id: u8, name: &'static str, evaluated: usize, failures: Vec<String>, ok_detail: String) -> CriterionResult {
    let status = if evaluated == 0 {
        Status::Skip
    } else if failures.is_empty() {
        Status::Pass
    } else {
        Status::Fail
    };
    let detail = if evaluated == 0 {
        "no applicable runs".to_string()
    } else if failures.is_empty() {
        ok_detail
    } else {
        failures.join("; ")
    };
    CriterionResult {
        id,
        name,
        status,
        evaluated,
        detail,
    }
}

fn skipped(id: u8, name: &'static str, why: &str) -> CriterionResult {
    CriterionResult {
        id,
        name,
        status: Status::Skip,
        evaluated: 0,
        detail: why.to_string(),
    }
}

pub fn localization_drift(runs: &[RunRecord]) -> CriterionResult {
    let with: Vec<&RunRecord> = runs.iter().filter(|r| r.truth("max_drift").is_some()).collect();
    let good = with
        .iter()
        .filter(|r| r.truth("max_drift").is_some_and(|d| d <= DRIFT_LIMIT))
        .count();
    let mut failures = Vec::new();
    if !with.is_empty() && (good as f64) < DRIFT_QUORUM * with.len() as f64 {
        failures.push(format!("{good}/{} runs within {DRIFT_LIMIT} m", with.len()));
    }
    for r in &with {
        if let Some(w) = r.wall_seconds.filter(|w| *w > RUNTIME_LIMIT) {
            failures.push(format!("{} took {w:.1} s", r.label()));
        }
    }
    let worst = with.iter().filter_map(|r| r.truth("max_drift")).fold(0.0, f64::max);
    result(
        1,
        "localization_drift",
        with.len(),
        failures,
        format!("{good}/{} runs within {DRIFT_LIMIT} m, worst {worst:.4} m", with.len()),
    )
}

pub fn reconvergence(runs: &[RunRecord]) -> CriterionResult {
    let with: Vec<(&RunRecord, f64)> = runs
        .iter()
        .filter_map(|r| r.truth("reconvergence_error").map(|e| (r, e)))
        .collect();
    let failures = with
        .iter()
        .filter(|(_, e)| *e > RECONVERGENCE_LIMIT)
        .map(|(r, e)| format!("{}: {e:.4} m", r.label()))
        .collect();
    let worst = with.iter().map(|x| x.1).fold(0.0, f64::max);
    result(2, "reconvergence", with.len(), failures, format!("worst {worst:.4} m"))
}

/// Runs of the same scenario file stop within a narrow band of the fitting.
pub fn end_repeatability(runs: &[RunRecord]) -> CriterionResult {
    let mut groups: BTreeMap<(&str, &str), Vec<f64>> = BTreeMap::new();
    for r in runs {
        if r.report["end_condition"].is_null() {
            continue;
        }
        if let (Some(d), Some(s)) = (r.str_at("/scenario_digest"), r.truth("stop_standoff")) {
            groups
                .entry((r.str_at("/scenario_name").unwrap_or(""), d))
                .or_default()
                .push(s);
        }
    }
    groups.retain(|_, v| v.len() >= 2);
    let mut failures = Vec::new();
    let mut spreads = Vec::new();
    for ((name, _), v) in &groups {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        spreads.push(format!("{name}: {:.4} m over {}", hi - lo, v.len()));
        if hi - lo > SPREAD_LIMIT {
            failures.push(format!("{name}: spread {:.4} m over {} runs", hi - lo, v.len()));
        }
    }
    result(3, "end_repeatability", groups.len(), failures, spreads.join("; "))
}

/// Cause the end-condition detector should report for a built-in fitting.
pub fn expected_cause(tag: &str) -> Option<&'static str> {
    match tag {
        "closed_valve" => Some("ClosedPipe"),
        "open_end" => Some("OpenEnd"),
        "reducer" => Some("Reducer"),
        "swept_t" => Some("Obstacle"),
        _ => None,
    }
}

pub fn end_classification(runs: &[RunRecord]) -> CriterionResult {
    let mut evaluated = 0;
    let mut failures = Vec::new();
    for r in runs {
        let Some(want) = r.str_at("/truth/expected_end").and_then(expected_cause) else {
            continue;
        };
        let got = r.str_at("/end_condition/cause");
        // Runs cut short by a fault never reached the fitting.
        let drove_past = r
            .str_at("/reversal_reason")
            .is_some_and(|s| s.starts_with("commanded distance"));
        if got.is_none() && !drove_past {
            continue;
        }
        evaluated += 1;
        if got != Some(want) {
            failures.push(format!("{}: expected {want}, got {}", r.label(), got.unwrap_or("none")));
        }
    }
    result(4, "end_classification", evaluated, failures, format!("{evaluated} correct"))
}

pub fn safe_return(runs: &[RunRecord]) -> CriterionResult {
    let mut failures = Vec::new();
    for r in runs {
        let entered = r.report["truth"]["entered_pipe"].as_bool().unwrap_or(false);
        let term = r.str_at("/termination").unwrap_or("");
        if !entered {
            continue;
        }
        if term != "QcPost" {
            failures.push(format!("{}: terminated in {term} after entering", r.label()));
            continue;
        }
        match r.truth("dock_error") {
            Some(e) if e.abs() <= DOCK_LIMIT => {}
            Some(e) => failures.push(format!("{}: docked {e:.4} m off", r.label())),
            None => failures.push(format!("{}: no dock recorded", r.label())),
        }
    }
    let entered = runs
        .iter()
        .filter(|r| r.report["truth"]["entered_pipe"].as_bool() == Some(true))
        .count();
    result(
        5,
        "safe_return",
        runs.len(),
        failures,
        format!("{} runs, {entered} entered and docked", runs.len()),
    )
}

pub fn radiometric_conservation(runs: &[RunRecord]) -> CriterionResult {
    let mut evaluated = 0;
    let mut failures = Vec::new();
    for r in runs {
        let pf = &r.report["per_foot"];
        if pf.is_null() {
            continue;
        }
        evaluated += 1;
        let sum = |key: &str| -> u64 {
            pf[key]
                .as_array()
                .map_or(0, |a| a.iter().filter_map(|s| s["roi_counts"].as_u64()).sum())
        };
        let total = sum("forward") + sum("reverse") + sum("unlocalized");
        let acquired = pf["acquired_counts"].as_u64().unwrap_or(u64::MAX);
        if total != acquired {
            failures.push(format!("{}: {total} counts binned of {acquired}", r.label()));
        }
    }
    result(
        11,
        "radiometric_consistency",
        evaluated,
        failures,
        "count conservation exact; profile checks need deposit truth".into(),
    )
}

pub fn determinism(runs: &[RunRecord]) -> CriterionResult {
    let mut groups: BTreeMap<(String, u64), Vec<&RunRecord>> = BTreeMap::new();
    for r in runs {
        if let (Some(d), Some(s)) = (r.str_at("/scenario_digest"), r.report["seed"].as_u64()) {
            groups.entry((d.to_string(), s)).or_default().push(r);
        }
    }
    groups.retain(|_, v| v.len() >= 2);
    let failures = groups
        .values()
        .filter(|v| v.iter().any(|r| r.raw != v[0].raw))
        .map(|v| format!("{} differs from {}", v[1].label(), v[0].label()))
        .collect();
    result(12, "determinism", groups.len(), failures, format!("{} repeated pairs identical", groups.len()))
}

pub fn evaluate(runs: &[RunRecord]) -> Summary {
    let library = "library oracle; covered by the acceptance test target";
    let criteria = vec![
        localization_drift(runs),
        reconvergence(runs),
        end_repeatability(runs),
        end_classification(runs),
        safe_return(runs),
        skipped(6, "deployment_envelope", "needs scenario offsets; covered by the acceptance test target"),
        skipped(7, "factor_graph_oracle", library),
        skipped(8, "ransac_robustness", library),
        skipped(9, "fir_properties", library),
        skipped(10, "qc_statistics", library),
        radiometric_conservation(runs),
        determinism(runs),
    ];
    Summary {
        runs: runs.len(),
        pass: criteria.iter().all(|c| c.status != Status::Fail),
        criteria,
    }
}
