use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use pipecrawl::world::load_scenario;
use pipecrawl_cli::artifacts::sha256_hex;
use pipecrawl_cli::suite::{read_manifest, EndType};
use serde_json::{json, Value};
use tempfile::tempdir;

fn pipecrawl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pipecrawl"))
        .args(args)
        .env("PIPECRAWL_THREADS", "1")
        .output()
        .unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const SHORT: &str = r#"{"name": "short", "diameter_class": "D30", "pipe_length": 5, "commanded_distance": 2,
  "seed": 4, "deposit": {"breakpoints": [[0, 80], [5, 80]]}}"#;

#[test]
fn run_writes_all_artifacts() {
    let dir = tempdir().unwrap();
    let sc = dir.path().join("short.json");
    fs::write(&sc, SHORT).unwrap();
    let out = dir.path().join("out");
    let o = pipecrawl(&["run", p(&sc), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let report: Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["termination"], "QcPost");
    assert_eq!(report["scenario_digest"], sha256_hex(SHORT.as_bytes()));
    assert_eq!(report["seed"], 4);
    assert!(report["truth"]["max_drift"].as_f64().unwrap() <= 0.10);

    let mut log = csv::Reader::from_path(out.join("run_log.csv")).unwrap();
    let headers = log.headers().unwrap().clone();
    assert_eq!(&headers[0], "stamp");
    assert!(headers.iter().any(|h| h == "x_est") && headers.iter().any(|h| h == "alerts"));
    let stamps: Vec<f64> = log.records().map(|r| r.unwrap()[0].parse().unwrap()).collect();
    assert!(stamps.windows(2).all(|w| w[1] > w[0]));
    let duration = report["duration"].as_f64().unwrap();
    assert!((stamps.last().unwrap() - duration).abs() < 0.05);

    let mut pf = csv::Reader::from_path(out.join("per_foot.csv")).unwrap();
    assert_eq!(&pf.headers().unwrap()[0], "pass");
    let counts: u64 = pf.records().map(|r| r.unwrap()[6].parse::<u64>().unwrap()).sum();
    let loose: u64 = report["per_foot"]["unlocalized"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["roi_counts"].as_u64().unwrap())
        .sum();
    assert_eq!(counts + loose, report["per_foot"]["acquired_counts"].as_u64().unwrap());

    // Seed override changes the run but not the digest.
    let out2 = dir.path().join("out2");
    assert_eq!(pipecrawl(&["run", p(&sc), "--out", p(&out2), "--seed", "9"]).status.code(), Some(0));
    let r2: Value = serde_json::from_str(&fs::read_to_string(out2.join("report.json")).unwrap()).unwrap();
    assert_eq!(r2["seed"], 9);
    assert_eq!(r2["scenario_digest"], report["scenario_digest"]);
}

#[test]
fn out_of_envelope_gap_exits_2() {
    let dir = tempdir().unwrap();
    let sc = dir.path().join("gap.json");
    fs::write(&sc, r#"{"diameter_class": "D42", "pipe_length": 5, "commanded_distance": 2, "seed": 1, "entrance": {"gap": 0.3}}"#).unwrap();
    let out = dir.path().join("out");
    let o = pipecrawl(&["run", p(&sc), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(2));
    let report: Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert!(report["fault"].as_str().unwrap().starts_with("DeployError"));
    assert!(report["deploy_error"].is_string());
}

#[test]
fn malformed_scenario_exits_1() {
    let dir = tempdir().unwrap();
    let sc = dir.path().join("bad.json");
    fs::write(&sc, r#"{"diameter_class": "D30", "pipe_length": -3"#).unwrap();
    let out = dir.path().join("out");
    let o = pipecrawl(&["run", p(&sc), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.json"));
    assert!(!out.join("report.json").exists());
    assert_eq!(pipecrawl(&["run", "/nonexistent.json", "--out", p(&out)]).status.code(), Some(1));
}

#[test]
fn gen_suite_is_deterministic_and_matches_its_manifest() {
    let dir = tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(
        &spec,
        r#"{"counts": {"closed_valve": 5, "open_end": 5, "reducer": 5, "swept_t": 5}, "diameters": ["D30", "D42"], "seed": 7, "fault_fraction": 0.3}"#,
    )
    .unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(pipecrawl(&["gen-suite", p(&spec), "--out", p(&a)]).status.code(), Some(0));
    assert_eq!(pipecrawl(&["gen-suite", p(&spec), "--out", p(&b)]).status.code(), Some(0));

    let manifest = read_manifest(&a).unwrap();
    assert_eq!(manifest.scenarios.len(), 40);
    assert_eq!(fs::read_dir(&a).unwrap().count(), 41);
    for e in &manifest.scenarios {
        let bytes = fs::read(a.join(&e.file)).unwrap();
        assert_eq!(bytes, fs::read(b.join(&e.file)).unwrap(), "{}", e.file);
        let s = load_scenario(std::str::from_utf8(&bytes).unwrap()).unwrap();
        assert!(s.within_tolerance);
        assert_eq!(s.name, e.name);
        assert_eq!(s.diameter_class, e.diameter_class);
        assert_eq!(s.seed, e.seed);
        let end = s.fittings.last().unwrap();
        assert_eq!(end.position, e.end_position);
        let tag = serde_json::to_value(end.kind.tag()).unwrap();
        assert_eq!(tag, serde_json::to_value(e.end_type).unwrap());
        assert_eq!(s.faults.len(), e.faults.len());
    }
    for t in EndType::ALL {
        assert_eq!(manifest.scenarios.iter().filter(|e| e.end_type == t).count(), 10);
    }
    assert_eq!(fs::read(a.join("manifest.json")).unwrap(), fs::read(b.join("manifest.json")).unwrap());
}

#[test]
fn zero_counts_make_an_empty_suite() {
    let dir = tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(&spec, r#"{"counts": {"reducer": 0}, "diameters": ["D30"], "seed": 1}"#).unwrap();
    let out = dir.path().join("s");
    assert_eq!(pipecrawl(&["gen-suite", p(&spec), "--out", p(&out)]).status.code(), Some(0));
    assert!(read_manifest(&out).unwrap().scenarios.is_empty());
    fs::write(&spec, r#"{"counts": {"elbow": 2}, "diameters": ["D30"], "seed": 1}"#).unwrap();
    assert_eq!(pipecrawl(&["gen-suite", p(&spec), "--out", p(&out)]).status.code(), Some(1));
}

#[test]
fn run_suite_fans_out_one_process_per_scenario() {
    let dir = tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(&spec, r#"{"counts": {"swept_t": 1}, "diameters": ["D30"], "seed": 3}"#).unwrap();
    let suite = dir.path().join("suite");
    let runs = dir.path().join("runs");
    assert_eq!(pipecrawl(&["gen-suite", p(&spec), "--out", p(&suite)]).status.code(), Some(0));
    let o = pipecrawl(&["run-suite", p(&suite), "--out", p(&runs)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(runs.join("D30_swept_t_000").join("report.json").exists());
    let v = pipecrawl(&["verify", p(&runs)]);
    assert_eq!(v.status.code(), Some(0), "{}", String::from_utf8_lossy(&v.stdout));
}

fn fake_report(name: &str, drift: f64, dock: f64) -> Value {
    json!({
        "scenario_digest": format!("digest-{name}"),
        "scenario_name": name,
        "seed": 1,
        "termination": "QcPost",
        "end_condition": {"cause": "ClosedPipe", "distance": 1.9},
        "reversal_reason": "end condition",
        "truth": {
            "entered_pipe": true,
            "expected_end": "closed_valve",
            "max_drift": drift,
            "reconvergence_error": 0.004,
            "stop_standoff": 0.3,
            "dock_error": dock
        },
        "per_foot": {"forward": [{"roi_counts": 5}], "reverse": [{"roi_counts": 7}], "unlocalized": [], "acquired_counts": 12}
    })
}

fn write_bundle(root: &Path, reports: &[Value]) {
    for (i, r) in reports.iter().enumerate() {
        let d = root.join(format!("run{i:02}"));
        fs::create_dir_all(&d).unwrap();
        fs::write(d.join("report.json"), serde_json::to_string_pretty(r).unwrap()).unwrap();
    }
}

fn verdicts(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn verify_passes_a_clean_bundle() {
    let dir = tempdir().unwrap();
    let reports: Vec<Value> = (0..4).map(|i| fake_report(&format!("r{i}"), 0.03, 0.001)).collect();
    write_bundle(dir.path(), &reports);
    let o = pipecrawl(&["verify", p(dir.path())]);
    assert_eq!(o.status.code(), Some(0));
    let v = verdicts(&o);
    assert_eq!(v["runs"], 4);
    assert_eq!(v["criteria"].as_array().unwrap().len(), 12);
    assert_eq!(v["criteria"][0]["status"], "pass");
}

#[test]
fn verify_names_the_failing_criterion() {
    let dir = tempdir().unwrap();
    let mut reports: Vec<Value> = (0..4).map(|i| fake_report(&format!("r{i}"), 0.03, 0.001)).collect();
    reports[2]["truth"]["max_drift"] = json!(0.4);
    write_bundle(dir.path(), &reports);
    let o = pipecrawl(&["verify", p(dir.path())]);
    assert_eq!(o.status.code(), Some(3));
    let v = verdicts(&o);
    let failed: Vec<&str> = v["criteria"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["status"] == "fail")
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(failed, ["localization_drift"]);
}

#[test]
fn verify_rejects_empty_and_missing_dirs() {
    let dir = tempdir().unwrap();
    let o = pipecrawl(&["verify", p(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no run reports"));
    assert_eq!(pipecrawl(&["verify", "/definitely/not/here"]).status.code(), Some(1));
    assert_ne!(pipecrawl(&["verify"]).status.code(), Some(0));
}
