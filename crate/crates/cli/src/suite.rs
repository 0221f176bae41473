//! Deterministic families of randomized scenarios.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use pipecrawl::sensors::NoiseConfig;
use pipecrawl::sim::NODES;
use pipecrawl::vehicle::VehicleConfig;
use pipecrawl::world::{
    DepositProfile, DiameterClass, EntranceEnvelope, EntranceOffset, FaultInjection, FaultKind,
    Fitting, FittingKind, Scenario,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndType {
    ClosedValve,
    OpenEnd,
    Reducer,
    SweptT,
}

impl EndType {
    pub const ALL: [EndType; 4] = [EndType::ClosedValve, EndType::OpenEnd, EndType::Reducer, EndType::SweptT];

    pub fn label(self) -> &'static str {
        match self {
            EndType::ClosedValve => "closed_valve",
            EndType::OpenEnd => "open_end",
            EndType::Reducer => "reducer",
            EndType::SweptT => "swept_t",
        }
    }
}

fn default_end_range() -> [f64; 2] {
    [3.0, 4.5]
}

fn default_offset_scale() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteSpec {
    /// Scenarios per end type, generated for every diameter.
    pub counts: BTreeMap<EndType, usize>,
    pub diameters: Vec<DiameterClass>,
    pub seed: u64,
    /// Probability that a scenario carries one injected fault.
    #[serde(default)]
    pub fault_fraction: f64,
    /// Range of end-fitting positions (m).
    #[serde(default = "default_end_range")]
    pub end_range: [f64; 2],
    /// Entrance offsets are drawn within this fraction of each tolerance.
    #[serde(default = "default_offset_scale")]
    pub offset_scale: f64,
}

impl SuiteSpec {
    pub fn per_type(n: usize, diameters: &[DiameterClass], seed: u64) -> Self {
        Self {
            counts: EndType::ALL.iter().map(|t| (*t, n)).collect(),
            diameters: diameters.to_vec(),
            seed,
            fault_fraction: 0.0,
            end_range: default_end_range(),
            offset_scale: default_offset_scale(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.fault_fraction) {
            return Err(format!("fault_fraction {} outside [0, 1]", self.fault_fraction));
        }
        let [lo, hi] = self.end_range;
        if !(lo.is_finite() && hi.is_finite() && lo >= 1.0 && hi >= lo) {
            return Err(format!("end_range [{lo}, {hi}] must satisfy 1 <= lo <= hi"));
        }
        if !(0.0..=1.0).contains(&self.offset_scale) {
            return Err(format!("offset_scale {} outside [0, 1]", self.offset_scale));
        }
        Ok(())
    }
}

/// Ground truth for one generated scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub name: String,
    pub diameter_class: DiameterClass,
    pub end_type: EndType,
    pub end_position: f64,
    pub seed: u64,
    pub faults: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub spec: SuiteSpec,
    pub scenarios: Vec<ManifestEntry>,
}

fn fault_label(k: &FaultKind) -> &'static str {
    match k {
        FaultKind::OverTemp { .. } => "over_temp",
        FaultKind::VoltageLow { .. } => "voltage_low",
        FaultKind::DiskFull => "disk_full",
        FaultKind::HeartbeatLoss { .. } => "heartbeat_loss",
        FaultKind::BatteryLow { .. } => "battery_low",
        FaultKind::EncoderScale { .. } => "encoder_scale",
        FaultKind::GainShift { .. } => "gain_shift",
        FaultKind::DeadDetector => "dead_detector",
        FaultKind::Contamination { .. } => "contamination",
        FaultKind::MotionStop { .. } => "motion_stop",
    }
}

fn random_fault(rng: &mut ChaCha8Rng, horizon: f64) -> FaultInjection {
    let kind = match rng.random_range(0..10) {
        0 => FaultKind::OverTemp { celsius: rng.random_range(80.0..100.0) },
        1 => FaultKind::VoltageLow { volts: rng.random_range(15.0..19.0) },
        2 => FaultKind::DiskFull,
        3 => FaultKind::HeartbeatLoss {
            node: NODES[rng.random_range(0..NODES.len())].to_string(),
        },
        4 => FaultKind::BatteryLow { hours: rng.random_range(0.0..0.03) },
        5 => FaultKind::EncoderScale { factor: rng.random_range(0.9..1.1) },
        6 => FaultKind::GainShift { factor: rng.random_range(1.03..1.08) },
        7 => FaultKind::DeadDetector,
        8 => FaultKind::Contamination { rate: rng.random_range(5.0..50.0) },
        _ => FaultKind::MotionStop { duration: rng.random_range(2.0..30.0) },
    };
    FaultInjection {
        time: rng.random_range(0.0..horizon),
        kind,
    }
}

fn random_deposit(rng: &mut ChaCha8Rng, length: f64) -> DepositProfile {
    let background_rate = rng.random_range(5.0..20.0);
    let breakpoints = match rng.random_range(0..3) {
        0 => {
            let a = rng.random_range(50.0..300.0);
            vec![[0.0, a], [length, a]]
        }
        1 => {
            let (a, b) = (rng.random_range(0.0..300.0), rng.random_range(0.0..300.0));
            vec![[0.0, a], [length, b]]
        }
        _ => {
            let p = rng.random_range(0.5..(length - 0.5).max(0.6));
            let peak = rng.random_range(2000.0..8000.0);
            vec![[p - 0.05, 0.0], [p, peak], [p + 0.05, 0.0]]
        }
    };
    DepositProfile {
        breakpoints,
        background_rate,
    }
}

fn random_entrance(rng: &mut ChaCha8Rng, scale: f64) -> EntranceOffset {
    let env = EntranceEnvelope::default();
    let mut sym = |lim: f64| if scale > 0.0 { rng.random_range(-lim * scale..=lim * scale) } else { 0.0 };
    let (dz, dy, yaw) = (sym(env.dz), sym(env.dy), sym(env.yaw));
    let (setback, step, gap) = (sym(env.setback).abs(), sym(env.step).abs(), sym(env.gap).abs());
    EntranceOffset { dz, dy, yaw, setback, step, gap }
}

fn end_fitting(rng: &mut ChaCha8Rng, t: EndType, position: f64, radius: f64) -> Fitting {
    let kind = match t {
        EndType::ClosedValve => FittingKind::ClosedValve,
        EndType::OpenEnd => FittingKind::OpenEnd,
        EndType::Reducer => FittingKind::Reducer {
            exit_radius: radius * rng.random_range(0.45..0.65),
        },
        EndType::SweptT => FittingKind::SweptT {
            branch_radius: radius * rng.random_range(0.8..1.0),
            clock_angle: rng.random_range(0.0..360.0),
        },
    };
    Fitting { position, kind }
}

/// Scenarios in generation order, paired with their manifest entries.
pub fn generate(spec: &SuiteSpec) -> Vec<(Scenario, ManifestEntry)> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::new();
    for &class in &spec.diameters {
        let radius = class.radius();
        let speed = VehicleConfig::for_class(class).speed;
        for (&t, &n) in &spec.counts {
            for i in 0..n {
                let name = format!("{}_{}_{i:03}", class.label(), t.label());
                let [lo, hi] = spec.end_range;
                let position = if hi > lo { rng.random_range(lo..hi) } else { lo };
                let pipe_length = if t == EndType::OpenEnd { position } else { position + 3.0 };
                let fitting = end_fitting(&mut rng, t, position, radius);
                let deposit = random_deposit(&mut rng, pipe_length);
                let entrance = random_entrance(&mut rng, spec.offset_scale);
                // Covers QC, both legs and docking.
                let horizon = 120.0 + 2.0 * position / speed;
                let faults = if rng.random_bool(spec.fault_fraction) {
                    vec![random_fault(&mut rng, horizon)]
                } else {
                    Vec::new()
                };
                let seed = rng.random::<u64>() >> 11;
                let entry = ManifestEntry {
                    file: format!("{name}.json"),
                    name: name.clone(),
                    diameter_class: class,
                    end_type: t,
                    end_position: position,
                    seed,
                    faults: faults.iter().map(|f| fault_label(&f.kind).to_string()).collect(),
                };
                let scenario = Scenario {
                    name,
                    diameter_class: class,
                    pipe_length,
                    commanded_distance: position + 10.0,
                    entrance,
                    fittings: vec![fitting],
                    deposit,
                    noise: NoiseConfig::default(),
                    faults,
                    seed,
                    within_tolerance: true,
                };
                out.push((scenario, entry));
            }
        }
    }
    out
}

pub fn read_spec(path: &Path) -> Result<SuiteSpec, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let spec: SuiteSpec = serde_json::from_str(&text).map_err(|e| CliError::Spec {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    spec.validate().map_err(|reason| CliError::Spec {
        path: path.to_path_buf(),
        reason,
    })?;
    Ok(spec)
}

/// Writes one file per scenario plus the manifest.
pub fn write_suite(spec: &SuiteSpec, out: &Path) -> Result<Manifest, CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let mut entries = Vec::new();
    for (scenario, entry) in generate(spec) {
        let path = out.join(&entry.file);
        fs::write(&path, scenario.to_json()).map_err(|e| CliError::io(&path, e))?;
        entries.push(entry);
    }
    let manifest = Manifest {
        spec: spec.clone(),
        scenarios: entries,
    };
    let path = out.join(MANIFEST);
    fs::write(&path, serde_json::to_string_pretty(&manifest).expect("manifest serializes"))
        .map_err(|e| CliError::io(&path, e))?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> Result<Manifest, CliError> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Spec {
        path,
        reason: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use pipecrawl::world::load_scenario;

    #[test]
    fn scenarios_validate_and_match_their_entries() {
        let mut spec = SuiteSpec::per_type(3, &[DiameterClass::D30, DiameterClass::D42], 5);
        spec.fault_fraction = 0.5;
        let all = generate(&spec);
        assert_eq!(all.len(), 24);
        for (s, e) in &all {
            let back = load_scenario(&s.to_json()).unwrap();
            assert_eq!(&back, s);
            assert_eq!(back.fittings.last().unwrap().position, e.end_position);
            assert!(back.fittings.last().unwrap().position <= back.commanded_distance);
        }
        assert!(all.iter().any(|(s, _)| !s.faults.is_empty()));
        assert!(all.iter().any(|(s, _)| s.faults.is_empty()));
    }

    #[test]
    fn spec_bounds_are_checked() {
        let mut spec = SuiteSpec::per_type(1, &[DiameterClass::D30], 1);
        spec.fault_fraction = 1.5;
        assert!(spec.validate().is_err());
        spec.fault_fraction = 0.0;
        spec.end_range = [0.2, 3.0];
        assert!(spec.validate().is_err());
    }
}
