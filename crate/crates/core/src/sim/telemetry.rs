use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::executive::HealthTelemetry;
use crate::sensors::DetectorState;
use crate::world::{FaultInjection, FaultKind};

pub const NODES: [&str; 4] = ["executive", "localization", "perception", "radiometry"];
const BATTERY_HOURS: f64 = 6.0;

/// Plant condition changed by injected faults.
#[derive(Debug, Clone, PartialEq)]
pub struct Plant {
    pub telemetry: HealthTelemetry,
    pub detector: DetectorState,
    pub encoder_scale: f64,
    /// Until this stamp the tracks spin without moving the robot.
    pub stuck_until: f64,
    stale: Vec<String>,
    battery_offset: f64,
}

impl Plant {
    pub fn new() -> Self {
        Self {
            telemetry: HealthTelemetry {
                temps: vec![38.0, 42.0],
                voltages: vec![24.0, 24.0],
                disk_free: 64 << 30,
                node_heartbeats: NODES.iter().map(|n| (n.to_string(), 0.0)).collect(),
                battery: BATTERY_HOURS,
            },
            detector: DetectorState::default(),
            encoder_scale: 1.0,
            stuck_until: f64::NEG_INFINITY,
            stale: Vec::new(),
            battery_offset: 0.0,
        }
    }

    pub fn apply(&mut self, f: &FaultInjection) {
        let t = &mut self.telemetry;
        match &f.kind {
            FaultKind::OverTemp { celsius } => t.temps[0] = *celsius,
            FaultKind::VoltageLow { volts } => t.voltages[0] = *volts,
            FaultKind::DiskFull => t.disk_free = 512 << 20,
            FaultKind::HeartbeatLoss { node } => self.stale.push(node.clone()),
            FaultKind::BatteryLow { hours } => {
                self.battery_offset = BATTERY_HOURS - f.time / 3600.0 - hours;
            }
            FaultKind::EncoderScale { factor } => self.encoder_scale = *factor,
            FaultKind::GainShift { factor } => self.detector.gain = *factor,
            FaultKind::DeadDetector => self.detector.dead = true,
            FaultKind::Contamination { rate } => self.detector.contamination += rate,
            FaultKind::MotionStop { duration } => self.stuck_until = f.time + duration,
        }
    }

    /// Refreshes heartbeats, battery and sensor jitter for stamp `now`.
    pub fn tick<R: Rng>(&mut self, now: f64, rng: &mut R) -> &HealthTelemetry {
        let t = &mut self.telemetry;
        let beats: BTreeMap<String, f64> = NODES
            .iter()
            .map(|n| {
                let last = if self.stale.iter().any(|s| s == n) {
                    t.node_heartbeats.get(*n).copied().unwrap_or(0.0)
                } else {
                    now
                };
                (n.to_string(), last)
            })
            .collect();
        t.node_heartbeats = beats;
        t.battery = (BATTERY_HOURS - now / 3600.0 - self.battery_offset).max(0.0);
        let jitter = Normal::new(0.0, 0.05).unwrap();
        // Only the sensor that a fault has not pinned wanders.
        t.temps[1] = 42.0 + jitter.sample(rng);
        t.voltages[1] = 24.0 + 0.1 * jitter.sample(rng);
        t
    }
}

impl Default for Plant {
    fn default() -> Self {
        Self::new()
    }
}
