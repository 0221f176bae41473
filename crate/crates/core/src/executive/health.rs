use std::collections::BTreeMap;

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HealthTelemetry {
    /// Internal temperatures, °C.
    pub temps: Vec<f64>,
    pub voltages: Vec<f64>,
    pub disk_free: u64,
    /// Last heartbeat stamp per software node.
    pub node_heartbeats: BTreeMap<String, f64>,
    /// Battery hours remaining.
    pub battery: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HealthLimits {
    pub temp_warn: f64,
    pub temp_hard: f64,
    pub nominal_voltage: f64,
    /// Relative voltage deviations.
    pub volt_warn: f64,
    pub volt_hard: f64,
    /// Bytes the run needs to store.
    pub disk_required: u64,
    pub heartbeat_stale: f64,
    /// Battery must cover this multiple of the time needed to drive back.
    pub battery_reserve: f64,
}

impl Default for HealthLimits {
    fn default() -> Self {
        Self {
            temp_warn: 70.0,
            temp_hard: 80.0,
            nominal_voltage: 24.0,
            volt_warn: 0.10,
            volt_hard: 0.20,
            disk_required: 4 << 30,
            heartbeat_stale: 1.0,
            battery_reserve: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum HealthStatus {
    Ok,
    Alert(Vec<String>),
    Fault(String),
}

impl HealthStatus {
    pub fn is_fault(&self) -> bool {
        matches!(self, HealthStatus::Fault(_))
    }
}

/// `now` is the current stamp; `return_hours` the time needed to drive back
/// to the rig from the present position.
pub fn health_check(
    t: &HealthTelemetry,
    limits: &HealthLimits,
    now: f64,
    return_hours: f64,
) -> HealthStatus {
    let mut alerts = Vec::new();
    for &c in &t.temps {
        if c >= limits.temp_hard {
            return HealthStatus::Fault(format!("temperature {c:.1} C at hard limit"));
        }
        if c >= limits.temp_warn {
            alerts.push(format!("temperature {c:.1} C above warning"));
        }
    }
    for &v in &t.voltages {
        let dev = (v - limits.nominal_voltage).abs() / limits.nominal_voltage;
        if dev >= limits.volt_hard {
            return HealthStatus::Fault(format!("voltage {v:.2} V out of range"));
        }
        if dev >= limits.volt_warn {
            alerts.push(format!("voltage {v:.2} V off nominal"));
        }
    }
    if t.disk_free < limits.disk_required {
        return HealthStatus::Fault(format!(
            "disk free {} B below required {} B",
            t.disk_free, limits.disk_required
        ));
    }
    for (node, stamp) in &t.node_heartbeats {
        if now - stamp > limits.heartbeat_stale {
            return HealthStatus::Fault(format!("node {node} heartbeat stale"));
        }
    }
    if t.battery < limits.battery_reserve * return_hours {
        return HealthStatus::Fault(format!(
            "battery {:.2} h below reserve for a {:.2} h return",
            t.battery, return_hours
        ));
    }
    if alerts.is_empty() {
        HealthStatus::Ok
    } else {
        HealthStatus::Alert(alerts)
    }
}
