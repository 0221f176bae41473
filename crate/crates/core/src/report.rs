//! Run report and the fixed-precision serialization shared by all outputs.

use serde::Serialize;
use serde_json::Value;

use crate::executive::Transition;
use crate::radiometry::{Contamination, PerFootReport, QcResult};
use crate::safeguarding::{Cause, Source};
use crate::world::FittingTag;

/// Rounds to 9 significant digits so output is stable across platforms.
pub fn round9(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.8e}").parse().expect("formatted float parses")
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if let (None, None, Some(f)) = (n.as_u64(), n.as_i64(), n.as_f64()) {
                if let Some(r) = serde_json::Number::from_f64(round9(f)) {
                    *n = r;
                }
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_value),
        Value::Object(o) => o.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON with every float rounded by [`round9`].
pub fn to_rounded_json<T: Serialize>(value: &T) -> String {
    let mut v = serde_json::to_value(value).expect("report serializes");
    round_value(&mut v);
    let mut s = serde_json::to_string_pretty(&v).expect("value serializes");
    s.push('\n');
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Termination {
    QcPost,
    Fault,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EndReport {
    pub cause: Cause,
    pub source: Source,
    /// Distance ahead reported when the condition triggered.
    pub distance: f64,
    pub stamp: f64,
    /// On-board detector position at the trigger, when the entrance was known.
    pub odometer: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalizationSummary {
    pub entrance_stamp: f64,
    pub entrance_degenerate: bool,
    pub rangefinder_calibration: f64,
    pub fixes: usize,
    pub nodes: usize,
    pub max_sigma: f64,
}

/// Ground-truth diagnostics. Only the simulator can fill these in.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TruthSummary {
    pub entered_pipe: bool,
    /// First terminal fitting or reducer built into the scenario.
    pub expected_end: Option<FittingTag>,
    pub max_penetration: f64,
    /// Largest |estimate - truth| of the detector position while in the pipe.
    pub max_drift: Option<f64>,
    /// First accepted fix on the way back after a rangefinder dropout.
    pub reacquired_at: Option<f64>,
    /// Largest error after the reacquisition settled.
    pub reconvergence_error: Option<f64>,
    /// Detector position when the reverse leg began.
    pub reversal_x: Option<f64>,
    /// Gap between the mapper and the terminal fitting when reversing began.
    pub stop_standoff: Option<f64>,
    /// Distance from the deployment pose after docking.
    pub dock_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Alert {
    pub stamp: f64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub scenario_digest: String,
    pub scenario_name: String,
    pub seed: u64,
    pub diameter_class: String,
    pub termination: Termination,
    pub fault: Option<String>,
    pub deploy_error: Option<String>,
    pub qc_pre: Option<QcResult>,
    pub qc_post: Option<QcResult>,
    pub contamination: Option<Contamination>,
    pub end_condition: Option<EndReport>,
    pub reversal_reason: Option<String>,
    pub localization: Option<LocalizationSummary>,
    pub localization_error: Option<String>,
    pub truth: TruthSummary,
    pub per_foot: Option<PerFootReport>,
    pub transitions: Vec<Transition>,
    pub alerts: Vec<Alert>,
    pub duration: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding() {
        assert_eq!(round9(0.1 + 0.2), 0.3);
        assert_eq!(round9(1.0 / 3.0), 0.333333333);
        assert_eq!(round9(-123456.7891234), -123456.789);
        assert_eq!(round9(0.0), 0.0);
        assert!(round9(f64::NAN).is_nan());
        let s = to_rounded_json(&serde_json::json!({"a": [0.30000000000000004, 7], "b": {"c": 2.0000000001}}));
        assert!(s.contains("0.3") && !s.contains("0.30000000000000004"));
        assert!(s.contains("\"c\": 2.0"));
    }
}
