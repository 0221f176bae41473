//! Declarative scenario documents and their validation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sensors::NoiseConfig;

/// Axial length of a reducer's linear taper.
pub const TAPER_LENGTH: f64 = 0.3;
/// Axial length of a swept-T's outer sweep surface.
pub const SWEEP_LENGTH: f64 = 0.5;
/// Thickness of a closed valve disc.
pub const VALVE_THICKNESS: f64 = 0.05;
/// Radial depth of a port pocket beyond the pipe wall.
pub const PORT_DEPTH: f64 = 0.10;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid scenario field `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

impl ScenarioError {
    fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DiameterClass {
    D30,
    D42,
}

impl DiameterClass {
    /// Nominal inner radius in meters (76 cm and 107 cm inner diameters).
    pub fn radius(self) -> f64 {
        match self {
            DiameterClass::D30 => 0.381,
            DiameterClass::D42 => 0.5334,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            DiameterClass::D30 => "D30",
            DiameterClass::D42 => "D42",
        }
    }
}

/// Placement error of the launch rig relative to the pipe entrance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EntranceOffset {
    /// Vertical offset of the rig trough, + up (m).
    pub dz: f64,
    /// Lateral offset of the rig trough (m).
    pub dy: f64,
    /// Rig yaw relative to the pipe axis (degrees).
    pub yaw: f64,
    /// How far back the robot sits from the rig front (m).
    pub setback: f64,
    /// Height of the entrance lip the tracks must climb (m).
    pub step: f64,
    /// Open gap between rig and pipe entrance (m).
    pub gap: f64,
}

/// Deployment tolerance envelope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntranceEnvelope {
    pub dz: f64,
    pub dy: f64,
    pub yaw: f64,
    pub setback: f64,
    pub step: f64,
    pub gap: f64,
}

impl Default for EntranceEnvelope {
    fn default() -> Self {
        Self {
            dz: 0.02,
            dy: 0.025,
            yaw: 6.0,
            setback: 0.05,
            step: 0.05,
            gap: 0.18,
        }
    }
}

impl EntranceOffset {
    /// Returns the first component outside `env`, as `(name, value, limit)`.
    pub fn violation(&self, env: &EntranceEnvelope) -> Option<(&'static str, f64, f64)> {
        let checks = [
            ("dz", self.dz.abs(), env.dz),
            ("dy", self.dy.abs(), env.dy),
            ("yaw", self.yaw.abs(), env.yaw),
            ("setback", self.setback, env.setback),
            ("step", self.step, env.step),
            ("gap", self.gap, env.gap),
        ];
        checks
            .into_iter()
            .find(|(_, v, lim)| *v > *lim + 1e-12)
    }
}

fn default_obstacle_width() -> f64 {
    30.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FittingKind {
    Reducer {
        exit_radius: f64,
    },
    SweptT {
        branch_radius: f64,
        clock_angle: f64,
    },
    ClosedValve,
    OpenEnd,
    Obstacle {
        height: f64,
        length: f64,
        clock_angle: f64,
        #[serde(default = "default_obstacle_width")]
        angular_width: f64,
    },
    Hole {
        axial_extent: f64,
        angular_extent: f64,
        clock_angle: f64,
    },
    Port {
        radius: f64,
        clock_angle: f64,
    },
}

/// Data-free tag for a fitting kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FittingTag {
    Reducer,
    SweptT,
    ClosedValve,
    OpenEnd,
    Obstacle,
    Hole,
    Port,
}

impl FittingKind {
    pub fn tag(&self) -> FittingTag {
        match self {
            FittingKind::Reducer { .. } => FittingTag::Reducer,
            FittingKind::SweptT { .. } => FittingTag::SweptT,
            FittingKind::ClosedValve => FittingTag::ClosedValve,
            FittingKind::OpenEnd => FittingTag::OpenEnd,
            FittingKind::Obstacle { .. } => FittingTag::Obstacle,
            FittingKind::Hole { .. } => FittingTag::Hole,
            FittingKind::Port { .. } => FittingTag::Port,
        }
    }

    /// Fittings past which there is no more pipe to traverse.
    pub fn is_terminal(&self) -> bool {
        matches!(
            self,
            FittingKind::SweptT { .. } | FittingKind::ClosedValve | FittingKind::OpenEnd
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fitting {
    pub position: f64,
    #[serde(flatten)]
    pub kind: FittingKind,
}

impl Fitting {
    /// Axial interval occupied by the fitting.
    pub fn extent(&self) -> (f64, f64) {
        let p = self.position;
        match &self.kind {
            FittingKind::Reducer { .. } => (p, p + TAPER_LENGTH),
            FittingKind::SweptT { .. } => (p, p + SWEEP_LENGTH),
            FittingKind::ClosedValve => (p, p + VALVE_THICKNESS),
            FittingKind::OpenEnd => (p, p),
            FittingKind::Obstacle { length, .. } => (p, p + length),
            FittingKind::Hole { axial_extent, .. } => (p, p + axial_extent),
            FittingKind::Port { radius, .. } => (p - radius, p + radius),
        }
    }
}

/// Piecewise-linear line activity of 186 keV emitters along the pipe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DepositProfile {
    /// `(x, a)` pairs: position (m) and emissions/s per meter.
    pub breakpoints: Vec<[f64; 2]>,
    /// ROI background (counts/s).
    pub background_rate: f64,
}

impl Default for DepositProfile {
    fn default() -> Self {
        Self {
            breakpoints: Vec::new(),
            background_rate: 10.0,
        }
    }
}

impl DepositProfile {
    /// Line activity at `x`; zero outside the breakpoint span.
    pub fn activity_at(&self, x: f64) -> f64 {
        let bp = &self.breakpoints;
        if bp.is_empty() || x < bp[0][0] || x > bp[bp.len() - 1][0] {
            return 0.0;
        }
        if bp.len() == 1 {
            return if x == bp[0][0] { bp[0][1] } else { 0.0 };
        }
        let i = bp.partition_point(|b| b[0] <= x).clamp(1, bp.len() - 1);
        let [x0, a0] = bp[i - 1];
        let [x1, a1] = bp[i];
        a0 + (a1 - a0) * (x - x0) / (x1 - x0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FaultKind {
    OverTemp { celsius: f64 },
    VoltageLow { volts: f64 },
    DiskFull,
    HeartbeatLoss { node: String },
    BatteryLow { hours: f64 },
    EncoderScale { factor: f64 },
    GainShift { factor: f64 },
    DeadDetector,
    Contamination { rate: f64 },
    MotionStop { duration: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultInjection {
    /// Seconds after run start.
    pub time: f64,
    #[serde(flatten)]
    pub kind: FaultKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub diameter_class: DiameterClass,
    pub pipe_length: f64,
    pub commanded_distance: f64,
    #[serde(default)]
    pub entrance: EntranceOffset,
    #[serde(default)]
    pub fittings: Vec<Fitting>,
    #[serde(default)]
    pub deposit: DepositProfile,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub faults: Vec<FaultInjection>,
    pub seed: u64,
    /// When set, the entrance offsets must lie inside the deployment envelope.
    #[serde(default)]
    pub within_tolerance: bool,
}

/// Parses and validates a scenario document.
pub fn load_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let scenario: Scenario = serde_json::from_str(text)?;
    scenario.validate()?;
    Ok(scenario)
}

impl Scenario {
    pub fn radius(&self) -> f64 {
        self.diameter_class.radius()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let finite = |field: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(ScenarioError::invalid(field, "must be finite"))
            }
        };
        finite("pipe_length", self.pipe_length)?;
        finite("commanded_distance", self.commanded_distance)?;
        if self.pipe_length <= 0.0 {
            return Err(ScenarioError::invalid("pipe_length", "must be > 0"));
        }
        if self.commanded_distance <= 0.0 {
            return Err(ScenarioError::invalid("commanded_distance", "must be > 0"));
        }
        let e = &self.entrance;
        for (name, v) in [
            ("entrance.dz", e.dz),
            ("entrance.dy", e.dy),
            ("entrance.yaw", e.yaw),
            ("entrance.setback", e.setback),
            ("entrance.step", e.step),
            ("entrance.gap", e.gap),
        ] {
            finite(name, v)?;
        }
        if e.setback < 0.0 || e.step < 0.0 || e.gap < 0.0 {
            return Err(ScenarioError::invalid(
                "entrance",
                "setback, step and gap must be non-negative",
            ));
        }
        if self.within_tolerance {
            if let Some((name, v, lim)) = e.violation(&EntranceEnvelope::default()) {
                return Err(ScenarioError::invalid(
                    format!("entrance.{name}"),
                    format!("{v} exceeds the deployment tolerance {lim}"),
                ));
            }
        }
        self.validate_fittings()?;
        self.validate_deposit()?;
        self.noise.validate().map_err(|r| ScenarioError::invalid("noise", r))?;
        for (i, f) in self.faults.iter().enumerate() {
            if !f.time.is_finite() || f.time < 0.0 {
                return Err(ScenarioError::invalid(
                    format!("faults[{i}].time"),
                    "must be a non-negative finite time",
                ));
            }
        }
        Ok(())
    }

    fn validate_fittings(&self) -> Result<(), ScenarioError> {
        let mut radius = self.radius();
        let mut prev_end = f64::NEG_INFINITY;
        let n = self.fittings.len();
        for (i, f) in self.fittings.iter().enumerate() {
            let field = format!("fittings[{i}]");
            if !f.position.is_finite() {
                return Err(ScenarioError::invalid(field, "position must be finite"));
            }
            let (lo, hi) = f.extent();
            if lo < 0.0 || hi > self.pipe_length {
                return Err(ScenarioError::invalid(
                    field,
                    format!("extent [{lo}, {hi}] outside pipe [0, {}]", self.pipe_length),
                ));
            }
            if i > 0 && f.position < self.fittings[i - 1].position {
                return Err(ScenarioError::invalid(field, "fittings must be sorted by position"));
            }
            if lo < prev_end {
                return Err(ScenarioError::invalid(field, "overlaps the previous fitting"));
            }
            prev_end = hi;
            if f.kind.is_terminal() && i + 1 != n {
                return Err(ScenarioError::invalid(field, "terminal fitting must be the last fitting"));
            }
            let positive = |name: &str, v: f64| {
                if v.is_finite() && v > 0.0 {
                    Ok(())
                } else {
                    Err(ScenarioError::invalid(format!("fittings[{i}].{name}"), "must be > 0"))
                }
            };
            match &f.kind {
                FittingKind::Reducer { exit_radius } => {
                    positive("exit_radius", *exit_radius)?;
                    if *exit_radius >= radius {
                        return Err(ScenarioError::invalid(
                            format!("fittings[{i}].exit_radius"),
                            format!("{exit_radius} must be smaller than the pipe radius {radius}"),
                        ));
                    }
                    radius = *exit_radius;
                }
                FittingKind::SweptT { branch_radius, clock_angle } => {
                    positive("branch_radius", *branch_radius)?;
                    if *branch_radius > radius || !clock_angle.is_finite() {
                        return Err(ScenarioError::invalid(
                            format!("fittings[{i}].branch_radius"),
                            "branch radius must not exceed the pipe radius",
                        ));
                    }
                }
                FittingKind::ClosedValve | FittingKind::OpenEnd => {}
                FittingKind::Obstacle { height, length, angular_width, clock_angle } => {
                    positive("height", *height)?;
                    positive("length", *length)?;
                    positive("angular_width", *angular_width)?;
                    if *height >= radius || *angular_width >= 360.0 || !clock_angle.is_finite() {
                        return Err(ScenarioError::invalid(
                            format!("fittings[{i}]"),
                            "obstacle must fit inside the pipe",
                        ));
                    }
                }
                FittingKind::Hole { axial_extent, angular_extent, clock_angle } => {
                    positive("axial_extent", *axial_extent)?;
                    positive("angular_extent", *angular_extent)?;
                    if *angular_extent >= 360.0 || !clock_angle.is_finite() {
                        return Err(ScenarioError::invalid(
                            format!("fittings[{i}].angular_extent"),
                            "must be below 360 degrees",
                        ));
                    }
                }
                FittingKind::Port { radius: pr, clock_angle } => {
                    positive("radius", *pr)?;
                    if *pr >= radius || !clock_angle.is_finite() {
                        return Err(ScenarioError::invalid(
                            format!("fittings[{i}].radius"),
                            "port radius must be smaller than the pipe radius",
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    fn validate_deposit(&self) -> Result<(), ScenarioError> {
        let d = &self.deposit;
        if !d.background_rate.is_finite() || d.background_rate < 0.0 {
            return Err(ScenarioError::invalid("deposit.background_rate", "must be >= 0"));
        }
        for (i, b) in d.breakpoints.iter().enumerate() {
            if !b[0].is_finite() || !b[1].is_finite() || b[1] < 0.0 {
                return Err(ScenarioError::invalid(
                    format!("deposit.breakpoints[{i}]"),
                    "activity must be finite and non-negative",
                ));
            }
            if i > 0 && b[0] <= d.breakpoints[i - 1][0] {
                return Err(ScenarioError::invalid(
                    format!("deposit.breakpoints[{i}]"),
                    "positions must be strictly increasing",
                ));
            }
        }
        Ok(())
    }

    /// The first fitting that ends the run, if any, with the kind the
    /// safeguarding pipeline is expected to report for it.
    pub fn first_blocking_fitting(&self, max_step: f64) -> Option<&Fitting> {
        self.fittings.iter().find(|f| match &f.kind {
            FittingKind::Obstacle { height, .. } => *height > max_step,
            FittingKind::Hole { .. } | FittingKind::Port { .. } => false,
            _ => true,
        })
    }

    /// Axial position where the pipe tube ends.
    pub fn tube_end(&self) -> f64 {
        match self.fittings.last() {
            Some(f) if matches!(f.kind, FittingKind::OpenEnd) => f.position,
            _ => self.pipe_length,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "diameter_class": "D30",
        "pipe_length": 35.0,
        "commanded_distance": 33.0,
        "seed": 1,
        "fittings": [{"kind": "closed_valve", "position": 30.0}]
    }"#;

    #[test]
    fn minimal_document_loads() {
        let s = load_scenario(MINIMAL).unwrap();
        assert_eq!(s.radius(), 0.381);
        assert_eq!(s.fittings.len(), 1);
        assert_eq!(s.fittings[0].kind, FittingKind::ClosedValve);
        assert_eq!(s.noise, NoiseConfig::default());
    }

    #[test]
    fn d42_radius() {
        assert_eq!(DiameterClass::D42.radius(), 0.5334);
    }

    #[test]
    fn out_of_order_fittings_rejected() {
        let text = r#"{
            "diameter_class": "D30", "pipe_length": 35.0, "commanded_distance": 10.0, "seed": 1,
            "fittings": [
                {"kind": "port", "position": 12.0, "radius": 0.05, "clock_angle": 0},
                {"kind": "port", "position": 5.0, "radius": 0.05, "clock_angle": 0}
            ]
        }"#;
        let err = load_scenario(text).unwrap_err();
        assert!(matches!(err, ScenarioError::Invalid { .. }), "{err}");
    }

    #[test]
    fn oversized_reducer_rejected() {
        let text = r#"{
            "diameter_class": "D30", "pipe_length": 35.0, "commanded_distance": 10.0, "seed": 1,
            "fittings": [{"kind": "reducer", "position": 5.0, "exit_radius": 0.5}]
        }"#;
        let err = load_scenario(text).unwrap_err();
        match err {
            ScenarioError::Invalid { field, .. } => assert!(field.contains("exit_radius")),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn missing_field_is_named() {
        let err = load_scenario(r#"{"diameter_class": "D30", "pipe_length": 3.0, "seed": 1}"#)
            .unwrap_err();
        assert!(err.to_string().contains("commanded_distance"), "{err}");
    }

    #[test]
    fn unknown_field_is_named() {
        let err = load_scenario(
            r#"{"diameter_class": "D30", "pipe_length": 3.0, "commanded_distance": 1.0,
                "seed": 1, "pipe_lenght": 4.0}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("pipe_lenght"), "{err}");
    }

    #[test]
    fn overlapping_fittings_rejected() {
        let text = r#"{
            "diameter_class": "D30", "pipe_length": 35.0, "commanded_distance": 10.0, "seed": 1,
            "fittings": [
                {"kind": "reducer", "position": 5.0, "exit_radius": 0.3},
                {"kind": "obstacle", "position": 5.1, "height": 0.02, "length": 0.1, "clock_angle": 180}
            ]
        }"#;
        assert!(load_scenario(text).is_err());
    }

    #[test]
    fn terminal_fitting_must_be_last() {
        let text = r#"{
            "diameter_class": "D30", "pipe_length": 35.0, "commanded_distance": 10.0, "seed": 1,
            "fittings": [
                {"kind": "open_end", "position": 5.0},
                {"kind": "port", "position": 8.0, "radius": 0.05, "clock_angle": 0}
            ]
        }"#;
        assert!(load_scenario(text).is_err());
    }

    #[test]
    fn envelope_enforced_when_declared() {
        let text = r#"{
            "diameter_class": "D30", "pipe_length": 5.0, "commanded_distance": 3.0, "seed": 1,
            "within_tolerance": true, "entrance": {"gap": 0.2}
        }"#;
        assert!(load_scenario(text).is_err());
        let relaxed = text.replace("\"within_tolerance\": true,", "");
        assert!(load_scenario(&relaxed).is_ok());
    }

    #[test]
    fn deposit_interpolates_and_rejects_negative() {
        let d = DepositProfile {
            breakpoints: vec![[0.0, 10.0], [2.0, 30.0]],
            background_rate: 1.0,
        };
        assert_eq!(d.activity_at(1.0), 20.0);
        assert_eq!(d.activity_at(-0.1), 0.0);
        assert_eq!(d.activity_at(2.5), 0.0);
        let text = r#"{
            "diameter_class": "D30", "pipe_length": 5.0, "commanded_distance": 3.0, "seed": 1,
            "deposit": {"breakpoints": [[0, 1], [1, -2]], "background_rate": 1}
        }"#;
        assert!(load_scenario(text).is_err());
    }
}
