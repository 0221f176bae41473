use super::{Action, Cause, EndCondition, EndKind, SafeguardDecision, Source};
use crate::sensors::{expected_laser_ranges, ImuSample, PointLasers};
use crate::vehicle::VehicleConfig;
use crate::world::deg;

#[derive(Debug, Clone, PartialEq)]
pub struct SecondaryConfig {
    pub vehicle: VehicleConfig,
    pub radius: f64,
    pub delta_short: f64,
    pub delta_long: f64,
}

impl SecondaryConfig {
    pub fn new(vehicle: VehicleConfig, radius: f64) -> Self {
        Self {
            vehicle,
            radius,
            delta_short: 0.06,
            delta_long: 0.10,
        }
    }
}

/// Compares denoised point-laser ranges with what a clean pipe would return
/// at the measured attitude.
pub fn secondary_check(lasers: &PointLasers, imu: &ImuSample, cfg: &SecondaryConfig) -> Option<Cause> {
    let want = expected_laser_ranges(&cfg.vehicle, cfg.radius, imu.roll, imu.pitch, imu.yaw);
    let pairs = [(lasers.left, want.left), (lasers.right, want.right)];
    if pairs.iter().any(|(m, e)| *m < e - cfg.delta_short) {
        Some(Cause::LaserShort)
    } else if pairs.iter().any(|(m, e)| *m > e + cfg.delta_long) {
        Some(Cause::LaserLong)
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PitchLimits {
    pub min: f64,
    pub max: f64,
}

impl Default for PitchLimits {
    fn default() -> Self {
        Self {
            min: deg(-10.0),
            max: deg(10.0),
        }
    }
}

pub fn pitch_check(imu: &ImuSample, limits: &PitchLimits) -> Option<Cause> {
    (imu.pitch < limits.min || imu.pitch > limits.max).then_some(Cause::PitchLimit)
}

/// The primary layer decides whenever it has a condition; the secondary and
/// IMU layers can only turn a primary Continue into a reversal.
pub fn arbitrate(
    primary: &EndCondition,
    secondary: Option<Cause>,
    pitch: Option<Cause>,
) -> SafeguardDecision {
    let end_cause = match primary.kind {
        EndKind::ClosedPipe => Some(Cause::ClosedPipe),
        EndKind::Reducer => Some(Cause::Reducer),
        EndKind::OpenEnd => Some(Cause::OpenEnd),
        EndKind::Obstacle => return SafeguardDecision::reverse(Cause::Obstacle, Source::Primary),
        EndKind::None => None,
    };
    if let Some(cause) = end_cause {
        if primary.distance.is_finite() {
            return SafeguardDecision {
                action: Action::EnterApproach(primary.distance),
                cause: Some(cause),
                source: Source::Primary,
            };
        }
        return SafeguardDecision::reverse(cause, Source::Primary);
    }
    if let Some(c) = secondary {
        return SafeguardDecision::reverse(c, Source::Secondary);
    }
    if let Some(c) = pitch {
        return SafeguardDecision::reverse(c, Source::Imu);
    }
    SafeguardDecision::proceed()
}
