//! Layered safeguarding: a primary point-cloud pipeline (cylinder fit,
//! segmentation, obstacle check, slab Hough end classification, FIR
//! denoising), a point-laser secondary, an IMU pitch limit and the
//! arbitration between them.

mod arbitrate;
mod fir;
mod hough;
mod obstacle;
mod pipeline;
mod ransac;

use serde::Serialize;
use thiserror::Error;

use crate::world::Vec3;

pub use arbitrate::{arbitrate, pitch_check, secondary_check, PitchLimits, SecondaryConfig};
pub use fir::{fir_denoise, Fir, DEFAULT_TAPS};
pub use hough::{classify_end, sweep_circles, HoughParams, SliceClass, SliceKind};
pub use obstacle::{check_obstacle, Capabilities};
pub use pipeline::{FrameResult, Perception, PerceptionParams};
pub use ransac::{
    fit_cylinder, pose_from_cylinder, prefilter, segment, AxisPose, RansacParams, Segmented,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum FitError {
    #[error("too few points for a cylinder fit ({0})")]
    InsufficientPoints(usize),
    #[error("no cylinder hypothesis reached consensus")]
    NoConsensus,
}

/// Cylinder in the mapper frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CylinderModel {
    /// Point on the axis, taken in the mapper's x = 0 plane.
    pub axis_point: Vec3,
    pub axis_dir: Vec3,
    pub radius: f64,
    pub inlier_fraction: f64,
}

impl CylinderModel {
    /// Axis straight ahead of the sensor.
    pub fn nominal(radius: f64) -> Self {
        Self {
            axis_point: Vec3::zeros(),
            axis_dir: Vec3::x(),
            radius,
            inlier_fraction: 0.0,
        }
    }

    /// Axial coordinate and perpendicular distance of `p`.
    pub fn project(&self, p: &Vec3) -> (f64, f64) {
        let d = p - self.axis_point;
        let s = d.dot(&self.axis_dir);
        (s, (d - self.axis_dir * s).norm())
    }

    /// Orthonormal cross-section basis: `e1` horizontal, `e2` up-ish.
    pub fn section_basis(&self) -> (Vec3, Vec3) {
        let u = self.axis_dir;
        let up = Vec3::z();
        let e2 = (up - u * up.dot(&u)).normalize();
        (e2.cross(&u), e2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum EndKind {
    ClosedPipe,
    Reducer,
    OpenEnd,
    Obstacle,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EndCondition {
    pub kind: EndKind,
    pub distance: f64,
    pub raw_distance: f64,
    pub confidence: f64,
}

impl EndCondition {
    pub fn none(lookahead: f64) -> Self {
        Self {
            kind: EndKind::None,
            distance: lookahead,
            raw_distance: lookahead,
            confidence: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Cause {
    Obstacle,
    ClosedPipe,
    Reducer,
    OpenEnd,
    LaserShort,
    LaserLong,
    PitchLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Source {
    Primary,
    Secondary,
    Imu,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Action {
    Continue,
    EnterApproach(f64),
    ReverseNow(Cause),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SafeguardDecision {
    pub action: Action,
    pub cause: Option<Cause>,
    pub source: Source,
}

impl SafeguardDecision {
    pub fn proceed() -> Self {
        Self {
            action: Action::Continue,
            cause: None,
            source: Source::Primary,
        }
    }

    pub fn reverse(cause: Cause, source: Source) -> Self {
        Self {
            action: Action::ReverseNow(cause),
            cause: Some(cause),
            source,
        }
    }
}
