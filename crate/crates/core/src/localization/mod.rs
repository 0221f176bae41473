//! Along-axis localization: entrance registration from the profiler,
//! rangefinder gating and calibration, a 1-D pose graph over the whole run
//! and an online filter for the executive.

mod entrance;
mod gate;
mod graph;
mod online;

use thiserror::Error;

pub(crate) use entrance::fit_center;
pub use entrance::{detect_entrance, ring_is_pipe, Entrance, EntranceDetector, EntranceParams};
pub use gate::{calibrate_rangefinder, gate_rangefinder, RangeGate};
pub use graph::{
    build_graph, interp, interpolate_sensor_positions, interpolate_with_odometry, optimize,
    AbsoluteEdge, GraphParams,
    LocalizedTrack, Node, OdometryEdge, PoseGraph, TrackPoint,
};
pub use online::OnlineFilter;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LocError {
    #[error("the pipe entrance was never detected")]
    NoEntrance,
    #[error("empty measurement stream")]
    EmptyStream,
    #[error("information matrix is singular at node {0}")]
    Singular(usize),
    #[error("stamp {0} lies outside the localized span")]
    OutOfSpan(f64),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
}
