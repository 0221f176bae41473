//! Synthetic pipe worlds: scenario documents and the compiled solid model.

mod geometry;
mod scenario;

pub use geometry::{
    clock_angle, deg, Hit, RigFrame, Surface, Vec3, World, WorldError, LIP_LENGTH, RANGE_CLAMP,
    RIG_LENGTH, RIG_TARGET_RADIUS, RIG_TARGET_SETBACK, WALL_THICKNESS,
};
pub use scenario::{
    load_scenario, DepositProfile, DiameterClass, EntranceEnvelope, EntranceOffset, FaultInjection,
    FaultKind, Fitting, FittingKind, FittingTag, Scenario, ScenarioError, PORT_DEPTH,
    SWEEP_LENGTH, TAPER_LENGTH, VALVE_THICKNESS,
};
