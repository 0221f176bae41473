//! Mission executive: the state machine, health monitoring, sensor
//! cross-checks and the log of cleared intervals used on the way home.

mod cross;
mod fsm;
mod health;
mod traverse;

pub use cross::{CrossChecker, CrossStatus};
pub use fsm::{
    step, Commands, ExecConfig, ExecInputs, Executive, FsmState, QcOutcome, Transition,
};
pub use health::{health_check, HealthLimits, HealthStatus, HealthTelemetry};
pub use traverse::TraversabilityLog;
