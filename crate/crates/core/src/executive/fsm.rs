use serde::Serialize;

use super::{CrossStatus, HealthStatus, TraversabilityLog};
use crate::safeguarding::{Action, SafeguardDecision};
use crate::vehicle::Motion;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum FsmState {
    Idle,
    QcPre,
    Forward,
    Approach { remaining: f64 },
    Reverse,
    Dock,
    QcPost,
    Fault { cause: String },
}

impl FsmState {
    pub fn name(&self) -> &'static str {
        match self {
            FsmState::Idle => "Idle",
            FsmState::QcPre => "QcPre",
            FsmState::Forward => "Forward",
            FsmState::Approach { .. } => "Approach",
            FsmState::Reverse => "Reverse",
            FsmState::Dock => "Dock",
            FsmState::QcPost => "QcPost",
            FsmState::Fault { .. } => "Fault",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecConfig {
    pub standoff: f64,
    pub approach_throttle: f64,
    /// Distance from home at which the final slow reverse starts.
    pub dock_zone: f64,
    pub dock_throttle: f64,
    pub dock_tol: f64,
    /// Forward travel past the commanded distance tolerated when the
    /// entrance was never registered.
    pub lost_margin: f64,
}

impl Default for ExecConfig {
    fn default() -> Self {
        Self {
            standoff: 0.3,
            approach_throttle: 0.5,
            dock_zone: 0.3,
            dock_throttle: 0.25,
            dock_tol: 0.02,
            lost_margin: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QcOutcome {
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecInputs {
    pub stamp: f64,
    pub start: bool,
    pub safeguard: SafeguardDecision,
    pub health: HealthStatus,
    pub cross_check: CrossStatus,
    /// Detector position along the pipe; None until the entrance is registered.
    pub odometer: Option<f64>,
    /// Online position estimate relative to the deployment pose.
    pub position: f64,
    /// Encoder travel since the previous tick.
    pub travel: f64,
    pub commanded_distance: f64,
    pub qc_result: Option<QcOutcome>,
    /// The profiler currently sees a round pipe around it.
    pub in_pipe: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Commands {
    pub motion: Motion,
    pub throttle: f64,
    pub alerts: Vec<String>,
}

fn motion_for(state: &FsmState, cfg: &ExecConfig) -> (Motion, f64) {
    match state {
        FsmState::Forward => (Motion::Forward, 1.0),
        FsmState::Approach { .. } => (Motion::Forward, cfg.approach_throttle),
        FsmState::Reverse => (Motion::Reverse, 1.0),
        FsmState::Dock => (Motion::Reverse, cfg.dock_throttle),
        _ => (Motion::Stop, 0.0),
    }
}

/// Reasons the outbound leg must end now, if any.
fn reversal(inp: &ExecInputs, cfg: &ExecConfig) -> Option<String> {
    if let Action::ReverseNow(c) = inp.safeguard.action {
        return Some(format!("safeguard reversal: {c:?} from {:?}", inp.safeguard.source));
    }
    if let HealthStatus::Fault(m) = &inp.health {
        return Some(format!("health fault: {m}"));
    }
    if let CrossStatus::Fault(m) = &inp.cross_check {
        return Some(format!("cross-check fault: {m}"));
    }
    match inp.odometer {
        Some(x) if x >= inp.commanded_distance => {
            Some(format!("commanded distance {:.3} m reached", inp.commanded_distance))
        }
        None if inp.position > inp.commanded_distance + cfg.lost_margin => {
            Some("entrance never registered".to_string())
        }
        _ => None,
    }
}

/// One executive tick.
pub fn step(
    state: &FsmState,
    inp: &ExecInputs,
    cfg: &ExecConfig,
    cleared: &TraversabilityLog,
) -> (FsmState, Commands) {
    let mut alerts = Vec::new();
    if let HealthStatus::Alert(a) = &inp.health {
        alerts.extend(a.iter().cloned());
    }
    let idle_input = inp.safeguard.action != Action::Continue;
    let next = match state {
        FsmState::Idle | FsmState::QcPre | FsmState::QcPost | FsmState::Dock if idle_input => {
            let cause = format!("safeguard input {:?} in {}", inp.safeguard.action, state.name());
            alerts.push(cause.clone());
            // Never strand the robot: on the way home this is only reported.
            if matches!(state, FsmState::Dock | FsmState::QcPost) {
                state.clone()
            } else {
                FsmState::Fault { cause }
            }
        }
        FsmState::Idle => {
            if inp.start {
                FsmState::QcPre
            } else {
                FsmState::Idle
            }
        }
        FsmState::QcPre => {
            if let HealthStatus::Fault(m) = &inp.health {
                let cause = format!("health fault before entry: {m}");
                alerts.push(cause.clone());
                FsmState::Fault { cause }
            } else if let Some(q) = &inp.qc_result {
                if q.pass {
                    FsmState::Forward
                } else {
                    let cause = format!("check-source QC failed: {}", q.detail);
                    alerts.push(cause.clone());
                    FsmState::Fault { cause }
                }
            } else {
                FsmState::QcPre
            }
        }
        FsmState::Forward => {
            if let Some(why) = reversal(inp, cfg) {
                alerts.push(why);
                FsmState::Reverse
            } else if let Action::EnterApproach(d) = inp.safeguard.action {
                let remaining = d - cfg.standoff;
                if remaining <= 0.0 {
                    alerts.push(format!("end condition at {d:.3} m inside standoff"));
                    FsmState::Reverse
                } else {
                    FsmState::Approach { remaining }
                }
            } else {
                FsmState::Forward
            }
        }
        FsmState::Approach { remaining } => {
            if let Some(why) = reversal(inp, cfg) {
                alerts.push(why);
                FsmState::Reverse
            } else {
                let left = remaining - inp.travel.abs();
                if left <= 0.0 {
                    FsmState::Reverse
                } else {
                    FsmState::Approach { remaining: left }
                }
            }
        }
        FsmState::Reverse => {
            if idle_input {
                alerts.push(format!(
                    "ignored safeguard input {:?} while reversing",
                    inp.safeguard.action
                ));
            }
            if !cleared.query(inp.position) {
                let cause = format!("reverse position {:.3} m not cleared", inp.position);
                alerts.push(cause.clone());
                FsmState::Fault { cause }
            } else if !inp.in_pipe && inp.position <= cfg.dock_zone {
                FsmState::Dock
            } else {
                FsmState::Reverse
            }
        }
        FsmState::Dock => {
            if inp.position <= 0.0 {
                if inp.position < -cfg.dock_tol {
                    alerts.push(format!("docked {:.3} m past home", -inp.position));
                }
                FsmState::QcPost
            } else {
                FsmState::Dock
            }
        }
        FsmState::QcPost => match &inp.qc_result {
            Some(q) => {
                if !q.pass {
                    alerts.push(format!("post-run QC failed: {}", q.detail));
                }
                FsmState::Idle
            }
            None => FsmState::QcPost,
        },
        FsmState::Fault { .. } => state.clone(),
    };
    let (motion, throttle) = motion_for(&next, cfg);
    (
        next,
        Commands {
            motion,
            throttle,
            alerts,
        },
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Transition {
    pub stamp: f64,
    pub from: String,
    pub to: String,
}

/// Stateful wrapper: holds the FSM state, the cleared-interval log and the
/// transition history.
#[derive(Debug, Clone)]
pub struct Executive {
    pub state: FsmState,
    pub cfg: ExecConfig,
    pub cleared: TraversabilityLog,
    pub transitions: Vec<Transition>,
}

impl Executive {
    pub fn new(cfg: ExecConfig) -> Self {
        Self {
            state: FsmState::Idle,
            cfg,
            cleared: TraversabilityLog::new(0.25),
            transitions: Vec::new(),
        }
    }

    pub fn tick(&mut self, inp: &ExecInputs) -> Commands {
        if matches!(
            self.state,
            FsmState::QcPre | FsmState::Forward | FsmState::Approach { .. }
        ) {
            self.cleared.record(inp.position);
        }
        let (next, cmd) = step(&self.state, inp, &self.cfg, &self.cleared);
        if next.name() != self.state.name() {
            self.transitions.push(Transition {
                stamp: inp.stamp,
                from: self.state.name().to_string(),
                to: next.name().to_string(),
            });
        }
        self.state = next;
        cmd
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::safeguarding::{Cause, Source};
    use proptest::prelude::*;

    fn base() -> ExecInputs {
        ExecInputs {
            stamp: 0.0,
            start: false,
            safeguard: SafeguardDecision::proceed(),
            health: HealthStatus::Ok,
            cross_check: CrossStatus::Ok,
            odometer: Some(5.0),
            position: 5.5,
            travel: 0.001,
            commanded_distance: 10.0,
            qc_result: None,
            in_pipe: true,
        }
    }

    fn cleared() -> TraversabilityLog {
        let mut t = TraversabilityLog::new(0.25);
        t.record(0.0);
        t.record(20.0);
        t
    }

    fn run(state: FsmState, inp: &ExecInputs) -> (FsmState, Commands) {
        step(&state, inp, &ExecConfig::default(), &cleared())
    }

    #[test]
    fn distance_reached_reverses() {
        let mut i = base();
        i.odometer = Some(10.0);
        let (s, c) = run(FsmState::Forward, &i);
        assert_eq!(s, FsmState::Reverse);
        assert_eq!(c.motion, Motion::Reverse);
    }

    #[test]
    fn approach_covers_distance_minus_standoff() {
        let mut i = base();
        i.safeguard = SafeguardDecision {
            action: Action::EnterApproach(3.0),
            cause: Some(Cause::ClosedPipe),
            source: Source::Primary,
        };
        let (s, c) = run(FsmState::Forward, &i);
        match s {
            FsmState::Approach { remaining } => assert!((remaining - 2.7).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        assert_eq!((c.motion, c.throttle), (Motion::Forward, 0.5));
        let mut i = base();
        i.travel = 0.5;
        let (s, _) = run(FsmState::Approach { remaining: 0.4 }, &i);
        assert_eq!(s, FsmState::Reverse);
    }

    #[test]
    fn failed_check_source_faults_with_alert() {
        let mut i = base();
        i.qc_result = Some(QcOutcome {
            pass: false,
            detail: "centroid".into(),
        });
        let (s, c) = run(FsmState::QcPre, &i);
        assert!(matches!(s, FsmState::Fault { .. }));
        assert!(!c.alerts.is_empty());
        assert_eq!(c.motion, Motion::Stop);
    }

    #[test]
    fn health_fault_in_pipe_reverses() {
        let mut i = base();
        i.health = HealthStatus::Fault("temperature".into());
        assert_eq!(run(FsmState::Forward, &i).0, FsmState::Reverse);
        assert!(matches!(run(FsmState::QcPre, &i).0, FsmState::Fault { .. }));
        assert_eq!(run(FsmState::Reverse, &i).0, FsmState::Reverse);
    }

    #[test]
    fn homecoming() {
        let mut i = base();
        i.in_pipe = false;
        i.position = 0.29;
        assert_eq!(run(FsmState::Reverse, &i).0, FsmState::Dock);
        i.position = 0.01;
        let (s, c) = run(FsmState::Dock, &i);
        assert_eq!((s, c.motion), (FsmState::Dock, Motion::Reverse));
        i.position = -0.0002;
        assert_eq!(run(FsmState::Dock, &i).0, FsmState::QcPost);
        i.qc_result = Some(QcOutcome {
            pass: true,
            detail: String::new(),
        });
        assert_eq!(run(FsmState::QcPost, &i).0, FsmState::Idle);
    }

    fn arb_inputs() -> impl Strategy<Value = ExecInputs> {
        (
            any::<bool>(),
            0usize..5,
            0usize..3,
            any::<bool>(),
            prop::option::of(0.0f64..12.0),
            -0.5f64..15.0,
            prop::option::of(any::<bool>()),
            any::<bool>(),
        )
            .prop_map(|(start, sg, h, cf, odo, pos, qc, in_pipe)| {
                let mut i = base();
                i.start = start;
                i.safeguard = match sg {
                    0 | 1 => SafeguardDecision::proceed(),
                    2 => SafeguardDecision {
                        action: Action::EnterApproach(2.0),
                        cause: Some(Cause::OpenEnd),
                        source: Source::Primary,
                    },
                    3 => SafeguardDecision::reverse(Cause::Obstacle, Source::Primary),
                    _ => SafeguardDecision::reverse(Cause::LaserLong, Source::Secondary),
                };
                i.health = match h {
                    0 => HealthStatus::Ok,
                    1 => HealthStatus::Alert(vec!["warm".into()]),
                    _ => HealthStatus::Fault("hot".into()),
                };
                if cf {
                    i.cross_check = CrossStatus::Fault("speed".into());
                }
                i.odometer = odo;
                i.position = pos;
                i.qc_result = qc.map(|pass| QcOutcome {
                    pass,
                    detail: String::new(),
                });
                i.in_pipe = in_pipe;
                i
            })
    }

    proptest! {
        #[test]
        fn traces_are_deterministic_and_audited(trace in prop::collection::vec(arb_inputs(), 1..60)) {
            let play = || {
                let mut e = Executive::new(ExecConfig::default());
                let mut out = Vec::new();
                for (k, i) in trace.iter().enumerate() {
                    let mut i = i.clone();
                    i.stamp = k as f64 * 0.02;
                    let c = e.tick(&i);
                    out.push((e.state.clone(), c));
                }
                out
            };
            let a = play();
            prop_assert_eq!(&a, &play());
            for (s, c) in &a {
                if c.motion == Motion::Forward {
                    let moving = matches!(s, FsmState::Forward | FsmState::Approach { .. });
                    prop_assert!(moving);
                }
            }
            // Entering Fault always comes with an alert on that tick.
            let mut prev = FsmState::Idle;
            for (s, c) in &a {
                let entered = matches!(s, FsmState::Fault { .. }) && !matches!(prev, FsmState::Fault { .. });
                if entered {
                    prop_assert!(!c.alerts.is_empty());
                }
                prev = s.clone();
            }
        }
    }
}
