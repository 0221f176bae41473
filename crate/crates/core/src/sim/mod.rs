//! The closed-loop mission: world, sensors, safeguarding, on-board
//! localization, executive and dynamics stepped on a 50 Hz tick, followed by
//! batch localization and the radiometric report.

mod posthoc;
mod telemetry;

use serde::Serialize;

use crate::executive::{
    health_check, CrossChecker, CrossStatus, ExecConfig, ExecInputs, Executive, FsmState,
    HealthLimits, QcOutcome,
};
use crate::localization::{
    fit_center, interpolate_with_odometry, ring_is_pipe, EntranceDetector, EntranceParams,
    GraphParams, OnlineFilter, RangeGate,
};
use crate::radiometry::{
    check_source_qc, contamination_check, flag_geometry, per_foot_report, roi_counts,
    GeometryParams, LocalizedSpectrum, Pass, PerFootReport, QcBounds, QcReference, QcResult, Roi,
    FOOT,
};
use crate::report::{
    round9, Alert, EndReport, LocalizationSummary, RunReport, Termination, TruthSummary,
};
use crate::rng::{stream, Stream};
use crate::safeguarding::{
    arbitrate, pitch_check, secondary_check, Action, EndKind, Fir, Perception, PerceptionParams,
    PitchLimits, SafeguardDecision, SecondaryConfig,
};
use crate::sensors::{
    mapper_directions, sample_check_source, sample_depth_map, sample_gamma, sample_imu,
    sample_point_lasers, sample_profiler, sample_rangefinder, AnnulusResponse,
    CollimatorGeometry, EncoderCounter, ImuBias, ProfileRing,
};
use crate::vehicle::{
    deploy, slew, steer_controller, step_dynamics, DriveCommand, Motion, RobotPose, SlipState,
    VehicleConfig, TICK,
};
use crate::world::{Fitting, FittingKind, Scenario, World};

pub use posthoc::{localize, Localized, CALIBRATION_WINDOW};
pub use telemetry::{Plant, NODES};

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Ticks between profiler rings (10 Hz).
    pub profiler_every: usize,
    /// Ticks per in-pipe spectrum (1 Hz).
    pub spectrum_ticks: usize,
    /// Docked check-source acquisition (s).
    pub qc_live: f64,
    /// Spare mission time on top of the nominal round trip (s).
    pub time_margin: f64,
    /// Settling time after reacquisition before reconvergence is scored.
    pub settle: f64,
    /// Fix gap that counts as a rangefinder dropout (s).
    pub dropout_gap: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            profiler_every: 5,
            spectrum_ticks: 50,
            qc_live: 60.0,
            time_margin: 600.0,
            settle: 1.0,
            dropout_gap: 5.0,
        }
    }
}

/// One row of the tick log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TickRecord {
    pub stamp: f64,
    pub state: &'static str,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
    pub v: f64,
    pub x_est: f64,
    pub sigma_est: f64,
    pub odometer: Option<f64>,
    pub encoder: f64,
    pub range: f64,
    pub range_returned: bool,
    pub fix: Option<f64>,
    pub laser_left: Option<f64>,
    pub laser_right: Option<f64>,
    pub imu_pitch: f64,
    pub in_pipe: bool,
    pub raw_kind: Option<EndKind>,
    pub raw_distance: Option<f64>,
    pub primary_kind: Option<EndKind>,
    pub primary_distance: Option<f64>,
    pub action: String,
    pub alerts: String,
}

impl TickRecord {
    fn rounded(mut self) -> Self {
        for v in [
            &mut self.stamp,
            &mut self.x,
            &mut self.y,
            &mut self.z,
            &mut self.roll,
            &mut self.pitch,
            &mut self.yaw,
            &mut self.v,
            &mut self.x_est,
            &mut self.sigma_est,
            &mut self.encoder,
            &mut self.range,
            &mut self.imu_pitch,
        ] {
            *v = round9(*v);
        }
        for v in [
            &mut self.odometer,
            &mut self.fix,
            &mut self.laser_left,
            &mut self.laser_right,
            &mut self.raw_distance,
            &mut self.primary_distance,
        ]
        .into_iter()
        .flatten()
        {
            *v = round9(*v);
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub report: RunReport,
    pub log: Vec<TickRecord>,
}

impl RunOutput {
    pub fn exit_code(&self) -> i32 {
        match self.report.termination {
            Termination::QcPost => 0,
            Termination::Fault => 2,
        }
    }
}

/// Detector spectrum being integrated over one acquisition window.
struct Window {
    pass: Pass,
    start: f64,
    ticks: usize,
    x_sum: f64,
}

struct Spectrum1 {
    stamp: f64,
    pass: Pass,
    live: f64,
    roi: u64,
}

fn in_outbound(s: &FsmState) -> bool {
    matches!(s, FsmState::Forward | FsmState::Approach { .. })
}

fn pass_of(s: &FsmState) -> Option<Pass> {
    match s {
        FsmState::Forward | FsmState::Approach { .. } => Some(Pass::Forward),
        FsmState::Reverse => Some(Pass::Reverse),
        _ => None,
    }
}

/// Position of the first terminal fitting, where the bore ends.
fn end_fitting(s: &Scenario) -> Option<&Fitting> {
    s.fittings
        .iter()
        .filter(|f| f.kind.is_terminal() || matches!(f.kind, FittingKind::Reducer { .. }))
        .min_by(|a, b| a.position.total_cmp(&b.position))
}

fn deploy_failure(s: &Scenario, digest: &str, seed: u64, reason: String) -> RunOutput {
    RunOutput {
        report: RunReport {
            scenario_digest: digest.to_string(),
            scenario_name: s.name.clone(),
            seed,
            diameter_class: s.diameter_class.label().to_string(),
            termination: Termination::Fault,
            fault: Some(format!("DeployError: {reason}")),
            deploy_error: Some(reason),
            qc_pre: None,
            qc_post: None,
            contamination: None,
            end_condition: None,
            reversal_reason: None,
            localization: None,
            localization_error: None,
            truth: TruthSummary {
                expected_end: end_fitting(s).map(|f| f.kind.tag()),
                ..Default::default()
            },
            per_foot: None,
            transitions: Vec::new(),
            alerts: Vec::new(),
            duration: 0.0,
        },
        log: Vec::new(),
    }
}

fn qc_outcome(q: &QcResult, extra: Option<String>) -> QcOutcome {
    let mut reasons = q.reasons.clone();
    reasons.extend(extra);
    QcOutcome {
        pass: reasons.is_empty(),
        detail: reasons.join("; "),
    }
}

/// Runs one scenario to completion. `digest` identifies the input document.
pub fn run(scenario: &Scenario, digest: &str, seed: u64, sim: &SimConfig) -> RunOutput {
    let world = World::new(scenario);
    let cfg = VehicleConfig::for_class(scenario.diameter_class);
    let noise = &scenario.noise;
    let radius = scenario.radius();
    let start_pose = match deploy(scenario, &world) {
        Ok(p) => p,
        Err(e) => return deploy_failure(scenario, digest, seed, e.reason),
    };

    let mut rng_slip = stream(seed, Stream::Slip);
    let mut rng_mapper = stream(seed, Stream::Mapper);
    let mut rng_lasers = stream(seed, Stream::Lasers);
    let mut rng_imu = stream(seed, Stream::Imu);
    let mut rng_range = stream(seed, Stream::Rangefinder);
    let mut rng_prof = stream(seed, Stream::Profiler);
    let mut rng_gamma = stream(seed, Stream::Gamma);
    let mut rng_ransac = stream(seed, Stream::Ransac);
    let mut rng_tel = stream(seed, Stream::Telemetry);

    let slip = SlipState::draw(noise, &mut rng_slip);
    let imu_bias = ImuBias::draw(noise, &mut rng_imu);
    let dirs = mapper_directions(noise);
    let response = AnnulusResponse::new(&CollimatorGeometry::standard(radius))
        .expect("standard collimator fits both pipe classes");
    let u235 = Roi::u235(noise);
    let qc_ref = QcReference::nominal(noise, scenario.deposit.background_rate);
    let qc_bounds = QcBounds::default();
    let mut perception = Perception::new(PerceptionParams::new(&cfg, radius));
    let secondary_cfg = SecondaryConfig::new(cfg.clone(), radius);
    let pitch_limits = PitchLimits::default();
    let entrance_params = EntranceParams::new(radius, cfg.profiler_to_detector());
    let mut entrance_det = EntranceDetector::new(entrance_params);
    let mut exec = Executive::new(ExecConfig::default());
    let health_limits = HealthLimits::default();
    let mut cross = CrossChecker::default();
    let mut gate = RangeGate::default();
    let mut filter = OnlineFilter::new(0.0, 1e-3, 0.01, noise.odometry_sigma_fraction);
    let mut encoders = EncoderCounter::new();
    let mut plant = Plant::new();
    let mut faults: Vec<_> = scenario.faults.iter().collect();
    faults.sort_by(|a, b| a.time.total_cmp(&b.time));
    let mut next_fault = 0;
    let mut laser_fir = [Fir::new(25), Fir::new(25)];

    let max_time = 2.0 * sim.qc_live
        + 3.0 * (scenario.commanded_distance + 3.0) / cfg.speed
        + sim.time_margin;
    let max_ticks = (max_time / TICK).ceil() as usize;

    let mut pose = start_pose;
    let mut prev_pose = start_pose;
    let mut yaw_cmd = 0.0;
    let mut center_y = 0.0;
    let mut in_pipe = false;
    let mut odo_cum = 0.0;
    let mut odo_stream: Vec<(f64, f64)> = Vec::new();
    let mut pos_stream: Vec<(f64, f64)> = Vec::new();
    let mut ranges: Vec<(f64, f64, bool)> = Vec::new();
    let mut rings: Vec<ProfileRing> = Vec::new();
    let mut pitches: Vec<(f64, f64)> = Vec::new();
    let mut truth_x: Vec<(f64, f64, &'static str)> = Vec::new();
    let mut log = Vec::new();
    let mut alerts: Vec<Alert> = Vec::new();
    let mut entrance_pos: Option<f64> = None;
    let mut range0: Option<f64> = None;
    let mut qc_sum = (0.0, 0usize);
    let mut qc_ticks = 0usize;
    let mut qc_pre: Option<QcResult> = None;
    let mut qc_post: Option<QcResult> = None;
    let mut pre_roi: Option<u64> = None;
    let mut contamination = None;
    let mut window: Option<Window> = None;
    let mut spectra: Vec<Spectrum1> = Vec::new();
    let mut end_condition: Option<EndReport> = None;
    let mut reversal_reason: Option<String> = None;
    let mut truth = TruthSummary {
        expected_end: end_fitting(scenario).map(|f| f.kind.tag()),
        ..Default::default()
    };
    let mut termination = Termination::Fault;
    let mut fault: Option<String> = None;
    let mut stamp = 0.0;

    for k in 0..max_ticks {
        stamp = k as f64 * TICK;
        while next_fault < faults.len() && faults[next_fault].time <= stamp {
            plant.apply(faults[next_fault]);
            next_fault += 1;
        }
        let telemetry = plant.tick(stamp, &mut rng_tel).clone();
        encoders.scale = plant.encoder_scale;
        let state = exec.state.clone();

        // Sensors.
        let ticks = encoders.sample(&prev_pose, &pose, noise.encoder_resolution);
        let travel = ticks.distance(noise.encoder_resolution);
        odo_cum += travel;
        odo_stream.push((stamp, odo_cum));
        let imu = sample_imu(&pose, noise, &imu_bias, &mut rng_imu);
        let reading = sample_rangefinder(&cfg, &pose, &world, noise, &mut rng_range);
        ranges.push((stamp, reading.range, reading.returned));
        if k % sim.profiler_every == 0 {
            let ring = sample_profiler(&cfg, &pose, &world, noise, &mut rng_prof);
            in_pipe = ring_is_pipe(&ring, &entrance_params);
            let pts: Vec<(f64, f64)> = ring.points().collect();
            center_y = match fit_center(&pts) {
                Some((cy, _)) if in_pipe => -cy,
                _ => 0.0,
            };
            if entrance_pos.is_none() {
                if let Some(e) = entrance_det.push(&ring) {
                    let p = crate::localization::interp(&pos_stream, e.stamp);
                    entrance_pos = Some(p);
                    alerts.push(Alert {
                        stamp,
                        message: format!("entrance registered at t = {:.2} s", e.stamp),
                    });
                }
            }
            rings.push(ring);
        }

        // Safeguarding.
        let mut frame = None;
        let mut lasers = None;
        let decision = if in_outbound(&state) {
            let cloud = sample_depth_map(&cfg, &pose, &world, noise, &dirs, &mut rng_mapper);
            let f = perception.step(&cloud, &mut rng_ransac);
            let l = sample_point_lasers(&cfg, &pose, &world, noise, &mut rng_lasers);
            lasers = Some(l);
            let secondary = if entrance_pos.is_some() {
                let left = laser_fir[0].push(l.left);
                let right = laser_fir[1].push(l.right);
                let warm = laser_fir[0].is_warm();
                let denoised = crate::sensors::PointLasers { left, right };
                if warm {
                    secondary_check(&denoised, &imu, &secondary_cfg)
                } else {
                    None
                }
            } else {
                None
            };
            let d = arbitrate(&f.primary, secondary, pitch_check(&imu, &pitch_limits));
            frame = Some(f);
            d
        } else {
            perception.reset();
            laser_fir.iter_mut().for_each(Fir::reset);
            SafeguardDecision::proceed()
        };

        // On-board localization.
        filter.predict(travel);
        if matches!(state, FsmState::QcPre) && reading.returned {
            qc_sum = (qc_sum.0 + reading.range, qc_sum.1 + 1);
        }
        let mut fix = None;
        if let Some(r0) = range0 {
            fix = gate.push(reading.range - r0, reading.returned, filter.position(), odo_cum);
            if let Some(x) = fix {
                filter.update(x, noise.rangefinder_sigma.max(1e-3));
            }
        }
        pos_stream.push((stamp, filter.position()));
        let (motion_now, throttle_now) = match &state {
            FsmState::Forward | FsmState::Reverse => (true, 1.0),
            FsmState::Approach { .. } => (true, 0.5),
            FsmState::Dock => (true, 0.25),
            _ => (false, 0.0),
        };
        let cross_status = cross.push(
            stamp,
            odo_cum,
            fix,
            if motion_now { cfg.speed * throttle_now } else { 0.0 },
        );
        let odometer = entrance_pos.map(|p0| filter.position() - p0 + cfg.profiler_to_detector());

        // Radiometry acquisitions.
        let mut qc_result = None;
        if matches!(state, FsmState::QcPre | FsmState::QcPost) {
            qc_ticks += 1;
            if qc_ticks as f64 * TICK >= sim.qc_live - 1e-9 {
                let sp = sample_check_source(
                    noise,
                    &plant.detector,
                    scenario.deposit.background_rate,
                    sim.qc_live,
                    stamp,
                    &mut rng_gamma,
                );
                let q = check_source_qc(&sp, &qc_ref, &qc_bounds);
                let roi = roi_counts(&sp, &u235).unwrap_or(0);
                if matches!(state, FsmState::QcPre) {
                    pre_roi = Some(roi);
                    if qc_sum.1 > 0 {
                        range0 = Some(qc_sum.0 / qc_sum.1 as f64);
                    }
                    qc_result = Some(qc_outcome(&q, None));
                    qc_pre = Some(q);
                } else {
                    let c = contamination_check(pre_roi.unwrap_or(0), roi);
                    let extra = (!c.pass).then(|| format!("contamination z = {:.2}", c.z));
                    contamination = Some(c);
                    qc_result = Some(qc_outcome(&q, extra));
                    qc_post = Some(q);
                }
                qc_ticks = 0;
            }
        } else {
            qc_ticks = 0;
        }
        let pass_now = pass_of(&state);
        let close = window
            .as_ref()
            .is_some_and(|w| Some(w.pass) != pass_now || w.ticks >= sim.spectrum_ticks);
        if close {
            let w = window.take().expect("window checked above");
            let live = w.ticks as f64 * TICK;
            let sp = sample_gamma(
                &scenario.deposit,
                &response,
                noise,
                &plant.detector,
                w.x_sum / w.ticks as f64,
                live,
                w.start + live / 2.0,
                &mut rng_gamma,
            );
            spectra.push(Spectrum1 {
                stamp: sp.stamp,
                pass: w.pass,
                live,
                roi: roi_counts(&sp, &u235).unwrap_or(0),
            });
        }
        if let Some(p) = pass_now {
            let w = window.get_or_insert(Window {
                pass: p,
                start: stamp,
                ticks: 0,
                x_sum: 0.0,
            });
            w.ticks += 1;
            w.x_sum += pose.x;
        }

        // Executive.
        let return_hours = filter.position().max(0.0) / cfg.speed / 3600.0;
        let health = health_check(&telemetry, &health_limits, stamp, return_hours);
        let inputs = ExecInputs {
            stamp,
            start: k == 0,
            safeguard: decision,
            health: health.clone(),
            cross_check: cross_status.clone(),
            odometer,
            position: filter.position(),
            travel,
            commanded_distance: scenario.commanded_distance,
            qc_result,
            in_pipe,
        };
        let cmd = exec.tick(&inputs);
        let next = exec.state.clone();
        let mut tick_alerts = cmd.alerts.clone();
        if let CrossStatus::Fault(m) = &cross_status {
            if in_outbound(&state) {
                tick_alerts.push(m.clone());
            }
        }
        if in_outbound(&state) && !in_outbound(&next) {
            reversal_reason = cmd.alerts.last().cloned().or(Some("approach complete".into()));
        }
        if matches!(state, FsmState::Forward) && !matches!(next, FsmState::Forward) {
            if let Some(cause) = decision.cause {
                let distance = match decision.action {
                    Action::EnterApproach(d) => d,
                    _ => frame.as_ref().map_or(0.0, |f| f.primary.distance),
                };
                end_condition = Some(EndReport {
                    cause,
                    source: decision.source,
                    distance,
                    stamp,
                    odometer,
                });
            }
        }
        if !matches!(state, FsmState::Reverse) && matches!(next, FsmState::Reverse) {
            truth.reversal_x = Some(pose.x);
            let mapper_x = cfg.body_x(&pose) + cfg.mapper_offset;
            truth.stop_standoff = end_fitting(scenario).map(|f| f.extent().0 - mapper_x);
        }
        for m in &tick_alerts {
            if alerts.last().is_none_or(|a| &a.message != m) {
                alerts.push(Alert {
                    stamp,
                    message: m.clone(),
                });
            }
        }
        log.push(
            TickRecord {
                stamp,
                state: state.name(),
                x: pose.x,
                y: pose.y,
                z: pose.z,
                roll: pose.roll,
                pitch: pose.pitch,
                yaw: pose.yaw,
                v: pose.v,
                x_est: filter.position(),
                sigma_est: filter.sigma(),
                odometer,
                encoder: odo_cum,
                range: reading.range,
                range_returned: reading.returned,
                fix,
                laser_left: lasers.map(|l| l.left),
                laser_right: lasers.map(|l| l.right),
                imu_pitch: imu.pitch,
                in_pipe,
                raw_kind: frame.as_ref().map(|f| f.raw.kind),
                raw_distance: frame.as_ref().map(|f| f.raw.raw_distance),
                primary_kind: frame.as_ref().map(|f| f.primary.kind),
                primary_distance: frame.as_ref().map(|f| f.primary.distance),
                action: format!("{:?}", decision.action),
                alerts: tick_alerts.join("; "),
            }
            .rounded(),
        );
        pitches.push((stamp, imu.pitch));
        truth_x.push((stamp, pose.x, state.name()));
        truth.max_penetration = truth.max_penetration.max(pose.x);

        if let FsmState::Fault { cause } = &next {
            fault = Some(cause.clone());
            break;
        }
        if matches!(state, FsmState::QcPost) && matches!(next, FsmState::Idle) {
            termination = Termination::QcPost;
            truth.dock_error = Some(pose.x - start_pose.x);
            break;
        }

        // Dynamics.
        let wanted = if matches!(cmd.motion, Motion::Stop) {
            0.0
        } else {
            let v = cfg.speed * cmd.throttle * if cmd.motion == Motion::Reverse { -1.0 } else { 1.0 };
            steer_controller(&cfg, imu.yaw, center_y, v)
        };
        yaw_cmd = slew(&cfg, yaw_cmd, wanted, TICK);
        let drive = DriveCommand {
            yaw_rate: yaw_cmd,
            ..DriveCommand::new(cmd.motion, cmd.throttle)
        };
        let mut next_pose = step_dynamics(&cfg, &pose, &drive, &world, noise, &slip, TICK, &mut rng_slip);
        if stamp < plant.stuck_until && cmd.motion != Motion::Stop {
            // Tracks spin in place.
            next_pose = RobotPose {
                t: next_pose.t,
                v: 0.0,
                track_travel: next_pose.track_travel,
                ..pose
            };
        }
        prev_pose = pose;
        pose = next_pose;
    }
    if termination == Termination::Fault && fault.is_none() {
        fault = Some(format!("mission timed out in {}", exec.state.name()));
    }
    truth.entered_pipe = truth.max_penetration > 0.0;

    // Batch localization and the per-foot report.
    let graph_params = GraphParams {
        odo_fraction: noise.odometry_sigma_fraction,
        rf_sigma: noise.rangefinder_sigma.max(1e-3),
        ..GraphParams::default()
    };
    let (localization, localization_error, per_foot) =
        match localize(&rings, &odo_stream, &ranges, &entrance_params, &graph_params) {
            Ok(loc) => {
                let p2d = cfg.profiler_to_detector();
                diagnose(&loc, &odo_stream, &truth_x, p2d, sim, &mut truth);
                let summary = LocalizationSummary {
                    entrance_stamp: loc.entrance.stamp,
                    entrance_degenerate: loc.entrance.degenerate,
                    rangefinder_calibration: loc.calibration,
                    fixes: loc.fixes.len(),
                    nodes: loc.track.points.len(),
                    max_sigma: loc.track.points.iter().map(|p| p.sigma).fold(0.0, f64::max),
                };
                let pf = build_per_foot(&loc, &odo_stream, &spectra, &rings, &pitches, &response, p2d, radius);
                (Some(summary), None, Some(pf))
            }
            Err(e) => {
                // Keep the counts even when nothing can be placed.
                let pf = (!spectra.is_empty()).then(|| {
                    let loose: Vec<LocalizedSpectrum> = spectra
                        .iter()
                        .map(|s| LocalizedSpectrum {
                            stamp: s.stamp,
                            pass: s.pass,
                            x: None,
                            sigma: f64::NAN,
                            roi_counts: s.roi,
                            live_time: s.live,
                        })
                        .collect();
                    per_foot_report(&loose, &response, None)
                });
                (None, Some(e.to_string()), pf)
            }
        };

    RunOutput {
        report: RunReport {
            scenario_digest: digest.to_string(),
            scenario_name: scenario.name.clone(),
            seed,
            diameter_class: scenario.diameter_class.label().to_string(),
            termination,
            fault,
            deploy_error: None,
            qc_pre,
            qc_post,
            contamination,
            end_condition,
            reversal_reason,
            localization,
            localization_error,
            truth,
            per_foot,
            transitions: exec.transitions,
            alerts,
            duration: stamp,
        },
        log,
    }
}

/// Compares the batch estimate of the detector with the truth.
fn diagnose(
    loc: &Localized,
    odo: &[(f64, f64)],
    truth_x: &[(f64, f64, &'static str)],
    p2d: f64,
    sim: &SimConfig,
    truth: &mut TruthSummary,
) {
    let rows: Vec<&(f64, f64, &str)> = truth_x
        .iter()
        .filter(|r| r.0 >= loc.entrance.stamp && matches!(r.2, "Forward" | "Approach" | "Reverse"))
        .collect();
    let stamps: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let Ok(est) = interpolate_with_odometry(&loc.track, odo, &stamps, p2d) else {
        return;
    };
    let err: Vec<(f64, f64, &str)> = rows.iter().zip(&est).map(|(r, e)| (r.0, (e.x - r.1).abs(), r.2)).collect();
    truth.max_drift = err.iter().map(|e| e.1).reduce(f64::max);
    let reverse_start = rows.iter().find(|r| r.2 == "Reverse").map(|r| r.0);
    let Some(t_rev) = reverse_start else { return };
    // First fix on the way back that ends a long gap.
    let mut prev: Option<f64> = None;
    for &(t, _) in &loc.fixes {
        if t >= t_rev && prev.is_some_and(|p| t - p >= sim.dropout_gap) {
            truth.reacquired_at = Some(t);
            break;
        }
        prev = Some(t);
    }
    if let Some(t0) = truth.reacquired_at {
        truth.reconvergence_error = err
            .iter()
            .filter(|e| e.2 == "Reverse" && e.0 >= t0 + sim.settle)
            .map(|e| e.1)
            .reduce(f64::max);
    }
}

#[allow(clippy::too_many_arguments)]
fn build_per_foot(
    loc: &Localized,
    odo: &[(f64, f64)],
    spectra: &[Spectrum1],
    rings: &[ProfileRing],
    pitches: &[(f64, f64)],
    response: &AnnulusResponse,
    p2d: f64,
    radius: f64,
) -> PerFootReport {
    let span = (
        loc.track.points.first().map_or(f64::INFINITY, |p| p.stamp),
        loc.track.points.last().map_or(f64::NEG_INFINITY, |p| p.stamp),
    );
    let locate = |t: f64, transform: f64| -> Option<(f64, f64)> {
        if t < span.0 || t > span.1 {
            return None;
        }
        interpolate_with_odometry(&loc.track, odo, &[t], transform)
            .ok()
            .map(|v| (v[0].x, v[0].sigma))
    };
    let localized: Vec<LocalizedSpectrum> = spectra
        .iter()
        .map(|s| {
            let at = locate(s.stamp, p2d);
            LocalizedSpectrum {
                stamp: s.stamp,
                pass: s.pass,
                x: at.map(|a| a.0),
                sigma: at.map_or(f64::NAN, |a| a.1),
                roi_counts: s.roi,
                live_time: s.live,
            }
        })
        .collect();
    let mut report = per_foot_report(&localized, response, None);
    let geo = GeometryParams::new(radius);
    let bin = |x: f64| (x / FOOT).floor() as i64;
    let mut by_bin: std::collections::BTreeMap<i64, (Vec<&ProfileRing>, Vec<f64>)> = Default::default();
    for r in rings.iter().filter(|r| r.stamp >= span.0) {
        if let Some((x, _)) = locate(r.stamp, 0.0) {
            by_bin.entry(bin(x)).or_default().0.push(r);
        }
    }
    for &(t, p) in pitches.iter().filter(|p| p.0 >= span.0) {
        if let Some((x, _)) = locate(t, p2d) {
            by_bin.entry(bin(x)).or_default().1.push(p);
        }
    }
    for (k, (rs, ps)) in by_bin {
        let f = flag_geometry(&rs, &ps, &geo);
        if f.round_pipe_broken {
            report.flag(k, "round_pipe_broken");
        }
        if f.pitch {
            report.flag(k, "pitch");
        }
    }
    report
}
