//! Robot kinematics: track motion with slip, two-point terrain contact,
//! centering steering and deployment onto the launch rig.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;
use thiserror::Error;

use crate::sensors::NoiseConfig;
use crate::world::{deg, DiameterClass, EntranceEnvelope, Scenario, Vec3, World};

/// Master tick (50 Hz).
pub const TICK: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RobotPose {
    /// Detector crystal position along the axis.
    pub x: f64,
    /// Lateral and vertical offsets of the body center from the pipe axis.
    pub y: f64,
    pub z: f64,
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
    /// Signed commanded ground speed.
    pub v: f64,
    pub t: f64,
    /// Set when a track is blocked by an obstacle above the step limit.
    pub grounded: bool,
    /// Cumulative track travel (left, right) as turned by the drive.
    pub track_travel: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleConfig {
    pub diameter_class: DiameterClass,
    pub speed: f64,
    /// Detector crystal center forward of the body origin.
    pub detector_offset: f64,
    /// Rangefinder rearward of the body origin.
    pub rangefinder_offset: f64,
    /// Depth mapper forward of the body origin.
    pub mapper_offset: f64,
    /// Profiler scan plane rearward of the body origin.
    pub profiler_offset: f64,
    /// Point laser mount: forward and lateral offsets from the body origin.
    pub laser_mount: (f64, f64),
    pub point_laser_angle: f64,
    pub track_width: f64,
    /// Half distance between front and rear track contacts.
    pub track_half_span: f64,
    pub max_step: f64,
    pub max_gap: f64,
    /// Natural frequency of the centering loop (rad per meter travelled).
    pub steer_omega: f64,
    pub max_yaw_rate: f64,
    pub max_yaw_accel: f64,
}

impl VehicleConfig {
    pub fn for_class(class: DiameterClass) -> Self {
        let (speed, track_width) = match class {
            // 10 and 6 feet per minute
            DiameterClass::D30 => (10.0 * 0.3048 / 60.0, 0.30),
            DiameterClass::D42 => (6.0 * 0.3048 / 60.0, 0.42),
        };
        Self {
            diameter_class: class,
            speed,
            detector_offset: 0.45,
            rangefinder_offset: 0.40,
            mapper_offset: 0.55,
            profiler_offset: 0.20,
            laser_mount: (0.35, 0.10),
            point_laser_angle: 26.0,
            track_width,
            track_half_span: 0.35,
            max_step: 0.05,
            max_gap: 0.18,
            steer_omega: 2.0,
            max_yaw_rate: 0.02,
            max_yaw_accel: 0.05,
        }
    }

    /// Distance from the profiler scan plane forward to the detector.
    pub fn profiler_to_detector(&self) -> f64 {
        self.detector_offset + self.profiler_offset
    }

    pub fn body_x(&self, pose: &RobotPose) -> f64 {
        pose.x - self.detector_offset
    }

    /// World position of a point given in the body frame.
    pub fn body_to_world(&self, pose: &RobotPose, p: &Vec3) -> Vec3 {
        body_rotation(pose) * p + Vec3::new(self.body_x(pose), pose.y, pose.z)
    }

    /// World direction of a body-frame direction.
    pub fn dir_to_world(&self, pose: &RobotPose, d: &Vec3) -> Vec3 {
        body_rotation(pose) * d
    }
}

/// Rotation body→world: yaw about z (toward +y), pitch nose-up, roll.
pub fn body_rotation(pose: &RobotPose) -> nalgebra::Matrix3<f64> {
    let (sy, cy) = pose.yaw.sin_cos();
    let (sp, cp) = pose.pitch.sin_cos();
    let (sr, cr) = pose.roll.sin_cos();
    let rz = nalgebra::Matrix3::new(cy, -sy, 0.0, sy, cy, 0.0, 0.0, 0.0, 1.0);
    // Positive pitch lifts the nose (+x toward +z).
    let ry = nalgebra::Matrix3::new(cp, 0.0, -sp, 0.0, 1.0, 0.0, sp, 0.0, cp);
    let rx = nalgebra::Matrix3::new(1.0, 0.0, 0.0, 0.0, cr, -sr, 0.0, sr, cr);
    rz * ry * rx
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Motion {
    Forward,
    Reverse,
    Stop,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveCommand {
    pub motion: Motion,
    /// Fraction of nominal speed.
    pub throttle: f64,
    /// Commanded yaw rate (rad/s).
    pub yaw_rate: f64,
}

impl DriveCommand {
    pub fn stop() -> Self {
        Self {
            motion: Motion::Stop,
            throttle: 0.0,
            yaw_rate: 0.0,
        }
    }

    pub fn new(motion: Motion, throttle: f64) -> Self {
        Self {
            motion,
            throttle,
            yaw_rate: 0.0,
        }
    }
}

/// Per-run drive state that is not part of the observable pose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlipState {
    pub bias: f64,
}

impl SlipState {
    pub fn draw<R: Rng>(noise: &NoiseConfig, rng: &mut R) -> Self {
        let bias = if noise.slip_bias_sigma > 0.0 {
            Normal::new(0.0, noise.slip_bias_sigma).unwrap().sample(rng)
        } else {
            0.0
        };
        Self { bias }
    }
}

/// Floor heights seen by the track contacts.
#[derive(Debug, Clone, Copy)]
struct Contacts {
    pitch: f64,
    roll: f64,
    z: f64,
    max_obstacle: f64,
}

/// Elevation of the support under a track at `(x, y)` relative to the
/// nominal pipe floor, and the obstacle height there.
fn support(world: &World, x: f64, y: f64) -> (f64, f64) {
    let r0 = world.nominal_radius();
    let nominal = -(r0 * r0 - y * y).max(0.0).sqrt();
    let rig = world.rig_frame();
    let gap = -rig.origin.x;
    if x < -gap {
        let q = rig.to_rig(&Vec3::new(x, y, 0.0));
        let floor = -(r0 * r0 - q.y * q.y).max(0.0).sqrt() + rig.origin.z;
        return (floor - nominal, 0.0);
    }
    if x < 0.0 {
        // Tracks bridge the gap between the rig lip and the pipe edge.
        let (rig_e, _) = support(world, -gap - 1e-9, y);
        let (pipe_e, h) = support(world, 0.0, y);
        let f = (x + gap) / gap.max(1e-9);
        return (rig_e + f * (pipe_e - rig_e), h);
    }
    let r = world.radius_profile(x);
    let theta = y.atan2(-(r * r - y * y).max(0.0).sqrt());
    let h = world.obstacle_height(x, theta);
    let rr = r - h;
    let floor = -(rr * rr - y * y).max(0.0).sqrt();
    (floor - nominal, h)
}

fn contacts(cfg: &VehicleConfig, world: &World, body_x: f64, y: f64) -> Contacts {
    let hw = cfg.track_width / 2.0;
    let s = cfg.track_half_span;
    let mut e = [[0.0; 2]; 2];
    let mut max_h = 0.0f64;
    for (i, dx) in [s, -s].into_iter().enumerate() {
        for (j, dy) in [hw, -hw].into_iter().enumerate() {
            let (el, h) = support(world, body_x + dx, y + dy);
            e[i][j] = el;
            max_h = max_h.max(h);
        }
    }
    let front = 0.5 * (e[0][0] + e[0][1]);
    let rear = 0.5 * (e[1][0] + e[1][1]);
    let left = 0.5 * (e[0][0] + e[1][0]);
    let right = 0.5 * (e[0][1] + e[1][1]);
    Contacts {
        pitch: ((front - rear) / (2.0 * s)).atan(),
        roll: ((right - left) / cfg.track_width).atan(),
        z: 0.5 * (front + rear),
        max_obstacle: max_h,
    }
}

/// Whether the rear contacts still ride in the rig trough.
fn on_rig(cfg: &VehicleConfig, world: &World, body_x: f64) -> bool {
    body_x - cfg.track_half_span < world.rig_frame().origin.x
}

/// Lateral offset of the rig trough axis at `x`.
fn rig_axis_y(world: &World, x: f64) -> f64 {
    let f = world.rig_frame();
    f.origin.y + (x - f.origin.x) * f.yaw.tan()
}

/// Advances the pose by one tick.
#[allow(clippy::too_many_arguments)]
pub fn step_dynamics<R: Rng>(
    cfg: &VehicleConfig,
    pose: &RobotPose,
    command: &DriveCommand,
    world: &World,
    noise: &NoiseConfig,
    slip: &SlipState,
    dt: f64,
    rng: &mut R,
) -> RobotPose {
    let mut next = *pose;
    next.t = pose.t + dt;
    let dir = match command.motion {
        Motion::Forward => 1.0,
        Motion::Reverse => -1.0,
        Motion::Stop => {
            next.v = 0.0;
            return next;
        }
    };
    let v = dir * cfg.speed * command.throttle;
    next.v = v;
    let turned = v * dt;
    let slip_noise = if noise.slip_sigma > 0.0 {
        Normal::new(0.0, noise.slip_sigma).unwrap().sample(rng)
    } else {
        0.0
    };
    let ds = turned * (1.0 + slip.bias + slip_noise);

    let bx = cfg.body_x(pose);
    let rigged = on_rig(cfg, world, bx);
    let yaw_rate = if rigged {
        0.0
    } else {
        command.yaw_rate.clamp(-cfg.max_yaw_rate, cfg.max_yaw_rate)
    };
    let mut yaw = pose.yaw + yaw_rate * dt;
    let nbx = bx + ds * pose.yaw.cos();
    let mut y = pose.y + ds * pose.yaw.sin();
    if on_rig(cfg, world, nbx) {
        // The trough guides the body along the rig axis.
        y = rig_axis_y(world, nbx);
        yaw = world.rig_frame().yaw;
    }
    let c = contacts(cfg, world, nbx, y);
    if c.max_obstacle > cfg.max_step {
        let before = contacts(cfg, world, bx, pose.y);
        if c.max_obstacle > before.max_obstacle {
            next.grounded = true;
            next.v = 0.0;
            return next;
        }
    }
    let half_width = cfg.track_width / 2.0;
    next.track_travel[0] = pose.track_travel[0] + turned - yaw_rate * dt * half_width;
    next.track_travel[1] = pose.track_travel[1] + turned + yaw_rate * dt * half_width;
    next.grounded = false;
    next.x = nbx + cfg.detector_offset;
    next.y = y;
    next.yaw = yaw;
    next.pitch = c.pitch;
    next.roll = c.roll;
    next.z = c.z;
    next
}

/// Centering controller, critically damped in travelled distance:
/// yaw rate = |v| (-a·yaw - sgn(v)·b·y) with a = 2ω, b = ω².
pub fn steer_controller(cfg: &VehicleConfig, imu_yaw: f64, center_y: f64, v: f64) -> f64 {
    let w = cfg.steer_omega;
    let u = v.abs() * (-2.0 * w * imu_yaw - v.signum() * w * w * center_y);
    u.clamp(-cfg.max_yaw_rate, cfg.max_yaw_rate)
}

/// Bounds the change of the steering command per tick.
pub fn slew(cfg: &VehicleConfig, previous: f64, wanted: f64, dt: f64) -> f64 {
    let d = cfg.max_yaw_accel * dt;
    wanted.clamp(previous - d, previous + d)
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("deployment outside envelope: {reason}")]
pub struct DeployError {
    pub reason: String,
}

/// Places the robot on the launch rig, checking the placement envelope.
pub fn deploy(scenario: &Scenario, world: &World) -> Result<RobotPose, DeployError> {
    let env = EntranceEnvelope::default();
    if let Some((name, v, lim)) = scenario.entrance.violation(&env) {
        return Err(DeployError {
            reason: format!("{name} = {v} exceeds limit {lim}"),
        });
    }
    let cfg = VehicleConfig::for_class(scenario.diameter_class);
    let e = &scenario.entrance;
    let x = -e.gap - e.setback - 0.15;
    let bx = x - cfg.detector_offset;
    let y = rig_axis_y(world, bx);
    let c = contacts(&cfg, world, bx, y);
    Ok(RobotPose {
        x,
        y,
        z: c.z,
        roll: c.roll,
        pitch: c.pitch,
        yaw: deg(e.yaw),
        v: 0.0,
        t: 0.0,
        grounded: false,
        track_travel: [0.0, 0.0],
    })
}
