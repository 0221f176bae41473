use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use super::NoiseConfig;
use crate::vehicle::{body_rotation, RobotPose, VehicleConfig};
use crate::world::{Vec3, World, RANGE_CLAMP};

pub const PROFILE_RAYS: usize = 360;

/// One revolution of the spinning profiler. Ranges at or beyond the 10 m
/// clamp are no-returns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileRing {
    /// Ranges at 1° clock-angle steps in the body cross-section plane.
    pub ranges: Vec<f64>,
    pub stamp: f64,
    /// Estimated axial position of the scan plane.
    pub x_est: f64,
}

impl ProfileRing {
    pub fn is_return(r: f64) -> bool {
        r.is_finite() && r < RANGE_CLAMP
    }

    /// Cross-section points (y, z) of the returns.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.ranges.iter().enumerate().filter(|(_, r)| Self::is_return(**r)).map(|(i, r)| {
            let th = (i as f64).to_radians();
            (r * th.sin(), r * th.cos())
        })
    }
}

pub fn sample_profiler<R: Rng>(
    cfg: &VehicleConfig,
    pose: &RobotPose,
    world: &World,
    noise: &NoiseConfig,
    rng: &mut R,
) -> ProfileRing {
    let rot = body_rotation(pose);
    let o = cfg.body_to_world(pose, &Vec3::new(-cfg.profiler_offset, 0.0, 0.0));
    let gauss = Normal::new(0.0, noise.profiler_sigma.max(0.0)).unwrap();
    let ranges = (0..PROFILE_RAYS)
        .map(|i| {
            let th = (i as f64).to_radians();
            let d = rot * Vec3::new(0.0, th.sin(), th.cos());
            let h = world.cast_ray(&o, &d);
            if h.range >= RANGE_CLAMP || noise.profiler_sigma <= 0.0 {
                h.range
            } else {
                h.range + gauss.sample(rng)
            }
        })
        .collect();
    ProfileRing {
        ranges,
        stamp: pose.t,
        x_est: f64::NAN,
    }
}
