use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use super::NoiseConfig;
use crate::vehicle::RobotPose;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImuSample {
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

/// Constant per-run attitude bias (rad).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ImuBias(pub [f64; 3]);

impl ImuBias {
    pub fn draw<R: Rng>(noise: &NoiseConfig, rng: &mut R) -> Self {
        if noise.imu_bias_sigma <= 0.0 {
            return Self::default();
        }
        let n = Normal::new(0.0, noise.imu_bias_sigma.to_radians()).unwrap();
        ImuBias([n.sample(rng), n.sample(rng), n.sample(rng)])
    }
}

pub fn sample_imu<R: Rng>(
    pose: &RobotPose,
    noise: &NoiseConfig,
    bias: &ImuBias,
    rng: &mut R,
) -> ImuSample {
    let mut e = [0.0; 3];
    if noise.imu_sigma > 0.0 {
        let n = Normal::new(0.0, noise.imu_sigma.to_radians()).unwrap();
        for v in &mut e {
            *v = n.sample(rng);
        }
    }
    ImuSample {
        roll: pose.roll + bias.0[0] + e[0],
        pitch: pose.pitch + bias.0[1] + e[1],
        yaw: pose.yaw + bias.0[2] + e[2],
    }
}
