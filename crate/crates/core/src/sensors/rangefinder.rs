use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use super::NoiseConfig;
use crate::vehicle::{RobotPose, VehicleConfig};
use crate::world::{Vec3, World, RIG_TARGET_RADIUS, RIG_TARGET_SETBACK};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RangeReading {
    pub range: f64,
    pub returned: bool,
    /// Ground truth: whether this reading is a true fix on the target.
    pub valid: bool,
}

/// Distance along the rear beam to the rig target plate, if the beam meets it.
pub fn target_distance(cfg: &VehicleConfig, pose: &RobotPose, world: &World) -> Option<f64> {
    let o = cfg.body_to_world(pose, &Vec3::new(-cfg.rangefinder_offset, 0.0, 0.0));
    let d = cfg.dir_to_world(pose, &Vec3::new(-1.0, 0.0, 0.0));
    let rig = world.rig_frame();
    let q = rig.to_rig(&o);
    let e = rig.dir_to_rig(&d);
    if e.x > -1e-9 {
        return None;
    }
    let t = (-RIG_TARGET_SETBACK - q.x) / e.x;
    if t < 0.0 {
        return None;
    }
    let p = q + e * t;
    (p.y.hypot(p.z) <= RIG_TARGET_RADIUS).then_some(t)
}

/// Probability of a valid fix at target distance `d`.
pub fn fix_probability(noise: &NoiseConfig, d: f64) -> f64 {
    let lock = noise.rangefinder_lock_distance;
    if d < lock {
        return 1.0;
    }
    let span = noise.rangefinder_max_fix_distance - lock;
    if span <= 0.0 {
        return 0.0;
    }
    noise.rangefinder_far_fix_prob * (1.0 - (d - lock) / span).max(0.0)
}

pub fn sample_rangefinder<R: Rng>(
    cfg: &VehicleConfig,
    pose: &RobotPose,
    world: &World,
    noise: &NoiseConfig,
    rng: &mut R,
) -> RangeReading {
    let truth = target_distance(cfg, pose, world);
    let u: f64 = rng.random();
    let e = if noise.rangefinder_sigma > 0.0 {
        Normal::new(0.0, noise.rangefinder_sigma).unwrap().sample(rng)
    } else {
        0.0
    };
    match truth {
        Some(d) if u < fix_probability(noise, d) => RangeReading {
            range: d + e,
            returned: true,
            valid: true,
        },
        _ => {
            // Beam strikes the pipe wall somewhere behind the robot.
            let reach = truth.unwrap_or(pose.x.abs() + 1.0);
            let hi = (0.75 * reach).max(1.0 + 1e-6);
            RangeReading {
                range: rng.random_range(1.0..hi),
                returned: true,
                valid: false,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::load_scenario;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (World, VehicleConfig) {
        let s = load_scenario(
            r#"{"diameter_class": "D30", "pipe_length": 40, "commanded_distance": 33, "seed": 1,
                "entrance": {"gap": 0.1}}"#,
        )
        .unwrap();
        (World::new(&s), VehicleConfig::for_class(s.diameter_class))
    }

    fn pose(x: f64) -> RobotPose {
        RobotPose {
            x,
            y: 0.0,
            z: 0.0,
            roll: 0.0,
            pitch: 0.0,
            yaw: 0.0,
            v: 0.0,
            t: 0.0,
            grounded: false,
            track_travel: [0.0; 2],
        }
    }

    #[test]
    fn locked_range_is_distance_plus_rig_offset() {
        let (w, cfg) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = sample_rangefinder(&cfg, &pose(5.0), &w, &NoiseConfig::noiseless(), &mut rng);
        // detector 5.0, rangefinder 0.85 behind it, target 1.2 behind a rig at -0.1
        assert!(r.valid);
        assert!((r.range - (5.0 - 0.85 + 0.1 + 1.2)).abs() < 1e-12);
    }

    #[test]
    fn far_readings_mix_fixes_and_wall_strikes() {
        let (w, cfg) = setup();
        let noise = NoiseConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (mut good, mut bad) = (Vec::new(), Vec::new());
        for _ in 0..10_000 {
            let r = sample_rangefinder(&cfg, &pose(30.0), &w, &noise, &mut rng);
            if r.valid { good.push(r.range) } else { bad.push(r.range) }
        }
        let var = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
        };
        assert!(!good.is_empty() && !bad.is_empty());
        assert!(var(&bad) >= 10.0 * var(&good), "{} vs {}", var(&bad), var(&good));
    }

    #[test]
    fn fix_probability_falls_to_zero() {
        let n = NoiseConfig::default();
        assert_eq!(fix_probability(&n, 5.0), 1.0);
        assert!((fix_probability(&n, n.rangefinder_lock_distance) - 0.2).abs() < 1e-12);
        assert_eq!(fix_probability(&n, 40.0), 0.0);
    }
}
