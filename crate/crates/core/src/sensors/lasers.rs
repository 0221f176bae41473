use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use super::NoiseConfig;
use crate::vehicle::{body_rotation, RobotPose, VehicleConfig};
use crate::world::{deg, Vec3, World};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointLasers {
    pub left: f64,
    pub right: f64,
}

/// Body-frame mount points and unit directions, left (+y) then right.
///
/// Each beam leans `point_laser_angle` off vertical; the lean is split
/// between forward and outward so that in a centered robot the spot lands
/// on the track centerline.
pub fn laser_geometry(cfg: &VehicleConfig, radius: f64) -> [(Vec3, Vec3); 2] {
    let a = deg(cfg.point_laser_angle);
    let (mx, my) = cfg.laser_mount;
    let track_y = cfg.track_width / 2.0;
    let depth = (radius * radius - track_y * track_y).sqrt();
    let reach = depth * a.tan();
    let phi = ((track_y - my) / reach).clamp(-1.0, 1.0).asin();
    let mk = |side: f64| {
        (
            Vec3::new(mx, side * my, 0.0),
            Vec3::new(a.sin() * phi.cos(), side * a.sin() * phi.sin(), -a.cos()),
        )
    };
    [mk(1.0), mk(-1.0)]
}

pub fn sample_point_lasers<R: Rng>(
    cfg: &VehicleConfig,
    pose: &RobotPose,
    world: &World,
    noise: &NoiseConfig,
    rng: &mut R,
) -> PointLasers {
    let rot = body_rotation(pose);
    let geo = laser_geometry(cfg, world.nominal_radius());
    let gauss = Normal::new(0.0, noise.laser_sigma.max(0.0)).unwrap();
    let mut out = [0.0; 2];
    for (k, (m, d)) in geo.iter().enumerate() {
        let o = cfg.body_to_world(pose, m);
        let hit = world.cast_ray(&o, &(rot * d));
        out[k] = if noise.laser_sigma > 0.0 {
            hit.range + gauss.sample(rng)
        } else {
            hit.range
        };
    }
    PointLasers {
        left: out[0],
        right: out[1],
    }
}

/// Ranges a clean pipe of `radius` would return for a robot centered on the
/// axis with the given attitude.
pub fn expected_laser_ranges(
    cfg: &VehicleConfig,
    radius: f64,
    roll: f64,
    pitch: f64,
    yaw: f64,
) -> PointLasers {
    let pose = RobotPose {
        x: 0.0,
        y: 0.0,
        z: 0.0,
        roll,
        pitch,
        yaw,
        v: 0.0,
        t: 0.0,
        grounded: false,
        track_travel: [0.0; 2],
    };
    let rot = body_rotation(&pose);
    let geo = laser_geometry(cfg, radius);
    let mut out = [0.0; 2];
    for (k, (m, d)) in geo.iter().enumerate() {
        let o = rot * m;
        let dw = rot * d;
        let a = dw.y * dw.y + dw.z * dw.z;
        let b = o.y * dw.y + o.z * dw.z;
        let c = o.y * o.y + o.z * o.z - radius * radius;
        out[k] = (-b + (b * b - a * c).max(0.0).sqrt()) / a;
    }
    PointLasers {
        left: out[0],
        right: out[1],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::load_scenario;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Nominal D30 range from a centered robot, frozen from the ray caster.
    const R_NOM_D30: f64 = 0.3896664935869152;

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

    fn sample(fittings: &str, x: f64) -> PointLasers {
        let s = load_scenario(&format!(
            r#"{{"diameter_class": "D30", "pipe_length": 20, "commanded_distance": 10, "seed": 1,
                "fittings": [{fittings}]}}"#
        ))
        .unwrap();
        let w = World::new(&s);
        let cfg = VehicleConfig::for_class(s.diameter_class);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        sample_point_lasers(&cfg, &pose(x), &w, &NoiseConfig::noiseless(), &mut rng)
    }

    #[test]
    fn centered_nominal_range() {
        let l = sample("", 5.0);
        assert!((l.left - R_NOM_D30).abs() < 1e-9, "{}", l.left);
        assert!((l.right - R_NOM_D30).abs() < 1e-9);
        let cfg = VehicleConfig::for_class(crate::world::DiameterClass::D30);
        let e = expected_laser_ranges(&cfg, 0.381, 0.0, 0.0, 0.0);
        assert!((e.left - R_NOM_D30).abs() < 1e-9);
    }

    #[test]
    fn hole_reads_long() {
        // Spots land ~0.16 m ahead of the mount, at x ~ 6.01.
        let l = sample(
            r#"{"kind": "hole", "position": 5.9, "axial_extent": 0.3, "angular_extent": 90, "clock_angle": 180}"#,
            5.95,
        );
        assert!(l.left >= 9.99 && l.right >= 9.99, "{l:?}");
    }

    #[test]
    fn obstacle_under_track_reads_short() {
        let l = sample(
            r#"{"kind": "obstacle", "position": 5.9, "height": 0.06, "length": 0.3, "clock_angle": 157}"#,
            5.95,
        );
        assert!(l.left < R_NOM_D30 - 0.05, "{l:?}");
    }
}
