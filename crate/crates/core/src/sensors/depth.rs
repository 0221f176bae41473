use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::NoiseConfig;
use crate::vehicle::{body_rotation, RobotPose, VehicleConfig};
use crate::world::{deg, FittingTag, Surface, Vec3, World};

/// Points in the mapper frame: origin at the mapper, axes aligned with the
/// body (x forward, z up).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
    pub confidence: Vec<f64>,
    pub stamp: f64,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn push(&mut self, p: Vec3, c: f64) {
        self.points.push(p);
        self.confidence.push(c);
    }
}

/// Body-frame unit directions of the mapper ray grid, row-major.
pub fn mapper_directions(noise: &NoiseConfig) -> Vec<Vec3> {
    let (cols, rows) = (noise.mapper_cols, noise.mapper_rows);
    let (hf, vf) = (deg(noise.mapper_hfov), deg(noise.mapper_vfov));
    let mut out = Vec::with_capacity(cols * rows);
    for r in 0..rows {
        let el = vf * (r as f64 / (rows - 1) as f64 - 0.5);
        for c in 0..cols {
            let az = hf * (c as f64 / (cols - 1) as f64 - 0.5);
            out.push(Vec3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin()));
        }
    }
    out
}

/// Confidence model: falls with range and with grazing incidence.
pub fn confidence(range: f64, max_range: f64, cos_incidence: f64) -> f64 {
    let f = (range / max_range).min(1.0);
    ((1.0 - f * f) * (0.6 + 0.4 * cos_incidence.abs())).clamp(0.0, 1.0)
}

fn surface_normal(surface: Surface, p: &Vec3) -> Vec3 {
    match surface {
        Surface::Fitting(FittingTag::ClosedValve) => Vec3::new(1.0, 0.0, 0.0),
        _ => {
            let r = p.y.hypot(p.z);
            if r > 0.0 {
                Vec3::new(0.0, p.y / r, p.z / r)
            } else {
                Vec3::new(1.0, 0.0, 0.0)
            }
        }
    }
}

/// One depth frame from the forward mapper.
pub fn sample_depth_map<R: Rng>(
    cfg: &VehicleConfig,
    pose: &RobotPose,
    world: &World,
    noise: &NoiseConfig,
    directions: &[Vec3],
    rng: &mut R,
) -> PointCloud {
    let rot = body_rotation(pose);
    let origin = cfg.body_to_world(pose, &Vec3::new(cfg.mapper_offset, 0.0, 0.0));
    let gauss = Normal::new(0.0, noise.mapper_sigma.max(0.0)).unwrap();
    let mut cloud = PointCloud {
        points: Vec::with_capacity(directions.len()),
        confidence: Vec::with_capacity(directions.len()),
        stamp: pose.t,
    };
    for d in directions {
        let dw = rot * d;
        let hit = world.cast_ray_within(&origin, &dw, noise.mapper_max_range);
        if hit.surface == Surface::None || hit.range > noise.mapper_max_range {
            continue;
        }
        if noise.mapper_outlier_rate > 0.0 && rng.random::<f64>() < noise.mapper_outlier_rate {
            let r = rng.random_range(0.1..noise.mapper_max_range);
            let c = rng.random_range(0.0..0.3);
            cloud.push(d * r, c);
            continue;
        }
        let hp = origin + dw * hit.range;
        let n = surface_normal(hit.surface, &hp);
        let c = confidence(hit.range, noise.mapper_max_range, dw.dot(&n));
        let r = if noise.mapper_sigma > 0.0 {
            hit.range + gauss.sample(rng)
        } else {
            hit.range
        };
        cloud.push(d * r, c);
    }
    cloud
}
