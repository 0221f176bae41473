use nalgebra::{Matrix5, SMatrix, SVector, Vector5};
use rand::seq::index;
use rand::Rng;
use serde::Serialize;

use super::{CylinderModel, FitError};
use crate::sensors::PointCloud;
use crate::world::{deg, Vec3};

const MIN_POINTS: usize = 50;
const SAMPLE: usize = 7;
const MIN_CONSENSUS: f64 = 0.3;

#[derive(Debug, Clone, PartialEq)]
pub struct RansacParams {
    /// Upper bound on hypotheses per frame.
    pub iterations: usize,
    pub inlier_tol: f64,
    /// Largest accepted axis tilt from the sensor's forward axis.
    pub max_tilt: f64,
    pub radius_bounds: (f64, f64),
    /// Points used to score hypotheses.
    pub score_points: usize,
    /// Stop once a clean sample has been drawn with this probability.
    pub success_probability: f64,
    pub min_iterations: usize,
    /// Cap on inliers used by the least-squares refinement.
    pub refine_points: usize,
}

impl Default for RansacParams {
    fn default() -> Self {
        Self {
            iterations: 200,
            inlier_tol: 0.01,
            max_tilt: deg(15.0),
            radius_bounds: (0.05, 2.0),
            score_points: 256,
            success_probability: 0.999,
            min_iterations: 10,
            refine_points: 400,
        }
    }
}

impl RansacParams {
    pub fn for_radius(radius: f64) -> Self {
        Self {
            radius_bounds: (0.6 * radius, 1.4 * radius),
            ..Self::default()
        }
    }
}

/// Keeps points with confidence at or above the threshold, in order.
pub fn prefilter(cloud: &PointCloud, min_confidence: f64) -> PointCloud {
    let mut out = PointCloud {
        stamp: cloud.stamp,
        ..PointCloud::default()
    };
    for (p, c) in cloud.points.iter().zip(&cloud.confidence) {
        if *c >= min_confidence {
            out.push(*p, *c);
        }
    }
    out
}

/// Axis parameters: the axis passes through (0, y0, z0) with direction
/// (1, a, b).
#[derive(Debug, Clone, Copy)]
struct Axis {
    y0: f64,
    z0: f64,
    a: f64,
    b: f64,
}

impl Axis {
    fn from_vec(v: &Vector5<f64>) -> (Self, f64) {
        (
            Axis {
                y0: v[0],
                z0: v[1],
                a: v[2],
                b: v[3],
            },
            v[4],
        )
    }

    fn dist(&self, p: &Vec3) -> f64 {
        let u = Vec3::new(1.0, self.a, self.b).normalize();
        let d = p - Vec3::new(0.0, self.y0, self.z0);
        (d - u * d.dot(&u)).norm()
    }

    fn tilt(&self) -> f64 {
        self.a.hypot(self.b).atan()
    }

    fn model(&self, radius: f64, inlier_fraction: f64) -> CylinderModel {
        CylinderModel {
            axis_point: Vec3::new(0.0, self.y0, self.z0),
            axis_dir: Vec3::new(1.0, self.a, self.b).normalize(),
            radius,
            inlier_fraction,
        }
    }
}

/// Minimal solver. A near-axial cylinder cut by the plane x = const is a
/// circle with center (y0 + a x, z0 + b x); expanding that circle gives an
/// equation linear in (y0, a, z0, b) and a quadratic K(x), so seven points
/// pin it down.
fn hypothesize(pts: &[Vec3]) -> Option<(Axis, f64)> {
    let mut m = SMatrix::<f64, 7, 7>::zeros();
    let mut rhs = SVector::<f64, 7>::zeros();
    for (i, p) in pts.iter().enumerate() {
        let (x, y, z) = (p.x, p.y, p.z);
        m.set_row(
            i,
            &nalgebra::RowSVector::<f64, 7>::from_row_slice(&[
                2.0 * y,
                2.0 * x * y,
                2.0 * z,
                2.0 * x * z,
                -1.0,
                -x,
                -x * x,
            ]),
        );
        rhs[i] = y * y + z * z;
    }
    let sol = m.lu().solve(&rhs)?;
    if sol.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let axis = Axis {
        y0: sol[0],
        a: sol[1],
        z0: sol[2],
        b: sol[3],
    };
    let xm = pts.iter().map(|p| p.x).sum::<f64>() / pts.len() as f64;
    let cy = axis.y0 + axis.a * xm;
    let cz = axis.z0 + axis.b * xm;
    let r2 = cy * cy + cz * cz - (sol[4] + sol[5] * xm + sol[6] * xm * xm);
    if !(r2 > 0.0) {
        return None;
    }
    Some((axis, r2.sqrt()))
}

fn count_inliers(pts: &[Vec3], idx: &[usize], axis: &Axis, r: f64, tol: f64) -> usize {
    idx.iter()
        .filter(|&&i| (axis.dist(&pts[i]) - r).abs() <= tol)
        .count()
}

fn inlier_indices(pts: &[Vec3], axis: &Axis, r: f64, tol: f64) -> Vec<usize> {
    (0..pts.len())
        .filter(|&i| (axis.dist(&pts[i]) - r).abs() <= tol)
        .collect()
}

/// Gauss-Newton on (y0, z0, a, b, r) with numeric derivatives.
fn refine(pts: &[Vec3], idx: &[usize], axis: Axis, r: f64) -> (Axis, f64) {
    let mut v = Vector5::new(axis.y0, axis.z0, axis.a, axis.b, r);
    let resid = |v: &Vector5<f64>, p: &Vec3| {
        let (ax, r) = Axis::from_vec(v);
        ax.dist(p) - r
    };
    for _ in 0..6 {
        let mut jtj = Matrix5::<f64>::zeros();
        let mut jte = Vector5::<f64>::zeros();
        for &i in idx {
            let p = &pts[i];
            let e = resid(&v, p);
            let mut j = Vector5::<f64>::zeros();
            for k in 0..4 {
                let h = 1e-6;
                let mut hi = v;
                let mut lo = v;
                hi[k] += h;
                lo[k] -= h;
                j[k] = (resid(&hi, p) - resid(&lo, p)) / (2.0 * h);
            }
            j[4] = -1.0;
            jtj += j * j.transpose();
            jte += j * e;
        }
        let Some(chol) = jtj.cholesky() else { break };
        let step = chol.solve(&jte);
        v -= step;
        if step.norm() < 1e-7 {
            break;
        }
    }
    Axis::from_vec(&v)
}

fn stride_subset(idx: &[usize], cap: usize) -> Vec<usize> {
    if idx.len() <= cap {
        return idx.to_vec();
    }
    let step = idx.len() as f64 / cap as f64;
    (0..cap).map(|k| idx[(k as f64 * step) as usize]).collect()
}

/// RANSAC cylinder fit with adaptive termination and least-squares
/// refinement over the consensus set.
pub fn fit_cylinder<R: Rng>(
    cloud: &PointCloud,
    rng: &mut R,
    params: &RansacParams,
) -> Result<CylinderModel, FitError> {
    let pts = &cloud.points;
    let n = pts.len();
    if n < MIN_POINTS {
        return Err(FitError::InsufficientPoints(n));
    }
    let score_idx: Vec<usize> = if n <= params.score_points {
        (0..n).collect()
    } else {
        let mut v = index::sample(rng, n, params.score_points).into_vec();
        v.sort_unstable();
        v
    };
    let mut best: Option<(Axis, f64, usize)> = None;
    let mut needed = params.iterations;
    let mut it = 0;
    let mut sample = [Vec3::zeros(); SAMPLE];
    while it < needed {
        it += 1;
        for (slot, i) in sample.iter_mut().zip(index::sample(rng, n, SAMPLE)) {
            *slot = pts[i];
        }
        let Some((axis, r)) = hypothesize(&sample) else {
            continue;
        };
        if axis.tilt() > params.max_tilt || r < params.radius_bounds.0 || r > params.radius_bounds.1
        {
            continue;
        }
        let score = count_inliers(pts, &score_idx, &axis, r, params.inlier_tol);
        if best.is_none_or(|(_, _, s)| score > s) {
            best = Some((axis, r, score));
            let w = score as f64 / score_idx.len() as f64;
            let clean = w.powi(SAMPLE as i32);
            let want = if clean >= 1.0 {
                params.min_iterations
            } else if clean <= 0.0 {
                params.iterations
            } else {
                ((1.0 - params.success_probability).ln() / (1.0 - clean).ln()).ceil() as usize
            };
            needed = want.clamp(params.min_iterations, params.iterations);
        }
    }
    let Some((axis, r, score)) = best else {
        return Err(FitError::NoConsensus);
    };
    if (score as f64) < MIN_CONSENSUS * score_idx.len() as f64 {
        return Err(FitError::NoConsensus);
    }
    let tol = params.inlier_tol;
    let (mut axis, mut r) = (axis, r);
    for _ in 0..2 {
        let inl = inlier_indices(pts, &axis, r, tol);
        if inl.len() < SAMPLE {
            break;
        }
        (axis, r) = refine(pts, &stride_subset(&inl, params.refine_points), axis, r);
    }
    let frac = inlier_indices(pts, &axis, r, tol).len() as f64 / n as f64;
    if frac < MIN_CONSENSUS || !(r > 0.0) || axis.tilt() > params.max_tilt {
        return Err(FitError::NoConsensus);
    }
    Ok(axis.model(r, frac))
}

/// Sensor pose relative to the pipe axis, in the sensor's own axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AxisPose {
    pub y: f64,
    pub z: f64,
    /// Roll about a cylinder axis is unobservable; always zero.
    pub roll: f64,
    pub roll_observed: bool,
    /// Nose-up positive.
    pub pitch: f64,
    /// Toward +y positive.
    pub yaw: f64,
}

pub fn pose_from_cylinder(model: &CylinderModel) -> AxisPose {
    let u = model.axis_dir;
    let c = model.axis_point;
    let q = c - u * c.dot(&u);
    AxisPose {
        y: -q.y,
        z: -q.z,
        roll: 0.0,
        roll_observed: false,
        pitch: (-u.z).atan2(u.x.hypot(u.y)),
        yaw: (-u.y).atan2(u.x),
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Segmented {
    pub conforming: PointCloud,
    pub nonconforming: PointCloud,
}

/// Splits a cloud by radial residual against the model.
pub fn segment(cloud: &PointCloud, model: &CylinderModel, tol: f64) -> Segmented {
    let mut out = Segmented::default();
    out.conforming.stamp = cloud.stamp;
    out.nonconforming.stamp = cloud.stamp;
    for (p, c) in cloud.points.iter().zip(&cloud.confidence) {
        let (_, d) = model.project(p);
        if (d - model.radius).abs() <= tol {
            out.conforming.push(*p, *c);
        } else {
            out.nonconforming.push(*p, *c);
        }
    }
    out
}
