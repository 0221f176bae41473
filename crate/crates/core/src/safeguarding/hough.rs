use serde::Serialize;

use super::{CylinderModel, EndCondition, EndKind};
use crate::sensors::PointCloud;

#[derive(Debug, Clone, PartialEq)]
pub struct HoughParams {
    pub slab_thickness: f64,
    pub slice_step: f64,
    /// Axial centers of the first and last slab.
    pub start: f64,
    pub lookahead: f64,
    /// Points per slab that cast votes.
    pub max_voters: usize,
    pub center_span: f64,
    pub center_step: f64,
    pub radius_bin: f64,
    /// Interior occupancy that turns a slab into a filled disc.
    pub fill_threshold: f64,
    pub min_points: usize,
    pub ring_tol: f64,
    pub ring_sectors: usize,
    pub min_ring_sectors: usize,
    pub cell: f64,
    /// Fraction of the ring radius treated as interior.
    pub interior: f64,
    /// Diameter fraction that marks a reducer.
    pub reducer_ratio: f64,
}

impl Default for HoughParams {
    fn default() -> Self {
        Self {
            slab_thickness: 0.1,
            slice_step: 0.05,
            start: 0.3,
            lookahead: 2.0,
            max_voters: 40,
            center_span: 0.03,
            center_step: 0.015,
            radius_bin: 0.005,
            fill_threshold: 0.4,
            min_points: 8,
            ring_tol: 0.015,
            ring_sectors: 36,
            min_ring_sectors: 9,
            cell: 0.05,
            interior: 0.9,
            reducer_ratio: 0.9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SliceKind {
    OpenCircle(f64),
    FilledCircle,
    NoCircle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SliceClass {
    /// Axial center of the slab.
    pub x: f64,
    pub kind: SliceKind,
    pub points: usize,
    /// Interior cell occupancy.
    pub fill: f64,
    /// Median axial position of interior points (NaN when none).
    pub face: f64,
    /// Farthest ring point (NaN when no ring).
    pub wall_far: f64,
    /// Nearest point clearly inside the fitted wall (NaN when none).
    pub inner_near: f64,
}

/// Point in axis coordinates: axial position and cross-section offsets.
#[derive(Debug, Clone, Copy)]
struct Sec {
    s: f64,
    u: f64,
    v: f64,
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn classify_slab(x: f64, pts: &[Sec], model: &CylinderModel, p: &HoughParams) -> SliceClass {
    let mut out = SliceClass {
        x,
        kind: SliceKind::NoCircle,
        points: pts.len(),
        fill: 0.0,
        face: f64::NAN,
        wall_far: f64::NAN,
        inner_near: f64::NAN,
    };
    let r_model = model.radius;
    let inner = r_model - p.ring_tol;
    out.inner_near = pts
        .iter()
        .filter(|q| q.u * q.u + q.v * q.v < inner * inner)
        .map(|q| q.s)
        .fold(f64::NAN, f64::min);
    if pts.len() < p.min_points {
        return out;
    }

    // Circle Hough: a small grid of centers around the axis, radius swept.
    let nc = (2.0 * p.center_span / p.center_step).round() as usize + 1;
    let nr = (1.5 * r_model / p.radius_bin).ceil() as usize + 1;
    let mut acc = vec![0u16; nc * nc * nr];
    let stride = (pts.len() as f64 / p.max_voters as f64).max(1.0);
    let mut k = 0.0;
    while (k as usize) < pts.len() {
        let q = pts[k as usize];
        for i in 0..nc {
            let cu = -p.center_span + i as f64 * p.center_step;
            for j in 0..nc {
                let cv = -p.center_span + j as f64 * p.center_step;
                let bin = (((q.u - cu) * (q.u - cu) + (q.v - cv) * (q.v - cv)).sqrt() / p.radius_bin + 0.5) as usize;
                if bin < nr {
                    acc[(i * nc + j) * nr + bin] += 1;
                }
            }
        }
        k += stride;
    }
    let (best, votes) = acc
        .iter()
        .enumerate()
        .fold((0, 0u16), |b, (i, &v)| if v > b.1 { (i, v) } else { b });
    let (cell_ij, bin) = (best / nr, best % nr);
    let cu = -p.center_span + (cell_ij / nc) as f64 * p.center_step;
    let cv = -p.center_span + (cell_ij % nc) as f64 * p.center_step;
    let r_bin = bin as f64 * p.radius_bin;

    let mut sectors = vec![false; p.ring_sectors];
    let mut ring_r = Vec::new();
    let mut ring_far = f64::NAN;
    for q in pts {
        let (du, dv) = (q.u - cu, q.v - cv);
        let d = (du * du + dv * dv).sqrt();
        if votes >= 3 && (d - r_bin).abs() <= p.ring_tol {
            let a = dv.atan2(du).rem_euclid(std::f64::consts::TAU);
            let sec = ((a / std::f64::consts::TAU) * p.ring_sectors as f64) as usize;
            sectors[sec.min(p.ring_sectors - 1)] = true;
            ring_r.push(d);
            ring_far = ring_far.max(q.s);
        }
    }
    let n_sec = sectors.iter().filter(|s| **s).count();
    let ring_ok = n_sec >= p.min_ring_sectors;
    let ring_radius = if ring_ok {
        ring_r.iter().sum::<f64>() / ring_r.len() as f64
    } else {
        r_model
    };

    // Interior occupancy on a square grid clipped to the disc.
    let ri = p.interior * ring_radius;
    let (fcu, fcv) = if ring_ok { (cu, cv) } else { (0.0, 0.0) };
    let ncell = (2.0 * ri / p.cell).ceil() as usize;
    let mut occ = vec![false; ncell * ncell];
    let mut face = Vec::new();
    for q in pts {
        let (du, dv) = (q.u - fcu, q.v - fcv);
        if du * du + dv * dv >= ri * ri {
            continue;
        }
        let iu = (((du + ri) / p.cell) as usize).min(ncell - 1);
        let iv = (((dv + ri) / p.cell) as usize).min(ncell - 1);
        occ[iu * ncell + iv] = true;
        face.push(q.s);
    }
    let mut total = 0usize;
    let mut hit = 0usize;
    for iu in 0..ncell {
        for iv in 0..ncell {
            let cu_ = -ri + (iu as f64 + 0.5) * p.cell;
            let cv_ = -ri + (iv as f64 + 0.5) * p.cell;
            if cu_ * cu_ + cv_ * cv_ < ri * ri {
                total += 1;
                hit += occ[iu * ncell + iv] as usize;
            }
        }
    }
    out.fill = if total > 0 { hit as f64 / total as f64 } else { 0.0 };
    out.face = median(face);
    if out.fill >= p.fill_threshold {
        out.kind = SliceKind::FilledCircle;
    } else if ring_ok {
        out.kind = SliceKind::OpenCircle(2.0 * ring_radius);
        out.wall_far = ring_far;
    }
    out
}

/// Sweeps overlapping axial slabs ahead of the sensor and classifies each
/// cross-section.
pub fn sweep_circles(cloud: &PointCloud, model: &CylinderModel, p: &HoughParams) -> Vec<SliceClass> {
    let (e1, e2) = model.section_basis();
    let mut sec: Vec<Sec> = cloud
        .points
        .iter()
        .map(|q| {
            let d = q - model.axis_point;
            Sec {
                s: d.dot(&model.axis_dir),
                u: d.dot(&e1),
                v: d.dot(&e2),
            }
        })
        .collect();
    sec.sort_unstable_by(|a, b| a.s.total_cmp(&b.s));
    let n = ((p.lookahead - p.start) / p.slice_step + 1e-9).floor() as usize + 1;
    let half = p.slab_thickness / 2.0;
    (0..n)
        .map(|k| {
            let x = p.start + k as f64 * p.slice_step;
            let lo = sec.partition_point(|q| q.s < x - half);
            let hi = sec.partition_point(|q| q.s <= x + half);
            classify_slab(x, &sec[lo..hi], model, p)
        })
        .collect()
}

/// Reads an end-of-run condition off the slab sequence. The distance is the
/// raw (undenoised) estimate; when several rules fire the nearest wins.
pub fn classify_end(slices: &[SliceClass], nominal_diameter: f64, p: &HoughParams) -> EndCondition {
    let mut found: Vec<(EndKind, f64)> = Vec::new();

    if let Some(i) = (0..slices.len().saturating_sub(1)).find(|&i| {
        slices[i].kind == SliceKind::FilledCircle && slices[i + 1].kind == SliceKind::FilledCircle
    }) {
        let d = if slices[i].face.is_finite() {
            slices[i].face
        } else {
            slices[i].x
        };
        found.push((EndKind::ClosedPipe, d));
    }

    let diam = |s: &SliceClass| match s.kind {
        SliceKind::OpenCircle(d) => Some(d),
        _ => None,
    };
    if let Some(i) = slices
        .iter()
        .position(|s| diam(s).is_some_and(|d| d < p.reducer_ratio * nominal_diameter))
    {
        // Walk back over the monotone taper to its onset.
        let mut j = i;
        while j > 0 {
            match (diam(&slices[j - 1]), diam(&slices[j])) {
                (Some(a), Some(b)) if a >= b - p.radius_bin && a < 0.98 * nominal_diameter => {
                    j -= 1
                }
                _ => break,
            }
        }
        let lo = j.saturating_sub(1);
        let onset = slices[lo..=i]
            .iter()
            .map(|s| s.inner_near)
            .fold(f64::NAN, f64::min);
        let d = if onset.is_finite() { onset } else { slices[j].x };
        found.push((EndKind::Reducer, d));
    }

    if let Some(last_open) = slices.iter().rposition(|s| diam(s).is_some()) {
        let tail = &slices[last_open + 1..];
        if tail.len() >= 2 && tail.iter().all(|s| s.kind == SliceKind::NoCircle) {
            let far = slices[..=last_open]
                .iter()
                .map(|s| s.wall_far)
                .fold(f64::NAN, f64::max);
            let d = if far.is_finite() {
                far
            } else {
                slices[last_open].x
            };
            found.push((EndKind::OpenEnd, d));
        }
    }

    match found.into_iter().min_by(|a, b| a.1.total_cmp(&b.1)) {
        Some((kind, d)) => EndCondition {
            kind,
            distance: d.max(0.0),
            raw_distance: d.max(0.0),
            confidence: 1.0,
        },
        None => EndCondition::none(p.lookahead),
    }
}
