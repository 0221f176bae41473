use super::CylinderModel;
use crate::sensors::PointCloud;

#[derive(Debug, Clone, PartialEq)]
pub struct Capabilities {
    pub max_step: f64,
    /// Lateral intervals (horizontal offset from the axis) swept by the
    /// tracks along the pipe bottom.
    pub track_corridors: Vec<(f64, f64)>,
    /// Axial window in which clusters are considered.
    pub range: (f64, f64),
    /// Smallest point count that makes a cluster.
    pub min_cluster: usize,
    /// Axial gap that separates clusters. Floor returns thin out with range,
    /// so this is generous.
    pub cluster_gap: f64,
}

impl Capabilities {
    pub fn for_tracks(max_step: f64, track_width: f64, lookahead: f64) -> Self {
        let c = track_width / 2.0;
        let half = 0.06;
        Self {
            max_step,
            track_corridors: vec![(-c - half, -c + half), (c - half, c + half)],
            range: (0.3, lookahead - 0.05),
            min_cluster: 3,
            cluster_gap: 0.2,
        }
    }
}

/// Axial distance to the nearest untraversable cluster under the tracks.
///
/// A cluster's height is the median of the upper half of its point heights,
/// so a few noisy points on a step at the limit do not trip it.
pub fn check_obstacle(
    nonconforming: &PointCloud,
    model: &CylinderModel,
    caps: &Capabilities,
) -> Option<f64> {
    let (e1, e2) = model.section_basis();
    let mut cand: Vec<(f64, f64)> = Vec::new();
    for p in &nonconforming.points {
        let d = p - model.axis_point;
        let s = d.dot(&model.axis_dir);
        if s < caps.range.0 || s > caps.range.1 {
            continue;
        }
        let (lat, vert) = (d.dot(&e1), d.dot(&e2));
        if vert >= 0.0
            || !caps
                .track_corridors
                .iter()
                .any(|(lo, hi)| (*lo..=*hi).contains(&lat))
        {
            continue;
        }
        let h = model.radius - lat.hypot(vert);
        if h > 0.0 {
            cand.push((s, h));
        }
    }
    cand.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut start = 0;
    while start < cand.len() {
        let mut end = start + 1;
        while end < cand.len() && cand[end].0 - cand[end - 1].0 <= caps.cluster_gap {
            end += 1;
        }
        let cluster = &cand[start..end];
        if cluster.len() >= caps.min_cluster && cluster_height(cluster) > caps.max_step {
            return Some(cluster[0].0);
        }
        start = end;
    }
    None
}

fn cluster_height(cluster: &[(f64, f64)]) -> f64 {
    let mut h: Vec<f64> = cluster.iter().map(|c| c.1).collect();
    h.sort_by(f64::total_cmp);
    let upper = &h[h.len() / 2..];
    upper[upper.len() / 2]
}
