use serde::Serialize;

use super::{Entrance, LocError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Node {
    pub id: usize,
    pub stamp: f64,
    /// Initial (dead-reckoned) estimate.
    pub estimate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OdometryEdge {
    pub i: usize,
    pub delta: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AbsoluteEdge {
    pub i: usize,
    pub z: f64,
    pub sigma: f64,
}

/// Chain of 1-D positions. Odometry edge `i` joins nodes `i` and `i + 1`;
/// the anchor, when present, pins node 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoseGraph {
    pub nodes: Vec<Node>,
    pub odometry: Vec<OdometryEdge>,
    pub absolute: Vec<AbsoluteEdge>,
    pub anchor: Option<(f64, f64)>,
}

impl PoseGraph {
    pub fn validate(&self) -> Result<(), LocError> {
        let bad = |m: &str| Err(LocError::InvalidGraph(m.to_string()));
        if self.nodes.is_empty() {
            return Err(LocError::EmptyStream);
        }
        if self.nodes.windows(2).any(|w| w[1].stamp <= w[0].stamp) {
            return bad("node stamps must increase");
        }
        let n = self.nodes.len();
        for e in &self.odometry {
            if e.i + 1 >= n || !(e.sigma > 0.0) {
                return bad("odometry edge out of range or with sigma <= 0");
            }
        }
        for e in &self.absolute {
            if e.i >= n || !(e.sigma > 0.0) {
                return bad("absolute edge out of range or with sigma <= 0");
            }
        }
        if self.anchor.is_some_and(|(_, s)| !(s > 0.0)) {
            return bad("anchor sigma <= 0");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphParams {
    pub node_period: f64,
    /// Odometry sigma as a fraction of the edge length.
    pub odo_fraction: f64,
    pub odo_floor: f64,
    pub rf_sigma: f64,
    pub anchor_sigma: f64,
}

impl Default for GraphParams {
    fn default() -> Self {
        Self {
            node_period: 1.0,
            odo_fraction: 0.005,
            odo_floor: 1e-4,
            rf_sigma: 0.02,
            anchor_sigma: 0.005,
        }
    }
}

/// Linear interpolation in a time-ordered (stamp, value) stream, clamped at
/// the ends.
pub fn interp(stream: &[(f64, f64)], t: f64) -> f64 {
    let k = stream.partition_point(|s| s.0 <= t);
    if k == 0 {
        return stream[0].1;
    }
    if k == stream.len() {
        return stream[k - 1].1;
    }
    let (a, b) = (stream[k - 1], stream[k]);
    if b.0 == a.0 {
        return b.1;
    }
    a.1 + (b.1 - a.1) * (t - a.0) / (b.0 - a.0)
}

/// Builds the chain from the entrance onward. `odometer` is the cumulative
/// signed encoder distance; `fixes` are accepted rangefinder positions in
/// the entrance-anchored frame.
pub fn build_graph(
    odometer: &[(f64, f64)],
    fixes: &[(f64, f64)],
    entrance: &Entrance,
    params: &GraphParams,
) -> Result<PoseGraph, LocError> {
    let Some(&(t_end, _)) = odometer.last() else {
        return Err(LocError::EmptyStream);
    };
    if entrance.stamp > t_end {
        return Err(LocError::EmptyStream);
    }
    let o0 = interp(odometer, entrance.stamp);
    let mut nodes = Vec::new();
    let mut t = entrance.stamp;
    while t <= t_end {
        nodes.push(Node {
            id: nodes.len(),
            stamp: t,
            estimate: interp(odometer, t) - o0,
        });
        t = entrance.stamp + nodes.len() as f64 * params.node_period;
    }
    let odometry = nodes
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let delta = w[1].estimate - w[0].estimate;
            OdometryEdge {
                i,
                delta,
                sigma: (params.odo_fraction * delta.abs()).max(params.odo_floor),
            }
        })
        .collect();
    let half = params.node_period / 2.0;
    let mut absolute = Vec::new();
    for n in &nodes {
        let lo = fixes.partition_point(|f| f.0 < n.stamp - half);
        let hi = fixes.partition_point(|f| f.0 < n.stamp + half);
        if hi > lo {
            let on = interp(odometer, n.stamp);
            let z = fixes[lo..hi]
                .iter()
                .map(|(tf, x)| x + on - interp(odometer, *tf))
                .sum::<f64>()
                / (hi - lo) as f64;
            absolute.push(AbsoluteEdge {
                i: n.id,
                z,
                sigma: params.rf_sigma / ((hi - lo) as f64).sqrt(),
            });
        }
    }
    let g = PoseGraph {
        nodes,
        odometry,
        absolute,
        anchor: Some((0.0, params.anchor_sigma)),
    };
    g.validate()?;
    Ok(g)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrackPoint {
    pub stamp: f64,
    pub x: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalizedTrack {
    pub points: Vec<TrackPoint>,
    pub entrance_stamp: f64,
}

/// Weighted least squares over the chain. The information matrix is
/// tridiagonal, so an LDLᵀ factorization solves it in linear time and a
/// backward recurrence gives the diagonal of its inverse.
pub fn optimize(graph: &PoseGraph) -> Result<LocalizedTrack, LocError> {
    graph.validate()?;
    let n = graph.nodes.len();
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n.saturating_sub(1)];
    let mut rhs = vec![0.0; n];
    for e in &graph.odometry {
        let w = 1.0 / (e.sigma * e.sigma);
        diag[e.i] += w;
        diag[e.i + 1] += w;
        off[e.i] -= w;
        rhs[e.i] -= w * e.delta;
        rhs[e.i + 1] += w * e.delta;
    }
    for e in &graph.absolute {
        let w = 1.0 / (e.sigma * e.sigma);
        diag[e.i] += w;
        rhs[e.i] += w * e.z;
    }
    if let Some((v, s)) = graph.anchor {
        let w = 1.0 / (s * s);
        diag[0] += w;
        rhs[0] += w * v;
    }

    // A = L D Lᵀ with unit lower-bidiagonal L.
    let scale = diag.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let mut d = vec![0.0; n];
    let mut l = vec![0.0; n.saturating_sub(1)];
    d[0] = diag[0];
    for i in 0..n {
        if i > 0 {
            d[i] = diag[i] - l[i - 1] * off[i - 1];
        }
        if !(d[i] > 1e-12 * scale) {
            return Err(LocError::Singular(i));
        }
        if i + 1 < n {
            l[i] = off[i] / d[i];
        }
    }
    let mut y = rhs;
    for i in 1..n {
        y[i] -= l[i - 1] * y[i - 1];
    }
    let mut x = vec![0.0; n];
    x[n - 1] = y[n - 1] / d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = y[i] / d[i] - l[i] * x[i + 1];
    }
    let mut var = vec![0.0; n];
    var[n - 1] = 1.0 / d[n - 1];
    for i in (0..n - 1).rev() {
        var[i] = 1.0 / d[i] + l[i] * l[i] * var[i + 1];
    }
    Ok(LocalizedTrack {
        points: graph
            .nodes
            .iter()
            .enumerate()
            .map(|(i, nd)| TrackPoint {
                stamp: nd.stamp,
                x: x[i],
                sigma: var[i].sqrt(),
            })
            .collect(),
        entrance_stamp: graph.nodes[0].stamp,
    })
}

/// Positions of a rigidly attached sensor at arbitrary stamps. The sigma is
/// the larger of the two bracketing nodes.
pub fn interpolate_sensor_positions(
    track: &LocalizedTrack,
    stamps: &[f64],
    transform: f64,
) -> Result<Vec<TrackPoint>, LocError> {
    let pts = &track.points;
    let (Some(first), Some(last)) = (pts.first(), pts.last()) else {
        return Err(LocError::EmptyStream);
    };
    stamps
        .iter()
        .map(|&t| {
            if !(t >= first.stamp && t <= last.stamp) {
                return Err(LocError::OutOfSpan(t));
            }
            let k = pts.partition_point(|p| p.stamp <= t);
            if k == 0 || pts[k - 1].stamp == t {
                let p = pts[k.saturating_sub(1)];
                return Ok(TrackPoint {
                    stamp: t,
                    x: p.x + transform,
                    sigma: p.sigma,
                });
            }
            let (a, b) = (pts[k - 1], pts[k]);
            let f = (t - a.stamp) / (b.stamp - a.stamp);
            Ok(TrackPoint {
                stamp: t,
                x: a.x + f * (b.x - a.x) + transform,
                sigma: a.sigma.max(b.sigma),
            })
        })
        .collect()
}

/// Like [`interpolate_sensor_positions`], but follows the odometer between
/// nodes and spreads the node-to-node correction linearly in time. This
/// keeps turnarounds between nodes sharp.
pub fn interpolate_with_odometry(
    track: &LocalizedTrack,
    odometer: &[(f64, f64)],
    stamps: &[f64],
    transform: f64,
) -> Result<Vec<TrackPoint>, LocError> {
    if odometer.is_empty() {
        return Err(LocError::EmptyStream);
    }
    let pts = &track.points;
    let lin = interpolate_sensor_positions(track, stamps, transform)?;
    Ok(lin
        .into_iter()
        .map(|tp| {
            let t = tp.stamp;
            let k = pts.partition_point(|p| p.stamp <= t);
            if k == 0 || k == pts.len() {
                return tp;
            }
            let (a, b) = (pts[k - 1], pts[k]);
            let (oa, ob, ot) = (interp(odometer, a.stamp), interp(odometer, b.stamp), interp(odometer, t));
            let f = (t - a.stamp) / (b.stamp - a.stamp);
            let residual = (b.x - a.x) - (ob - oa);
            TrackPoint {
                x: a.x + (ot - oa) + f * residual + transform,
                ..tp
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;

    fn chain(stamps: &[f64]) -> Vec<Node> {
        stamps
            .iter()
            .enumerate()
            .map(|(id, &stamp)| Node {
                id,
                stamp,
                estimate: 0.0,
            })
            .collect()
    }

    /// Dense normal equations built from the residual rows.
    fn dense(g: &PoseGraph) -> (Vec<f64>, Vec<f64>) {
        let n = g.nodes.len();
        let mut rows: Vec<(Vec<f64>, f64, f64)> = Vec::new();
        for e in &g.odometry {
            let mut r = vec![0.0; n];
            r[e.i] = -1.0;
            r[e.i + 1] = 1.0;
            rows.push((r, e.delta, e.sigma));
        }
        for e in &g.absolute {
            let mut r = vec![0.0; n];
            r[e.i] = 1.0;
            rows.push((r, e.z, e.sigma));
        }
        if let Some((v, s)) = g.anchor {
            let mut r = vec![0.0; n];
            r[0] = 1.0;
            rows.push((r, v, s));
        }
        let a = DMatrix::from_fn(rows.len(), n, |i, j| rows[i].0[j] / rows[i].2);
        let b = DVector::from_fn(rows.len(), |i, _| rows[i].1 / rows[i].2);
        let info = a.transpose() * &a;
        let x = info.clone().lu().solve(&(a.transpose() * b)).unwrap();
        let cov = info.try_inverse().unwrap();
        (x.iter().copied().collect(), (0..n).map(|i| cov[(i, i)].sqrt()).collect())
    }

    #[test]
    fn worked_three_node_example() {
        let g = PoseGraph {
            nodes: chain(&[0.0, 1.0, 2.0]),
            odometry: vec![
                OdometryEdge { i: 0, delta: 1.0, sigma: 0.1 },
                OdometryEdge { i: 1, delta: 1.0, sigma: 0.1 },
            ],
            absolute: vec![AbsoluteEdge { i: 2, z: 2.2, sigma: 0.1 }],
            anchor: Some((0.0, 1e-3)),
        };
        let t = optimize(&g).unwrap();
        let x: Vec<f64> = t.points.iter().map(|p| p.x).collect();
        for (a, b) in x.iter().zip([0.0, 1.0667, 2.1333]) {
            assert!((a - b).abs() < 1e-3, "{x:?}");
        }
    }

    fn arb_graph() -> impl Strategy<Value = PoseGraph> {
        (2usize..=10)
            .prop_flat_map(|n| {
                (
                    prop::collection::vec((-2.0f64..2.0, 0.01f64..0.5), n - 1),
                    prop::collection::vec(prop::option::of((-5.0f64..5.0, 0.01f64..0.5)), n),
                    0.001f64..0.1,
                )
            })
            .prop_map(|(odo, abs, s0)| PoseGraph {
                nodes: chain(&(0..abs.len()).map(|k| k as f64).collect::<Vec<_>>()),
                odometry: odo
                    .iter()
                    .enumerate()
                    .map(|(i, (d, s))| OdometryEdge { i, delta: *d, sigma: *s })
                    .collect(),
                absolute: abs
                    .iter()
                    .enumerate()
                    .filter_map(|(i, a)| a.map(|(z, sigma)| AbsoluteEdge { i, z, sigma }))
                    .collect(),
                anchor: Some((0.0, s0)),
            })
    }

    proptest! {
        #[test]
        fn matches_dense_least_squares(g in arb_graph()) {
            let t = optimize(&g).unwrap();
            let (x, s) = dense(&g);
            for (k, p) in t.points.iter().enumerate() {
                prop_assert!((p.x - x[k]).abs() < 1e-9);
                prop_assert!((p.sigma - s[k]).abs() < 1e-9);
            }
        }

        #[test]
        fn sigma_scaling(g in arb_graph()) {
            let mut g2 = g.clone();
            g2.odometry.iter_mut().for_each(|e| e.sigma *= 2.0);
            g2.absolute.iter_mut().for_each(|e| e.sigma *= 2.0);
            g2.anchor = g.anchor.map(|(v, s)| (v, 2.0 * s));
            let (a, b) = (optimize(&g).unwrap(), optimize(&g2).unwrap());
            for (p, q) in a.points.iter().zip(&b.points) {
                prop_assert!((p.x - q.x).abs() < 1e-9);
                prop_assert!((q.sigma - 2.0 * p.sigma).abs() < 1e-9 * q.sigma.max(1.0));
            }
        }

        #[test]
        fn sigma_grows_without_fixes(n in 3usize..40, sig in 0.001f64..0.1) {
            let g = PoseGraph {
                nodes: chain(&(0..n).map(|k| k as f64).collect::<Vec<_>>()),
                odometry: (0..n - 1).map(|i| OdometryEdge { i, delta: 0.05, sigma: sig }).collect(),
                absolute: vec![],
                anchor: Some((0.0, 0.005)),
            };
            let t = optimize(&g).unwrap();
            prop_assert!(t.points.windows(2).all(|w| w[1].sigma >= w[0].sigma));
        }
    }

    #[test]
    fn consistent_data_is_dead_reckoning() {
        let g = PoseGraph {
            nodes: chain(&[0.0, 1.0, 2.0, 3.0]),
            odometry: (0..3).map(|i| OdometryEdge { i, delta: 0.5, sigma: 0.01 }).collect(),
            absolute: vec![AbsoluteEdge { i: 3, z: 1.5, sigma: 0.02 }],
            anchor: Some((0.0, 0.005)),
        };
        let t = optimize(&g).unwrap();
        for (k, p) in t.points.iter().enumerate() {
            assert!((p.x - 0.5 * k as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn no_anchor_no_fix_is_singular() {
        let g = PoseGraph {
            nodes: chain(&[0.0, 1.0]),
            odometry: vec![OdometryEdge { i: 0, delta: 1.0, sigma: 0.1 }],
            absolute: vec![],
            anchor: None,
        };
        assert!(matches!(optimize(&g), Err(LocError::Singular(_))));
    }

    fn entrance(t: f64) -> Entrance {
        Entrance {
            stamp: t,
            offset: 0.65,
            ring: 1,
            degenerate: false,
        }
    }

    #[test]
    fn perfect_three_node_stream() {
        let odo: Vec<(f64, f64)> = (0..=100).map(|k| (k as f64 * 0.02, k as f64 * 0.001)).collect();
        let g = build_graph(&odo, &[], &entrance(0.0), &GraphParams::default()).unwrap();
        assert_eq!(g.nodes.len(), 3);
        assert!(g.absolute.is_empty());
        let t = optimize(&g).unwrap();
        for (p, n) in t.points.iter().zip(&g.nodes) {
            assert!((p.x - n.estimate).abs() < 1e-12);
        }
        assert!(t.points[2].sigma > t.points[1].sigma);
    }

    #[test]
    fn dropout_span_has_no_absolute_edges() {
        // 1 m/s out to 40 m and back; fixes only below 25 m.
        let mut odo = Vec::new();
        for k in 0..=4000 {
            let t = k as f64 * 0.02;
            let x = if t <= 40.0 { t } else { 80.0 - t };
            odo.push((t, x));
        }
        let fixes: Vec<(f64, f64)> = odo
            .iter()
            .step_by(5)
            .filter(|(_, x)| *x < 25.0)
            .copied()
            .collect();
        let g = build_graph(&odo, &fixes, &entrance(0.0), &GraphParams::default()).unwrap();
        for e in &g.absolute {
            assert!(g.nodes[e.i].estimate < 25.5);
        }
        assert!(g.absolute.iter().any(|e| g.nodes[e.i].stamp > 60.0));
        assert!(matches!(
            build_graph(&[], &[], &entrance(0.0), &GraphParams::default()),
            Err(LocError::EmptyStream)
        ));
    }

    #[test]
    fn interpolation_examples() {
        let track = LocalizedTrack {
            points: vec![
                TrackPoint { stamp: 0.0, x: 1.0, sigma: 0.01 },
                TrackPoint { stamp: 1.0, x: 1.1, sigma: 0.02 },
            ],
            entrance_stamp: 0.0,
        };
        let p = interpolate_sensor_positions(&track, &[0.0, 0.5, 1.0], 0.65).unwrap();
        assert!((p[0].x - 1.65).abs() < 1e-12 && p[0].sigma == 0.01);
        assert!((p[1].x - 1.70).abs() < 1e-12 && p[1].sigma == 0.02);
        assert!((p[2].x - 1.75).abs() < 1e-12);
        assert_eq!(
            interpolate_sensor_positions(&track, &[1.5], 0.0),
            Err(LocError::OutOfSpan(1.5))
        );
    }

    #[test]
    fn odometry_interpolation_keeps_the_turnaround() {
        // Out 1 m and back between two nodes, with the odometer reading 10%
        // long out and 10% short back. The turnaround happens at t = 5.
        let track = LocalizedTrack {
            points: vec![
                TrackPoint { stamp: 0.0, x: 0.0, sigma: 0.01 },
                TrackPoint { stamp: 10.0, x: 0.0, sigma: 0.01 },
            ],
            entrance_stamp: 0.0,
        };
        let odo = [(0.0, 0.0), (5.0, 1.1), (10.0, 0.2)];
        let p = interpolate_with_odometry(&track, &odo, &[0.0, 2.5, 5.0, 10.0], 0.65).unwrap();
        let want = [0.0, 0.55 - 0.05, 1.0, 0.0];
        for (tp, w) in p.iter().zip(want) {
            assert!((tp.x - 0.65 - w).abs() < 1e-12, "{} vs {w}", tp.x);
        }
        let lin = interpolate_sensor_positions(&track, &[5.0], 0.65).unwrap();
        assert!((lin[0].x - 0.65).abs() < 1e-12);
        assert_eq!(p[2].sigma, lin[0].sigma);
        assert_eq!(
            interpolate_with_odometry(&track, &[], &[1.0], 0.0),
            Err(LocError::EmptyStream)
        );
    }
}
