use serde::Serialize;

use crate::localization::fit_center;
use crate::sensors::ProfileRing;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryParams {
    pub nominal_radius: f64,
    pub tol: f64,
    /// Fraction of a ring's rays that must be anomalous to break the ring.
    pub fraction: f64,
    pub pitch_limit: f64,
}

impl GeometryParams {
    pub fn new(nominal_radius: f64) -> Self {
        Self {
            nominal_radius,
            tol: 0.02,
            fraction: 0.10,
            pitch_limit: 5f64.to_radians(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct GeometryFlags {
    pub round_pipe_broken: bool,
    /// Worst per-ring fraction of anomalous rays in the segment.
    pub anomaly_fraction: f64,
    pub pitch: bool,
}

/// Anomalous ray fraction for one ring. Rays without a return count as
/// anomalous. The center is refit on near-nominal points so a bulge does not
/// drag it.
pub fn ring_anomaly(ring: &ProfileRing, p: &GeometryParams) -> f64 {
    let n = ring.ranges.len();
    if n == 0 {
        return 0.0;
    }
    let pts: Vec<(f64, f64)> = ring.points().collect();
    let dev = |c: (f64, f64), q: &(f64, f64)| ((q.0 - c.0).hypot(q.1 - c.1) - p.nominal_radius).abs();
    let Some(c0) = fit_center(&pts) else {
        return 1.0;
    };
    let core: Vec<(f64, f64)> = pts.iter().copied().filter(|q| dev(c0, q) <= 2.0 * p.tol).collect();
    let c = fit_center(&core).unwrap_or(c0);
    let good = pts.iter().filter(|q| dev(c, q) <= p.tol).count();
    (n - good) as f64 / n as f64
}

/// Flags a pipe segment from the profiler rings and IMU pitch samples
/// localized to it.
pub fn flag_geometry(rings: &[&ProfileRing], pitches: &[f64], p: &GeometryParams) -> GeometryFlags {
    let worst = rings.iter().map(|r| ring_anomaly(r, p)).fold(0.0, f64::max);
    GeometryFlags {
        round_pipe_broken: worst > p.fraction,
        anomaly_fraction: worst,
        pitch: pitches.iter().any(|a| a.abs() > p.pitch_limit),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensors::profiler::PROFILE_RAYS;
    use crate::sensors::{sample_profiler, NoiseConfig};
    use crate::vehicle::{RobotPose, VehicleConfig};
    use crate::world::{load_scenario, World};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const R: f64 = 0.381;

    fn ring(ranges: Vec<f64>) -> ProfileRing {
        ProfileRing {
            ranges,
            stamp: 0.0,
            x_est: 0.0,
        }
    }

    fn scan(fittings: &str, x: f64) -> ProfileRing {
        let s = load_scenario(&format!(
            r#"{{"diameter_class": "D30", "pipe_length": 20, "commanded_distance": 10, "seed": 1,
                "fittings": [{fittings}]}}"#
        ))
        .unwrap();
        let w = World::new(&s);
        let cfg = VehicleConfig::for_class(s.diameter_class);
        let pose = RobotPose {
            x,
            y: 0.02,
            z: -0.01,
            roll: 0.0,
            pitch: 0.0,
            yaw: 0.0,
            v: 0.0,
            t: 0.0,
            grounded: false,
            track_travel: [0.0; 2],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        sample_profiler(&cfg, &pose, &w, &NoiseConfig::default(), &mut rng)
    }

    #[test]
    fn clean_off_center_segment_is_not_flagged() {
        let rings: Vec<ProfileRing> = (0..5).map(|i| scan("", 4.0 + 0.1 * i as f64)).collect();
        let refs: Vec<&ProfileRing> = rings.iter().collect();
        let f = flag_geometry(&refs, &[0.01, -0.02], &GeometryParams::new(R));
        assert!(!f.round_pipe_broken && !f.pitch, "{f:?}");
        assert!(f.anomaly_fraction < 0.02);
    }

    #[test]
    fn port_segment_is_flagged() {
        // A 6 inch vacuum port; the profiler plane sits 0.65 m behind the detector.
        let port = r#"{"kind": "port", "position": 5.0, "radius": 0.15, "clock_angle": 30}"#;
        let rings: Vec<ProfileRing> = (0..7).map(|i| scan(port, 5.35 + 0.1 * i as f64)).collect();
        let refs: Vec<&ProfileRing> = rings.iter().collect();
        let f = flag_geometry(&refs, &[], &GeometryParams::new(R));
        assert!(f.round_pipe_broken, "{f:?}");
    }

    #[test]
    fn deposit_bump_over_an_eighth_of_the_ring() {
        // 3 cm of deposit over 45 degrees at the floor: 12.5% of rays short.
        let ranges: Vec<f64> = (0..PROFILE_RAYS)
            .map(|i| if (158..203).contains(&i) { R - 0.03 } else { R })
            .collect();
        let a = ring_anomaly(&ring(ranges), &GeometryParams::new(R));
        assert!((a - 45.0 / 360.0).abs() < 1e-9, "{a}");
        // Same bump over 30 degrees stays under the threshold.
        let ranges: Vec<f64> = (0..PROFILE_RAYS)
            .map(|i| if (165..195).contains(&i) { R - 0.03 } else { R })
            .collect();
        let r = ring(ranges);
        assert!(!flag_geometry(&[&r], &[], &GeometryParams::new(R)).round_pipe_broken);
    }

    #[test]
    fn missing_returns_count_and_pitch_mirrors() {
        let ranges: Vec<f64> = (0..PROFILE_RAYS).map(|i| if i < 40 { 100.0 } else { R }).collect();
        let r = ring(ranges);
        let p = GeometryParams::new(R);
        let f = flag_geometry(&[&r], &[0.0, 0.1], &p);
        assert!(f.round_pipe_broken && f.pitch);
    }
}
