use serde::Serialize;

use super::LocError;
use crate::sensors::ProfileRing;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntranceParams {
    pub nominal_radius: f64,
    pub tol: f64,
    /// Fraction of all rays that must land on the fitted ring.
    pub fraction: f64,
    pub debounce: usize,
    /// Profiler plane to detector crystal.
    pub offset: f64,
}

impl EntranceParams {
    pub fn new(nominal_radius: f64, offset: f64) -> Self {
        Self {
            nominal_radius,
            tol: 0.03,
            fraction: 0.9,
            debounce: 3,
            offset,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Entrance {
    /// Time the profiler plane crossed the entrance.
    pub stamp: f64,
    /// Fixed transform from the profiler plane forward to the detector.
    pub offset: f64,
    /// Index of the first qualifying ring.
    pub ring: usize,
    /// Set when the very first ring already qualified.
    pub degenerate: bool,
}

/// Algebraic circle fit; returns the center.
pub(crate) fn fit_center(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    if pts.len() < 3 {
        return None;
    }
    // Solve [y z 1][a b c]' = y² + z² with a = 2cy, b = 2cz.
    let mut m = nalgebra::Matrix3::<f64>::zeros();
    let mut v = nalgebra::Vector3::<f64>::zeros();
    for &(y, z) in pts {
        let row = nalgebra::Vector3::new(y, z, 1.0);
        m += row * row.transpose();
        v += row * (y * y + z * z);
    }
    let s = m.lu().solve(&v)?;
    Some((s[0] / 2.0, s[1] / 2.0))
}

/// True when at least `fraction` of all rays land within `tol` of a circle of
/// the nominal radius about the fitted center. Fitting the center keeps a
/// robot that is off the axis from failing the test.
pub fn ring_is_pipe(ring: &ProfileRing, p: &EntranceParams) -> bool {
    let pts: Vec<(f64, f64)> = ring.points().collect();
    let Some((cy, cz)) = fit_center(&pts) else {
        return false;
    };
    let good = pts
        .iter()
        .filter(|(y, z)| ((y - cy).hypot(z - cz) - p.nominal_radius).abs() <= p.tol)
        .count();
    good as f64 >= p.fraction * ring.ranges.len() as f64
}

/// Streaming detector fed one ring at a time.
#[derive(Debug, Clone)]
pub struct EntranceDetector {
    params: EntranceParams,
    seen: usize,
    streak: usize,
    first: Option<(usize, f64)>,
    prev_stamp: Option<f64>,
    before_first: Option<f64>,
    found: Option<Entrance>,
}

impl EntranceDetector {
    pub fn new(params: EntranceParams) -> Self {
        Self {
            params,
            seen: 0,
            streak: 0,
            first: None,
            prev_stamp: None,
            before_first: None,
            found: None,
        }
    }

    pub fn found(&self) -> Option<Entrance> {
        self.found
    }

    pub fn push(&mut self, ring: &ProfileRing) -> Option<Entrance> {
        if self.found.is_some() {
            return self.found;
        }
        let idx = self.seen;
        self.seen += 1;
        if ring_is_pipe(ring, &self.params) {
            if self.streak == 0 {
                self.first = Some((idx, ring.stamp));
                self.before_first = self.prev_stamp;
            }
            self.streak += 1;
        } else {
            self.streak = 0;
        }
        self.prev_stamp = Some(ring.stamp);
        if self.streak >= self.params.debounce {
            let (k, t) = self.first.expect("streak without a first ring");
            // The crossing happened between the last outside ring and the
            // first inside one.
            let stamp = self.before_first.map_or(t, |b| 0.5 * (b + t));
            self.found = Some(Entrance {
                stamp,
                offset: self.params.offset,
                ring: k,
                degenerate: k == 0,
            });
        }
        self.found
    }
}

pub fn detect_entrance(rings: &[ProfileRing], params: &EntranceParams) -> Result<Entrance, LocError> {
    let mut det = EntranceDetector::new(*params);
    for r in rings {
        if let Some(e) = det.push(r) {
            return Ok(e);
        }
    }
    Err(LocError::NoEntrance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensors::{sample_profiler, NoiseConfig};
    use crate::vehicle::{deploy, step_dynamics, DriveCommand, Motion, SlipState, VehicleConfig, TICK};
    use crate::world::{load_scenario, World};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn drive_stream(entrance: &str, ticks: usize) -> (Vec<ProfileRing>, Vec<f64>, VehicleConfig) {
        let s = load_scenario(&format!(
            r#"{{"diameter_class": "D30", "pipe_length": 20, "commanded_distance": 10, "seed": 1,
                "entrance": {entrance}}}"#
        ))
        .unwrap();
        let w = World::new(&s);
        let cfg = VehicleConfig::for_class(s.diameter_class);
        let noise = NoiseConfig::default();
        let mut pose = deploy(&s, &w).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let slip = SlipState { bias: 0.0 };
        let cmd = DriveCommand::new(Motion::Forward, 1.0);
        let (mut rings, mut xs) = (Vec::new(), Vec::new());
        for k in 0..ticks {
            if k % 5 == 0 {
                rings.push(sample_profiler(&cfg, &pose, &w, &noise, &mut rng));
                xs.push(cfg.body_x(&pose) - cfg.profiler_offset);
            }
            pose = step_dynamics(&cfg, &pose, &cmd, &w, &noise, &slip, TICK, &mut rng);
        }
        (rings, xs, cfg)
    }

    #[test]
    fn rig_then_pipe_within_one_ring() {
        // A yawed scan plane only closes on the wall once most of it is
        // inside, up to R·tan(yaw) past the crossing of its center.
        let speed = VehicleConfig::for_class(crate::world::DiameterClass::D30).speed;
        let lag = 0.381 * 6f64.to_radians().tan() / speed;
        for (entrance, extra) in [
            ("{}", 0.0),
            (r#"{"dz": 0.02, "dy": -0.025}"#, 0.0),
            (r#"{"yaw": 6, "gap": 0.18}"#, lag),
        ] {
            let (rings, xs, cfg) = drive_stream(entrance, 1500);
            let p = EntranceParams::new(0.381, cfg.profiler_to_detector());
            let e = detect_entrance(&rings, &p).unwrap();
            let k = xs.iter().position(|x| *x >= 0.0).unwrap();
            let truth = rings[k - 1].stamp
                + (rings[k].stamp - rings[k - 1].stamp) * (0.0 - xs[k - 1]) / (xs[k] - xs[k - 1]);
            let period = rings[1].stamp - rings[0].stamp;
            let late = e.stamp - truth;
            assert!(
                late >= -period && late <= extra + period,
                "{entrance}: {} vs {truth}",
                e.stamp
            );
            assert!(!e.degenerate);
            assert_eq!(e.offset, 0.65);
        }
    }

    #[test]
    fn all_in_pipe_is_degenerate() {
        let ring = ProfileRing {
            ranges: vec![0.381; 360],
            stamp: 0.0,
            x_est: f64::NAN,
        };
        let rings: Vec<_> = (0..5)
            .map(|k| ProfileRing {
                stamp: k as f64 * 0.1,
                ..ring.clone()
            })
            .collect();
        let e = detect_entrance(&rings, &EntranceParams::new(0.381, 0.65)).unwrap();
        assert_eq!(e.ring, 0);
        assert!(e.degenerate);
        assert_eq!(e.stamp, 0.0);
    }

    #[test]
    fn rig_only_has_no_entrance() {
        let (rings, _, cfg) = drive_stream("{}", 50);
        let p = EntranceParams::new(0.381, cfg.profiler_to_detector());
        assert_eq!(detect_entrance(&rings, &p), Err(LocError::NoEntrance));
    }
}
