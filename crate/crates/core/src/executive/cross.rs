use std::collections::VecDeque;

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum CrossStatus {
    Ok,
    Fault(String),
}

/// Compares the speed implied by accepted rangefinder fixes with the
/// encoder speed over a sliding window.
#[derive(Debug, Clone)]
pub struct CrossChecker {
    pub window: f64,
    pub min_fixes: usize,
    /// Disagreement, as a fraction of commanded speed, that counts as bad.
    pub tolerance: f64,
    /// How long the disagreement must last.
    pub persistence: f64,
    fixes: VecDeque<(f64, f64)>,
    odo: VecDeque<(f64, f64)>,
    bad_since: Option<f64>,
}

impl Default for CrossChecker {
    fn default() -> Self {
        Self {
            window: 2.0,
            min_fixes: 10,
            tolerance: 0.5,
            persistence: 1.0,
            fixes: VecDeque::new(),
            odo: VecDeque::new(),
            bad_since: None,
        }
    }
}

fn slope(pts: &VecDeque<(f64, f64)>) -> f64 {
    let n = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let xm = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (t, x) in pts {
        sxy += (t - tm) * (x - xm);
        sxx += (t - tm) * (t - tm);
    }
    if sxx > 0.0 {
        sxy / sxx
    } else {
        0.0
    }
}

impl CrossChecker {
    pub fn reset(&mut self) {
        self.fixes.clear();
        self.odo.clear();
        self.bad_since = None;
    }

    /// One tick: encoder odometer, an accepted fix if any, and the speed the
    /// drive is being asked for. Never faults without enough fixes.
    pub fn push(&mut self, now: f64, odometer: f64, fix: Option<f64>, commanded_speed: f64) -> CrossStatus {
        self.odo.push_back((now, odometer));
        if let Some(x) = fix {
            self.fixes.push_back((now, x));
        }
        while self.odo.front().is_some_and(|p| now - p.0 > self.window) {
            self.odo.pop_front();
        }
        while self.fixes.front().is_some_and(|p| now - p.0 > self.window) {
            self.fixes.pop_front();
        }
        // Compare over the stretch the fixes actually cover.
        let first_fix = self.fixes.front().map_or(now, |f| f.0);
        let span = now - first_fix;
        if self.fixes.len() < self.min_fixes || span < 0.5 * self.window || commanded_speed <= 0.0 {
            self.bad_since = None;
            return CrossStatus::Ok;
        }
        let v_rf = slope(&self.fixes);
        let covered: VecDeque<(f64, f64)> = self.odo.iter().copied().filter(|p| p.0 >= first_fix).collect();
        let v_enc = slope(&covered);
        if (v_rf - v_enc).abs() > self.tolerance * commanded_speed {
            let since = *self.bad_since.get_or_insert(now);
            if now - since > self.persistence {
                return CrossStatus::Fault(format!(
                    "rangefinder speed {v_rf:.4} m/s disagrees with encoder speed {v_enc:.4} m/s"
                ));
            }
        } else {
            self.bad_since = None;
        }
        CrossStatus::Ok
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn run(scale_after: Option<(f64, f64)>, dropout_after: Option<f64>, speed: f64) -> Option<f64> {
        let mut c = CrossChecker::default();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let n = Normal::new(0.0, 0.02).unwrap();
        let (mut x, mut odo) = (0.0, 0.0);
        for k in 0..30_000 {
            let t = k as f64 * 0.02;
            x += speed * 0.02;
            let f = scale_after.map_or(1.0, |(t0, s)| if t >= t0 { s } else { 1.0 });
            odo += speed * 0.02 * f;
            let fix = if dropout_after.is_some_and(|t0| t >= t0) {
                None
            } else {
                Some(x + n.sample(&mut rng))
            };
            if let CrossStatus::Fault(_) = c.push(t, odo, fix, speed) {
                return Some(t);
            }
        }
        None
    }

    #[test]
    fn nominal_runs_never_fault() {
        assert_eq!(run(None, None, 0.0508), None);
        assert_eq!(run(None, None, 0.0305), None);
    }

    #[test]
    fn doubled_encoder_faults_quickly() {
        let t = run(Some((100.0, 2.0)), None, 0.0305).expect("fault");
        assert!(t - 100.0 <= 3.0, "{t}");
    }

    #[test]
    fn dropout_never_faults() {
        assert_eq!(run(Some((100.0, 2.0)), Some(50.0), 0.0508), None);
    }
}
