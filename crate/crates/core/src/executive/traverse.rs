use serde::Serialize;

/// Axial intervals the robot has physically driven over, kept merged.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TraversabilityLog {
    intervals: Vec<(f64, f64)>,
    last: Option<f64>,
    /// Slack allowed on queries for estimator noise.
    pub slack: f64,
}

impl TraversabilityLog {
    pub fn new(slack: f64) -> Self {
        Self {
            slack,
            ..Self::default()
        }
    }

    /// Records a position reached by continuous motion from the previous one.
    pub fn record(&mut self, x: f64) {
        let (lo, hi) = match self.last {
            Some(p) => (p.min(x), p.max(x)),
            None => (x, x),
        };
        self.last = Some(x);
        self.intervals.push((lo, hi));
        self.intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(self.intervals.len());
        for (a, b) in self.intervals.drain(..) {
            match merged.last_mut() {
                Some(m) if a <= m.1 => m.1 = m.1.max(b),
                _ => merged.push((a, b)),
            }
        }
        self.intervals = merged;
    }

    /// Breaks continuity, for example after a relocalization jump.
    pub fn lift(&mut self) {
        self.last = None;
    }

    pub fn cleared(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn query(&self, x: f64) -> bool {
        self.intervals
            .iter()
            .any(|(a, b)| x >= a - self.slack && x <= b + self.slack)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_then_queries() {
        let mut t = TraversabilityLog::new(0.0);
        for k in 0..=100 {
            t.record(k as f64 * 0.1);
        }
        assert_eq!(t.cleared().len(), 1);
        let (a, b) = t.cleared()[0];
        assert!(a == 0.0 && (b - 10.0).abs() < 1e-12);
        assert!(t.query(5.0));
        assert!(!t.query(-1.0));
    }

    #[test]
    fn disjoint_spans_stay_separate() {
        let mut t = TraversabilityLog::new(0.0);
        t.record(0.0);
        t.record(1.0);
        t.lift();
        t.record(3.0);
        t.record(4.0);
        assert_eq!(t.cleared(), &[(0.0, 1.0), (3.0, 4.0)]);
        assert!(!t.query(2.0));
    }
}
