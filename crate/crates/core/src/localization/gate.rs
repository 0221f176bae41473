/// Window test of a range-derived position against the dead-reckoned
/// prediction. The acceptance region is the closed window.
pub fn gate_rangefinder(measured: f64, returned: bool, predicted: f64, window: f64) -> Option<f64> {
    (returned && measured.is_finite() && (measured - predicted).abs() <= window).then_some(measured)
}

/// Gate with memory: a fix is accepted only after a short streak of
/// in-window readings whose changes agree with the encoders.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeGate {
    pub window: f64,
    pub streak_needed: usize,
    /// Allowed disagreement between fix-to-fix and encoder-to-encoder change.
    pub rate_tol: f64,
    streak: usize,
    last: Option<(f64, f64)>,
}

impl Default for RangeGate {
    fn default() -> Self {
        Self {
            window: 0.5,
            streak_needed: 3,
            rate_tol: 0.1,
            streak: 0,
            last: None,
        }
    }
}

impl RangeGate {
    /// `odometer` is the encoder distance at the reading's stamp.
    pub fn push(&mut self, measured: f64, returned: bool, predicted: f64, odometer: f64) -> Option<f64> {
        let Some(x) = gate_rangefinder(measured, returned, predicted, self.window) else {
            self.streak = 0;
            self.last = None;
            return None;
        };
        let consistent = self
            .last
            .is_none_or(|(lx, lo)| ((x - lx) - (odometer - lo)).abs() <= self.rate_tol);
        self.last = Some((x, odometer));
        if !consistent {
            self.streak = 1;
            return None;
        }
        self.streak += 1;
        (self.streak >= self.streak_needed).then_some(x)
    }
}

/// Offset `c` such that `range + c` is the along-axis position in the
/// entrance-anchored frame, estimated from readings within `half_window`
/// seconds of the entrance. `state_at` maps a stamp to the dead-reckoned
/// position in that frame. Median, so stray returns do not matter.
pub fn calibrate_rangefinder(
    readings: &[(f64, f64)],
    entrance_stamp: f64,
    half_window: f64,
    state_at: impl Fn(f64) -> f64,
) -> Option<f64> {
    let mut c: Vec<f64> = readings
        .iter()
        .filter(|(t, r)| (t - entrance_stamp).abs() <= half_window && r.is_finite())
        .map(|(t, r)| state_at(*t) - r)
        .collect();
    if c.is_empty() {
        return None;
    }
    c.sort_by(f64::total_cmp);
    let n = c.len();
    Some(if n % 2 == 1 {
        c[n / 2]
    } else {
        0.5 * (c[n / 2 - 1] + c[n / 2])
    })
}
