use serde::Serialize;

use crate::vehicle::RobotPose;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct EncoderTicks {
    pub left: i64,
    pub right: i64,
}

impl EncoderTicks {
    /// Mean track travel in meters at `resolution` ticks/m.
    pub fn distance(&self, resolution: f64) -> f64 {
        0.5 * (self.left + self.right) as f64 / resolution
    }
}

/// Quantizing tick counter. Quantization is applied to the running total
/// so rounding never accumulates.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EncoderCounter {
    accum: [f64; 2],
    reported: [i64; 2],
    /// Multiplier on counted travel; 1.0 unless an encoder fault is active.
    pub scale: f64,
}

impl EncoderCounter {
    pub fn new() -> Self {
        Self {
            scale: 1.0,
            ..Default::default()
        }
    }

    /// Ticks between two consecutive poses.
    #[allow(clippy::needless_range_loop)]
    pub fn sample(&mut self, prev: &RobotPose, next: &RobotPose, resolution: f64) -> EncoderTicks {
        let mut out = [0i64; 2];
        for k in 0..2 {
            self.accum[k] += (next.track_travel[k] - prev.track_travel[k]) * resolution * self.scale;
            let total = self.accum[k].round() as i64;
            out[k] = total - self.reported[k];
            self.reported[k] = total;
        }
        EncoderTicks {
            left: out[0],
            right: out[1],
        }
    }
}
