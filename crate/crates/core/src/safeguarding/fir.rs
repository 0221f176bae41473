/// Moving-average FIR low-pass with a fixed tap line.
#[derive(Debug, Clone, PartialEq)]
pub struct Fir {
    taps: Vec<f64>,
    head: usize,
    seen: usize,
}

pub const DEFAULT_TAPS: usize = 25;

impl Default for Fir {
    fn default() -> Self {
        Self::new(DEFAULT_TAPS)
    }
}

impl Fir {
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "FIR needs at least one tap");
        Self {
            taps: vec![0.0; n],
            head: 0,
            seen: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seen == 0
    }

    /// True once every tap holds a real sample.
    pub fn is_warm(&self) -> bool {
        self.seen >= self.taps.len()
    }

    pub fn reset(&mut self) {
        self.taps.iter_mut().for_each(|t| *t = 0.0);
        self.head = 0;
        self.seen = 0;
    }

    /// Pushes one sample and returns the filter output. The sum is recomputed
    /// from the taps so no rounding accumulates over long runs.
    pub fn push(&mut self, x: f64) -> f64 {
        self.taps[self.head] = x;
        self.head = (self.head + 1) % self.taps.len();
        self.seen = self.seen.saturating_add(1);
        self.taps.iter().sum::<f64>() / self.taps.len() as f64
    }
}

/// Streaming filter entry point: `state` carries the tap line.
pub fn fir_denoise(state: &mut Fir, new_distance: f64) -> f64 {
    state.push(new_distance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn dc_gain_is_one() {
        let mut f = Fir::default();
        let mut y = 0.0;
        for _ in 0..100 {
            y = f.push(3.7);
        }
        assert!((y - 3.7).abs() <= 1e-12 * 3.7);
    }

    #[test]
    fn impulse_response() {
        let mut f = Fir::default();
        let out: Vec<f64> = (0..30).map(|k| f.push(if k == 0 { 1.0 } else { 0.0 })).collect();
        for (k, y) in out.iter().enumerate() {
            let want = if k < 25 { 1.0 / 25.0 } else { 0.0 };
            assert!((y - want).abs() < 1e-15, "tap {k}: {y}");
        }
    }

    #[test]
    fn white_noise_reduction() {
        let mut f = Fir::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = Normal::new(0.0, 1.0).unwrap();
        let out: Vec<f64> = (0..10_025).map(|_| f.push(n.sample(&mut rng))).skip(25).collect();
        let var = out.iter().map(|y| y * y).sum::<f64>() / out.len() as f64;
        assert!((var * 25.0 - 1.0).abs() < 0.1, "ratio {}", 1.0 / var);
    }

    proptest! {
        #[test]
        fn linear_and_time_invariant(
            xs in prop::collection::vec(-10.0f64..10.0, 1..80),
            ys in prop::collection::vec(-10.0f64..10.0, 80),
            a in -3.0f64..3.0,
            b in -3.0f64..3.0,
            shift in 0usize..10,
        ) {
            let run = |s: &[f64]| {
                let mut f = Fir::default();
                s.iter().map(|v| f.push(*v)).collect::<Vec<_>>()
            };
            let combo: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| a * x + b * y).collect();
            let fx = run(&xs);
            let fy = run(&ys[..xs.len()]);
            for (k, z) in run(&combo).iter().enumerate() {
                prop_assert!((z - (a * fx[k] + b * fy[k])).abs() < 1e-9);
            }
            let mut delayed = vec![0.0; shift];
            delayed.extend_from_slice(&xs);
            let fd = run(&delayed);
            for k in 0..xs.len() {
                prop_assert!((fd[k + shift] - fx[k]).abs() < 1e-9);
            }
        }
    }
}
