use serde::Serialize;

use super::{roi_counts, Roi};
use crate::sensors::gamma::{fwhm_at, line_window, AM241_LINE, U235_LINE};
use crate::sensors::{NoiseConfig, Spectrum};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QcReference {
    pub centroid: f64,
    pub fwhm: f64,
    /// Expected gross ROI counts per second, continuum included.
    pub rate: f64,
}

impl QcReference {
    /// Reference for the docked check source given the continuum level that
    /// puts `background_rate` counts/s in the U-235 window.
    pub fn nominal(noise: &NoiseConfig, background_rate: f64) -> Self {
        let cal = crate::sensors::gamma::Calibration::nominal();
        let (alo, ahi) = line_window(noise, AM241_LINE);
        let (ulo, uhi) = line_window(noise, U235_LINE);
        let per_channel = background_rate / cal.channels_in(ulo, uhi).len().max(1) as f64;
        Self {
            centroid: AM241_LINE,
            fwhm: fwhm_at(noise, AM241_LINE),
            rate: noise.check_source_rate + per_channel * cal.channels_in(alo, ahi).len() as f64,
        }
    }

    pub fn roi(&self) -> Roi {
        let w = crate::sensors::gamma::ROI_HALF_WIDTH * self.fwhm;
        Roi {
            lo: self.centroid - w,
            hi: self.centroid + w,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QcBounds {
    pub centroid: f64,
    /// Relative FWHM tolerance.
    pub fwhm: f64,
    pub count_sigmas: f64,
}

impl Default for QcBounds {
    fn default() -> Self {
        Self {
            centroid: 1.5,
            fwhm: 0.25,
            count_sigmas: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QcResult {
    pub peak_centroid: f64,
    pub peak_fwhm: f64,
    pub roi_counts: u64,
    pub expected_counts: f64,
    pub pass: bool,
    pub reasons: Vec<String>,
}

/// Linear baseline from the mean of `side` channels on either side of the
/// window.
fn baseline(sp: &Spectrum, lo: usize, hi: usize, side: usize) -> (f64, f64, f64, f64) {
    let n = sp.channels.len();
    let left = lo.saturating_sub(side)..lo;
    let right = hi.min(n)..(hi + side).min(n);
    let mean = |r: std::ops::Range<usize>| {
        if r.is_empty() {
            0.0
        } else {
            let len = r.len() as f64;
            sp.channels[r].iter().map(|&c| c as f64).sum::<f64>() / len
        }
    };
    let xl = lo as f64 - side as f64 / 2.0;
    let xr = hi as f64 + side as f64 / 2.0;
    (xl, mean(left), xr, mean(right))
}

/// Checks the Am-241 peak of a docked spectrum against its reference.
pub fn check_source_qc(sp: &Spectrum, reference: &QcReference, bounds: &QcBounds) -> QcResult {
    let roi = reference.roi();
    let chans = sp.cal.channels_in(roi.lo, roi.hi);
    let counts = roi_counts(sp, &roi).unwrap_or(0);
    let expected = reference.rate * sp.live_time;
    let mut reasons = Vec::new();

    let (xl, yl, xr, yr) = baseline(sp, chans.start, chans.end, 8);
    let base = |c: usize| yl + (yr - yl) * (c as f64 - xl) / (xr - xl);
    let net: Vec<(usize, f64)> = chans.clone().map(|c| (c, sp.channels[c] as f64 - base(c))).collect();
    let mass: f64 = net.iter().map(|(_, v)| v.max(0.0)).sum();

    let (mut centroid, mut fwhm) = (f64::NAN, f64::NAN);
    if mass < 10.0 {
        reasons.push("no discernible peak".to_string());
    } else {
        centroid = net
            .iter()
            .map(|(c, v)| sp.cal.center(*c) * v.max(0.0))
            .sum::<f64>()
            / mass;
        // Half-maximum crossings of a 5-channel running mean.
        let sm: Vec<f64> = (0..net.len())
            .map(|i| {
                let a = i.saturating_sub(2);
                let b = (i + 3).min(net.len());
                net[a..b].iter().map(|(_, v)| v).sum::<f64>() / (b - a) as f64
            })
            .collect();
        let (imax, &ymax) = sm
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty window");
        let half = ymax / 2.0;
        let cross = |range: &mut dyn Iterator<Item = usize>, step: isize| -> Option<f64> {
            for i in range {
                let j = (i as isize - step) as usize;
                if sm[i] < half {
                    let f = (sm[j] - half) / (sm[j] - sm[i]);
                    return Some(j as f64 + f * step as f64);
                }
            }
            None
        };
        let l = cross(&mut (0..imax).rev(), -1);
        let r = cross(&mut (imax + 1..sm.len()), 1);
        match (l, r) {
            (Some(l), Some(r)) => fwhm = (r - l) * sp.cal.slope,
            _ => reasons.push("peak has no half-maximum crossings in the window".to_string()),
        }
    }
    if !(centroid - reference.centroid).abs().le(&bounds.centroid) {
        reasons.push(format!(
            "centroid {centroid:.2} keV vs {:.2} keV",
            reference.centroid
        ));
    }
    if !((fwhm - reference.fwhm).abs() <= bounds.fwhm * reference.fwhm) {
        reasons.push(format!("FWHM {fwhm:.2} keV vs {:.2} keV", reference.fwhm));
    }
    if (counts as f64 - expected).abs() > bounds.count_sigmas * expected.sqrt() {
        reasons.push(format!("ROI counts {counts} vs expected {expected:.0}"));
    }
    reasons.dedup();
    QcResult {
        peak_centroid: centroid,
        peak_fwhm: fwhm,
        roi_counts: counts,
        expected_counts: expected,
        pass: reasons.is_empty(),
        reasons,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Contamination {
    pub pass: bool,
    pub z: f64,
    /// Both acquisitions were empty.
    pub degenerate: bool,
}

/// Pre/post docked comparison of U-235 ROI counts over equal live times.
pub fn contamination_check(pre: u64, post: u64) -> Contamination {
    if pre + post == 0 {
        return Contamination {
            pass: true,
            z: 0.0,
            degenerate: true,
        };
    }
    let z = (post as f64 - pre as f64).abs() / ((pre + post) as f64).sqrt();
    Contamination {
        pass: z <= 3.0,
        z,
        degenerate: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensors::gamma::{sample_check_source, DetectorState};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn run(det: DetectorState, seed: u64) -> QcResult {
        let noise = NoiseConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sp = sample_check_source(&noise, &det, 10.0, 60.0, 0.0, &mut rng);
        check_source_qc(&sp, &QcReference::nominal(&noise, 10.0), &QcBounds::default())
    }

    #[test]
    fn nominal_check_source_passes() {
        let r = run(DetectorState::default(), 1);
        assert!(r.pass, "{r:?}");
        assert!((r.peak_centroid - AM241_LINE).abs() < 0.3);
    }

    #[test]
    fn gain_and_dead_faults() {
        let g = run(
            DetectorState {
                gain: 1.05,
                ..DetectorState::default()
            },
            2,
        );
        assert!(!g.pass);
        assert!(g.reasons.iter().any(|r| r.starts_with("centroid")), "{g:?}");
        let d = run(
            DetectorState {
                dead: true,
                ..DetectorState::default()
            },
            3,
        );
        assert!(!d.pass);
        assert!(d.reasons.iter().any(|r| r.starts_with("ROI counts")), "{d:?}");
    }

    #[test]
    fn null_pass_rate() {
        let passed = (0..500).filter(|s| run(DetectorState::default(), 100 + s).pass).count();
        assert!(passed >= 495, "{passed}/500");
    }

    #[test]
    fn contamination_false_alarm_rate() {
        use rand_distr::{Distribution, Poisson};
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = Poisson::new(10_000.0).unwrap();
        let trials = 10_000;
        let alarms = (0..trials)
            .filter(|_| {
                let (a, b): (f64, f64) = (p.sample(&mut rng), p.sample(&mut rng));
                !contamination_check(a as u64, b as u64).pass
            })
            .count();
        let rate = alarms as f64 / trials as f64;
        assert!((0.001..=0.006).contains(&rate), "{rate}");
    }

    #[test]
    fn contamination_examples() {
        let c = contamination_check(10000, 10000);
        assert!(c.pass && c.z == 0.0);
        let c = contamination_check(10000, 10700);
        // Independent arithmetic: 700 / sqrt(20700).
        assert!(!c.pass && (c.z - 4.865).abs() < 0.01, "{}", c.z);
        let c = contamination_check(10000, 10300);
        assert!(c.pass && (c.z - 2.11).abs() < 0.01);
        assert!(contamination_check(0, 0).degenerate);
    }
}
