use rand::Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use serde::Serialize;

use super::annulus::AnnulusResponse;
use super::NoiseConfig;
use crate::world::DepositProfile;

pub const CHANNELS: usize = 1024;
pub const KEV_PER_CHANNEL: f64 = 0.5;
/// U-235 line (keV).
pub const U235_LINE: f64 = 186.0;
/// Am-241 line (keV).
pub const AM241_LINE: f64 = 59.54;
/// Region of interest half-width in units of FWHM.
pub const ROI_HALF_WIDTH: f64 = 1.25;
/// Rates left on a dead detector.
const DEAD_FACTOR: f64 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Calibration {
    /// keV per channel.
    pub slope: f64,
    /// keV at the low edge of channel 0.
    pub offset: f64,
}

impl Calibration {
    pub fn nominal() -> Self {
        Self {
            slope: KEV_PER_CHANNEL,
            offset: 0.0,
        }
    }

    pub fn center(&self, ch: usize) -> f64 {
        self.offset + (ch as f64 + 0.5) * self.slope
    }

    /// Channels whose centers fall in `[lo, hi]` keV.
    pub fn channels_in(&self, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let first = ((lo - self.offset) / self.slope - 0.5).ceil().max(0.0) as usize;
        let last = ((hi - self.offset) / self.slope - 0.5).floor();
        let end = if last < 0.0 { 0 } else { (last as usize + 1).min(CHANNELS) };
        first.min(end)..end
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    pub channels: Vec<u32>,
    pub live_time: f64,
    pub cal: Calibration,
    pub stamp: f64,
}

impl Spectrum {
    pub fn empty(live_time: f64, stamp: f64) -> Self {
        Self {
            channels: vec![0; CHANNELS],
            live_time,
            cal: Calibration::nominal(),
            stamp,
        }
    }

    pub fn total(&self) -> u64 {
        self.channels.iter().map(|&c| c as u64).sum()
    }
}

/// Peak FWHM at `energy`, scaling with the square root of energy.
pub fn fwhm_at(noise: &NoiseConfig, energy: f64) -> f64 {
    noise.fwhm_fraction * U235_LINE * (energy / U235_LINE).sqrt()
}

/// Nominal `[lo, hi]` window around a line.
pub fn line_window(noise: &NoiseConfig, energy: f64) -> (f64, f64) {
    let w = ROI_HALF_WIDTH * fwhm_at(noise, energy);
    (energy - w, energy + w)
}

/// Detector condition, changed by injected faults.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorState {
    pub gain: f64,
    pub dead: bool,
    /// Extra 186 keV rate from contamination picked up in the pipe.
    pub contamination: f64,
}

impl Default for DetectorState {
    fn default() -> Self {
        Self {
            gain: 1.0,
            dead: false,
            contamination: 0.0,
        }
    }
}

impl DetectorState {
    fn rate_factor(&self) -> f64 {
        if self.dead {
            DEAD_FACTOR
        } else {
            1.0
        }
    }
}

fn poisson<R: Rng>(lambda: f64, rng: &mut R) -> u64 {
    if lambda <= 0.0 {
        0
    } else {
        Poisson::new(lambda).unwrap().sample(rng) as u64
    }
}

/// Drops `n` counts on a discrete Gaussian restricted to the line window.
fn place_peak<R: Rng>(sp: &mut Spectrum, energy: f64, fwhm: f64, n: u64, rng: &mut R) {
    if n == 0 {
        return;
    }
    let chans = sp.cal.channels_in(energy - ROI_HALF_WIDTH * fwhm, energy + ROI_HALF_WIDTH * fwhm);
    let sigma = fwhm / (8.0 * std::f64::consts::LN_2).sqrt();
    let weights: Vec<f64> = chans
        .clone()
        .map(|c| (-0.5 * ((sp.cal.center(c) - energy) / sigma).powi(2)).exp())
        .collect();
    let mut mass: f64 = weights.iter().sum();
    let mut left = n;
    for (c, w) in chans.zip(&weights) {
        if left == 0 {
            break;
        }
        let p = (w / mass).clamp(0.0, 1.0);
        let k = if p >= 1.0 { left } else { Binomial::new(left, p).unwrap().sample(rng) };
        sp.channels[c] += k as u32;
        left -= k;
        mass -= w;
    }
}

/// Flat continuum whose density puts `roi_rate` counts/s in the U-235 ROI.
fn add_continuum<R: Rng>(sp: &mut Spectrum, noise: &NoiseConfig, roi_rate: f64, rng: &mut R) {
    let (lo, hi) = line_window(noise, U235_LINE);
    let n_roi = sp.cal.channels_in(lo, hi).len().max(1);
    let per_channel = roi_rate * sp.live_time / n_roi as f64;
    for c in sp.channels.iter_mut() {
        *c += poisson(per_channel, rng) as u32;
    }
}

/// Expected 186 keV ROI line rate from the deposit for a detector at `x`.
pub fn line_rate(deposit: &DepositProfile, response: &AnnulusResponse, noise: &NoiseConfig, x: f64) -> f64 {
    noise.efficiency * response.integrate(&deposit.breakpoints, x)
}

/// One acquisition bin of the in-pipe detector centered at `x`.
#[allow(clippy::too_many_arguments)]
pub fn sample_gamma<R: Rng>(
    deposit: &DepositProfile,
    response: &AnnulusResponse,
    noise: &NoiseConfig,
    detector: &DetectorState,
    x: f64,
    live_time: f64,
    stamp: f64,
    rng: &mut R,
) -> Spectrum {
    let mut sp = Spectrum::empty(live_time, stamp);
    let f = detector.rate_factor();
    let line = (line_rate(deposit, response, noise, x) + detector.contamination) * f;
    let e = U235_LINE * detector.gain;
    place_peak(&mut sp, e, fwhm_at(noise, U235_LINE) * detector.gain, poisson(line * live_time, rng), rng);
    add_continuum(&mut sp, noise, deposit.background_rate * f, rng);
    sp
}

/// Docked acquisition: Am-241 check source plus the 186 keV background.
pub fn sample_check_source<R: Rng>(
    noise: &NoiseConfig,
    detector: &DetectorState,
    background_rate: f64,
    live_time: f64,
    stamp: f64,
    rng: &mut R,
) -> Spectrum {
    let mut sp = Spectrum::empty(live_time, stamp);
    let f = detector.rate_factor();
    let g = detector.gain;
    let n_am = poisson(noise.check_source_rate * f * live_time, rng);
    place_peak(&mut sp, AM241_LINE * g, fwhm_at(noise, AM241_LINE) * g, n_am, rng);
    let n_u = poisson(detector.contamination * f * live_time, rng);
    place_peak(&mut sp, U235_LINE * g, fwhm_at(noise, U235_LINE) * g, n_u, rng);
    add_continuum(&mut sp, noise, background_rate * f, rng);
    sp
}
