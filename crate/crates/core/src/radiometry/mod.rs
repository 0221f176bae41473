//! Radiometric accounting: ROI sums, check-source and contamination QC,
//! round-pipe flags from the profiler and per-foot count apportionment.

mod flags;
mod per_foot;
mod qc;

use serde::Serialize;
use thiserror::Error;

use crate::sensors::gamma::{line_window, U235_LINE};
use crate::sensors::{NoiseConfig, Spectrum};

pub use flags::{flag_geometry, ring_anomaly, GeometryFlags, GeometryParams};
pub use per_foot::{
    apportion, bin_weights, per_foot_report, FootSegment, LocalizedSpectrum, Pass, PerFootReport, FOOT,
};
pub use qc::{
    check_source_qc, contamination_check, Contamination, QcBounds, QcReference, QcResult,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RadError {
    #[error("ROI [{lo}, {hi}] keV is empty or outside the calibrated range")]
    RoiOutOfRange { lo: f64, hi: f64 },
}

/// Energy window in keV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Roi {
    pub lo: f64,
    pub hi: f64,
}

impl Roi {
    pub fn new(lo: f64, hi: f64) -> Result<Self, RadError> {
        if lo < hi {
            Ok(Self { lo, hi })
        } else {
            Err(RadError::RoiOutOfRange { lo, hi })
        }
    }

    /// Nominal U-235 window.
    pub fn u235(noise: &NoiseConfig) -> Self {
        let (lo, hi) = line_window(noise, U235_LINE);
        Self { lo, hi }
    }
}

/// Sum of channels whose centers fall inside the ROI.
pub fn roi_counts(sp: &Spectrum, roi: &Roi) -> Result<u64, RadError> {
    let top = sp.cal.offset + sp.cal.slope * sp.channels.len() as f64;
    if roi.lo < sp.cal.offset || roi.hi > top || roi.lo >= roi.hi {
        return Err(RadError::RoiOutOfRange {
            lo: roi.lo,
            hi: roi.hi,
        });
    }
    Ok(sp.channels[sp.cal.channels_in(roi.lo, roi.hi)]
        .iter()
        .map(|&c| c as u64)
        .sum())
}
