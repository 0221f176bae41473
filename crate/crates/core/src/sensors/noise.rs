use serde::{Deserialize, Serialize};

/// Per-sensor noise levels and sensor parameters. Every field has a default,
/// so scenario documents only list what they change.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    /// Per-tick multiplicative track slip (fraction of distance).
    pub slip_sigma: f64,
    /// Spread of the per-run constant slip bias (fraction of distance).
    pub slip_bias_sigma: f64,
    /// Encoder ticks per meter of track travel.
    pub encoder_resolution: f64,
    pub mapper_sigma: f64,
    pub mapper_outlier_rate: f64,
    pub mapper_max_range: f64,
    pub mapper_cols: usize,
    pub mapper_rows: usize,
    /// Horizontal and vertical field of view (degrees).
    pub mapper_hfov: f64,
    pub mapper_vfov: f64,
    pub laser_sigma: f64,
    /// IMU white noise and per-run bias spread (degrees).
    pub imu_sigma: f64,
    pub imu_bias_sigma: f64,
    pub rangefinder_sigma: f64,
    /// Distance out to which the rangefinder holds its target.
    pub rangefinder_lock_distance: f64,
    /// Probability of a valid fix just past the lock distance.
    pub rangefinder_far_fix_prob: f64,
    /// Distance at which far fixes stop entirely.
    pub rangefinder_max_fix_distance: f64,
    pub profiler_sigma: f64,
    /// Detection efficiency for 186 keV line emissions.
    pub efficiency: f64,
    /// Peak FWHM as a fraction of energy at 186 keV.
    pub fwhm_fraction: f64,
    /// Expected Am-241 check source ROI rate (counts/s).
    pub check_source_rate: f64,
    /// Odometry edge sigma as a fraction of traversed distance.
    pub odometry_sigma_fraction: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            slip_sigma: 0.005,
            slip_bias_sigma: 0.005,
            encoder_resolution: 20000.0,
            mapper_sigma: 0.003,
            mapper_outlier_rate: 0.02,
            mapper_max_range: 4.0,
            mapper_cols: 64,
            mapper_rows: 48,
            mapper_hfov: 70.0,
            mapper_vfov: 55.0,
            laser_sigma: 0.002,
            imu_sigma: 0.1,
            imu_bias_sigma: 0.2,
            rangefinder_sigma: 0.02,
            rangefinder_lock_distance: 13.7,
            rangefinder_far_fix_prob: 0.2,
            rangefinder_max_fix_distance: 32.0,
            profiler_sigma: 0.002,
            efficiency: 0.05,
            fwhm_fraction: 0.12,
            check_source_rate: 300.0,
            odometry_sigma_fraction: 0.005,
        }
    }
}

impl NoiseConfig {
    /// All noise switched off; sensor geometry unchanged.
    pub fn noiseless() -> Self {
        Self {
            slip_sigma: 0.0,
            slip_bias_sigma: 0.0,
            mapper_sigma: 0.0,
            mapper_outlier_rate: 0.0,
            laser_sigma: 0.0,
            imu_sigma: 0.0,
            imu_bias_sigma: 0.0,
            rangefinder_sigma: 0.0,
            profiler_sigma: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let non_negative = [
            ("slip_sigma", self.slip_sigma),
            ("slip_bias_sigma", self.slip_bias_sigma),
            ("mapper_sigma", self.mapper_sigma),
            ("laser_sigma", self.laser_sigma),
            ("imu_sigma", self.imu_sigma),
            ("imu_bias_sigma", self.imu_bias_sigma),
            ("rangefinder_sigma", self.rangefinder_sigma),
            ("profiler_sigma", self.profiler_sigma),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(format!("{name} must be finite and >= 0"));
            }
        }
        let fractions = [
            ("mapper_outlier_rate", self.mapper_outlier_rate),
            ("rangefinder_far_fix_prob", self.rangefinder_far_fix_prob),
            ("efficiency", self.efficiency),
        ];
        for (name, v) in fractions {
            if !(0.0..=1.0).contains(&v) {
                return Err(format!("{name} must lie in [0, 1]"));
            }
        }
        let positive = [
            ("encoder_resolution", self.encoder_resolution),
            ("mapper_max_range", self.mapper_max_range),
            ("rangefinder_lock_distance", self.rangefinder_lock_distance),
            ("fwhm_fraction", self.fwhm_fraction),
            ("check_source_rate", self.check_source_rate),
            ("odometry_sigma_fraction", self.odometry_sigma_fraction),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("{name} must be > 0"));
            }
        }
        if self.rangefinder_max_fix_distance < self.rangefinder_lock_distance {
            return Err("rangefinder_max_fix_distance must be >= rangefinder_lock_distance".into());
        }
        if self.mapper_cols < 2 || self.mapper_rows < 2 {
            return Err("mapper grid needs at least 2x2 rays".into());
        }
        for (name, v) in [("mapper_hfov", self.mapper_hfov), ("mapper_vfov", self.mapper_vfov)] {
            if !(v > 0.0 && v < 180.0) {
                return Err(format!("{name} must lie in (0, 180) degrees"));
            }
        }
        Ok(())
    }
}
