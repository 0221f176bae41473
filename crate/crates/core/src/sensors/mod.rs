//! Sensor models driven by the world and the true pose. Each sampler is a
//! pure function of its inputs and the RNG state handed to it.

pub mod annulus;
pub mod depth;
pub mod encoders;
pub mod gamma;
pub mod imu;
pub mod lasers;
mod noise;
pub mod profiler;
pub mod rangefinder;

pub use annulus::{AnnulusResponse, CollimatorGeometry};
pub use depth::{mapper_directions, sample_depth_map, PointCloud};
pub use encoders::{EncoderCounter, EncoderTicks};
pub use gamma::{sample_check_source, sample_gamma, DetectorState, Spectrum};
pub use imu::{sample_imu, ImuBias, ImuSample};
pub use lasers::{expected_laser_ranges, sample_point_lasers, PointLasers};
pub use noise::NoiseConfig;
pub use profiler::{sample_profiler, ProfileRing};
pub use rangefinder::{sample_rangefinder, RangeReading};
