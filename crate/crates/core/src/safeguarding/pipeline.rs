use rand::Rng;
use serde::Serialize;

use super::{
    check_obstacle, classify_end, fit_cylinder, prefilter, segment, sweep_circles, Capabilities,
    CylinderModel, EndCondition, EndKind, Fir, FitError, HoughParams, RansacParams,
};
use crate::sensors::PointCloud;
use crate::vehicle::VehicleConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct PerceptionParams {
    pub min_confidence: f64,
    pub ransac: RansacParams,
    pub segment_tol: f64,
    pub capabilities: Capabilities,
    pub hough: HoughParams,
    /// An end condition wins over an obstacle cluster up to this far past it.
    pub end_preference: f64,
    /// Consecutive frames of the same condition before it is reported.
    pub trigger_frames: usize,
    pub fir_taps: usize,
    pub nominal_radius: f64,
}

impl PerceptionParams {
    pub fn new(cfg: &VehicleConfig, radius: f64) -> Self {
        let hough = HoughParams::default();
        Self {
            min_confidence: 0.3,
            ransac: RansacParams::for_radius(radius),
            segment_tol: 0.01,
            capabilities: Capabilities::for_tracks(cfg.max_step, cfg.track_width, hough.lookahead),
            hough,
            end_preference: 0.10,
            trigger_frames: 25,
            fir_taps: 25,
            nominal_radius: radius,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameResult {
    pub model: CylinderModel,
    pub fit_error: Option<String>,
    /// This frame's classification before debouncing.
    pub raw: EndCondition,
    /// Debounced and denoised condition; kind None until triggered.
    pub primary: EndCondition,
    pub obstacle: Option<f64>,
    /// Both an obstacle and an open end were seen in this frame.
    pub ambiguous: bool,
}

/// Frame-to-frame state of the primary pipeline.
#[derive(Debug, Clone)]
pub struct Perception {
    params: PerceptionParams,
    fir: Fir,
    last_model: Option<CylinderModel>,
    streak: (EndKind, usize),
}

impl Perception {
    pub fn new(params: PerceptionParams) -> Self {
        let fir = Fir::new(params.fir_taps);
        Self {
            params,
            fir,
            last_model: None,
            streak: (EndKind::None, 0),
        }
    }

    pub fn params(&self) -> &PerceptionParams {
        &self.params
    }

    pub fn reset(&mut self) {
        self.fir.reset();
        self.streak = (EndKind::None, 0);
    }

    /// Combines the end classifier with the obstacle check for one frame.
    pub fn classify_frame<R: Rng>(&mut self, cloud: &PointCloud, rng: &mut R) -> FrameResult {
        let p = &self.params;
        let cloud = prefilter(cloud, p.min_confidence);
        let (model, fit_error) = match fit_cylinder(&cloud, rng, &p.ransac) {
            Ok(m) => {
                self.last_model = Some(m);
                (m, None)
            }
            Err(e @ (FitError::InsufficientPoints(_) | FitError::NoConsensus)) => (
                self.last_model
                    .unwrap_or_else(|| CylinderModel::nominal(p.nominal_radius)),
                Some(e.to_string()),
            ),
        };
        let seg = segment(&cloud, &model, p.segment_tol);
        let obstacle = check_obstacle(&seg.nonconforming, &model, &p.capabilities);
        let slices = sweep_circles(&cloud, &model, &p.hough);
        let end = classify_end(&slices, 2.0 * p.nominal_radius, &p.hough);
        let ambiguous = obstacle.is_some() && end.kind == EndKind::OpenEnd;
        let prefer_end = matches!(end.kind, EndKind::ClosedPipe | EndKind::Reducer)
            && obstacle.is_none_or(|o| end.raw_distance <= o + p.end_preference);
        let raw = if prefer_end {
            end
        } else if let Some(d) = obstacle {
            EndCondition {
                kind: EndKind::Obstacle,
                distance: d,
                raw_distance: d,
                confidence: 1.0,
            }
        } else {
            end
        };
        FrameResult {
            model,
            fit_error,
            raw,
            primary: EndCondition::none(p.hough.lookahead),
            obstacle,
            ambiguous,
        }
    }

    /// Full per-frame pipeline including FIR denoising and debouncing.
    pub fn step<R: Rng>(&mut self, cloud: &PointCloud, rng: &mut R) -> FrameResult {
        let mut out = self.classify_frame(cloud, rng);
        let filtered = self.fir.push(out.raw.raw_distance);
        if out.raw.kind == self.streak.0 {
            self.streak.1 += 1;
        } else {
            self.streak = (out.raw.kind, 1);
        }
        if self.streak.0 != EndKind::None && self.streak.1 >= self.params.trigger_frames {
            out.primary = EndCondition {
                kind: self.streak.0,
                distance: filtered.max(0.0),
                raw_distance: out.raw.raw_distance,
                confidence: out.model.inlier_fraction,
            };
        }
        out
    }
}
