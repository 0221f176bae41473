use crate::localization::{
    build_graph, calibrate_rangefinder, detect_entrance, interp, optimize, Entrance, EntranceParams,
    GraphParams, LocError, LocalizedTrack, RangeGate,
};
use crate::sensors::ProfileRing;

/// Half window around the entrance stamp used to calibrate the rangefinder.
pub const CALIBRATION_WINDOW: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Localized {
    pub entrance: Entrance,
    /// Added to a range to get the profiler-plane position.
    pub calibration: f64,
    pub fixes: Vec<(f64, f64)>,
    pub track: LocalizedTrack,
}

/// Batch localization of a finished run: entrance registration from the
/// profiler rings, rangefinder calibration at the entrance, gating and the
/// pose graph.
pub fn localize(
    rings: &[ProfileRing],
    odometer: &[(f64, f64)],
    ranges: &[(f64, f64, bool)],
    entrance_params: &EntranceParams,
    graph: &GraphParams,
) -> Result<Localized, LocError> {
    let entrance = detect_entrance(rings, entrance_params)?;
    if odometer.is_empty() {
        return Err(LocError::EmptyStream);
    }
    let o0 = interp(odometer, entrance.stamp);
    let state_at = |t: f64| interp(odometer, t) - o0;
    let returned: Vec<(f64, f64)> = ranges.iter().filter(|r| r.2).map(|r| (r.0, r.1)).collect();
    let calibration = calibrate_rangefinder(&returned, entrance.stamp, CALIBRATION_WINDOW, state_at)
        .ok_or_else(|| LocError::InvalidGraph("no rangefinder returns near the entrance".into()))?;
    // Predictions are re-anchored on every accepted fix so encoder drift
    // never outgrows the gate window.
    let mut gate = RangeGate::default();
    let mut anchor = (0.0, o0);
    let mut fixes = Vec::new();
    for &(t, r, ok) in ranges.iter().filter(|r| r.0 >= entrance.stamp - 0.5) {
        let odo = interp(odometer, t);
        let predicted = anchor.0 + odo - anchor.1;
        if let Some(x) = gate.push(r + calibration, ok, predicted, odo) {
            fixes.push((t, x));
            anchor = (x, odo);
        }
    }
    let g = build_graph(odometer, &fixes, &entrance, graph)?;
    let track = optimize(&g)?;
    Ok(Localized {
        entrance,
        calibration,
        fixes,
        track,
    })
}
