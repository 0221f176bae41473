use nalgebra::{Matrix2, Vector2};

/// Two-state Kalman filter run on board: along-axis position and the
/// odometry scale error. Fixes from the rangefinder also calibrate the
/// scale, which keeps the estimate honest through rangefinder dropouts.
#[derive(Debug, Clone, PartialEq)]
pub struct OnlineFilter {
    state: Vector2<f64>,
    cov: Matrix2<f64>,
    odo_fraction: f64,
    odo_floor: f64,
}

impl OnlineFilter {
    pub fn new(x0: f64, sigma_x0: f64, sigma_scale: f64, odo_fraction: f64) -> Self {
        Self {
            state: Vector2::new(x0, 0.0),
            cov: Matrix2::new(sigma_x0 * sigma_x0, 0.0, 0.0, sigma_scale * sigma_scale),
            odo_fraction,
            odo_floor: 5e-4,
        }
    }

    pub fn position(&self) -> f64 {
        self.state[0]
    }

    pub fn sigma(&self) -> f64 {
        self.cov[(0, 0)].sqrt()
    }

    pub fn scale_error(&self) -> f64 {
        self.state[1]
    }

    /// Advances by an encoder increment.
    pub fn predict(&mut self, delta: f64) {
        let f = Matrix2::new(1.0, delta, 0.0, 1.0);
        self.state[0] += delta * (1.0 + self.state[1]);
        let q = (self.odo_fraction * delta.abs()).max(self.odo_floor);
        self.cov = f * self.cov * f.transpose() + Matrix2::new(q * q, 0.0, 0.0, 0.0);
    }

    /// Direct position measurement with standard deviation `sigma`.
    pub fn update(&mut self, z: f64, sigma: f64) {
        let s = self.cov[(0, 0)] + sigma * sigma;
        let k = self.cov.column(0) / s;
        self.state += k * (z - self.state[0]);
        let h = Matrix2::new(1.0, 0.0, 0.0, 0.0);
        self.cov = (Matrix2::identity() - k * h.row(0)) * self.cov;
        self.cov = 0.5 * (self.cov + self.cov.transpose());
    }
}
