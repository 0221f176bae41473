//! Axial field of view of the disc-collimated detector.
//!
//! Two lead discs of radius `D` flank a crystal of length `L` and radius
//! `a`, with the discs `g` apart. In the axial half-plane a wall point at
//! axial offset `u` and radius `R` is seen by the whole crystal while the
//! line from the near crystal corner clears the disc edge, and by none of
//! it once the line from the far corner is blocked. By similar triangles:
//!
//! ```text
//! u1 =  L/2 + (R + a)(g/2 - L/2) / (D + a)    end of the full-view plateau
//! u2 = -L/2 + (R - a)(g/2 + L/2) / (D - a)    end of the penumbra tail
//! ```
//!
//! The response is the trapezoid through these breakpoints normalized to
//! unit area.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CollimatorError {
    #[error("degenerate collimator geometry: {0}")]
    Degenerate(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollimatorGeometry {
    pub pipe_radius: f64,
    pub crystal_length: f64,
    pub crystal_radius: f64,
    pub disc_radius: f64,
    pub disc_gap: f64,
}

impl CollimatorGeometry {
    /// 5 cm × 5 cm crystal between 0.10 m discs spaced 0.10 m apart.
    pub fn standard(pipe_radius: f64) -> Self {
        Self {
            pipe_radius,
            crystal_length: 0.05,
            crystal_radius: 0.025,
            disc_radius: 0.10,
            disc_gap: 0.10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnulusResponse {
    /// Half-width of the full-view plateau.
    pub plateau: f64,
    /// Half-width of the support.
    pub tail: f64,
    pub height: f64,
}

impl AnnulusResponse {
    pub fn new(g: &CollimatorGeometry) -> Result<Self, CollimatorError> {
        let (r, l, a, d, gap) = (
            g.pipe_radius,
            g.crystal_length,
            g.crystal_radius,
            g.disc_radius,
            g.disc_gap,
        );
        if [r, l, a, d, gap].iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(CollimatorError::Degenerate("dimensions must be positive"));
        }
        if d <= a {
            return Err(CollimatorError::Degenerate("disc radius must exceed crystal radius"));
        }
        if l >= gap {
            return Err(CollimatorError::Degenerate("crystal must fit between the discs"));
        }
        if r <= d {
            return Err(CollimatorError::Degenerate("discs must fit inside the pipe"));
        }
        let u1 = l / 2.0 + (r + a) * (gap / 2.0 - l / 2.0) / (d + a);
        let u2 = -l / 2.0 + (r - a) * (gap / 2.0 + l / 2.0) / (d - a);
        Ok(Self {
            plateau: u1,
            tail: u2,
            height: 1.0 / (u1 + u2),
        })
    }

    pub fn weight(&self, u: f64) -> f64 {
        let u = u.abs();
        if u <= self.plateau {
            self.height
        } else if u < self.tail {
            self.height * (self.tail - u) / (self.tail - self.plateau)
        } else {
            0.0
        }
    }

    /// Breakpoints of w(x - center) in ascending order.
    pub fn breakpoints(&self, center: f64) -> [f64; 4] {
        [
            center - self.tail,
            center - self.plateau,
            center + self.plateau,
            center + self.tail,
        ]
    }

    /// Exact ∫ f(x) w(x - center) dx for a piecewise-linear `f` given by
    /// ascending `(x, f)` breakpoints and zero outside them.
    pub fn integrate(&self, profile: &[[f64; 2]], center: f64) -> f64 {
        if profile.is_empty() {
            return 0.0;
        }
        let f = |x: f64| -> f64 {
            if profile.len() < 2 || x < profile[0][0] || x > profile[profile.len() - 1][0] {
                return 0.0;
            }
            let i = profile.partition_point(|b| b[0] <= x).clamp(1, profile.len() - 1);
            let [x0, a0] = profile[i - 1];
            let [x1, a1] = profile[i];
            a0 + (a1 - a0) * (x - x0) / (x1 - x0)
        };
        let bp = self.breakpoints(center);
        let mut xs: Vec<f64> = profile
            .iter()
            .map(|b| b[0])
            .chain(bp)
            .filter(|x| *x >= bp[0] && *x <= bp[3])
            .collect();
        xs.sort_by(|a, b| a.total_cmp(b));
        xs.dedup();
        // Both factors are linear on each piece, so Simpson's rule is exact.
        xs.windows(2)
            .map(|s| {
                let (a, b) = (s[0], s[1]);
                let m = 0.5 * (a + b);
                // Evaluate just inside the piece to respect jumps at the ends.
                let eps = (b - a) * 1e-12;
                let g = |x: f64| f(x) * self.weight(x - center);
                (b - a) / 6.0 * (g(a + eps) + 4.0 * g(m) + g(b - eps))
            })
            .sum()
    }
}
