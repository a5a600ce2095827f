//! Smooth radial bump profiles.
//!
//! All window functions in the toolkit (the covering bump, the atom
//! plateaus, the sampling windows) are radial smoothed steps built from the
//! classical C-infinity transition
//!
//! ```text
//! h(t) = exp(-1/t)  for t > 0,   h(t) = 0  for t <= 0,
//! g(t) = h(t) / (h(t) + h(1-t)),
//! ```
//!
//! so that `g` is 0 for t <= 0, 1 for t >= 1, and infinitely smooth in
//! between. A [`SmoothBump`] is `g` rescaled to a plateau radius and a
//! support radius: identically 1 inside the plateau, exactly 0 outside the
//! support.

use serde::{Deserialize, Serialize};

fn h(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// C-infinity step: 0 for t <= 0, 1 for t >= 1.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = h(t);
        let b = h(1.0 - t);
        a / (a + b)
    }
}

/// Radial bump profile: 1 on `|xi| <= plateau`, 0 on `|xi| >= support`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothBump {
    pub plateau: f64,
    pub support: f64,
}

impl SmoothBump {
    pub fn new(plateau: f64, support: f64) -> Self {
        assert!(
            plateau > 0.0 && support > plateau,
            "bump needs 0 < plateau < support"
        );
        Self { plateau, support }
    }

    /// The reference covering bump: 1 on |xi| <= 1/4, supported in |xi| < 1/2.
    pub fn reference() -> Self {
        Self::new(0.25, 0.5)
    }

    /// Evaluate at radius `r >= 0`. Exactly zero for `r >= support`.
    pub fn eval(&self, r: f64) -> f64 {
        smooth_step((self.support - r) / (self.support - self.plateau))
    }

    /// Evaluate at a point of R^d given as a slice.
    pub fn eval_at(&self, xi: &[f64]) -> f64 {
        let r = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
        self.eval(r)
    }

    /// The same profile with both radii scaled by `s > 0`.
    pub fn scaled(&self, s: f64) -> Self {
        Self::new(self.plateau * s, self.support * s)
    }
}
