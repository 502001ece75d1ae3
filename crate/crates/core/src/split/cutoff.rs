//! Smooth plateau functions built from the `exp(−1/s)` partition-of-unity blend.

use crate::error::{invalid, Result};

/// `g(s) = exp(−1/s)` for `s > 0`, zero otherwise.
#[inline]
fn g(s: f64) -> f64 {
    if s > 0.0 {
        (-1.0 / s).exp()
    } else {
        0.0
    }
}

/// Base bump: 1 for `t ≤ 1`, 0 for `t ≥ 2`, and `g(2−t)/(g(2−t)+g(t−1))` in between.
///
/// Infinitely differentiable and monotone nonincreasing.
#[inline]
pub fn base_bump(t: f64) -> f64 {
    if t <= 1.0 {
        1.0
    } else if t >= 2.0 {
        0.0
    } else {
        let a = g(2.0 - t);
        let b = g(t - 1.0);
        a / (a + b)
    }
}

/// Plateau in one radial variable: 1 for `r ≤ flat`, 0 for `r ≥ zero`.
pub fn plateau(r: f64, flat: f64, zero: f64) -> f64 {
    debug_assert!(zero > flat);
    base_bump(1.0 + (r - flat) / (zero - flat))
}

/// χ_μ(t) = χ(t/μ): equal to one for `t ≤ μ` and zero for `t ≥ 2μ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothCutoff {
    mu: f64,
}

impl SmoothCutoff {
    pub fn mu(&self) -> f64 {
        self.mu
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        base_bump(t / self.mu)
    }
}

pub fn make_smooth_cutoff(mu: f64) -> Result<SmoothCutoff> {
    if !(mu > 0.0) || !mu.is_finite() {
        return invalid(format!("cutoff parameter mu must be positive, got {mu}"));
    }
    Ok(SmoothCutoff { mu })
}

/// Spatial cutoff φ: one on `B_{R+1}`, zero outside `B_{R+2}`.
pub fn spatial_cutoff_phi(x: &[f64], radius: f64) -> f64 {
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    base_bump(r - radius)
}
