//! Coefficient fields, the semiclassical principal symbol `⟨Aξ,ξ⟩ − n`, and the
//! closed-form constants derived from the coefficient bounds.

mod coefficients;

pub use coefficients::{
    CoefficientField, FieldBounds, PiecewisePolynomial, Profile, PRESET_NAMES, TRAP_PEAK,
};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Absolute tolerance of the ellipticity check.
pub const ELLIPTICITY_TOL: f64 = 1e-10;

/// Principal symbol `⟨A(x)ξ, ξ⟩ − n(x)`.
pub fn eval_symbol(coeffs: &CoefficientField, x: &[f64], xi: &[f64]) -> Result<f64> {
    let d = coeffs.dimension;
    if x.len() != d || xi.len() != d {
        return invalid(format!(
            "position and momentum must have length {d}, got {} and {}",
            x.len(),
            xi.len()
        ));
    }
    let a = coeffs.a_eval(x);
    let mut quad = 0.0;
    for i in 0..d {
        for j in 0..d {
            quad += a[i * d + j] * xi[i] * xi[j];
        }
    }
    Ok(quad - coeffs.n_eval(x))
}

/// μ₀ = 1 + 2·n_max/a_min.
pub fn mu_zero(coeffs: &CoefficientField) -> f64 {
    1.0 + 2.0 * coeffs.n_max / coeffs.a_min
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipticityReport {
    /// Minimum of `⟨ξ⟩⁻²(⟨Aξ,ξ⟩ − n)` over the samples.
    pub minimum: f64,
    /// `a_min / 2`.
    pub threshold: f64,
    pub samples: usize,
    pub pass: bool,
}

/// Samples the weighted symbol on `|ξ|² ∈ [μ, 100μ]` over a grid covering `B_{R₀}`.
///
/// Errors when `mu < μ₀`, since the lower bound `a_min/2` is then not guaranteed.
pub fn verify_ellipticity(
    coeffs: &CoefficientField,
    mu: f64,
    sample_count: usize,
) -> Result<EllipticityReport> {
    let mu0 = mu_zero(coeffs);
    if mu < mu0 * (1.0 - 1e-14) {
        return Err(Error::Precondition(format!(
            "mu = {mu} is below mu_0 = {mu0}; the ellipticity bound does not apply"
        )));
    }
    let d = coeffs.dimension;
    let sample_count = sample_count.max(8);
    let dirs: Vec<Vec<f64>> = if d == 1 {
        vec![vec![1.0], vec![-1.0]]
    } else {
        let nd = ((sample_count as f64).powf(0.25).ceil() as usize).max(4);
        (0..nd)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / nd as f64;
                vec![t.cos(), t.sin()]
            })
            .collect()
    };
    let per_dir = (sample_count / dirs.len()).max(4);
    let n_mag = ((per_dir as f64).sqrt().ceil() as usize).max(2);
    let n_pos = (per_dir / n_mag).max(2);

    let r0 = coeffs.support_radius;
    let positions: Vec<Vec<f64>> = if d == 1 {
        (0..n_pos).map(|i| vec![-r0 + 2.0 * r0 * i as f64 / (n_pos - 1) as f64]).collect()
    } else {
        let side = ((n_pos as f64).sqrt().ceil() as usize).max(2);
        let mut pts = Vec::with_capacity(side * side);
        for i in 0..side {
            for j in 0..side {
                let x = -r0 + 2.0 * r0 * i as f64 / (side - 1) as f64;
                let y = -r0 + 2.0 * r0 * j as f64 / (side - 1) as f64;
                if x * x + y * y <= r0 * r0 {
                    pts.push(vec![x, y]);
                }
            }
        }
        pts.push(vec![0.0, 0.0]);
        pts
    };

    let mut minimum = f64::INFINITY;
    let mut samples = 0;
    let mut xi = vec![0.0; d];
    for x in &positions {
        for dir in &dirs {
            for m in 0..n_mag {
                // |ξ|² log-spaced over [μ, 100μ], endpoints included.
                let s2 = mu * 100f64.powf(m as f64 / (n_mag - 1) as f64);
                let s = s2.sqrt();
                for (v, u) in xi.iter_mut().zip(dir) {
                    *v = s * u;
                }
                let xi2: f64 = xi.iter().map(|v| v * v).sum();
                let val = eval_symbol(coeffs, x, &xi)? / (1.0 + xi2);
                minimum = minimum.min(val);
                samples += 1;
            }
        }
    }
    let threshold = coeffs.a_min / 2.0;
    Ok(EllipticityReport { minimum, threshold, samples, pass: minimum >= threshold - ELLIPTICITY_TOL })
}

/// Gårding pair `(a_min, 2k²(n_max + a_min))`.
pub fn garding_constants(coeffs: &CoefficientField, k: f64) -> Result<(f64, f64)> {
    if !(k > 0.0) {
        return invalid(format!("k must be positive, got {k}"));
    }
    Ok((coeffs.a_min, 2.0 * k * k * (coeffs.n_max + coeffs.a_min)))
}

/// Upper bound on the continuity constant: `max(a_max, n_max) + C_DtN1`.
pub fn c_cont_bound(coeffs: &CoefficientField, c_dtn1: f64) -> f64 {
    coeffs.a_max.max(coeffs.n_max) + c_dtn1
}

/// Quasi-optimality constant `2(max(a_max, n_max) + C_DtN1)/a_min`.
pub fn cqo(coeffs: &CoefficientField, c_dtn1: f64) -> Result<f64> {
    if !(c_dtn1 >= 0.0) {
        return invalid(format!("C_DtN1 must be nonnegative, got {c_dtn1}"));
    }
    Ok(2.0 * c_cont_bound(coeffs, c_dtn1) / coeffs.a_min)
}

/// Threshold on `k·η(V_N)` below which the duality argument yields quasi-optimality.
pub fn eta_threshold(coeffs: &CoefficientField, c_dtn1: f64) -> f64 {
    (coeffs.a_min / (2.0 * (coeffs.n_max + coeffs.a_min))).sqrt() / c_cont_bound(coeffs, c_dtn1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantsReport {
    pub mu0: f64,
    pub garding_alpha: f64,
    pub garding_cv: f64,
    pub c_cont_bound: f64,
    pub cqo: f64,
}

impl ConstantsReport {
    pub fn new(coeffs: &CoefficientField, k: f64, c_dtn1: f64) -> Result<Self> {
        let (garding_alpha, garding_cv) = garding_constants(coeffs, k)?;
        Ok(Self {
            mu0: mu_zero(coeffs),
            garding_alpha,
            garding_cv,
            c_cont_bound: c_cont_bound(coeffs, c_dtn1),
            cqo: cqo(coeffs, c_dtn1)?,
        })
    }
}
