//! Smooth low/high frequency splitting of Helmholtz solutions.
//!
//! Whole-space Fourier multipliers are realised on a periodic box `[−L, L)^d`. The
//! functions being split are `φu` with `φ` supported in `B_{R+2}`, so as long as the
//! box contains that ball the periodisation is exact and only the multiplier is sampled.

pub mod cutoff;
mod grid;
mod scaling;

pub use cutoff::{base_bump, make_smooth_cutoff, plateau, spatial_cutoff_phi, SmoothCutoff};
pub use grid::GridFunction;
pub use scaling::{least_squares_slope, scaling_report, ScalingReport, ScalingRow, ScalingRun};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProjectorKind {
    Low,
    High,
}

/// Spectrum of `Π_L u` or `Π_H u`: the DFT of `u` times `χ_μ(k⁻²|ζ|²)` or its complement.
pub fn projector_spectrum(u: &GridFunction, k: f64, mu: f64, kind: ProjectorKind) -> Result<Vec<Complex64>> {
    if !(k > 0.0) {
        return invalid(format!("k must be positive, got {k}"));
    }
    let chi = make_smooth_cutoff(mu)?;
    let inv_k2 = 1.0 / (k * k);
    let mut spec = u.spectrum();
    for (idx, s) in spec.iter_mut().enumerate() {
        let c = chi.eval(u.frequency_sq(idx) * inv_k2);
        let m = match kind {
            ProjectorKind::Low => c,
            ProjectorKind::High => 1.0 - c,
        };
        *s *= m;
    }
    Ok(spec)
}

/// `Π_L u = F⁻¹(χ_μ(k⁻²|ζ|²) F u)` (low) or `Π_H u = u − Π_L u` (high), both as multipliers.
pub fn apply_projector(u: &GridFunction, k: f64, mu: f64, kind: ProjectorKind) -> Result<GridFunction> {
    let spec = projector_spectrum(u, k, mu, kind)?;
    Ok(u.from_spectrum(spec))
}

/// `u_low + u_high = φu` on the periodic box; restriction to `B_R` happens in the norms.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub u_low: GridFunction,
    pub u_high: GridFunction,
    pub phi_u: GridFunction,
    pub k: f64,
    pub mu: f64,
    pub radius: f64,
    pub f_norm: f64,
}

impl Decomposition {
    /// `max_{|x|≤R} |u_low + u_high − φu|` relative to `max |φu|`.
    pub fn partition_defect(&self) -> f64 {
        let scale = self.phi_u.max_abs().max(f64::MIN_POSITIVE);
        let mut x = vec![0.0; self.phi_u.dimension()];
        let r2 = self.radius * self.radius;
        let mut worst: f64 = 0.0;
        for idx in 0..self.phi_u.values().len() {
            self.phi_u.position_into(idx, &mut x);
            if x.iter().map(|c| c * c).sum::<f64>() <= r2 {
                let d = self.u_low.values()[idx] + self.u_high.values()[idx] - self.phi_u.values()[idx];
                worst = worst.max(d.norm());
            }
        }
        worst / scale
    }
}

/// Splits `φu` into its low- and high-frequency parts.
pub fn decompose(u: &GridFunction, f_norm: f64, k: f64, mu: f64, radius: f64) -> Result<Decomposition> {
    if !(radius > 0.0) {
        return invalid("radius must be positive");
    }
    let required = radius + 2.0;
    if u.half_width() < required {
        return Err(Error::BoxTooSmall { half_width: u.half_width(), required });
    }
    let mut phi_u = u.clone();
    let mut x = vec![0.0; u.dimension()];
    for idx in 0..u.values().len() {
        phi_u.position_into(idx, &mut x);
        phi_u.values_mut()[idx] *= spatial_cutoff_phi(&x, radius);
    }
    let u_low = apply_projector(&phi_u, k, mu, ProjectorKind::Low)?;
    let u_high = apply_projector(&phi_u, k, mu, ProjectorKind::High)?;
    Ok(Decomposition { u_low, u_high, phi_u, k, mu, radius, f_norm })
}

/// `((2πħ)^{-d} ∫ ⟨ξ⟩^{2s} |F_ħu(ξ)|² dξ)^{1/2}` by the discrete Plancherel identity, `ξ = ħζ`.
pub fn semiclassical_sobolev_norm(u: &GridFunction, s: f64, hbar: f64) -> Result<f64> {
    if !(hbar > 0.0) {
        return invalid(format!("hbar must be positive, got {hbar}"));
    }
    let spec = u.spectrum();
    let total = u.values().len() as f64;
    let cell = u.spacing().powi(u.dimension() as i32);
    let h2 = hbar * hbar;
    let acc: f64 = spec
        .iter()
        .enumerate()
        .map(|(idx, v)| (1.0 + h2 * u.frequency_sq(idx)).powf(s) * v.norm_sqr())
        .sum();
    Ok((acc * cell / total).sqrt())
}

/// `(‖∇u‖²_{L²(B_r)} + k²‖u‖²_{L²(B_r)})^{1/2}` with a spectral gradient.
pub fn h1k_norm(u: &GridFunction, k: f64, region_radius: f64) -> Result<f64> {
    if !(k > 0.0) {
        return invalid(format!("k must be positive, got {k}"));
    }
    let d = u.dimension();
    let mut grad_sq = 0.0;
    for axis in 0..d {
        let mut alpha = vec![0; d];
        alpha[axis] = 1;
        grad_sq += u.derivative(&alpha)?.l2_norm_ball(region_radius).powi(2);
    }
    let l2 = u.l2_norm_ball(region_radius);
    Ok((grad_sq + k * k * l2 * l2).sqrt())
}

/// Resolution rule `πN/(2L) ≥ 4·√(2μ)·k`: smallest power-of-two `N` for the given box.
pub fn required_points(half_width: f64, k: f64, mu: f64) -> usize {
    let need = 4.0 * (2.0 * mu).sqrt() * k * 2.0 * half_width / std::f64::consts::PI;
    (need.ceil() as usize).max(16).next_power_of_two()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_grid(seed: u64, l: f64, n: usize, d: usize) -> GridFunction {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vals = (0..n.pow(d as u32))
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        GridFunction::new(l, n, d, vals).unwrap()
    }

    #[test]
    fn plane_wave_below_cutoff_is_low() {
        let (l, k, mu) = (4.0, 5.0, 3.0);
        // |ζ| = 8π/4 ≈ 6.28 ≤ √3·5 ≈ 8.66
        let zeta = 8.0 * PI / l;
        let u = GridFunction::from_fn(l, 128, 1, |x| Complex64::new(0.0, zeta * x[0]).exp()).unwrap();
        let low = apply_projector(&u, k, mu, ProjectorKind::Low).unwrap();
        let high = apply_projector(&u, k, mu, ProjectorKind::High).unwrap();
        assert!(low.sub(&u).unwrap().max_abs() < 1e-12);
        assert!(high.max_abs() < 1e-12);
        let high_spec = projector_spectrum(&u, k, mu, ProjectorKind::High).unwrap();
        for (idx, v) in high_spec.iter().enumerate() {
            if u.frequency_sq(idx) <= mu * k * k {
                assert_eq!(*v, Complex64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn plane_wave_above_cutoff_is_high() {
        let (l, k, mu) = (4.0, 5.0, 3.0);
        // |ζ| = 20π/4 ≈ 15.7 ≥ √6·5 ≈ 12.2
        let zeta = 20.0 * PI / l;
        let u = GridFunction::from_fn(l, 128, 1, |x| Complex64::new(0.0, -zeta * x[0]).exp()).unwrap();
        let low_spec = projector_spectrum(&u, k, mu, ProjectorKind::Low).unwrap();
        for (idx, v) in low_spec.iter().enumerate() {
            if u.frequency_sq(idx) >= 2.0 * mu * k * k {
                assert_eq!(*v, Complex64::new(0.0, 0.0));
            }
        }
        let high = apply_projector(&u, k, mu, ProjectorKind::High).unwrap();
        let low = apply_projector(&u, k, mu, ProjectorKind::Low).unwrap();
        assert!(high.sub(&u).unwrap().max_abs() < 1e-12);
        assert!(low.max_abs() < 1e-12);
    }

    #[test]
    fn random_partition() {
        for d in [1, 2] {
            let u = random_grid(7 + d as u64, 3.0, if d == 1 { 256 } else { 64 }, d);
            let lo = apply_projector(&u, 4.0, 3.0, ProjectorKind::Low).unwrap();
            let hi = apply_projector(&u, 4.0, 3.0, ProjectorKind::High).unwrap();
            let defect = lo.add(&hi).unwrap().sub(&u).unwrap().max_abs();
            assert!(defect <= 1e-12 * u.max_abs());
        }
    }

    #[test]
    fn low_projector_twice_is_chi_squared() {
        let u = random_grid(3, 3.0, 128, 1);
        let (k, mu) = (6.0, 3.0);
        let once = apply_projector(&u, k, mu, ProjectorKind::Low).unwrap();
        let twice = projector_spectrum(&once, k, mu, ProjectorKind::Low).unwrap();
        let chi = make_smooth_cutoff(mu).unwrap();
        let spec = u.spectrum();
        for (idx, (t, s)) in twice.iter().zip(&spec).enumerate() {
            let c = chi.eval(u.frequency_sq(idx) / (k * k));
            let expected = s * c * c;
            assert!((t - expected).norm() <= 1e-12 * (1.0 + s.norm()));
            if c == 0.0 {
                assert_eq!(*t, Complex64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn decompose_requires_room_for_phi() {
        let u = GridFunction::zeros(2.5, 64, 1).unwrap();
        assert!(matches!(decompose(&u, 1.0, 5.0, 3.0, 1.0), Err(Error::BoxTooSmall { .. })));
    }

    #[test]
    fn decompose_zero_and_linearity() {
        let l = 3.25;
        let z = GridFunction::zeros(l, 256, 1).unwrap();
        let dz = decompose(&z, 1.0, 5.0, 3.0, 1.0).unwrap();
        assert_eq!(dz.u_low.max_abs(), 0.0);
        assert_eq!(dz.u_high.max_abs(), 0.0);

        let a = random_grid(11, l, 256, 1);
        let b = random_grid(12, l, 256, 1);
        let s = a.add(&b).unwrap();
        let (da, db, ds) = (
            decompose(&a, 1.0, 5.0, 3.0, 1.0).unwrap(),
            decompose(&b, 1.0, 5.0, 3.0, 1.0).unwrap(),
            decompose(&s, 1.0, 5.0, 3.0, 1.0).unwrap(),
        );
        assert!(da.u_low.add(&db.u_low).unwrap().sub(&ds.u_low).unwrap().max_abs() < 1e-12);
        assert!(da.u_high.add(&db.u_high).unwrap().sub(&ds.u_high).unwrap().max_abs() < 1e-12);
        assert!(ds.partition_defect() < 1e-12);
    }

    #[test]
    fn plane_wave_decomposition_has_negligible_high_part() {
        // Oracle: leakage of φ·e^{ikx} past √μ·k measured from the FFT of φ itself.
        let (r, k, mu) = (1.0, 160.0, 3.0);
        let l = 4.0;
        let n = required_points(l, k, mu);
        let u = GridFunction::from_fn(l, n, 1, |x| Complex64::new(0.0, k * x[0]).exp()).unwrap();
        let dec = decompose(&u, 1.0, k, mu, r).unwrap();
        let phi = GridFunction::from_fn(l, n, 1, |x| Complex64::new(spatial_cutoff_phi(x, r), 0.0)).unwrap();
        let phi_spec = phi.spectrum();
        // φ̂ mass beyond |ζ| ≥ (√μ − 1)k bounds the high part of φ·e^{ikx}.
        let cut = (mu.sqrt() - 1.0) * k;
        let tail: f64 = phi_spec
            .iter()
            .enumerate()
            .filter(|(i, _)| phi.frequency_sq(*i).sqrt() >= cut)
            .map(|(_, v)| v.norm_sqr())
            .sum::<f64>();
        let tail = (tail * phi.spacing() / n as f64).sqrt();
        let high = dec.u_high.l2_norm_ball(r);
        let whole = dec.phi_u.l2_norm();
        assert!(high <= tail + 1e-12 * whole);
        assert!(high <= 1e-8 * whole, "high = {high:e}, whole = {whole:e}");
    }

    #[test]
    fn sobolev_norm_examples() {
        let u = random_grid(5, 2.0, 128, 1);
        let h0 = semiclassical_sobolev_norm(&u, 0.0, 0.3).unwrap();
        assert!((h0 - u.l2_norm()).abs() <= 1e-12 * h0);

        let zeta = 6.0 * PI / 2.0;
        let hbar = 0.1;
        let w = GridFunction::from_fn(2.0, 64, 1, |x| Complex64::new(0.0, zeta * x[0]).exp()).unwrap();
        let h1 = semiclassical_sobolev_norm(&w, 1.0, hbar).unwrap();
        let expected = w.l2_norm() * (1.0 + (hbar * zeta).powi(2)).sqrt();
        assert!((h1 - expected).abs() <= 1e-12 * expected);
        assert!(semiclassical_sobolev_norm(&w, 1.0, 0.0).is_err());
    }

    #[test]
    fn h1k_examples() {
        let (l, n, r, k) = (3.0, 256, 1.0, 4.0 * PI / 3.0);
        let c = GridFunction::from_fn(l, n, 1, |_| Complex64::new(2.0, 0.0)).unwrap();
        let m = c.ball_measure(r);
        assert!((h1k_norm(&c, k, r).unwrap() - k * 2.0 * m.sqrt()).abs() < 1e-10);

        let w = GridFunction::from_fn(l, n, 1, |x| Complex64::new(0.0, k * x[0]).exp()).unwrap();
        let v = h1k_norm(&w, k, r).unwrap();
        assert!((v - k * 2f64.sqrt() * m.sqrt()).abs() < 1e-9 * v);
        assert!(v >= k * w.l2_norm_ball(r));
    }

    #[test]
    fn resolution_rule() {
        let n = required_points(3.1, 80.0, 3.0);
        assert!(PI * n as f64 / (2.0 * 3.1) >= 4.0 * 6f64.sqrt() * 80.0);
        assert!(n.is_power_of_two());
    }
}
