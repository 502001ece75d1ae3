use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::split::cutoff::plateau;

/// Scalar coefficient profile evaluated at a position.
pub type Profile = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Names of the built-in coefficient presets.
pub const PRESET_NAMES: [&str; 3] = ["constant", "nontrapping-bump", "trapping-well"];

/// Isotropic coefficient field `A(x) = a(x)·I`, `n(x)`, with `A = I`, `n = 1` outside
/// `B_{support_radius}`.
#[derive(Clone)]
pub struct CoefficientField {
    name: String,
    a: Profile,
    n: Profile,
    pub a_min: f64,
    pub a_max: f64,
    pub n_min: f64,
    pub n_max: f64,
    pub support_radius: f64,
    pub dimension: usize,
    pub radial_symmetric: bool,
    /// Smallest length scale over which the coefficients vary.
    pub feature_length: f64,
}

impl fmt::Debug for CoefficientField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientField")
            .field("name", &self.name)
            .field("a", &(self.a_min, self.a_max))
            .field("n", &(self.n_min, self.n_max))
            .field("support_radius", &self.support_radius)
            .field("dimension", &self.dimension)
            .finish()
    }
}

/// Bounds of a field as stored alongside its profiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldBounds {
    pub a_min: f64,
    pub a_max: f64,
    pub n_min: f64,
    pub n_max: f64,
}

impl CoefficientField {
    /// Builds a field from profiles and declared bounds, then validates the bounds by sampling.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        dimension: usize,
        radial_symmetric: bool,
        support_radius: f64,
        feature_length: f64,
        a: Profile,
        n: Profile,
        bounds: FieldBounds,
    ) -> Result<Self> {
        if dimension != 1 && dimension != 2 {
            return invalid(format!("dimension must be 1 or 2, got {dimension}"));
        }
        if dimension == 2 && !radial_symmetric {
            return invalid("two-dimensional fields must be radially symmetric");
        }
        if !(support_radius > 0.0) {
            return invalid("support radius must be positive");
        }
        let FieldBounds { a_min, a_max, n_min, n_max } = bounds;
        if !(a_min > 0.0 && a_min <= a_max && n_min > 0.0 && n_min <= n_max) {
            return invalid(format!("inconsistent bounds {bounds:?}"));
        }
        let field = CoefficientField {
            name: name.into(),
            a,
            n,
            a_min,
            a_max,
            n_min,
            n_max,
            support_radius,
            dimension,
            radial_symmetric,
            feature_length,
        };
        field.validate(10_000)?;
        Ok(field)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn bounds(&self) -> FieldBounds {
        FieldBounds { a_min: self.a_min, a_max: self.a_max, n_min: self.n_min, n_max: self.n_max }
    }

    /// Scalar `a(x)` with `A(x) = a(x)·I`.
    #[inline]
    pub fn a_scalar(&self, x: &[f64]) -> f64 {
        (self.a)(x)
    }

    #[inline]
    pub fn n_eval(&self, x: &[f64]) -> f64 {
        (self.n)(x)
    }

    /// `A(x)` as a row-major `d×d` matrix.
    pub fn a_eval(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dimension;
        let s = self.a_scalar(x);
        let mut m = vec![0.0; d * d];
        for i in 0..d {
            m[i * d + i] = s;
        }
        m
    }

    /// Coefficients along the radial variable (2D fields) or the line coordinate (1D).
    pub fn a_line(&self, s: f64) -> f64 {
        match self.dimension {
            1 => self.a_scalar(&[s]),
            _ => self.a_scalar(&[s, 0.0]),
        }
    }

    pub fn n_line(&self, s: f64) -> f64 {
        match self.dimension {
            1 => self.n_eval(&[s]),
            _ => self.n_eval(&[s, 0.0]),
        }
    }

    /// Samples `samples` points over `[−2R₀, 2R₀]^d` and checks the declared bounds and
    /// that the deviation from `(I, 1)` vanishes outside the support.
    pub fn validate(&self, samples: usize) -> Result<()> {
        const TOL: f64 = 1e-12;
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_c0ef);
        let span = 2.0 * self.support_radius;
        let mut x = vec![0.0; self.dimension];
        for _ in 0..samples {
            for xi in x.iter_mut() {
                *xi = rng.gen_range(-span..=span);
            }
            let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let a = self.a_scalar(&x);
            let n = self.n_eval(&x);
            if !a.is_finite() || !n.is_finite() {
                return Err(Error::BoundsViolated(format!("non-finite coefficient at {x:?}")));
            }
            if a < self.a_min - TOL || a > self.a_max + TOL {
                return Err(Error::BoundsViolated(format!(
                    "a = {a} outside [{}, {}] at {x:?}",
                    self.a_min, self.a_max
                )));
            }
            if n < self.n_min - TOL || n > self.n_max + TOL {
                return Err(Error::BoundsViolated(format!(
                    "n = {n} outside [{}, {}] at {x:?}",
                    self.n_min, self.n_max
                )));
            }
            if r > self.support_radius && ((a - 1.0).abs() > TOL || (n - 1.0).abs() > TOL) {
                return Err(Error::BoundsViolated(format!(
                    "coefficients deviate from (I, 1) at |x| = {r} > support radius {}",
                    self.support_radius
                )));
            }
        }
        Ok(())
    }

    /// `A = I`, `n = 1`.
    pub fn constant(dimension: usize) -> Result<Self> {
        Self::new(
            "constant",
            dimension,
            true,
            0.5,
            f64::INFINITY,
            Arc::new(|_| 1.0),
            Arc::new(|_| 1.0),
            FieldBounds { a_min: 1.0, a_max: 1.0, n_min: 1.0, n_max: 1.0 },
        )
    }

    /// `A = I` and a centred smooth bump in `n` with peak value 2.
    pub fn nontrapping_bump(dimension: usize) -> Result<Self> {
        const FLAT: f64 = 0.2;
        const ZERO: f64 = 0.7;
        Self::new(
            "nontrapping-bump",
            dimension,
            true,
            ZERO,
            ZERO - FLAT,
            Arc::new(|_| 1.0),
            Arc::new(|x: &[f64]| 1.0 + plateau(norm(x), FLAT, ZERO)),
            FieldBounds { a_min: 1.0, a_max: 1.0, n_min: 1.0, n_max: 2.0 },
        )
    }

    /// `A = I` and `n` raised to `TRAP_PEAK` on an annulus around `|x| = 0.5`.
    ///
    /// `r²n(r)` has a strict local maximum at the outer edge of the annulus, so
    /// rays with angular momentum in the barrier window stay trapped (2D).
    pub fn trapping_well(dimension: usize) -> Result<Self> {
        const CENTRE: f64 = 0.5;
        const FLAT: f64 = 0.1;
        const ZERO: f64 = 0.25;
        Self::new(
            "trapping-well",
            dimension,
            true,
            CENTRE + ZERO,
            ZERO - FLAT,
            Arc::new(|_| 1.0),
            Arc::new(|x: &[f64]| 1.0 + (TRAP_PEAK - 1.0) * plateau((norm(x) - CENTRE).abs(), FLAT, ZERO)),
            FieldBounds { a_min: 1.0, a_max: 1.0, n_min: 1.0, n_max: TRAP_PEAK },
        )
    }

    pub fn preset(name: &str, dimension: usize) -> Result<Self> {
        match name {
            "constant" => Self::constant(dimension),
            "nontrapping-bump" => Self::nontrapping_bump(dimension),
            "trapping-well" => Self::trapping_well(dimension),
            other => invalid(format!(
                "unknown preset '{other}', expected one of {}",
                PRESET_NAMES.join(", ")
            )),
        }
    }

    /// Radially symmetric field from piecewise polynomials in `|x|`.
    ///
    /// Bounds are taken from `bounds` when given, otherwise measured on a dense radial grid.
    pub fn from_piecewise(
        dimension: usize,
        a: Option<PiecewisePolynomial>,
        n: Option<PiecewisePolynomial>,
        bounds: Option<FieldBounds>,
    ) -> Result<Self> {
        let support = a
            .iter()
            .chain(n.iter())
            .map(|p| p.support_end())
            .fold(0.0_f64, f64::max)
            .max(f64::EPSILON);
        let feature = a
            .iter()
            .chain(n.iter())
            .map(|p| p.min_piece_length())
            .fold(f64::INFINITY, f64::min);
        let a_prof: Profile = match a {
            Some(p) => Arc::new(move |x: &[f64]| p.eval(norm(x))),
            None => Arc::new(|_| 1.0),
        };
        let n_prof: Profile = match n {
            Some(p) => Arc::new(move |x: &[f64]| p.eval(norm(x))),
            None => Arc::new(|_| 1.0),
        };
        let bounds = match bounds {
            Some(b) => b,
            None => {
                let mut b = FieldBounds { a_min: 1.0, a_max: 1.0, n_min: 1.0, n_max: 1.0 };
                let steps = 100_000;
                for i in 0..=steps {
                    let r = support * i as f64 / steps as f64;
                    let pos = if dimension == 1 { vec![r] } else { vec![r, 0.0] };
                    let av = a_prof(&pos);
                    let nv = n_prof(&pos);
                    b.a_min = b.a_min.min(av);
                    b.a_max = b.a_max.max(av);
                    b.n_min = b.n_min.min(nv);
                    b.n_max = b.n_max.max(nv);
                }
                b
            }
        };
        Self::new("custom", dimension, true, support, feature, a_prof, n_prof, bounds)
    }
}

/// Peak refractive index of the trapping-well preset.
pub const TRAP_PEAK: f64 = 4.0;

#[inline]
fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Piecewise polynomial in the radius: on `[knots[i], knots[i+1])` the value is
/// `Σ_j coeffs[i][j]·(r − knots[i])^j`; beyond the last knot the value is 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewisePolynomial {
    pub knots: Vec<f64>,
    pub coeffs: Vec<Vec<f64>>,
}

impl PiecewisePolynomial {
    pub fn new(knots: Vec<f64>, coeffs: Vec<Vec<f64>>) -> Result<Self> {
        if knots.len() < 2 || coeffs.len() != knots.len() - 1 {
            return invalid("piecewise polynomial needs n+1 knots for n pieces (n ≥ 1)");
        }
        if knots[0] != 0.0 {
            return invalid("first knot must be 0");
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return invalid("knots must be strictly increasing");
        }
        if coeffs.iter().any(|c| c.is_empty()) {
            return invalid("every piece needs at least one coefficient");
        }
        Ok(Self { knots, coeffs })
    }

    pub fn eval(&self, r: f64) -> f64 {
        let last = *self.knots.last().unwrap();
        if r >= last {
            return 1.0;
        }
        let i = match self.knots.partition_point(|&k| k <= r) {
            0 => 0,
            j => j - 1,
        };
        let t = r - self.knots[i];
        self.coeffs[i].iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }

    pub fn support_end(&self) -> f64 {
        *self.knots.last().unwrap()
    }

    pub fn min_piece_length(&self) -> f64 {
        self.knots.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate_in_both_dimensions() {
        for name in PRESET_NAMES {
            for d in [1, 2] {
                let c = CoefficientField::preset(name, d).unwrap();
                assert_eq!(c.dimension, d);
                c.validate(10_000).unwrap();
            }
        }
        assert!(CoefficientField::preset("nope", 1).is_err());
    }

    #[test]
    fn bump_peak_and_support() {
        let c = CoefficientField::nontrapping_bump(2).unwrap();
        assert_eq!(c.n_eval(&[0.0, 0.1]), 2.0);
        assert_eq!(c.n_eval(&[0.7, 0.1]), 1.0);
        assert_eq!(c.n_max, 2.0);
    }

    #[test]
    fn bump_is_nontrapping_in_2d() {
        // r²n(r) strictly increasing means no circular trapped rays.
        let c = CoefficientField::nontrapping_bump(2).unwrap();
        let mut prev = 0.0;
        for i in 1..=2000 {
            let r = i as f64 * 1e-3;
            let v = r * r * c.n_line(r);
            assert!(v > prev, "r²n decreases at r = {r}");
            prev = v;
        }
    }

    #[test]
    fn trapping_well_has_a_barrier() {
        let c = CoefficientField::trapping_well(2).unwrap();
        let h = |r: f64| r * r * c.n_line(r);
        assert!(h(0.6) > h(0.75));
        assert!(h(0.75) < h(1.0));
    }

    #[test]
    fn lying_bounds_are_rejected() {
        let res = CoefficientField::new(
            "bad",
            1,
            true,
            0.5,
            1.0,
            Arc::new(|_| 1.0),
            Arc::new(|x: &[f64]| 1.0 + plateau(x[0].abs(), 0.1, 0.4)),
            FieldBounds { a_min: 1.0, a_max: 1.0, n_min: 1.0, n_max: 1.5 },
        );
        assert!(matches!(res, Err(Error::BoundsViolated(_))));
    }

    #[test]
    fn deviation_outside_support_is_rejected() {
        let res = CoefficientField::new(
            "leaky",
            1,
            true,
            0.2,
            1.0,
            Arc::new(|_| 1.0),
            Arc::new(|x: &[f64]| 1.0 + plateau(x[0].abs(), 0.1, 0.4)),
            FieldBounds { a_min: 1.0, a_max: 1.0, n_min: 1.0, n_max: 2.0 },
        );
        assert!(matches!(res, Err(Error::BoundsViolated(_))));
    }

    #[test]
    fn piecewise_profile() {
        let p = PiecewisePolynomial::new(vec![0.0, 0.3, 0.6], vec![vec![2.0], vec![2.0, 0.0, -100.0 / 9.0]])
            .unwrap();
        assert_eq!(p.eval(0.1), 2.0);
        assert!((p.eval(0.6 - 1e-12) - 1.0).abs() < 1e-9);
        assert_eq!(p.eval(0.9), 1.0);
        let field = CoefficientField::from_piecewise(1, None, Some(p), None).unwrap();
        assert_eq!(field.n_max, 2.0);
        assert!((field.n_min - 1.0).abs() < 1e-9);
        assert_eq!(field.support_radius, 0.6);
        assert!(PiecewisePolynomial::new(vec![0.0, 0.3, 0.2], vec![vec![1.0], vec![1.0]]).is_err());
    }
}
