#![allow(dead_code)]

use helmholtz_hp::dtn::DtnOperator;
use helmholtz_hp::fem::{assemble, build_space, h1k_error, load_l2, reference_h1k_norm, solve, Reference, SpaceKind};
use helmholtz_hp::symbol::CoefficientField;
use helmholtz_hp::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_complex(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// `u(x) = Σ c_j x^j` with complex coefficients.
#[derive(Debug, Clone)]
pub struct Polynomial(pub Vec<Complex64>);

impl Polynomial {
    pub fn random(degree: usize, rng: &mut ChaCha8Rng) -> Self {
        Self((0..=degree).map(|_| random_complex(rng)).collect())
    }

    pub fn value(&self, x: f64) -> Complex64 {
        self.0.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * x + c)
    }

    pub fn derivative(&self) -> Self {
        Self(self.0.iter().enumerate().skip(1).map(|(j, c)| c * j as f64).collect())
    }
}

impl Reference for Polynomial {
    fn eval(&self, x: f64) -> (Complex64, Complex64) {
        (self.value(x), self.derivative().value(x))
    }
    fn second(&self, x: f64) -> Complex64 {
        self.derivative().derivative().value(x)
    }
    fn quadrature_degree(&self) -> usize {
        self.0.len()
    }
}

/// Relative `H¹_k` error of the Galerkin solution for the 1D constant-coefficient problem
/// whose exact solution is `u`: the load is `−u'' − k²u` plus the boundary residuals
/// `±u'(±R) − d·u(±R)` that `u` leaves in the DtN condition.
pub fn manufactured_interval(u: &Polynomial, k: f64, h: f64, p: usize) -> f64 {
    let r = 1.0;
    let coeffs = CoefficientField::constant(1).unwrap();
    let space = build_space(r, h, p, SpaceKind::Interval).unwrap();
    let op = DtnOperator::new(k, r, 1).unwrap();
    let system = assemble(&coeffs, k, &space, Some(&op), None).unwrap();
    let (d1, d2) = (u.derivative(), u.derivative().derivative());
    let f = |x: f64| -d2.value(x) - k * k * u.value(x);
    let mut load = load_l2(&f, &space);
    let d = op.eigenvalue(0);
    load[0] += -d1.value(-r) - d * u.value(-r);
    let last = space.dof_count() - 1;
    load[last] += d1.value(r) - d * u.value(r);
    let sol = solve(&system, &load).unwrap();
    h1k_error(&space, &sol.coefficients, u, k, None) / reference_h1k_norm(&space, u, k, None)
}

/// Radial mode `m = 0` on the unit disk: load `−u'' − u'/r − k²u` weighted by `r`, plus
/// `R(u'(R) − d₀u(R))` on the boundary dof.
pub fn manufactured_radial(u: &Polynomial, k: f64, h: f64, p: usize) -> f64 {
    let r = 1.0;
    let coeffs = CoefficientField::constant(2).unwrap();
    let space = build_space(r, h, p, SpaceKind::Radial).unwrap();
    let op = DtnOperator::new(k, r, 2).unwrap();
    let system = assemble(&coeffs, k, &space, Some(&op), Some(0)).unwrap();
    let (d1, d2) = (u.derivative(), u.derivative().derivative());
    // u'(r)/r stays polynomial when u has no linear term.
    assert_eq!(u.0.get(1).map_or(0.0, |c| c.norm()), 0.0);
    let f = |x: f64| {
        let du_over_r = Polynomial(d1.0.iter().skip(1).copied().collect()).value(x);
        -d2.value(x) - du_over_r - k * k * u.value(x)
    };
    let mut load = load_l2(&f, &space);
    let last = space.dof_count() - 1;
    load[last] += r * (d1.value(r) - op.eigenvalue(0) * u.value(r));
    let sol = solve(&system, &load).unwrap();
    h1k_error(&space, &sol.coefficients, u, k, Some(0)) / reference_h1k_norm(&space, u, k, Some(0))
}
