//! Structural properties of the assembled discretisation.

mod common;

use helmholtz_hp::dtn::DtnOperator;
use helmholtz_hp::fem::{
    assemble, best_approximation, build_space, h1k_error, load_l2_piecewise, solve, IndicatorReference, SpaceKind,
    SystemSolver,
};
use helmholtz_hp::symbol::{garding_constants, CoefficientField, PRESET_NAMES};
use helmholtz_hp::Complex64;
use proptest::prelude::*;

use common::{manufactured_interval, manufactured_radial, random_complex, rng, Polynomial};

fn interval_system(preset: &str, k: f64, h: f64, p: usize) -> helmholtz_hp::fem::AssembledSystem {
    let coeffs = CoefficientField::preset(preset, 1).unwrap();
    let space = build_space(1.0, h, p, SpaceKind::Interval).unwrap();
    let op = DtnOperator::new(k, 1.0, 1).unwrap();
    assemble(&coeffs, k, &space, Some(&op), None).unwrap()
}

fn radial_system(preset: &str, k: f64, h: f64, p: usize, m: i64) -> helmholtz_hp::fem::AssembledSystem {
    let coeffs = CoefficientField::preset(preset, 2).unwrap();
    let space = build_space(1.0, h, p, SpaceKind::Radial).unwrap();
    let op = DtnOperator::new(k, 1.0, 2).unwrap();
    assemble(&coeffs, k, &space, Some(&op), Some(m)).unwrap()
}

fn quadratic(m: &helmholtz_hp::fem::BandMatrix, v: &[Complex64]) -> f64 {
    m.form(v, v).re
}

#[test]
fn volume_matrices_are_hermitian() {
    for preset in PRESET_NAMES {
        for sys in [interval_system(preset, 15.0, 0.2, 5), radial_system(preset, 15.0, 0.2, 5, 3)] {
            for (name, m) in [("K", &sys.stiffness), ("M_n", &sys.mass_n), ("M", &sys.mass), ("G", &sys.gram)] {
                let defect = m.hermitian_defect();
                assert!(defect <= 1e-13 * m.norm1(), "{preset} {name}: {defect:e}");
            }
        }
    }
}

#[test]
fn polynomial_solutions_are_reproduced() {
    let mut r = rng(11);
    for p in 1..=8 {
        let u = Polynomial::random(p, &mut r);
        let err = manufactured_interval(&u, 7.5 * p as f64, 0.25, p);
        assert!(err <= 1e-10, "interval p={p}: {err:e}");
    }
    for p in 3..=8 {
        let mut u = Polynomial::random(p, &mut r);
        u.0[1] = Complex64::new(0.0, 0.0);
        let err = manufactured_radial(&u, 4.0 * p as f64, 0.25, p);
        assert!(err <= 1e-10, "radial p={p}: {err:e}");
    }
}

#[test]
fn adjoint_solve_transposes_the_forward_solve() {
    let mut r = rng(12);
    for sys in [interval_system("nontrapping-bump", 12.0, 0.25, 4), radial_system("trapping-well", 12.0, 0.1, 6, 4)] {
        let solver = SystemSolver::new(&sys).unwrap();
        let n = sys.space.dof_count();
        let mut f: Vec<Complex64> = (0..n).map(|_| random_complex(&mut r)).collect();
        let mut g: Vec<Complex64> = (0..n).map(|_| random_complex(&mut r)).collect();
        sys.apply_constraints(&mut f);
        sys.apply_constraints(&mut g);
        let u = solver.solve(&f).unwrap();
        let z = solver.solve_adjoint(&g).unwrap();
        let lhs: Complex64 = z.iter().zip(&f).map(|(a, b)| a.conj() * b).sum();
        let rhs: Complex64 = g.iter().zip(&u).map(|(a, b)| a.conj() * b).sum();
        assert!((lhs - rhs).norm() <= 1e-10 * lhs.norm().max(1.0), "{lhs} vs {rhs}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// `Re a(v, v) ≥ A_min‖v‖²_{H¹_k} − 2k²(n_max + A_min)‖v‖²_{L²}`.
    #[test]
    fn garding_inequality(preset in 0usize..3, k in 1.0f64..60.0, p in 1usize..7, radial in any::<bool>(), seed in any::<u64>()) {
        let name = PRESET_NAMES[preset];
        let sys = if radial { radial_system(name, k, 0.1, p, (seed % 7) as i64) } else { interval_system(name, k, 0.1, p) };
        let mut r = rng(seed);
        let mut v: Vec<Complex64> = (0..sys.space.dof_count()).map(|_| random_complex(&mut r)).collect();
        sys.apply_constraints(&mut v);
        let a = sys.system_matrix().form(&v, &v).re;
        let (alpha, cv) = garding_constants(&sys.coefficients, k).unwrap();
        let lower = alpha * quadratic(&sys.gram, &v) - cv * quadratic(&sys.mass, &v);
        prop_assert!(a >= lower - 1e-10 * a.abs().max(lower.abs()), "a = {a}, bound {lower}");
    }

    /// The Galerkin error can never beat the `H¹_k` best approximation.
    #[test]
    fn galerkin_error_dominates_best_approximation(k in 2.0f64..60.0, p in 1usize..7, resolution in 0.2f64..1.5) {
        let h = (resolution * p as f64 / k).min(0.5);
        let a = 0.25;
        let sys = interval_system("constant", k, h, p);
        let f = move |x: f64| if x.abs() <= a { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
        let sol = solve(&sys, &load_l2_piecewise(&f, &[-a, a], &sys.space)).unwrap();
        let reference = IndicatorReference { k, half_width: a };
        let err = h1k_error(&sys.space, &sol.coefficients, &reference, k, None);
        let (_, best) = best_approximation(&reference, &sys.space, k, None).unwrap();
        prop_assert!(err / best >= 1.0 - 1e-8, "qo = {}", err / best);
    }
}
