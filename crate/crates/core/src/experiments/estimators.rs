use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dtn::{mode_truncation, DtnOperator};
use crate::error::{invalid, Error, Result};
use crate::fem::{assemble, AssembledSystem, BandLu, BandMatrix, HpSpace, Prolongation, SpaceKind, SystemSolver};
use crate::symbol::CoefficientField;

/// Relative change of the Rayleigh quotient at which power iteration stops.
pub const POWER_TOL: f64 = 1e-4;
pub const POWER_MAX_ITER: usize = 200;
/// Largest `h·k/p` accepted for the space carrying the estimate.
pub const MAX_FINE_RESOLUTION: f64 = 0.5;

/// Operator-norm estimate from power iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Angular mode attaining the maximum (radial spaces).
    pub mode: Option<i64>,
}

impl NormEstimate {
    fn max(self, other: Self) -> Self {
        let mut best = if other.value > self.value { other } else { self };
        best.converged = self.converged && other.converged;
        best
    }
}

fn check_resolution(space: &HpSpace, k: f64) -> Result<()> {
    if !(k > 0.0) {
        return invalid(format!("k must be positive, got {k}"));
    }
    let ratio = space.mesh.h * k / space.degree as f64;
    if ratio > MAX_FINE_RESOLUTION + 1e-12 {
        return Err(Error::Precondition(format!(
            "fine space under-resolved: h·k/p = {ratio:.3} exceeds {MAX_FINE_RESOLUTION}"
        )));
    }
    Ok(())
}

fn random_start(n: usize, constrained: &[usize], rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    let mut v: Vec<Complex64> =
        (0..n).map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
    for &c in constrained {
        v[c] = Complex64::new(0.0, 0.0);
    }
    v
}

fn m_norm(mass: &BandMatrix, v: &[Complex64]) -> f64 {
    mass.form(v, v).re.max(0.0).sqrt()
}

/// Largest eigenvalue of `M⁻¹B` for Hermitian `B ⪰ 0`, given `step(f) = M⁻¹Bf`; returns its square root.
fn power_iteration(
    mass: &BandMatrix,
    mut f: Vec<Complex64>,
    step: impl Fn(&[Complex64]) -> Result<Vec<Complex64>>,
) -> Result<NormEstimate> {
    let norm = m_norm(mass, &f);
    if norm == 0.0 {
        return Ok(NormEstimate { value: 0.0, iterations: 0, converged: true, mode: None });
    }
    f.iter_mut().for_each(|v| *v /= norm);
    let mut previous = f64::NAN;
    for it in 1..=POWER_MAX_ITER {
        let g = step(&f)?;
        let lambda = mass.form(&f, &g).re.max(0.0);
        let gn = m_norm(mass, &g);
        if gn == 0.0 || lambda == 0.0 {
            return Ok(NormEstimate { value: 0.0, iterations: it, converged: true, mode: None });
        }
        if (lambda - previous).abs() <= POWER_TOL * lambda {
            return Ok(NormEstimate { value: lambda.sqrt(), iterations: it, converged: true, mode: None });
        }
        previous = lambda;
        f = g.into_iter().map(|v| v / gn).collect();
    }
    Ok(NormEstimate { value: previous.sqrt(), iterations: POWER_MAX_ITER, converged: false, mode: None })
}

fn seeded(seed: u64, k: f64, mode: Option<i64>) -> ChaCha8Rng {
    let salt = mode.map_or(0, |m| (m as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    ChaCha8Rng::seed_from_u64(seed ^ k.to_bits() ^ salt)
}

fn system_for(coeffs: &CoefficientField, k: f64, space: &HpSpace, mode: Option<i64>) -> Result<AssembledSystem> {
    let op = match space.kind() {
        SpaceKind::Interval => DtnOperator::new(k, space.radius(), 1)?,
        SpaceKind::Radial => DtnOperator::new(k, space.radius(), 2)?,
    };
    assemble(coeffs, k, space, Some(&op), mode)
}

/// Default angular modes scanned on radial spaces: `0..=M` with `M` the DtN truncation.
pub fn default_modes(k: f64, radius: f64) -> Vec<i64> {
    (0..=mode_truncation(k, radius) as i64).collect()
}

/// `C_sol` of one assembled system: `‖A⁻¹M‖` from `L²` to `H¹_k`.
pub fn csol_of_system(system: &AssembledSystem, seed: u64) -> Result<NormEstimate> {
    let solver = SystemSolver::new(system)?;
    let n = system.space.dof_count();
    let mut rng = seeded(seed, system.k, system.mode);
    let start = random_start(n, system.constrained_dofs(), &mut rng);
    let mut est = power_iteration(&system.mass, start, |f| {
        let u = solver.solve(&system.mass.matvec(f))?;
        solver.solve_adjoint(&system.gram.matvec(&u))
    })?;
    est.mode = system.mode;
    Ok(est)
}

/// Norm of the discrete solution operator `f ↦ u` from `L²(B_R)` to `H¹_k(B_R)`.
///
/// Power iteration on `A⁻ᴴGA⁻¹M` from a seeded random start. Radial spaces take the
/// maximum over [`default_modes`].
pub fn estimate_csol(coeffs: &CoefficientField, k: f64, fine_space: &HpSpace, seed: u64) -> Result<NormEstimate> {
    match fine_space.kind() {
        SpaceKind::Interval => {
            check_resolution(fine_space, k)?;
            csol_of_system(&system_for(coeffs, k, fine_space, None)?, seed)
        }
        SpaceKind::Radial => estimate_csol_modes(coeffs, k, fine_space, &default_modes(k, fine_space.radius()), seed),
    }
}

/// Maximum of the per-mode solution-operator norms over `modes` (radial spaces).
pub fn estimate_csol_modes(
    coeffs: &CoefficientField,
    k: f64,
    fine_space: &HpSpace,
    modes: &[i64],
    seed: u64,
) -> Result<NormEstimate> {
    if fine_space.kind() != SpaceKind::Radial {
        return invalid("mode scans need a radial space");
    }
    if modes.is_empty() {
        return invalid("mode list is empty");
    }
    check_resolution(fine_space, k)?;
    let mut best: Option<NormEstimate> = None;
    for &m in modes {
        let est = csol_of_system(&system_for(coeffs, k, fine_space, Some(m))?, seed)?;
        best = Some(match best {
            None => est,
            Some(b) => b.max(est),
        });
    }
    Ok(best.expect("modes is nonempty"))
}

/// `η(V_N)`: norm of `f ↦ (I − P_N)S*f` from `L²` to `H¹_k`, with `S*` the adjoint solve on
/// `fine_space` and `P_N` the `H¹_k`-orthogonal projection onto `space ⊆ fine_space`.
///
/// Power iteration on `A⁻¹G(I − EP)A⁻ᴴM`, where `E` is the prolongation and
/// `P = (EᵀGE)⁻¹EᵀG`. Radial spaces take the maximum over [`default_modes`].
pub fn estimate_eta(
    space: &HpSpace,
    coeffs: &CoefficientField,
    k: f64,
    fine_space: &HpSpace,
    seed: u64,
) -> Result<NormEstimate> {
    check_resolution(fine_space, k)?;
    let modes: Vec<Option<i64>> = match fine_space.kind() {
        SpaceKind::Interval => vec![None],
        SpaceKind::Radial => default_modes(k, fine_space.radius()).into_iter().map(Some).collect(),
    };
    let prolong = Prolongation::new(space, fine_space)?;
    let mut best: Option<NormEstimate> = None;
    for mode in modes {
        let est = eta_mode(space, coeffs, k, fine_space, &prolong, mode, seed)?;
        best = Some(match best {
            None => est,
            Some(b) => b.max(est),
        });
    }
    Ok(best.expect("at least one mode"))
}

fn eta_mode(
    space: &HpSpace,
    coeffs: &CoefficientField,
    k: f64,
    fine_space: &HpSpace,
    prolong: &Prolongation,
    mode: Option<i64>,
    seed: u64,
) -> Result<NormEstimate> {
    let system = system_for(coeffs, k, fine_space, mode)?;
    let solver = SystemSolver::new(&system)?;
    let coarse_fixed = space.constrained_dofs(mode);
    let mut gc = prolong.galerkin(&system.gram, space.degree);
    for &c in &coarse_fixed {
        gc.constrain(c, Complex64::new(1.0, 0.0));
    }
    let gc_lu = BandLu::factor(&gc)?;
    let residual = |w: &[Complex64]| -> Result<Vec<Complex64>> {
        let mut rhs = prolong.apply_transpose(&system.gram.matvec(w));
        for &c in &coarse_fixed {
            rhs[c] = Complex64::new(0.0, 0.0);
        }
        let coarse = gc_lu.solve(&rhs)?;
        let proj = prolong.apply(&coarse);
        Ok(w.iter().zip(&proj).map(|(a, b)| a - b).collect())
    };
    let mut rng = seeded(seed, k, mode);
    let start = random_start(fine_space.dof_count(), system.constrained_dofs(), &mut rng);
    let mut est = power_iteration(&system.mass, start, |f| {
        let w = solver.solve_adjoint(&system.mass.matvec(f))?;
        let r = residual(&w)?;
        solver.solve(&system.gram.matvec(&r))
    })?;
    est.mode = mode;
    Ok(est)
}
