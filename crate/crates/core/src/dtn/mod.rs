//! Dirichlet-to-Neumann map on `∂B_R` for the outgoing Helmholtz problem.
//!
//! In 1D the map is the impedance `ik` at both endpoints. In 2D it is diagonal in the
//! angular Fourier basis with eigenvalues `d_m = k H'_{|m|}(kR)/H_{|m|}(kR)`, `H = H^{(1)}`.

pub mod bessel;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

pub use bessel::{bessel_j, bessel_j_prime, bessel_jy, hankel1};

use crate::error::{invalid, Error, Result};
use crate::fem::{gram_matrix, BandLu, HpSpace, SpaceKind};

/// Tolerance on `Re d_m` in the passivity check.
pub const PASSIVITY_TOL: f64 = 1e-12;

/// Retained angular modes `M = ⌈kR⌉ + 16 + ⌈4(kR)^{1/3}⌉`.
pub fn mode_truncation(k: f64, radius: f64) -> usize {
    let x = k * radius;
    x.ceil() as usize + 16 + (4.0 * x.cbrt()).ceil() as usize
}

/// `k H'_{|m|}(kR)/H_{|m|}(kR)`.
pub fn dtn_eigenvalue(m: i64, k: f64, radius: f64) -> Result<Complex64> {
    Ok(*dtn_table(m.unsigned_abs() as usize, k, radius)?.last().expect("table has m+1 entries"))
}

/// `d_0, …, d_M` from the ratio recurrence `ρ_{m+1} = 1/(2m/x − ρ_m)`, `ρ_m = H_{m−1}/H_m`.
fn dtn_table(max_m: usize, k: f64, radius: f64) -> Result<Vec<Complex64>> {
    if !(k > 0.0) || !(radius > 0.0) {
        return invalid(format!("k and R must be positive, got k={k}, R={radius}"));
    }
    let x = k * radius;
    let h0 = hankel1(0, x)?;
    let h1 = hankel1(1, x)?;
    if h1.norm() == 0.0 || !h0.is_finite() || !h1.is_finite() {
        return Err(Error::Numeric(format!("Hankel values not representable at kR = {x}")));
    }
    let mut rho = h0 / h1;
    let mut out = Vec::with_capacity(max_m + 1);
    out.push(-k / rho);
    for m in 1..=max_m {
        out.push(k * (rho - m as f64 / x));
        rho = 1.0 / (2.0 * m as f64 / x - rho);
    }
    if let Some((m, d)) = out.iter().enumerate().find(|(_, d)| !d.is_finite()) {
        return Err(Error::Numeric(format!("d_{m} = {d} not finite at kR = {x}")));
    }
    Ok(out)
}

/// Modal DtN operator with its eigenvalue table.
#[derive(Debug, Clone, PartialEq)]
pub struct DtnOperator {
    pub k: f64,
    pub radius: f64,
    pub dimension: usize,
    /// `M`; zero in 1D.
    pub truncation: usize,
    /// `d_m` for `m = −M..=M` (2D) or `[ik]` (1D).
    pub eigenvalues: Vec<Complex64>,
}

impl DtnOperator {
    pub fn new(k: f64, radius: f64, dimension: usize) -> Result<Self> {
        match dimension {
            1 => Self::from_eigenvalues(k, radius, 1, vec![Complex64::new(0.0, k)]),
            2 => Self::with_truncation(k, radius, mode_truncation(k, radius)),
            d => invalid(format!("dimension must be 1 or 2, got {d}")),
        }
    }

    pub fn with_truncation(k: f64, radius: f64, truncation: usize) -> Result<Self> {
        let table = dtn_table(truncation, k, radius)?;
        let eigenvalues = (-(truncation as i64)..=truncation as i64)
            .map(|m| table[m.unsigned_abs() as usize])
            .collect();
        Ok(Self { k, radius, dimension: 2, truncation, eigenvalues })
    }

    /// Operator with prescribed eigenvalues, e.g. the zero map or test fixtures.
    pub fn from_eigenvalues(k: f64, radius: f64, dimension: usize, eigenvalues: Vec<Complex64>) -> Result<Self> {
        if !(k > 0.0) || !(radius > 0.0) {
            return invalid(format!("k and R must be positive, got k={k}, R={radius}"));
        }
        let truncation = match dimension {
            1 if eigenvalues.len() == 1 => 0,
            2 if eigenvalues.len() % 2 == 1 => eigenvalues.len() / 2,
            _ => return invalid("eigenvalue table does not match the dimension"),
        };
        Ok(Self { k, radius, dimension, truncation, eigenvalues })
    }

    /// `DtN ≡ 0` with the shape of `self`.
    pub fn zeroed(&self) -> Self {
        Self { eigenvalues: vec![Complex64::new(0.0, 0.0); self.eigenvalues.len()], ..self.clone() }
    }

    /// `d_m` (the single impedance in 1D); zero beyond the truncation.
    pub fn eigenvalue(&self, m: i64) -> Complex64 {
        if self.dimension == 1 {
            return self.eigenvalues[0];
        }
        if m.unsigned_abs() as usize > self.truncation {
            return Complex64::new(0.0, 0.0);
        }
        self.eigenvalues[(m + self.truncation as i64) as usize]
    }

    /// `m, Re d_m, Im d_m` rows.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Numeric(format!("csv: {e}"));
        w.write_record(["m", "re", "im"]).map_err(io)?;
        let first = -(self.truncation as i64);
        for (i, d) in self.eigenvalues.iter().enumerate() {
            w.write_record([(first + i as i64).to_string(), format!("{:.16e}", d.re), format!("{:.16e}", d.im)])
                .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Numeric(format!("csv: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::Numeric(e.to_string()))
    }
}

/// Neumann data of a trace: endpoint values `(u(−R), u(R))` in 1D, Fourier coefficients
/// for `m = −M..=M` in 2D.
pub fn apply_dtn(trace_modes: &[Complex64], op: &DtnOperator) -> Result<Vec<Complex64>> {
    let expected = if op.dimension == 1 { 2 } else { op.eigenvalues.len() };
    if trace_modes.len() != expected {
        return invalid(format!("trace has {} entries, operator expects {expected}", trace_modes.len()));
    }
    Ok(if op.dimension == 1 {
        trace_modes.iter().map(|t| op.eigenvalues[0] * t).collect()
    } else {
        trace_modes.iter().zip(&op.eigenvalues).map(|(t, d)| d * t).collect()
    })
}

/// `Re d_m ≤ 1e-12` for every retained mode.
pub fn passivity_check(op: &DtnOperator) -> bool {
    op.eigenvalues.iter().all(|d| d.re <= PASSIVITY_TOL)
}

/// Discrete norm of `(u, v) ↦ ⟨DtN γu, γv⟩` on `space` in the `H¹_k` geometry.
///
/// With `S` the boundary block of `G⁻¹` and `Λ` the boundary DtN matrix this equals
/// `σ_max(S^{1/2} Λ S^{1/2})`. Radial spaces take the maximum over angular modes.
pub fn estimate_cdtn1(op: &DtnOperator, space: &HpSpace) -> Result<f64> {
    match space.kind() {
        SpaceKind::Interval => {
            if op.dimension != 1 {
                return invalid("interval spaces need a 1D DtN operator");
            }
            let d = op.eigenvalues[0];
            boundary_norm(space, op.k, None, &[d, d])
        }
        SpaceKind::Radial => {
            if op.dimension != 2 {
                return invalid("radial spaces need a 2D DtN operator");
            }
            let mut best: f64 = 0.0;
            for m in 0..=op.truncation as i64 {
                let d = op.eigenvalue(m) * space.radius();
                best = best.max(boundary_norm(space, op.k, Some(m), &[d])?);
            }
            Ok(best)
        }
    }
}

fn boundary_norm(space: &HpSpace, k: f64, mode: Option<i64>, lambda: &[Complex64]) -> Result<f64> {
    if lambda.iter().all(|l| *l == Complex64::new(0.0, 0.0)) {
        return Ok(0.0);
    }
    let bdofs = space.boundary_dofs();
    let g = gram_matrix(space, k, mode)?;
    let lu = BandLu::factor(&g).map_err(|e| Error::Numeric(format!("Gram matrix not invertible: {e}")))?;
    let nb = bdofs.len();
    let mut s = DMatrix::<f64>::zeros(nb, nb);
    for (c, &dof) in bdofs.iter().enumerate() {
        let mut e = vec![Complex64::new(0.0, 0.0); space.dof_count()];
        e[dof] = Complex64::new(1.0, 0.0);
        let col = lu.solve(&e)?;
        for (r, &row) in bdofs.iter().enumerate() {
            s[(r, c)] = col[row].re;
        }
    }
    let s = (&s + s.transpose()) * 0.5;
    let eig = SymmetricEigen::new(s);
    if eig.eigenvalues.iter().any(|v| *v <= 0.0) {
        return Err(Error::Numeric("boundary block of the inverse Gram matrix is not positive".into()));
    }
    let root = &eig.eigenvectors
        * DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt))
        * eig.eigenvectors.transpose();
    let root_c = root.map(|v| Complex64::new(v, 0.0));
    let lam = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(lambda));
    let core = &root_c * lam * &root_c;
    Ok(core.singular_values().max())
}
