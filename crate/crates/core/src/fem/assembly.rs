use num_complex::Complex64;
use rayon::prelude::*;

use super::band::BandMatrix;
use super::basis::shape_functions;
use super::quadrature::gauss_legendre;
use super::space::{HpSpace, SpaceKind, MAX_DEGREE};
use crate::dtn::{bessel_j, bessel_j_prime, DtnOperator};
use crate::error::{invalid, Result};
use crate::symbol::CoefficientField;

const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Quadrature points per element for degree `p`.
pub fn quadrature_points(p: usize) -> usize {
    p + 4
}

/// Element matrices of the four volume forms.
struct Local {
    stiff: Vec<f64>,
    mass_n: Vec<f64>,
    mass: Vec<f64>,
    gram: Vec<f64>,
}

/// Matrices of `a(u, v) = ∫(a u'v̄' + a m²/r² u v̄ − k² n u v̄) w − ⟨DtN γu, γv⟩` on a space.
///
/// Entry `(i, j)` of every matrix is the form evaluated at `(φ_j, φ_i)`, so
/// `a(u, v) = vᴴ(K − k²M_n − D)u`. The weight `w` is 1 on intervals and `r` on radial spaces.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub stiffness: BandMatrix,
    pub mass_n: BandMatrix,
    /// Unweighted `L²` mass.
    pub mass: BandMatrix,
    /// `H¹_k` Gram matrix `∫(u'v̄' + m²/r² u v̄ + k² u v̄) w`.
    pub gram: BandMatrix,
    pub dtn: BandMatrix,
    pub k: f64,
    pub mode: Option<i64>,
    pub space: HpSpace,
    pub coefficients: CoefficientField,
    constrained: Vec<usize>,
}

impl AssembledSystem {
    /// `K − k²M_n − D` with constrained dofs replaced by identity rows.
    pub fn system_matrix(&self) -> BandMatrix {
        let k2 = Complex64::new(self.k * self.k, 0.0);
        let mut a = BandMatrix::combine(&[(ONE, &self.stiffness), (-k2, &self.mass_n), (-ONE, &self.dtn)])
            .expect("matrices share a size");
        for &c in &self.constrained {
            a.constrain(c, ONE);
        }
        a
    }

    /// `a(u, v)`.
    pub fn bilinear(&self, u: &[Complex64], v: &[Complex64]) -> Complex64 {
        self.system_matrix().form(v, u)
    }

    pub fn constrained_dofs(&self) -> &[usize] {
        &self.constrained
    }

    /// Sets constrained entries of a vector to zero.
    pub fn apply_constraints(&self, v: &mut [Complex64]) {
        for &c in &self.constrained {
            v[c] = Complex64::new(0.0, 0.0);
        }
    }
}

fn weight(kind: SpaceKind, x: f64) -> f64 {
    match kind {
        SpaceKind::Interval => 1.0,
        SpaceKind::Radial => x,
    }
}

fn local_matrices(space: &HpSpace, e: usize, k: f64, m2: f64, a: &dyn Fn(f64) -> f64, n: &dyn Fn(f64) -> f64) -> Local {
    let p = space.degree;
    let sz = (p + 1) * (p + 1);
    let mut out = Local { stiff: vec![0.0; sz], mass_n: vec![0.0; sz], mass: vec![0.0; sz], gram: vec![0.0; sz] };
    let (xq, wq) = gauss_legendre(quadrature_points(p));
    let (l, r) = space.mesh.element(e);
    let half = 0.5 * (r - l);
    let mut v = [0.0; MAX_DEGREE + 1];
    let mut d = [0.0; MAX_DEGREE + 1];
    for (xi, wi) in xq.iter().zip(&wq) {
        let x = l + half * (xi + 1.0);
        shape_functions(p, *xi, &mut v, &mut d);
        let w = wi * half * weight(space.kind(), x);
        let (av, nv) = (a(x), n(x));
        let pot = if m2 > 0.0 { m2 / (x * x) } else { 0.0 };
        for i in 0..=p {
            let di = d[i] / half;
            for j in 0..=p {
                let dj = d[j] / half;
                let vv = v[i] * v[j] * w;
                let dd = di * dj * w;
                let idx = i * (p + 1) + j;
                out.stiff[idx] += av * (dd + pot * vv);
                out.mass_n[idx] += nv * vv;
                out.mass[idx] += vv;
                out.gram[idx] += dd + (pot + k * k) * vv;
            }
        }
    }
    out
}

fn scatter(space: &HpSpace, locals: &[Local], pick: impl Fn(&Local) -> &Vec<f64>) -> BandMatrix {
    let p = space.degree;
    let mut m = BandMatrix::zeros(space.dof_count(), p);
    for (e, loc) in locals.iter().enumerate() {
        let vals = pick(loc);
        for i in 0..=p {
            for j in 0..=p {
                let v = vals[i * (p + 1) + j];
                if v != 0.0 {
                    m.add(space.global_dof(e, i), space.global_dof(e, j), Complex64::new(v, 0.0));
                }
            }
        }
    }
    m
}

fn all_locals(space: &HpSpace, k: f64, mode: Option<i64>, coeffs: Option<&CoefficientField>) -> Vec<Local> {
    let m2 = mode.map_or(0.0, |m| (m * m) as f64);
    let a = |x: f64| coeffs.map_or(1.0, |c| c.a_line(x));
    let n = |x: f64| coeffs.map_or(1.0, |c| c.n_line(x));
    (0..space.mesh.elements()).into_par_iter().map(|e| local_matrices(space, e, k, m2, &a, &n)).collect()
}

/// `H¹_k` Gram matrix of a space (mode `m` adds `m²/r²`); constrained dofs become identity rows.
pub fn gram_matrix(space: &HpSpace, k: f64, mode: Option<i64>) -> Result<BandMatrix> {
    if !(k > 0.0) {
        return invalid(format!("k must be positive, got {k}"));
    }
    let locals = all_locals(space, k, mode, None);
    let mut g = scatter(space, &locals, |l| &l.gram);
    for c in space.constrained_dofs(mode) {
        g.constrain(c, ONE);
    }
    Ok(g)
}

/// Assembles all matrices of the sesquilinear form. `dtn = None` drops the boundary term.
pub fn assemble(
    coeffs: &CoefficientField,
    k: f64,
    space: &HpSpace,
    dtn: Option<&DtnOperator>,
    mode_m: Option<i64>,
) -> Result<AssembledSystem> {
    if !(k > 0.0) {
        return invalid(format!("k must be positive, got {k}"));
    }
    match space.kind() {
        SpaceKind::Interval => {
            if coeffs.dimension != 1 {
                return invalid("interval spaces need 1D coefficients");
            }
        }
        SpaceKind::Radial => {
            if coeffs.dimension != 2 || !coeffs.radial_symmetric {
                return invalid("radial spaces need radially symmetric 2D coefficients");
            }
            if mode_m.is_none() {
                return invalid("radial assembly needs an angular mode");
            }
        }
    }
    if let Some(op) = dtn {
        let expected_dim = if space.kind() == SpaceKind::Interval { 1 } else { 2 };
        if op.dimension != expected_dim || (op.k - k).abs() > 1e-14 * k || (op.radius - space.radius()).abs() > 1e-12 {
            return invalid("DtN operator does not match k, R or the dimension");
        }
    }
    let spacing = space.mesh.h / quadrature_points(space.degree) as f64;
    if coeffs.feature_length.is_finite() && coeffs.feature_length < 2.0 * spacing {
        log::warn!(
            "coefficient features of length {} are under-resolved by quadrature spacing {spacing}",
            coeffs.feature_length
        );
    }
    let locals = all_locals(space, k, mode_m, Some(coeffs));
    let mut stiffness = scatter(space, &locals, |l| &l.stiff);
    let mut mass_n = scatter(space, &locals, |l| &l.mass_n);
    let mut mass = scatter(space, &locals, |l| &l.mass);
    let mut gram = scatter(space, &locals, |l| &l.gram);
    let mut dtn_m = BandMatrix::zeros(space.dof_count(), space.degree);
    if let Some(op) = dtn {
        match space.kind() {
            SpaceKind::Interval => {
                for b in space.boundary_dofs() {
                    dtn_m.add(b, b, op.eigenvalue(0));
                }
            }
            SpaceKind::Radial => {
                let b = space.dof_count() - 1;
                dtn_m.add(b, b, op.eigenvalue(mode_m.unwrap_or(0)) * space.radius());
            }
        }
    }
    let constrained = space.constrained_dofs(mode_m);
    for &c in &constrained {
        stiffness.constrain(c, ONE);
        mass_n.constrain(c, Complex64::new(0.0, 0.0));
        mass.constrain(c, ONE);
        gram.constrain(c, ONE);
        dtn_m.constrain(c, Complex64::new(0.0, 0.0));
    }
    Ok(AssembledSystem {
        stiffness,
        mass_n,
        mass,
        gram,
        dtn: dtn_m,
        k,
        mode: mode_m,
        space: space.clone(),
        coefficients: coeffs.clone(),
        constrained,
    })
}

/// `F_i = ∫ f φ_i w` with quadrature split at `breaks` (points where `f` is not smooth).
pub fn load_l2_piecewise(f: &(dyn Fn(f64) -> Complex64 + Sync), breaks: &[f64], space: &HpSpace) -> Vec<Complex64> {
    let p = space.degree;
    let (xq, wq) = gauss_legendre(p + 12);
    let locals: Vec<Vec<Complex64>> = (0..space.mesh.elements())
        .into_par_iter()
        .map(|e| {
            let (l, r) = space.mesh.element(e);
            let mut cuts = vec![l];
            cuts.extend(breaks.iter().copied().filter(|b| *b > l && *b < r));
            cuts.push(r);
            let half = 0.5 * (r - l);
            let mut v = [0.0; MAX_DEGREE + 1];
            let mut d = [0.0; MAX_DEGREE + 1];
            let mut loc = vec![Complex64::new(0.0, 0.0); p + 1];
            for seg in cuts.windows(2) {
                let sh = 0.5 * (seg[1] - seg[0]);
                for (t, wt) in xq.iter().zip(&wq) {
                    let x = seg[0] + sh * (t + 1.0);
                    let xi = (x - l) / half - 1.0;
                    shape_functions(p, xi, &mut v, &mut d);
                    let fx = f(x) * (wt * sh * weight(space.kind(), x));
                    for j in 0..=p {
                        loc[j] += fx * v[j];
                    }
                }
            }
            loc
        })
        .collect();
    let mut out = vec![Complex64::new(0.0, 0.0); space.dof_count()];
    for (e, loc) in locals.iter().enumerate() {
        for (j, v) in loc.iter().enumerate() {
            out[space.global_dof(e, j)] += v;
        }
    }
    out
}

/// `F_i = ∫ f φ_i w` for smooth `f`.
pub fn load_l2(f: &(dyn Fn(f64) -> Complex64 + Sync), space: &HpSpace) -> Vec<Complex64> {
    load_l2_piecewise(f, &[], space)
}

/// Boundary functional `∫_{∂B_R}(∂_n u^I − DtN γu^I) γv̄` of the plane wave `u^I = e^{ik x·a}`.
///
/// Intervals take `direction = [±1]`; radial mode `m` takes a unit vector and uses the
/// Jacobi–Anger coefficient `i^{|m|} J_{|m|}(kr) e^{−imθ_a}`.
pub fn load_planewave(
    direction: &[f64],
    k: f64,
    space: &HpSpace,
    dtn: &DtnOperator,
    mode: Option<i64>,
) -> Result<Vec<Complex64>> {
    let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return invalid("plane-wave direction must be a unit vector");
    }
    let r = space.radius();
    let mut out = vec![Complex64::new(0.0, 0.0); space.dof_count()];
    let ik = Complex64::new(0.0, k);
    match space.kind() {
        SpaceKind::Interval => {
            if direction.len() != 1 {
                return invalid("1D plane waves take a direction of length 1");
            }
            let a = direction[0];
            let d = dtn.eigenvalue(0);
            // outward normal −1 at x = −R and +1 at x = R
            let left = Complex64::new(0.0, -k * a * r).exp();
            let right = Complex64::new(0.0, k * a * r).exp();
            out[0] = -ik * a * left - d * left;
            let last = space.dof_count() - 1;
            out[last] = ik * a * right - d * right;
        }
        SpaceKind::Radial => {
            if direction.len() != 2 {
                return invalid("2D plane waves take a direction of length 2");
            }
            let m = mode.ok_or_else(|| crate::Error::InvalidArgument("radial plane wave needs a mode".into()))?;
            let theta = direction[1].atan2(direction[0]);
            let am = m.unsigned_abs() as usize;
            let x = k * r;
            let coef = Complex64::new(0.0, 1.0).powu(am as u32) * Complex64::new(0.0, -(m as f64) * theta).exp();
            let value = r * (k * bessel_j_prime(am, x)? - dtn.eigenvalue(m) * bessel_j(am, x)?) * coef;
            let last = space.dof_count() - 1;
            out[last] = value;
        }
    }
    Ok(out)
}
