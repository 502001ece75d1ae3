use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::band::BandMatrix;
use super::basis::{shape_functions, shape_second_derivatives};
use super::quadrature::gauss_legendre;
use crate::error::{invalid, Error, Result};

/// Largest supported polynomial degree.
pub const MAX_DEGREE: usize = 32;
/// Largest admissible ratio of longest to shortest element.
pub const MAX_QUASI_UNIFORMITY: f64 = 4.0;

/// Geometry of the discretised domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceKind {
    /// `[−R, R]` in 1D.
    Interval,
    /// `[0, R]`, the radial variable of an angular mode on the disk.
    Radial,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    vertices: Vec<f64>,
    pub h: f64,
    pub quasi_uniformity_ratio: f64,
}

impl Mesh1D {
    pub fn new(vertices: Vec<f64>) -> Result<Self> {
        if vertices.len() < 2 {
            return invalid("a mesh needs at least two vertices");
        }
        if vertices.windows(2).any(|w| !(w[1] > w[0])) {
            return invalid("mesh vertices must be strictly increasing");
        }
        let lengths = vertices.windows(2).map(|w| w[1] - w[0]);
        let h = lengths.clone().fold(0.0, f64::max);
        let hmin = lengths.fold(f64::INFINITY, f64::min);
        let ratio = h / hmin;
        if ratio > MAX_QUASI_UNIFORMITY {
            return invalid(format!("mesh is not quasi-uniform: ratio {ratio} > {MAX_QUASI_UNIFORMITY}"));
        }
        Ok(Self { vertices, h, quasi_uniformity_ratio: ratio })
    }

    pub fn uniform(a: f64, b: f64, elements: usize) -> Result<Self> {
        if elements == 0 || !(b > a) {
            return invalid("uniform mesh needs a nonempty interval and at least one element");
        }
        let len = b - a;
        let mut v: Vec<f64> = (0..=elements).map(|i| a + len * i as f64 / elements as f64).collect();
        v[elements] = b;
        Self::new(v)
    }

    pub fn vertices(&self) -> &[f64] {
        &self.vertices
    }

    pub fn elements(&self) -> usize {
        self.vertices.len() - 1
    }

    /// `(left, right)` end points of element `e`.
    pub fn element(&self, e: usize) -> (f64, f64) {
        (self.vertices[e], self.vertices[e + 1])
    }

    /// Element containing `x` (clamped to the mesh).
    pub fn locate(&self, x: f64) -> usize {
        let idx = self.vertices.partition_point(|v| *v <= x);
        idx.saturating_sub(1).min(self.elements() - 1)
    }
}

/// Continuous piecewise polynomials of uniform degree on a [`Mesh1D`].
///
/// Global numbering per element `e`: left vertex `e·p`, bubbles `e·p+1 … e·p+p−1`,
/// right vertex `(e+1)·p`, so every matrix has half-bandwidth `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct HpSpace {
    pub mesh: Mesh1D,
    pub degree: usize,
    kind: SpaceKind,
    dof_count: usize,
}

/// Uniform mesh of `⌈2R/h⌉` (interval) or `⌈R/h⌉` (radial) elements with degree `p`.
pub fn build_space(radius: f64, h: f64, p: usize, kind: SpaceKind) -> Result<HpSpace> {
    if !(radius > 0.0) || !(h > 0.0) || !(h < radius) {
        return invalid(format!("need 0 < h < R, got h={h}, R={radius}"));
    }
    let (a, len) = match kind {
        SpaceKind::Interval => (-radius, 2.0 * radius),
        SpaceKind::Radial => (0.0, radius),
    };
    let elements = (len / h - 1e-9).ceil().max(1.0) as usize;
    HpSpace::new(Mesh1D::uniform(a, a + len, elements)?, p, kind)
}

impl HpSpace {
    pub fn new(mesh: Mesh1D, degree: usize, kind: SpaceKind) -> Result<Self> {
        if degree > MAX_DEGREE {
            return Err(Error::UnsupportedDegree(degree));
        }
        if degree == 0 {
            return invalid("polynomial degree must be at least 1");
        }
        if kind == SpaceKind::Radial && mesh.vertices[0] != 0.0 {
            return invalid("radial meshes start at the origin");
        }
        let dof_count = mesh.elements() * degree + 1;
        Ok(Self { mesh, degree, kind, dof_count })
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn dof_count(&self) -> usize {
        self.dof_count
    }

    pub fn radius(&self) -> f64 {
        *self.mesh.vertices.last().expect("mesh has vertices")
    }

    /// Dofs carrying the trace on `∂B_R`.
    pub fn boundary_dofs(&self) -> Vec<usize> {
        match self.kind {
            SpaceKind::Interval => vec![0, self.dof_count - 1],
            SpaceKind::Radial => vec![self.dof_count - 1],
        }
    }

    /// Dofs fixed to zero: the origin for radial modes `m ≠ 0`.
    pub fn constrained_dofs(&self, mode: Option<i64>) -> Vec<usize> {
        match (self.kind, mode) {
            (SpaceKind::Radial, Some(m)) if m != 0 => vec![0],
            _ => Vec::new(),
        }
    }

    /// Global index of local shape function `j` on element `e`.
    #[inline]
    pub fn global_dof(&self, e: usize, j: usize) -> usize {
        let p = self.degree;
        match j {
            0 => e * p,
            1 => (e + 1) * p,
            _ => e * p + j - 1,
        }
    }

    /// Each element split into `factor` equal parts, degree `degree`.
    pub fn refined(&self, factor: usize, degree: usize) -> Result<Self> {
        if factor == 0 {
            return invalid("refinement factor must be positive");
        }
        let mut v = Vec::with_capacity(self.mesh.elements() * factor + 1);
        for e in 0..self.mesh.elements() {
            let (a, b) = self.mesh.element(e);
            for s in 0..factor {
                v.push(a + (b - a) * s as f64 / factor as f64);
            }
        }
        v.push(self.radius());
        Self::new(Mesh1D::new(v)?, degree, self.kind)
    }

    /// Same degree with `points` made mesh vertices: a vertex within `0.35·h_e` of a point is
    /// moved onto it, otherwise the element is split there.
    pub fn fitted(&self, points: &[f64]) -> Result<Self> {
        let mut v = self.mesh.vertices().to_vec();
        let (lo, hi) = (v[0], v[v.len() - 1]);
        for &x in points {
            if !(x > lo && x < hi) {
                continue;
            }
            let i = v.partition_point(|t| *t < x);
            let (a, b) = (v[i - 1], v[i]);
            let len = b - a;
            if x - a <= 0.35 * len && i - 1 > 0 {
                v[i - 1] = x;
            } else if b - x <= 0.35 * len && i + 1 < v.len() {
                v[i] = x;
            } else if x != a && x != b {
                v.insert(i, x);
            }
        }
        Self::new(Mesh1D::new(v)?, self.degree, self.kind)
    }

    /// `(u(x), u'(x))` of the expansion `coeffs` at a point of the mesh.
    pub fn evaluate(&self, coeffs: &[Complex64], x: f64) -> (Complex64, Complex64) {
        let e = self.mesh.locate(x);
        let (a, b) = self.mesh.element(e);
        let xi = 2.0 * (x - a) / (b - a) - 1.0;
        let p = self.degree;
        let mut v = [0.0; MAX_DEGREE + 1];
        let mut d = [0.0; MAX_DEGREE + 1];
        shape_functions(p, xi, &mut v, &mut d);
        let jac = 2.0 / (b - a);
        let mut u = Complex64::new(0.0, 0.0);
        let mut du = Complex64::new(0.0, 0.0);
        for j in 0..=p {
            let c = coeffs[self.global_dof(e, j)];
            u += c * v[j];
            du += c * (d[j] * jac);
        }
        (u, du)
    }

    /// `u''(x)` of the expansion `coeffs`, taken inside the element containing `x`.
    pub fn evaluate_second(&self, coeffs: &[Complex64], x: f64) -> Complex64 {
        let e = self.mesh.locate(x);
        let (a, b) = self.mesh.element(e);
        let xi = 2.0 * (x - a) / (b - a) - 1.0;
        let mut dd = [0.0; MAX_DEGREE + 1];
        shape_second_derivatives(self.degree, xi, &mut dd);
        let jac2 = (2.0 / (b - a)).powi(2);
        (0..=self.degree).map(|j| coeffs[self.global_dof(e, j)] * (dd[j] * jac2)).sum()
    }

    /// Coefficients of the nodal-plus-bubble interpolant of a degree-`p` polynomial given
    /// per element, used to check that spaces reproduce their members.
    pub fn interpolate(&self, f: impl Fn(f64) -> (f64, f64)) -> Vec<Complex64> {
        let p = self.degree;
        let (xq, wq) = gauss_legendre(p + 2);
        let mut c = vec![Complex64::new(0.0, 0.0); self.dof_count];
        let mut v = [0.0; MAX_DEGREE + 1];
        let mut d = [0.0; MAX_DEGREE + 1];
        for e in 0..self.mesh.elements() {
            let (a, b) = self.mesh.element(e);
            c[self.global_dof(e, 0)] = Complex64::new(f(a).0, 0.0);
            c[self.global_dof(e, 1)] = Complex64::new(f(b).0, 0.0);
            let half = 0.5 * (b - a);
            for (xi, w) in xq.iter().zip(&wq) {
                shape_functions(p, *xi, &mut v, &mut d);
                let dg = f(a + half * (xi + 1.0)).1 * half;
                for j in 2..=p {
                    c[self.global_dof(e, j)] += Complex64::new(w * dg * d[j], 0.0);
                }
            }
        }
        c
    }
}

/// Real sparse matrix embedding a coarse space into a nested fine space.
#[derive(Debug, Clone)]
pub struct Prolongation {
    pub rows: usize,
    pub cols: usize,
    /// Column `j`: `(fine dof, value)` pairs.
    columns: Vec<Vec<(usize, f64)>>,
}

impl Prolongation {
    /// `E` with `E c` the fine-space coefficients of the coarse function `c`.
    pub fn new(coarse: &HpSpace, fine: &HpSpace) -> Result<Self> {
        if fine.degree < coarse.degree || coarse.kind != fine.kind {
            return invalid("fine space must have at least the coarse degree and the same kind");
        }
        let tol = 1e-12 * coarse.radius().max(1.0);
        let fv = fine.mesh.vertices();
        for &v in coarse.mesh.vertices() {
            let i = fv.partition_point(|x| *x < v - tol);
            if i >= fv.len() || (fv[i] - v).abs() > tol {
                return invalid("fine mesh does not contain every coarse vertex");
            }
        }
        let pc = coarse.degree;
        let pf = fine.degree;
        let (xq, wq) = gauss_legendre(pf + 1);
        let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); coarse.dof_count];
        let mut vc = [0.0; MAX_DEGREE + 1];
        let mut dc = [0.0; MAX_DEGREE + 1];
        let mut vf = [0.0; MAX_DEGREE + 1];
        let mut df = [0.0; MAX_DEGREE + 1];
        for fe in 0..fine.mesh.elements() {
            let (fa, fb) = fine.mesh.element(fe);
            let mid = 0.5 * (fa + fb);
            let ce = coarse.mesh.locate(mid);
            let (ca, cb) = coarse.mesh.element(ce);
            let to_coarse = |x: f64| 2.0 * (x - ca) / (cb - ca) - 1.0;
            // vertex values
            for (local, x) in [(0usize, fa), (1usize, fb)] {
                shape_functions(pc, to_coarse(x), &mut vc, &mut dc);
                let row = fine.global_dof(fe, local);
                for j in 0..=pc {
                    if vc[j].abs() > 1e-15 {
                        put(&mut columns[coarse.global_dof(ce, j)], row, vc[j]);
                    }
                }
            }
            // bubble coefficients c_i = ∫ g'(ξ) ψ_i'(ξ) dξ on the fine reference element
            let ratio = (fb - fa) / (cb - ca);
            for (xi, w) in xq.iter().zip(&wq) {
                let x = mid + 0.5 * (fb - fa) * xi;
                shape_functions(pc, to_coarse(x), &mut vc, &mut dc);
                shape_functions(pf, *xi, &mut vf, &mut df);
                for j in 0..=pc {
                    let g = dc[j] * ratio;
                    if g == 0.0 {
                        continue;
                    }
                    for i in 2..=pf {
                        let row = fine.global_dof(fe, i);
                        add(&mut columns[coarse.global_dof(ce, j)], row, w * g * df[i]);
                    }
                }
            }
        }
        for col in columns.iter_mut() {
            col.retain(|(_, v)| v.abs() > 1e-15);
            col.sort_by_key(|(r, _)| *r);
        }
        Ok(Self { rows: fine.dof_count, cols: coarse.dof_count, columns })
    }

    pub fn apply(&self, c: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.rows];
        for (j, col) in self.columns.iter().enumerate() {
            for &(r, v) in col {
                out[r] += c[j] * v;
            }
        }
        out
    }

    pub fn apply_transpose(&self, f: &[Complex64]) -> Vec<Complex64> {
        self.columns.iter().map(|col| col.iter().map(|&(r, v)| f[r] * v).sum()).collect()
    }

    /// Nonzero `(fine dof, value)` pairs of column `j`, sorted by row.
    pub fn column(&self, j: usize) -> &[(usize, f64)] {
        &self.columns[j]
    }

    /// `EᵀGE` for a fine-space matrix `G`, stored with the coarse bandwidth `bw`.
    pub fn galerkin(&self, g: &BandMatrix, bw: usize) -> BandMatrix {
        let mut out = BandMatrix::zeros(self.cols, bw);
        let mut dense = vec![Complex64::new(0.0, 0.0); self.rows];
        for j in 0..self.cols {
            for &(r, v) in &self.columns[j] {
                dense[r] = Complex64::new(v, 0.0);
            }
            let gj = g.matvec(&dense);
            for &(r, _) in &self.columns[j] {
                dense[r] = Complex64::new(0.0, 0.0);
            }
            let lo = j.saturating_sub(bw);
            let hi = (j + bw).min(self.cols - 1);
            for i in lo..=hi {
                let v: Complex64 = self.columns[i].iter().map(|&(r, e)| gj[r] * e).sum();
                out.set(i, j, v);
            }
        }
        out
    }
}

fn put(col: &mut Vec<(usize, f64)>, row: usize, v: f64) {
    match col.iter_mut().find(|(r, _)| *r == row) {
        Some(entry) => entry.1 = v,
        None => col.push((row, v)),
    }
}

fn add(col: &mut Vec<(usize, f64)>, row: usize, v: f64) {
    match col.iter_mut().find(|(r, _)| *r == row) {
        Some(entry) => entry.1 += v,
        None => col.push((row, v)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counting_examples() {
        let s = build_space(1.0, 0.5, 1, SpaceKind::Interval).unwrap();
        assert_eq!((s.mesh.elements(), s.dof_count()), (4, 5));
        let s = build_space(1.0, 0.5, 3, SpaceKind::Interval).unwrap();
        assert_eq!((s.mesh.elements(), s.dof_count()), (4, 13));
        let s = build_space(1.0, 0.1, 4, SpaceKind::Radial).unwrap();
        assert_eq!((s.mesh.elements(), s.dof_count()), (10, 41));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(build_space(1.0, 0.5, 33, SpaceKind::Interval), Err(Error::UnsupportedDegree(33))));
        assert!(build_space(1.0, 1.5, 2, SpaceKind::Interval).is_err());
        assert!(build_space(1.0, 0.0, 2, SpaceKind::Interval).is_err());
        assert!(Mesh1D::new(vec![0.0, 0.1, 1.0]).is_err());
        assert!(Mesh1D::new(vec![0.0, 0.5, 0.5, 1.0]).is_err());
    }

    #[test]
    fn interpolation_reproduces_polynomials() {
        let s = build_space(1.0, 0.3, 4, SpaceKind::Interval).unwrap();
        let f = |x: f64| (x.powi(4) - 2.0 * x.powi(3) + x, 4.0 * x.powi(3) - 6.0 * x * x + 1.0);
        let c = s.interpolate(f);
        for i in 0..=50 {
            let x = -1.0 + 2.0 * i as f64 / 50.0;
            let (u, du) = s.evaluate(&c, x);
            assert!((u.re - f(x).0).abs() < 1e-12 && (du.re - f(x).1).abs() < 1e-11);
        }
    }

    #[test]
    fn fitted_mesh_contains_points() {
        let s = build_space(1.0, 0.25, 3, SpaceKind::Interval).unwrap();
        // 0.26 snaps the vertex at 0.25, 0.125 splits its element, 1.0 and 2.0 are ignored.
        let f = s.fitted(&[0.26, 0.125, 1.0, 2.0]).unwrap();
        let v = f.mesh.vertices();
        assert_eq!(v.len(), 10);
        for x in [0.26, 0.125, -1.0, 1.0] {
            assert!(v.contains(&x), "{x} missing from {v:?}");
        }
        assert!(!v.contains(&0.25));
        assert_eq!(f.degree, 3);
    }

    #[test]
    fn galerkin_matches_dense_product() {
        let coarse = build_space(1.0, 0.5, 2, SpaceKind::Interval).unwrap();
        let fine = coarse.refined(2, 4).unwrap();
        let e = Prolongation::new(&coarse, &fine).unwrap();
        let (nf, nc) = (fine.dof_count(), coarse.dof_count());
        let bw = 6;
        let mut g = BandMatrix::zeros(nf, bw);
        for i in 0..nf {
            for j in i.saturating_sub(bw)..(i + bw + 1).min(nf) {
                g.set(i, j, Complex64::new((i + 2 * j) as f64 * 0.1, (i as f64 - j as f64).sin()));
            }
        }
        let mut ed = nalgebra::DMatrix::<Complex64>::zeros(nf, nc);
        for j in 0..nc {
            for &(r, v) in e.column(j) {
                ed[(r, j)] = Complex64::new(v, 0.0);
            }
        }
        let want = ed.transpose() * g.to_dense() * &ed;
        let got = e.galerkin(&g, nc).to_dense();
        assert!((want - got).norm() < 1e-12);
    }

    #[test]
    fn prolongation_preserves_functions() {
        let coarse = build_space(1.0, 0.25, 3, SpaceKind::Radial).unwrap();
        let fine = coarse.refined(4, 7).unwrap();
        let e = Prolongation::new(&coarse, &fine).unwrap();
        let c: Vec<Complex64> =
            (0..coarse.dof_count()).map(|i| Complex64::new((i as f64 * 0.7).sin(), (i as f64).cos())).collect();
        let cf = e.apply(&c);
        for i in 0..=40 {
            let x = i as f64 / 40.0;
            let (u, du) = coarse.evaluate(&c, x);
            let (v, dv) = fine.evaluate(&cf, x);
            assert!((u - v).norm() < 1e-12 && (du - dv).norm() < 1e-10);
        }
    }
}
