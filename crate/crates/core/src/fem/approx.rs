use num_complex::Complex64;
use rayon::prelude::*;

use super::assembly::gram_matrix;
use super::band::BandLu;
use super::basis::shape_functions;
use super::quadrature::gauss_legendre;
use super::solution::DiscreteSolution;
use super::space::{HpSpace, SpaceKind, MAX_DEGREE};
use crate::error::{invalid, Error, Result};

/// A function known with its derivatives on the discretisation domain.
pub trait Reference: Sync {
    /// `(u(x), u'(x))`.
    fn eval(&self, x: f64) -> (Complex64, Complex64);
    /// `u''(x)` where defined.
    fn second(&self, x: f64) -> Complex64;
    /// Points where `u''` may jump; quadrature is split there.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
    /// Polynomial degree to integrate exactly per smooth piece (0 when not polynomial).
    fn quadrature_degree(&self) -> usize {
        0
    }
}

impl Reference for DiscreteSolution {
    fn eval(&self, x: f64) -> (Complex64, Complex64) {
        self.space.evaluate(&self.coefficients, x)
    }
    fn second(&self, x: f64) -> Complex64 {
        self.space.evaluate_second(&self.coefficients, x)
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.space.mesh.vertices().to_vec()
    }
    fn quadrature_degree(&self) -> usize {
        self.space.degree
    }
}

/// Sub-segments of element `e` cut at the sorted `breaks`.
fn segments(space: &HpSpace, e: usize, breaks: &[f64]) -> Vec<(f64, f64)> {
    let (l, r) = space.mesh.element(e);
    let tol = 1e-12 * (r - l);
    let lo = breaks.partition_point(|b| *b <= l + tol);
    let hi = breaks.partition_point(|b| *b < r - tol);
    let mut cuts = vec![l];
    cuts.extend_from_slice(&breaks[lo..hi]);
    cuts.push(r);
    cuts.windows(2).map(|w| (w[0], w[1])).collect()
}

fn sorted_breaks(reference: &dyn Reference) -> Vec<f64> {
    let mut b = reference.breakpoints();
    b.sort_by(|x, y| x.total_cmp(y));
    b
}

fn weight(kind: SpaceKind, x: f64) -> f64 {
    match kind {
        SpaceKind::Interval => 1.0,
        SpaceKind::Radial => x,
    }
}

/// `‖u_ref − u_N‖_{H¹_k}` by quadrature on the mesh of `space`, split at reference breakpoints.
pub fn h1k_error(space: &HpSpace, coeffs: &[Complex64], reference: &dyn Reference, k: f64, mode: Option<i64>) -> f64 {
    let breaks = sorted_breaks(reference);
    let nq = space.degree.max(reference.quadrature_degree()) + 12;
    let (xq, wq) = gauss_legendre(nq);
    let m2 = mode.map_or(0.0, |m| (m * m) as f64);
    let total: f64 = (0..space.mesh.elements())
        .into_par_iter()
        .map(|e| {
            let mut acc = 0.0;
            for (a, b) in segments(space, e, &breaks) {
                let half = 0.5 * (b - a);
                for (t, w) in xq.iter().zip(&wq) {
                    let x = a + half * (t + 1.0);
                    let (u, du) = reference.eval(x);
                    let (v, dv) = space.evaluate(coeffs, x);
                    let pot = if m2 > 0.0 { m2 / (x * x) } else { 0.0 };
                    acc += w * half * weight(space.kind(), x) * ((du - dv).norm_sqr() + (k * k + pot) * (u - v).norm_sqr());
                }
            }
            acc
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    total.sqrt()
}

/// `‖u_ref‖_{H¹_k}` over the domain of `space`.
pub fn reference_h1k_norm(space: &HpSpace, reference: &dyn Reference, k: f64, mode: Option<i64>) -> f64 {
    let zero = vec![Complex64::new(0.0, 0.0); space.dof_count()];
    h1k_error(space, &zero, reference, k, mode)
}

/// `‖u_ref''‖_{L²}` over the domain of `space` (interval spaces).
pub fn reference_h2_seminorm(space: &HpSpace, reference: &dyn Reference) -> f64 {
    let breaks = sorted_breaks(reference);
    let (xq, wq) = gauss_legendre(space.degree.max(reference.quadrature_degree()) + 12);
    let total: f64 = (0..space.mesh.elements())
        .into_par_iter()
        .map(|e| {
            let mut acc = 0.0;
            for (a, b) in segments(space, e, &breaks) {
                let half = 0.5 * (b - a);
                for (t, w) in xq.iter().zip(&wq) {
                    let x = a + half * (t + 1.0);
                    acc += w * half * weight(space.kind(), x) * reference.second(x).norm_sqr();
                }
            }
            acc
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    total.sqrt()
}

/// `H¹_k`-orthogonal projection of `u_ref` onto `space` and the norm of the remainder.
pub fn best_approximation(
    reference: &dyn Reference,
    space: &HpSpace,
    k: f64,
    mode: Option<i64>,
) -> Result<(Vec<Complex64>, f64)> {
    if !(k > 0.0) {
        return invalid(format!("k must be positive, got {k}"));
    }
    let p = space.degree;
    let breaks = sorted_breaks(reference);
    let (xq, wq) = gauss_legendre(p.max(reference.quadrature_degree()) + 12);
    let m2 = mode.map_or(0.0, |m| (m * m) as f64);
    let locals: Vec<Vec<Complex64>> = (0..space.mesh.elements())
        .into_par_iter()
        .map(|e| {
            let (l, r) = space.mesh.element(e);
            let eh = 0.5 * (r - l);
            let mut v = [0.0; MAX_DEGREE + 1];
            let mut d = [0.0; MAX_DEGREE + 1];
            let mut loc = vec![Complex64::new(0.0, 0.0); p + 1];
            for (a, b) in segments(space, e, &breaks) {
                let half = 0.5 * (b - a);
                for (t, w) in xq.iter().zip(&wq) {
                    let x = a + half * (t + 1.0);
                    let xi = (x - l) / eh - 1.0;
                    shape_functions(p, xi, &mut v, &mut d);
                    let (u, du) = reference.eval(x);
                    let pot = if m2 > 0.0 { m2 / (x * x) } else { 0.0 };
                    let ww = w * half * weight(space.kind(), x);
                    for j in 0..=p {
                        loc[j] += (du * (d[j] / eh) + u * ((k * k + pot) * v[j])) * ww;
                    }
                }
            }
            loc
        })
        .collect();
    let mut rhs = vec![Complex64::new(0.0, 0.0); space.dof_count()];
    for (e, loc) in locals.iter().enumerate() {
        for (j, val) in loc.iter().enumerate() {
            rhs[space.global_dof(e, j)] += val;
        }
    }
    for c in space.constrained_dofs(mode) {
        rhs[c] = Complex64::new(0.0, 0.0);
    }
    let g = gram_matrix(space, k, mode)?;
    let lu = BandLu::factor(&g).map_err(|e| Error::Numeric(format!("Gram matrix: {e}")))?;
    let c = lu.solve(&rhs)?;
    let err = h1k_error(space, &c, reference, k, mode);
    Ok((c, err))
}

/// `min_{v ∈ V_N} ‖u_ref − v‖_{H¹_k}`.
pub fn best_approximation_error(reference: &dyn Reference, space: &HpSpace, k: f64) -> Result<f64> {
    Ok(best_approximation(reference, space, k, None)?.1)
}

/// Outgoing solution of `u'' + k²u = −f` on the line for data supported in `[a, b]`:
/// `u(x) = (i/2k) ∫ e^{ik|x−y|} f(y) dy`.
pub struct GreenReference<F: Fn(f64) -> Complex64 + Sync> {
    k: f64,
    f: F,
    nodes: Vec<f64>,
    /// `∫_a^{t_j} e^{−iky} f`.
    left: Vec<Complex64>,
    /// `∫_{t_j}^b e^{iky} f`.
    right: Vec<Complex64>,
    breaks: Vec<f64>,
    rule: (Vec<f64>, Vec<f64>),
}

impl<F: Fn(f64) -> Complex64 + Sync> GreenReference<F> {
    /// `support = (a, b)`; `breaks` lists points where `f` is not smooth.
    pub fn new(k: f64, f: F, support: (f64, f64), breaks: &[f64]) -> Result<Self> {
        let (a, b) = support;
        if !(k > 0.0) || !(b > a) {
            return invalid("Green reference needs k > 0 and a nonempty support");
        }
        let mut cuts: Vec<f64> = breaks.iter().copied().filter(|x| *x > a && *x < b).collect();
        cuts.push(a);
        cuts.push(b);
        cuts.sort_by(|x, y| x.total_cmp(y));
        cuts.dedup();
        let panel = (1.0 / k).min(0.05);
        let mut nodes = vec![a];
        for w in cuts.windows(2) {
            let pieces = ((w[1] - w[0]) / panel).ceil().max(1.0) as usize;
            for i in 1..=pieces {
                nodes.push(w[0] + (w[1] - w[0]) * i as f64 / pieces as f64);
            }
        }
        let rule = gauss_legendre(24);
        let mut me = Self { k, f, nodes, left: Vec::new(), right: Vec::new(), breaks: cuts, rule };
        let n = me.nodes.len();
        let mut left = vec![Complex64::new(0.0, 0.0); n];
        let mut right = vec![Complex64::new(0.0, 0.0); n];
        for j in 1..n {
            left[j] = left[j - 1] + me.panel_integral(me.nodes[j - 1], me.nodes[j], -1.0);
        }
        for j in (0..n - 1).rev() {
            right[j] = right[j + 1] + me.panel_integral(me.nodes[j], me.nodes[j + 1], 1.0);
        }
        me.left = left;
        me.right = right;
        Ok(me)
    }

    fn panel_integral(&self, a: f64, b: f64, sign: f64) -> Complex64 {
        let half = 0.5 * (b - a);
        let (x, w) = &self.rule;
        x.iter()
            .zip(w)
            .map(|(t, wt)| {
                let y = a + half * (t + 1.0);
                (self.f)(y) * Complex64::new(0.0, sign * self.k * y).exp() * (wt * half)
            })
            .sum()
    }

    fn partial(&self, x: f64) -> (Complex64, Complex64) {
        let n = self.nodes.len();
        if x <= self.nodes[0] {
            return (Complex64::new(0.0, 0.0), self.right[0]);
        }
        if x >= self.nodes[n - 1] {
            return (self.left[n - 1], Complex64::new(0.0, 0.0));
        }
        let j = self.nodes.partition_point(|t| *t <= x) - 1;
        let l = self.left[j] + self.panel_integral(self.nodes[j], x, -1.0);
        let r = self.right[j + 1] + self.panel_integral(x, self.nodes[j + 1], 1.0);
        (l, r)
    }
}

impl<F: Fn(f64) -> Complex64 + Sync> Reference for GreenReference<F> {
    fn eval(&self, x: f64) -> (Complex64, Complex64) {
        let k = self.k;
        let (l, r) = self.partial(x);
        let ep = Complex64::new(0.0, k * x).exp();
        let em = ep.conj();
        let u = Complex64::new(0.0, 0.5 / k) * (ep * l + em * r);
        let du = -0.5 * (ep * l - em * r);
        (u, du)
    }
    fn second(&self, x: f64) -> Complex64 {
        -self.k * self.k * self.eval(x).0 - (self.f)(x)
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.breaks.clone()
    }
}

/// Exact outgoing solution for `f = 1` on `[−a, a]`.
#[derive(Debug, Clone, Copy)]
pub struct IndicatorReference {
    pub k: f64,
    pub half_width: f64,
}

impl Reference for IndicatorReference {
    fn eval(&self, x: f64) -> (Complex64, Complex64) {
        let (k, a) = (self.k, self.half_width);
        let k2 = k * k;
        if x.abs() < a {
            let e1 = Complex64::new(0.0, k * (a + x)).exp();
            let e2 = Complex64::new(0.0, k * (a - x)).exp();
            let u = (e1 + e2 - 2.0) / (2.0 * k2);
            let du = Complex64::new(0.0, k) * (e1 - e2) / (2.0 * k2);
            (u, du)
        } else {
            let s = x.signum();
            let e = Complex64::new(0.0, k * x.abs()).exp();
            let u = Complex64::new(0.0, (k * a).sin() / k2) * e;
            (u, Complex64::new(0.0, k * s) * u)
        }
    }
    fn second(&self, x: f64) -> Complex64 {
        let f = if x.abs() < self.half_width { 1.0 } else { 0.0 };
        -self.k * self.k * self.eval(x).0 - f
    }
    fn breakpoints(&self) -> Vec<f64> {
        vec![-self.half_width, self.half_width]
    }
}

/// `e^{ikax}` in 1D.
#[derive(Debug, Clone, Copy)]
pub struct PlaneWaveReference {
    pub k: f64,
    pub direction: f64,
}

impl Reference for PlaneWaveReference {
    fn eval(&self, x: f64) -> (Complex64, Complex64) {
        let ka = self.k * self.direction;
        let u = Complex64::new(0.0, ka * x).exp();
        (u, Complex64::new(0.0, ka) * u)
    }
    fn second(&self, x: f64) -> Complex64 {
        -(self.k * self.direction).powi(2) * self.eval(x).0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::space::build_space;

    #[test]
    fn green_quadrature_matches_indicator_formula() {
        let (k, a) = (17.0, 0.25);
        let exact = IndicatorReference { k, half_width: a };
        let green = GreenReference::new(k, |_| Complex64::new(1.0, 0.0), (-a, a), &[]).unwrap();
        for i in 0..=60 {
            let x = -1.0 + i as f64 / 30.0;
            let (u, du) = exact.eval(x);
            let (v, dv) = green.eval(x);
            assert!((u - v).norm() < 1e-13 && (du - dv).norm() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn indicator_solves_the_equation() {
        let r = IndicatorReference { k: 9.0, half_width: 0.25 };
        let h = 1e-4;
        for x in [-0.8, -0.1, 0.05, 0.2, 0.6] {
            let fd = (r.eval(x + h).0 - 2.0 * r.eval(x).0 + r.eval(x - h).0) / (h * h);
            assert!((fd - r.second(x)).norm() < 1e-5, "x={x}");
            let (u, du) = r.eval(x);
            let fd1 = (r.eval(x + h).0 - r.eval(x - h).0) / (2.0 * h);
            assert!((fd1 - du).norm() < 1e-6);
            let _ = u;
        }
    }

    #[test]
    fn members_are_reproduced() {
        let space = build_space(1.0, 0.25, 3, SpaceKind::Interval).unwrap();
        let c: Vec<Complex64> = (0..space.dof_count()).map(|i| Complex64::new(i as f64, -(i as f64).sqrt())).collect();
        let sol = DiscreteSolution {
            space: space.clone(),
            coefficients: c,
            k: 5.0,
            kind: crate::fem::ProblemKind::L2Source,
            mode: None,
        };
        let err = best_approximation_error(&sol, &space, 5.0).unwrap();
        assert!(err < 1e-10 * reference_h1k_norm(&space, &sol, 5.0, None));
    }
}
