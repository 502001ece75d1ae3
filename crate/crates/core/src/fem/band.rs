use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Square complex matrix with entries only for `|i − j| ≤ bw`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    bw: usize,
    data: Vec<Complex64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self { n, bw, data: vec![ZERO; n * (2 * bw + 1)] }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn index(&self, i: usize, j: usize) -> Option<usize> {
        if i >= self.n || j >= self.n || i.abs_diff(j) > self.bw {
            return None;
        }
        Some(i * (2 * self.bw + 1) + j + self.bw - i)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.index(i, j).map_or(ZERO, |k| self.data[k])
    }

    /// Adds `v` at `(i, j)`; panics outside the band.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: Complex64) {
        let k = self.index(i, j).expect("entry outside band");
        self.data[k] += v;
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        let k = self.index(i, j).expect("entry outside band");
        self.data[k] = v;
    }

    /// Zeroes row and column `i` and puts `diag` on the diagonal.
    pub fn constrain(&mut self, i: usize, diag: Complex64) {
        let lo = i.saturating_sub(self.bw);
        let hi = (i + self.bw).min(self.n - 1);
        for j in lo..=hi {
            self.set(i, j, ZERO);
            self.set(j, i, ZERO);
        }
        self.set(i, i, diag);
    }

    fn cols(&self, i: usize) -> std::ops::RangeInclusive<usize> {
        i.saturating_sub(self.bw)..=(i + self.bw).min(self.n - 1)
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..self.n).map(|i| self.cols(i).map(|j| self.get(i, j) * x[j]).sum()).collect()
    }

    /// `Aᴴx`.
    pub fn matvec_adjoint(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![ZERO; self.n];
        for i in 0..self.n {
            for j in self.cols(i) {
                y[j] += self.get(i, j).conj() * x[i];
            }
        }
        y
    }

    /// `yᴴ A x`.
    pub fn form(&self, y: &[Complex64], x: &[Complex64]) -> Complex64 {
        self.matvec(x).iter().zip(y).map(|(a, b)| b.conj() * a).sum()
    }

    /// `Σ cᵢ Aᵢ` over matrices of equal size; the result has the largest bandwidth.
    pub fn combine(terms: &[(Complex64, &BandMatrix)]) -> Result<Self> {
        let n = terms.first().map(|t| t.1.n).unwrap_or(0);
        if terms.iter().any(|t| t.1.n != n) {
            return invalid("matrix sizes differ");
        }
        let bw = terms.iter().map(|t| t.1.bw).max().unwrap_or(0);
        let mut out = Self::zeros(n, bw);
        for (c, m) in terms {
            for i in 0..n {
                for j in m.cols(i) {
                    out.add(i, j, c * m.get(i, j));
                }
            }
        }
        Ok(out)
    }

    /// `max |A − Aᴴ|` relative to `max |A|`.
    pub fn hermitian_defect(&self) -> f64 {
        let scale = self.data.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in self.cols(i) {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst / scale
    }

    pub fn norm1(&self) -> f64 {
        let mut col = vec![0.0; self.n];
        for i in 0..self.n {
            for j in self.cols(i) {
                col[j] += self.get(i, j).norm();
            }
        }
        col.into_iter().fold(0.0, f64::max)
    }

    /// Nonzero entries as `(row, col, value)`.
    pub fn triplets(&self) -> Vec<(usize, usize, Complex64)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in self.cols(i) {
                let v = self.get(i, j);
                if v != ZERO {
                    out.push((i, j, v));
                }
            }
        }
        out
    }

    /// Coordinate text: one `row col re im` line per nonzero, zero-based.
    pub fn to_triplet_text(&self) -> String {
        let mut s = String::new();
        for (i, j, v) in self.triplets() {
            s.push_str(&format!("{i} {j} {:.16e} {:.16e}\n", v.re, v.im));
        }
        s
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<Complex64> {
        nalgebra::DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }
}

/// Banded LU with partial pivoting (row interchanges confined to the band).
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    /// Row `i` holds `U[i, i..=i+kl+ku]`.
    upper: Vec<Complex64>,
    mult: Vec<Complex64>,
    piv: Vec<usize>,
    original: BandMatrix,
}

impl BandLu {
    pub fn factor(a: &BandMatrix) -> Result<Self> {
        let n = a.n;
        let kl = a.bw;
        let ku = a.bw;
        let w = 2 * kl + ku + 1;
        let at = |r: usize, c: usize| r * w + c + kl - r;
        let mut work = vec![ZERO; n * w];
        for i in 0..n {
            for j in a.cols(i) {
                work[at(i, j)] = a.get(i, j);
            }
        }
        let mut mult = vec![ZERO; n * kl];
        let mut piv = vec![0; n];
        for i in 0..n {
            let last_row = (i + kl).min(n - 1);
            let last_col = (i + ku + kl).min(n - 1);
            let mut p = i;
            let mut best = work[at(i, i)].norm();
            for r in i + 1..=last_row {
                let v = work[at(r, i)].norm();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::Numeric(format!("zero pivot in column {i}")));
            }
            if p != i {
                for c in i..=last_col {
                    work.swap(at(i, c), at(p, c));
                }
            }
            piv[i] = p;
            let pivot = work[at(i, i)];
            for r in i + 1..=last_row {
                let l = work[at(r, i)] / pivot;
                mult[i * kl + (r - i - 1)] = l;
                work[at(r, i)] = ZERO;
                if l != ZERO {
                    for c in i + 1..=last_col {
                        let u = work[at(i, c)];
                        work[at(r, c)] -= l * u;
                    }
                }
            }
        }
        let wu = kl + ku + 1;
        let mut upper = vec![ZERO; n * wu];
        for i in 0..n {
            for c in i..=(i + kl + ku).min(n - 1) {
                upper[i * wu + c - i] = work[at(i, c)];
            }
        }
        Ok(Self { n, kl, upper, mult, piv, original: a.clone() })
    }

    #[inline]
    fn u(&self, i: usize, c: usize) -> Complex64 {
        self.upper[i * (2 * self.kl + 1) + c - i]
    }

    fn span(&self, i: usize) -> usize {
        (i + 2 * self.kl).min(self.n - 1)
    }

    fn raw_solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let mut y = b.to_vec();
        for i in 0..self.n {
            y.swap(i, self.piv[i]);
            let yi = y[i];
            for t in 0..self.kl {
                let r = i + 1 + t;
                if r < self.n {
                    y[r] -= self.mult[i * self.kl + t] * yi;
                }
            }
        }
        for i in (0..self.n).rev() {
            let mut s = y[i];
            for c in i + 1..=self.span(i) {
                s -= self.u(i, c) * y[c];
            }
            y[i] = s / self.u(i, i);
        }
        y
    }

    fn raw_solve_adjoint(&self, b: &[Complex64]) -> Vec<Complex64> {
        let mut z = b.to_vec();
        let reach = 2 * self.kl;
        for i in 0..self.n {
            let mut s = z[i];
            for r in i.saturating_sub(reach)..i {
                s -= self.u(r, i).conj() * z[r];
            }
            z[i] = s / self.u(i, i).conj();
        }
        for i in (0..self.n).rev() {
            let mut s = z[i];
            for t in 0..self.kl {
                let r = i + 1 + t;
                if r < self.n {
                    s -= self.mult[i * self.kl + t].conj() * z[r];
                }
            }
            z[i] = s;
            z.swap(i, self.piv[i]);
        }
        z
    }

    fn refined(
        &self,
        b: &[Complex64],
        solve: impl Fn(&[Complex64]) -> Vec<Complex64>,
        apply: impl Fn(&[Complex64]) -> Vec<Complex64>,
    ) -> Result<Vec<Complex64>> {
        if b.len() != self.n {
            return invalid(format!("right-hand side has length {}, expected {}", b.len(), self.n));
        }
        let bnorm = l2(b);
        let mut x = solve(b);
        if bnorm == 0.0 {
            return Ok(x);
        }
        let mut rel = f64::INFINITY;
        for _ in 0..3 {
            let ax = apply(&x);
            let r: Vec<Complex64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
            rel = l2(&r) / bnorm;
            if rel <= 1e-14 {
                break;
            }
            let dx = solve(&r);
            for (xi, di) in x.iter_mut().zip(&dx) {
                *xi += di;
            }
        }
        let ax = apply(&x);
        let r: Vec<Complex64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        rel = rel.min(l2(&r) / bnorm);
        if !(rel <= RESIDUAL_TOL) {
            return Err(Error::Numeric(format!("relative residual {rel:e} exceeds {RESIDUAL_TOL:e}")));
        }
        Ok(x)
    }

    /// `A⁻¹b` with iterative refinement; errors if the relative residual exceeds `1e-10`.
    pub fn solve(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        self.refined(b, |v| self.raw_solve(v), |v| self.original.matvec(v))
    }

    /// `A⁻ᴴb`.
    pub fn solve_adjoint(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        self.refined(b, |v| self.raw_solve_adjoint(v), |v| self.original.matvec_adjoint(v))
    }

    /// Hager–Higham estimate of `‖A‖₁‖A⁻¹‖₁`.
    pub fn condition_estimate(&self) -> f64 {
        let n = self.n;
        let mut x = vec![Complex64::new(1.0 / n as f64, 0.0); n];
        let mut y = self.raw_solve(&x);
        let mut est = l1(&y);
        for iter in 0..5 {
            let xi: Vec<Complex64> =
                y.iter().map(|v| if v.norm() > 0.0 { v / v.norm() } else { Complex64::new(1.0, 0.0) }).collect();
            let z = self.raw_solve_adjoint(&xi);
            let (j, zmax) = z.iter().enumerate().fold((0, 0.0), |acc, (i, v)| if v.norm() > acc.1 { (i, v.norm()) } else { acc });
            let ztx: f64 = z.iter().zip(&x).map(|(a, b)| (a.conj() * b).re).sum();
            if iter > 0 && zmax <= ztx {
                break;
            }
            x = vec![ZERO; n];
            x[j] = Complex64::new(1.0, 0.0);
            y = self.raw_solve(&x);
            let new = l1(&y);
            if new <= est {
                break;
            }
            est = new;
        }
        let alt: Vec<Complex64> = (0..n)
            .map(|i| {
                let s = if i % 2 == 0 { 1.0 } else { -1.0 };
                Complex64::new(s * (1.0 + i as f64 / (n.max(2) - 1) as f64), 0.0)
            })
            .collect();
        let alt_est = 2.0 * l1(&self.raw_solve(&alt)) / (3.0 * n as f64);
        self.original.norm1() * est.max(alt_est)
    }
}

/// Relative residual accepted by the direct solver.
pub const RESIDUAL_TOL: f64 = 1e-10;

fn l2(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn l1(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_band(seed: u64, n: usize, bw: usize, diag_shift: f64) -> BandMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = BandMatrix::zeros(n, bw);
        for i in 0..n {
            for j in i.saturating_sub(bw)..=(i + bw).min(n - 1) {
                a.add(i, j, Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            }
            a.add(i, i, Complex64::new(diag_shift, 0.0));
        }
        a
    }

    fn random_vec(seed: u64, n: usize) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
    }

    #[test]
    fn solves_match_dense_lu() {
        for (n, bw) in [(1, 0), (7, 2), (40, 3), (64, 6)] {
            // small diagonal shift forces pivoting
            let a = random_band(n as u64, n, bw, 0.0);
            let b = random_vec(99, n);
            let dense = a.to_dense();
            let lu = BandLu::factor(&a).unwrap();
            let x = lu.solve(&b).unwrap();
            let xd = dense.clone().lu().solve(&nalgebra::DVector::from_vec(b.clone())).unwrap();
            for (p, q) in x.iter().zip(xd.iter()) {
                assert!((p - q).norm() < 1e-8 * (1.0 + q.norm()));
            }
            let y = lu.solve_adjoint(&b).unwrap();
            let yd = dense.adjoint().lu().solve(&nalgebra::DVector::from_vec(b.clone())).unwrap();
            for (p, q) in y.iter().zip(yd.iter()) {
                assert!((p - q).norm() < 1e-8 * (1.0 + q.norm()));
            }
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = BandMatrix::zeros(4, 1);
        assert!(BandLu::factor(&a).is_err());
    }

    #[test]
    fn condition_estimate_is_close_to_exact() {
        let a = random_band(5, 30, 2, 0.5);
        let lu = BandLu::factor(&a).unwrap();
        let inv = a.to_dense().try_inverse().unwrap();
        let inv_norm1 = (0..30).map(|j| (0..30).map(|i| inv[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max);
        let exact = a.norm1() * inv_norm1;
        let est = lu.condition_estimate();
        assert!(est <= exact * (1.0 + 1e-10) && est >= exact / 10.0, "est {est} exact {exact}");
    }

    #[test]
    fn constrain_and_triplets() {
        let mut a = random_band(1, 5, 1, 2.0);
        a.constrain(0, Complex64::new(1.0, 0.0));
        assert_eq!(a.get(0, 1), ZERO);
        assert_eq!(a.get(1, 0), ZERO);
        let text = a.to_triplet_text();
        assert!(text.starts_with("0 0 "));
        assert_eq!(text.lines().count(), a.triplets().len());
    }
}
