use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{invalid, Result};

/// Complex samples on the uniform periodic grid `[−L, L)^d` with `N` points per axis.
///
/// Point `i` along an axis sits at `−L + i·2L/N`. In 2D, `values[i·N + j]` is the
/// sample at `(x_i, y_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    half_width: f64,
    points: usize,
    dimension: usize,
    values: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(half_width: f64, points: usize, dimension: usize, values: Vec<Complex64>) -> Result<Self> {
        if !points.is_power_of_two() || points < 2 {
            return invalid(format!("points per axis must be a power of two, got {points}"));
        }
        if dimension != 1 && dimension != 2 {
            return invalid(format!("dimension must be 1 or 2, got {dimension}"));
        }
        if !(half_width > 0.0) {
            return invalid("box half-width must be positive");
        }
        if values.len() != points.pow(dimension as u32) {
            return invalid(format!(
                "expected {} values, got {}",
                points.pow(dimension as u32),
                values.len()
            ));
        }
        Ok(Self { half_width, points, dimension, values })
    }

    pub fn zeros(half_width: f64, points: usize, dimension: usize) -> Result<Self> {
        Self::new(half_width, points, dimension, vec![Complex64::new(0.0, 0.0); points.pow(dimension as u32)])
    }

    /// Samples `f` at every grid point.
    pub fn from_fn(
        half_width: f64,
        points: usize,
        dimension: usize,
        f: impl Fn(&[f64]) -> Complex64,
    ) -> Result<Self> {
        let mut g = Self::zeros(half_width, points, dimension)?;
        let mut x = vec![0.0; dimension];
        for idx in 0..g.values.len() {
            g.position_into(idx, &mut x);
            g.values[idx] = f(&x);
        }
        Ok(g)
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    /// Largest resolved frequency magnitude per axis, `πN/(2L)`.
    pub fn max_frequency(&self) -> f64 {
        PI * self.points as f64 / (2.0 * self.half_width)
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }

    pub fn position_into(&self, idx: usize, x: &mut [f64]) {
        if self.dimension == 1 {
            x[0] = self.coordinate(idx);
        } else {
            x[0] = self.coordinate(idx / self.points);
            x[1] = self.coordinate(idx % self.points);
        }
    }

    /// Lattice frequency `(π/L)·s` for DFT index `m`, with `s ∈ [−N/2, N/2)`.
    pub fn frequency(&self, m: usize) -> f64 {
        let n = self.points as i64;
        let s = if (m as i64) < n / 2 { m as i64 } else { m as i64 - n };
        s as f64 * PI / self.half_width
    }

    /// Frequency vector of spectral index `idx`.
    pub fn frequency_vector(&self, idx: usize, zeta: &mut [f64]) {
        if self.dimension == 1 {
            zeta[0] = self.frequency(idx);
        } else {
            zeta[0] = self.frequency(idx / self.points);
            zeta[1] = self.frequency(idx % self.points);
        }
    }

    /// `|ζ|²` of spectral index `idx`.
    pub fn frequency_sq(&self, idx: usize) -> f64 {
        if self.dimension == 1 {
            self.frequency(idx).powi(2)
        } else {
            self.frequency(idx / self.points).powi(2) + self.frequency(idx % self.points).powi(2)
        }
    }

    /// Unnormalised DFT of the samples.
    pub fn spectrum(&self) -> Vec<Complex64> {
        let mut buf = self.values.clone();
        transform(&mut buf, self.points, self.dimension, false);
        buf
    }

    /// Grid function with samples `IDFT(spectrum)/N^d`.
    pub fn from_spectrum(&self, mut spectrum: Vec<Complex64>) -> Self {
        transform(&mut spectrum, self.points, self.dimension, true);
        let scale = 1.0 / self.values.len() as f64;
        for v in spectrum.iter_mut() {
            *v *= scale;
        }
        Self { values: spectrum, ..self.clone() }
    }

    /// Spectral derivative `∂^α`; `alpha` holds one order per axis.
    pub fn derivative(&self, alpha: &[usize]) -> Result<Self> {
        if alpha.len() != self.dimension {
            return invalid("multi-index length must equal the dimension");
        }
        if alpha.iter().all(|&a| a == 0) {
            return Ok(self.clone());
        }
        let mut spec = self.spectrum();
        let nyq = self.points / 2;
        let mut zeta = vec![0.0; self.dimension];
        for (idx, s) in spec.iter_mut().enumerate() {
            self.frequency_vector(idx, &mut zeta);
            let mut factor = Complex64::new(1.0, 0.0);
            for axis in 0..self.dimension {
                let m = if self.dimension == 1 {
                    idx
                } else if axis == 0 {
                    idx / self.points
                } else {
                    idx % self.points
                };
                if alpha[axis] % 2 == 1 && m == nyq {
                    factor = Complex64::new(0.0, 0.0);
                }
                factor *= Complex64::new(0.0, zeta[axis]).powu(alpha[axis] as u32);
            }
            *s *= factor;
        }
        Ok(self.from_spectrum(spec))
    }

    /// Trapezoidal `L²` norm over the whole periodic box.
    pub fn l2_norm(&self) -> f64 {
        let cell = self.spacing().powi(self.dimension as i32);
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * cell).sqrt()
    }

    /// `L²` norm over the grid points with `|x| ≤ radius`.
    pub fn l2_norm_ball(&self, radius: f64) -> f64 {
        let cell = self.spacing().powi(self.dimension as i32);
        let mut x = vec![0.0; self.dimension];
        let mut acc = 0.0;
        for (idx, v) in self.values.iter().enumerate() {
            self.position_into(idx, &mut x);
            if x.iter().map(|c| c * c).sum::<f64>() <= radius * radius {
                acc += v.norm_sqr();
            }
        }
        (acc * cell).sqrt()
    }

    /// Measure of the grid mask `{|x| ≤ radius}`.
    pub fn ball_measure(&self, radius: f64) -> f64 {
        let cell = self.spacing().powi(self.dimension as i32);
        let mut x = vec![0.0; self.dimension];
        let count = (0..self.values.len())
            .filter(|&idx| {
                self.position_into(idx, &mut x);
                x.iter().map(|c| c * c).sum::<f64>() <= radius * radius
            })
            .count();
        count as f64 * cell
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub(crate) fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        if self.points != other.points || self.dimension != other.dimension || self.half_width != other.half_width {
            return invalid("grid functions live on different grids");
        }
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { values, ..self.clone() })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }
}

fn transform(buf: &mut [Complex64], n: usize, dimension: usize, inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
    if dimension == 1 {
        fft.process(buf);
        return;
    }
    for row in buf.chunks_exact_mut(n) {
        fft.process(row);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); n];
    for j in 0..n {
        for i in 0..n {
            col[i] = buf[i * n + j];
        }
        fft.process(&mut col);
        for i in 0..n {
            buf[i * n + j] = col[i];
        }
    }
}
