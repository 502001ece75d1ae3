use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::assembly::{load_l2, AssembledSystem};
use super::band::BandLu;
use super::space::{HpSpace, SpaceKind};
use crate::dtn::{bessel_j, bessel_j_prime, bessel_jy};
use crate::error::{invalid, Error, Result};

/// Condition-number estimate above which a system is treated as singular.
pub const MAX_CONDITION: f64 = 1e14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    L2Source,
    /// Total field of the scattering problem with incident `e^{ik x·a}`.
    PlaneWaveMode { direction: Vec<f64> },
}

/// Factorised system matrix reused across right-hand sides.
#[derive(Debug, Clone)]
pub struct SystemSolver {
    lu: BandLu,
    constrained: Vec<usize>,
    k: f64,
    h: f64,
    p: usize,
    pub condition: f64,
}

impl SystemSolver {
    pub fn new(system: &AssembledSystem) -> Result<Self> {
        let (k, h, p) = (system.k, system.space.mesh.h, system.space.degree);
        let fail = |reason: String| Error::Solver { k, h, p, reason };
        let lu = BandLu::factor(&system.system_matrix()).map_err(|e| fail(e.to_string()))?;
        let condition = lu.condition_estimate();
        if !(condition <= MAX_CONDITION) {
            return Err(fail(format!("condition estimate {condition:e} exceeds {MAX_CONDITION:e}")));
        }
        Ok(Self { lu, constrained: system.constrained_dofs().to_vec(), k, h, p, condition })
    }

    fn prepare(&self, b: &[Complex64]) -> Vec<Complex64> {
        let mut rhs = b.to_vec();
        for &c in &self.constrained {
            rhs[c] = Complex64::new(0.0, 0.0);
        }
        rhs
    }

    fn wrap(&self, r: Result<Vec<Complex64>>) -> Result<Vec<Complex64>> {
        r.map_err(|e| Error::Solver { k: self.k, h: self.h, p: self.p, reason: e.to_string() })
    }

    /// `A⁻¹b`.
    pub fn solve(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        self.wrap(self.lu.solve(&self.prepare(b)))
    }

    /// `A⁻ᴴb`.
    pub fn solve_adjoint(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        self.wrap(self.lu.solve_adjoint(&self.prepare(b)))
    }
}

/// Galerkin solution with the metadata needed to evaluate it anywhere.
#[derive(Debug, Clone)]
pub struct DiscreteSolution {
    pub space: HpSpace,
    pub coefficients: Vec<Complex64>,
    pub k: f64,
    pub kind: ProblemKind,
    pub mode: Option<i64>,
}

impl DiscreteSolution {
    pub fn with_kind(mut self, kind: ProblemKind) -> Self {
        self.kind = kind;
        self
    }

    /// `(u(x), u'(x))`; outside `B_R` the scattered part is continued as an outgoing wave.
    pub fn evaluate(&self, x: f64) -> Result<(Complex64, Complex64)> {
        let r = self.space.radius();
        let inside = match self.space.kind() {
            SpaceKind::Interval => x.abs() <= r,
            SpaceKind::Radial => {
                if x < 0.0 {
                    return invalid("radial coordinate must be nonnegative");
                }
                x <= r
            }
        };
        if inside {
            return Ok(self.space.evaluate(&self.coefficients, x));
        }
        let k = self.k;
        let n = self.coefficients.len();
        match self.space.kind() {
            SpaceKind::Interval => {
                let (edge, sign, c) = if x > 0.0 { (r, 1.0, self.coefficients[n - 1]) } else { (-r, -1.0, self.coefficients[0]) };
                let (inc_edge, inc, dinc) = match &self.kind {
                    ProblemKind::L2Source => (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)),
                    ProblemKind::PlaneWaveMode { direction } => {
                        let a = direction[0];
                        let e = |t: f64| Complex64::new(0.0, k * a * t).exp();
                        (e(edge), e(x), Complex64::new(0.0, k * a) * e(x))
                    }
                };
                let phase = Complex64::new(0.0, k * (x.abs() - r)).exp();
                let scat = (c - inc_edge) * phase;
                Ok((inc + scat, dinc + Complex64::new(0.0, k * sign) * scat))
            }
            SpaceKind::Radial => {
                let m = self.mode.unwrap_or(0).unsigned_abs() as usize;
                let (jr, yr) = bessel_jy(m, k * r)?;
                let (jx, yx) = bessel_jy(m, k * x)?;
                let h_r = Complex64::new(jr, yr);
                let h_x = Complex64::new(jx, yx);
                let dh_x = if m == 0 {
                    let (j1, y1) = bessel_jy(1, k * x)?;
                    -Complex64::new(j1, y1)
                } else {
                    let (jm1, ym1) = bessel_jy(m - 1, k * x)?;
                    Complex64::new(jm1, ym1) - h_x * (m as f64 / (k * x))
                };
                let (inc_edge, inc, dinc) = match &self.kind {
                    ProblemKind::L2Source => (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)),
                    ProblemKind::PlaneWaveMode { direction } => {
                        let mm = self.mode.unwrap_or(0);
                        let theta = direction[1].atan2(direction[0]);
                        let coef =
                            Complex64::new(0.0, 1.0).powu(m as u32) * Complex64::new(0.0, -(mm as f64) * theta).exp();
                        (
                            coef * bessel_j(m, k * r)?,
                            coef * bessel_j(m, k * x)?,
                            coef * (k * bessel_j_prime(m, k * x)?),
                        )
                    }
                };
                let amp = (self.coefficients[n - 1] - inc_edge) / h_r;
                Ok((inc + amp * h_x, dinc + amp * dh_x * k))
            }
        }
    }

    /// `‖u_N‖_{H¹_k}` on the discretisation domain (mode-weighted on radial spaces).
    pub fn h1k_norm(&self, gram: &super::band::BandMatrix) -> f64 {
        gram.form(&self.coefficients, &self.coefficients).re.max(0.0).sqrt()
    }

    /// Samples `(x, Re u, Im u)` as CSV text.
    pub fn to_csv(&self, samples: usize) -> Result<String> {
        let (a, b) = (self.space.mesh.vertices()[0], self.space.radius());
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Numeric(format!("csv: {e}"));
        w.write_record(["x", "re", "im"]).map_err(io)?;
        let n = samples.max(2);
        for i in 0..n {
            let x = a + (b - a) * i as f64 / (n - 1) as f64;
            let (u, _) = self.evaluate(x)?;
            w.write_record([format!("{x:.16e}"), format!("{:.16e}", u.re), format!("{:.16e}", u.im)]).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Numeric(format!("csv: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::Numeric(e.to_string()))
    }
}

/// Solves `A u = F` by banded LU with pivoting.
pub fn solve(system: &AssembledSystem, load: &[Complex64]) -> Result<DiscreteSolution> {
    if load.len() != system.space.dof_count() {
        return invalid(format!("load has length {}, space has {} dofs", load.len(), system.space.dof_count()));
    }
    let solver = SystemSolver::new(system)?;
    Ok(DiscreteSolution {
        space: system.space.clone(),
        coefficients: solver.solve(load)?,
        k: system.k,
        kind: ProblemKind::L2Source,
        mode: system.mode,
    })
}

/// `S*f`: solves `Aᴴ u = F` with `F_i = ∫ f φ_i w`, i.e. `a*(u, v) = ∫ f v̄`.
pub fn solve_adjoint(system: &AssembledSystem, f: &(dyn Fn(f64) -> Complex64 + Sync)) -> Result<DiscreteSolution> {
    let load = load_l2(f, &system.space);
    let solver = SystemSolver::new(system)?;
    Ok(DiscreteSolution {
        space: system.space.clone(),
        coefficients: solver.solve_adjoint(&load)?,
        k: system.k,
        kind: ProblemKind::L2Source,
        mode: system.mode,
    })
}
