use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::estimators::estimate_csol;
use crate::dtn::DtnOperator;
use crate::error::{invalid, Error, Result};
use crate::fem::{assemble, build_space, load_l2_piecewise, solve, SpaceKind};
use crate::split::{decompose, required_points, scaling_report, GridFunction, ScalingReport, ScalingRun};
use crate::symbol::{mu_zero, CoefficientField, PRESET_NAMES};

/// Largest accepted `‖u_low + u_high − φu‖_∞ / ‖φu‖_∞` on `B_R`.
pub const PARTITION_TOL: f64 = 1e-10;

/// Source `f = ψ(x)(e^{ikx} + β e^{iγkx})` with Gaussian envelope `ψ = e^{−x²/(2σ²)}` on `B_R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecompositionConfig {
    #[serde(default = "default_preset")]
    pub preset: String,
    pub ks: Vec<f64>,
    #[serde(default = "default_radius")]
    pub radius: f64,
    /// Cutoff parameter; `None` uses μ₀ of the preset.
    #[serde(default)]
    pub mu: Option<f64>,
    #[serde(default = "default_beta")]
    pub beta: f64,
    /// `γ` of the high-frequency packet; must exceed `√(2μ)`.
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    /// FE degree of the solve; `h` follows from `h·γk√n_max/p = 1/4`.
    #[serde(default = "default_degree")]
    pub degree: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_preset() -> String {
    "constant".into()
}
fn default_radius() -> f64 {
    1.0
}
fn default_beta() -> f64 {
    1.0
}
fn default_gamma() -> f64 {
    3.5
}
fn default_sigma() -> f64 {
    0.2
}
fn default_degree() -> usize {
    8
}

impl DecompositionConfig {
    pub fn new(preset: &str, ks: Vec<f64>) -> Self {
        Self {
            preset: preset.into(),
            ks,
            radius: default_radius(),
            mu: None,
            beta: default_beta(),
            gamma: default_gamma(),
            sigma: default_sigma(),
            degree: default_degree(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !PRESET_NAMES.contains(&self.preset.as_str()) {
            return invalid(format!("unknown preset '{}'", self.preset));
        }
        if self.ks.len() < 3 {
            return Err(Error::InsufficientData { needed: 3, got: self.ks.len() });
        }
        if self.ks.iter().any(|k| !(*k > 0.0)) || self.ks.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("ks must be positive and strictly increasing");
        }
        if let Some(mu) = self.mu {
            if !(mu > 0.0) {
                return invalid(format!("mu must be positive, got {mu}"));
            }
        }
        if !(self.radius > 0.0) || !(self.sigma > 0.0) || !(self.gamma > 0.0) || self.degree == 0 {
            return invalid("radius, sigma, gamma and degree must be positive");
        }
        Ok(())
    }
}

/// Per-`k` bookkeeping of a decomposition run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionRun {
    pub k: f64,
    pub mu: f64,
    pub points: usize,
    pub half_width: f64,
    pub f_norm: f64,
    pub csol: f64,
    pub partition_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionReport {
    pub runs: Vec<DecompositionRun>,
    pub scaling: ScalingReport,
}

/// Solves the source problem per `k`, samples `u` (outgoing continuation outside `B_R`) onto
/// the periodic box `[−(R+2), R+2]`, splits it with μ and fits the `k`-scalings.
pub fn decomposition_sweep(config: &DecompositionConfig) -> Result<DecompositionReport> {
    config.validate()?;
    let coeffs = CoefficientField::preset(&config.preset, 1)?;
    let mu = config.mu.unwrap_or_else(|| mu_zero(&coeffs));
    if mu < mu_zero(&coeffs) {
        log::warn!("mu = {mu} is below mu0 = {}: ellipticity of the high part is not guaranteed", mu_zero(&coeffs));
    }
    if config.gamma <= (2.0 * mu).sqrt() {
        return invalid(format!("gamma = {} must exceed sqrt(2 mu) = {}", config.gamma, (2.0 * mu).sqrt()));
    }
    let results: Vec<Result<(ScalingRun, DecompositionRun)>> =
        config.ks.par_iter().map(|&k| one_run(config, &coeffs, k, mu)).collect();
    let mut scaling_runs = Vec::with_capacity(results.len());
    let mut runs = Vec::with_capacity(results.len());
    for r in results {
        let (s, d) = r?;
        if d.partition_defect > PARTITION_TOL {
            return Err(Error::Numeric(format!(
                "partition defect {:e} at k = {} exceeds {PARTITION_TOL:e}",
                d.partition_defect, d.k
            )));
        }
        scaling_runs.push(s);
        runs.push(d);
    }
    let scaling = scaling_report(&scaling_runs, 2, 4)?;
    Ok(DecompositionReport { runs, scaling })
}

fn one_run(cfg: &DecompositionConfig, coeffs: &CoefficientField, k: f64, mu: f64) -> Result<(ScalingRun, DecompositionRun)> {
    let (r, sigma, beta, gamma) = (cfg.radius, cfg.sigma, cfg.beta, cfg.gamma);
    let f = move |x: f64| {
        if x.abs() > r {
            return Complex64::new(0.0, 0.0);
        }
        let env = (-x * x / (2.0 * sigma * sigma)).exp();
        env * (Complex64::new(0.0, k * x).exp() + beta * Complex64::new(0.0, gamma * k * x).exp())
    };
    let p = cfg.degree;
    let h = 0.25 * p as f64 / (gamma.max(1.0) * k * coeffs.n_max.sqrt());
    let space = build_space(r, h, p, SpaceKind::Interval)?;
    let op = DtnOperator::new(k, r, 1)?;
    let system = assemble(coeffs, k, &space, Some(&op), None)?;
    let sol = solve(&system, &load_l2_piecewise(&f, &[], &space))?;
    let csol = estimate_csol(coeffs, k, &space, cfg.seed)?.value;
    let f_norm = gaussian_packet_norm(&f, r);

    let half_width = r + 2.0;
    let k_eff = k.max(gamma * k / (2.0 * (2.0 * mu).sqrt()));
    let points = required_points(half_width, k_eff, mu);
    let mut values = Vec::with_capacity(points);
    let probe = GridFunction::zeros(half_width, points, 1)?;
    for i in 0..points {
        values.push(sol.evaluate(probe.coordinate(i))?.0);
    }
    let grid = GridFunction::new(half_width, points, 1, values)?;
    let decomposition = decompose(&grid, f_norm, k, mu, r)?;
    let partition_defect = decomposition.partition_defect();
    Ok((
        ScalingRun { k, decomposition, f_norm, csol },
        DecompositionRun { k, mu, points, half_width, f_norm, csol, partition_defect },
    ))
}

/// `‖f‖_{L²(−R, R)}` by composite Gauss–Legendre on panels of width ≤ 0.01.
fn gaussian_packet_norm(f: &dyn Fn(f64) -> Complex64, r: f64) -> f64 {
    let (xq, wq) = crate::fem::quadrature::gauss_legendre(16);
    let panels = (2.0 * r / 0.01).ceil() as usize;
    let width = 2.0 * r / panels as f64;
    let mut acc = 0.0;
    for j in 0..panels {
        let a = -r + j as f64 * width;
        for (t, w) in xq.iter().zip(&wq) {
            let x = a + 0.5 * width * (t + 1.0);
            acc += w * 0.5 * width * f(x).norm_sqr();
        }
    }
    acc.sqrt()
}
