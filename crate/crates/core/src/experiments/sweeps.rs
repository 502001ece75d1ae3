use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{MeshRule, SweepConfig};
use super::estimators::{estimate_csol, estimate_eta};
use crate::dtn::{estimate_cdtn1, DtnOperator};
use crate::error::{invalid, Error, Result};
use crate::fem::{
    assemble, best_approximation, build_space, h1k_error, load_l2_piecewise, load_planewave, reference_h1k_norm,
    reference_h2_seminorm, DiscreteSolution, HpSpace, IndicatorReference, PlaneWaveReference, ProblemKind, Reference,
    SpaceKind, SystemSolver, MAX_DEGREE,
};
use crate::split::least_squares_slope;
use crate::symbol::CoefficientField;

/// Column order of [`SweepReport::to_csv`].
pub const SWEEP_COLUMNS: [&str; 15] = [
    "k",
    "h",
    "p",
    "dof",
    "h1k_error",
    "best_approx_error",
    "qo_ratio",
    "eta_k",
    "csol_est",
    "c_dtn1",
    "rel_error",
    "c_osc",
    "ref_error",
    "status",
    "runtime",
];

/// One wavenumber of a sweep. Missing measurements are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: f64,
    pub h: f64,
    pub p: usize,
    pub dof: usize,
    pub h1k_error: Option<f64>,
    pub best_approx_error: Option<f64>,
    pub qo_ratio: Option<f64>,
    /// `k·η(V_N)`.
    pub eta_k: Option<f64>,
    pub csol_est: Option<f64>,
    pub c_dtn1: Option<f64>,
    pub rel_error: Option<f64>,
    pub c_osc: Option<f64>,
    /// Relative `H¹_k` distance between the reference and a finer check solution.
    pub ref_error: Option<f64>,
    /// `ok`, or the failure message.
    pub status: String,
    pub runtime: f64,
}

impl SweepRow {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }
}

/// Constants fitted over the rows of a sweep.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FittedConstants {
    pub qo_max: Option<f64>,
    pub qo_min: Option<f64>,
    /// `qo_max / qo_min`.
    pub qo_spread: Option<f64>,
    /// Relative error at the largest `k` over that at the smallest.
    pub growth_ratio: Option<f64>,
    pub rel_error_slope: Option<f64>,
    /// Geometric mean of the relative errors.
    pub plateau: Option<f64>,
    pub c_osc_slope: Option<f64>,
    pub csol_slope: Option<f64>,
    pub eta_k_max: Option<f64>,
    /// Log–log slope of the dof count over rows with `k ≥ 40`.
    pub dof_slope: Option<f64>,
    /// `dof/k` within 20% of its value at the second `k` for all later rows.
    pub dof_proportional: Option<bool>,
    /// Pollution sweeps: `growth_ratio ≥ 2`.
    pub pollution_detected: Option<bool>,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub experiment: String,
    pub config: SweepConfig,
    pub rows: Vec<SweepRow>,
    pub fitted: FittedConstants,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| format!("{x:.16e}"))
}

impl SweepReport {
    /// CSV with header [`SWEEP_COLUMNS`]; floats in `{:.16e}`, missing values empty.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Numeric(format!("csv: {e}"));
        w.write_record(SWEEP_COLUMNS).map_err(io)?;
        for r in &self.rows {
            w.write_record([
                format!("{:.16e}", r.k),
                format!("{:.16e}", r.h),
                r.p.to_string(),
                r.dof.to_string(),
                fmt_opt(r.h1k_error),
                fmt_opt(r.best_approx_error),
                fmt_opt(r.qo_ratio),
                fmt_opt(r.eta_k),
                fmt_opt(r.csol_est),
                fmt_opt(r.c_dtn1),
                fmt_opt(r.rel_error),
                fmt_opt(r.c_osc),
                fmt_opt(r.ref_error),
                r.status.clone(),
                format!("{:.16e}", r.runtime),
            ])
            .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Numeric(format!("csv: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::Numeric(e.to_string()))
    }

    pub fn successful(&self) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(|r| r.ok())
    }
}

fn slope_of(rows: &[&SweepRow], pick: impl Fn(&SweepRow) -> Option<f64>) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows.iter().filter_map(|r| pick(r).filter(|v| *v > 0.0).map(|v| (r.k, v))).collect();
    if pts.len() < 2 {
        return None;
    }
    let (ks, vs): (Vec<f64>, Vec<f64>) = pts.into_iter().map(|(k, v)| (k.ln(), v.ln())).unzip();
    least_squares_slope(&ks, &vs)
}

fn fit(rows: &[SweepRow]) -> FittedConstants {
    let ok: Vec<&SweepRow> = rows.iter().filter(|r| r.ok()).collect();
    let qos: Vec<f64> = ok.iter().filter_map(|r| r.qo_ratio).collect();
    let qo_max = qos.iter().copied().reduce(f64::max);
    let qo_min = qos.iter().copied().reduce(f64::min);
    let rel: Vec<f64> = ok.iter().filter_map(|r| r.rel_error).collect();
    let growth_ratio = match (ok.first().and_then(|r| r.rel_error), ok.last().and_then(|r| r.rel_error)) {
        (Some(a), Some(b)) if ok.len() >= 2 && a > 0.0 => Some(b / a),
        _ => None,
    };
    let plateau = (!rel.is_empty() && rel.iter().all(|v| *v > 0.0))
        .then(|| (rel.iter().map(|v| v.ln()).sum::<f64>() / rel.len() as f64).exp());
    let large: Vec<&SweepRow> = ok.iter().copied().filter(|r| r.k >= 40.0).collect();
    let dof_proportional = (ok.len() >= 3).then(|| {
        let base = ok[1].dof as f64 / ok[1].k;
        ok[2..].iter().all(|r| ((r.dof as f64 / r.k) / base - 1.0).abs() <= 0.2)
    });
    FittedConstants {
        qo_max,
        qo_min,
        qo_spread: qo_max.zip(qo_min).map(|(a, b)| a / b),
        growth_ratio,
        rel_error_slope: slope_of(&ok, |r| r.rel_error),
        plateau,
        c_osc_slope: slope_of(&ok, |r| r.c_osc),
        csol_slope: slope_of(&ok, |r| r.csol_est),
        eta_k_max: ok.iter().filter_map(|r| r.eta_k).reduce(f64::max),
        dof_slope: slope_of(&large, |r| Some(r.dof as f64)),
        dof_proportional,
        pollution_detected: None,
        failures: rows.len() - ok.len(),
    }
}

/// Space on which `C_sol` is estimated independently of the rule: degree 8, `h·k√n_max/p = 1/4`.
pub fn diagnostic_space(coeffs: &CoefficientField, k: f64, radius: f64, kind: SpaceKind) -> Result<HpSpace> {
    let p = 8;
    let h = 0.25 * p as f64 / (k * coeffs.n_max.sqrt());
    build_space(radius, h, p, kind)
}

struct Measured {
    h1k_error: f64,
    best: f64,
    norm: f64,
    c_osc: Option<f64>,
    ref_error: Option<f64>,
}

fn indicator(a: f64) -> impl Fn(f64) -> Complex64 + Sync {
    move |x: f64| if x.abs() <= a { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) }
}

fn source_breakpoints(cfg: &SweepConfig) -> Vec<f64> {
    match cfg.problem {
        ProblemKind::L2Source => vec![-cfg.source_half_width, cfg.source_half_width],
        ProblemKind::PlaneWaveMode { .. } => Vec::new(),
    }
}

fn load_for(cfg: &SweepConfig, k: f64, space: &HpSpace, op: &DtnOperator) -> Result<Vec<Complex64>> {
    match &cfg.problem {
        ProblemKind::L2Source => {
            let a = cfg.source_half_width;
            Ok(load_l2_piecewise(&indicator(a), &[-a, a], space))
        }
        ProblemKind::PlaneWaveMode { direction } => load_planewave(direction, k, space, op, None),
    }
}

fn fe_solution(cfg: &SweepConfig, coeffs: &CoefficientField, k: f64, space: &HpSpace) -> Result<DiscreteSolution> {
    let op = DtnOperator::new(k, cfg.radius, 1)?;
    let system = assemble(coeffs, k, space, Some(&op), None)?;
    let load = load_for(cfg, k, space, &op)?;
    let solver = SystemSolver::new(&system)?;
    Ok(DiscreteSolution {
        space: space.clone(),
        coefficients: solver.solve(&load)?,
        k,
        kind: cfg.problem.clone(),
        mode: None,
    })
}

fn measure(
    cfg: &SweepConfig,
    coeffs: &CoefficientField,
    k: f64,
    space: &HpSpace,
    sol: &DiscreteSolution,
    want_c_osc: bool,
) -> Result<Measured> {
    let closed: Option<Box<dyn Reference>> = match (&cfg.problem, coeffs.name()) {
        (ProblemKind::L2Source, "constant") => {
            Some(Box::new(IndicatorReference { k, half_width: cfg.source_half_width }))
        }
        (ProblemKind::PlaneWaveMode { direction }, "constant") => {
            Some(Box::new(PlaneWaveReference { k, direction: direction[0] }))
        }
        _ => None,
    };
    let (reference, ref_error): (Box<dyn Reference>, Option<f64>) = match closed {
        Some(r) => (r, None),
        None => {
            let p_ref = (space.degree + 4).min(MAX_DEGREE);
            let breaks = source_breakpoints(cfg);
            let fine = fe_solution(cfg, coeffs, k, &space.refined(2, p_ref)?.fitted(&breaks)?)?;
            let check = fe_solution(cfg, coeffs, k, &space.refined(4, p_ref)?.fitted(&breaks)?)?;
            let diff = h1k_error(&check.space, &check.coefficients, &fine, k, None);
            let scale = reference_h1k_norm(&check.space, &fine, k, None);
            (Box::new(fine), Some(diff / scale))
        }
    };
    let err = h1k_error(space, &sol.coefficients, reference.as_ref(), k, None);
    let norm = reference_h1k_norm(space, reference.as_ref(), k, None);
    let (_, best) = best_approximation(reference.as_ref(), space, k, None)?;
    let c_osc = want_c_osc.then(|| reference_h2_seminorm(space, reference.as_ref()) / (k * norm));
    Ok(Measured { h1k_error: err, best, norm, c_osc, ref_error })
}

fn run_row(cfg: &SweepConfig, coeffs: &CoefficientField, k: f64, want_c_osc: bool) -> SweepRow {
    let start = Instant::now();
    let mut row = SweepRow {
        k,
        h: f64::NAN,
        p: 0,
        dof: 0,
        h1k_error: None,
        best_approx_error: None,
        qo_ratio: None,
        eta_k: None,
        csol_est: None,
        c_dtn1: None,
        rel_error: None,
        c_osc: None,
        ref_error: None,
        status: "ok".into(),
        runtime: 0.0,
    };
    if let Err(e) = fill_row(cfg, coeffs, k, want_c_osc, &mut row) {
        row.status = e.to_string();
    }
    row.runtime = start.elapsed().as_secs_f64();
    row
}

fn fill_row(cfg: &SweepConfig, coeffs: &CoefficientField, k: f64, want_c_osc: bool, row: &mut SweepRow) -> Result<()> {
    if cfg.diagnostics || cfg.csol_in_degree {
        let dspace = diagnostic_space(coeffs, k, cfg.radius, SpaceKind::Interval)?;
        row.csol_est = Some(estimate_csol(coeffs, k, &dspace, cfg.seed)?.value);
    }
    let (h, p) = cfg.rule.resolve(k, if cfg.csol_in_degree { row.csol_est } else { None });
    let space = build_space(cfg.radius, h, p, SpaceKind::Interval)?;
    row.h = space.mesh.h;
    row.p = p;
    row.dof = space.dof_count();
    let sol = fe_solution(cfg, coeffs, k, &space)?;
    let m = measure(cfg, coeffs, k, &space, &sol, want_c_osc)?;
    row.h1k_error = Some(m.h1k_error);
    row.best_approx_error = Some(m.best);
    row.qo_ratio = Some(m.h1k_error / m.best);
    row.rel_error = Some(m.h1k_error / m.norm);
    row.c_osc = m.c_osc;
    row.ref_error = m.ref_error;
    if cfg.diagnostics {
        let fine = space.refined(2, (p + 2).min(MAX_DEGREE))?;
        row.eta_k = Some(k * estimate_eta(&space, coeffs, k, &fine, cfg.seed)?.value);
        let op = DtnOperator::new(k, cfg.radius, 1)?;
        row.c_dtn1 = Some(estimate_cdtn1(&op, &fine)?);
    }
    Ok(())
}

fn run_sweep(name: &str, cfg: &SweepConfig, want_c_osc: bool) -> Result<SweepReport> {
    cfg.validate()?;
    let coeffs = CoefficientField::preset(&cfg.preset, 1)?;
    let rows: Vec<SweepRow> = cfg.ks.par_iter().map(|&k| run_row(cfg, &coeffs, k, want_c_osc)).collect();
    for r in rows.iter().filter(|r| !r.ok()) {
        log::warn!("{name}: k = {} failed: {}", r.k, r.status);
    }
    let fitted = fit(&rows);
    Ok(SweepReport { experiment: name.into(), config: cfg.clone(), rows, fitted })
}

/// Threshold-rule sweep recording `h1k_error`, best approximation and `qo_ratio` per `k`.
pub fn quasiopt_sweep(config: &SweepConfig) -> Result<SweepReport> {
    if !config.rule.is_threshold() {
        return invalid("quasiopt_sweep needs the threshold rule");
    }
    run_sweep("quasiopt", config, false)
}

/// Fixed `hk`, fixed `p`: relative error versus `k`.
pub fn pollution_sweep(config: &SweepConfig) -> Result<SweepReport> {
    if !matches!(config.rule, MeshRule::FixedHk { .. }) {
        return invalid("pollution_sweep needs the fixed_hk rule");
    }
    let mut report = run_sweep("pollution", config, false)?;
    report.fitted.pollution_detected = report.fitted.growth_ratio.map(|g| g >= 2.0);
    Ok(report)
}

/// Plane-wave scattering under the threshold rule: relative error and `C_osc` per `k`.
pub fn relative_error_planewave(config: &SweepConfig) -> Result<SweepReport> {
    if !config.rule.is_threshold() {
        return invalid("relative_error_planewave needs the threshold rule");
    }
    if !matches!(config.problem, ProblemKind::PlaneWaveMode { .. }) {
        return invalid("relative_error_planewave needs a plane-wave problem");
    }
    run_sweep("relative_error", config, true)
}

/// `plateau(coarse) / plateau(fine)` for two plane-wave sweeps.
pub fn plateau_reduction(coarse: &SweepReport, fine: &SweepReport) -> Option<f64> {
    Some(coarse.fitted.plateau? / fine.fitted.plateau?)
}
