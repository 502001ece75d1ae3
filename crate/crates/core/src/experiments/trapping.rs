use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::estimators::{default_modes, estimate_csol_modes, NormEstimate};
use crate::error::{invalid, Error, Result};
use crate::fem::{build_space, HpSpace, SpaceKind};
use crate::symbol::{CoefficientField, PRESET_NAMES};

/// Fine `k`-scan of `C_sol(k)` on the disk for a trapping preset against the constant field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrappingScanConfig {
    #[serde(default = "default_preset")]
    pub preset: String,
    pub k_min: f64,
    pub k_max: f64,
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default = "default_degree")]
    pub degree: usize,
    /// Angular modes scanned for the preset, as `[a·k, b·k]`; `None` scans every mode up to the DtN truncation.
    #[serde(default)]
    pub mode_window: Option<(f64, f64)>,
    /// Every `baseline_stride`-th `k` of the scan also gets the constant-field `C_sol` (all modes).
    #[serde(default = "default_stride")]
    pub baseline_stride: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_preset() -> String {
    "trapping-well".into()
}
fn default_step() -> f64 {
    0.1
}
fn default_radius() -> f64 {
    1.0
}
fn default_degree() -> usize {
    8
}
fn default_stride() -> usize {
    10
}

impl TrappingScanConfig {
    pub fn new(k_min: f64, k_max: f64) -> Self {
        Self {
            preset: default_preset(),
            k_min,
            k_max,
            step: default_step(),
            radius: default_radius(),
            degree: default_degree(),
            mode_window: None,
            baseline_stride: default_stride(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !PRESET_NAMES.contains(&self.preset.as_str()) {
            return invalid(format!("unknown preset '{}'", self.preset));
        }
        if !(self.k_min > 0.0 && self.k_max >= self.k_min && self.step > 0.0) {
            return invalid("scan needs 0 < k_min ≤ k_max and a positive step");
        }
        if self.degree == 0 || self.baseline_stride == 0 || !(self.radius > 0.0) {
            return invalid("degree, baseline_stride and radius must be positive");
        }
        if let Some((a, b)) = self.mode_window {
            if !(a >= 0.0 && b >= a) {
                return invalid("mode_window must satisfy 0 ≤ a ≤ b");
            }
        }
        Ok(())
    }

    /// `k_min, k_min + step, …` up to `k_max`, rounded to the step.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = ((self.k_max - self.k_min) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| ((self.k_min + i as f64 * self.step) * 1e9).round() / 1e9).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrappingRow {
    pub k: f64,
    pub csol: f64,
    /// Mode attaining `csol`.
    pub mode: Option<i64>,
    pub converged: bool,
    /// Constant-field `C_sol` at this `k`, when sampled.
    pub baseline: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrappingReport {
    pub rows: Vec<TrappingRow>,
    /// Largest sampled constant-field `C_sol`.
    pub baseline_max: f64,
    pub peak_k: f64,
    pub peak_csol: f64,
    /// `peak_csol / baseline_max`.
    pub peak_ratio: f64,
}

impl TrappingReport {
    pub const CSV_HEADER: [&'static str; 5] = ["k", "csol", "mode", "converged", "baseline"];

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Numeric(format!("csv: {e}"));
        w.write_record(Self::CSV_HEADER).map_err(io)?;
        for r in &self.rows {
            w.write_record([
                format!("{:.16e}", r.k),
                format!("{:.16e}", r.csol),
                r.mode.map_or(String::new(), |m| m.to_string()),
                r.converged.to_string(),
                r.baseline.map_or(String::new(), |b| format!("{b:.16e}")),
            ])
            .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Numeric(format!("csv: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::Numeric(e.to_string()))
    }
}

/// Radial space resolving `k√n_max` with `h·k√n_max/p = 1/4`.
pub fn scan_space(coeffs: &CoefficientField, k: f64, radius: f64, degree: usize) -> Result<HpSpace> {
    let h = 0.25 * degree as f64 / (k * coeffs.n_max.sqrt());
    build_space(radius, h.min(radius), degree, SpaceKind::Radial)
}

fn modes_for(cfg: &TrappingScanConfig, k: f64) -> Vec<i64> {
    let all = default_modes(k, cfg.radius);
    match cfg.mode_window {
        None => all,
        Some((a, b)) => {
            let (lo, hi) = ((a * k).floor() as i64, (b * k).ceil() as i64);
            let picked: Vec<i64> = all.iter().copied().filter(|m| *m >= lo && *m <= hi).collect();
            if picked.is_empty() {
                all
            } else {
                picked
            }
        }
    }
}

/// `C_sol(k)` over the scan, the constant-field baseline on every `baseline_stride`-th `k`,
/// and the largest peak relative to the baseline.
///
/// With a mode window the preset value is a maximum over a subset of modes, hence a lower
/// bound for the full `C_sol`; the baseline always uses every mode.
pub fn trapping_scan(config: &TrappingScanConfig) -> Result<TrappingReport> {
    config.validate()?;
    let field = CoefficientField::preset(&config.preset, 2)?;
    let constant = CoefficientField::constant(2)?;
    let ks = config.wavenumbers();
    let rows: Vec<Result<TrappingRow>> = ks
        .par_iter()
        .enumerate()
        .map(|(i, &k)| {
            let space = scan_space(&field, k, config.radius, config.degree)?;
            let est: NormEstimate = estimate_csol_modes(&field, k, &space, &modes_for(config, k), config.seed)?;
            let baseline = if i % config.baseline_stride == 0 || i + 1 == ks.len() {
                let cspace = scan_space(&constant, k, config.radius, config.degree)?;
                let modes = default_modes(k, config.radius);
                Some(estimate_csol_modes(&constant, k, &cspace, &modes, config.seed)?.value)
            } else {
                None
            };
            Ok(TrappingRow { k, csol: est.value, mode: est.mode, converged: est.converged, baseline })
        })
        .collect();
    let rows: Vec<TrappingRow> = rows.into_iter().collect::<Result<_>>()?;
    let baseline_max = rows.iter().filter_map(|r| r.baseline).fold(0.0, f64::max);
    let peak = rows.iter().max_by(|a, b| a.csol.total_cmp(&b.csol)).expect("scan is nonempty");
    Ok(TrappingReport {
        peak_k: peak.k,
        peak_csol: peak.csol,
        peak_ratio: peak.csol / baseline_max,
        baseline_max,
        rows,
    })
}
