use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::fem::ProblemKind;
use crate::symbol::PRESET_NAMES;

/// How `(h, p)` follow from `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum MeshRule {
    /// `h·k = hk` at fixed `p`.
    FixedHk { hk: f64, p: usize },
    /// `h·k/p = hk_over_p` at fixed `p`.
    FixedHkOverP { hk_over_p: f64, p: usize },
    /// `p = ⌈C₂(1 + ln k [+ ln C_sol])⌉`, `h = C₁p/k`.
    Threshold {
        #[serde(default = "default_c1")]
        c1: f64,
        #[serde(default = "default_c2")]
        c2: f64,
    },
}

pub const DEFAULT_C1: f64 = 0.5;
pub const DEFAULT_C2: f64 = 1.0;

fn default_c1() -> f64 {
    DEFAULT_C1
}

fn default_c2() -> f64 {
    DEFAULT_C2
}

impl Default for MeshRule {
    fn default() -> Self {
        MeshRule::Threshold { c1: DEFAULT_C1, c2: DEFAULT_C2 }
    }
}

impl MeshRule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            MeshRule::FixedHk { hk, p } | MeshRule::FixedHkOverP { hk_over_p: hk, p } => {
                if !(hk > 0.0) || !hk.is_finite() {
                    return invalid(format!("mesh rule needs a positive ratio, got {hk}"));
                }
                if p == 0 {
                    return invalid("mesh rule needs p ≥ 1");
                }
            }
            MeshRule::Threshold { c1, c2 } => {
                if !(c1 > 0.0) || !(c2 > 0.0) || !c1.is_finite() || !c2.is_finite() {
                    return invalid(format!("threshold rule needs C1 > 0 and C2 > 0, got ({c1}, {c2})"));
                }
            }
        }
        Ok(())
    }

    /// `(h, p)` at wavenumber `k`; `csol` adds `ln C_sol` to the threshold degree.
    pub fn resolve(&self, k: f64, csol: Option<f64>) -> (f64, usize) {
        match *self {
            MeshRule::FixedHk { hk, p } => (hk / k, p),
            MeshRule::FixedHkOverP { hk_over_p, p } => (hk_over_p * p as f64 / k, p),
            MeshRule::Threshold { c1, c2 } => {
                let extra = csol.map_or(0.0, f64::ln);
                let p = (c2 * (1.0 + k.ln() + extra)).ceil().max(1.0) as usize;
                (c1 * p as f64 / k, p)
            }
        }
    }

    pub fn is_threshold(&self) -> bool {
        matches!(self, MeshRule::Threshold { .. })
    }
}

/// One sweep over an increasing list of wavenumbers (1D, `B_R = (−R, R)`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_preset")]
    pub preset: String,
    pub ks: Vec<f64>,
    #[serde(default)]
    pub rule: MeshRule,
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default = "default_problem")]
    pub problem: ProblemKind,
    /// Half-width `a` of the source `f = 1_{[−a, a]}` for `L²` problems.
    #[serde(default = "default_source")]
    pub source_half_width: f64,
    #[serde(default)]
    pub seed: u64,
    /// Also estimate `C_sol`, `η(V_N)` and `C_DtN1` per row.
    #[serde(default)]
    pub diagnostics: bool,
    /// Feed the `C_sol` estimate into the threshold degree.
    #[serde(default)]
    pub csol_in_degree: bool,
}

fn default_preset() -> String {
    "constant".into()
}

fn default_radius() -> f64 {
    1.0
}

fn default_problem() -> ProblemKind {
    ProblemKind::L2Source
}

fn default_source() -> f64 {
    0.25
}

impl SweepConfig {
    pub fn new(preset: &str, ks: Vec<f64>, rule: MeshRule) -> Self {
        Self {
            preset: preset.into(),
            ks,
            rule,
            radius: default_radius(),
            problem: default_problem(),
            source_half_width: default_source(),
            seed: 0,
            diagnostics: false,
            csol_in_degree: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !PRESET_NAMES.contains(&self.preset.as_str()) {
            return invalid(format!("unknown preset '{}', expected one of {}", self.preset, PRESET_NAMES.join(", ")));
        }
        if self.ks.is_empty() {
            return invalid("ks must not be empty");
        }
        if let Some(k) = self.ks.iter().find(|k| !(**k > 0.0) || !k.is_finite()) {
            return invalid(format!("k must be positive, got {k}"));
        }
        if self.ks.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("ks must be strictly increasing");
        }
        if !(self.radius > 0.0) {
            return invalid(format!("radius must be positive, got {}", self.radius));
        }
        if !(self.source_half_width > 0.0 && self.source_half_width < self.radius) {
            return invalid("source_half_width must lie in (0, radius)");
        }
        if let ProblemKind::PlaneWaveMode { direction } = &self.problem {
            if direction.len() != 1 || direction[0].abs() != 1.0 {
                return invalid("1D plane-wave direction must be [1.0] or [-1.0]");
            }
        }
        if self.csol_in_degree && !self.rule.is_threshold() {
            return invalid("csol_in_degree needs the threshold rule");
        }
        self.rule.validate()
    }
}

/// `count` wavenumbers spaced geometrically from `k_min` to `k_max` inclusive.
pub fn geometric_ks(k_min: f64, k_max: f64, count: usize) -> Result<Vec<f64>> {
    if !(k_min > 0.0 && k_max > k_min) || count < 2 {
        return invalid("geometric_ks needs 0 < k_min < k_max and count ≥ 2");
    }
    let ratio = (k_max / k_min).powf(1.0 / (count - 1) as f64);
    let mut ks: Vec<f64> = (0..count).map(|i| k_min * ratio.powi(i as i32)).collect();
    ks[count - 1] = k_max;
    Ok(ks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_rule_degree_and_size() {
        let rule = MeshRule::Threshold { c1: 0.5, c2: 1.0 };
        let (h, p) = rule.resolve(20.0, None);
        assert_eq!(p, 4);
        assert!((h - 0.1).abs() < 1e-15);
        let (_, p) = rule.resolve(160.0, None);
        assert_eq!(p, 7);
        let (_, p) = rule.resolve(20.0, Some(std::f64::consts::E * std::f64::consts::E));
        assert_eq!(p, 6);
    }

    #[test]
    fn fixed_rules() {
        assert_eq!(MeshRule::FixedHk { hk: 0.5, p: 1 }.resolve(10.0, None), (0.05, 1));
        assert_eq!(MeshRule::FixedHkOverP { hk_over_p: 0.5, p: 2 }.resolve(10.0, None), (0.1, 2));
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut c = SweepConfig::new("constant", vec![10.0, 20.0], MeshRule::default());
        assert!(c.validate().is_ok());
        c.ks = vec![20.0, 10.0];
        assert!(c.validate().is_err());
        c.ks = vec![10.0];
        c.rule = MeshRule::Threshold { c1: 0.0, c2: 1.0 };
        assert!(c.validate().is_err());
        c.rule = MeshRule::default();
        c.preset = "nope".into();
        assert!(c.validate().is_err());
    }

    #[test]
    fn geometric_list() {
        let ks = geometric_ks(10.0, 160.0, 5).unwrap();
        for (a, b) in ks.iter().zip([10.0, 20.0, 40.0, 80.0, 160.0]) {
            assert!((a - b).abs() < 1e-9 * b);
        }
    }
}
