//! Run files: one TOML table per command, plus the JSON manifest that records a finished run.

use std::path::{Path, PathBuf};

use helmholtz_hp::experiments::{DecompositionConfig, MeshRule, SweepConfig, TrappingScanConfig};
use helmholtz_hp::fem::ProblemKind;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

fn constant() -> String {
    "constant".into()
}
fn unit() -> f64 {
    1.0
}
fn quarter() -> f64 {
    0.25
}
fn samples() -> usize {
    1001
}
fn two() -> usize {
    2
}
fn one() -> usize {
    1
}
fn eight() -> usize {
    8
}

/// `[solve]`: one 1D solve, sampled onto `samples` points of `[−R, R]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    #[serde(default = "constant")]
    pub preset: String,
    pub k: f64,
    /// Mesh width; taken from `rule` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[serde(default)]
    pub rule: MeshRule,
    #[serde(default = "unit")]
    pub radius: f64,
    #[serde(default = "l2_source")]
    pub problem: ProblemKind,
    #[serde(default = "quarter")]
    pub source_half_width: f64,
    #[serde(default = "samples")]
    pub samples: usize,
}

fn l2_source() -> ProblemKind {
    ProblemKind::L2Source
}

/// `[eta]`: `η(V_N)` with `C_sol` and the duality threshold per `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EtaConfig {
    #[serde(default = "constant")]
    pub preset: String,
    pub ks: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[serde(default)]
    pub rule: MeshRule,
    #[serde(default = "unit")]
    pub radius: f64,
    /// The fine space splits every element of `V_N` this many times…
    #[serde(default = "two")]
    pub refine: usize,
    /// …and raises the degree by this much.
    #[serde(default = "two")]
    pub degree_increase: usize,
    #[serde(default)]
    pub seed: u64,
}

/// `[csol]`: `C_sol(k)` on the interval (`dimension = 1`) or the disk (`dimension = 2`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsolConfig {
    #[serde(default = "constant")]
    pub preset: String,
    pub ks: Vec<f64>,
    #[serde(default = "one")]
    pub dimension: usize,
    #[serde(default = "unit")]
    pub radius: f64,
    #[serde(default = "eight")]
    pub degree: usize,
    /// Angular modes on the disk; all modes up to the DtN truncation when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<Vec<i64>>,
    #[serde(default)]
    pub seed: u64,
}

/// `[sweep]`: an experiment selected by `experiment = "…"`, with that experiment's fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "snake_case")]
pub enum SweepSpec {
    Quasiopt(SweepConfig),
    Pollution(SweepConfig),
    RelativeError(SweepConfig),
    Trapping(TrappingScanConfig),
}

impl SweepSpec {
    pub fn name(&self) -> &'static str {
        match self {
            SweepSpec::Quasiopt(_) => "quasiopt",
            SweepSpec::Pollution(_) => "pollution",
            SweepSpec::RelativeError(_) => "relative_error",
            SweepSpec::Trapping(_) => "trapping",
        }
    }
}

/// One CSV series of a `[report]` plot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportInput {
    pub path: PathBuf,
    pub label: String,
}

/// `[report]`: overlays one column of several sweep CSVs on a log–log chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportConfig {
    pub inputs: Vec<ReportInput>,
    #[serde(default = "default_x")]
    pub x: String,
    #[serde(default = "default_y")]
    pub y: String,
    #[serde(default = "default_title")]
    pub title: String,
    #[serde(default = "default_output")]
    pub output: String,
}

fn default_x() -> String {
    "k".into()
}
fn default_y() -> String {
    "rel_error".into()
}
fn default_title() -> String {
    "relative H1_k error".into()
}
fn default_output() -> String {
    "report.svg".into()
}

/// Contents of a run file. Only the table of the command being run is read.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decompose: Option<DecompositionConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<EtaConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csol: Option<CsolConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<ReportConfig>,
}

/// Written next to the outputs of every run; `config` is the effective run file after
/// command-line overrides, so `--config manifest.json` repeats the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub cli_version: String,
    pub library_version: String,
    pub command: String,
    pub seed: u64,
    pub jobs: Option<usize>,
    pub config: RunFile,
    pub outputs: Vec<String>,
}

/// Reads a TOML run file, or the `config` of a JSON manifest when the path ends in `.json`.
pub fn load(path: &Path) -> CliResult<RunFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e == "json") {
        let manifest: Manifest = serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        return Ok(manifest.config);
    }
    toml::from_str(&text).map_err(|e| CliError::config(format!("{}: {}", path.display(), e.message_with_key(&text))))
}

trait KeyedMessage {
    fn message_with_key(&self, text: &str) -> String;
}

impl KeyedMessage for toml::de::Error {
    /// The parser message plus the offending line, which names the key.
    fn message_with_key(&self, text: &str) -> String {
        let msg = self.message().to_string();
        match self.span() {
            Some(span) => {
                let line_no = text[..span.start].matches('\n').count() + 1;
                let line = text.lines().nth(line_no - 1).unwrap_or("").trim();
                format!("{msg} (line {line_no}: `{line}`)")
            }
            None => msg,
        }
    }
}
