use std::path::{Path, PathBuf};

use helmholtz_hp::dtn::{estimate_cdtn1, DtnOperator};
use helmholtz_hp::experiments::{
    decomposition_sweep, default_modes, diagnostic_space, estimate_csol, estimate_csol_modes, estimate_eta,
    pollution_sweep, quasiopt_sweep, relative_error_planewave, scan_space, trapping_scan, with_jobs,
    DecompositionConfig, DecompositionReport, SweepReport, TrappingReport,
};
use helmholtz_hp::fem::{
    assemble, build_space, load_l2_piecewise, load_planewave, solve, ProblemKind, SpaceKind, MAX_DEGREE,
};
use helmholtz_hp::symbol::{eta_threshold, CoefficientField};
use helmholtz_hp::Complex64;
use serde::Serialize;

use crate::cli::{Command, Common};
use crate::config::{self, CsolConfig, EtaConfig, Manifest, ReportConfig, RunFile, SolveConfig, SweepSpec};
use crate::error::{CliError, CliResult};
use crate::report::{emit_report, plot_loglog, write_text, Format, Series};

const DEFAULT_DECOMPOSITION_KS: [f64; 4] = [10.0, 20.0, 40.0, 80.0];

/// Runs one command; returns the files written, manifest last.
pub fn execute(command: &Command) -> CliResult<Vec<PathBuf>> {
    let common = command.common();
    let (file, base) = match &common.config {
        Some(path) => (config::load(path)?, path.parent().map(Path::to_path_buf).unwrap_or_default()),
        None => (RunFile::default(), PathBuf::new()),
    };
    let seed = common.seed.or(file.seed).unwrap_or(0);
    let jobs = common.jobs.or(file.jobs);
    let mut effective = RunFile { seed: Some(seed), jobs, ..RunFile::default() };
    let out = &common.out;

    let run: Box<dyn FnOnce() -> CliResult<Vec<String>> + Send> = match command {
        Command::Solve(c) => {
            let cfg = solve_section(c, &file)?;
            effective.solve = Some(cfg.clone());
            let out = out.clone();
            Box::new(move || run_solve(&cfg, &out))
        }
        Command::Decompose(c) => {
            let cfg = decompose_section(c, &file, seed)?;
            effective.decompose = Some(cfg.clone());
            let (out, svg) = (out.clone(), c.svg);
            Box::new(move || run_decompose(&cfg, &out, svg))
        }
        Command::Sweep(c) => {
            let spec = sweep_section(c, &file, seed)?;
            effective.sweep = Some(spec.clone());
            let (out, svg) = (out.clone(), c.svg);
            Box::new(move || run_sweep(&spec, &out, svg))
        }
        Command::Eta(c) => {
            let cfg = eta_section(c, &file, seed)?;
            effective.eta = Some(cfg.clone());
            let (out, svg) = (out.clone(), c.svg);
            Box::new(move || run_eta(&cfg, &out, svg))
        }
        Command::Csol(c) => {
            let cfg = csol_section(c, &file, seed)?;
            effective.csol = Some(cfg.clone());
            let (out, svg) = (out.clone(), c.svg);
            Box::new(move || run_csol(&cfg, &out, svg))
        }
        Command::Report(c) => {
            reject(c, "report", &["k", "h", "p", "mu", "preset", "seed"])?;
            let cfg = file.report.clone().ok_or_else(|| CliError::config("report needs a config with a [report] table"))?;
            effective.report = Some(cfg.clone());
            let out = out.clone();
            Box::new(move || run_report(&cfg, &base, &out))
        }
    };

    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let result = with_jobs(jobs, run).map_err(CliError::from)?;
    let outputs = result?;
    let manifest = Manifest {
        tool: "helmholtz-hp".into(),
        cli_version: env!("CARGO_PKG_VERSION").into(),
        library_version: helmholtz_hp::version().into(),
        command: command.name().into(),
        seed,
        jobs,
        config: effective,
        outputs: outputs.clone(),
    };
    let manifest_path = out.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::io(&manifest_path, e))?;
    write_text(&manifest_path, &text)?;
    let mut written: Vec<PathBuf> = outputs.iter().map(|o| out.join(o)).collect();
    written.push(manifest_path);
    Ok(written)
}

/// Fails when a flag the command does not use was given.
fn reject(c: &Common, command: &str, flags: &[&str]) -> CliResult<()> {
    for flag in flags {
        let given = match *flag {
            "k" => c.k.is_some(),
            "h" => c.h.is_some(),
            "p" => c.p.is_some(),
            "mu" => c.mu.is_some(),
            "preset" => c.preset.is_some(),
            "seed" => c.seed.is_some(),
            _ => false,
        };
        if given {
            return Err(CliError::config(format!("--{flag} is not used by {command}")));
        }
    }
    Ok(())
}

fn check_k(k: f64) -> CliResult<()> {
    if k > 0.0 && k.is_finite() {
        Ok(())
    } else {
        Err(CliError::config(format!("k must be positive, got {k}")))
    }
}

fn check_ks(ks: &[f64]) -> CliResult<()> {
    if ks.is_empty() {
        return Err(CliError::config("ks must not be empty"));
    }
    ks.iter().try_for_each(|&k| check_k(k))
}

fn solve_section(c: &Common, file: &RunFile) -> CliResult<SolveConfig> {
    reject(c, "solve", &["mu"])?;
    let mut cfg = match (&file.solve, c.k) {
        (Some(cfg), _) => cfg.clone(),
        (None, Some(k)) => SolveConfig {
            preset: "constant".into(),
            k,
            h: None,
            p: None,
            rule: Default::default(),
            radius: 1.0,
            problem: ProblemKind::L2Source,
            source_half_width: 0.25,
            samples: 1001,
        },
        (None, None) => return Err(CliError::config("solve needs --k or a [solve] table with key `k`")),
    };
    if let Some(k) = c.k {
        cfg.k = k;
    }
    cfg.h = c.h.or(cfg.h);
    cfg.p = c.p.or(cfg.p);
    if let Some(p) = &c.preset {
        cfg.preset.clone_from(p);
    }
    check_k(cfg.k)?;
    Ok(cfg)
}

fn decompose_section(c: &Common, file: &RunFile, seed: u64) -> CliResult<DecompositionConfig> {
    reject(c, "decompose", &["k", "h", "p"])?;
    let mut cfg = file
        .decompose
        .clone()
        .unwrap_or_else(|| DecompositionConfig::new("constant", DEFAULT_DECOMPOSITION_KS.to_vec()));
    if let Some(p) = &c.preset {
        cfg.preset.clone_from(p);
    }
    if c.mu.is_some() {
        cfg.mu = c.mu;
    }
    if c.seed.is_some() || file.seed.is_some() {
        cfg.seed = seed;
    }
    check_ks(&cfg.ks)?;
    cfg.validate()?;
    Ok(cfg)
}

fn sweep_section(c: &Common, file: &RunFile, seed: u64) -> CliResult<SweepSpec> {
    reject(c, "sweep", &["h", "p", "mu"])?;
    let mut spec = file.sweep.clone().ok_or_else(|| CliError::config("sweep needs --config with a [sweep] table"))?;
    let override_seed = c.seed.is_some() || file.seed.is_some();
    match &mut spec {
        SweepSpec::Quasiopt(cfg) | SweepSpec::Pollution(cfg) | SweepSpec::RelativeError(cfg) => {
            if let Some(p) = &c.preset {
                cfg.preset.clone_from(p);
            }
            if let Some(k) = c.k {
                cfg.ks = vec![k];
            }
            if override_seed {
                cfg.seed = seed;
            }
            check_ks(&cfg.ks)?;
            cfg.validate()?;
        }
        SweepSpec::Trapping(cfg) => {
            if let Some(p) = &c.preset {
                cfg.preset.clone_from(p);
            }
            if let Some(k) = c.k {
                (cfg.k_min, cfg.k_max) = (k, k);
            }
            if override_seed {
                cfg.seed = seed;
            }
            check_k(cfg.k_min)?;
            cfg.validate()?;
        }
    }
    Ok(spec)
}

fn eta_section(c: &Common, file: &RunFile, seed: u64) -> CliResult<EtaConfig> {
    reject(c, "eta", &["mu"])?;
    let mut cfg = match (&file.eta, c.k) {
        (Some(cfg), _) => cfg.clone(),
        (None, Some(k)) => EtaConfig {
            preset: "constant".into(),
            ks: vec![k],
            h: None,
            p: None,
            rule: Default::default(),
            radius: 1.0,
            refine: 2,
            degree_increase: 2,
            seed,
        },
        (None, None) => return Err(CliError::config("eta needs --k or an [eta] table with key `ks`")),
    };
    if let Some(k) = c.k {
        cfg.ks = vec![k];
    }
    cfg.h = c.h.or(cfg.h);
    cfg.p = c.p.or(cfg.p);
    if let Some(p) = &c.preset {
        cfg.preset.clone_from(p);
    }
    if c.seed.is_some() || file.seed.is_some() {
        cfg.seed = seed;
    }
    check_ks(&cfg.ks)?;
    if cfg.refine == 0 {
        return Err(CliError::config("eta.refine must be positive"));
    }
    Ok(cfg)
}

fn csol_section(c: &Common, file: &RunFile, seed: u64) -> CliResult<CsolConfig> {
    reject(c, "csol", &["h", "mu"])?;
    let mut cfg = match (&file.csol, c.k) {
        (Some(cfg), _) => cfg.clone(),
        (None, Some(k)) => CsolConfig {
            preset: "constant".into(),
            ks: vec![k],
            dimension: 1,
            radius: 1.0,
            degree: 8,
            modes: None,
            seed,
        },
        (None, None) => return Err(CliError::config("csol needs --k or a [csol] table with key `ks`")),
    };
    if let Some(k) = c.k {
        cfg.ks = vec![k];
    }
    if let Some(p) = c.p {
        cfg.degree = p;
    }
    if let Some(p) = &c.preset {
        cfg.preset.clone_from(p);
    }
    if c.seed.is_some() || file.seed.is_some() {
        cfg.seed = seed;
    }
    check_ks(&cfg.ks)?;
    if !(cfg.dimension == 1 || cfg.dimension == 2) {
        return Err(CliError::config(format!("csol.dimension must be 1 or 2, got {}", cfg.dimension)));
    }
    Ok(cfg)
}

fn indicator(a: f64) -> impl Fn(f64) -> Complex64 + Sync {
    move |x: f64| if x.abs() <= a { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) }
}

fn run_solve(cfg: &SolveConfig, out: &Path) -> CliResult<Vec<String>> {
    let coeffs = CoefficientField::preset(&cfg.preset, 1)?;
    cfg.rule.validate()?;
    let (h_rule, p_rule) = cfg.rule.resolve(cfg.k, None);
    let (h, p) = (cfg.h.unwrap_or(h_rule), cfg.p.unwrap_or(p_rule));
    let space = build_space(cfg.radius, h, p, SpaceKind::Interval)?;
    let op = DtnOperator::new(cfg.k, cfg.radius, 1)?;
    let system = assemble(&coeffs, cfg.k, &space, Some(&op), None)?;
    let load = match &cfg.problem {
        ProblemKind::L2Source => {
            let a = cfg.source_half_width;
            load_l2_piecewise(&indicator(a), &[-a, a], &space)
        }
        ProblemKind::PlaneWaveMode { direction } => load_planewave(direction, cfg.k, &space, &op, None)?,
    };
    let sol = solve(&system, &load)?.with_kind(cfg.problem.clone());
    write_text(&out.join("solution.csv"), &sol.to_csv(cfg.samples)?)?;
    println!(
        "solve: preset={} k={} h={:.6} p={} dofs={} |u|_H1k={:.6e}",
        cfg.preset,
        cfg.k,
        space.mesh.h,
        p,
        space.dof_count(),
        sol.h1k_norm(&system.gram)
    );
    Ok(vec!["solution.csv".into()])
}

fn csv_text<T: Serialize>(rows: &[T], path: &Path) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::io(path, e))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::io(path, e))?;
    String::from_utf8(bytes).map_err(|e| CliError::io(path, e))
}

fn sci(v: f64) -> String {
    format!("{v:.16e}")
}

fn run_decompose(cfg: &DecompositionConfig, out: &Path, svg: bool) -> CliResult<Vec<String>> {
    let rep: DecompositionReport = decomposition_sweep(cfg)?;
    write_text(&out.join("decomposition.csv"), &rep.scaling.to_csv()?)?;
    #[derive(Serialize)]
    struct RunRow {
        k: String,
        mu: String,
        points: usize,
        half_width: String,
        f_norm: String,
        csol: String,
        partition_defect: String,
    }
    let rows: Vec<RunRow> = rep
        .runs
        .iter()
        .map(|r| RunRow {
            k: sci(r.k),
            mu: sci(r.mu),
            points: r.points,
            half_width: sci(r.half_width),
            f_norm: sci(r.f_norm),
            csol: sci(r.csol),
            partition_defect: sci(r.partition_defect),
        })
        .collect();
    let runs_path = out.join("decomposition_runs.csv");
    write_text(&runs_path, &csv_text(&rows, &runs_path)?)?;
    let fmt = |v: &[Option<f64>]| {
        v.iter().map(|s| s.map_or("n/a".to_string(), |s| format!("{s:+.3}"))).collect::<Vec<_>>().join(", ")
    };
    println!("decompose: high-part slopes minus target [{}]", fmt(&rep.scaling.slopes_high));
    println!("decompose: low-part slopes minus target  [{}]", fmt(&rep.scaling.slopes_low));
    let mut outputs = vec!["decomposition.csv".to_string(), "decomposition_runs.csv".to_string()];
    if svg {
        let max_order = rep.scaling.rows.iter().map(|r| r.order).max().unwrap_or(0);
        let mut series = Vec::new();
        for order in 0..=max_order {
            let pick = |f: fn(&helmholtz_hp::split::ScalingRow) -> Option<f64>| {
                rep.scaling.rows.iter().filter(|r| r.order == order).filter_map(|r| Some((r.k, f(r)?))).collect()
            };
            series.push(Series::new(format!("high, |α| = {order}"), pick(|r| r.norm_high)));
            series.push(Series::new(format!("low, |β| = {order}"), pick(|r| r.norm_low)));
        }
        plot_loglog(&out.join("decomposition.svg"), "frequency-split norms / ‖f‖", "k", "norm", &series)?;
        outputs.push("decomposition.svg".into());
    }
    Ok(outputs)
}

fn first_failure(report: &SweepReport) -> Option<String> {
    report.rows.iter().find(|r| !r.ok()).map(|r| format!("sweep row k = {} failed: {}", r.k, r.status))
}

fn run_sweep(spec: &SweepSpec, out: &Path, svg: bool) -> CliResult<Vec<String>> {
    let report = match spec {
        SweepSpec::Quasiopt(cfg) => quasiopt_sweep(cfg)?,
        SweepSpec::Pollution(cfg) => pollution_sweep(cfg)?,
        SweepSpec::RelativeError(cfg) => relative_error_planewave(cfg)?,
        SweepSpec::Trapping(cfg) => return run_trapping(&trapping_scan(cfg)?, out, svg),
    };
    let mut outputs = vec![file_name(&emit_report(&report, Format::Csv, out)?)];
    let fitted_path = out.join("fitted.json");
    let fitted = serde_json::to_string_pretty(&report.fitted).map_err(|e| CliError::io(&fitted_path, e))?;
    write_text(&fitted_path, &fitted)?;
    outputs.push("fitted.json".into());
    if svg && report.successful().next().is_some() {
        outputs.push(file_name(&emit_report(&report, Format::Svg, out)?));
    }
    let f = &report.fitted;
    let show = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.4}"));
    println!(
        "sweep {}: {} rows, {} failed; qo spread {}, growth {}, plateau {}, max k·eta {}",
        spec.name(),
        report.rows.len(),
        f.failures,
        show(f.qo_spread),
        show(f.growth_ratio),
        show(f.plateau),
        show(f.eta_k_max)
    );
    match first_failure(&report) {
        Some(msg) => Err(CliError::Solver(msg)),
        None => Ok(outputs),
    }
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

fn run_trapping(rep: &TrappingReport, out: &Path, svg: bool) -> CliResult<Vec<String>> {
    if rep.rows.is_empty() {
        return Err(CliError::config("trapping scan has no rows; nothing written"));
    }
    write_text(&out.join("sweep.csv"), &rep.to_csv()?)?;
    #[derive(Serialize)]
    struct Summary {
        baseline_max: f64,
        peak_k: f64,
        peak_csol: f64,
        peak_ratio: f64,
    }
    let summary = Summary {
        baseline_max: rep.baseline_max,
        peak_k: rep.peak_k,
        peak_csol: rep.peak_csol,
        peak_ratio: rep.peak_ratio,
    };
    let path = out.join("fitted.json");
    write_text(&path, &serde_json::to_string_pretty(&summary).map_err(|e| CliError::io(&path, e))?)?;
    let mut outputs = vec!["sweep.csv".to_string(), "fitted.json".to_string()];
    if svg {
        let series = [
            Series::new("trapping preset", rep.rows.iter().map(|r| (r.k, r.csol)).collect()),
            Series::new("constant coefficients", rep.rows.iter().filter_map(|r| Some((r.k, r.baseline?))).collect()),
        ];
        plot_loglog(&out.join("sweep.svg"), "C_sol(k)", "k", "C_sol", &series)?;
        outputs.push("sweep.svg".into());
    }
    println!(
        "sweep trapping: {} wavenumbers, peak C_sol {:.4e} at k = {} ({:.1}x the constant baseline {:.4e})",
        rep.rows.len(),
        rep.peak_csol,
        rep.peak_k,
        rep.peak_ratio,
        rep.baseline_max
    );
    Ok(outputs)
}

fn run_eta(cfg: &EtaConfig, out: &Path, svg: bool) -> CliResult<Vec<String>> {
    cfg.rule.validate()?;
    let coeffs = CoefficientField::preset(&cfg.preset, 1)?;
    #[derive(Serialize)]
    struct Row {
        k: String,
        h: String,
        p: usize,
        dof: usize,
        eta: String,
        eta_k: String,
        eta_iterations: usize,
        eta_converged: bool,
        csol: String,
        c_dtn1: String,
        eta_k_bound: String,
        below_bound: bool,
    }
    let mut rows = Vec::with_capacity(cfg.ks.len());
    let mut points = Vec::new();
    let mut bounds = Vec::new();
    for &k in &cfg.ks {
        let (h_rule, p_rule) = cfg.rule.resolve(k, None);
        let (h, p) = (cfg.h.unwrap_or(h_rule), cfg.p.unwrap_or(p_rule));
        let space = build_space(cfg.radius, h, p, SpaceKind::Interval)?;
        let fine = space.refined(cfg.refine, (p + cfg.degree_increase).min(MAX_DEGREE))?;
        let eta = estimate_eta(&space, &coeffs, k, &fine, cfg.seed)?;
        let csol = estimate_csol(&coeffs, k, &diagnostic_space(&coeffs, k, cfg.radius, SpaceKind::Interval)?, cfg.seed)?;
        let c_dtn1 = estimate_cdtn1(&DtnOperator::new(k, cfg.radius, 1)?, &fine)?;
        let bound = eta_threshold(&coeffs, c_dtn1);
        points.push((k, k * eta.value));
        bounds.push((k, bound));
        rows.push(Row {
            k: sci(k),
            h: sci(space.mesh.h),
            p,
            dof: space.dof_count(),
            eta: sci(eta.value),
            eta_k: sci(k * eta.value),
            eta_iterations: eta.iterations,
            eta_converged: eta.converged,
            csol: sci(csol.value),
            c_dtn1: sci(c_dtn1),
            eta_k_bound: sci(bound),
            below_bound: k * eta.value <= bound,
        });
        println!("eta: k={k} h={:.5} p={p} k·eta={:.4e} bound={bound:.4e} C_sol={:.4e}", space.mesh.h, k * eta.value, csol.value);
    }
    let path = out.join("eta.csv");
    write_text(&path, &csv_text(&rows, &path)?)?;
    let mut outputs = vec!["eta.csv".to_string()];
    if svg {
        let series = [Series::new("k·η(V_N)", points), Series::new("duality threshold", bounds)];
        plot_loglog(&out.join("eta.svg"), "adjoint approximability", "k", "k·η", &series)?;
        outputs.push("eta.svg".into());
    }
    Ok(outputs)
}

fn run_csol(cfg: &CsolConfig, out: &Path, svg: bool) -> CliResult<Vec<String>> {
    let coeffs = CoefficientField::preset(&cfg.preset, cfg.dimension)?;
    #[derive(Serialize)]
    struct Row {
        k: String,
        csol: String,
        mode: Option<i64>,
        iterations: usize,
        converged: bool,
    }
    let mut rows = Vec::with_capacity(cfg.ks.len());
    let mut points = Vec::new();
    for &k in &cfg.ks {
        let est = if cfg.dimension == 1 {
            let h = 0.25 * cfg.degree as f64 / (k * coeffs.n_max.sqrt());
            let space = build_space(cfg.radius, h.min(0.5 * cfg.radius), cfg.degree, SpaceKind::Interval)?;
            estimate_csol(&coeffs, k, &space, cfg.seed)?
        } else {
            let space = scan_space(&coeffs, k, cfg.radius, cfg.degree)?;
            let modes = cfg.modes.clone().unwrap_or_else(|| default_modes(k, cfg.radius));
            estimate_csol_modes(&coeffs, k, &space, &modes, cfg.seed)?
        };
        points.push((k, est.value));
        rows.push(Row { k: sci(k), csol: sci(est.value), mode: est.mode, iterations: est.iterations, converged: est.converged });
        println!("csol: k={k} C_sol={:.6e}{}", est.value, est.mode.map_or(String::new(), |m| format!(" (mode {m})")));
    }
    let path = out.join("csol.csv");
    write_text(&path, &csv_text(&rows, &path)?)?;
    let mut outputs = vec!["csol.csv".to_string()];
    if svg {
        plot_loglog(&out.join("csol.svg"), "C_sol(k)", "k", "C_sol", &[Series::new(cfg.preset.clone(), points)])?;
        outputs.push("csol.svg".into());
    }
    Ok(outputs)
}

/// Column `name` of a CSV file as `(x, y)` pairs; rows with a non-`ok` status or empty cells are skipped.
fn read_columns(path: &Path, x: &str, y: &str) -> CliResult<Vec<(f64, f64)>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::io(path, e))?;
    let headers = reader.headers().map_err(|e| CliError::io(path, e))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::config(format!("{} has no column `{name}`", path.display())))
    };
    let (ix, iy) = (col(x)?, col(y)?);
    let status = headers.iter().position(|h| h == "status");
    let mut points = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::io(path, e))?;
        if status.is_some_and(|s| record.get(s) != Some("ok")) {
            continue;
        }
        let parse = |i: usize| record.get(i).filter(|s| !s.is_empty()).and_then(|s| s.parse::<f64>().ok());
        if let (Some(a), Some(b)) = (parse(ix), parse(iy)) {
            points.push((a, b));
        }
    }
    Ok(points)
}

fn run_report(cfg: &ReportConfig, base: &Path, out: &Path) -> CliResult<Vec<String>> {
    if cfg.inputs.is_empty() {
        return Err(CliError::config("report.inputs is empty; nothing written"));
    }
    let mut series = Vec::with_capacity(cfg.inputs.len());
    for input in &cfg.inputs {
        let path = if input.path.is_absolute() { input.path.clone() } else { base.join(&input.path) };
        series.push(Series::new(input.label.clone(), read_columns(&path, &cfg.x, &cfg.y)?));
    }
    if series.iter().all(|s| s.points.is_empty()) {
        return Err(CliError::config("report inputs contain no plottable rows; nothing written"));
    }
    plot_loglog(&out.join(&cfg.output), &cfg.title, &cfg.x, &cfg.y, &series)?;
    println!("report: {} series written to {}", series.len(), out.join(&cfg.output).display());
    Ok(vec![cfg.output.clone()])
}
