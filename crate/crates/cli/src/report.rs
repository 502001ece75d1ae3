//! CSV and SVG output.

use std::path::{Path, PathBuf};

use helmholtz_hp::experiments::SweepReport;
use plotters::prelude::*;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Svg,
}

/// A named polyline for a log–log chart.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        let points = points.into_iter().filter(|(x, y)| x.is_finite() && y.is_finite() && *x > 0.0 && *y > 0.0).collect();
        Self { label: label.into(), points }
    }
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Writes `sweep.csv` or `sweep.svg` for a sweep report into `dir`.
///
/// The SVG draws the relative `H¹_k` error and the best-approximation error relative to
/// the same norm against `k`, both on logarithmic axes. An empty report writes nothing.
pub fn emit_report(report: &SweepReport, format: Format, dir: &Path) -> CliResult<PathBuf> {
    if report.rows.is_empty() {
        return Err(CliError::config(format!("{} report has no rows; nothing written", report.experiment)));
    }
    match format {
        Format::Csv => {
            let path = dir.join("sweep.csv");
            write_text(&path, &report.to_csv()?)?;
            Ok(path)
        }
        Format::Svg => {
            let rel: Vec<(f64, f64)> = report.successful().filter_map(|r| Some((r.k, r.rel_error?))).collect();
            let best: Vec<(f64, f64)> = report
                .successful()
                .filter_map(|r| Some((r.k, r.best_approx_error? * r.rel_error? / r.h1k_error?)))
                .collect();
            let rule = rule_label(report);
            let series = [
                Series::new(format!("Galerkin, {rule}"), rel),
                Series::new(format!("best approximation, {rule}"), best),
            ];
            let path = dir.join("sweep.svg");
            plot_loglog(&path, &format!("{}: relative H1_k error", report.experiment), "k", "relative error", &series)?;
            Ok(path)
        }
    }
}

fn rule_label(report: &SweepReport) -> String {
    use helmholtz_hp::experiments::MeshRule;
    match report.config.rule {
        MeshRule::FixedHk { hk, p } => format!("hk = {hk}, p = {p}"),
        MeshRule::FixedHkOverP { hk_over_p, p } => format!("hk/p = {hk_over_p}, p = {p}"),
        MeshRule::Threshold { c1, c2 } => format!("threshold C1 = {c1}, C2 = {c2}"),
    }
}

fn decade_bounds(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values.fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !(lo.is_finite() && hi > 0.0) {
        return None;
    }
    let lo = 10f64.powf(lo.log10().floor());
    let hi = 10f64.powf(hi.log10().ceil());
    Some(if hi > lo { (lo, hi) } else { (lo, lo * 10.0) })
}

/// Static SVG line chart with logarithmic axes; series without positive points are skipped.
pub fn plot_loglog(path: &Path, title: &str, x_label: &str, y_label: &str, series: &[Series]) -> CliResult<()> {
    let drawn: Vec<&Series> = series.iter().filter(|s| !s.points.is_empty()).collect();
    let empty = || CliError::config(format!("no positive data to plot for {}", path.display()));
    let (x0, x1) = decade_bounds(drawn.iter().flat_map(|s| s.points.iter().map(|p| p.0))).ok_or_else(empty)?;
    let (y0, y1) = decade_bounds(drawn.iter().flat_map(|s| s.points.iter().map(|p| p.1))).ok_or_else(empty)?;

    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, (800, 560)).into_drawing_area();
        let draw_err = |e: &dyn std::fmt::Display| CliError::io(path, format!("drawing failed: {e}"));
        root.fill(&WHITE).map_err(|e| draw_err(&e))?;
        let mut chart = ChartBuilder::on(&root)
            .caption(title, ("sans-serif", 22))
            .margin(16)
            .x_label_area_size(48)
            .y_label_area_size(72)
            .build_cartesian_2d((x0..x1).log_scale(), (y0..y1).log_scale())
            .map_err(|e| draw_err(&e))?;
        chart
            .configure_mesh()
            .x_desc(x_label)
            .y_desc(y_label)
            .y_label_formatter(&|v| format!("{v:.0e}"))
            .draw()
            .map_err(|e| draw_err(&e))?;
        for (i, s) in drawn.iter().enumerate() {
            let colour = Palette99::pick(i).to_rgba();
            chart
                .draw_series(LineSeries::new(s.points.iter().copied(), colour.stroke_width(2)))
                .map_err(|e| draw_err(&e))?
                .label(s.label.clone())
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], colour.stroke_width(2)));
            chart
                .draw_series(s.points.iter().map(|&p| Circle::new(p, 3, colour.filled())))
                .map_err(|e| draw_err(&e))?;
        }
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.85))
            .border_style(BLACK)
            .draw()
            .map_err(|e| draw_err(&e))?;
        root.present().map_err(|e| draw_err(&e))?;
    }
    write_text(path, &svg)
}
