use rayon::prelude::*;
use serde::Serialize;

use super::{Decomposition, GridFunction};
use crate::error::{invalid, Error, Result};

/// One decomposition together with the data norm and the solution-operator estimate.
#[derive(Debug, Clone)]
pub struct ScalingRun {
    pub k: f64,
    pub decomposition: Decomposition,
    pub f_norm: f64,
    pub csol: f64,
}

/// `(k, order)` row of a scaling table. `None` marks orders not measured for that part.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub k: f64,
    pub order: usize,
    pub norm_high: Option<f64>,
    pub norm_low: Option<f64>,
    pub ratio_high: Option<f64>,
    pub ratio_low: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
    /// Least-squares slope of `log ‖∇^j u_high‖/‖f‖` against `log k`, `j = 0..=alpha_max`.
    pub slopes_high_raw: Vec<Option<f64>>,
    /// Slope of `log ratio_high`; zero means the `k^{j−2}` law is attained exactly.
    pub slopes_high: Vec<Option<f64>>,
    /// Slope of `log ‖∇^j u_low‖/(C_sol‖f‖)`.
    pub slopes_low_raw: Vec<Option<f64>>,
    /// Slope of `log ratio_low`.
    pub slopes_low: Vec<Option<f64>>,
}

impl ScalingReport {
    pub const CSV_HEADER: [&'static str; 6] = ["k", "order", "norm_high", "norm_low", "ratio_high", "ratio_low"];

    /// Rows as CSV text with a header; missing entries are empty fields.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Numeric(format!("csv: {e}"));
        w.write_record(Self::CSV_HEADER).map_err(io)?;
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
        for r in &self.rows {
            w.write_record([
                format!("{:.16e}", r.k),
                r.order.to_string(),
                fmt(r.norm_high),
                fmt(r.norm_low),
                fmt(r.ratio_high),
                fmt(r.ratio_low),
            ])
            .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Numeric(format!("csv: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::Numeric(e.to_string()))
    }
}

/// Least-squares slope of `y` against `x`.
pub fn least_squares_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let s = sxy / sxx;
    s.is_finite().then_some(s)
}

/// `(Σ_{|α|=j} ‖∂^α u‖²_{L²(B_R)})^{1/2}` with spectral derivatives taken before masking.
fn derivative_norm(u: &GridFunction, order: usize, radius: f64) -> Result<f64> {
    if u.dimension() == 1 {
        return Ok(u.derivative(&[order])?.l2_norm_ball(radius));
    }
    let mut acc = 0.0;
    for i in 0..=order {
        // multinomial weight: ∇^j counts ∂_x^i ∂_y^{j−i} binom(j,i) times
        let w = binomial(order, i);
        acc += w * u.derivative(&[i, order - i])?.l2_norm_ball(radius).powi(2);
    }
    Ok(acc.sqrt())
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn log_slope(ks: &[f64], vals: &[f64]) -> Option<f64> {
    if vals.iter().any(|v| !(*v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = ks.iter().map(|k| k.ln()).collect();
    let ly: Vec<f64> = vals.iter().map(|v| v.ln()).collect();
    least_squares_slope(&lx, &ly)
}

/// Ratios `‖∇^j u_high‖/(k^{j−2}‖f‖)` for `j ≤ alpha_max` and `‖∇^j u_low‖/(C_sol k^{j−1}‖f‖)`
/// for `j ≤ beta_max`, with their log–log slopes in `k`.
pub fn scaling_report(runs: &[ScalingRun], alpha_max: usize, beta_max: usize) -> Result<ScalingReport> {
    if runs.len() < 3 {
        return Err(Error::InsufficientData { needed: 3, got: runs.len() });
    }
    if alpha_max > 2 || beta_max > 6 {
        return invalid(format!("orders limited to alpha ≤ 2, beta ≤ 6, got {alpha_max}, {beta_max}"));
    }
    if runs.windows(2).any(|w| w[1].k <= w[0].k) {
        return invalid("k values must be increasing");
    }
    let top = alpha_max.max(beta_max);
    let rows: Vec<Vec<ScalingRow>> = runs
        .par_iter()
        .map(|run| {
            let d = &run.decomposition;
            let k = run.k;
            let f = run.f_norm;
            (0..=top)
                .map(|j| {
                    let (mut norm_high, mut ratio_high, mut norm_low, mut ratio_low) = (None, None, None, None);
                    let scale = |v: f64, s: f64| if v == 0.0 { 0.0 } else { v / s };
                    if j <= alpha_max {
                        let v = derivative_norm(&d.u_high, j, d.radius)?;
                        norm_high = Some(v);
                        ratio_high = Some(scale(v, k.powi(j as i32 - 2) * f));
                    }
                    if j <= beta_max {
                        let v = derivative_norm(&d.u_low, j, d.radius)?;
                        norm_low = Some(v);
                        ratio_low = Some(scale(v, run.csol * k.powi(j as i32 - 1) * f));
                    }
                    Ok(ScalingRow { k, order: j, norm_high, norm_low, ratio_high, ratio_low })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let ks: Vec<f64> = runs.iter().map(|r| r.k).collect();
    let column = |j: usize, pick: &dyn Fn(&ScalingRow, &ScalingRun) -> Option<f64>| -> Option<Vec<f64>> {
        rows.iter().zip(runs).map(|(rs, run)| pick(&rs[j], run)).collect()
    };
    let mut slopes_high_raw = Vec::new();
    let mut slopes_high = Vec::new();
    for j in 0..=alpha_max {
        slopes_high_raw.push(column(j, &|r, run| r.norm_high.map(|v| v / run.f_norm)).and_then(|v| log_slope(&ks, &v)));
        slopes_high.push(column(j, &|r, _| r.ratio_high).and_then(|v| log_slope(&ks, &v)));
    }
    let mut slopes_low_raw = Vec::new();
    let mut slopes_low = Vec::new();
    for j in 0..=beta_max {
        slopes_low_raw
            .push(column(j, &|r, run| r.norm_low.map(|v| v / (run.csol * run.f_norm))).and_then(|v| log_slope(&ks, &v)));
        slopes_low.push(column(j, &|r, _| r.ratio_low).and_then(|v| log_slope(&ks, &v)));
    }
    Ok(ScalingReport {
        rows: rows.into_iter().flatten().collect(),
        slopes_high_raw,
        slopes_high,
        slopes_low_raw,
        slopes_low,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::split::decompose;

    #[test]
    fn slope_of_power_law() {
        let x: Vec<f64> = [1.0f64, 2.0, 4.0, 8.0].iter().map(|v| v.ln()).collect();
        let y: Vec<f64> = [1.0f64, 2.0, 4.0, 8.0].iter().map(|v| (3.0 * v.powf(-1.5)).ln()).collect();
        assert!((least_squares_slope(&x, &y).unwrap() + 1.5).abs() < 1e-12);
    }

    #[test]
    fn requires_three_runs() {
        let u = GridFunction::zeros(4.0, 64, 1).unwrap();
        let d = decompose(&u, 1.0, 5.0, 3.0, 1.0).unwrap();
        let run = ScalingRun { k: 5.0, decomposition: d, f_norm: 1.0, csol: 1.0 };
        let err = scaling_report(&[run.clone(), run], 2, 4).unwrap_err();
        assert_eq!(err, Error::InsufficientData { needed: 3, got: 2 });
    }

    #[test]
    fn zero_input_gives_zero_ratios() {
        let runs: Vec<ScalingRun> = [5.0, 10.0, 20.0]
            .iter()
            .map(|&k| {
                let u = GridFunction::zeros(4.0, 256, 1).unwrap();
                ScalingRun { k, decomposition: decompose(&u, 1.0, k, 3.0, 1.0).unwrap(), f_norm: 1.0, csol: 1.0 }
            })
            .collect();
        let rep = scaling_report(&runs, 2, 4).unwrap();
        assert_eq!(rep.rows.len(), 15);
        for r in &rep.rows {
            assert!(r.ratio_high.map_or(true, |v| v == 0.0));
            assert!(r.ratio_low.map_or(true, |v| v == 0.0));
        }
        let csv = rep.to_csv().unwrap();
        assert_eq!(csv.lines().count(), 16);
        assert!(csv.starts_with("k,order,norm_high,norm_low,ratio_high,ratio_low"));
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(4, 2), 6.0);
        assert_eq!(binomial(3, 0), 1.0);
    }
}
