//! Bessel functions `J_m`, `Y_m` of integer order and real positive argument.
//!
//! Miller's downward recurrence normalised by `J_0 + 2ΣJ_{2k} = 1` for moderate `x`,
//! Hankel's asymptotic expansion for `J_0, J_1, Y_0, Y_1` at large `x`, Neumann series
//! for `Y_0, Y_1`, and upward recurrences where they are stable.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
/// Above this argument `J_0, J_1, Y_0, Y_1` come from the asymptotic expansion.
const ASYMPTOTIC_X: f64 = 25.0;
const MAX_ORDER: usize = 200;
const RESCALE_AT: f64 = 1e250;
const RESCALE_BY: f64 = 1e-250;

/// `(J_m(x), Y_m(x))`.
pub fn bessel_jy(m: usize, x: f64) -> Result<(f64, f64)> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("Bessel argument must be positive and finite, got {x}")));
    }
    if m > MAX_ORDER {
        return Err(Error::Domain(format!("Bessel order {m} exceeds {MAX_ORDER}")));
    }
    let (j, y0, y1) = if x >= ASYMPTOTIC_X {
        let (j0, y0) = hankel_asymptotic(0, x);
        let (j1, y1) = hankel_asymptotic(1, x);
        // upward recurrence for J is stable only below the turning point
        let j = if (m as f64) >= x { miller(m, x).jm } else { upward(m, x, j0, j1) };
        (j, y0, y1)
    } else {
        let r = miller(m, x);
        let (y0, y1) = neumann_y01(x, &r.even_odd);
        (r.jm, y0, y1)
    };
    let y = upward(m, x, y0, y1);
    if !y.is_finite() {
        return Err(Error::Numeric(format!("Y_{m}({x}) overflows")));
    }
    Ok((j, y))
}

/// `H^{(1)}_m(x) = J_m(x) + iY_m(x)`.
pub fn hankel1(m: usize, x: f64) -> Result<num_complex::Complex64> {
    let (j, y) = bessel_jy(m, x)?;
    Ok(num_complex::Complex64::new(j, y))
}

/// `J_m(x)` for any `x ≥ 0`, including the limit at the origin.
pub fn bessel_j(m: usize, x: f64) -> Result<f64> {
    if x == 0.0 {
        return Ok(if m == 0 { 1.0 } else { 0.0 });
    }
    Ok(bessel_jy(m, x)?.0)
}

/// `J_m'(x) = (J_{m−1}(x) − J_{m+1}(x))/2`, with `J_0' = −J_1`.
pub fn bessel_j_prime(m: usize, x: f64) -> Result<f64> {
    if m == 0 {
        return Ok(-bessel_j(1, x)?);
    }
    Ok(0.5 * (bessel_j(m - 1, x)? - bessel_j(m + 1, x)?))
}

fn upward(m: usize, x: f64, f0: f64, f1: f64) -> f64 {
    if m == 0 {
        return f0;
    }
    let (mut a, mut b) = (f0, f1);
    for n in 1..m {
        let c = (2.0 * n as f64 / x) * b - a;
        a = b;
        b = c;
    }
    b
}

struct MillerResult {
    jm: f64,
    /// `J_0(x), J_1(x), …` up to the start index, normalised; beyond the rescaling
    /// horizon entries may be inaccurate and are only used in convergent sums.
    even_odd: Vec<f64>,
}

/// Downward recurrence from an index well past `max(m, x)`.
fn miller(m: usize, x: f64) -> MillerResult {
    let big = (m as f64).max(x);
    let mut start = (big + 40.0 + (80.0 * big).sqrt()).ceil() as usize;
    start += start % 2;
    let mut vals = vec![0.0; start + 2];
    vals[start] = 1e-300;
    // J_m is kept apart so that rescalings never push it into the subnormal range
    let mut jm = if m == start { vals[start] } else { 0.0 };
    let mut shifts = 0i32;
    for n in (1..=start).rev() {
        let next = (2.0 * n as f64 / x) * vals[n] - vals[n + 1];
        vals[n - 1] = next;
        if n - 1 == m {
            jm = next;
        }
        if next.abs() > RESCALE_AT {
            for v in vals.iter_mut() {
                *v *= RESCALE_BY;
            }
            if n - 1 <= m {
                shifts += 1;
            }
        }
    }
    let norm = vals[0] + 2.0 * vals.iter().skip(2).step_by(2).sum::<f64>();
    let inv = 1.0 / norm;
    for v in vals.iter_mut() {
        *v *= inv;
    }
    let mut j = jm * inv;
    for _ in 0..shifts {
        j *= RESCALE_BY;
    }
    vals.truncate(start + 1);
    MillerResult { jm: j, even_odd: vals }
}

/// `Y_0, Y_1` from Neumann series in normalised `J_n` values.
fn neumann_y01(x: f64, j: &[f64]) -> (f64, f64) {
    let lg = (0.5 * x).ln() + EULER_GAMMA;
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    let mut k = 1;
    while 2 * k + 1 < j.len() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        s0 += sign * j[2 * k] / k as f64;
        s1 += sign * (j[2 * k - 1] - j[2 * k + 1]) / k as f64;
        k += 1;
    }
    let y0 = (2.0 / PI) * (lg * j[0] - 2.0 * s0);
    let y1 = (2.0 / PI) * (-j[0] / x + lg * j[1] + s1);
    (y0, y1)
}

/// Hankel's expansion for orders 0 and 1.
fn hankel_asymptotic(nu: u32, x: f64) -> (f64, f64) {
    let mu = 4.0 * (nu * nu) as f64;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) / (k as f64 * 8.0 * x);
        if term.abs() >= prev {
            break;
        }
        prev = term.abs();
        // a_k/x^k enters P for even k (sign (−1)^{k/2}) and Q for odd k (sign (−1)^{(k−1)/2})
        match k % 4 {
            0 => p += term,
            1 => q += term,
            2 => p -= term,
            _ => q -= term,
        }
        if term.abs() < 1e-18 {
            break;
        }
    }
    let (s, c) = x.sin_cos();
    // ω = x − νπ/2 − π/4 expanded exactly to avoid phase rounding
    let (cw, sw) = if nu == 0 {
        ((c + s) * FRAC_1_SQRT_2, (s - c) * FRAC_1_SQRT_2)
    } else {
        ((s - c) * FRAC_1_SQRT_2, -(s + c) * FRAC_1_SQRT_2)
    };
    let amp = (2.0 / (PI * x)).sqrt();
    (amp * (p * cw - q * sw), amp * (p * sw + q * cw))
}
