/// Hierarchical shape functions of degree `p` on `[−1, 1]`.
///
/// Local index 0 and 1 are the vertex hats `(1∓ξ)/2`; index `j ≥ 2` is the bubble
/// `(P_j − P_{j−2})/√(2(2j−1))`, whose derivatives `√((2j−1)/2)·P_{j−1}` are orthonormal.
pub fn shape_functions(p: usize, xi: f64, values: &mut [f64], derivs: &mut [f64]) {
    debug_assert!(values.len() > p && derivs.len() > p);
    values[0] = 0.5 * (1.0 - xi);
    values[1] = 0.5 * (1.0 + xi);
    derivs[0] = -0.5;
    derivs[1] = 0.5;
    if p < 2 {
        return;
    }
    let mut leg = [0.0f64; 34];
    leg[0] = 1.0;
    leg[1] = xi;
    for j in 2..=p {
        leg[j] = ((2 * j - 1) as f64 * xi * leg[j - 1] - (j - 1) as f64 * leg[j - 2]) / j as f64;
    }
    for j in 2..=p {
        let s = (2.0 * (2 * j - 1) as f64).sqrt();
        values[j] = (leg[j] - leg[j - 2]) / s;
        derivs[j] = ((2 * j - 1) as f64 / 2.0).sqrt() * leg[j - 1];
    }
}

/// Second derivatives of [`shape_functions`] on `[−1, 1]`: zero for the hats,
/// `√((2j−1)/2)·P'_{j−1}` for bubble `j`.
pub fn shape_second_derivatives(p: usize, xi: f64, second: &mut [f64]) {
    second[0] = 0.0;
    second[1] = 0.0;
    if p < 2 {
        return;
    }
    let mut leg = [0.0f64; 34];
    let mut dleg = [0.0f64; 34];
    leg[0] = 1.0;
    leg[1] = xi;
    dleg[1] = 1.0;
    for j in 2..p {
        leg[j] = ((2 * j - 1) as f64 * xi * leg[j - 1] - (j - 1) as f64 * leg[j - 2]) / j as f64;
        dleg[j] = dleg[j - 2] + (2 * j - 1) as f64 * leg[j - 1];
    }
    for j in 2..=p {
        second[j] = ((2 * j - 1) as f64 / 2.0).sqrt() * dleg[j - 1];
    }
}
