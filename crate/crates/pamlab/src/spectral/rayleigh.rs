use crate::error::{invalid, Result};
use crate::fk::GridField;

/// Rayleigh quotient of the clipped Gaussian trial function on the lattice ball of `radius` around
/// `center`.
///
/// The trial function is φ = (g − g(radius))·1_ball with g(x) = exp(−|x−center|²/(2 width²)). The
/// quotient is the lattice form Σ κ(φᵢ−φⱼ)²/h² + Σ Vφ² over Σ φ², summed over nearest-neighbour edges
/// with φ = 0 outside the ball, so it is exactly the Rayleigh quotient of the Dirichlet ball operator.
pub fn rayleigh_trial(field: &GridField, kappa: f64, center: &[f64], width: f64, radius: f64) -> Result<f64> {
    if !(width > 0.0) {
        return Err(invalid("width", "need width > 0"));
    }
    if !(radius > 0.0) {
        return Err(invalid("radius", "need radius > 0"));
    }
    let d = field.d();
    if center.len() != d {
        return Err(invalid("center", "dimension mismatch"));
    }
    let upper = field.upper();
    for k in 0..d {
        if center[k] - radius <= field.lower[k] + field.h || center[k] + radius >= upper[k] - field.h {
            return Err(invalid("radius", "ball exits the grid"));
        }
    }
    let g = |r2: f64| (-r2 / (2.0 * width * width)).exp();
    let g_edge = g(radius * radius);
    let n = field.len();
    let phi: Vec<f64> = (0..n)
        .map(|k| {
            let x = field.coords(k);
            let r2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
            if super::in_ball(r2, radius, field.h) {
                g(r2) - g_edge
            } else {
                0.0
            }
        })
        .collect();
    let strides: Vec<usize> = (0..d).map(|i| field.dims[i + 1..].iter().product()).collect();
    let c = kappa / (field.h * field.h);
    let (mut num, mut den) = (0.0, 0.0);
    for k in 0..n {
        let p = phi[k];
        den += p * p;
        num += field.values[k] * p * p;
        // each edge once, towards the + neighbour; the ball never touches the lattice boundary
        for i in 0..d {
            let idx = (k / strides[i]) % field.dims[i];
            if idx + 1 < field.dims[i] {
                let q = phi[k + strides[i]];
                num += c * (p - q) * (p - q);
            }
            if idx == 0 {
                num += c * p * p;
            }
        }
    }
    if !(den > 0.0) {
        return Err(invalid("radius", "ball contains no node with positive trial value"));
    }
    Ok(num / den)
}
