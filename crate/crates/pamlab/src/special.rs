//! Gamma function and a few helpers.

use crate::error::{invalid, Result};
use std::f64::consts::PI;

// Lanczos approximation, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

fn lanczos_sum(z: f64) -> f64 {
    // z here is the shifted argument (Γ(z+1) form)
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    acc
}

fn gamma_unchecked(z: f64) -> f64 {
    if z < 0.5 {
        PI / ((PI * z).sin() * gamma_unchecked(1.0 - z))
    } else if z > 140.0 {
        ln_gamma_unchecked(z).exp()
    } else {
        let zm = z - 1.0;
        let t = zm + LANCZOS_G + 0.5;
        (2.0 * PI).sqrt() * t.powf(zm + 0.5) * (-t).exp() * lanczos_sum(zm)
    }
}

fn ln_gamma_unchecked(z: f64) -> f64 {
    if z < 0.5 {
        (PI / (PI * z).sin()).ln() - ln_gamma_unchecked(1.0 - z)
    } else {
        let zm = z - 1.0;
        let t = zm + LANCZOS_G + 0.5;
        0.5 * (2.0 * PI).ln() + (zm + 0.5) * t.ln() - t + lanczos_sum(zm).ln()
    }
}

/// Γ(z) for z > 0, relative accuracy about 1e-15.
pub fn gamma_fn(z: f64) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(invalid("z", format!("gamma requires z > 0, got {z}")));
    }
    Ok(gamma_unchecked(z))
}

/// ln Γ(z) for z > 0.
pub fn ln_gamma(z: f64) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(invalid("z", format!("ln_gamma requires z > 0, got {z}")));
    }
    Ok(ln_gamma_unchecked(z))
}

/// Γ for arguments already known to be positive.
pub(crate) fn gamma(z: f64) -> f64 {
    debug_assert!(z > 0.0);
    gamma_unchecked(z)
}

/// -expm1(-a)/a with the limit 1 at a = 0.
#[inline]
pub(crate) fn one_minus_exp_over(a: f64) -> f64 {
    if a.abs() < 1e-300 {
        1.0
    } else {
        -(-a).exp_m1() / a
    }
}
