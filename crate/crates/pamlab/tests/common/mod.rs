//! Independent reference computations for the integration tests.
#![allow(dead_code)]

/// Composite Simpson rule with n (even) subintervals.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let x = a + i as f64 * h;
        s += if i % 2 == 1 { 4.0 * f(x) } else { 2.0 * f(x) };
    }
    s * h / 3.0
}

/// Lowest eigenvalue of a symmetric tridiagonal matrix with constant off-diagonal `off`,
/// by bisection on the Sturm count.
pub fn tridiag_lowest(diag: &[f64], off: f64) -> f64 {
    let count = |x: f64| {
        let mut q = 1.0;
        let mut c = 0;
        for (i, d) in diag.iter().enumerate() {
            q = d - x - if i == 0 { 0.0 } else { off * off / q };
            if q == 0.0 {
                q = 1e-300;
            }
            if q < 0.0 {
                c += 1;
            }
        }
        c
    };
    let mut lo = diag.iter().copied().fold(f64::INFINITY, f64::min) - 2.0 * off.abs();
    let mut hi = diag.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 2.0 * off.abs();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if count(mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
