//! Lanczos with selective reorthogonalization for the lowest eigenpair of a symmetric operator.

use crate::error::{PamError, Result};

/// Eigen-decomposition of a small symmetric tridiagonal matrix by implicit QL.
/// Returns eigenvalues and column-major eigenvectors (z[k*n + i] is component i of vector k).
pub(crate) fn tridiag_eigen(diag: &[f64], off: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(&off[..n - 1]);
    let mut z = vec![0.0; n * n];
    for i in 0..n {
        z[i * n + i] = 1.0;
    }
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                break;
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    let zk1 = z[(i + 1) * n + k];
                    let zk = z[i * n + k];
                    z[(i + 1) * n + k] = s * zk + c * zk1;
                    z[i * n + k] = c * zk - s * zk1;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    (d, z)
}

pub(crate) struct LanczosOutcome {
    pub value: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// Lowest eigenpair of the operator `apply` (y = A x) of dimension n.
///
/// Ritz vectors whose residual bound |β_j s_j| drops below √ε‖A‖ are kept and every new Lanczos
/// vector is orthogonalized against them (Parlett–Scott), which suppresses spurious copies.
/// The basis is restarted from the current best Ritz vector after `max_basis` steps.
pub(crate) fn lanczos_lowest<F: Fn(&[f64], &mut [f64])>(
    apply: F,
    start: Vec<f64>,
    norm_a: f64,
    tol: f64,
    max_basis: usize,
    max_restarts: usize,
) -> Result<LanczosOutcome> {
    let n = start.len();
    let mut q = start;
    normalize(&mut q);
    let mut total_iters = 0;
    let sqrt_eps = f64::EPSILON.sqrt();
    let mut best = (f64::INFINITY, q.clone(), f64::INFINITY);
    let m_cap = max_basis.min(n).max(1);
    for _restart in 0..=max_restarts {
        let mut basis: Vec<Vec<f64>> = vec![q.clone()];
        let mut alpha = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut locked: Vec<Vec<f64>> = Vec::new();
        let mut w = vec![0.0; n];
        let mut ritz = (f64::INFINITY, vec![1.0], f64::INFINITY);
        for j in 0..m_cap {
            total_iters += 1;
            apply(&basis[j], &mut w);
            let a = dot(&w, &basis[j]);
            alpha.push(a);
            for i in 0..n {
                w[i] -= a * basis[j][i];
                if j > 0 {
                    w[i] -= beta[j - 1] * basis[j - 1][i];
                }
            }
            for y in &locked {
                let c = dot(&w, y);
                w.iter_mut().zip(y).for_each(|(x, yi)| *x -= c * yi);
            }
            let b = dot(&w, &w).sqrt();
            let check = j + 1 == m_cap || b <= sqrt_eps * norm_a || (j + 1) % 8 == 0;
            if check {
                let k = j + 1;
                let (vals, vecs) = tridiag_eigen(&alpha, &beta);
                let mut order: Vec<usize> = (0..k).collect();
                order.sort_by(|x, y| vals[*x].total_cmp(&vals[*y]));
                let lo = order[0];
                let bound = b * vecs[lo * k + k - 1].abs();
                ritz = (vals[lo], vecs[lo * k..(lo + 1) * k].to_vec(), bound);
                // lock converged Ritz vectors other than the target
                locked.clear();
                for &idx in &order[1..] {
                    if b * vecs[idx * k + k - 1].abs() <= sqrt_eps * norm_a {
                        let mut y = vec![0.0; n];
                        for (c, v) in vecs[idx * k..(idx + 1) * k].iter().zip(&basis) {
                            y.iter_mut().zip(v).for_each(|(yi, vi)| *yi += c * vi);
                        }
                        normalize(&mut y);
                        locked.push(y);
                    }
                }
                if bound <= tol * norm_a || b <= sqrt_eps * norm_a * 1e-6 {
                    break;
                }
            }
            if b == 0.0 {
                break;
            }
            beta.push(b);
            let next: Vec<f64> = w.iter().map(|x| x / b).collect();
            basis.push(next);
        }
        let k = alpha.len();
        let mut y = vec![0.0; n];
        for (c, v) in ritz.1.iter().zip(&basis[..k]) {
            y.iter_mut().zip(v).for_each(|(yi, vi)| *yi += c * vi);
        }
        normalize(&mut y);
        let mut ay = vec![0.0; n];
        apply(&y, &mut ay);
        let lam = dot(&y, &ay);
        let res = ay.iter().zip(&y).map(|(a, b)| (a - lam * b).powi(2)).sum::<f64>().sqrt();
        if res < best.2 {
            best = (lam, y.clone(), res);
        }
        if res <= tol * norm_a {
            return Ok(LanczosOutcome {
                value: lam,
                vector: y,
                residual: res,
                iterations: total_iters,
            });
        }
        q = y;
    }
    Err(PamError::EigenNonConvergence {
        iterations: total_iters,
        eigenvalue: best.0,
        residual: best.2,
        eigenvector: best.1,
    })
}
