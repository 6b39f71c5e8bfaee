//! Symmetric tridiagonal matrices: Sturm counts, bisection, shifted solves.

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiag {
    pub diag: Vec<f64>,
    /// off[i] couples i and i+1
    pub off: Vec<f64>,
}

const PIVMIN: f64 = 1e-290;

impl SymTridiag {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(invalid("diag", "empty matrix"));
        }
        if off.len() + 1 != diag.len() {
            return Err(invalid("off", "off-diagonal must have length n-1"));
        }
        if diag.iter().chain(off.iter()).any(|v| !v.is_finite()) {
            return Err(invalid("diag", "non-finite entry"));
        }
        Ok(Self { diag, off })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Number of eigenvalues strictly below `lambda` (negative LDLᵀ pivots).
    ///
    /// A pivot that is exactly zero is replaced by +pivmin, i.e. λ is nudged downward,
    /// so an eigenvalue equal to λ is not counted.
    pub fn count_below(&self, lambda: f64) -> usize {
        let mut count = 0usize;
        let mut q = self.diag[0] - lambda;
        if q == 0.0 {
            q = PIVMIN;
        }
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.diag.len() {
            let e = self.off[i - 1];
            q = (self.diag[i] - lambda) - e * e / q;
            if q == 0.0 {
                q = PIVMIN;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// `count_below` for many thresholds, interleaving independent recurrences.
    pub fn count_below_many(&self, lambdas: &[f64]) -> Vec<usize> {
        const W: usize = 8;
        let mut out = Vec::with_capacity(lambdas.len());
        let e2: Vec<f64> = std::iter::once(0.0).chain(self.off.iter().map(|e| e * e)).collect();
        for chunk in lambdas.chunks(W) {
            let k = chunk.len();
            let mut lam = [0.0; W];
            lam[..k].copy_from_slice(chunk);
            let mut q = [1.0f64; W];
            let mut cnt = [0usize; W];
            for (d, e2) in self.diag.iter().zip(&e2) {
                for j in 0..W {
                    let mut v = (d - lam[j]) - e2 / q[j];
                    if v == 0.0 {
                        v = PIVMIN;
                    }
                    cnt[j] += (v < 0.0) as usize;
                    q[j] = v;
                }
            }
            out.extend_from_slice(&cnt[..k]);
        }
        out
    }

    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut r = 0.0;
            if i > 0 {
                r += self.off[i - 1].abs();
            }
            if i + 1 < n {
                r += self.off[i].abs();
            }
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// k-th smallest eigenvalue (k = 1, 2, ...) by bisection on the Sturm count.
    pub fn eigenvalue_bisect(&self, k: usize) -> f64 {
        assert!(k >= 1 && k <= self.len());
        let (mut lo, mut hi) = self.gershgorin();
        let pad = 1e-12 * (hi - lo).abs().max(1.0);
        lo -= pad;
        hi += pad;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) >= k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        let n = self.len();
        for i in 0..n {
            let mut s = self.diag[i] * x[i];
            if i > 0 {
                s += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                s += self.off[i] * x[i + 1];
            }
            y[i] = s;
        }
    }

    /// Solves (A - σI)x = b by Gaussian elimination without pivoting.
    /// Intended for σ below the spectrum, where A - σI is positive definite.
    pub fn solve_shifted(&self, sigma: f64, b: &[f64], x: &mut [f64], scratch: &mut [f64]) {
        let n = self.len();
        let c = scratch;
        let mut denom = self.diag[0] - sigma;
        c[0] = if n > 1 { self.off[0] / denom } else { 0.0 };
        x[0] = b[0] / denom;
        for i in 1..n {
            denom = (self.diag[i] - sigma) - self.off[i - 1] * c[i - 1];
            if i + 1 < n {
                c[i] = self.off[i] / denom;
            }
            x[i] = (b[i] - self.off[i - 1] * x[i - 1]) / denom;
        }
        for i in (0..n - 1).rev() {
            x[i] -= c[i] * x[i + 1];
        }
    }

    /// Rayleigh quotient xᵀAx / xᵀx.
    pub fn rayleigh(&self, x: &[f64]) -> f64 {
        let mut y = vec![0.0; x.len()];
        self.matvec(x, &mut y);
        let num: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let den: f64 = x.iter().map(|a| a * a).sum();
        num / den
    }

    pub fn norm_bound(&self) -> f64 {
        let (lo, hi) = self.gershgorin();
        lo.abs().max(hi.abs())
    }
}

/// Solves a general tridiagonal system (sub, diag, sup) by the Thomas algorithm.
pub fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64], x: &mut [f64], scratch: &mut [f64]) {
    let n = diag.len();
    let c = scratch;
    let mut denom = diag[0];
    c[0] = if n > 1 { sup[0] / denom } else { 0.0 };
    x[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - sub[i - 1] * c[i - 1];
        if i + 1 < n {
            c[i] = sup[i] / denom;
        }
        x[i] = (rhs[i] - sub[i - 1] * x[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian(n: usize) -> SymTridiag {
        SymTridiag::new(vec![2.0; n], vec![-1.0; n - 1]).unwrap()
    }

    #[test]
    fn counts_match_closed_form() {
        let n = 50;
        let a = laplacian(n);
        let ev: Vec<f64> = (1..=n)
            .map(|k| 2.0 - 2.0 * (k as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos())
            .collect();
        for lam in [0.01, 0.5, 1.0, 2.0, 3.3, 4.1] {
            let want = ev.iter().filter(|&&e| e < lam).count();
            assert_eq!(a.count_below(lam), want);
        }
        let many = a.count_below_many(&[0.01, 0.5, 1.0, 2.0, 3.3, 4.1, 1.7, 0.2, 2.2]);
        for (l, c) in [0.01, 0.5, 1.0, 2.0, 3.3, 4.1, 1.7, 0.2, 2.2].iter().zip(many) {
            assert_eq!(c, a.count_below(*l));
        }
        let e1 = a.eigenvalue_bisect(1);
        assert!((e1 - ev[0]).abs() < 1e-14);
    }

    #[test]
    fn shifted_solve() {
        let a = laplacian(20);
        let b: Vec<f64> = (0..20).map(|i| (i as f64).sin()).collect();
        let mut x = vec![0.0; 20];
        let mut s = vec![0.0; 20];
        a.solve_shifted(-0.3, &b, &mut x, &mut s);
        let mut y = vec![0.0; 20];
        a.matvec(&x, &mut y);
        for i in 0..20 {
            assert!((y[i] + 0.3 * x[i] - b[i]).abs() < 1e-12);
        }
    }
}
