//! Small statistics helpers for the Monte Carlo checks.

use crate::error::{invalid, Result};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

impl MeanEstimate {
    /// Number of standard errors separating the estimate from `x`.
    pub fn z_score(&self, x: f64) -> f64 {
        (self.mean - x) / self.stderr
    }

    /// 95% normal interval.
    pub fn ci95(&self) -> (f64, f64) {
        (self.mean - 1.96 * self.stderr, self.mean + 1.96 * self.stderr)
    }
}

pub fn mean_stderr(xs: &[f64]) -> Result<MeanEstimate> {
    if xs.len() < 2 {
        return Err(invalid("samples", "need at least 2 samples"));
    }
    let n = xs.len() as f64;
    let mean = crate::sum::neumaier_sum(xs.iter().copied()) / n;
    let var = crate::sum::neumaier_sum(xs.iter().map(|x| (x - mean) * (x - mean))) / (n - 1.0);
    Ok(MeanEstimate { mean, stderr: (var / n).sqrt(), n: xs.len() })
}

/// Sample variance with the standard error of the variance estimate (from the fourth central moment).
pub fn variance_stderr(xs: &[f64]) -> Result<MeanEstimate> {
    let m = mean_stderr(xs)?.mean;
    let sq: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    let mut e = mean_stderr(&sq)?;
    let n = xs.len() as f64;
    e.mean *= n / (n - 1.0);
    Ok(e)
}

/// Kolmogorov–Smirnov distance between the empirical law of `xs` and N(mean, sd²).
pub fn ks_normal(xs: &[f64], mean: f64, sd: f64) -> Result<f64> {
    if xs.is_empty() {
        return Err(invalid("samples", "empty sample"));
    }
    let dist = Normal::new(mean, sd).map_err(|e| invalid("sd", e.to_string()))?;
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut d = 0.0f64;
    for (i, x) in v.iter().enumerate() {
        let f = dist.cdf(*x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    Ok(d)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
}

/// Ordinary least squares y = intercept + slope·x.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(invalid("fit", "need at least 2 paired points"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(invalid("fit", "x values are all equal"));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_stderr = if x.len() > 2 {
        let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(LinearFit { slope, intercept, slope_stderr })
}

/// Least squares for y = Σ c_k g_k(x) through the normal equations (few basis functions only).
pub fn least_squares(rows: &[Vec<f64>], y: &[f64]) -> Result<Vec<f64>> {
    let k = rows.first().map_or(0, |r| r.len());
    if k == 0 || rows.len() != y.len() || rows.len() < k {
        return Err(invalid("fit", "need at least as many rows as coefficients"));
    }
    let mut a = vec![vec![0.0; k + 1]; k];
    for (r, yi) in rows.iter().zip(y) {
        for i in 0..k {
            for j in 0..k {
                a[i][j] += r[i] * r[j];
            }
            a[i][k] += r[i] * yi;
        }
    }
    // Gaussian elimination with partial pivoting
    for c in 0..k {
        let p = (c..k).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, p);
        if a[c][c].abs() < 1e-300 {
            return Err(crate::error::PamError::Singular);
        }
        for r in c + 1..k {
            let f = a[r][c] / a[c][c];
            for j in c..=k {
                a[r][j] -= f * a[c][j];
            }
        }
    }
    let mut out = vec![0.0; k];
    for i in (0..k).rev() {
        let s: f64 = (i + 1..k).map(|j| a[i][j] * out[j]).sum();
        out[i] = (a[i][k] - s) / a[i][i];
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 3.0 * v).collect();
        let f = linear_fit(&x, &y).unwrap();
        assert!((f.slope + 3.0).abs() < 1e-12 && (f.intercept - 2.0).abs() < 1e-12);
        let rows: Vec<Vec<f64>> = x.iter().map(|v| vec![1.0, *v, v * v]).collect();
        let y2: Vec<f64> = x.iter().map(|v| 1.0 + 0.5 * v * v).collect();
        let c = least_squares(&rows, &y2).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-9 && c[1].abs() < 1e-9 && (c[2] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn ks_of_quantiles_is_small() {
        let n = 1000;
        let dist = Normal::new(0.0, 1.0).unwrap();
        let xs: Vec<f64> = (0..n).map(|i| dist.inverse_cdf((i as f64 + 0.5) / n as f64)).collect();
        assert!(ks_normal(&xs, 0.0, 1.0).unwrap() <= 0.5 / n as f64 + 1e-9);
    }
}
