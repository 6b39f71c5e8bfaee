//! Laplace transform of the empirical IDS against the bridge representation of the heat trace.
//!
//! ∫e^{−tl}dN(l) = (4πκt)^{−d/2}·E[E^{0,0}_{bridge}(e^{−∫₀ᵗV(w_s)ds})], checked box by box: the left side
//! from Sturm counts of the lattice operator, the right side from bridges started at points of the
//! same box (translation invariance turns the expectation into a spatial average).

use super::{assemble, ids_environment, Bc};
use crate::error::{invalid, PamError, Result};
use crate::fk::GridField;
use crate::model::{shape_hat_r2, ModelParams};
use crate::ppp::{BoxRegion, PointConfig};
use crate::quad::gauss_legendre;
use crate::rng::rng_stream;
use crate::stats::{mean_stderr, MeanEstimate};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceOpts {
    pub ts: Vec<f64>,
    pub n_env: usize,
    pub h: f64,
    pub buffer: f64,
    pub seed: u64,
    /// bridge start points per environment and time
    pub n_starts: usize,
    pub dt: f64,
    /// half-width of the window of points seen by a bridge; the rest enters through its mean
    pub window: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaplacePoint {
    pub t: f64,
    /// ∫e^{−tl}dN_emp(l), averaged over environments
    pub lhs: MeanEstimate,
    /// (4πκt)^{−d/2} times the bridge average
    pub rhs: MeanEstimate,
    /// |lhs − rhs| / lhs
    pub rel_diff: f64,
}

// u-panels for ∫₀¹ N(−ln u / t) du; N saturates quickly as u → 0
const U_BREAKS: [f64; 7] = [0.0, 1e-9, 1e-6, 1e-3, 0.05, 0.3, 1.0];
const U_ORDER: usize = 24;

fn u_nodes() -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(U_ORDER);
    let mut us = Vec::new();
    let mut ws = Vec::new();
    for p in U_BREAKS.windows(2) {
        let (a, b) = (p[0], p[1]);
        for (xi, wi) in x.iter().zip(&w) {
            us.push(0.5 * (a + b) + 0.5 * (b - a) * xi);
            ws.push(0.5 * (b - a) * wi);
        }
    }
    (us, ws)
}

/// (1/|D|)·Σₖ e^{−tλₖ} for the Dirichlet lattice operator on `field`, written as ∫₀¹ N(−ln u/t)du.
pub fn laplace_transform_counts(field: &GridField, kappa: f64, ts: &[f64]) -> Result<Vec<f64>> {
    if field.d() != 1 {
        return Err(PamError::Unsupported("Laplace transform of the IDS is implemented for d = 1".into()));
    }
    if ts.iter().any(|&t| !(t > 0.0)) {
        return Err(invalid("t", "need t > 0"));
    }
    let op = assemble(field, Bc::Dirichlet, kappa)?;
    let tri = op.tridiag()?;
    let vol = (field.dims[0] + 1) as f64 * field.h;
    let (us, ws) = u_nodes();
    Ok(ts
        .iter()
        .map(|&t| {
            let lambdas: Vec<f64> = us.iter().map(|u| -u.ln() / t).collect();
            let counts = tri.count_below_many(&lambdas);
            counts.iter().zip(&ws).map(|(&c, w)| c as f64 * w).sum::<f64>() / vol
        })
        .collect())
}

/// Mean of the points of [a, b] on each side, a < b, both measured from the bridge start.
fn side_mean(params: &ModelParams, a: f64, b: f64) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    let p = params.alpha - 1.0;
    params.nu * (a.powf(-p) - b.powf(-p)) / p
}

/// Bridge functional started at x with the points of `pts` (sorted, d = 1) plus a constant `offset`.
fn bridge_log_functional<R: Rng + ?Sized>(alpha: f64, pts: &[f64], offset: f64, x: f64, t: f64, kappa: f64, dt: f64, rng: &mut R) -> f64 {
    let steps = ((t / dt).round() as usize).max(1);
    let dt = t / steps as f64;
    let sd = (2.0 * kappa * dt).sqrt();
    let pot = |y: f64| pts.iter().map(|p| shape_hat_r2(alpha, (p - y) * (p - y))).sum::<f64>() + offset;
    let mut w = 0.0;
    let mut acc = 0.5 * pot(x);
    for k in 1..=steps {
        let remaining = t - (k - 1) as f64 * dt;
        let s = sd * ((remaining - dt) / remaining).max(0.0).sqrt();
        let z: f64 = StandardNormal.sample(rng);
        w += -w * dt / remaining + s * z;
        let v = pot(x + w);
        acc += if k == steps { 0.5 * v } else { v };
    }
    -acc * dt
}

/// (1/|D|)∫_D E^{x,x}_{bridge}[e^{−∫V}]dx for one environment, by importance sampling of the start
/// node with probability ∝ e^{−tV} on the lattice and a uniform jitter inside the cell.
#[allow(clippy::too_many_arguments)]
pub fn bridge_trace_density(
    params: &ModelParams,
    config: &PointConfig,
    field: &GridField,
    t: f64,
    n_starts: usize,
    dt: f64,
    window: f64,
    seed: u64,
) -> Result<f64> {
    if field.d() != 1 || config.d != 1 {
        return Err(PamError::Unsupported("bridge trace is implemented for d = 1".into()));
    }
    if n_starts == 0 || !(dt > 0.0) || !(window > 0.0) {
        return Err(invalid("n_starts", "need n_starts > 0, dt > 0, window > 0"));
    }
    let vmin = field.values.iter().copied().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = field.values.iter().map(|v| (-t * (v - vmin)).exp()).collect();
    let mut cdf = Vec::with_capacity(weights.len());
    let mut z = 0.0;
    for w in &weights {
        z += w;
        cdf.push(z);
    }
    let vol = (field.dims[0] + 1) as f64 * field.h;
    let (lo, hi) = (config.sample_box.lower[0], config.sample_box.upper[0]);
    let mut rng = rng_stream(seed, 0);
    let mut total = 0.0;
    for _ in 0..n_starts {
        let u: f64 = rng.random::<f64>() * z;
        let i = cdf.partition_point(|&c| c < u).min(cdf.len() - 1);
        let x = field.coords(i)[0] + (rng.random::<f64>() - 0.5) * field.h;
        let (a, b) = ((x - window).max(lo), (x + window).min(hi));
        let first = config.points.partition_point(|&p| p < a);
        let last = config.points.partition_point(|&p| p <= b);
        let offset = config.tail_compensation + side_mean(params, x - a, x - lo) + side_mean(params, b - x, hi - x);
        let log_f = bridge_log_functional(params.alpha, &config.points[first..last], offset, x, t, params.kappa, dt, &mut rng);
        // F(x) / q(x) with q = w_i / (z h)
        total += (log_f + t * (field.values[i] - vmin)).exp() * z * field.h / vol;
    }
    Ok(total / n_starts as f64)
}

/// Both sides of the identity on `n_env` IDS environments of (−R, R).
pub fn ids_laplace_identity(params: &ModelParams, r: f64, opts: &LaplaceOpts) -> Result<Vec<LaplacePoint>> {
    if params.d != 1 {
        return Err(PamError::Unsupported("Laplace identity check is implemented for d = 1".into()));
    }
    if opts.ts.is_empty() || opts.n_env < 2 {
        return Err(invalid("ts", "need a nonempty t grid and at least 2 environments"));
    }
    let per_env: Vec<(Vec<f64>, Vec<f64>)> = (0..opts.n_env)
        .into_par_iter()
        .map(|e| -> Result<(Vec<f64>, Vec<f64>)> {
            let config = ids_environment(params, r, opts.buffer, opts.seed, e as u64)?;
            let field = GridField::from_config(&config, &BoxRegion::cube(1, r)?, opts.h)?;
            let lhs = laplace_transform_counts(&field, params.kappa, &opts.ts)?;
            let rhs = opts
                .ts
                .iter()
                .enumerate()
                .map(|(k, &t)| {
                    let s = crate::rng::child_seed(opts.seed ^ 0x6c61_706c, (e * opts.ts.len() + k) as u64);
                    let tr = bridge_trace_density(params, &config, &field, t, opts.n_starts, opts.dt, opts.window, s)?;
                    Ok(tr * (4.0 * std::f64::consts::PI * params.kappa * t).powf(-0.5))
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok((lhs, rhs))
        })
        .collect::<Result<_>>()?;
    opts.ts
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let l: Vec<f64> = per_env.iter().map(|p| p.0[k]).collect();
            let rr: Vec<f64> = per_env.iter().map(|p| p.1[k]).collect();
            let lhs = mean_stderr(&l)?;
            let rhs = mean_stderr(&rr)?;
            let rel_diff = (lhs.mean - rhs.mean).abs() / lhs.mean;
            Ok(LaplacePoint { t, lhs, rhs, rel_diff })
        })
        .collect()
}
