use crate::error::{invalid, Result};
use crate::model::shape_hat_r2;
use crate::ppp::{potential_sum, BoxRegion, PointConfig};
use crate::sum::Neumaier;
use rayon::prelude::*;

/// Potential values on the interior nodes of a uniform lattice.
///
/// Node i along axis k sits at lower[k] + (i+1)·h; the box is [lower, lower + (dims+1)h] and its
/// boundary nodes are not stored. Values are row-major with the last axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub lower: Vec<f64>,
    pub h: f64,
    pub dims: Vec<usize>,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn new(lower: Vec<f64>, h: f64, dims: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if !(h > 0.0) {
            return Err(invalid("h", "spacing must be positive"));
        }
        if dims.is_empty() || dims.len() != lower.len() || dims.iter().any(|&n| n < 3) {
            return Err(invalid("dims", "need at least 3 nodes per axis"));
        }
        if values.len() != dims.iter().product::<usize>() {
            return Err(invalid("values", "length does not match dims"));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(invalid("values", "potential must be finite and nonnegative"));
        }
        Ok(Self { lower, h, dims, values })
    }

    /// Node layout for `region` at spacing h (the last cell may be shorter than the region by < h).
    pub fn layout(region: &BoxRegion, h: f64) -> Result<(Vec<f64>, Vec<usize>)> {
        if !(h > 0.0) {
            return Err(invalid("h", "spacing must be positive"));
        }
        let dims: Vec<usize> = (0..region.dim())
            .map(|k| (((region.upper[k] - region.lower[k]) / h + 1e-9).floor() as usize).saturating_sub(1))
            .collect();
        if dims.iter().any(|&n| n < 3) {
            return Err(invalid("h", "fewer than 3 interior nodes per axis"));
        }
        Ok((region.lower.clone(), dims))
    }

    pub fn from_fn<F: Fn(&[f64]) -> f64 + Sync>(region: &BoxRegion, h: f64, f: F) -> Result<Self> {
        let (lower, dims) = Self::layout(region, h)?;
        let n: usize = dims.iter().product();
        let d = dims.len();
        let values: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|k| {
                let mut x = vec![0.0; d];
                node_coords(&lower, h, &dims, k, &mut x);
                f(&x)
            })
            .collect();
        Self::new(lower, h, dims, values)
    }

    /// Samples the configuration's potential (compensation included) on the lattice of `region`.
    pub fn from_config(config: &PointConfig, region: &BoxRegion, h: f64) -> Result<Self> {
        if !config.eval_region.contains_box(region) {
            return Err(invalid("region", "lattice must lie inside the evaluation region"));
        }
        if config.d == 1 {
            let (lower, dims) = Self::layout(region, h)?;
            let xs: Vec<f64> = (0..dims[0]).map(|i| lower[0] + (i + 1) as f64 * h).collect();
            let mut values = potential_on_line(config.alpha, &config.points, &xs);
            for v in &mut values {
                *v += config.tail_compensation;
            }
            return Self::new(lower, h, dims, values);
        }
        Self::from_fn(region, h, |x| config.potential_unchecked(x))
    }

    pub fn d(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn coords(&self, k: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.d()];
        node_coords(&self.lower, self.h, &self.dims, k, &mut x);
        x
    }

    pub fn upper(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.dims)
            .map(|(l, n)| l + (n + 1) as f64 * self.h)
            .collect()
    }

    /// Index of the node nearest to x, if x lies within the lattice.
    pub fn nearest(&self, x: &[f64]) -> Option<usize> {
        let mut k = 0usize;
        for (i, xi) in x.iter().enumerate() {
            let j = ((xi - self.lower[i]) / self.h).round() as i64 - 1;
            if j < 0 || j >= self.dims[i] as i64 {
                return None;
            }
            k = k * self.dims[i] + j as usize;
        }
        Some(k)
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.lower.clone(), self.h, self.dims.clone(), values)
    }
}

pub(crate) fn node_coords(lower: &[f64], h: f64, dims: &[usize], mut k: usize, x: &mut [f64]) {
    for i in (0..dims.len()).rev() {
        x[i] = lower[i] + ((k % dims[i]) + 1) as f64 * h;
        k /= dims[i];
    }
}

// Block width and near-zone radius of the far-field expansion; (W/2)/NEAR = 1/16.
const BLOCK_W: f64 = 4.0;
const NEAR: f64 = 32.0;
const TERMS: usize = 15;

/// Σᵢ v̂(x − ωᵢ) at every x in `xs` (ascending), for sorted 1-D `points`.
///
/// Large inputs use a local Taylor expansion of the far field around block centres: points farther
/// than NEAR from a block centre contribute Σ_k (α)_k/k! s^k Σ δ^{−α−k}(±1)^k, truncated after
/// TERMS terms with remainder below 1e−16 relative. Near points are summed directly.
pub fn potential_on_line(alpha: f64, points: &[f64], xs: &[f64]) -> Vec<f64> {
    if xs.is_empty() {
        return vec![];
    }
    if points.len() * xs.len() < 4_000_000 || xs[xs.len() - 1] - xs[0] < 4.0 * NEAR {
        return xs.par_iter().map(|&x| potential_sum(alpha, 1, points, &[x])).collect();
    }
    // (α)_k / k!
    let mut coef = [0.0f64; TERMS];
    coef[0] = 1.0;
    for k in 1..TERMS {
        coef[k] = coef[k - 1] * (alpha + (k - 1) as f64) / k as f64;
    }
    let x0 = xs[0];
    let n_blocks = ((xs[xs.len() - 1] - x0) / BLOCK_W).floor() as usize + 1;
    let mut starts = Vec::with_capacity(n_blocks + 1);
    let mut j = 0;
    for b in 0..=n_blocks {
        let edge = x0 + b as f64 * BLOCK_W;
        while j < xs.len() && xs[j] < edge {
            j += 1;
        }
        starts.push(j);
    }
    *starts.last_mut().unwrap() = xs.len();
    let blocks: Vec<Vec<f64>> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let (lo, hi) = (starts[b], starts[b + 1]);
            if lo == hi {
                return vec![];
            }
            let c = x0 + (b as f64 + 0.5) * BLOCK_W;
            let near_lo = points.partition_point(|&p| p <= c - NEAR);
            let near_hi = points.partition_point(|&p| p < c + NEAR);
            let mut sums = [Neumaier::new(); TERMS];
            let mut acc = [0.0f64; TERMS];
            // left far points: δ = c − y, sign (−1)^k
            for (i, &p) in points[..near_lo].iter().enumerate() {
                accumulate(alpha, c - p, -1.0, &mut acc);
                if i % 512 == 511 {
                    flush(&mut acc, &mut sums);
                }
            }
            flush(&mut acc, &mut sums);
            for (i, &p) in points[near_hi..].iter().enumerate() {
                accumulate(alpha, p - c, 1.0, &mut acc);
                if i % 512 == 511 {
                    flush(&mut acc, &mut sums);
                }
            }
            flush(&mut acc, &mut sums);
            let a: Vec<f64> = (0..TERMS).map(|k| coef[k] * sums[k].total()).collect();
            let near = &points[near_lo..near_hi];
            xs[lo..hi]
                .iter()
                .map(|&x| {
                    let s = x - c;
                    let mut far = 0.0;
                    for k in (0..TERMS).rev() {
                        far = far * s + a[k];
                    }
                    let mut direct = 0.0;
                    for &p in near {
                        let r = p - x;
                        direct += shape_hat_r2(alpha, r * r);
                    }
                    direct + far
                })
                .collect()
        })
        .collect();
    blocks.concat()
}

#[inline]
fn accumulate(alpha: f64, delta: f64, sign: f64, acc: &mut [f64; TERMS]) {
    let inv = 1.0 / delta;
    let mut term = if alpha == 2.0 { inv * inv } else { delta.powf(-alpha) };
    let step = sign * inv;
    for a in acc.iter_mut() {
        *a += term;
        term *= step;
    }
}

fn flush(acc: &mut [f64; TERMS], sums: &mut [Neumaier; TERMS]) {
    for (a, s) in acc.iter_mut().zip(sums.iter_mut()) {
        s.add(*a);
        *a = 0.0;
    }
}
