use super::{assemble, count_below_many, Bc};
use crate::error::{invalid, Result};
use crate::fk::GridField;
use crate::model::ModelParams;
use crate::ppp::{sample_homogeneous, BoxRegion, PointConfig};
use crate::rng::rng_stream;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Empirical integrated density of states on (−R, R)^d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdsCurve {
    pub lambdas: Vec<f64>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub r: f64,
    pub n_env: usize,
    pub bc: Bc,
    /// counts[e][j]: eigenvalues below lambdas[j] in environment e
    pub counts: Vec<Vec<usize>>,
    /// κ(π/h)² is not at least 10·max λ
    pub under_resolved: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdsOpts {
    pub lambdas: Vec<f64>,
    pub n_env: usize,
    pub h: f64,
    pub bc: Bc,
    /// points are sampled in (−R−buffer, R+buffer)^d; the rest of space enters as its mean
    pub buffer: f64,
    pub seed: u64,
}

impl IdsCurve {
    /// CSV with header `lambda,mean_N,stderr,R,n_env,bc`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("lambda,mean_N,stderr,R,n_env,bc\n");
        let bc = match self.bc {
            Bc::Dirichlet => "dirichlet",
            Bc::Neumann => "neumann",
        };
        for j in 0..self.lambdas.len() {
            let _ = writeln!(
                s,
                "{:.16e},{:.16e},{:.16e},{:.16e},{},{}",
                self.lambdas[j], self.mean[j], self.stderr[j], self.r, self.n_env, bc
            );
        }
        s
    }
}

/// Environment e of an IDS run: Poisson points in (−R−buffer, R+buffer)^d with compensation for
/// evaluation in (−R, R)^d. Stream e of `seed`.
pub fn ids_environment(params: &ModelParams, r: f64, buffer: f64, seed: u64, e: u64) -> Result<PointConfig> {
    let outer = BoxRegion::cube(params.d, r + buffer)?;
    let mut rng = rng_stream(seed, e);
    let config = sample_homogeneous(params, &outer, &mut rng)?;
    config.with_compensation(params, BoxRegion::cube(params.d, r)?)
}

/// Monte Carlo IDS for a single box size.
pub fn ids_estimate(params: &ModelParams, r: f64, opts: &IdsOpts) -> Result<IdsCurve> {
    Ok(ids_estimate_paired(params, &[r], opts)?.remove(0))
}

/// IDS for several box sizes on shared environments: each environment is sampled once for the
/// largest R and every smaller box is the restriction of the same lattice.
pub fn ids_estimate_paired(params: &ModelParams, rs: &[f64], opts: &IdsOpts) -> Result<Vec<IdsCurve>> {
    if rs.is_empty() || rs.iter().any(|&r| !(r > 0.0)) {
        return Err(invalid("R", "need positive box sizes"));
    }
    if opts.lambdas.is_empty() || opts.lambdas.iter().any(|l| !l.is_finite()) {
        return Err(invalid("lambdas", "need a nonempty finite grid"));
    }
    if opts.n_env < 2 {
        return Err(invalid("n_env", "need at least 2 environments"));
    }
    if !(opts.buffer > 0.0) {
        return Err(invalid("buffer", "need a positive buffer"));
    }
    let r_max = rs.iter().copied().fold(0.0, f64::max);
    if rs.iter().any(|&r| r < 4.0 * opts.h) {
        return Err(invalid("R", "box must span several lattice cells"));
    }
    let lam_max = opts.lambdas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let under_resolved = params.kappa * (std::f64::consts::PI / opts.h).powi(2) < 10.0 * lam_max;

    let per_env: Vec<Vec<Vec<usize>>> = (0..opts.n_env)
        .into_par_iter()
        .map(|e| -> Result<Vec<Vec<usize>>> {
            let config = ids_environment(params, r_max, opts.buffer, opts.seed, e as u64)?;
            let field = GridField::from_config(&config, &BoxRegion::cube(params.d, r_max)?, opts.h)?;
            rs.iter()
                .map(|&r| {
                    let sub = restrict_cube(&field, r)?;
                    let op = assemble(&sub, opts.bc, params.kappa)?;
                    count_below_many(&op, &opts.lambdas)
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let n = opts.n_env as f64;
    rs.iter()
        .enumerate()
        .map(|(ri, &r)| {
            let vol = (2.0 * r).powi(params.d as i32);
            let counts: Vec<Vec<usize>> = per_env.iter().map(|c| c[ri].clone()).collect();
            let mut mean = vec![0.0; opts.lambdas.len()];
            let mut stderr = vec![0.0; opts.lambdas.len()];
            for j in 0..opts.lambdas.len() {
                let vals: Vec<f64> = counts.iter().map(|c| c[j] as f64 / vol).collect();
                let m = vals.iter().sum::<f64>() / n;
                let var = vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
                mean[j] = m;
                stderr[j] = (var / n).sqrt();
            }
            Ok(IdsCurve {
                lambdas: opts.lambdas.clone(),
                mean,
                stderr,
                r,
                n_env: opts.n_env,
                bc: opts.bc,
                counts,
                under_resolved,
            })
        })
        .collect()
}

/// Sub-lattice of the nodes strictly inside (−r, r)^d.
pub fn restrict_cube(field: &GridField, r: f64) -> Result<GridField> {
    let d = field.d();
    let h = field.h;
    let mut ranges = Vec::with_capacity(d);
    for k in 0..d {
        let lo = field.lower[k];
        // node i is at lo + (i+1)h
        let mut first = 0;
        while first < field.dims[k] && lo + (first + 1) as f64 * h <= -r + 1e-9 * h {
            first += 1;
        }
        let mut last = first;
        while last < field.dims[k] && lo + (last + 1) as f64 * h < r - 1e-9 * h {
            last += 1;
        }
        if last < first + 3 {
            return Err(invalid("R", "restricted box has fewer than 3 nodes per axis"));
        }
        ranges.push((first, last));
    }
    let dims: Vec<usize> = ranges.iter().map(|(a, b)| b - a).collect();
    let lower: Vec<f64> = (0..d).map(|k| field.lower[k] + ranges[k].0 as f64 * h).collect();
    let n: usize = dims.iter().product();
    let mut values = Vec::with_capacity(n);
    let mut idx = vec![0usize; d];
    for _ in 0..n {
        let mut k = 0;
        for a in 0..d {
            k = k * field.dims[a] + ranges[a].0 + idx[a];
        }
        values.push(field.values[k]);
        for a in (0..d).rev() {
            idx[a] += 1;
            if idx[a] < dims[a] {
                break;
            }
            idx[a] = 0;
        }
    }
    GridField::new(lower, h, dims, values)
}
