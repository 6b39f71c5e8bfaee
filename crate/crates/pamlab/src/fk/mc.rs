use super::{log_mean_exp, Method, SurvivalEstimate};
use crate::error::{invalid, Result};
use crate::ppp::PointConfig;
use crate::rng::rng_stream;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathOpts {
    pub t: f64,
    pub kappa: f64,
    pub dt: f64,
    pub n_paths: usize,
    pub seed: u64,
}

fn check(opts: &PathOpts) -> Result<usize> {
    if opts.n_paths < 100 {
        return Err(invalid("n_paths", "at least 100 paths are needed for a confidence interval"));
    }
    if !(opts.t > 0.0) || !(opts.dt > 0.0) || !(opts.kappa > 0.0) {
        return Err(invalid("dt", "need t, dt, kappa > 0"));
    }
    Ok(((opts.t / opts.dt).round() as usize).max(1))
}

/// E₀[exp(−∫₀ᵗ V(w_s)ds)] over Brownian paths with generator κΔ, trapezoid rule in time.
/// Path i draws from `rng_stream(seed, i)`.
pub fn mc_survival(config: &PointConfig, opts: PathOpts) -> Result<SurvivalEstimate> {
    run(config, opts, false)
}

/// Same functional under the Brownian bridge from 0 back to 0 at time t.
pub fn mc_bridge_survival(config: &PointConfig, opts: PathOpts) -> Result<SurvivalEstimate> {
    run(config, opts, true)
}

fn run(config: &PointConfig, opts: PathOpts, bridge: bool) -> Result<SurvivalEstimate> {
    let steps = check(&opts)?;
    let d = config.d;
    let dt = opts.t / steps as f64;
    let sd = (2.0 * opts.kappa * dt).sqrt();
    let logs: Vec<f64> = (0..opts.n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_stream(opts.seed, i as u64);
            let mut w = vec![0.0; d];
            let mut acc = 0.5 * config.potential_unchecked(&w);
            for k in 1..=steps {
                if bridge {
                    let remaining = opts.t - (k - 1) as f64 * dt;
                    let pull = dt / remaining;
                    let s = sd * ((remaining - dt) / remaining).max(0.0).sqrt();
                    for c in w.iter_mut() {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        *c += -*c * pull + s * z;
                    }
                } else {
                    for c in w.iter_mut() {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        *c += sd * z;
                    }
                }
                let v = config.potential_unchecked(&w);
                acc += if k == steps { 0.5 * v } else { v };
            }
            -acc * dt
        })
        .collect();
    let (log_value, rel, ess) = log_mean_exp(&logs);
    Ok(SurvivalEstimate {
        log_value,
        rel_std_err: rel,
        method: if bridge { Method::Bridge } else { Method::Mc },
        t: opts.t,
        dt,
        h: None,
        n_paths: Some(opts.n_paths),
        ess: Some(ess),
        reliable: true,
    })
}
