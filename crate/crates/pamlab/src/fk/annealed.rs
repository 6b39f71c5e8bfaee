//! Annealed survival E_ν⊗E₀[e^{−∫V(w_s)ds}] through its pathwise Laplace-functional form
//! E₀[exp(−ν∫(1 − e^{−T_y(w)})dy)], T_y(w) = ∫₀ᵗ v̂(w_s − y)ds.

use super::{log_mean_exp, Method, SurvivalEstimate};
use crate::error::{invalid, PamError, Result};
use crate::model::{quadratic_coefficient, shape_hat_r2, ModelParams};
use crate::quad::gauss_legendre;
use crate::rng::rng_stream;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnnealedTilt {
    None,
    /// paths drawn from dW = −θW ds + √(2κ)dB and reweighted
    Ou { theta: f64 },
}

/// θ = 2√(κc)/r(t)²: the OU whose stationary law is the squared ground state of the limiting
/// harmonic problem, rescaled to the survival scale r(t) = t^{(α−d+2)/(4α)}.
pub fn default_ou_theta(params: &ModelParams, t: f64) -> f64 {
    let d = params.df();
    let a = params.alpha;
    let r2 = t.powf((a - d + 2.0) / (2.0 * a));
    2.0 * (params.kappa * quadratic_coefficient(params)).sqrt() / r2
}

const HZ_1D: f64 = 0.05;
const HZ_2D: f64 = 0.1;
const Y_MARGIN: f64 = 8.0;

pub fn annealed_survival_path(
    params: &ModelParams,
    t: f64,
    dt: f64,
    n_paths: usize,
    seed: u64,
    tilt: AnnealedTilt,
) -> Result<SurvivalEstimate> {
    if params.d > 2 {
        return Err(PamError::Unsupported("annealed path estimator needs d <= 2".into()));
    }
    if n_paths < 100 {
        return Err(invalid("n_paths", "at least 100 paths are needed for a confidence interval"));
    }
    if !(t > 0.0) || !(dt > 0.0) {
        return Err(invalid("t", "need t, dt > 0"));
    }
    if let AnnealedTilt::Ou { theta } = tilt {
        if !(theta > 0.0) {
            return Err(invalid("theta", "OU rate must be positive"));
        }
    }
    let steps = ((t / dt).round() as usize).max(1);
    let dt = t / steps as f64;
    let (gl_x, gl_w) = gauss_legendre(48);
    let logs: Vec<f64> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_stream(seed, i as u64);
            let (path, log_lr) = simulate(params, steps, dt, tilt, &mut rng);
            let phi = if params.d == 1 {
                laplace_exponent_1d(params, &path, steps, dt, &gl_x, &gl_w)
            } else {
                laplace_exponent_2d(params, &path, steps, dt, &gl_x, &gl_w)
            };
            log_lr - params.nu * phi
        })
        .collect();
    let (log_value, rel, ess) = log_mean_exp(&logs);
    Ok(SurvivalEstimate {
        log_value,
        rel_std_err: rel,
        method: Method::AnnealedPath,
        t,
        dt,
        h: None,
        n_paths: Some(n_paths),
        ess: Some(ess),
        reliable: ess >= 0.01 * n_paths as f64,
    })
}

/// OU rate with the largest Kish ESS among θ₀2^{−k}, k = 0..5, θ₀ = [`default_ou_theta`], each tried on
/// `n_pilot` paths from stream family `seed`. Ties go to the larger rate.
pub fn pilot_ou_theta(params: &ModelParams, t: f64, dt: f64, n_pilot: usize, seed: u64) -> Result<f64> {
    let th0 = default_ou_theta(params, t);
    let mut best = (f64::NEG_INFINITY, th0);
    for k in 0..6 {
        let theta = th0 * 0.5f64.powi(k);
        let s = annealed_survival_path(params, t, dt, n_pilot, seed, AnnealedTilt::Ou { theta })?;
        let ess = s.ess.unwrap_or(0.0);
        if ess > best.0 {
            best = (ess, theta);
        }
    }
    Ok(best.1)
}

/// Path skeleton (flat, d per time point) and log dP/dQ of the skeleton.
fn simulate<R: rand::Rng>(params: &ModelParams, steps: usize, dt: f64, tilt: AnnealedTilt, rng: &mut R) -> (Vec<f64>, f64) {
    let d = params.d;
    let kappa = params.kappa;
    let mut path = vec![0.0; (steps + 1) * d];
    let var_p = 2.0 * kappa * dt;
    let mut log_lr = 0.0;
    match tilt {
        AnnealedTilt::None => {
            let sd = var_p.sqrt();
            for k in 1..=steps {
                for c in 0..d {
                    let z: f64 = StandardNormal.sample(rng);
                    path[k * d + c] = path[(k - 1) * d + c] + sd * z;
                }
            }
        }
        AnnealedTilt::Ou { theta } => {
            let decay = (-theta * dt).exp();
            let var_q = kappa * -(-2.0 * theta * dt).exp_m1() / theta;
            let sd = var_q.sqrt();
            let log_norm = 0.5 * (var_q / var_p).ln();
            for k in 1..=steps {
                for c in 0..d {
                    let prev = path[(k - 1) * d + c];
                    let z: f64 = StandardNormal.sample(rng);
                    let next = decay * prev + sd * z;
                    path[k * d + c] = next;
                    let jump = next - prev;
                    // log N(next; prev, var_p) − log N(next; decay·prev, var_q)
                    log_lr += log_norm - jump * jump / (2.0 * var_p) + 0.5 * z * z;
                }
            }
        }
    }
    (path, log_lr)
}

fn time_weight(k: usize, steps: usize, dt: f64) -> f64 {
    if k == 0 || k == steps {
        0.5 * dt
    } else {
        dt
    }
}

/// ∫_ℝ(1 − e^{−T_y})dy for a 1-D path, T_y from the cloud-in-cell occupation density.
fn laplace_exponent_1d(params: &ModelParams, path: &[f64], steps: usize, dt: f64, gl_x: &[f64], gl_w: &[f64]) -> f64 {
    let alpha = params.alpha;
    let (lo, hi) = path.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let z0 = lo - HZ_1D;
    let nb = ((hi - z0) / HZ_1D).ceil() as usize + 2;
    let mut occ = vec![0.0; nb];
    for (k, &x) in path.iter().enumerate() {
        let u = (x - z0) / HZ_1D;
        let j = u.floor() as usize;
        let f = u - j as f64;
        let w = time_weight(k, steps, dt);
        occ[j] += w * (1.0 - f);
        occ[j + 1] += w * f;
    }
    let (zs, ws): (Vec<f64>, Vec<f64>) = occ
        .iter()
        .enumerate()
        .filter(|(_, w)| **w > 0.0)
        .map(|(j, w)| (z0 + j as f64 * HZ_1D, *w))
        .unzip();
    let t_at = |y: f64| -> f64 {
        let mut s = 0.0;
        for (z, w) in zs.iter().zip(&ws) {
            let r = z - y;
            s += w * shape_hat_r2(alpha, r * r);
        }
        s
    };
    let y_lo = z0 - Y_MARGIN;
    let y_hi = z0 + nb as f64 * HZ_1D + Y_MARGIN;
    let ny = ((y_hi - y_lo) / HZ_1D).round() as usize;
    let hy = (y_hi - y_lo) / ny as f64;
    let mut inner = 0.0;
    for j in 0..=ny {
        let v = -(-t_at(y_lo + j as f64 * hy)).exp_m1();
        inner += if j == 0 || j == ny { 0.5 * v } else { v };
    }
    inner *= hy;
    // tails: y = edge ± (u^{−γ} − 1), γ = 1/(α − 1)
    let gamma = 1.0 / (alpha - 1.0);
    let mut tails = 0.0;
    for (x, w) in gl_x.iter().zip(gl_w) {
        let u = 0.5 * (x + 1.0);
        let s = u.powf(-gamma);
        let jac = gamma * s / u * 0.5 * w;
        let off = s - 1.0;
        tails += jac * (-(-t_at(y_hi + off)).exp_m1() - (-t_at(y_lo - off)).exp_m1());
    }
    inner + tails
}

/// ∫_{ℝ²}(1 − e^{−T_y})dy in polar coordinates around the path's mean position.
fn laplace_exponent_2d(params: &ModelParams, path: &[f64], steps: usize, dt: f64, gl_x: &[f64], gl_w: &[f64]) -> f64 {
    let alpha = params.alpha;
    let n = steps + 1;
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in path.chunks(2) {
        for c in 0..2 {
            lo[c] = lo[c].min(p[c]);
            hi[c] = hi[c].max(p[c]);
        }
    }
    let z0 = [lo[0] - HZ_2D, lo[1] - HZ_2D];
    let nb = [
        ((hi[0] - z0[0]) / HZ_2D).ceil() as usize + 2,
        ((hi[1] - z0[1]) / HZ_2D).ceil() as usize + 2,
    ];
    let mut occ = vec![0.0; nb[0] * nb[1]];
    for (k, p) in path.chunks(2).enumerate() {
        let u = [(p[0] - z0[0]) / HZ_2D, (p[1] - z0[1]) / HZ_2D];
        let j = [u[0].floor() as usize, u[1].floor() as usize];
        let f = [u[0] - j[0] as f64, u[1] - j[1] as f64];
        let w = time_weight(k, steps, dt);
        for (a, wa) in [(0, 1.0 - f[0]), (1, f[0])] {
            for (b, wb) in [(0, 1.0 - f[1]), (1, f[1])] {
                occ[(j[0] + a) * nb[1] + j[1] + b] += w * wa * wb;
            }
        }
    }
    let mut pts = Vec::new();
    for a in 0..nb[0] {
        for b in 0..nb[1] {
            let w = occ[a * nb[1] + b];
            if w > 0.0 {
                pts.push((z0[0] + a as f64 * HZ_2D, z0[1] + b as f64 * HZ_2D, w));
            }
        }
    }
    let c = [
        path.chunks(2).map(|p| p[0]).sum::<f64>() / n as f64,
        path.chunks(2).map(|p| p[1]).sum::<f64>() / n as f64,
    ];
    let reach = path
        .chunks(2)
        .map(|p| ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt())
        .fold(0.0, f64::max);
    let r0 = reach + Y_MARGIN;
    let t_at = |y0: f64, y1: f64| -> f64 {
        pts.iter()
            .map(|(a, b, w)| w * shape_hat_r2(alpha, (a - y0).powi(2) + (b - y1).powi(2)))
            .sum()
    };
    let n_phi = 96;
    let ring = |r: f64| -> f64 {
        let mut s = 0.0;
        for m in 0..n_phi {
            let phi = 2.0 * std::f64::consts::PI * m as f64 / n_phi as f64;
            s += -(-t_at(c[0] + r * phi.cos(), c[1] + r * phi.sin())).exp_m1();
        }
        s * 2.0 * std::f64::consts::PI / n_phi as f64 * r
    };
    let (px, pw) = gauss_legendre(6);
    let panels = (r0 / 0.25).ceil() as usize;
    let dr = r0 / panels as f64;
    let mut inner = 0.0;
    for p in 0..panels {
        for (x, w) in px.iter().zip(&pw) {
            let r = (p as f64 + 0.5 * (x + 1.0)) * dr;
            inner += 0.5 * dr * w * ring(r);
        }
    }
    // r = r0·u^{−γ}, γ = 1/(α − 2): the ring integrand decays like r^{1−α}
    let gamma = 1.0 / (alpha - 2.0);
    let mut tail = 0.0;
    for (x, w) in gl_x.iter().zip(gl_w) {
        let u = 0.5 * (x + 1.0);
        let r = r0 * u.powf(-gamma);
        tail += 0.5 * w * ring(r) * gamma * r / u;
    }
    inner + tail
}
