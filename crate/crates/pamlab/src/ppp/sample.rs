use super::{sort_points, BoxRegion, IntensityDescriptor, PointConfig};
use crate::error::{invalid, Result};
use crate::model::{shape_hat_r2, ModelParams};
use rand::Rng;
use rand_distr::{Distribution, Poisson};

fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    // Poisson::new only fails for non-finite or non-positive means
    Poisson::new(mean).expect("finite positive mean").sample(rng) as usize
}

fn uniform_in<R: Rng + ?Sized>(b: &BoxRegion, rng: &mut R, out: &mut Vec<f64>) {
    for (l, u) in b.lower.iter().zip(&b.upper) {
        out.push(l + (u - l) * rng.random::<f64>());
    }
}

/// Homogeneous Poisson process of intensity ν in `bx`.
pub fn sample_homogeneous<R: Rng + ?Sized>(params: &ModelParams, bx: &BoxRegion, rng: &mut R) -> Result<PointConfig> {
    if bx.dim() != params.d {
        return Err(invalid("box", "dimension mismatch"));
    }
    let n = poisson_count(params.nu * bx.volume(), rng);
    let mut pts = Vec::with_capacity(n * params.d);
    for _ in 0..n {
        uniform_in(bx, rng, &mut pts);
    }
    sort_points(&mut pts, params.d);
    Ok(PointConfig {
        d: params.d,
        alpha: params.alpha,
        points: pts,
        sample_box: bx.clone(),
        eval_region: bx.clone(),
        intensity: IntensityDescriptor::Homogeneous { nu: params.nu },
        tail_compensation: 0.0,
        seed: None,
    })
}

/// Sup-norm radii ℓ₀ = 0 < ℓ₁ < ... covering `bx`, used as the majorant partition for thinning.
pub fn tilted_shells(params: &ModelParams, bx: &BoxRegion, rho: f64) -> Vec<f64> {
    let reach = bx
        .lower
        .iter()
        .zip(&bx.upper)
        .map(|(l, u)| l.abs().max(u.abs()))
        .fold(0.0, f64::max);
    if rho <= 0.0 {
        return vec![0.0, reach];
    }
    let hole = rho.powf(1.0 / params.alpha).max(1.0);
    let ratio = 2f64.powf(0.25);
    let mut radii = vec![0.0];
    let mut r = hole / 8.0;
    while r < reach {
        radii.push(r);
        r *= ratio;
    }
    radii.push(reach);
    radii
}

fn cube_box_intersection(bx: &BoxRegion, l: f64) -> Option<BoxRegion> {
    let lower: Vec<f64> = bx.lower.iter().map(|&a| a.max(-l)).collect();
    let upper: Vec<f64> = bx.upper.iter().map(|&b| b.min(l)).collect();
    if lower.iter().zip(&upper).all(|(a, b)| b > a) {
        Some(BoxRegion { lower, upper })
    } else {
        None
    }
}

/// Poisson process with intensity ν e^{−ρ v̂(y)} in `bx`, by thinning a homogeneous process
/// against a shell-wise constant majorant.
pub fn sample_tilted<R: Rng + ?Sized>(
    params: &ModelParams,
    bx: &BoxRegion,
    rho: f64,
    rng: &mut R,
) -> Result<PointConfig> {
    let d = params.d;
    let mut pts = Vec::new();
    for_each_tilted_point(params, bx, rho, rng, |p, _| pts.extend_from_slice(p))?;
    sort_points(&mut pts, d);
    Ok(PointConfig {
        d,
        alpha: params.alpha,
        points: pts,
        sample_box: bx.clone(),
        eval_region: bx.clone(),
        intensity: IntensityDescriptor::Tilted { nu: params.nu, rho },
        tail_compensation: 0.0,
        seed: None,
    })
}

/// Σ v̂(ωᵢ) over a tilted Poisson sample in `bx`, i.e. the potential at the origin, without storing points.
pub fn tilted_potential_at_origin<R: Rng + ?Sized>(
    params: &ModelParams,
    bx: &BoxRegion,
    rho: f64,
    rng: &mut R,
) -> Result<f64> {
    let mut acc = crate::sum::Neumaier::new();
    for_each_tilted_point(params, bx, rho, rng, |_, r2| acc.add(shape_hat_r2(params.alpha, r2)))?;
    Ok(acc.total())
}

fn for_each_tilted_point<R: Rng + ?Sized, F: FnMut(&[f64], f64)>(
    params: &ModelParams,
    bx: &BoxRegion,
    rho: f64,
    rng: &mut R,
    mut visit: F,
) -> Result<()> {
    if !(rho >= 0.0) || !rho.is_finite() {
        return Err(invalid("rho", "need rho >= 0"));
    }
    if bx.dim() != params.d {
        return Err(invalid("box", "dimension mismatch"));
    }
    let d = params.d;
    let alpha = params.alpha;
    let radii = tilted_shells(params, bx, rho);
    let sqrt_d = (d as f64).sqrt();
    let mut cand = Vec::with_capacity(d);
    for w in radii.windows(2) {
        let (l_in, l_out) = (w[0], w[1]);
        let outer = match cube_box_intersection(bx, l_out) {
            Some(b) => b,
            None => continue,
        };
        let inner_vol = cube_box_intersection(bx, l_in).map_or(0.0, |b| b.volume());
        let vol = outer.volume() - inner_vol;
        if vol <= 0.0 {
            continue;
        }
        // acceptance e^{−ρ v̂} increases with |y| ≤ √d·ℓ_out
        let r_max = sqrt_d * l_out;
        let major = (-rho * shape_hat_r2(alpha, r_max * r_max)).exp();
        let n = poisson_count(params.nu * vol * major, rng);
        for _ in 0..n {
            // uniform on the shell ∩ box by rejection from its bounding box
            loop {
                cand.clear();
                if d == 1 {
                    cand.push(uniform_shell_1d(&outer, l_in, rng));
                } else {
                    uniform_in(&outer, rng, &mut cand);
                }
                let sup = cand.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                if sup >= l_in {
                    break;
                }
            }
            let r2: f64 = cand.iter().map(|v| v * v).sum();
            let accept = (-rho * shape_hat_r2(alpha, r2)).exp() / major;
            if rng.random::<f64>() < accept {
                visit(&cand, r2);
            }
        }
    }
    Ok(())
}

// uniform on [lo, hi] minus (−l_in, l_in)
fn uniform_shell_1d<R: Rng + ?Sized>(outer: &BoxRegion, l_in: f64, rng: &mut R) -> f64 {
    let (lo, hi) = (outer.lower[0], outer.upper[0]);
    let left = (lo, hi.min(-l_in));
    let right = (lo.max(l_in), hi);
    let wl = (left.1 - left.0).max(0.0);
    let wr = (right.1 - right.0).max(0.0);
    let u = rng.random::<f64>() * (wl + wr);
    if u < wl {
        left.0 + u
    } else {
        right.0 + (u - wl)
    }
}
