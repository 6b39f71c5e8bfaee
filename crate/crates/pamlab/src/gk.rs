//! The scaled functional J_t(μ), its quadratic limit and the checks on H that go with it.

use crate::error::{invalid, PamError, Result};
use crate::model::{h_derivative, h_increment, hessian_constant, quadratic_coefficient, ModelParams};
use crate::quad::{gauss_legendre, integrate_breaks, integrate_line, integrate_upper_tail, QuadOpts, QuadValue};
use serde::{Deserialize, Serialize};

/// Probability measure with compact support, held as weighted atoms.
///
/// Density measures are discretized by Gauss–Legendre panels; `resolution` is then the panel width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompactMeasure {
    pub d: usize,
    /// flat, d coordinates per atom
    pub atoms: Vec<f64>,
    pub weights: Vec<f64>,
    pub barycenter: Vec<f64>,
    pub support_radius: f64,
    pub resolution: Option<f64>,
}

impl CompactMeasure {
    pub fn from_atoms(d: usize, atoms: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if d == 0 || atoms.len() != d * weights.len() || weights.is_empty() {
            return Err(invalid("atoms", "need one weight per atom"));
        }
        if weights.iter().any(|&w| !(w >= 0.0)) || atoms.iter().any(|x| !x.is_finite()) {
            return Err(invalid("weights", "weights must be nonnegative and atoms finite"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(invalid("weights", format!("weights sum to {total}, not 1")));
        }
        let mut m = vec![0.0; d];
        for (x, w) in atoms.chunks(d).zip(&weights) {
            for k in 0..d {
                m[k] += w * x[k];
            }
        }
        let support_radius = atoms
            .chunks(d)
            .map(|x| x.iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        Ok(Self { d, atoms, weights, barycenter: m, support_radius, resolution: None })
    }

    pub fn dirac(x: &[f64]) -> Result<Self> {
        Self::from_atoms(x.len(), x.to_vec(), vec![1.0])
    }

    /// Density f on [a, b] (normalized here), discretized by `panels` Gauss–Legendre panels of `order` nodes.
    pub fn from_density_1d<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize, order: usize) -> Result<Self> {
        if !(b > a) || panels == 0 || order == 0 {
            return Err(invalid("density", "need a < b and at least one panel"));
        }
        let (gx, gw) = gauss_legendre(order);
        let hw = (b - a) / panels as f64;
        let mut atoms = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for p in 0..panels {
            let c = a + (p as f64 + 0.5) * hw;
            for (x, w) in gx.iter().zip(&gw) {
                let y = c + 0.5 * hw * x;
                let fy = f(y);
                if !(fy >= 0.0) {
                    return Err(invalid("density", "density must be nonnegative"));
                }
                atoms.push(y);
                weights.push(0.5 * hw * w * fy);
            }
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(invalid("density", "density has zero mass"));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        let mut out = Self::from_atoms(1, atoms, weights)?;
        out.resolution = Some(hw);
        Ok(out)
    }

    pub fn uniform_1d(a: f64, b: f64) -> Result<Self> {
        Self::from_density_1d(|_| 1.0, a, b, 32, 8)
    }

    pub fn translated(&self, s: &[f64]) -> Result<Self> {
        let mut atoms = self.atoms.clone();
        for x in atoms.chunks_mut(self.d) {
            x.iter_mut().zip(s).for_each(|(a, b)| *a += b);
        }
        let mut out = Self::from_atoms(self.d, atoms, self.weights.clone())?;
        out.resolution = self.resolution;
        Ok(out)
    }

    pub fn dilated(&self, s: f64) -> Result<Self> {
        let atoms = self.atoms.iter().map(|x| x * s).collect();
        let mut out = Self::from_atoms(self.d, atoms, self.weights.clone())?;
        out.resolution = self.resolution.map(|r| r * s.abs());
        Ok(out)
    }

    /// ∫|x − m_μ|² μ(dx).
    pub fn central_second_moment(&self) -> f64 {
        self.atoms
            .chunks(self.d)
            .zip(&self.weights)
            .map(|(x, w)| w * x.iter().zip(&self.barycenter).map(|(a, m)| (a - m).powi(2)).sum::<f64>())
            .sum()
    }

    fn centered_1d(&self) -> Vec<f64> {
        self.atoms.iter().map(|x| x - self.barycenter[0]).collect()
    }
}

/// Gärtner–König scale r(t) = t^{(α−d+2)/(4α)}.
pub fn gk_scale(params: &ModelParams, t: f64) -> f64 {
    t.powf((params.alpha - params.df() + 2.0) / (4.0 * params.alpha))
}

/// Radius t^{(d+2−α)/(4(α+1))} of the inner y-ball that contributes negligibly to J_t.
pub fn inner_cutoff(params: &ModelParams, t: f64) -> f64 {
    let a = params.alpha;
    t.powf((params.df() + 2.0 - a) / (4.0 * (a + 1.0)))
}

/// J_t with its outer integral split at |y − m_μ| = `y_cut`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JtSplit {
    pub inner: QuadValue,
    pub outer: QuadValue,
}

impl JtSplit {
    pub fn total(&self) -> QuadValue {
        self.inner.add(self.outer)
    }
}

/// J_t(μ) = ν t^{−(α+d−2)/(2α)} r^d ∫(e^{−t v̂_r(m_μ−y)} − e^{−t∫v̂_r(x−y)μ(dx)})dy, r = r(t).
///
/// Integrated in η = r t^{−1/α}(y − m_μ), where t v̂_r becomes min(t, |η|^{−α}) and the prefactor is
/// t^{(d+2−α)/(2α)}. Implemented for d = 1.
pub fn eval_jt(mu: &CompactMeasure, t: f64, params: &ModelParams, opts: QuadOpts) -> Result<QuadValue> {
    Ok(eval_jt_split(mu, t, params, 0.0, opts)?.total())
}

pub fn eval_jt_split(mu: &CompactMeasure, t: f64, params: &ModelParams, y_cut: f64, opts: QuadOpts) -> Result<JtSplit> {
    if !(t > 1.0) {
        return Err(invalid("t", "need t > 1"));
    }
    if params.d != 1 || mu.d != 1 {
        return Err(PamError::Unsupported("J_t is implemented for d = 1".into()));
    }
    if !(y_cut >= 0.0) {
        return Err(invalid("y_cut", "need y_cut >= 0"));
    }
    let a = params.alpha;
    let d = params.df();
    let eps = t.powf(-1.0 / a) * gk_scale(params, t);
    let shifts: Vec<f64> = mu.centered_1d().iter().map(|x| eps * x).collect();
    let w = &mu.weights;
    let eta_trunc = t.powf(-1.0 / a);
    // min(t, |η|^{−α})
    let pot = |e: f64| if e.abs() <= eta_trunc { t } else { e.abs().powf(-a) };
    let f = |e: f64| -> f64 {
        let base = pot(e);
        let mut diff = 0.0;
        for (s, p) in shifts.iter().zip(w) {
            let z = e - s;
            let dv = if e.abs() > eta_trunc && z.abs() > eta_trunc && (s / e).abs() < 0.5 {
                // |η−s|^{−α} − |η|^{−α} = |η|^{−α}(exp(−α log|1 − s/η|) − 1)
                base * (-a * (-s / e).ln_1p()).exp_m1()
            } else {
                pot(z) - base
            };
            diff += p * dv;
        }
        if diff < -1.0 {
            (-base).exp() - (-(base + diff)).exp()
        } else {
            -(-base).exp() * (-diff).exp_m1()
        }
    };
    let eta_cut = eps * y_cut;
    let smax = shifts.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    let mut breaks: Vec<f64> = vec![0.0, eta_trunc, -eta_trunc];
    for b in [0.25, 0.5, 1.0, 2.0, 4.0, 8.0] {
        breaks.push(b);
        breaks.push(-b);
    }
    if shifts.len() <= 512 {
        breaks.extend(shifts.iter().copied());
    }
    breaks.push(smax + eta_trunc);
    breaks.push(-smax - eta_trunc);
    let pre = params.nu * t.powf((d + 2.0 - a) / (2.0 * a));
    let inner = if eta_cut > 0.0 {
        let mut b: Vec<f64> = breaks.iter().copied().filter(|x| x.abs() < eta_cut).collect();
        b.push(eta_cut);
        b.push(-eta_cut);
        b.sort_by(f64::total_cmp);
        b.dedup();
        integrate_breaks(&f, &b, opts)?
    } else {
        QuadValue::zero()
    };
    let outer = if eta_cut > 0.0 {
        let mut b: Vec<f64> = breaks.iter().copied().filter(|x| x.abs() > eta_cut).collect();
        b.push(eta_cut);
        let mut right: Vec<f64> = b.iter().copied().filter(|&x| x > 0.0).collect();
        right.sort_by(f64::total_cmp);
        right.dedup();
        let hi = *right.last().unwrap();
        let g = |x: f64| f(x) + f(-x);
        let mid = integrate_breaks(&g, &right, opts)?;
        let tail = integrate_upper_tail(&g, hi, Some(a + 2.0), opts)?;
        mid.add(tail)
    } else {
        integrate_line(&f, &breaks, Some(a + 2.0), opts)?
    };
    Ok(JtSplit { inner: inner.scale(pre), outer: outer.scale(pre) })
}

/// The limit J(μ) = c ∫|x − m_μ|² μ(dx) with c = (νασ_d/2d)Γ((2α−d+2)/α).
pub fn eval_jlimit(mu: &CompactMeasure, params: &ModelParams) -> f64 {
    quadratic_coefficient(params) * mu.central_second_moment()
}

/// (1/2)·coefficient of |x|² in ∫⟨x, Hess v(η) x⟩e^{−v(η)}dη, by radial quadrature.
///
/// By isotropy the form is |x|²/d ∫Δv e^{−v}, and Δ|η|^{−α} = α(α+2−d)|η|^{−α−2}.
pub fn hessian_moment(params: &ModelParams, opts: QuadOpts) -> Result<QuadValue> {
    let a = params.alpha;
    let d = params.df();
    let k = a * (a + 2.0 - d) / (2.0 * d) * params.ball().sigma_d;
    // ∫_0^∞ ρ^{d−α−3} e^{−ρ^{−α}} dρ; split at 1, the upper part has power decay
    let g = |r: f64| if r <= 0.0 { 0.0 } else { r.powf(d - a - 3.0) * (-r.powf(-a)).exp() };
    let lower = integrate_breaks(&g, &[0.0, 0.125, 0.25, 0.5, 1.0], opts)?;
    let upper = integrate_upper_tail(g, 1.0, Some(a + 3.0 - d), opts)?;
    Ok(lower.add(upper).scale(k))
}

/// Closed form of [`hessian_moment`].
pub fn hessian_moment_closed(params: &ModelParams) -> f64 {
    hessian_constant(params)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HGap {
    pub t: f64,
    pub eps: f64,
    /// e^{−ε t r^{−2}}
    pub delta: f64,
    /// H(t + δ) − H(t)
    pub gap: QuadValue,
    /// |H′(t)|·δ
    pub derivative_bound: f64,
    /// |gap| / e^{ε t r^{−2}}
    pub ratio: f64,
}

/// H(t + e^{−εtr^{−2}}) − H(t) with r = r(t).
pub fn assumption_h_gap(params: &ModelParams, t: f64, eps: f64) -> Result<HGap> {
    if !(t > 1.0) || !(eps > 0.0) {
        return Err(invalid("t", "need t > 1 and eps > 0"));
    }
    let r = gk_scale(params, t);
    let expo = eps * t / (r * r);
    let delta = (-expo).exp();
    if !(delta < t) {
        return Err(invalid("t", "need e^{-eps t r^-2} < t"));
    }
    let gap = h_increment(params, t, delta)?;
    let hp = h_derivative(params, t)?;
    Ok(HGap {
        t,
        eps,
        delta,
        gap,
        derivative_bound: hp.value.abs() * delta,
        ratio: gap.value.abs() / expo.exp(),
    })
}
