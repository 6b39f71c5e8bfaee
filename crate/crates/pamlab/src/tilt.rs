//! Experiments under the tilted law P̃_t, the Poisson process with intensity ν e^{−ρ v̂(y)}dy,
//! ρ = ρ(λ(t)). All operations here are one-dimensional.

use crate::error::{invalid, PamError, Result};
use crate::model::{
    a1, h_exact, h_residual, lambda_of_rho, rho_closed_form, scale_and_tilt_log, shape_hat_r2, ModelParams, ScaleTilt,
};
use crate::ppp::{
    campbell_moments, sample_homogeneous, sample_tilted, tilted_potential_at_origin, BoxRegion, CampbellSpec, Decay,
    IntensityProfile,
};
use crate::quad::{integrate_breaks, integrate_upper_tail, QuadOpts, QuadValue};
use crate::rng::rng_stream;
use crate::special::gamma;
use crate::stats::{ks_normal, linear_fit, mean_stderr, LinearFit, MeanEstimate};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TiltSpec {
    pub params: ModelParams,
    pub log_t: f64,
    pub rho: f64,
    /// λ(t) = Q_t(0), equal to λ(ρ) = (d a1/α) ρ^{−(α−d)/α}
    pub lambda: f64,
    pub scale: ScaleTilt,
    /// half-width of the sampling box used by the Monte Carlo routines
    pub box_half_width: f64,
}

impl TiltSpec {
    pub fn new(params: ModelParams, log_t: f64, box_half_width: f64) -> Result<Self> {
        if params.d != 1 {
            return Err(PamError::Unsupported("tilted experiments are implemented for d = 1".into()));
        }
        if !(box_half_width > 0.0) {
            return Err(invalid("box", "need a positive box half-width"));
        }
        let scale = scale_and_tilt_log(&params, log_t)?;
        Ok(Self { params, log_t, rho: scale.rho, lambda: scale.lambda_t, scale, box_half_width })
    }

    /// The spec whose tilt parameter is `rho`; log t solves ρ(λ(t)) = ρ.
    pub fn from_rho(params: ModelParams, rho: f64, box_half_width: f64) -> Result<Self> {
        if !(rho > 0.0) {
            return Err(invalid("rho", "need rho > 0"));
        }
        let d = params.df();
        // ρ(λ(t)) = C (log t)^{α/d}
        let c = rho_closed_form(&params, 1.0);
        let log_t = (rho / c).powf(d / params.alpha);
        let mut s = Self::new(params, log_t, box_half_width)?;
        s.rho = rho;
        s.lambda = lambda_of_rho(&params, rho);
        Ok(s)
    }

    fn intensity(&self) -> IntensityProfile {
        IntensityProfile::Tilted { nu: self.params.nu, rho: self.rho, alpha: self.params.alpha }
    }

    /// Scale s = ρ^{(2α−d)/(2α)} that standardizes V(0) − λ.
    pub fn clt_scale(&self) -> f64 {
        let a = self.params.alpha;
        self.rho.powf((2.0 * a - self.params.df()) / (2.0 * a))
    }
}

/// Ẽ[V(x)] = ν∫v̂(x−y)e^{−ρv̂(y)}dy.
pub fn tilted_mean_potential(spec: &TiltSpec, x: f64) -> Result<QuadValue> {
    let a = spec.params.alpha;
    let f = move |y: f64| shape_hat_r2(a, (x - y) * (x - y));
    let cs = CampbellSpec::new(&f, Decay::Power(a), spec.intensity()).with_breakpoints(vec![x - 1.0, x + 1.0, x]);
    Ok(campbell_moments(&cs)?.mean)
}

/// Q_t(x) = λ(t) + (q2²/κ)(log t)^{−(α+1)}x².
pub fn qt_value(spec: &TiltSpec, x: f64) -> f64 {
    spec.scale.q_t(x * x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureFit {
    /// fitted coefficient of x²
    pub c2: f64,
    /// fitted coefficient of x⁴
    pub c4: f64,
    pub qt_curvature: f64,
    pub fit_radius: f64,
}

/// Least-squares fit of Ẽ[V(x)] − Ẽ[V(0)] ≈ c2 x² + c4 x⁴ over |x| ≤ M(log t)^{(α+1)/4}.
pub fn tilted_curvature_fit(spec: &TiltSpec, m: f64, points: usize) -> Result<CurvatureFit> {
    if points < 3 || !(m > 0.0) {
        return Err(invalid("points", "need M > 0 and at least 3 fit points"));
    }
    let radius = spec.scale.ball_radius(&spec.params, m);
    let v0 = tilted_mean_potential(spec, 0.0)?.value;
    let mut rows = Vec::with_capacity(points);
    let mut ys = Vec::with_capacity(points);
    for k in 1..=points {
        let x = radius * k as f64 / points as f64;
        let v = tilted_mean_potential(spec, x)?.value;
        rows.push(vec![x * x, x.powi(4)]);
        ys.push(v - v0);
    }
    let c = crate::stats::least_squares(&rows, &ys)?;
    Ok(CurvatureFit { c2: c[0], c4: c[1], qt_curvature: spec.scale.qt_curvature, fit_radius: radius })
}

/// Σ = ν∫_ℝ|η|^{−2α}e^{−|η|^{−α}}dη, the limit variance of ρ^{(2α−1)/(2α)}(V(0) − λ) under P̃ (d = 1).
pub fn limit_variance(params: &ModelParams) -> Result<QuadValue> {
    let a = params.alpha;
    let g = |e: f64| if e <= 0.0 { 0.0 } else { e.powf(-2.0 * a) * (-e.powf(-a)).exp() };
    let opts = QuadOpts::rel(1e-12);
    let lower = integrate_breaks(&g, &[0.0, 0.125, 0.25, 0.5, 1.0], opts)?;
    let upper = integrate_upper_tail(g, 1.0, Some(2.0 * a), opts)?;
    Ok(lower.add(upper).scale(2.0 * params.nu))
}

/// Closed form of [`limit_variance`]: 2ν Γ(2 − 1/α)/α.
pub fn limit_variance_closed(params: &ModelParams) -> f64 {
    let a = params.alpha;
    2.0 * params.nu * gamma(2.0 - 1.0 / a) / a
}

/// Tilted moments ν∫_{|y|>w} v̂^k e^{−ρv̂} for k = 1, 2, 3.
fn far_moments(spec: &TiltSpec, w: f64) -> Result<[f64; 3]> {
    let a = spec.params.alpha;
    let rho = spec.rho;
    let mut out = [0.0; 3];
    for (k, o) in out.iter_mut().enumerate() {
        let p = (k + 1) as f64;
        let f = |y: f64| {
            let v = shape_hat_r2(a, y * y);
            v.powf(p) * (-rho * v).exp()
        };
        *o = 2.0 * spec.params.nu * integrate_upper_tail(f, w, Some(p * a), QuadOpts::rel(1e-10))?.value;
    }
    Ok(out)
}

/// Radius beyond which the tilted points are replaced by a Gaussian with matched mean and variance.
///
/// Chosen so that the far part's Berry–Esseen term κ₃/σ³ (σ the full standard deviation) is below
/// `be_tol`; these jumps are at most w^{−α}, a small fraction of σ.
pub fn far_cut_radius(spec: &TiltSpec, be_tol: f64) -> Result<f64> {
    let a = spec.params.alpha;
    let sigma = (limit_variance(&spec.params)?.value).sqrt() / spec.clt_scale();
    // untilted κ₃ of |y| > w bounds the tilted one: 2ν w^{1−3α}/(3α−1)
    let w = (2.0 * spec.params.nu / ((3.0 * a - 1.0) * be_tol * sigma.powi(3))).powf(1.0 / (3.0 * a - 1.0));
    Ok(w.max(spec.rho.powf(1.0 / a)).max(spec.box_half_width))
}

/// Draws of V(0) under P̃: exact tilted points in (−w, w) plus a Gaussian for |y| ≥ w.
pub fn tilted_v0_samples(spec: &TiltSpec, n: usize, seed: u64, be_tol: f64) -> Result<Vec<f64>> {
    let w = far_cut_radius(spec, be_tol)?;
    let [m1, m2, _] = far_moments(spec, w)?;
    let sd_far = m2.sqrt();
    let bx = BoxRegion::cube(1, w)?;
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_stream(seed, i as u64);
            let near = tilted_potential_at_origin(&spec.params, &bx, spec.rho, &mut rng)?;
            let z: f64 = rng.sample(StandardNormal);
            Ok(near + m1 + sd_far * z)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltSample {
    pub standardized: Vec<f64>,
    pub ks_statistic: f64,
    pub limit_variance: f64,
    /// raw V(0) sample mean
    pub mean: MeanEstimate,
    /// Campbell mean ν∫v̂e^{−ρv̂}
    pub quad_mean: f64,
    pub degenerate: bool,
}

/// Standardized V(0) samples ρ^{(2α−1)/(2α)}(V(0) − λ) and their KS distance to N(0, Σ).
pub fn tilted_clt_sample(spec: &TiltSpec, n: usize, seed: u64) -> Result<CltSample> {
    if n < 1000 {
        return Err(invalid("n", "need n >= 1000"));
    }
    let raw = tilted_v0_samples(spec, n, seed, 1e-3)?;
    let s = spec.clt_scale();
    let standardized: Vec<f64> = raw.iter().map(|v| s * (v - spec.lambda)).collect();
    let sigma2 = limit_variance(&spec.params)?.value;
    let degenerate = raw.iter().all(|v| *v == raw[0]);
    Ok(CltSample {
        ks_statistic: ks_normal(&standardized, 0.0, sigma2.sqrt())?,
        limit_variance: sigma2,
        mean: mean_stderr(&raw)?,
        quad_mean: tilted_mean_potential(spec, 0.0)?.value,
        standardized,
        degenerate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalDensity {
    /// P̃(s(V(0) − λ) ∈ (0, a])/a
    pub ratio: f64,
    pub stderr: f64,
    /// same for (−a, 0]
    pub ratio_left: f64,
    pub stderr_left: f64,
    pub hits: usize,
    pub a: f64,
    pub widened: bool,
    /// (2πΣ)^{−1/2}
    pub limit_density: f64,
}

/// Monte Carlo local density of the standardized V(0) at the origin, against (2πΣ)^{−1/2}.
///
/// The window is doubled until it holds at least 50 samples.
pub fn local_density_ratio(spec: &TiltSpec, a: f64, n: usize, seed: u64) -> Result<LocalDensity> {
    let alpha = spec.params.alpha;
    if !(alpha > 1.0 && alpha <= 2.0) {
        return Err(invalid("alpha", "local limit check needs 1 < alpha <= 2"));
    }
    if !(a > 0.0) {
        return Err(invalid("a", "need a > 0"));
    }
    let raw = tilted_v0_samples(spec, n, seed, 2e-3)?;
    let s = spec.clt_scale();
    let z: Vec<f64> = raw.iter().map(|v| s * (v - spec.lambda)).collect();
    let mut a = a;
    let mut widened = false;
    let count = |lo: f64, hi: f64| z.iter().filter(|&&x| x > lo && x <= hi).count();
    while count(0.0, a) < 50 {
        if a > 1e3 {
            return Err(invalid("a", "no samples near the centre"));
        }
        a *= 2.0;
        widened = true;
    }
    let nf = n as f64;
    let ratio_of = |k: usize| {
        let p = k as f64 / nf;
        (p / a, (p * (1.0 - p) / nf).sqrt() / a)
    };
    let hits = count(0.0, a);
    let (ratio, stderr) = ratio_of(hits);
    let (ratio_left, stderr_left) = ratio_of(z.iter().filter(|&&x| x > -a && x <= 0.0).count());
    let sigma2 = limit_variance(&spec.params)?.value;
    Ok(LocalDensity {
        ratio,
        stderr,
        ratio_left,
        stderr_left,
        hits,
        a,
        widened,
        limit_density: 1.0 / (2.0 * std::f64::consts::PI * sigma2).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Lem8Case {
    /// ∫_{B_{2M}} e^{−ρv̂}
    I,
    /// ∫_{B_{2M}} |y|^{−γ}e^{−ρv}
    Ii,
    /// ∫_{|y|>2M(log t)^{(α+1)/4}} |y|^{−γ}e^{−ρv̂}
    Iii,
}

/// The integrals of the three decay estimates, at ρ = ρ(λ(t)) and B_{2M}(t).
pub fn lem8_integral(params: &ModelParams, log_t: f64, m: f64, gamma_exp: f64, case: Lem8Case) -> Result<QuadValue> {
    let spec = TiltSpec::new(*params, log_t, 1.0)?;
    let a = params.alpha;
    let rho = spec.rho;
    let r = spec.scale.ball_radius(params, 2.0 * m);
    let hole = rho.powf(1.0 / a);
    let opts = QuadOpts::rel(1e-10).with_abs(1e-300);
    let mut br: Vec<f64> = vec![0.0, 1.0];
    for k in [0.125, 0.25, 0.5, 1.0, 2.0, 4.0] {
        br.push(k * hole);
    }
    match case {
        Lem8Case::I => {
            let f = |y: f64| (-rho * shape_hat_r2(a, y * y)).exp();
            let mut b: Vec<f64> = br.into_iter().filter(|x| *x < r).collect();
            b.push(r);
            b.sort_by(f64::total_cmp);
            Ok(integrate_breaks(&f, &b, opts)?.scale(2.0))
        }
        Lem8Case::Ii => {
            if !(gamma_exp > 0.0) {
                return Err(invalid("gamma", "case (ii) needs gamma > 0"));
            }
            let f = |y: f64| if y <= 0.0 { 0.0 } else { y.powf(-gamma_exp) * (-rho * y.powf(-a)).exp() };
            let mut b: Vec<f64> = br.into_iter().filter(|x| *x < r).collect();
            b.push(r);
            b.sort_by(f64::total_cmp);
            Ok(integrate_breaks(&f, &b, opts)?.scale(2.0))
        }
        Lem8Case::Iii => {
            if !(gamma_exp > params.df()) {
                return Err(invalid("gamma", "case (iii) needs gamma > d"));
            }
            let f = |y: f64| y.powf(-gamma_exp) * (-rho * shape_hat_r2(a, y * y)).exp();
            let mut b: Vec<f64> = br.into_iter().filter(|x| *x > r).collect();
            b.push(r);
            b.sort_by(f64::total_cmp);
            let hi = *b.last().unwrap();
            let mid = if b.len() > 1 { integrate_breaks(&f, &b, opts)? } else { QuadValue::zero() };
            let tail = integrate_upper_tail(f, hi, Some(gamma_exp), opts)?;
            Ok(mid.add(tail).scale(2.0))
        }
    }
}

/// Log–log regression of a Lem8 integral on log t; the grid must span at least 4 decades of log t.
pub fn lem8_slope(params: &ModelParams, log_ts: &[f64], m: f64, gamma_exp: f64, case: Lem8Case) -> Result<LinearFit> {
    check_decades(log_ts)?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &lt in log_ts {
        let v = lem8_integral(params, lt, m, gamma_exp, case)?.value;
        if !(v > 0.0) {
            return Err(invalid("value", format!("integral underflowed at log t = {lt}")));
        }
        xs.push(lt.ln());
        ys.push(v.ln());
    }
    linear_fit(&xs, &ys)
}

fn check_decades(log_ts: &[f64]) -> Result<()> {
    let lo = log_ts.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = log_ts.iter().copied().fold(0.0, f64::max);
    if log_ts.len() < 4 || !(lo > 0.0) || (hi / lo).log10() < 3.0 - 1e-9 {
        return Err(invalid("log_t", "slope estimation needs at least 4 points spanning 3 decades"));
    }
    Ok(())
}

/// φ̄_t(x)² is the N(0, s²) density with s² = κ(log t)^{(α+1)/2}/(2 q2).
pub fn trial_density_variance(spec: &TiltSpec) -> f64 {
    let c = crate::model::constants(&spec.params);
    spec.params.kappa * spec.log_t.powf((spec.params.alpha + 1.0) / 2.0) / (2.0 * c.q2)
}

/// Width w of φ̄_t(x) ∝ exp(−x²/(2w²)).
pub fn trial_width(spec: &TiltSpec) -> f64 {
    (2.0 * trial_density_variance(spec)).sqrt()
}

/// φ̄_t(x) = (q2/(κπ))^{1/4}(log t)^{−(α+1)/8} exp(−(q2/(2κ))(log t)^{−(α+1)/2}x²).
pub fn trial_function(spec: &TiltSpec, x: f64) -> f64 {
    let c = crate::model::constants(&spec.params);
    let k = spec.params.kappa;
    let e = (spec.params.alpha + 1.0) / 2.0;
    (c.q2 / (k * std::f64::consts::PI)).powf(0.25) * spec.log_t.powf(-e / 4.0) * (-(c.q2 / (2.0 * k)) * spec.log_t.powf(-e) * x * x).exp()
}

/// Ṽar(∫(V(x) − V(0))φ̄_t(x)²dx) = ν∫f(y)²e^{−ρv̂(y)}dy with f(y) = E v̂(y + X) − v̂(y), X ~ φ̄_t².
pub fn trial_variance(spec: &TiltSpec) -> Result<QuadValue> {
    let a = spec.params.alpha;
    let s = trial_density_variance(spec).sqrt();
    let rho = spec.rho;
    let inner_opts = QuadOpts::rel(1e-10).with_abs(1e-300);
    let f = |y: f64| -> f64 {
        let base = shape_hat_r2(a, y * y);
        let g = |x: f64| {
            let second = shape_hat_r2(a, (y + x) * (y + x)) + shape_hat_r2(a, (y - x) * (y - x)) - 2.0 * base;
            second * (-0.5 * x * x / (s * s)).exp()
        };
        let top = 14.0 * s;
        let mut br = vec![0.0, top];
        for c in [y.abs() - 1.0, y.abs(), y.abs() + 1.0] {
            if c > 0.0 && c < top {
                br.push(c);
            }
        }
        br.sort_by(f64::total_cmp);
        let v = integrate_breaks(&g, &br, inner_opts).map(|q| q.value).unwrap_or(f64::NAN);
        v / (s * (2.0 * std::f64::consts::PI).sqrt())
    };
    let h = |y: f64| {
        let v = f(y);
        v * v * (-rho * shape_hat_r2(a, y * y)).exp()
    };
    let hole = rho.powf(1.0 / a);
    let mut br = vec![0.0, 1.0];
    for k in [0.25, 0.5, 1.0, 2.0, 4.0, 8.0] {
        br.push(k * hole);
    }
    br.push(14.0 * s + 1.0);
    br.sort_by(f64::total_cmp);
    br.dedup();
    let hi = *br.last().unwrap();
    let opts = QuadOpts::rel(1e-8).with_abs(1e-300);
    let mid = integrate_breaks(&h, &br, opts)?;
    let tail = integrate_upper_tail(h, hi, Some(2.0 * a + 4.0), opts)?;
    let total = mid.add(tail).scale(2.0 * spec.params.nu);
    if !total.value.is_finite() {
        return Err(PamError::QuadratureNonConvergence { value: total.value, abs_err: total.abs_err });
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialDecay {
    pub log_ts: Vec<f64>,
    pub variances: Vec<f64>,
    pub fit: LinearFit,
}

/// Regression of log trial_variance on log log t.
pub fn trial_variance_decay(params: &ModelParams, log_ts: &[f64]) -> Result<TrialDecay> {
    check_decades(log_ts)?;
    let mut variances = Vec::new();
    for &lt in log_ts {
        variances.push(trial_variance(&TiltSpec::new(*params, lt, 1.0)?)?.value);
    }
    let xs: Vec<f64> = log_ts.iter().map(|l| l.ln()).collect();
    let ys: Vec<f64> = variances.iter().map(|v| v.ln()).collect();
    Ok(TrialDecay { log_ts: log_ts.to_vec(), variances, fit: linear_fit(&xs, &ys)? })
}

/// H(ρ) + λρ + d log t, with H from the cancellation-free residual form.
pub fn dlogt_residual(params: &ModelParams, log_t: f64) -> Result<f64> {
    let spec = TiltSpec::new(*params, log_t, 1.0)?;
    let d = params.df();
    let rho = spec.rho;
    let h = -a1(params) * rho.powf(d / params.alpha) + h_residual(params, rho)?.value;
    Ok(h + spec.lambda * rho + d * log_t)
}

/// ν∫_{(−b, b)}(1 − e^{−ρv̂}), the part of −H(ρ) carried by the sampling box.
fn h_box(params: &ModelParams, rho: f64, b: f64) -> Result<f64> {
    let a = params.alpha;
    let outside = integrate_upper_tail(
        |y: f64| -(-rho * shape_hat_r2(a, y * y)).exp_m1(),
        b,
        Some(a),
        QuadOpts::rel(1e-12),
    )?;
    Ok(h_exact(params, rho)?.value + 2.0 * params.nu * outside.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PocketProbability {
    pub log_estimate: f64,
    /// relative standard error of the estimate
    pub rel_stderr: f64,
    pub hits: usize,
    pub ess: f64,
    pub n: usize,
    pub reliable: bool,
    pub naive_hits: usize,
    pub naive_n: usize,
    /// tolerance ε(log t)^{−(α+1)/2} on sup |V − Q_t|
    pub threshold: f64,
    pub ball_radius: f64,
}

impl PocketProbability {
    pub fn estimate(&self) -> f64 {
        self.log_estimate.exp()
    }

    /// 95% interval for log P.
    pub fn log_ci95(&self) -> (f64, f64) {
        let w = 1.96 * self.rel_stderr;
        (self.log_estimate + (1.0 - w).max(1e-300).ln(), self.log_estimate + (1.0 + w).ln())
    }

    /// δ with log P = −d log t + (log t)^δ, when log P > −d log t.
    pub fn fitted_delta(&self, d: f64, log_t: f64) -> Option<f64> {
        let excess = self.log_estimate + d * log_t;
        (excess > 0.0).then(|| excess.ln() / log_t.ln())
    }
}

// sup over the lattice of |V − Q_t| ≤ threshold, with V from the box points plus the exact mean of
// the untilted far field
fn pocket_event(spec: &TiltSpec, points: &[f64], xs: &[f64], b: f64, threshold: f64) -> bool {
    let a = spec.params.alpha;
    let nu = spec.params.nu;
    xs.iter().all(|&x| {
        let near = crate::ppp::potential_sum(a, 1, points, &[x]);
        let far = nu / (a - 1.0) * ((b - x).powf(1.0 - a) + (b + x).powf(1.0 - a));
        (near + far - qt_value(spec, x)).abs() <= threshold
    })
}

/// P(sup_{B_M(t)}|V − Q_t| ≤ ε(log t)^{−(α+1)/2}) by sampling P̃ and reweighting with e^{H(ρ)+ρV(0)}.
///
/// The box (−b, b) gets the exact weight e^{H_box(ρ)+ρV_box(0)}; outside it the configuration is
/// untilted and enters the event through its mean. `naive_n` untilted samples are drawn for comparison.
pub fn pocket_probability_is(
    spec: &TiltSpec,
    m: f64,
    eps: f64,
    n: usize,
    naive_n: usize,
    spacing: f64,
    seed: u64,
) -> Result<PocketProbability> {
    if spec.params.alpha < 2.0 {
        return Err(PamError::Unsupported("the sup-event form needs alpha >= 2".into()));
    }
    if n < 100 || !(spacing > 0.0) || !(eps > 0.0) || !(m > 0.0) {
        return Err(invalid("n", "need n >= 100 and positive M, eps, spacing"));
    }
    let rb = spec.scale.ball_radius(&spec.params, m);
    let b = spec.box_half_width;
    if b < 4.0 * rb {
        return Err(invalid("box", "box half-width must be at least 4 ball radii"));
    }
    let threshold = eps * spec.log_t.powf(-(spec.params.alpha + 1.0) / 2.0);
    let k = (rb / spacing).ceil() as i64;
    let xs: Vec<f64> = (-k..=k).map(|i| (i as f64 * spacing).clamp(-rb, rb)).collect();
    let bx = BoxRegion::cube(1, b)?;
    let hb = h_box(&spec.params, spec.rho, b)?;

    let logs: Vec<Option<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_stream(seed, i as u64);
            let cfg = sample_tilted(&spec.params, &bx, spec.rho, &mut rng)?;
            if pocket_event(spec, &cfg.points, &xs, b, threshold) {
                let v0 = crate::ppp::potential_sum(spec.params.alpha, 1, &cfg.points, &[0.0]);
                Ok(Some(hb + spec.rho * v0))
            } else {
                Ok(None)
            }
        })
        .collect::<Result<_>>()?;
    let hit_logs: Vec<f64> = logs.iter().flatten().copied().collect();
    let hits = hit_logs.len();
    let nf = n as f64;
    let (log_estimate, rel_stderr, ess) = if hits == 0 {
        (f64::NEG_INFINITY, f64::INFINITY, 0.0)
    } else {
        let mx = hit_logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let s1: f64 = hit_logs.iter().map(|l| (l - mx).exp()).sum();
        let s2: f64 = hit_logs.iter().map(|l| (2.0 * (l - mx)).exp()).sum();
        let mean = s1 / nf;
        let var = (s2 / nf - mean * mean).max(0.0) / (nf - 1.0);
        (mx + mean.ln(), var.sqrt() / mean, s1 * s1 / s2)
    };

    let naive_seed = crate::rng::child_seed(seed, u64::MAX);
    let naive_hits = (0..naive_n)
        .into_par_iter()
        .map(|i| -> Result<bool> {
            let mut rng = rng_stream(naive_seed, i as u64);
            let cfg = sample_homogeneous(&spec.params, &bx, &mut rng)?;
            Ok(pocket_event(spec, &cfg.points, &xs, b, threshold))
        })
        .collect::<Result<Vec<bool>>>()?
        .into_iter()
        .filter(|&h| h)
        .count();

    Ok(PocketProbability {
        log_estimate,
        rel_stderr,
        hits,
        ess,
        n,
        reliable: ess >= 0.01 * nf,
        naive_hits,
        naive_n,
        threshold,
        ball_radius: rb,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadonNikodymCheck {
    /// Ẽ[g e^{H_box(ρ)+ρV_box(0)}]
    pub reweighted: MeanEstimate,
    /// E[g] by plain sampling
    pub direct: MeanEstimate,
    /// E[g] = exp(−ν∫_box(1 − e^{−v̂(y−x0)})dy)
    pub exact: f64,
}

/// Checks Ẽ[g e^{H+ρV(0)}] = E[g] for g = e^{−V_box(x0)}.
pub fn radon_nikodym_check(params: &ModelParams, rho: f64, b: f64, x0: f64, n: usize, seed: u64) -> Result<RadonNikodymCheck> {
    if params.d != 1 {
        return Err(PamError::Unsupported("implemented for d = 1".into()));
    }
    if !(x0.abs() < b) {
        return Err(invalid("x0", "x0 must lie inside the box"));
    }
    let a = params.alpha;
    let bx = BoxRegion::cube(1, b)?;
    let hb = h_box(params, rho, b)?;
    let g = |pts: &[f64]| (-crate::ppp::potential_sum(a, 1, pts, &[x0])).exp();
    let tilted: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_stream(seed, i as u64);
            let cfg = sample_tilted(params, &bx, rho, &mut rng)?;
            let v0 = crate::ppp::potential_sum(a, 1, &cfg.points, &[0.0]);
            Ok(g(&cfg.points) * (hb + rho * v0).exp())
        })
        .collect::<Result<_>>()?;
    let direct_seed = crate::rng::child_seed(seed, u64::MAX);
    let direct: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_stream(direct_seed, i as u64);
            Ok(g(&sample_homogeneous(params, &bx, &mut rng)?.points))
        })
        .collect::<Result<_>>()?;
    let f = |y: f64| -(-shape_hat_r2(a, (y - x0) * (y - x0))).exp_m1();
    let q = integrate_breaks(&f, &[-b, x0 - 1.0, x0, x0 + 1.0, b], QuadOpts::rel(1e-12))?;
    Ok(RadonNikodymCheck {
        reweighted: mean_stderr(&tilted)?,
        direct: mean_stderr(&direct)?,
        exact: (-params.nu * q.value).exp(),
    })
}
