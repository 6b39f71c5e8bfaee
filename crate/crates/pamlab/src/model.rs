//! Model parameters, the shape function and the closed-form asymptotic constants.

use crate::error::{invalid, PamError, Result};
use crate::quad::{integrate, QuadOpts, QuadValue};
use crate::special::{gamma, one_minus_exp_over};
use crate::tridiag::SymTridiag;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// The quadruple (d, α, ν, κ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub d: usize,
    pub alpha: f64,
    pub nu: f64,
    pub kappa: f64,
    /// set when α lies outside (d, d+2); such parameters are exploratory only
    #[serde(default)]
    pub unchecked: bool,
}

impl ModelParams {
    pub fn new(d: usize, alpha: f64, nu: f64, kappa: f64) -> Result<Self> {
        Self::basic_checks(d, alpha, nu, kappa)?;
        let df = d as f64;
        if !(alpha > df && alpha < df + 2.0) {
            return Err(invalid(
                "alpha",
                format!("need d < alpha < d+2, got d={d}, alpha={alpha}"),
            ));
        }
        Ok(Self {
            d,
            alpha,
            nu,
            kappa,
            unchecked: false,
        })
    }

    /// Skips the heavy-tail window check. Still requires α > d so the potential is finite.
    pub fn new_unchecked(d: usize, alpha: f64, nu: f64, kappa: f64) -> Result<Self> {
        Self::basic_checks(d, alpha, nu, kappa)?;
        if !(alpha > d as f64) {
            return Err(invalid("alpha", "alpha <= d gives an infinite potential"));
        }
        let df = d as f64;
        Ok(Self {
            d,
            alpha,
            nu,
            kappa,
            unchecked: !(alpha > df && alpha < df + 2.0),
        })
    }

    fn basic_checks(d: usize, alpha: f64, nu: f64, kappa: f64) -> Result<()> {
        if d == 0 {
            return Err(invalid("d", "dimension must be at least 1"));
        }
        if !(nu > 0.0) || !nu.is_finite() {
            return Err(invalid("nu", format!("need nu > 0, got {nu}")));
        }
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(invalid("kappa", format!("need kappa > 0, got {kappa}")));
        }
        if !alpha.is_finite() {
            return Err(invalid("alpha", "alpha must be finite"));
        }
        Ok(())
    }

    pub fn df(&self) -> f64 {
        self.d as f64
    }

    pub fn ball(&self) -> BallGeometry {
        ball_geometry(self.d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallGeometry {
    pub omega_d: f64,
    pub sigma_d: f64,
}

pub fn ball_geometry(d: usize) -> BallGeometry {
    let h = d as f64 / 2.0;
    let omega_d = PI.powf(h) / gamma(h + 1.0);
    BallGeometry {
        omega_d,
        sigma_d: d as f64 * omega_d,
    }
}

/// v̂ as a function of r² = |x|², fast path for α = 2.
#[inline(always)]
pub fn shape_hat_r2(alpha: f64, r2: f64) -> f64 {
    if alpha == 2.0 {
        1.0 / r2.max(1.0)
    } else if r2 <= 1.0 {
        1.0
    } else {
        r2.powf(-0.5 * alpha)
    }
}

/// v̂(x) = |x|^{-α} ∧ 1 when `truncated`, else v(x) = |x|^{-α}.
pub fn eval_shape(params: &ModelParams, x: &[f64], truncated: bool) -> Result<f64> {
    if x.len() != params.d {
        return Err(invalid("x", format!("expected {} coordinates", params.d)));
    }
    let r2: f64 = x.iter().map(|v| v * v).sum();
    if truncated {
        Ok(shape_hat_r2(params.alpha, r2))
    } else if r2 == 0.0 {
        Err(PamError::Singular)
    } else {
        Ok(r2.powf(-0.5 * params.alpha))
    }
}

pub use crate::special::gamma_fn;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticConstants {
    pub a1: f64,
    pub a2: f64,
    pub q1: f64,
    pub q2: f64,
    pub l1: f64,
    pub l2: f64,
}

impl AsymptoticConstants {
    pub fn from_a1_a2(params: &ModelParams, a1: f64, a2: f64) -> Self {
        let d = params.df();
        let a = params.alpha;
        let q1 = (d / a) * ((a - d) / (a * d)).powf((a - d) / d) * a1.powf(a / d);
        let q2 = a2 * ((a - d) / (a * d) * a1).powf((a - d + 2.0) / (2.0 * d));
        let l1 = ((a - d) / a) * (d / a).powf(d / (a - d)) * a1.powf(a / (a - d));
        let l2 = a2 * (d * a1 / a).powf((a + d - 2.0) / (2.0 * (a - d)));
        Self {
            a1,
            a2,
            q1,
            q2,
            l1,
            l2,
        }
    }
}

/// a1 = ν ω_d Γ((α−d)/α).
pub fn a1(params: &ModelParams) -> f64 {
    let d = params.df();
    params.nu * params.ball().omega_d * gamma((params.alpha - d) / params.alpha)
}

/// Coefficient c of |x|² in the limiting quadratic: (ν α σ_d / 2d) Γ((2α−d+2)/α).
pub fn quadratic_coefficient(params: &ModelParams) -> f64 {
    params.nu * hessian_constant(params)
}

/// (α σ_d / 2d) Γ((2α−d+2)/α), the ν-free part of [`quadratic_coefficient`].
pub fn hessian_constant(params: &ModelParams) -> f64 {
    let d = params.df();
    let a = params.alpha;
    a * params.ball().sigma_d / (2.0 * d) * gamma((2.0 * a - d + 2.0) / a)
}

/// a2 in closed form, (κ ν α σ_d Γ((2α−d+2)/α) / 2)^{1/2}.
pub fn a2_closed(params: &ModelParams) -> f64 {
    let d = params.df();
    let a = params.alpha;
    (params.kappa * params.nu * a * params.ball().sigma_d * gamma((2.0 * a - d + 2.0) / a) / 2.0).sqrt()
}

/// Ground energy d·√(κc) of −κΔ + c|x|² in ℝ^d.
pub fn harmonic_ground_energy(params: &ModelParams) -> f64 {
    params.df() * (params.kappa * quadratic_coefficient(params)).sqrt()
}

pub fn constants(params: &ModelParams) -> AsymptoticConstants {
    AsymptoticConstants::from_a1_a2(params, a1(params), a2_closed(params))
}

/// Uniform grid on the cube (−L, L)^d.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub h: f64,
    pub half_width: f64,
}

/// Lowest Dirichlet eigenvalue of −κ d²/dx² + c x² on (−L, L), second-order finite differences.
pub fn harmonic_ground_energy_1d(kappa: f64, c: f64, grid: GridSpec) -> Result<f64> {
    let GridSpec { h, half_width: l } = grid;
    if !(h > 0.0) || !(l > 0.0) {
        return Err(invalid("grid", "h and L must be positive"));
    }
    if c < 0.0 {
        return Err(invalid("c", "curvature must be nonnegative"));
    }
    if c > 0.0 {
        let length = (kappa / c).powf(0.25);
        if length / h < 10.0 {
            return Err(invalid(
                "h",
                format!("grid too coarse: {:.2} points per harmonic length", length / h),
            ));
        }
    }
    let n = ((2.0 * l / h).round() as usize).saturating_sub(1);
    if n < 3 {
        return Err(invalid("grid", "fewer than 3 interior nodes"));
    }
    let h = 2.0 * l / (n + 1) as f64;
    let k = kappa / (h * h);
    let diag: Vec<f64> = (0..n)
        .map(|i| {
            let x = -l + (i + 1) as f64 * h;
            2.0 * k + c * x * x
        })
        .collect();
    let op = SymTridiag::new(diag, vec![-k; n - 1])?;
    Ok(op.eigenvalue_bisect(1))
}

/// Discretized minimum of ∫κ|∇φ|² + c|x|²φ² over unit φ on (−L, L)^d.
/// The cube operator is a sum of commuting one-dimensional ones, so its ground energy is d times the 1-D value.
pub fn a2_variational(params: &ModelParams, grid: GridSpec) -> Result<f64> {
    let e1 = harmonic_ground_energy_1d(params.kappa, quadratic_coefficient(params), grid)?;
    Ok(params.df() * e1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleTilt {
    pub t: f64,
    pub log_t: f64,
    pub r: f64,
    pub lambda_t: f64,
    pub rho: f64,
    /// coefficient of |x|² in Q_t
    pub qt_curvature: f64,
}

impl ScaleTilt {
    pub fn q_t(&self, x2: f64) -> f64 {
        self.lambda_t + self.qt_curvature * x2
    }

    /// Radius M (log t)^{(α−d+2)/(4d)} of B_M(t).
    pub fn ball_radius(&self, params: &ModelParams, m: f64) -> f64 {
        let d = params.df();
        m * self.log_t.powf((params.alpha - d + 2.0) / (4.0 * d))
    }
}

/// ρ(λ) = (αλ/(d a1))^{−α/(α−d)}.
pub fn rho_of_lambda(params: &ModelParams, lambda: f64) -> f64 {
    let d = params.df();
    let a = params.alpha;
    (a * lambda / (d * a1(params))).powf(-a / (a - d))
}

/// Inverse of [`rho_of_lambda`].
pub fn lambda_of_rho(params: &ModelParams, rho: f64) -> f64 {
    let d = params.df();
    let a = params.alpha;
    d * a1(params) / a * rho.powf(-(a - d) / a)
}

/// ρ(λ(t)) = (a1(α−d)/(αd))^{−α/d} (log t)^{α/d}.
pub fn rho_closed_form(params: &ModelParams, log_t: f64) -> f64 {
    let d = params.df();
    let a = params.alpha;
    (a1(params) * (a - d) / (a * d)).powf(-a / d) * log_t.powf(a / d)
}

pub fn scale_and_tilt(params: &ModelParams, t: f64) -> Result<ScaleTilt> {
    if !(t > std::f64::consts::E) {
        return Err(invalid("t", format!("need t > e, got {t}")));
    }
    scale_and_tilt_log(params, t.ln())
}

/// Same as [`scale_and_tilt`] but parameterized by log t, for t beyond f64 range.
pub fn scale_and_tilt_log(params: &ModelParams, log_t: f64) -> Result<ScaleTilt> {
    if !(log_t > 1.0) {
        return Err(invalid("t", format!("need log t > 1, got {log_t}")));
    }
    let d = params.df();
    let a = params.alpha;
    let c = constants(params);
    let lambda_t = c.q1 * log_t.powf(-(a - d) / d);
    Ok(ScaleTilt {
        t: log_t.exp(),
        log_t,
        r: ((a - d + 2.0) / (4.0 * a) * log_t).exp(),
        lambda_t,
        rho: rho_of_lambda(params, lambda_t),
        qt_curvature: c.q2 * c.q2 / (params.kappa * d) * log_t.powf(-(a - d + 2.0) / d),
    })
}

/// ∫_{|y|≥1} G(|y|^{-α}) dy written as (σ_d/(α−d)) ∫_0^1 G(u)/u ds with u = s^{α/(α−d)}.
/// `g_over_u` must return G(u)/u and be finite at u = 0.
pub(crate) fn radial_tail<F: Fn(f64) -> f64>(params: &ModelParams, g_over_u: F, opts: QuadOpts) -> Result<QuadValue> {
    let d = params.df();
    let a = params.alpha;
    let p = a / (a - d);
    let q = integrate(|s: f64| g_over_u(s.powf(p)), 0.0, 1.0, opts)?;
    Ok(q.scale(params.ball().sigma_d / (a - d)))
}

/// H(t) = −ν∫(1−e^{−t v̂(y)})dy.
pub fn h_exact(params: &ModelParams, t: f64) -> Result<QuadValue> {
    h_exact_opts(params, t, QuadOpts::rel(1e-13))
}

pub fn h_exact_opts(params: &ModelParams, t: f64, opts: QuadOpts) -> Result<QuadValue> {
    if !(t >= 0.0) {
        return Err(invalid("t", "need t >= 0"));
    }
    if t == 0.0 {
        return Ok(QuadValue::zero());
    }
    let cap = params.ball().omega_d * -(-t).exp_m1();
    let tail = radial_tail(params, |u| t * one_minus_exp_over(t * u), opts)?;
    Ok(tail.shift(cap).scale(-params.nu))
}

/// H(t) + a1 t^{d/α} = ν∫_{|y|≤1}(e^{−t} − e^{−t|y|^{−α}})dy, computed without cancellation.
pub fn h_residual(params: &ModelParams, t: f64) -> Result<QuadValue> {
    if !(t > 0.0) {
        return Err(invalid("t", "need t > 0"));
    }
    let d = params.df();
    let a = params.alpha;
    let et = (-t).exp();
    // e^{-t} − e^{-t r^{-α}} = e^{-t}(1 − e^{-t(r^{-α}-1)})
    let f = |r: f64| {
        if r <= 0.0 {
            return et * r.powf(d - 1.0).max(0.0);
        }
        let excess = t * (r.powf(-a) - 1.0);
        et * -(-excess).exp_m1() * r.powf(d - 1.0)
    };
    let q = integrate(f, 0.0, 1.0, QuadOpts::rel(1e-12))?;
    Ok(q.scale(params.nu * params.ball().sigma_d))
}

/// H′(t) = −ν∫v̂ e^{−t v̂}dy.
pub fn h_derivative(params: &ModelParams, t: f64) -> Result<QuadValue> {
    let cap = params.ball().omega_d * (-t).exp();
    let tail = radial_tail(params, |u| (-t * u).exp(), QuadOpts::rel(1e-12))?;
    Ok(tail.shift(cap).scale(-params.nu))
}

/// H(t+δ) − H(t) = ν∫e^{−t v̂}(e^{−δ v̂} − 1)dy, one quadrature, no subtraction of large numbers.
pub fn h_increment(params: &ModelParams, t: f64, delta: f64) -> Result<QuadValue> {
    if !(t >= 0.0) || !(delta >= 0.0) {
        return Err(invalid("t", "need t, delta >= 0"));
    }
    let cap = params.ball().omega_d * (-t).exp() * (-delta).exp_m1();
    let tail = radial_tail(
        params,
        |u| (-t * u).exp() * -delta * one_minus_exp_over(delta * u),
        QuadOpts::rel(1e-12),
    )?;
    Ok(tail.shift(cap).scale(params.nu))
}
