//! Quadrature oracles for Poisson functionals on the line.
//!
//! For a Poisson process with intensity m and f ≥ 0:
//! log E e^{−∫f dω} = −∫(1−e^{−f})dm, E∫f dω = ∫f dm, Var ∫f dω = ∫f² dm,
//! log E e^{iθ∫f dω} = ∫(e^{iθf}−1)dm.

use crate::error::{invalid, Result};
use crate::model::shape_hat_r2;
use crate::quad::{integrate_breaks, integrate_line, QuadOpts, QuadValue};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum IntensityProfile {
    Homogeneous { nu: f64 },
    /// ν e^{−ρ v̂(y)} dy
    Tilted { nu: f64, rho: f64, alpha: f64 },
}

impl IntensityProfile {
    pub fn density(&self, y: f64) -> f64 {
        match *self {
            Self::Homogeneous { nu } => nu,
            Self::Tilted { nu, rho, alpha } => nu * (-rho * shape_hat_r2(alpha, y * y)).exp(),
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match *self {
            Self::Homogeneous { .. } => vec![],
            Self::Tilted { rho, alpha, .. } => {
                let s = rho.powf(1.0 / alpha);
                let mut v = vec![-1.0, 1.0];
                if rho > 0.0 && s > 1.0 {
                    for k in [0.5, 1.0, 2.0, 4.0] {
                        v.push(k * s);
                        v.push(-k * s);
                    }
                }
                v
            }
        }
    }
}

/// How the test function behaves at infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decay {
    /// f vanishes outside [lo, hi]
    Compact { lo: f64, hi: f64 },
    /// |f(y)| ≲ |y|^{−p}, p > 1
    Power(f64),
    /// faster than any power
    Fast,
}

/// A test function on the line with its intensity measure.
pub struct CampbellSpec<'a> {
    pub f: &'a (dyn Fn(f64) -> f64 + Sync),
    pub breakpoints: Vec<f64>,
    pub decay: Decay,
    pub intensity: IntensityProfile,
    pub opts: QuadOpts,
}

impl<'a> CampbellSpec<'a> {
    pub fn new(f: &'a (dyn Fn(f64) -> f64 + Sync), decay: Decay, intensity: IntensityProfile) -> Self {
        Self {
            f,
            breakpoints: vec![],
            decay,
            intensity,
            opts: QuadOpts::rel(1e-11),
        }
    }

    pub fn with_breakpoints(mut self, b: Vec<f64>) -> Self {
        self.breakpoints = b;
        self
    }

    /// ∫ g(f(y)) m(dy), where g(f) decays like f^{power} near f = 0.
    fn integrate_of<G: Fn(f64) -> f64>(&self, g: G, power: f64) -> Result<QuadValue> {
        let h = |y: f64| g((self.f)(y)) * self.intensity.density(y);
        let mut br = self.breakpoints.clone();
        br.extend(self.intensity.breakpoints());
        match self.decay {
            Decay::Compact { lo, hi } => {
                if !(hi > lo) {
                    return Err(invalid("decay", "empty support"));
                }
                br.retain(|b| *b > lo && *b < hi);
                br.push(lo);
                br.push(hi);
                br.sort_by(f64::total_cmp);
                br.dedup();
                integrate_breaks(&h, &br, self.opts)
            }
            Decay::Power(p) => {
                if !(p * power > 1.0) {
                    return Err(invalid("decay", format!("integrand decays like |y|^-{} and diverges", p * power)));
                }
                integrate_line(&h, &br, Some(p * power), self.opts)
            }
            Decay::Fast => integrate_line(&h, &br, None, self.opts),
        }
    }
}

/// −∫(1 − e^{−f}) dm.
pub fn campbell_laplace(spec: &CampbellSpec) -> Result<QuadValue> {
    let q = spec.integrate_of(|f| {
        if f < 0.0 {
            f64::NAN
        } else {
            -(-f).exp_m1()
        }
    }, 1.0)?;
    if q.value.is_nan() {
        return Err(invalid("f", "Laplace functional requires f >= 0"));
    }
    Ok(q.scale(-1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CampbellMoments {
    pub mean: QuadValue,
    pub variance: QuadValue,
}

pub fn campbell_moments(spec: &CampbellSpec) -> Result<CampbellMoments> {
    Ok(CampbellMoments {
        mean: spec.integrate_of(|f| f, 1.0)?,
        variance: spec.integrate_of(|f| f * f, 2.0)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexValue {
    pub re: QuadValue,
    pub im: QuadValue,
}

/// log E e^{iθ∫f dω} = ∫(e^{iθf} − 1) dm, split into real and imaginary parts.
pub fn campbell_charfn(spec: &CampbellSpec, theta: f64) -> Result<ComplexValue> {
    if theta == 0.0 {
        return Ok(ComplexValue {
            re: QuadValue::zero(),
            im: QuadValue::zero(),
        });
    }
    // cos x − 1 = −2 sin²(x/2) avoids cancellation for small arguments
    let re = spec.integrate_of(|f| {
        let s = (0.5 * theta * f).sin();
        -2.0 * s * s
    }, 2.0)?;
    let im = spec.integrate_of(|f| (theta * f).sin(), 1.0)?;
    Ok(ComplexValue { re, im })
}
