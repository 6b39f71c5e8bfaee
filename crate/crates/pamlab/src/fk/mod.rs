//! Feynman–Kac survival functionals: lattice PDE, path Monte Carlo and the annealed path representation.

mod annealed;
pub(crate) mod field;
mod mc;
mod pde;

pub use annealed::{annealed_survival_path, default_ou_theta, pilot_ou_theta, AnnealedTilt};
pub use field::{potential_on_line, GridField};
pub use mc::{mc_bridge_survival, mc_survival, PathOpts};
pub use pde::{solve_pam_mass, Init, PdeOpts};

use crate::error::{invalid, Result};
use serde::{Deserialize, Serialize};

/// p(t, x, y) = (4πκt)^{−d/2} exp(−|x−y|²/(4κt)).
pub fn heat_kernel(t: f64, x: &[f64], y: &[f64], kappa: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(invalid("t", "heat kernel needs t > 0"));
    }
    if x.len() != y.len() {
        return Err(invalid("x", "dimension mismatch"));
    }
    let d = x.len() as f64;
    let r2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((4.0 * std::f64::consts::PI * kappa * t).powf(-0.5 * d) * (-r2 / (4.0 * kappa * t)).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Pde,
    Mc,
    Bridge,
    AnnealedPath,
}

/// Survival probability stored as a logarithm, with its relative standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalEstimate {
    pub log_value: f64,
    /// standard error divided by the value (0 for deterministic solvers)
    pub rel_std_err: f64,
    pub method: Method,
    pub t: f64,
    pub dt: f64,
    pub h: Option<f64>,
    pub n_paths: Option<usize>,
    /// Kish effective sample size of the weights, when sampling
    pub ess: Option<f64>,
    pub reliable: bool,
}

impl SurvivalEstimate {
    pub fn value(&self) -> f64 {
        self.log_value.exp()
    }

    pub fn std_err(&self) -> f64 {
        self.rel_std_err * self.value()
    }

    /// Standard error of log(value), by the delta method.
    pub fn log_std_err(&self) -> f64 {
        self.rel_std_err
    }
}

/// Mean of exp(lᵢ) in log space with relative standard error and Kish ESS.
pub(crate) fn log_mean_exp(logs: &[f64]) -> (f64, f64, f64) {
    let n = logs.len() as f64;
    let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return (f64::NEG_INFINITY, f64::INFINITY, 0.0);
    }
    let w: Vec<f64> = logs.iter().map(|l| (l - m).exp()).collect();
    let s1 = crate::sum::neumaier_sum(w.iter().copied());
    let s2 = crate::sum::neumaier_sum(w.iter().map(|x| x * x));
    let mean = s1 / n;
    let var = ((s2 / n) - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
    let rel = (var / n).sqrt() / mean;
    (m + mean.ln(), rel, s1 * s1 / s2)
}
