use super::{assemble, smallest_eigenpair, Bc};
use crate::error::{invalid, Result};
use crate::fk::GridField;
use crate::model::{scale_and_tilt, ModelParams};
use crate::ppp::{BoxRegion, PointConfig};
use crate::tridiag::SymTridiag;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PocketCandidate {
    pub center: Vec<f64>,
    pub lambda1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PocketResult {
    pub center: Vec<f64>,
    pub lambda1: f64,
    pub ball_radius: f64,
    pub search_radius: f64,
    pub candidates: Vec<PocketCandidate>,
}

/// Search radius t(log t)^{−3} for pocket centres.
pub fn pocket_search_radius(t: f64) -> f64 {
    t * t.ln().powi(-3)
}

/// Scans ball centres on a lattice of spacing `stride` over |c|_∞ ≤ t(log t)^{−3} and returns the ball
/// B(c, M(log t)^{(α−d+2)/(4d)}) with the smallest Dirichlet λ₁ of −κΔ+V. Ties go to the
/// lexicographically smallest centre. `config` must allow evaluation on the search region widened by
/// the ball radius plus one cell.
pub fn pocket_search(
    config: &PointConfig,
    params: &ModelParams,
    t: f64,
    m: f64,
    h: f64,
    stride: f64,
) -> Result<PocketResult> {
    if !(m > 0.0) {
        return Err(invalid("M", "need M > 0"));
    }
    if !(stride >= h) {
        return Err(invalid("stride", "stride must be at least the lattice spacing"));
    }
    let st = scale_and_tilt(params, t)?;
    let rb = st.ball_radius(params, m);
    let s = pocket_search_radius(t);
    if s < rb {
        return Err(invalid("t", format!("search region {s} is smaller than one ball (radius {rb})")));
    }
    let d = params.d;
    // the stride is rounded to whole cells so every candidate ball sees the same lattice shape
    let cells = (stride / h).round().max(1.0) as usize;
    let step = cells as f64 * h;
    let n_side = (s / step).floor() as usize;
    let half = (((s + rb) / h).ceil() as usize + 2) as f64 * h;
    let region = BoxRegion::cube(d, half)?;
    let field = GridField::from_config(config, &region, h)?;

    let per_axis: Vec<f64> = (0..=2 * n_side).map(|i| (i as f64 - n_side as f64) * step).collect();
    let total = per_axis.len().pow(d as u32);
    let centers: Vec<Vec<f64>> = (0..total)
        .map(|mut k| {
            let mut c = vec![0.0; d];
            for a in (0..d).rev() {
                c[a] = per_axis[k % per_axis.len()];
                k /= per_axis.len();
            }
            c
        })
        .collect();

    let candidates: Vec<PocketCandidate> = centers
        .into_par_iter()
        .map(|c| -> Result<PocketCandidate> {
            let lambda1 = ball_lambda1(&field, params.kappa, &c, rb)?;
            Ok(PocketCandidate { center: c, lambda1 })
        })
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, cand) in candidates.iter().enumerate() {
        if cand.lambda1 < candidates[best].lambda1 {
            best = i;
        }
    }
    Ok(PocketResult {
        center: candidates[best].center.clone(),
        lambda1: candidates[best].lambda1,
        ball_radius: rb,
        search_radius: s,
        candidates,
    })
}

/// Dirichlet λ₁ of −κΔ+V on the lattice nodes within `radius` of `center`.
pub fn ball_lambda1(field: &GridField, kappa: f64, center: &[f64], radius: f64) -> Result<f64> {
    if field.d() == 1 {
        let x0 = field.lower[0];
        let h = field.h;
        let lo = (((center[0] - radius - x0) / h - 1.0) - 1e-9).ceil().max(0.0) as usize;
        let hi = ((((center[0] + radius - x0) / h - 1.0) + 1e-9).floor() as usize).min(field.dims[0] - 1);
        if hi < lo {
            return Err(invalid("radius", "ball contains no lattice node"));
        }
        let c = kappa / (h * h);
        let diag: Vec<f64> = field.values[lo..=hi].iter().map(|v| 2.0 * c + v).collect();
        let a = SymTridiag::new(diag, vec![-c; hi - lo])?;
        return Ok(a.eigenvalue_bisect(1));
    }
    let op = assemble(field, Bc::Dirichlet, kappa)?.restrict_ball(center, radius)?;
    Ok(smallest_eigenpair(&op, 1e-9)?.eigenvalue)
}
