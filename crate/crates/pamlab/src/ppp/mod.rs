//! Poisson point processes, the potential they generate, and Campbell-formula oracles.

mod campbell;
mod sample;

pub use campbell::{
    campbell_charfn, campbell_laplace, campbell_moments, CampbellMoments, CampbellSpec, ComplexValue, Decay,
    IntensityProfile,
};
pub use sample::{sample_homogeneous, sample_tilted, tilted_potential_at_origin, tilted_shells};

use crate::error::{invalid, PamError, Result};
use crate::model::{ball_geometry, shape_hat_r2, ModelParams};
use crate::sum::Neumaier;
use serde::{Deserialize, Serialize};

/// Axis-aligned box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxRegion {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxRegion {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(invalid("box", "corner dimensions disagree"));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(u > l) || !l.is_finite() || !u.is_finite()) {
            return Err(invalid("box", "need lower < upper on every axis"));
        }
        Ok(Self { lower, upper })
    }

    /// (−r, r)^d
    pub fn cube(d: usize, r: f64) -> Result<Self> {
        Self::new(vec![-r; d], vec![r; d])
    }

    pub fn centered(center: &[f64], r: f64) -> Result<Self> {
        Self::new(
            center.iter().map(|c| c - r).collect(),
            center.iter().map(|c| c + r).collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn volume(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(l, u)| u - l).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (l, u))| *v >= *l && *v <= *u)
    }

    pub fn contains_box(&self, other: &BoxRegion) -> bool {
        self.dim() == other.dim()
            && (0..self.dim()).all(|i| other.lower[i] >= self.lower[i] && other.upper[i] <= self.upper[i])
    }

    /// Smallest gap between `inner` and the boundary of `self`.
    pub fn margin_to(&self, inner: &BoxRegion) -> f64 {
        (0..self.dim())
            .map(|i| (inner.lower[i] - self.lower[i]).min(self.upper[i] - inner.upper[i]))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn translate(&self, shift: &[f64]) -> BoxRegion {
        BoxRegion {
            lower: self.lower.iter().zip(shift).map(|(a, s)| a + s).collect(),
            upper: self.upper.iter().zip(shift).map(|(a, s)| a + s).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IntensityDescriptor {
    Homogeneous { nu: f64 },
    Tilted { nu: f64, rho: f64 },
}

impl IntensityDescriptor {
    pub fn nu(&self) -> f64 {
        match *self {
            Self::Homogeneous { nu } | Self::Tilted { nu, .. } => nu,
        }
    }
}

/// Replay key of the random stream a configuration was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedTag {
    pub master: u64,
    pub task: u64,
}

/// Points of a Poisson configuration inside `sample_box`.
///
/// `points` is flat (d coordinates per point) and sorted by the first coordinate.
/// Potential evaluations are only allowed inside `eval_region`; they add `tail_compensation`,
/// the mean contribution of the points beyond the sampling box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointConfig {
    pub d: usize,
    pub alpha: f64,
    pub points: Vec<f64>,
    pub sample_box: BoxRegion,
    pub eval_region: BoxRegion,
    pub intensity: IntensityDescriptor,
    pub tail_compensation: f64,
    pub seed: Option<SeedTag>,
}

/// ν σ_d R^{d−α}/(α−d): mean potential from points at distance beyond R.
pub fn far_field_mean(params: &ModelParams, r: f64) -> f64 {
    let d = params.df();
    params.nu * ball_geometry(params.d).sigma_d * r.powf(d - params.alpha) / (params.alpha - d)
}

impl PointConfig {
    /// Builds a configuration from explicit points (flat layout), without compensation.
    pub fn from_points(params: &ModelParams, mut points: Vec<f64>, sample_box: BoxRegion) -> Result<Self> {
        let d = params.d;
        if sample_box.dim() != d || points.len() % d != 0 {
            return Err(invalid("points", "dimension mismatch"));
        }
        for p in points.chunks(d) {
            if !sample_box.contains(p) {
                return Err(invalid("points", format!("point {p:?} outside the sampling box")));
            }
        }
        sort_points(&mut points, d);
        Ok(Self {
            d,
            alpha: params.alpha,
            points,
            eval_region: sample_box.clone(),
            sample_box,
            intensity: IntensityDescriptor::Homogeneous { nu: params.nu },
            tail_compensation: 0.0,
            seed: None,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.d..(i + 1) * self.d]
    }

    /// Restricts evaluation to `region` and switches on far-field compensation for the gap
    /// between `region` and the sampling box.
    pub fn with_compensation(mut self, params: &ModelParams, region: BoxRegion) -> Result<Self> {
        if !self.sample_box.contains_box(&region) {
            return Err(invalid("region", "evaluation region must lie inside the sampling box"));
        }
        let r_eff = self.sample_box.margin_to(&region);
        if !(r_eff > 0.0) {
            return Err(invalid("region", "evaluation region must be strictly inside the sampling box"));
        }
        self.tail_compensation = far_field_mean(params, r_eff);
        self.eval_region = region;
        Ok(self)
    }

    /// Restricts evaluation to `region` with compensation switched off.
    pub fn with_eval_region(mut self, region: BoxRegion) -> Result<Self> {
        if !self.sample_box.contains_box(&region) {
            return Err(invalid("region", "evaluation region must lie inside the sampling box"));
        }
        self.eval_region = region;
        self.tail_compensation = 0.0;
        Ok(self)
    }

    /// Sub-configuration of the points inside `window` (a sub-box), carrying the given evaluation region
    /// and compensation computed for the new geometry.
    pub fn window(&self, params: &ModelParams, window: BoxRegion, region: BoxRegion) -> Result<Self> {
        if !self.sample_box.contains_box(&window) {
            return Err(invalid("window", "window must lie inside the sampling box"));
        }
        let d = self.d;
        let mut pts = Vec::new();
        let (lo, hi) = (window.lower[0], window.upper[0]);
        let start = self.points.chunks(d).position(|p| p[0] >= lo).unwrap_or(self.len());
        for p in self.points[start * d..].chunks(d) {
            if p[0] > hi {
                break;
            }
            if window.contains(p) {
                pts.extend_from_slice(p);
            }
        }
        let mut out = PointConfig {
            d,
            alpha: self.alpha,
            points: pts,
            sample_box: window,
            eval_region: region.clone(),
            intensity: self.intensity,
            tail_compensation: 0.0,
            seed: self.seed,
        };
        out = out.with_compensation(params, region)?;
        Ok(out)
    }

    /// Same configuration seen from `origin`: every coordinate shifted by −origin.
    pub fn recentered(&self, origin: &[f64]) -> Self {
        let neg: Vec<f64> = origin.iter().map(|o| -o).collect();
        let mut pts = self.points.clone();
        for p in pts.chunks_mut(self.d) {
            for (c, o) in p.iter_mut().zip(origin) {
                *c -= o;
            }
        }
        Self {
            points: pts,
            sample_box: self.sample_box.translate(&neg),
            eval_region: self.eval_region.translate(&neg),
            ..self.clone()
        }
    }

    /// Potential without the region check. Used by path estimators, whose paths may leave the region.
    pub fn potential_unchecked(&self, x: &[f64]) -> f64 {
        potential_sum(self.alpha, self.d, &self.points, x) + self.tail_compensation
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("PointConfig serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| invalid("json", e.to_string()))
    }
}

pub(crate) fn sort_points(points: &mut Vec<f64>, d: usize) {
    if d == 1 {
        points.sort_by(f64::total_cmp);
        return;
    }
    let mut rows: Vec<&[f64]> = points.chunks(d).collect();
    rows.sort_by(|a, b| {
        for (x, y) in a.iter().zip(b.iter()) {
            match x.total_cmp(y) {
                std::cmp::Ordering::Equal => continue,
                o => return o,
            }
        }
        std::cmp::Ordering::Equal
    });
    *points = rows.concat();
}

const BLOCK: usize = 256;

/// Σᵢ v̂(x − ωᵢ) with blocked accumulation and compensated summation across blocks.
pub(crate) fn potential_sum(alpha: f64, d: usize, points: &[f64], x: &[f64]) -> f64 {
    let mut total = Neumaier::new();
    if d == 1 {
        let x0 = x[0];
        for block in points.chunks(BLOCK) {
            let mut lanes = [0.0f64; 4];
            let mut it = block.chunks_exact(4);
            if alpha == 2.0 {
                for c in &mut it {
                    for j in 0..4 {
                        let r = c[j] - x0;
                        lanes[j] += 1.0 / (r * r).max(1.0);
                    }
                }
            } else {
                for c in &mut it {
                    for j in 0..4 {
                        let r = c[j] - x0;
                        lanes[j] += shape_hat_r2(alpha, r * r);
                    }
                }
            }
            let mut s = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
            for &p in it.remainder() {
                let r = p - x0;
                s += shape_hat_r2(alpha, r * r);
            }
            total.add(s);
        }
    } else {
        for block in points.chunks(BLOCK * d) {
            let mut s = 0.0;
            for p in block.chunks_exact(d) {
                let r2: f64 = p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                s += shape_hat_r2(alpha, r2);
            }
            total.add(s);
        }
    }
    total.total()
}

/// V(x) = Σ v̂(x − ωᵢ) + compensation, for x in the evaluation region.
pub fn eval_potential(config: &PointConfig, x: &[f64]) -> Result<f64> {
    if !config.eval_region.contains(x) {
        return Err(PamError::OutsideRegion(x.to_vec()));
    }
    Ok(config.potential_unchecked(x))
}

/// Maximum of the potential over the lattice lower + k·spacing inside `region`.
pub fn sup_potential_grid(config: &PointConfig, region: &BoxRegion, spacing: f64) -> Result<f64> {
    if !(spacing > 0.0 && spacing <= 0.25) {
        return Err(invalid("spacing", "need 0 < spacing <= 0.25 to resolve the cap"));
    }
    if !config.eval_region.contains_box(region) {
        return Err(invalid("region", "lattice region must lie inside the evaluation region"));
    }
    let d = config.d;
    let counts: Vec<usize> = (0..d)
        .map(|i| ((region.upper[i] - region.lower[i]) / spacing).floor() as usize + 1)
        .collect();
    let total: usize = counts.iter().product();
    use rayon::prelude::*;
    let best = (0..total)
        .into_par_iter()
        .map(|mut k| {
            let mut x = vec![0.0; d];
            for i in (0..d).rev() {
                x[i] = region.lower[i] + (k % counts[i]) as f64 * spacing;
                k /= counts[i];
            }
            config.potential_unchecked(&x)
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p12() -> ModelParams {
        ModelParams::new(1, 2.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn examples() {
        let p = p12();
        let b = BoxRegion::cube(1, 10.0).unwrap();
        let c = PointConfig::from_points(&p, vec![0.0], b.clone()).unwrap();
        assert_eq!(eval_potential(&c, &[2.0]).unwrap(), 0.25);
        let c = PointConfig::from_points(&p, vec![1.0, -1.0], b).unwrap();
        assert_eq!(eval_potential(&c, &[0.0]).unwrap(), 2.0);
        let big = BoxRegion::cube(1, 110.0).unwrap();
        let c = PointConfig::from_points(&p, vec![], big)
            .unwrap()
            .with_compensation(&p, BoxRegion::cube(1, 10.0).unwrap())
            .unwrap();
        assert!((c.tail_compensation - 0.02).abs() < 1e-15);
        assert!(eval_potential(&c, &[20.0]).is_err());
    }

    #[test]
    fn sup_single_point() {
        let p = p12();
        let c = PointConfig::from_points(&p, vec![0.3], BoxRegion::cube(1, 5.0).unwrap()).unwrap();
        let s = sup_potential_grid(&c, &BoxRegion::cube(1, 4.0).unwrap(), 0.1).unwrap();
        assert_eq!(s, 1.0);
        let e = PointConfig::from_points(&p, vec![], BoxRegion::cube(1, 5.0).unwrap()).unwrap();
        assert_eq!(sup_potential_grid(&e, &BoxRegion::cube(1, 4.0).unwrap(), 0.1).unwrap(), 0.0);
    }
}
