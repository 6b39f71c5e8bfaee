//! Discrete Schrödinger operators −κΔ + V: principal eigenpairs, eigenvalue counts, IDS, trial
//! functions and pocket search.

mod ids;
mod lanczos;
mod laplace;
mod pocket;
mod rayleigh;

pub use ids::{ids_environment, ids_estimate, ids_estimate_paired, restrict_cube, IdsCurve, IdsOpts};
pub use laplace::{bridge_trace_density, ids_laplace_identity, laplace_transform_counts, LaplaceOpts, LaplacePoint};
pub use pocket::{ball_lambda1, pocket_search, pocket_search_radius, PocketCandidate, PocketResult};
pub use rayleigh::rayleigh_trial;

use crate::error::{invalid, PamError, Result};
use crate::fk::GridField;
use crate::tridiag::SymTridiag;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bc {
    Dirichlet,
    Neumann,
}

/// −κΔ_h + V on the interior nodes of a [`GridField`], optionally restricted to a node mask
/// (nodes outside the mask carry a Dirichlet zero).
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteOperator {
    pub lower: Vec<f64>,
    pub dims: Vec<usize>,
    pub h: f64,
    pub kappa: f64,
    pub bc: Bc,
    pub potential: Vec<f64>,
    pub mask: Option<Vec<bool>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    pub eigenvalue: f64,
    /// unit ℓ² norm, nonnegative for the principal pair
    pub eigenvector: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Second-order finite differences. Neumann drops the couplings to the lattice boundary, so each
/// boundary row has only its interior neighbours on the diagonal.
pub fn assemble(field: &GridField, bc: Bc, kappa: f64) -> Result<DiscreteOperator> {
    if !(field.h > 0.0) {
        return Err(invalid("h", "spacing must be positive"));
    }
    if !(kappa > 0.0) {
        return Err(invalid("kappa", "need kappa > 0"));
    }
    if field.values.iter().any(|v| !v.is_finite()) {
        return Err(invalid("potential", "non-finite potential value"));
    }
    if field.d() > 2 {
        return Err(PamError::Unsupported("operators are limited to d <= 2".into()));
    }
    Ok(DiscreteOperator {
        lower: field.lower.clone(),
        dims: field.dims.clone(),
        h: field.h,
        kappa,
        bc,
        potential: field.values.clone(),
        mask: None,
    })
}

impl DiscreteOperator {
    pub fn d(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.potential.len()
    }

    pub fn is_empty(&self) -> bool {
        self.potential.is_empty()
    }

    fn active(&self, k: usize) -> bool {
        self.mask.as_ref().is_none_or(|m| m[k])
    }

    pub fn coords(&self, k: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.d()];
        crate::fk::field::node_coords(&self.lower, self.h, &self.dims, k, &mut x);
        x
    }

    /// Diagonal kinetic weight of node k along all axes.
    fn kinetic_diag(&self, k: usize) -> f64 {
        let c = self.kappa / (self.h * self.h);
        match self.bc {
            Bc::Dirichlet => 2.0 * c * self.d() as f64,
            Bc::Neumann => {
                let mut rem = k;
                let mut total = 0.0;
                for i in (0..self.d()).rev() {
                    let idx = rem % self.dims[i];
                    rem /= self.dims[i];
                    total += if idx == 0 || idx + 1 == self.dims[i] { c } else { 2.0 * c };
                }
                total
            }
        }
    }

    /// The tridiagonal matrix of a one-dimensional operator (mask must be absent or contiguous).
    pub fn tridiag(&self) -> Result<SymTridiag> {
        if self.d() != 1 {
            return Err(PamError::Unsupported("tridiagonal form exists only for d = 1".into()));
        }
        let (lo, hi) = match &self.mask {
            None => (0, self.len()),
            Some(m) => {
                let lo = m.iter().position(|&b| b).ok_or_else(|| invalid("mask", "empty mask"))?;
                let hi = m.iter().rposition(|&b| b).unwrap() + 1;
                if m[lo..hi].iter().any(|&b| !b) {
                    return Err(invalid("mask", "d = 1 mask must be an interval"));
                }
                (lo, hi)
            }
        };
        let c = self.kappa / (self.h * self.h);
        let mut diag: Vec<f64> = (lo..hi).map(|k| self.kinetic_diag(k) + self.potential[k]).collect();
        if self.mask.is_some() && self.bc == Bc::Neumann {
            // a masked interval is Dirichlet at cut ends
            diag[0] = 2.0 * c + self.potential[lo];
            let last = diag.len() - 1;
            diag[last] = 2.0 * c + self.potential[hi - 1];
        }
        SymTridiag::new(diag, vec![-c; hi - lo - 1])
    }

    /// y = A x on the full node vector; masked-out nodes map to zero.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let c = self.kappa / (self.h * self.h);
        let d = self.d();
        let n = self.len();
        let strides: Vec<usize> = (0..d).map(|i| self.dims[i + 1..].iter().product()).collect();
        for k in 0..n {
            if !self.active(k) {
                y[k] = 0.0;
                continue;
            }
            let mut s = (self.kinetic_diag(k) + self.potential[k]) * x[k];
            for i in 0..d {
                let idx = (k / strides[i]) % self.dims[i];
                if idx > 0 && self.active(k - strides[i]) {
                    s -= c * x[k - strides[i]];
                }
                if idx + 1 < self.dims[i] && self.active(k + strides[i]) {
                    s -= c * x[k + strides[i]];
                }
            }
            y[k] = s;
        }
    }

    pub fn norm_bound(&self) -> f64 {
        let c = self.kappa / (self.h * self.h);
        let vmax = self.potential.iter().copied().fold(0.0, f64::max);
        4.0 * c * self.d() as f64 + vmax
    }

    /// Same operator with V replaced by V + c.
    pub fn shifted(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.potential.iter_mut().for_each(|v| *v += c);
        out
    }

    /// Dirichlet restriction to the lattice nodes with |x − center| ≤ radius.
    pub fn restrict_ball(&self, center: &[f64], radius: f64) -> Result<Self> {
        let mask: Vec<bool> = (0..self.len())
            .map(|k| {
                let x = self.coords(k);
                in_ball(x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum(), radius, self.h)
            })
            .collect();
        if !mask.iter().any(|&b| b) {
            return Err(invalid("radius", "ball contains no lattice node"));
        }
        let mut out = self.clone();
        out.bc = Bc::Dirichlet;
        out.mask = Some(mask);
        Ok(out)
    }
}

// lattice-ball membership with a small slack so nodes on the sphere are in
pub(crate) fn in_ball(r2: f64, radius: f64, h: f64) -> bool {
    let r = radius + 1e-9 * h;
    r2 <= r * r
}

/// Lowest eigenpair. d = 1: Sturm bisection for the eigenvalue, then inverse iteration with a shift
/// just below it. d = 2: Lanczos with selective reorthogonalization, matrix-free.
pub fn smallest_eigenpair(op: &DiscreteOperator, tol: f64) -> Result<EigenResult> {
    if op.d() == 1 {
        smallest_1d(op, tol)
    } else {
        smallest_lanczos(op, tol)
    }
}

fn smallest_1d(op: &DiscreteOperator, tol: f64) -> Result<EigenResult> {
    let a = op.tridiag()?;
    let n = a.len();
    let norm = a.norm_bound();
    let lam = a.eigenvalue_bisect(1);
    let sigma = lam - 1e-10 * norm.max(1.0);
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut y = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    let mut ax = vec![0.0; n];
    let mut best = (lam, x.clone(), f64::INFINITY);
    for it in 1..=100 {
        a.solve_shifted(sigma, &x, &mut y, &mut scratch);
        let nrm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        x.iter_mut().zip(&y).for_each(|(xi, yi)| *xi = yi / nrm);
        a.matvec(&x, &mut ax);
        let rq: f64 = x.iter().zip(&ax).map(|(p, q)| p * q).sum();
        let res = ax.iter().zip(&x).map(|(p, q)| (p - rq * q).powi(2)).sum::<f64>().sqrt();
        if res < best.2 {
            best = (rq, x.clone(), res);
        }
        if res <= tol * norm {
            return Ok(EigenResult {
                eigenvalue: rq,
                eigenvector: embed(op, x),
                residual: res,
                iterations: it,
            });
        }
    }
    Err(PamError::EigenNonConvergence {
        iterations: 100,
        eigenvalue: best.0,
        residual: best.2,
        eigenvector: embed(op, best.1),
    })
}

// place an interval-mask vector back into the full lattice vector
fn embed(op: &DiscreteOperator, v: Vec<f64>) -> Vec<f64> {
    match &op.mask {
        None => v,
        Some(m) => {
            let lo = m.iter().position(|&b| b).unwrap_or(0);
            let mut out = vec![0.0; op.len()];
            out[lo..lo + v.len()].copy_from_slice(&v);
            out
        }
    }
}

fn smallest_lanczos(op: &DiscreteOperator, tol: f64) -> Result<EigenResult> {
    let n = op.len();
    let start: Vec<f64> = (0..n).map(|k| if op.active(k) { 1.0 } else { 0.0 }).collect();
    let out = lanczos::lanczos_lowest(|x, y| op.apply(x, y), start, op.norm_bound(), tol, 400, 30)?;
    let mut v = out.vector;
    if v.iter().sum::<f64>() < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    Ok(EigenResult {
        eigenvalue: out.value,
        eigenvector: v,
        residual: out.residual,
        iterations: out.iterations,
    })
}

/// Number of eigenvalues strictly below λ.
///
/// d = 1: Sturm sequence. d = 2: inertia of the banded LDLᵀ factorization of A − λI (natural
/// ordering, no pivoting, zero pivots nudged to +tiny so that λ itself is not counted).
pub fn count_below(op: &DiscreteOperator, lambda: f64) -> Result<usize> {
    if !lambda.is_finite() {
        return Err(invalid("lambda", "threshold must be finite"));
    }
    if op.d() == 1 {
        return Ok(op.tridiag()?.count_below(lambda));
    }
    Ok(banded_inertia(op, lambda))
}

/// `count_below` for a batch of thresholds.
pub fn count_below_many(op: &DiscreteOperator, lambdas: &[f64]) -> Result<Vec<usize>> {
    if op.d() == 1 {
        return Ok(op.tridiag()?.count_below_many(lambdas));
    }
    lambdas.iter().map(|&l| count_below(op, l)).collect()
}

fn banded_inertia(op: &DiscreteOperator, lambda: f64) -> usize {
    let active: Vec<usize> = (0..op.len()).filter(|&k| op.active(k)).collect();
    let m = active.len();
    let mut pos = vec![usize::MAX; op.len()];
    for (i, &k) in active.iter().enumerate() {
        pos[k] = i;
    }
    let bw = op.dims[1];
    // band storage: a[i][j] for j in 0..=bw is entry (i, i + j)
    let mut band = vec![0.0; m * (bw + 1)];
    let c = op.kappa / (op.h * op.h);
    let stride = [op.dims[1], 1];
    for (i, &k) in active.iter().enumerate() {
        band[i * (bw + 1)] = op.kinetic_diag(k) + op.potential[k] - lambda;
        for (ax, &s) in stride.iter().enumerate() {
            let idx = (k / s) % op.dims[ax];
            if idx + 1 < op.dims[ax] && pos[k + s] != usize::MAX {
                let j = pos[k + s] - i;
                if j <= bw {
                    band[i * (bw + 1) + j] = -c;
                }
            }
        }
    }
    let mut neg = 0;
    for i in 0..m {
        let mut piv = band[i * (bw + 1)];
        if piv == 0.0 {
            piv = 1e-290;
        }
        if piv < 0.0 {
            neg += 1;
        }
        let jmax = bw.min(m - 1 - i);
        for j in 1..=jmax {
            let lij = band[i * (bw + 1) + j] / piv;
            if lij == 0.0 {
                continue;
            }
            for l in j..=jmax {
                let u = band[i * (bw + 1) + l];
                if u != 0.0 {
                    band[(i + j) * (bw + 1) + (l - j)] -= lij * u;
                }
            }
        }
    }
    neg
}
