use super::{GridField, Method, SurvivalEstimate};
use crate::error::{invalid, PamError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Init {
    /// unit mass at the node nearest the origin
    Delta,
    /// constant initial data; the mass is reported relative to its initial value
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdeOpts {
    /// leading steps whose diffusion uses two backward-Euler half steps instead of Crank–Nicolson
    pub startup_steps: usize,
    /// relative mass increase that aborts the run
    pub mass_tol: f64,
}

impl Default for PdeOpts {
    fn default() -> Self {
        Self {
            startup_steps: 2,
            mass_tol: 1e-10,
        }
    }
}

/// Factored constant-coefficient tridiagonal system (1 + 2a) on the diagonal, −a off it.
struct ConstSolve {
    c: Vec<f64>,
    inv: Vec<f64>,
    a: f64,
}

impl ConstSolve {
    fn new(n: usize, a: f64) -> Self {
        let mut c = vec![0.0; n];
        let mut inv = vec![0.0; n];
        let diag = 1.0 + 2.0 * a;
        let mut denom = diag;
        inv[0] = 1.0 / denom;
        c[0] = -a * inv[0];
        for i in 1..n {
            denom = diag + a * c[i - 1];
            inv[i] = 1.0 / denom;
            c[i] = -a * inv[i];
        }
        Self { c, inv, a }
    }

    /// in-place solve along a strided line
    fn solve(&self, u: &mut [f64], start: usize, stride: usize) {
        let n = self.c.len();
        let mut prev = 0.0;
        for i in 0..n {
            let k = start + i * stride;
            let v = (u[k] + self.a * prev) * self.inv[i];
            u[k] = v;
            prev = v;
        }
        for i in (0..n - 1).rev() {
            let k = start + i * stride;
            u[k] -= self.c[i] * u[k + stride];
        }
    }
}

/// (I − aT)u along a strided line, T = tridiag(−1, 2, −1) with zero boundary values.
fn explicit_half(u: &mut [f64], start: usize, stride: usize, n: usize, a: f64, buf: &mut Vec<f64>) {
    buf.clear();
    buf.extend((0..n).map(|i| u[start + i * stride]));
    for i in 0..n {
        let left = if i > 0 { buf[i - 1] } else { 0.0 };
        let right = if i + 1 < n { buf[i + 1] } else { 0.0 };
        u[start + i * stride] = (1.0 - 2.0 * a) * buf[i] + a * (left + right);
    }
}

fn lines(dims: &[usize], axis: usize) -> Vec<(usize, usize)> {
    // (start, stride) of every line parallel to `axis`
    let stride: usize = dims[axis + 1..].iter().product();
    let total: usize = dims.iter().product();
    let n = dims[axis];
    (0..total)
        .filter(|k| (k / stride) % n == 0)
        .map(|k| (k, stride))
        .collect()
}

/// Total mass at time t of ∂ₜu = κΔu − Vu with zero Dirichlet data on the lattice boundary.
///
/// Strang splitting: exact e^{−V dt/2} factors around a diffusion step that is Crank–Nicolson,
/// except for the first `startup_steps` steps, which use two backward-Euler half steps to damp the
/// high-frequency content of the point initial data. In d = 2 the diffusion step is a product of
/// one-dimensional solves along each axis (the directional operators commute on a box).
pub fn solve_pam_mass(field: &GridField, t: f64, kappa: f64, dt: f64, init: Init) -> Result<SurvivalEstimate> {
    solve_pam_mass_opts(field, t, kappa, dt, init, PdeOpts::default())
}

pub fn solve_pam_mass_opts(
    field: &GridField,
    t: f64,
    kappa: f64,
    dt: f64,
    init: Init,
    opts: PdeOpts,
) -> Result<SurvivalEstimate> {
    if !(dt > 0.0) || !(t >= 0.0) || !(kappa > 0.0) {
        return Err(invalid("dt", "need dt > 0, t >= 0, kappa > 0"));
    }
    let steps_f = t / dt;
    let steps = steps_f.round() as usize;
    if (steps_f - steps as f64).abs() > 1e-9 * steps_f.max(1.0) {
        return Err(invalid("dt", format!("t = {t} is not a multiple of dt = {dt}")));
    }
    if field.d() > 2 {
        return Err(PamError::Unsupported("PDE solves are limited to d <= 2".into()));
    }
    let h = field.h;
    let d = field.d();
    let cell = h.powi(d as i32);
    let n = field.len();
    let mut u = vec![0.0; n];
    match init {
        Init::Delta => {
            let origin = vec![0.0; d];
            let k = field
                .nearest(&origin)
                .ok_or_else(|| invalid("field", "origin is not inside the lattice"))?;
            u[k] = 1.0 / cell;
        }
        Init::Uniform => u.iter_mut().for_each(|v| *v = 1.0),
    }
    let mass0: f64 = u.iter().sum::<f64>() * cell;
    let half: Vec<f64> = field.values.iter().map(|v| (-0.5 * dt * v).exp()).collect();
    let axis_lines: Vec<Vec<(usize, usize)>> = (0..d).map(|a| lines(&field.dims, a)).collect();
    let a_cn = 0.5 * kappa * dt / (h * h);
    let a_be = 0.5 * kappa * dt / (h * h);
    let cn: Vec<ConstSolve> = field.dims.iter().map(|&m| ConstSolve::new(m, a_cn)).collect();
    let be: Vec<ConstSolve> = field.dims.iter().map(|&m| ConstSolve::new(m, a_be)).collect();
    let mut buf = Vec::new();
    let mut mass_prev = mass0;
    for step in 0..steps {
        for (v, f) in u.iter_mut().zip(&half) {
            *v *= f;
        }
        for axis in 0..d {
            let m = field.dims[axis];
            for &(start, stride) in &axis_lines[axis] {
                if step < opts.startup_steps {
                    // two backward-Euler steps of length dt/2: (I + κ(dt/2)/h² T)
                    be[axis].solve(&mut u, start, stride);
                    be[axis].solve(&mut u, start, stride);
                } else {
                    explicit_half(&mut u, start, stride, m, a_cn, &mut buf);
                    cn[axis].solve(&mut u, start, stride);
                }
            }
        }
        for (v, f) in u.iter_mut().zip(&half) {
            *v *= f;
        }
        let mass: f64 = crate::sum::neumaier_sum(u.iter().copied()) * cell;
        if mass - mass_prev > opts.mass_tol * mass0 {
            return Err(PamError::Instability {
                step,
                time: (step + 1) as f64 * dt,
                increase: (mass - mass_prev) / mass0,
            });
        }
        mass_prev = mass;
    }
    let rel = mass_prev / mass0;
    if !(rel > 0.0) {
        return Err(invalid("t", "mass underflowed to zero"));
    }
    Ok(SurvivalEstimate {
        log_value: rel.ln(),
        rel_std_err: 0.0,
        method: Method::Pde,
        t,
        dt,
        h: Some(h),
        n_paths: None,
        ess: None,
        reliable: true,
    })
}
