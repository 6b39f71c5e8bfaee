//! One function per experiment. Each is a pure function of the config.

use crate::config::ExperimentConfig;
use crate::report::{Assertion, Curve, ErrorKind, Measurement};
use crate::CliError;
use pamlab::fk::{annealed_survival_path, default_ou_theta, mc_survival, pilot_ou_theta, solve_pam_mass, AnnealedTilt, GridField, Init, PathOpts};
use pamlab::gk::{assumption_h_gap, eval_jlimit, eval_jt, eval_jt_split, hessian_moment, hessian_moment_closed, inner_cutoff, CompactMeasure};
use pamlab::model::{
    a2_variational, ball_geometry, constants, h_exact, h_residual, quadratic_coefficient, scale_and_tilt, shape_hat_r2,
    GridSpec, ModelParams,
};
use pamlab::ppp::{campbell_moments, sample_homogeneous, BoxRegion, CampbellSpec, Decay, IntensityProfile, PointConfig};
use pamlab::quad::{integrate_breaks, QuadOpts};
use pamlab::rng::{child_seed, rng_stream};
use pamlab::spectral::{
    assemble, ball_lambda1, count_below_many, ids_estimate_paired, ids_laplace_identity, pocket_search, pocket_search_radius,
    rayleigh_trial, restrict_cube, smallest_eigenpair, Bc, IdsCurve, IdsOpts, LaplaceOpts,
};
use pamlab::stats::{least_squares, linear_fit, mean_stderr, variance_stderr, MeanEstimate};
use pamlab::tilt::{
    dlogt_residual, local_density_ratio, pocket_probability_is, radon_nikodym_check, tilted_clt_sample, tilted_mean_potential,
    tilted_v0_samples, trial_variance_decay, TiltSpec,
};
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::f64::consts::PI;

#[derive(Default)]
pub(crate) struct Out {
    pub results: Vec<Measurement>,
    pub assertions: Vec<Assertion>,
    pub curves: BTreeMap<String, Curve>,
    pub notes: Vec<String>,
}

impl Out {
    fn push(&mut self, label: String, value: f64, error: f64, error_kind: ErrorKind) {
        if value.is_finite() && error.is_finite() {
            self.results.push(Measurement { label, value, error, error_kind });
        } else {
            self.notes.push(format!("{label}: value {value}, error {error} (not finite, omitted from results)"));
        }
    }

    fn exact(&mut self, label: impl Into<String>, v: f64) {
        self.push(label.into(), v, 0.0, ErrorKind::Exact);
    }

    fn quad(&mut self, label: impl Into<String>, v: f64, err: f64) {
        self.push(label.into(), v, err, ErrorKind::Quad);
    }

    fn mc(&mut self, label: impl Into<String>, v: f64, se: f64) {
        self.push(label.into(), v, se, ErrorKind::Stderr);
    }

    fn mean(&mut self, label: impl Into<String>, m: &MeanEstimate) {
        self.mc(label, m.mean, m.stderr);
    }

    fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.assertions.push(Assertion { name: name.into(), passed, detail: detail.into() });
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }
}

type Res = Result<Out, CliError>;

fn guard_nodes(cfg: &ExperimentConfig, nodes: f64, param: &str) -> Result<(), CliError> {
    if nodes > cfg.max_nodes {
        return Err(CliError::Resource { param: param.into(), what: "grid nodes", needed: nodes, cap: cfg.max_nodes });
    }
    Ok(())
}

fn guard_paths(cfg: &ExperimentConfig, paths: f64, param: &str) -> Result<(), CliError> {
    if paths > cfg.max_paths {
        return Err(CliError::Resource { param: param.into(), what: "paths", needed: paths, cap: cfg.max_paths });
    }
    Ok(())
}

fn max_of(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

pub(crate) fn dispatch(cfg: &ExperimentConfig) -> Res {
    match cfg.experiment.as_str() {
        "constants" => constants_exp(cfg),
        "verify-h" => verify_h(cfg),
        "verify-j" => verify_j(cfg),
        "campbell" => campbell(cfg),
        "tilt-clt" => tilt_clt(cfg),
        "local-limit" => local_limit(cfg),
        "ids" => ids(cfg),
        "laplace-identity" => laplace_identity(cfg),
        "annealed" => annealed(cfg),
        "quenched" => quenched(cfg),
        "pocket" => pocket(cfg),
        "pocket-prob" => pocket_prob(cfg),
        other => Err(CliError::Config(format!("unknown experiment `{other}`"))),
    }
}

// Γ(z) = ∫₀^∞ s^{z−1}e^{−s}ds; the adaptive rule handles the s^{z−1} endpoint for z < 1
fn gamma_quadrature(z: f64) -> Result<(f64, f64), CliError> {
    let q = integrate_breaks(&|s: f64| s.powf(z - 1.0) * (-s).exp(), &[0.0, 1.0, 5.0, 20.0, 60.0, 200.0, 800.0], QuadOpts::rel(1e-13))?;
    Ok((q.value, q.abs_err))
}

fn constants_exp(cfg: &ExperimentConfig) -> Res {
    let p = cfg.params()?;
    let mut o = Out::default();
    let c = constants(&p);
    let d = p.df();
    let a = p.alpha;
    for (k, v) in [("a1", c.a1), ("a2", c.a2), ("q1", c.q1), ("q2", c.q2), ("l1", c.l1), ("l2", c.l2)] {
        o.exact(k, v);
    }

    let ball = ball_geometry(p.d);
    let (g1, e1) = gamma_quadrature((a - d) / a)?;
    let a1_q = p.nu * ball.omega_d * g1;
    let (g2, e2) = gamma_quadrature((2.0 * a - d + 2.0) / a)?;
    let a2_q = (p.kappa * p.nu * a * ball.sigma_d * g2 / 2.0).sqrt();
    o.quad("a1_quadrature", a1_q, p.nu * ball.omega_d * e1);
    o.quad("a2_quadrature", a2_q, a2_q * e2 / (2.0 * g2));
    o.check("a1 closed form = quadrature ± 1e-6", (c.a1 - a1_q).abs() <= 1e-6, format!("{:.10} vs {a1_q:.10}", c.a1));
    o.check("a2 closed form = quadrature ± 1e-6", (c.a2 - a2_q).abs() <= 1e-6, format!("{:.10} vs {a2_q:.10}", c.a2));

    // discretization error from the h / (h/2) difference of a second-order scheme
    let grid = GridSpec { h: cfg.h, half_width: cfg.box_half_width };
    let var_coarse = a2_variational(&p, grid)?;
    let var_h = a2_variational(&p, GridSpec { h: 0.5 * cfg.h, ..grid })?;
    o.quad("a2_variational", var_h, (var_h - var_coarse).abs() / 3.0);
    let rel = (var_h / c.a2 - 1.0).abs();
    if p.d == 1 {
        o.check("a2_variational within 1e-3 of closed form", rel <= 1e-3, format!("relative difference {rel:.3e}"));
    } else {
        o.note(format!(
            "d = {}: a2_variational {var_h:.8} vs closed form {:.8} (relative {rel:.3e}); the closed form differs from d·√(κc) by √d",
            p.d, c.a2
        ));
    }

    let l1_from_q1 = d * c.q1.powf(d / (a - d));
    o.check("l1 = d·q1^{d/(α−d)}", (c.l1 - l1_from_q1).abs() <= 1e-12 * c.l1, format!("{} vs {l1_from_q1}", c.l1));
    if p.d == 1 && a == 2.0 && p.nu == 1.0 && p.kappa == 1.0 {
        // d = 1, α = 2: q2 = a2(a1/2)^{3/2}, l2 = a2(a1/2)^{1/2}
        let q2 = c.a2 * (c.a1 / 2.0).powf(1.5);
        let l2 = c.a2 * (c.a1 / 2.0).sqrt();
        let pairs = [("q1", c.q1, PI), ("l1", c.l1, PI), ("q2", c.q2, q2), ("l2", c.l2, l2)];
        for (k, v, want) in pairs {
            o.check(format!("{k} identity to 1e-12"), (v - want).abs() <= 1e-12 * want, format!("{v:.15} vs {want:.15}"));
        }
        o.check(
            "q2 ≈ 3.8477, l2 ≈ 2.1707",
            (c.q2 - 3.8477).abs() < 2e-4 && (c.l2 - 2.1707).abs() < 2e-4,
            format!("q2 {:.7}, l2 {:.7}", c.q2, c.l2),
        );
    }

    // log E[u(t,0)^p] ≈ −a1(pt)^{d/α} − a2(pt)^{(α+d−2)/(2α)}
    for &t in &cfg.t {
        let pt = cfg.p * t;
        let v = -c.a1 * pt.powf(d / a) - c.a2 * pt.powf((a + d - 2.0) / (2.0 * a));
        o.exact(format!("log_moment_prediction[t={t}]"), v);
    }
    Ok(o)
}

fn verify_h(cfg: &ExperimentConfig) -> Res {
    let p = cfg.params()?;
    let mut o = Out::default();
    let c = constants(&p);
    let d = p.df();
    let omega = ball_geometry(p.d).omega_d;
    let mut curve = Curve::new(&["t", "H", "H_err", "residual", "residual_err", "bound"]);
    for &t in &cfg.t {
        let h = h_exact(&p, t)?;
        let res = h_residual(&p, t)?;
        // ν∫_{|y|≤1}(e^{−t} − e^{−t|y|^{−α}}) ≤ νω_d e^{−t}
        let bound = p.nu * omega * (-t).exp();
        o.quad(format!("H[t={t}]"), h.value, h.abs_err);
        o.quad(format!("H+a1t^(d/a)[t={t}]"), res.value, res.abs_err);
        let direct = h.value + c.a1 * t.powf(d / p.alpha);
        o.quad(format!("H+a1t^(d/a)_direct[t={t}]"), direct, h.abs_err);
        o.check(
            format!("|H(t) + a1 t^(d/α)| ≤ νω_d e^(−t) at t={t}"),
            res.value.abs() <= bound && res.abs_err <= 1e-10,
            format!("residual {:.4e} (quad err {:.1e}), bound {bound:.4e}", res.value, res.abs_err),
        );
        curve.rows.push(vec![t, h.value, h.abs_err, res.value, res.abs_err, bound]);
    }
    o.curves.insert("h".into(), curve);
    Ok(o)
}

fn verify_j(cfg: &ExperimentConfig) -> Res {
    let p = cfg.params()?;
    let mut o = Out::default();
    let opts = QuadOpts::rel(1e-9);
    let hm = hessian_moment(&p, QuadOpts::rel(1e-12))?;
    let closed = hessian_moment_closed(&p);
    o.quad("hessian_moment", hm.value, hm.abs_err);
    o.exact("hessian_moment_closed", closed);
    o.check("hessian moment = closed form ± 1e-6", (hm.value - closed).abs() <= 1e-6, format!("{:.10} vs {closed:.10}", hm.value));

    if p.d != 1 {
        o.note("J_t checks use the uniform measure on [−1, 1] and run for d = 1 only");
        return Ok(o);
    }
    let mu = CompactMeasure::uniform_1d(-1.0, 1.0)?;
    let dirac = CompactMeasure::dirac(&[0.0])?;
    let lim = eval_jlimit(&mu, &p);
    o.exact("J_limit", lim);
    let mut ts = cfg.t.clone();
    ts.sort_by(f64::total_cmp);
    let mut curve = Curve::new(&["t", "J_t", "J_t_err", "ratio", "inner_share", "h_gap_ratio"]);
    let mut devs = Vec::new();
    for &t in &ts {
        let split = eval_jt_split(&mu, t, &p, inner_cutoff(&p, t), opts)?;
        let j = split.total();
        let ratio = j.value / lim;
        let share = split.inner.value / j.value;
        let zero = eval_jt(&dirac, t, &p, opts)?.value;
        let gap = assumption_h_gap(&p, t, cfg.eps)?;
        o.quad(format!("J_t[t={t}]"), j.value, j.abs_err);
        o.quad(format!("J_t/J_limit[t={t}]"), ratio, j.abs_err / lim);
        o.quad(format!("inner_share[t={t}]"), share, split.inner.abs_err / j.value);
        o.quad(format!("h_gap_ratio[t={t}]"), gap.ratio, gap.gap.abs_err);
        o.check(format!("J_t(δ₀) = 0 at t={t}"), zero == 0.0, format!("{zero:e}"));
        if t >= 1e4 {
            o.check(
                format!("truncation at |y| ≤ t^(1/12) changes J_t by < 1e-6 at t={t}"),
                share < 1e-6,
                format!("inner share {share:.3e}"),
            );
        }
        devs.push((ratio - 1.0).abs());
        curve.rows.push(vec![t, j.value, j.abs_err, ratio, share, gap.ratio]);
    }
    let last = *devs.last().unwrap_or(&f64::NAN);
    o.check("|J_t/J − 1| ≤ 0.05 at the largest t", last <= 0.05, format!("{last:.4e} at t={}", ts[ts.len() - 1]));
    if ts.len() >= 2 {
        o.check(
            "|J_t/J − 1| smaller at the largest t than at the smallest",
            last < devs[0],
            format!("{last:.4e} vs {:.4e}", devs[0]),
        );
    }
    o.curves.insert("jt".into(), curve);
    Ok(o)
}

fn tilted_v0_moments(spec: &TiltSpec) -> Result<(f64, f64), CliError> {
    let a = spec.params.alpha;
    let f = move |y: f64| shape_hat_r2(a, y * y);
    let intensity = IntensityProfile::Tilted { nu: spec.params.nu, rho: spec.rho, alpha: a };
    let cs = CampbellSpec::new(&f, Decay::Power(a), intensity).with_breakpoints(vec![-1.0, 1.0]);
    let m = campbell_moments(&cs)?;
    Ok((m.mean.value, m.variance.value))
}

fn campbell(cfg: &ExperimentConfig) -> Res {
    let p = cfg.params()?;
    let n = cfg.n_paths;
    guard_paths(cfg, 3.0 * n as f64, "n_paths")?;
    let mut o = Out::default();
    let seed = cfg.seed();
    for &lt in &cfg.log_t {
        let spec = TiltSpec::new(p, lt, cfg.box_half_width)?;
        let m0 = tilted_mean_potential(&spec, 0.0)?;
        let rel = (m0.value / spec.lambda - 1.0).abs();
        o.quad(format!("tilted_mean_V0[log_t={lt}]"), m0.value, m0.abs_err);
        o.exact(format!("lambda[log_t={lt}]"), spec.lambda);
        if lt >= 10.0 {
            o.check(format!("tilted mean V(0) within 2% of λ(t) at log t={lt}"), rel <= 0.02, format!("relative {rel:.3e}"));
        }
        let r = dlogt_residual(&p, lt)?;
        o.quad(format!("dlogt_residual[log_t={lt}]"), r, h_residual(&p, spec.rho)?.abs_err);
        if lt >= 20.0 {
            o.check(format!("|H(ρ)+λρ+d log t| ≤ 0.05 at log t={lt}"), r.abs() <= 0.05, format!("{r:.4e}"));
        }
    }

    // Monte Carlo against quadrature
    let lt = cfg.log_t[0];
    let spec = TiltSpec::new(p, lt, cfg.box_half_width)?;
    let raw = tilted_v0_samples(&spec, n, child_seed(seed, 1), 1e-3)?;
    let (qm, qv) = tilted_v0_moments(&spec)?;
    let m = mean_stderr(&raw)?;
    let v = variance_stderr(&raw)?;
    o.mean(format!("tilted_V0_mean_mc[log_t={lt}]"), &m);
    o.mean(format!("tilted_V0_var_mc[log_t={lt}]"), &v);
    o.quad(format!("tilted_V0_var_quad[log_t={lt}]"), qv, 1e-12 * qv);
    let z = m.z_score(qm);
    o.check("tilted V(0) mean: MC vs quadrature within 4σ", z.abs() < 4.0, format!("z = {z:.2}"));
    let z = v.z_score(qv);
    o.check("tilted V(0) variance: MC vs quadrature within 4σ", z.abs() < 4.0, format!("z = {z:.2}"));

    let bx = BoxRegion::cube(p.d, 5.0)?;
    let counts: Vec<f64> = (0..n as u64)
        .into_par_iter()
        .map(|i| -> Result<f64, CliError> {
            Ok(sample_homogeneous(&p, &bx, &mut rng_stream(child_seed(seed, 2), i))?.len() as f64)
        })
        .collect::<Result<_, _>>()?;
    let mean_count = p.nu * bx.volume();
    let m = mean_stderr(&counts)?;
    let v = variance_stderr(&counts)?;
    o.mean("poisson_count_mean", &m);
    o.mean("poisson_count_var", &v);
    o.check("Poisson count mean and variance within 4σ of ν|B|", m.z_score(mean_count).abs() < 4.0 && v.z_score(mean_count).abs() < 4.0,
        format!("z = {:.2}, {:.2}", m.z_score(mean_count), v.z_score(mean_count)));

    if p.d == 1 {
        let rn = radon_nikodym_check(&p, 2.0, 20.0, 0.5, n, child_seed(seed, 3))?;
        o.mean("rn_reweighted", &rn.reweighted);
        o.mean("rn_direct", &rn.direct);
        o.quad("rn_exact", rn.exact, 1e-12 * rn.exact);
        let (z1, z2) = (rn.reweighted.z_score(rn.exact), rn.direct.z_score(rn.exact));
        o.check("change of measure: reweighted and direct within 4σ of exact", z1.abs() < 4.0 && z2.abs() < 4.0,
            format!("z = {z1:.2}, {z2:.2}"));
    }
    Ok(o)
}

fn tilt_clt(cfg: &ExperimentConfig) -> Res {
    let p = cfg.params()?;
    guard_paths(cfg, (cfg.n_paths * cfg.rho.len()) as f64, "n_paths")?;
    let mut o = Out::default();
    let mut curve = Curve::new(&["rho", "ks", "mean", "mean_stderr", "quad_mean", "limit_variance"]);
    for (i, &rho) in cfg.rho.iter().enumerate() {
        let spec = TiltSpec::from_rho(p, rho, cfg.box_half_width)?;
        let c = tilted_clt_sample(&spec, cfg.n_paths, child_seed(cfg.seed(), i as u64))?;
        // KS of n draws fluctuates on the scale 1/√n
        o.mc(format!("ks[rho={rho}]"), c.ks_statistic, 1.0 / (cfg.n_paths as f64).sqrt());
        o.mean(format!("V0_mean[rho={rho}]"), &c.mean);
        o.quad(format!("V0_quad_mean[rho={rho}]"), c.quad_mean, 1e-12 * c.quad_mean);
        o.quad("limit_variance", c.limit_variance, 1e-12 * c.limit_variance);
        o.check(format!("KS ≤ 0.02 at ρ={rho}"), c.ks_statistic <= 0.02, format!("KS {:.4}", c.ks_statistic));
        let z = c.mean.z_score(c.quad_mean);
        o.check(format!("V(0) mean within 4σ of quadrature at ρ={rho}"), z.abs() < 4.0, format!("z = {z:.2}"));
        if c.degenerate {
            o.note(format!("ρ={rho}: all samples equal"));
        }
        curve.rows.push(vec![rho, c.ks_statistic, c.mean.mean, c.mean.stderr, c.quad_mean, c.limit_variance]);
    }
    o.curves.insert("clt".into(), curve);
    Ok(o)
}

fn local_limit(cfg: &ExperimentConfig) -> Res {
    let p = cfg.params()?;
    guard_paths(cfg, cfg.n_paths as f64, "n_paths")?;
    let mut o = Out::default();
    let rho = cfg.rho[0];
    let spec = TiltSpec::from_rho(p, rho, cfg.box_half_width)?;
    let l = local_density_ratio(&spec, cfg.a, cfg.n_paths, child_seed(cfg.seed(), 0))?;
    o.mc("local_density", l.ratio, l.stderr);
    o.mc("local_density_left", l.ratio_left, l.stderr_left);
    o.exact("limit_density", l.limit_density);
    let rel = (l.ratio / l.limit_density - 1.0).abs();
    o.check(
        format!("local density within 15% of (2πΣ)^(−1/2) at ρ={rho}"),
        rel <= 0.15,
        format!("{:.4} ± {:.4} vs {:.4} (window a = {}{})", l.ratio, l.stderr, l.limit_density, l.a, if l.widened { ", widened" } else { "" }),
    );

    let decay = trial_variance_decay(&p, &cfg.log_t)?;
    let target = -(2.0 * p.alpha + 1.0) + 0.3;
    o.mc("trial_variance_slope", decay.fit.slope, decay.fit.slope_stderr);
    o.check(
        "trial variance decay slope ≤ −(2α+1)+0.3",
        decay.fit.slope <= target,
        format!("slope {:.3} vs target {target:.2}; the scaling of the trial variance gives −(α+2) = {:.2}", decay.fit.slope, -(p.alpha + 2.0)),
    );
    let mut curve = Curve::new(&["log_t", "trial_variance"]);
    for (lt, v) in decay.log_ts.iter().zip(&decay.variances) {
        curve.rows.push(vec![*lt, *v]);
    }
    o.curves.insert("trial-variance".into(), curve);
    Ok(o)
}

fn bc(cfg: &ExperimentConfig) -> Bc {
    if cfg.bc == "neumann" {
        Bc::Neumann
    } else {
        Bc::Dirichlet
    }
}

fn ids_curve_table(c: &IdsCurve) -> Curve {
    let mut curve = Curve::new(&["lambda", "mean_N", "stderr", "R", "n_env"]);
    for j in 0..c.lambdas.len() {
        curve.rows.push(vec![c.lambdas[j], c.mean[j], c.stderr[j], c.r, c.n_env as f64]);
    }
    curve
}

// −log N(λ) = l1 λ^{−e1} + l2 λ^{−e2} on λ ∈ [0.3, 0.8] where N > 0
fn two_term_fit(p: &ModelParams, lambdas: &[f64], mean: &[f64]) -> Option<(f64, f64)> {
    let d = p.df();
    let a = p.alpha;
    let e1 = d / (a - d);
    let e2 = (a + d - 2.0) / (2.0 * (a - d));
    let (mut rows, mut ys) = (Vec::new(), Vec::new());
    for (l, n) in lambdas.iter().zip(mean) {
        if (0.3..=0.8).contains(l) && *n > 0.0 {
            rows.push(vec![l.powf(-e1), l.powf(-e2)]);
            ys.push(-n.ln());
        }
    }
    if rows.len() < 3 {
        return None;
    }
    least_squares(&rows, &ys).ok().map(|c| (c[0], c[1]))
}

fn ids(cfg: &ExperimentConfig) -> Res {
    let p = cfg.params()?;
    let mut rs = cfg.r.clone();
    rs.sort_by(f64::total_cmp);
    rs.dedup();
    let r_max = max_of(&rs);
    guard_nodes(cfg, (2.0 * r_max / cfg.h).powi(p.d as i32), "r")?;
    let opts = IdsOpts { lambdas: cfg.lambda.clone(), n_env: cfg.n_env, h: cfg.h, bc: bc(cfg), buffer: cfg.buffer, seed: cfg.seed() };
    let curves = ids_estimate_paired(&p, &rs, &opts)?;
    let mut o = Out::default();
    for c in &curves {
        o.curves.insert(format!("ids-R{}-{}", c.r, cfg.bc), ids_curve_table(c));
        o.check(
            format!("N(λ) nondecreasing at R={}", c.r),
            c.mean.windows(2).all(|w| w[1] >= w[0]),
            "mean curve over the λ grid",
        );
        if c.under_resolved {
            o.note(format!("R={}: κ(π/h)² < 10·max λ, the lattice under-resolves the top of the grid", c.r));
        }
    }

    // paired differences of the normalized counts between consecutive box sizes
    let vol = |r: f64| (2.0 * r).powi(p.d as i32);
    for w in curves.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let mut worst = f64::INFINITY;
        let mut worst_at = 0.0;
        for j in 0..cfg.lambda.len() {
            let diffs: Vec<f64> =
                (0..cfg.n_env).map(|e| b.counts[e][j] as f64 / vol(b.r) - a.counts[e][j] as f64 / vol(a.r)).collect();
            let m = mean_stderr(&diffs)?;
            let z = if m.stderr > 0.0 { m.mean / m.stderr } else if m.mean >= 0.0 { f64::INFINITY } else { f64::NEG_INFINITY };
            if z < worst {
                worst = z;
                worst_at = cfg.lambda[j];
            }
        }
        let ok = worst >= -2.0;
        let detail = format!("smallest paired z = {worst:.2} at λ = {worst_at}");
        if cfg.bc == "dirichlet" {
            o.check(format!("superadditivity: N_{}(λ) ≥ N_{}(λ) within 2σ", b.r, a.r), ok, detail);
        } else {
            o.note(format!("Neumann counts are subadditive; R={} vs R={}: {detail}", b.r, a.r));
        }
    }

    let big = &curves[curves.len() - 1];
    let c = constants(&p);
    let (e1, e2) = (p.df() / (p.alpha - p.df()), (p.alpha + p.df() - 2.0) / (2.0 * (p.alpha - p.df())));
    let (mut xs, mut ys, mut ys_law) = (Vec::new(), Vec::new(), Vec::new());
    for (l, n) in big.lambdas.iter().zip(&big.mean) {
        if (0.3..=0.8).contains(l) && *n > 0.0 && *n < 1.0 {
            xs.push((1.0 / l).ln());
            ys.push((-n.ln()).ln());
            ys_law.push((c.l1 * l.powf(-e1) + c.l2 * l.powf(-e2)).ln());
        }
    }
    if xs.len() >= 2 {
        let fit = linear_fit(&xs, &ys)?;
        // the same regression on the two-term law −log N = l1λ^{−e1} + l2λ^{−e2}
        let law = linear_fit(&xs, &ys_law)?.slope;
        o.mc("lifshitz_slope", fit.slope, fit.slope_stderr);
        o.exact("lifshitz_slope_two_term_law", law);
        o.check(
            "log(−log N) vs log(1/λ) slope over λ ∈ [0.3, 0.8] in [0.9, 1.6]",
            (0.9..=1.6).contains(&fit.slope),
            format!(
                "slope {:.3} ± {:.3} from {} points at R={}; the two-term law gives {law:.3} on the same λ",
                fit.slope, fit.slope_stderr, xs.len(), big.r
            ),
        );
    } else {
        o.check("log(−log N) vs log(1/λ) slope over λ ∈ [0.3, 0.8] in [0.9, 1.6]", false, "fewer than 2 grid points with N > 0");
    }

    match two_term_fit(&p, &big.lambdas, &big.mean) {
        Some((l1, l2)) => {
            // split-sample spread as the error of the fit
            let half = cfg.n_env / 2;
            let mean_of = |range: std::ops::Range<usize>| -> Vec<f64> {
                let k = range.len() as f64;
                (0..big.lambdas.len())
                    .map(|j| range.clone().map(|e| big.counts[e][j] as f64).sum::<f64>() / k / vol(big.r))
                    .collect()
            };
            let spread = match (two_term_fit(&p, &big.lambdas, &mean_of(0..half)), two_term_fit(&p, &big.lambdas, &mean_of(half..cfg.n_env))) {
                (Some(x), Some(y)) if half >= 1 => ((x.0 - y.0).abs() / 2.0, (x.1 - y.1).abs() / 2.0),
                _ => (f64::NAN, f64::NAN),
            };
            o.mc("l1_fit", l1, spread.0);
            o.mc("l2_fit", l2, spread.1);
            let rel = (l1 / c.l1 - 1.0).abs();
            o.check("two-term fit recovers l1 within 30%", rel <= 0.3, format!("l1 fit {l1:.4} vs {:.4}; l2 fit {l2:.4} vs {:.4}", c.l1, c.l2));
        }
        None => o.check("two-term fit recovers l1 within 30%", false, "fewer than 3 grid points with N > 0 in [0.3, 0.8]"),
    }
    Ok(o)
}

fn laplace_identity(cfg: &ExperimentConfig) -> Res {
    let p = cfg.params()?;
    let r = max_of(&cfg.r);
    guard_nodes(cfg, (2.0 * r / cfg.h).powi(p.d as i32), "r")?;
    guard_paths(cfg, (cfg.n_env * cfg.n_starts * cfg.t.len()) as f64, "n_starts")?;
    let opts = LaplaceOpts {
        ts: cfg.t.clone(),
        n_env: cfg.n_env,
        h: cfg.h,
        buffer: cfg.buffer,
        seed: cfg.seed(),
        n_starts: cfg.n_starts,
        dt: cfg.dt,
        window: cfg.box_half_width,
    };
    let pts = ids_laplace_identity(&p, r, &opts)?;
    let mut o = Out::default();
    let mut curve = Curve::new(&["t", "lhs", "lhs_stderr", "rhs", "rhs_stderr", "rel_diff"]);
    for pt in &pts {
        o.mean(format!("laplace_lhs[t={}]", pt.t), &pt.lhs);
        o.mean(format!("laplace_rhs[t={}]", pt.t), &pt.rhs);
        o.check(
            format!("IDS Laplace transform = bridge trace within 15% at t={}", pt.t),
            pt.rel_diff <= 0.15,
            format!("{:.5} ± {:.5} vs {:.5} ± {:.5} (relative {:.3e})", pt.lhs.mean, pt.lhs.stderr, pt.rhs.mean, pt.rhs.stderr, pt.rel_diff),
        );
        curve.rows.push(vec![pt.t, pt.lhs.mean, pt.lhs.stderr, pt.rhs.mean, pt.rhs.stderr, pt.rel_diff]);
    }
    o.curves.insert("laplace".into(), curve);
    Ok(o)
}

fn annealed(cfg: &ExperimentConfig) -> Res {
    let p = cfg.params()?;
    if cfg.p != 1.0 {
        return Err(CliError::Config("p: the annealed path estimator covers the first moment only (p = 1)".into()));
    }
    let n_pilot = (cfg.n_paths / 10).clamp(500, 5000);
    guard_paths(cfg, ((cfg.n_paths + 6 * n_pilot) * cfg.t.len()) as f64, "n_paths")?;
    let c = constants(&p);
    let d = p.df();
    let a = p.alpha;
    let mut o = Out::default();
    let mut curve = Curve::new(&["t", "log_survival", "log_stderr", "ratio", "second_order"]);
    for (i, &t) in cfg.t.iter().enumerate() {
        let theta = pilot_ou_theta(&p, t, cfg.dt, n_pilot, child_seed(cfg.seed() ^ 0x7069, i as u64))?;
        o.exact(format!("ou_theta_default[t={t}]"), default_ou_theta(&p, t));
        o.exact(format!("ou_theta[t={t}]"), theta);
        let s = annealed_survival_path(&p, t, cfg.dt, cfg.n_paths, child_seed(cfg.seed(), i as u64), AnnealedTilt::Ou { theta })?;
        let first = c.a1 * t.powf(d / a);
        let ratio = -s.log_value / first;
        let scale2 = t.powf((a + d - 2.0) / (2.0 * a));
        let second = (-s.log_value - first) / scale2;
        o.mc(format!("log_survival[t={t}]"), s.log_value, s.log_std_err());
        o.mc(format!("first_order_ratio[t={t}]"), ratio, s.log_std_err() / first);
        o.mc(format!("second_order_coefficient[t={t}]"), second, s.log_std_err() / scale2);
        if let Some(ess) = s.ess {
            o.exact(format!("ess[t={t}]"), ess);
        }
        o.check(
            format!("−log S/(a1 t^(d/α)) ∈ [0.8, 1.25] at t={t}"),
            (0.8..=1.25).contains(&ratio),
            format!("ratio {ratio:.4}; second-order coefficient {second:.3} vs a2 = {:.4}", c.a2),
        );
        if !s.reliable {
            o.note(format!("t={t}: importance weights flagged unreliable"));
        }
        curve.rows.push(vec![t, s.log_value, s.log_std_err(), ratio, second]);
    }
    o.curves.insert("annealed".into(), curve);
    Ok(o)
}

fn environment(p: &ModelParams, eval_half: f64, buffer: f64, seed: u64, e: u64) -> Result<PointConfig, CliError> {
    let cfg = sample_homogeneous(p, &BoxRegion::cube(p.d, eval_half + buffer)?, &mut rng_stream(seed, e))?;
    Ok(cfg.with_compensation(p, BoxRegion::cube(p.d, eval_half)?)?)
}

// Richardson ratio of log-masses at h, h/2, h/4 on the potential c|x|²
fn spatial_order(kappa: f64, c: f64) -> Result<f64, CliError> {
    let region = BoxRegion::cube(1, 15.0)?;
    let mut logs = Vec::new();
    for h in [0.2, 0.1, 0.05] {
        let f = GridField::from_fn(&region, h, |x| c * x[0] * x[0])?;
        logs.push(solve_pam_mass(&f, 1.0, kappa, 0.001, Init::Delta)?.log_value);
    }
    Ok(((logs[0] - logs[1]) / (logs[1] - logs[2])).abs().log2())
}

fn quenched(cfg: &ExperimentConfig) -> Res {
    let p = cfg.params()?;
    if p.d != 1 {
        return Err(CliError::Config("d: the quenched solver cross-checks run in d = 1".into()));
    }
    let r = cfg.r[0];
    guard_nodes(cfg, 2.0 * r / cfg.h, "r")?;
    guard_paths(cfg, (cfg.n_env * cfg.n_paths * cfg.t.len()) as f64, "n_paths")?;
    let seed = cfg.seed();
    let region = BoxRegion::cube(1, r)?;
    let mut o = Out::default();
    let mut curve = Curve::new(&["env", "t", "pde", "mc", "mc_stderr", "z", "lambda1_box_t"]);
    let mut worst_z: f64 = 0.0;
    let mut shape_c = f64::NEG_INFINITY;
    let mut dn_ok = true;
    let mut rr_ok = true;
    let mut rr_min_gap = f64::INFINITY;
    for e in 0..cfg.n_env as u64 {
        let env = environment(&p, r, cfg.buffer, seed, e)?;
        let field = GridField::from_config(&env, &region, cfg.h)?;
        for (k, &t) in cfg.t.iter().enumerate() {
            let pde = solve_pam_mass(&field, t, p.kappa, cfg.dt, Init::Delta)?;
            let opts = PathOpts { t, kappa: p.kappa, dt: cfg.dt, n_paths: cfg.n_paths, seed: child_seed(seed ^ 0x71, e * 64 + k as u64) };
            let mc = mc_survival(&env, opts)?;
            let z = (mc.value() - pde.value()) / mc.std_err().max(f64::MIN_POSITIVE);
            worst_z = worst_z.max(z.abs());
            o.quad(format!("pde_survival[env={e},t={t}]"), pde.value(), 0.0);
            o.mc(format!("mc_survival[env={e},t={t}]"), mc.value(), mc.std_err());
            // the box (−t, t) for the principal-eigenvalue comparison
            let lam1 = if t < r - 2.0 * cfg.h {
                let sub = restrict_cube(&field, t)?;
                let l = smallest_eigenpair(&assemble(&sub, Bc::Dirichlet, p.kappa)?, 1e-10)?.eigenvalue;
                let x = l * t;
                shape_c = shape_c.max((x + pde.log_value) / (1.0 + x).ln());
                l
            } else {
                f64::NAN
            };
            curve.rows.push(vec![e as f64, t, pde.value(), mc.value(), mc.std_err(), z, lam1]);
        }

        let op_d = assemble(&field, Bc::Dirichlet, p.kappa)?;
        let op_n = assemble(&field, Bc::Neumann, p.kappa)?;
        let nd = count_below_many(&op_d, &cfg.lambda)?;
        let nn = count_below_many(&op_n, &cfg.lambda)?;
        dn_ok &= nd.iter().zip(&nn).all(|(a, b)| a <= b);

        for center in [0.0, r / 4.0] {
            for width in [0.5, 1.0, 2.0] {
                let radius = 3.0;
                let q = rayleigh_trial(&field, p.kappa, &[center], width, radius)?;
                let l = ball_lambda1(&field, p.kappa, &[center], radius)?;
                rr_min_gap = rr_min_gap.min(q - l);
                rr_ok &= q >= l - 1e-10;
            }
        }
    }
    o.check(
        format!("PDE vs MC survival within 3σ on {} environments", cfg.n_env),
        worst_z < 3.0,
        format!("largest |z| = {worst_z:.2} over t = {:?}", cfg.t),
    );
    if shape_c.is_finite() {
        o.quad("eigen_bound_fitted_C", shape_c, 0.0);
        o.note(format!("−log S ≥ λ₁t − C log(1+λ₁t) holds with fitted C = {shape_c:.3} (reported, not asserted)"));
    }
    o.check("Dirichlet ≤ Neumann counts on every environment", dn_ok, format!("λ grid of {} points", cfg.lambda.len()));
    o.check("Rayleigh quotient ≥ λ₁ on every instance", rr_ok, format!("smallest gap {rr_min_gap:.4e}"));

    let c2 = quadratic_coefficient(&p);
    let order = spatial_order(p.kappa, c2)?;
    o.quad("pde_spatial_order", order, 0.0);
    o.check("PDE spatial order 2.0 ± 0.3 on c x²", (order - 2.0).abs() <= 0.3, format!("{order:.3}"));

    // harmonic check on a fine lattice, independent of the environment resolution
    let hf = GridField::from_fn(&BoxRegion::cube(1, 15.0)?, 0.01, |x| c2 * x[0] * x[0])?;
    let lam = smallest_eigenpair(&assemble(&hf, Bc::Dirichlet, p.kappa)?, 1e-12)?;
    let want = (p.kappa * c2).sqrt();
    o.quad("harmonic_lambda1", lam.eigenvalue, lam.residual);
    o.check("harmonic λ₁ within 1e-3 of √(κc)", (lam.eigenvalue - want).abs() <= 1e-3, format!("{:.6} vs {want:.6}", lam.eigenvalue));
    o.curves.insert("quenched".into(), curve);
    Ok(o)
}

fn pocket(cfg: &ExperimentConfig) -> Res {
    let p = cfg.params()?;
    let mut o = Out::default();
    let mut table = Curve::new(&["env", "t", "center", "lambda1", "ratio"]);
    let mut cand = Curve::new(&["env", "t", "center", "lambda1"]);
    for &t in &cfg.t {
        let st = scale_and_tilt(&p, t)?;
        let rb = st.ball_radius(&p, cfg.m);
        let s = pocket_search_radius(t);
        let half = s + rb + 4.0 * cfg.h;
        guard_nodes(cfg, (2.0 * half / cfg.h).powi(p.d as i32), "t")?;
        let mut ratios = Vec::new();
        for e in 0..cfg.n_env as u64 {
            let env = environment(&p, half, cfg.buffer, cfg.seed(), e)?;
            let res = pocket_search(&env, &p, t, cfg.m, cfg.h, cfg.stride)?;
            let ratio = res.lambda1 / st.lambda_t;
            ratios.push(ratio);
            o.quad(format!("pocket_lambda1[env={e},t={t}]"), res.lambda1, 1e-12 * res.lambda1);
            table.rows.push(vec![e as f64, t, res.center[0], res.lambda1, ratio]);
            for c in &res.candidates {
                cand.rows.push(vec![e as f64, t, c.center[0], c.lambda1]);
            }
        }
        o.exact(format!("lambda_t[t={t}]"), st.lambda_t);
        if ratios.len() >= 2 {
            o.mean(format!("pocket_ratio_mean[t={t}]"), &mean_stderr(&ratios)?);
        }
        let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        o.check(
            format!("pocket λ₁ ∈ [0.7, 1.3]·λ(t) at t={t} for every seed"),
            lo >= 0.7 && hi <= 1.3,
            format!("ratios in [{lo:.3}, {hi:.3}] over {} seeds; ball radius {rb:.3}, search radius {s:.1}", ratios.len()),
        );
    }
    o.curves.insert("pocket".into(), table);
    o.curves.insert("pocket-candidates".into(), cand);
    Ok(o)
}

fn pocket_prob(cfg: &ExperimentConfig) -> Res {
    let p = cfg.params()?;
    let naive = cfg.n_paths.min(100_000);
    guard_paths(cfg, 2.0 * (cfg.n_paths + naive) as f64, "n_paths")?;
    let lt = cfg.log_t[0];
    let spec = TiltSpec::new(p, lt, cfg.box_half_width)?;
    let mut o = Out::default();
    let mut runs = Vec::new();
    for k in 0..2u64 {
        let r = pocket_probability_is(&spec, cfg.m, cfg.eps, cfg.n_paths, naive, cfg.spacing, child_seed(cfg.seed(), k))?;
        o.mc(format!("log_probability[seed={k}]"), r.log_estimate, r.rel_stderr);
        o.exact(format!("ess_fraction[seed={k}]"), r.ess / r.n as f64);
        o.mc(format!("naive_hits[seed={k}]"), r.naive_hits as f64, (r.naive_hits as f64).sqrt());
        match r.fitted_delta(p.df(), lt) {
            Some(delta) => o.mc(format!("fitted_delta[seed={k}]"), delta, r.rel_stderr / lt.ln()),
            None => o.note(format!("seed {k}: log P = {:.3} ≤ −d log t, no δ fit", r.log_estimate)),
        }
        runs.push(r);
    }
    o.exact("threshold", runs[0].threshold);
    o.exact("ball_radius", runs[0].ball_radius);
    let pos = runs.iter().all(|r| r.hits > 0 && r.log_estimate.is_finite());
    o.check("pocket probability positive in both seeds", pos, format!("hits {} and {}", runs[0].hits, runs[1].hits));
    let (a, b) = (runs[0].log_ci95(), runs[1].log_ci95());
    o.check(
        "95% intervals of log P overlap across seeds",
        pos && a.0 <= b.1 && b.0 <= a.1,
        format!("[{:.3}, {:.3}] and [{:.3}, {:.3}]", a.0, a.1, b.0, b.1),
    );
    let ess: Vec<f64> = runs.iter().map(|r| r.ess / r.n as f64).collect();
    o.check("ESS ≥ 1% in both seeds", ess.iter().all(|e| *e >= 0.01), format!("{:.4}, {:.4}", ess[0], ess[1]));
    Ok(o)
}
