mod common;

use common::{rel, simpson};
use pamlab::fk::*;
use pamlab::model::{constants, ModelParams};
use pamlab::ppp::{sample_homogeneous, BoxRegion, PointConfig};
use pamlab::rng::rng_stream;
use proptest::prelude::*;
use std::f64::consts::PI;

fn p12() -> ModelParams {
    ModelParams::new(1, 2.0, 1.0, 1.0).unwrap()
}

fn constant_config(c: f64) -> PointConfig {
    let mut cfg = PointConfig::from_points(&p12(), vec![], BoxRegion::cube(1, 100.0).unwrap()).unwrap();
    cfg.tail_compensation = c;
    cfg
}

fn fixed_environment(e: u64) -> PointConfig {
    let p = p12();
    sample_homogeneous(&p, &BoxRegion::cube(1, 60.0).unwrap(), &mut rng_stream(101, e))
        .unwrap()
        .with_compensation(&p, BoxRegion::cube(1, 20.0).unwrap())
        .unwrap()
}

#[test]
fn heat_kernel_examples() {
    let k = 0.7;
    let t = 1.3;
    assert!(rel(heat_kernel(t, &[0.4], &[0.4], k).unwrap(), (4.0 * PI * k * t).powf(-0.5)) < 1e-15);
    let total = simpson(|y| heat_kernel(t, &[0.0], &[y], k).unwrap(), -40.0, 40.0, 20_000);
    assert!((total - 1.0).abs() < 1e-8);
    let a = heat_kernel(t, &[0.3, -1.0], &[2.0, 0.5], k).unwrap();
    let b = heat_kernel(t, &[2.0, 0.5], &[0.3, -1.0], k).unwrap();
    assert_eq!(a, b);
    assert!(heat_kernel(0.0, &[0.0], &[0.0], k).is_err());
}

#[test]
fn pde_free_and_constant() {
    let region = BoxRegion::cube(1, 40.0).unwrap();
    let free = GridField::from_fn(&region, 0.05, |_| 0.0).unwrap();
    let m = solve_pam_mass(&free, 2.0, 1.0, 0.01, Init::Delta).unwrap();
    assert!(m.value() <= 1.0 + 1e-12 && 1.0 - m.value() < 1e-6, "{}", m.value());
    let c = 0.8;
    let cst = GridField::from_fn(&region, 0.05, |_| c).unwrap();
    let mc = solve_pam_mass(&cst, 2.0, 1.0, 0.01, Init::Delta).unwrap();
    assert!(rel(mc.value(), (-c * 2.0f64).exp() * m.value()) < 1e-6);
}

#[test]
fn pde_harmonic_rate() {
    let c = 2.0;
    let region = BoxRegion::cube(1, 15.0).unwrap();
    let f = GridField::from_fn(&region, 0.05, |x| c * x[0] * x[0]).unwrap();
    // mass ≈ e^{−Et}φ₀(0)∫φ₀ with φ₀(0)∫φ₀ = √2 for a point-mass start
    let e0 = c.sqrt();
    let t = 20.0;
    let m = solve_pam_mass(&f, t, 1.0, 0.01, Init::Delta).unwrap();
    let rate = m.log_value / t;
    assert!(rel(rate, -e0 + 2f64.sqrt().ln() / t) < 1e-3, "{rate}");
    let t = 40.0;
    let m = solve_pam_mass(&f, t, 1.0, 0.01, Init::Delta).unwrap();
    assert!(rel(-m.log_value / t, e0) < 0.01);
}

#[test]
fn pde_spatial_order() {
    // Richardson ratio on a smooth potential at fixed dt
    let region = BoxRegion::cube(1, 15.0).unwrap();
    let masses: Vec<f64> = [0.2, 0.1, 0.05]
        .iter()
        .map(|&h| {
            let f = GridField::from_fn(&region, h, |x| 2.0 * x[0] * x[0]).unwrap();
            solve_pam_mass(&f, 1.0, 1.0, 0.001, Init::Delta).unwrap().log_value
        })
        .collect();
    let order = ((masses[0] - masses[1]) / (masses[1] - masses[2])).abs().log2();
    assert!((order - 2.0).abs() <= 0.3, "{order} {masses:?}");
}

#[test]
fn mc_trivial_cases() {
    let opts = PathOpts { t: 3.0, kappa: 1.0, dt: 0.05, n_paths: 200, seed: 1 };
    let zero = constant_config(0.0);
    let s = mc_survival(&zero, opts).unwrap();
    assert_eq!(s.value(), 1.0);
    assert_eq!(s.rel_std_err, 0.0);
    let b = mc_bridge_survival(&zero, opts).unwrap();
    assert_eq!(b.value(), 1.0);
    let c = constant_config(0.4);
    assert!(rel(mc_bridge_survival(&c, opts).unwrap().value(), (-1.2f64).exp()) < 1e-12);
    assert!(rel(mc_survival(&c, opts).unwrap().value(), (-1.2f64).exp()) < 1e-12);
}

#[test]
fn mc_against_pde() {
    let t = 5.0;
    let region = BoxRegion::cube(1, 20.0).unwrap();
    for e in 0..2 {
        let cfg = fixed_environment(e);
        let f = GridField::from_config(&cfg, &region, 0.025).unwrap();
        let pde = solve_pam_mass(&f, t, 1.0, 0.005, Init::Delta).unwrap();
        let mc = mc_survival(&cfg, PathOpts { t, kappa: 1.0, dt: 0.005, n_paths: 20_000, seed: 7 + e }).unwrap();
        let z = (mc.value() - pde.value()) / mc.std_err();
        assert!(z.abs() < 3.0, "env {e}: mc {} ± {} pde {}", mc.value(), mc.std_err(), pde.value());
    }
}

#[test]
fn mc_dt_halving() {
    let cfg = fixed_environment(3);
    let a = mc_survival(&cfg, PathOpts { t: 2.0, kappa: 1.0, dt: 0.02, n_paths: 20_000, seed: 5 }).unwrap();
    let b = mc_survival(&cfg, PathOpts { t: 2.0, kappa: 1.0, dt: 0.01, n_paths: 20_000, seed: 6 }).unwrap();
    let se = (a.std_err().powi(2) + b.std_err().powi(2)).sqrt();
    assert!((a.value() - b.value()).abs() < 2.0 * se, "{} {} {se}", a.value(), b.value());
}

#[test]
fn annealed_small_t_and_monotone() {
    let p = p12();
    let tiny = annealed_survival_path(&p, 1e-4, 1e-5, 200, 3, AnnealedTilt::None).unwrap();
    assert!((tiny.value() - 1.0).abs() < 1e-3);
    let s2 = annealed_survival_path(&p, 2.0, 0.01, 2000, 3, AnnealedTilt::None).unwrap();
    let s4 = annealed_survival_path(&p, 4.0, 0.01, 2000, 3, AnnealedTilt::None).unwrap();
    assert!(s2.value() + 2.0 * s2.std_err() >= s4.value() - 2.0 * s4.std_err());
    // −log S ≈ a1√t + a2 t^{1/4}; the correction is positive
    let c = constants(&p);
    let ratio = -s4.log_value / (c.a1 * 2.0);
    assert!((1.0..1.25).contains(&ratio), "{ratio}");
}

#[test]
fn pilot_theta_scan() {
    let p = p12();
    let th0 = default_ou_theta(&p, 10.0);
    let th = pilot_ou_theta(&p, 10.0, 0.01, 1000, 5).unwrap();
    let k = (th0 / th).log2();
    assert!(th <= th0 && (k - k.round()).abs() < 1e-9 && k.round() <= 5.0, "{th} vs {th0}");
    let s = annealed_survival_path(&p, 10.0, 0.01, 2000, 6, AnnealedTilt::Ou { theta: th }).unwrap();
    assert!(s.ess.unwrap() > 0.05, "{:?}", s.ess);
    assert_eq!(th, pilot_ou_theta(&p, 10.0, 0.01, 1000, 5).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn pde_monotone_in_potential(seed in 0u64..1000, c in 0.0f64..0.5) {
        let region = BoxRegion::cube(1, 10.0).unwrap();
        let cfg = fixed_environment(seed);
        let f = GridField::from_config(&cfg, &region, 0.05).unwrap();
        let g = f.with_values(f.values.iter().map(|v| v + c).collect()).unwrap();
        let a = solve_pam_mass(&f, 1.0, 1.0, 0.01, Init::Delta).unwrap();
        let b = solve_pam_mass(&g, 1.0, 1.0, 0.01, Init::Delta).unwrap();
        prop_assert!(a.value() <= 1.0);
        prop_assert!(rel(b.value(), a.value() * (-c).exp()) < 1e-10);
    }
}
