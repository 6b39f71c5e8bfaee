mod common;

use common::{rel, simpson};
use pamlab::fk::GridField;
use pamlab::model::{h_exact, shape_hat_r2, ModelParams};
use pamlab::ppp::*;
use pamlab::rng::rng_stream;
use pamlab::stats::{mean_stderr, variance_stderr};
use proptest::prelude::*;
use rayon::prelude::*;

fn p12() -> ModelParams {
    ModelParams::new(1, 2.0, 1.0, 1.0).unwrap()
}

#[test]
fn potential_examples() {
    let p = p12();
    let b = BoxRegion::cube(1, 10.0).unwrap();
    let one = PointConfig::from_points(&p, vec![0.0], b.clone()).unwrap();
    assert_eq!(eval_potential(&one, &[2.0]).unwrap(), 0.25);
    let two = PointConfig::from_points(&p, vec![-1.0, 1.0], b.clone()).unwrap();
    assert_eq!(eval_potential(&two, &[0.0]).unwrap(), 2.0);
    let empty = PointConfig::from_points(&p, vec![], b.clone()).unwrap();
    assert_eq!(eval_potential(&empty, &[3.0]).unwrap(), 0.0);
    assert_eq!(sup_potential_grid(&empty, &b, 0.1).unwrap(), 0.0);
    assert!((sup_potential_grid(&one, &BoxRegion::cube(1, 3.0).unwrap(), 0.1).unwrap() - 1.0).abs() < 1e-15);

    // R_eff = 100 from the box (−101, 101) to the region (−1, 1)
    let big = BoxRegion::cube(1, 101.0).unwrap();
    let c = PointConfig::from_points(&p, vec![], big)
        .unwrap()
        .with_compensation(&p, BoxRegion::cube(1, 1.0).unwrap())
        .unwrap();
    assert!((c.tail_compensation - 0.02).abs() < 1e-15);
    assert!(eval_potential(&c, &[5.0]).is_err());
}

#[test]
fn json_round_trip() {
    let p = p12();
    let mut rng = rng_stream(3, 0);
    let c = sample_homogeneous(&p, &BoxRegion::cube(1, 20.0).unwrap(), &mut rng).unwrap();
    assert_eq!(PointConfig::from_json(&c.to_json()).unwrap(), c);
}

#[test]
fn homogeneous_counts_are_poisson() {
    let p = p12();
    let b = BoxRegion::cube(1, 5.0).unwrap();
    let counts: Vec<f64> = (0..100_000u64)
        .into_par_iter()
        .map(|i| sample_homogeneous(&p, &b, &mut rng_stream(17, i)).unwrap().len() as f64)
        .collect();
    let m = mean_stderr(&counts).unwrap();
    let v = variance_stderr(&counts).unwrap();
    assert!(m.z_score(10.0).abs() < 4.0, "{m:?}");
    assert!(v.z_score(10.0).abs() < 4.0, "{v:?}");

    let same_a = sample_homogeneous(&p, &b, &mut rng_stream(17, 5)).unwrap();
    let same_b = sample_homogeneous(&p, &b, &mut rng_stream(17, 5)).unwrap();
    assert_eq!(same_a, same_b);
    let thin = ModelParams::new(1, 2.0, 1e-12, 1.0).unwrap();
    assert!(sample_homogeneous(&thin, &b, &mut rng_stream(1, 0)).unwrap().is_empty());
}

#[test]
fn tilted_annulus_intensity() {
    let p = p12();
    let rho = 2.0;
    let b = BoxRegion::cube(1, 6.0).unwrap();
    // expected count in 1 ≤ |y| ≤ 3 is 2∫₁³ e^{−ρ/y²}dy
    let expected = 2.0 * simpson(|y| (-rho / (y * y)).exp(), 1.0, 3.0, 2000);
    let counts: Vec<f64> = (0..100_000u64)
        .into_par_iter()
        .map(|i| {
            let c = sample_tilted(&p, &b, rho, &mut rng_stream(23, i)).unwrap();
            c.points.iter().filter(|y| (1.0..=3.0).contains(&y.abs())).count() as f64
        })
        .collect();
    let m = mean_stderr(&counts).unwrap();
    assert!(m.z_score(expected).abs() < 4.0, "{m:?} vs {expected}");

    // ρ = 100: [−1, 1] carries mean 2e^{−100}
    let hits: usize = (0..2000u64)
        .map(|i| {
            let c = sample_tilted(&p, &b, 100.0, &mut rng_stream(29, i)).unwrap();
            c.points.iter().filter(|y| y.abs() <= 1.0).count()
        })
        .sum();
    assert_eq!(hits, 0);
}

#[test]
fn tilted_rho_zero_matches_homogeneous_law() {
    let p = p12();
    let b = BoxRegion::cube(1, 4.0).unwrap();
    let counts: Vec<f64> = (0..20_000u64)
        .into_par_iter()
        .map(|i| sample_tilted(&p, &b, 0.0, &mut rng_stream(31, i)).unwrap().len() as f64)
        .collect();
    let m = mean_stderr(&counts).unwrap();
    let v = variance_stderr(&counts).unwrap();
    assert!(m.z_score(8.0).abs() < 4.0);
    assert!(v.z_score(8.0).abs() < 4.0);
}

#[test]
fn campbell_oracles() {
    let p = p12();
    let nu = IntensityProfile::Homogeneous { nu: 1.0 };
    for t in [0.5, 5.0, 30.0] {
        let f = move |y: f64| t * shape_hat_r2(2.0, y * y);
        let spec = CampbellSpec::new(&f, Decay::Power(2.0), nu).with_breakpoints(vec![-1.0, 1.0]);
        let l = campbell_laplace(&spec).unwrap().value;
        assert!(rel(l, h_exact(&p, t).unwrap().value) < 1e-9, "t={t}");
    }
    let zero = |_: f64| 0.0;
    let spec = CampbellSpec::new(&zero, Decay::Compact { lo: -1.0, hi: 1.0 }, nu);
    assert_eq!(campbell_laplace(&spec).unwrap().value, 0.0);

    let c = 1.7;
    let ind = move |y: f64| if (0.0..=2.0).contains(&y) { c } else { 0.0 };
    let spec = CampbellSpec::new(&ind, Decay::Compact { lo: 0.0, hi: 2.0 }, nu);
    assert!(rel(campbell_laplace(&spec).unwrap().value, -2.0 * (1.0 - (-c).exp())) < 1e-12);
    let one = |y: f64| if (0.0..=2.0).contains(&y) { 1.0 } else { 0.0 };
    let spec = CampbellSpec::new(&one, Decay::Compact { lo: 0.0, hi: 2.0 }, nu);
    let m = campbell_moments(&spec).unwrap();
    assert!(rel(m.mean.value, 2.0) < 1e-12 && rel(m.variance.value, 2.0) < 1e-12);
    let z = campbell_charfn(&spec, 0.0).unwrap();
    assert_eq!((z.re.value, z.im.value), (0.0, 0.0));
}

#[test]
fn campbell_moments_against_tilted_samples() {
    let p = p12();
    let rho = 3.0;
    let half = 30.0;
    let intensity = IntensityProfile::Tilted { nu: 1.0, rho, alpha: 2.0 };
    // f = v̂(x − ·) at x = 0.7, restricted to the sampling box
    let x = 0.7;
    let f = move |y: f64| if y.abs() <= half { shape_hat_r2(2.0, (x - y) * (x - y)) } else { 0.0 };
    let spec = CampbellSpec::new(&f, Decay::Compact { lo: -half, hi: half }, intensity)
        .with_breakpoints(vec![x - 1.0, x + 1.0]);
    let m = campbell_moments(&spec).unwrap();
    let b = BoxRegion::cube(1, half).unwrap();
    let vals: Vec<f64> = (0..100_000u64)
        .into_par_iter()
        .map(|i| {
            let c = sample_tilted(&p, &b, rho, &mut rng_stream(37, i)).unwrap();
            c.potential_unchecked(&[x])
        })
        .collect();
    let mean = mean_stderr(&vals).unwrap();
    let var = variance_stderr(&vals).unwrap();
    assert!(mean.z_score(m.mean.value).abs() < 4.0, "{mean:?} vs {}", m.mean.value);
    assert!(var.z_score(m.variance.value).abs() < 4.0, "{var:?} vs {}", m.variance.value);
}

#[test]
fn potential_sup_exceedance() {
    // 200 environments on (−t, t), t = 1000: sup V above 3 log t in fewer than 5%
    let p = p12();
    let t: f64 = 1000.0;
    let level = 3.0 * t.ln();
    let region = BoxRegion::cube(1, t).unwrap();
    let exceed: usize = (0..200u64)
        .map(|e| {
            let c = sample_homogeneous(&p, &BoxRegion::cube(1, 2.0 * t).unwrap(), &mut rng_stream(41, e))
                .unwrap()
                .with_compensation(&p, region.clone())
                .unwrap();
            let field = GridField::from_config(&c, &region, 0.1).unwrap();
            let sup = field.values.iter().copied().fold(0.0, f64::max);
            usize::from(sup > level)
        })
        .sum();
    assert!((exceed as f64) < 0.05 * 200.0, "{exceed}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn potential_shift_equivariance(pts in prop::collection::vec(-20.0f64..20.0, 0..40), x in -5.0f64..5.0, s in -5.0f64..5.0) {
        let p = p12();
        let b = BoxRegion::cube(1, 30.0).unwrap();
        let c = PointConfig::from_points(&p, pts.clone(), b.clone()).unwrap();
        let shifted: Vec<f64> = pts.iter().map(|y| y + s).collect();
        let cs = PointConfig::from_points(&p, shifted, b).unwrap();
        let a = eval_potential(&c, &[x]).unwrap();
        let bb = eval_potential(&cs, &[x + s]).unwrap();
        prop_assert!((a - bb).abs() <= 1e-12 * (1.0 + a));
        prop_assert!(a >= 0.0 && a <= pts.len() as f64 + 1e-12);
    }

    #[test]
    fn charfn_real_part_nonpositive(theta in -20.0f64..20.0, rho in 0.0f64..10.0) {
        let f = |y: f64| shape_hat_r2(2.0, y * y);
        let spec = CampbellSpec::new(&f, Decay::Power(2.0), IntensityProfile::Tilted { nu: 1.0, rho, alpha: 2.0 })
            .with_breakpoints(vec![-1.0, 1.0]);
        let z = campbell_charfn(&spec, theta).unwrap();
        prop_assert!(z.re.value <= 1e-14);
    }

    #[test]
    fn laplace_functional_is_monotone(c1 in 0.0f64..5.0, dc in 0.0f64..5.0) {
        let nu = IntensityProfile::Homogeneous { nu: 1.0 };
        let f1 = move |y: f64| c1 * shape_hat_r2(1.5, y * y);
        let f2 = move |y: f64| (c1 + dc) * shape_hat_r2(1.5, y * y);
        let a = campbell_laplace(&CampbellSpec::new(&f1, Decay::Power(1.5), nu).with_breakpoints(vec![-1.0, 1.0])).unwrap();
        let b = campbell_laplace(&CampbellSpec::new(&f2, Decay::Power(1.5), nu).with_breakpoints(vec![-1.0, 1.0])).unwrap();
        prop_assert!(b.value <= a.value + 1e-12 && a.value <= 0.0);
    }
}
