use pamlab::fk::GridField;
use pamlab::ppp::{sample_homogeneous, BoxRegion};
use pamlab::rng::rng_stream;
use pamlab::spectral::*;
use pamlab::ModelParams;

fn free_field(d: usize, half: f64, h: f64) -> GridField {
    GridField::from_fn(&BoxRegion::cube(d, half).unwrap(), h, |_| 0.0).unwrap()
}

fn discrete_free(n: usize, kappa: f64, h: f64, k: usize) -> f64 {
    2.0 * kappa / (h * h) * (1.0 - (k as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos())
}

#[test]
fn free_dirichlet_counts_match_closed_form() {
    let f = free_field(1, 5.0, 0.1);
    let n = f.dims[0];
    let op = assemble(&f, Bc::Dirichlet, 0.7).unwrap();
    let eig: Vec<f64> = (1..=n).map(|k| discrete_free(n, 0.7, 0.1, k)).collect();
    let mut rng = rng_stream(11, 0);
    use rand::Rng;
    for _ in 0..20 {
        let lam: f64 = rng.random::<f64>() * 300.0;
        let expect = eig.iter().filter(|&&e| e < lam).count();
        assert_eq!(count_below(&op, lam).unwrap(), expect);
    }
    assert_eq!(count_below(&op, 0.0).unwrap(), 0);
}

#[test]
fn free_interval_eigenvalue_converges() {
    // λ₁ of (−L, L) is κπ²/(2L)²
    let exact = std::f64::consts::PI.powi(2) / 16.0;
    let mut errs = vec![];
    for h in [0.1, 0.05] {
        let op = assemble(&free_field(1, 2.0, h), Bc::Dirichlet, 1.0).unwrap();
        let r = smallest_eigenpair(&op, 1e-10).unwrap();
        errs.push((r.eigenvalue - exact).abs() / exact);
        assert!(r.eigenvector.iter().all(|&v| v >= 0.0));
    }
    let order = (errs[0] / errs[1]).log2();
    assert!((order - 2.0).abs() < 0.1, "order {order}");
}

#[test]
fn neumann_free_bottom_is_zero() {
    let op = assemble(&free_field(1, 3.0, 0.1), Bc::Neumann, 1.0).unwrap();
    let r = smallest_eigenpair(&op, 1e-10).unwrap();
    assert!(r.eigenvalue.abs() < 1e-9, "{}", r.eigenvalue);
}

#[test]
fn harmonic_ground_state() {
    let c = 4.0;
    let f = GridField::from_fn(&BoxRegion::cube(1, 8.0).unwrap(), 0.01, |x| c * x[0] * x[0]).unwrap();
    let r = smallest_eigenpair(&assemble(&f, Bc::Dirichlet, 1.0).unwrap(), 1e-11).unwrap();
    assert!((r.eigenvalue - 2.0).abs() < 1e-3 * 2.0, "{}", r.eigenvalue);
}

#[test]
fn two_dimensional_free_square() {
    let h = 0.1;
    let f = free_field(2, 1.5, h);
    let n = f.dims[0];
    let op = assemble(&f, Bc::Dirichlet, 1.0).unwrap();
    let r = smallest_eigenpair(&op, 1e-9).unwrap();
    let exact = 2.0 * discrete_free(n, 1.0, h, 1);
    assert!((r.eigenvalue - exact).abs() < 1e-7 * exact, "{} vs {exact}", r.eigenvalue);
    let mut eig = vec![];
    for i in 1..=n {
        for j in 1..=n {
            eig.push(discrete_free(n, 1.0, h, i) + discrete_free(n, 1.0, h, j));
        }
    }
    for lam in [1.0, 5.0, 12.3, 40.0, 100.0] {
        let expect = eig.iter().filter(|&&e| e < lam).count();
        assert_eq!(count_below(&op, lam).unwrap(), expect, "lambda {lam}");
    }
}

#[test]
fn rayleigh_bounds_ball_eigenvalue_random_environments() {
    let p = ModelParams::new(1, 2.0, 1.0, 1.0).unwrap();
    for seed in 0..5 {
        let cfg = sample_homogeneous(&p, &BoxRegion::cube(1, 60.0).unwrap(), &mut rng_stream(seed, 0)).unwrap();
        let cfg = cfg.with_compensation(&p, BoxRegion::cube(1, 30.0).unwrap()).unwrap();
        let f = GridField::from_config(&cfg, &BoxRegion::cube(1, 30.0).unwrap(), 0.05).unwrap();
        for (c, w, rad) in [(0.0, 2.0, 10.0), (3.3, 0.7, 5.0), (-7.0, 4.0, 12.0)] {
            let q = rayleigh_trial(&f, 1.0, &[c], w, rad).unwrap();
            let lam = ball_lambda1(&f, 1.0, &[c], rad).unwrap();
            assert!(q >= lam - 1e-10, "{q} < {lam}");
            let op = assemble(&f, Bc::Dirichlet, 1.0).unwrap().restrict_ball(&[c], rad).unwrap();
            let e = smallest_eigenpair(&op, 1e-11).unwrap();
            assert!((e.eigenvalue - lam).abs() < 1e-8 * lam.max(1.0), "{} vs {lam}, {} nodes", e.eigenvalue, op.mask.as_ref().unwrap().iter().filter(|&&b| b).count());
        }
    }
}

#[test]
fn rayleigh_free_gaussian_kinetic_energy() {
    let f = free_field(1, 60.0, 0.02);
    let q = rayleigh_trial(&f, 1.5, &[0.0], 2.0, 50.0).unwrap();
    let expect = 1.5 / (2.0 * 4.0);
    assert!((q - expect).abs() < 1e-3 * expect, "{q}");
}

#[test]
fn rayleigh_rejects_ball_outside_grid() {
    let f = free_field(1, 5.0, 0.1);
    assert!(rayleigh_trial(&f, 1.0, &[0.0], 1.0, 6.0).is_err());
}

#[test]
fn lanczos_and_inertia_agree_in_two_dimensions() {
    let p = ModelParams::new(2, 3.0, 0.5, 1.0).unwrap();
    for seed in 0..3 {
        let cfg = sample_homogeneous(&p, &BoxRegion::cube(2, 12.0).unwrap(), &mut rng_stream(seed, 0)).unwrap();
        let cfg = cfg.with_compensation(&p, BoxRegion::cube(2, 6.0).unwrap()).unwrap();
        let f = GridField::from_config(&cfg, &BoxRegion::cube(2, 6.0).unwrap(), 0.1).unwrap();
        for bc in [Bc::Dirichlet, Bc::Neumann] {
            let op = assemble(&f, bc, 1.0).unwrap();
            let e = smallest_eigenpair(&op, 1e-9).unwrap();
            let tol = 1e-6 * e.eigenvalue.abs().max(1e-3);
            assert_eq!(count_below(&op, e.eigenvalue - tol).unwrap(), 0);
            assert!(count_below(&op, e.eigenvalue + tol).unwrap() >= 1);
            assert!(e.eigenvector.iter().all(|&v| v >= -1e-8));
        }
    }
}

fn p12() -> ModelParams {
    ModelParams::new(1, 2.0, 1.0, 1.0).unwrap()
}

fn ids_opts(n_env: usize, seed: u64, bc: Bc) -> IdsOpts {
    IdsOpts {
        lambdas: (1..=20).map(|k| 0.1 * k as f64).collect(),
        n_env,
        h: 0.05,
        bc,
        buffer: 50.0,
        seed,
    }
}

#[test]
fn ids_curve_properties() {
    let p = p12();
    let curves = ids_estimate_paired(&p, &[25.0, 50.0, 100.0], &ids_opts(40, 3, Bc::Dirichlet)).unwrap();
    for c in &curves {
        assert!(c.mean.windows(2).all(|w| w[1] >= w[0]));
        assert!(!c.under_resolved);
    }
    // superadditivity of Dirichlet counts: N_R(λ)/|D_R| grows with R, within 2σ
    for j in 0..20 {
        for w in curves.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            assert!(b.mean[j] >= a.mean[j] - 2.0 * (a.stderr[j].powi(2) + b.stderr[j].powi(2)).sqrt());
        }
    }
    // far below the spectrum every environment is empty
    let low = ids_estimate(&p, 25.0, &IdsOpts { lambdas: vec![-1.0, 0.0, 0.01], ..ids_opts(10, 3, Bc::Dirichlet) }).unwrap();
    assert!(low.mean.iter().all(|&m| m == 0.0));
    let csv = curves[0].to_csv();
    assert!(csv.starts_with("lambda,mean_N,stderr,R,n_env,bc\n"));
    assert_eq!(csv.lines().count(), 21);
}

#[test]
fn dirichlet_counts_below_neumann_every_sample() {
    let p = p12();
    let d = ids_estimate(&p, 40.0, &ids_opts(30, 9, Bc::Dirichlet)).unwrap();
    let n = ids_estimate(&p, 40.0, &ids_opts(30, 9, Bc::Neumann)).unwrap();
    for (cd, cn) in d.counts.iter().zip(&n.counts) {
        for (a, b) in cd.iter().zip(cn) {
            assert!(a <= b);
        }
    }
}

#[test]
fn domain_monotonicity_of_lambda1() {
    let p = p12();
    for e in 0..5 {
        let cfg = ids_environment(&p, 40.0, 40.0, 13, e).unwrap();
        let f = GridField::from_config(&cfg, &BoxRegion::cube(1, 40.0).unwrap(), 0.05).unwrap();
        let small = smallest_eigenpair(&assemble(&restrict_cube(&f, 20.0).unwrap(), Bc::Dirichlet, 1.0).unwrap(), 1e-10).unwrap();
        let big = smallest_eigenpair(&assemble(&f, Bc::Dirichlet, 1.0).unwrap(), 1e-10).unwrap();
        assert!(small.eigenvalue >= big.eigenvalue - 1e-10);
    }
}

#[test]
fn pocket_search_empty_configuration() {
    let p = p12();
    let t = 1e4;
    let cfg = pamlab::ppp::PointConfig::from_points(&p, vec![], BoxRegion::cube(1, 40.0).unwrap()).unwrap();
    let r = pocket_search(&cfg, &p, t, 1.0, 0.05, 0.5).unwrap();
    let f = free_field(1, 40.0, 0.05);
    let free = ball_lambda1(&f, 1.0, &[0.0], r.ball_radius).unwrap();
    assert!((r.lambda1 - free).abs() < 1e-12);
    // all candidates tie; the first (most negative) centre wins
    assert_eq!(r.center, r.candidates[0].center);
    assert!(r.center[0] <= -r.search_radius + 0.5);
}

#[test]
fn pocket_search_beats_centre() {
    let p = p12();
    let t = 1e4;
    for e in 0..3 {
        let cfg = ids_environment(&p, 80.0, 80.0, 21, e).unwrap();
        let r = pocket_search(&cfg, &p, t, 2.0, 0.05, 0.25).unwrap();
        let f = GridField::from_config(&cfg, &BoxRegion::cube(1, 80.0).unwrap(), 0.05).unwrap();
        let at0 = ball_lambda1(&f, 1.0, &[0.0], r.ball_radius).unwrap();
        assert!(r.lambda1 <= at0 + 1e-12);
        assert!(r.candidates.iter().all(|c| c.lambda1 >= r.lambda1));
    }
}

#[test]
fn laplace_identity_small() {
    let p = p12();
    let o = LaplaceOpts {
        ts: vec![0.5, 2.0],
        n_env: 6,
        h: 0.05,
        buffer: 400.0,
        seed: 5,
        n_starts: 100,
        dt: 0.02,
        window: 100.0,
    };
    for pt in ids_laplace_identity(&p, 400.0, &o).unwrap() {
        assert!(pt.rel_diff < 0.15, "{pt:?}");
    }
    // V ≡ 0 box: the left side is the free lattice trace density, close to (4πκt)^{−1/2}
    let f = free_field(1, 200.0, 0.05);
    let l = laplace_transform_counts(&f, 1.0, &[1.0]).unwrap()[0];
    assert!((l - (4.0 * std::f64::consts::PI).powf(-0.5)).abs() < 2e-3, "{l}");
}

mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn constant_shift_moves_every_eigenvalue(c in 0.0f64..3.0, seed in 0u64..500) {
            let p = p12();
            let cfg = ids_environment(&p, 10.0, 10.0, seed, 0).unwrap();
            let f = GridField::from_config(&cfg, &BoxRegion::cube(1, 10.0).unwrap(), 0.1).unwrap();
            let g = f.with_values(f.values.iter().map(|v| v + c).collect()).unwrap();
            let a = assemble(&f, Bc::Dirichlet, 1.0).unwrap().tridiag().unwrap();
            let b = assemble(&g, Bc::Dirichlet, 1.0).unwrap().tridiag().unwrap();
            for k in [1usize, 5, 50] {
                prop_assert!((b.eigenvalue_bisect(k) - a.eigenvalue_bisect(k) - c).abs() < 1e-9);
            }
        }

        #[test]
        fn bracketing_and_monotone_counts(l1 in 0.0f64..3.0, dl in 0.0f64..2.0, seed in 0u64..500) {
            let p = p12();
            let cfg = ids_environment(&p, 15.0, 15.0, seed, 1).unwrap();
            let f = GridField::from_config(&cfg, &BoxRegion::cube(1, 15.0).unwrap(), 0.05).unwrap();
            let d = assemble(&f, Bc::Dirichlet, 1.0).unwrap();
            let n = assemble(&f, Bc::Neumann, 1.0).unwrap();
            let cd = count_below_many(&d, &[l1, l1 + dl]).unwrap();
            let cn = count_below_many(&n, &[l1, l1 + dl]).unwrap();
            prop_assert!(cd[0] <= cn[0] && cd[1] <= cn[1]);
            prop_assert!(cd[0] <= cd[1] && cn[0] <= cn[1]);
        }

        #[test]
        fn rayleigh_above_ball_eigenvalue(c in -5.0f64..5.0, w in 0.3f64..5.0, rad in 2.0f64..8.0, seed in 0u64..500) {
            let p = p12();
            let cfg = ids_environment(&p, 20.0, 20.0, seed, 2).unwrap();
            let f = GridField::from_config(&cfg, &BoxRegion::cube(1, 20.0).unwrap(), 0.05).unwrap();
            let q = rayleigh_trial(&f, 1.0, &[c], w, rad).unwrap();
            let lam = ball_lambda1(&f, 1.0, &[c], rad).unwrap();
            prop_assert!(q >= lam - 1e-10);
        }
    }
}
