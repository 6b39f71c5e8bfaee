mod common;

use common::{rel, simpson};
use pamlab::gk::*;
use pamlab::model::{constants, ModelParams};
use pamlab::quad::QuadOpts;
use proptest::prelude::*;

fn p12() -> ModelParams {
    ModelParams::new(1, 2.0, 1.0, 1.0).unwrap()
}

fn opts() -> QuadOpts {
    QuadOpts::rel(1e-9)
}

// 2Γ(5/2) = 4∫u⁴e^{−u²}du
fn two_gamma_five_halves() -> f64 {
    4.0 * simpson(|u| u.powi(4) * (-u * u).exp(), 0.0, 12.0, 20_000)
}

#[test]
fn hessian_moment_oracle() {
    let p = p12();
    let h = hessian_moment(&p, QuadOpts::rel(1e-12)).unwrap();
    assert!((h.value - two_gamma_five_halves()).abs() < 1e-6);
    assert!((h.value - hessian_moment_closed(&p)).abs() < 1e-9);
    // ν-free
    let p3 = ModelParams::new(1, 2.0, 3.0, 1.0).unwrap();
    assert!((hessian_moment(&p3, QuadOpts::rel(1e-12)).unwrap().value - h.value).abs() < 1e-12);
    // Jlimit coefficient / ν
    let mu = CompactMeasure::from_atoms(1, vec![-1.0, 1.0], vec![0.5, 0.5]).unwrap();
    assert!(rel(eval_jlimit(&mu, &p3) / 3.0, h.value) < 1e-9);
}

#[test]
fn jlimit_examples() {
    let p = p12();
    let u = CompactMeasure::uniform_1d(-1.0, 1.0).unwrap();
    assert!(rel(eval_jlimit(&u, &p), two_gamma_five_halves() / 3.0) < 1e-9);
    assert!((eval_jlimit(&u, &p) - 0.88623).abs() < 1e-5);
    assert_eq!(eval_jlimit(&CompactMeasure::dirac(&[0.3]).unwrap(), &p), 0.0);
    let s = 2.5;
    assert!(rel(eval_jlimit(&u.dilated(s).unwrap(), &p), s * s * eval_jlimit(&u, &p)) < 1e-12);
}

#[test]
fn jt_dirac_and_translation() {
    let p = p12();
    let d = CompactMeasure::dirac(&[0.7]).unwrap();
    assert_eq!(eval_jt(&d, 1e6, &p, opts()).unwrap().value, 0.0);
    let mu = CompactMeasure::from_atoms(1, vec![-0.5, 0.25, 1.0], vec![0.2, 0.5, 0.3]).unwrap();
    let a = eval_jt(&mu, 1e4, &p, QuadOpts::rel(1e-12)).unwrap().value;
    let b = eval_jt(&mu.translated(&[3.7]).unwrap(), 1e4, &p, QuadOpts::rel(1e-12)).unwrap().value;
    assert!(rel(a, b) < 1e-10, "{a} {b}");
}

#[test]
fn jt_converges_to_limit() {
    let p = p12();
    let u = CompactMeasure::uniform_1d(-1.0, 1.0).unwrap();
    let lim = eval_jlimit(&u, &p);
    let e4 = (eval_jt(&u, 1e4, &p, opts()).unwrap().value / lim - 1.0).abs();
    let e8 = (eval_jt(&u, 1e8, &p, opts()).unwrap().value / lim - 1.0).abs();
    assert!(e8 <= 0.05 && e8 < e4, "{e4} {e8}");
}

#[test]
fn inner_share_decreases() {
    let p = p12();
    let u = CompactMeasure::uniform_1d(-1.0, 1.0).unwrap();
    let share = |t: f64| {
        let s = eval_jt_split(&u, t, &p, inner_cutoff(&p, t), opts()).unwrap();
        s.inner.value / s.total().value
    };
    let (a, b, c) = (share(1e4), share(1e8), share(1e12));
    assert!(a > b && b > c && c > 0.0, "{a} {b} {c}");
}

#[test]
fn h_gap_examples() {
    let p = p12();
    let a1 = constants(&p).a1;
    let mut prev = f64::INFINITY;
    for t in [1e2, 1e3, 1e4] {
        let g = assumption_h_gap(&p, t, 1.0).unwrap();
        assert!(g.gap.value < 0.0);
        assert!(g.gap.value.abs() <= g.derivative_bound * (1.0 + 1e-12));
        assert!(g.derivative_bound <= a1 * 0.5 * t.powf(-0.5) * g.delta * (1.0 + 1e-12));
        assert!(g.gap.value.abs() < prev);
        prev = g.gap.value.abs();
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn jt_nonnegative_and_even(x1 in -1.0f64..0.0, x2 in 0.0f64..1.0, w in 0.05f64..0.95, lt in 4.0f64..9.0) {
        let p = p12();
        let t = 10f64.powf(lt);
        let mu = CompactMeasure::from_atoms(1, vec![x1, x2], vec![w, 1.0 - w]).unwrap();
        let mirrored = CompactMeasure::from_atoms(1, vec![-x2, -x1], vec![1.0 - w, w]).unwrap();
        let a = eval_jt(&mu, t, &p, opts()).unwrap().value;
        let b = eval_jt(&mirrored, t, &p, opts()).unwrap().value;
        prop_assert!(a >= 0.0);
        prop_assert!((a - b).abs() <= 1e-7 * (1.0 + a));
    }
}
