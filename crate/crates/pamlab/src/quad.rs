//! Globally adaptive Gauss–Kronrod quadrature with tail substitutions.

use crate::error::{invalid, PamError, Result};
use std::collections::BinaryHeap;

// 21-point Kronrod abscissae (non-negative half) and weights, with the embedded 10-point Gauss weights.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Tolerances and limits for the adaptive integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOpts {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOpts {
    fn default() -> Self {
        Self {
            abs_tol: 0.0,
            rel_tol: 1e-12,
            max_intervals: 4000,
        }
    }
}

impl QuadOpts {
    pub fn rel(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }

    pub fn with_abs(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }
}

/// Integral value with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QuadValue {
    pub value: f64,
    pub abs_err: f64,
    pub evals: usize,
}

impl QuadValue {
    pub fn zero() -> Self {
        Self {
            value: 0.0,
            abs_err: 0.0,
            evals: 0,
        }
    }

    pub fn scale(self, c: f64) -> Self {
        Self {
            value: self.value * c,
            abs_err: self.abs_err * c.abs(),
            evals: self.evals,
        }
    }

    pub fn add(self, o: QuadValue) -> Self {
        Self {
            value: self.value + o.value,
            abs_err: self.abs_err + o.abs_err,
            evals: self.evals + o.evals,
        }
    }

    pub fn shift(self, c: f64) -> Self {
        Self {
            value: self.value + c,
            ..self
        }
    }
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
    // part of `err` that is pure rounding and cannot be reduced by bisection
    floor: f64,
}

impl Segment {
    fn key(&self) -> f64 {
        self.err - self.floor
    }
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key().total_cmp(&other.key())
    }
}

fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut res_k = WGK[10] * fc;
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let x = h * XGK[j];
        let f1 = f(c - x);
        let f2 = f(c + x);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * h;
    let res_abs = res_abs * h.abs();
    let res_asc = res_asc * h.abs();
    let mut err = ((res_k - res_g) * h).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (1.0f64).min((200.0 * err / res_asc).powf(1.5));
    }
    let floor = 50.0 * f64::EPSILON * res_abs;
    err = err.max(floor);
    (value, err, floor)
}

/// ∫_a^b f on a finite interval.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOpts) -> Result<QuadValue> {
    integrate_breaks(&f, &[a, b], opts)
}

/// ∫ over [p₀, p_last], with the interior points as forced breakpoints.
pub fn integrate_breaks<F: Fn(f64) -> f64>(f: &F, points: &[f64], opts: QuadOpts) -> Result<QuadValue> {
    if points.len() < 2 {
        return Err(invalid("points", "need at least two breakpoints"));
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(invalid("points", "breakpoints must be finite"));
    }
    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut total_err = 0.0;
    let mut total_floor = 0.0;
    let mut evals = 0usize;
    for w in points.windows(2) {
        if w[1] == w[0] {
            continue;
        }
        let (v, e, fl) = gk21(f, w[0], w[1]);
        evals += 21;
        total += v;
        total_err += e;
        total_floor += fl;
        heap.push(Segment {
            a: w[0],
            b: w[1],
            value: v,
            err: e,
            floor: fl,
        });
    }
    let mut count = heap.len();
    loop {
        let tol = opts.abs_tol.max(opts.rel_tol * total.abs());
        if total_err <= tol || total_err - total_floor <= 0.5 * tol.max(total_floor) {
            break;
        }
        if count >= opts.max_intervals {
            return Err(PamError::QuadratureNonConvergence {
                value: total,
                abs_err: total_err,
            });
        }
        let seg = match heap.pop() {
            Some(s) => s,
            None => break,
        };
        let m = 0.5 * (seg.a + seg.b);
        if !(m > seg.a.min(seg.b) && m < seg.a.max(seg.b)) {
            // interval cannot be split further in floating point
            return Err(PamError::QuadratureNonConvergence {
                value: total,
                abs_err: total_err,
            });
        }
        let (v1, e1, f1) = gk21(f, seg.a, m);
        let (v2, e2, f2) = gk21(f, m, seg.b);
        evals += 42;
        total += v1 + v2 - seg.value;
        total_err += e1 + e2 - seg.err;
        total_floor += f1 + f2 - seg.floor;
        heap.push(Segment {
            a: seg.a,
            b: m,
            value: v1,
            err: e1,
            floor: f1,
        });
        heap.push(Segment {
            a: m,
            b: seg.b,
            value: v2,
            err: e2,
            floor: f2,
        });
        count += 1;
        if count % 64 == 0 {
            // refresh the running sums against drift
            total = heap.iter().map(|s| s.value).sum();
            total_err = heap.iter().map(|s| s.err).sum();
            total_floor = heap.iter().map(|s| s.floor).sum();
        }
    }
    let value: f64 = crate::sum::neumaier_sum(heap.iter().map(|s| s.value));
    let abs_err = heap.iter().map(|s| s.err).sum();
    Ok(QuadValue {
        value,
        abs_err,
        evals,
    })
}

/// ∫_b^∞ f(y) dy for f decaying like y^{-decay} (decay > 1), or faster when `decay` is `None`.
///
/// Uses y = b + u^{-γ} - 1 on u ∈ (0, 1], with γ = 1/(decay-1) so the transformed integrand stays bounded.
pub fn integrate_upper_tail<F: Fn(f64) -> f64>(f: F, b: f64, decay: Option<f64>, opts: QuadOpts) -> Result<QuadValue> {
    let gamma = match decay {
        Some(p) if p > 1.0 => (1.0 / (p - 1.0)).min(4.0),
        Some(p) => return Err(invalid("decay", format!("tail decay exponent {p} is not integrable"))),
        None => 1.0,
    };
    let g = |u: f64| {
        if u <= 0.0 {
            return 0.0;
        }
        let s = u.powf(-gamma);
        let y = b + s - 1.0;
        let jac = gamma * s / u;
        let v = f(y) * jac;
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    integrate(g, 0.0, 1.0, opts)
}

/// ∫_{-∞}^{∞} f with forced breakpoints and symmetric algebraic tails.
pub fn integrate_line<F: Fn(f64) -> f64>(f: &F, breaks: &[f64], decay: Option<f64>, opts: QuadOpts) -> Result<QuadValue> {
    let mut pts: Vec<f64> = breaks.to_vec();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    if pts.is_empty() {
        pts.push(0.0);
    }
    let lo = pts[0];
    let hi = *pts.last().unwrap();
    let mid = if pts.len() >= 2 {
        integrate_breaks(f, &pts, opts)?
    } else {
        QuadValue::zero()
    };
    let right = integrate_upper_tail(f, hi, decay, opts)?;
    let left = integrate_upper_tail(|y| f(-y), -lo, decay, opts)?;
    Ok(mid.add(right).add(left))
}

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}
