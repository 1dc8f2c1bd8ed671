//! Adaptive Gauss–Kronrod quadrature for real and complex integrands.
//!
//! Globally adaptive 7/15-point scheme: the interval with the largest error
//! estimate is bisected until the summed estimate meets the tolerance.
//! Semi-infinite ranges are mapped onto `[0, 1)` with `x = a + t/(1-t)`.

use num_complex::Complex64;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Values that can be integrated: closed under addition and real scaling.
pub trait QuadValue: Copy + Send + Sync {
    fn zero() -> Self;
    fn add(self, other: Self) -> Self;
    fn scale(self, k: f64) -> Self;
    fn magnitude(self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn scale(self, k: f64) -> Self {
        self * k
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn scale(self, k: f64) -> Self {
        self * k
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-10, rel_tol: 1e-10, max_intervals: 2000 }
    }
}

impl QuadOptions {
    pub fn with_tol(abs_tol: f64, rel_tol: f64) -> Self {
        Self { abs_tol, rel_tol, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
    /// Sub-interval carrying the largest remaining error estimate.
    pub worst: (f64, f64),
}

/// Fixed 15-point Kronrod rule on `[a, b]`, with the embedded Gauss error
/// estimate rescaled as in QUADPACK.
pub fn gk15<T: QuadValue, F: Fn(f64) -> T>(f: &F, a: f64, b: f64) -> (T, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut vals = [(T::zero(), T::zero()); 7];
    let mut kronrod = fc.scale(WGK[7]);
    let mut gauss = fc.scale(WG[3]);
    let mut res_abs = WGK[7] * fc.magnitude();
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let (lo, hi) = (f(center - dx), f(center + dx));
        vals[j] = (lo, hi);
        let pair = lo.add(hi);
        kronrod = kronrod.add(pair.scale(w));
        res_abs += w * (lo.magnitude() + hi.magnitude());
        if j % 2 == 1 {
            gauss = gauss.add(pair.scale(WG[j / 2]));
        }
    }
    let mean = kronrod.scale(0.5);
    let mut res_asc = WGK[7] * fc.add(mean.scale(-1.0)).magnitude();
    for (j, &(lo, hi)) in vals.iter().enumerate() {
        res_asc += WGK[j] * (lo.add(mean.scale(-1.0)).magnitude() + hi.add(mean.scale(-1.0)).magnitude());
    }
    let h = half.abs();
    let k = kronrod.scale(half);
    let g = gauss.scale(half);
    let mut err = k.add(g.scale(-1.0)).magnitude();
    let (res_abs, res_asc) = (res_abs * h, res_asc * h);
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (k, err)
}

struct Segment<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

impl<T> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T> Eq for Segment<T> {}
impl<T> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Integrate `f` over the finite interval `[a, b]`.
pub fn integrate<T: QuadValue, F: Fn(f64) -> T>(f: F, a: f64, b: f64, opts: QuadOptions) -> QuadResult<T> {
    integrate_breaks(f, &[a, b], opts)
}

/// Integrate over `[points[0], points[last]]`, seeding the subdivision at the given breakpoints.
pub fn integrate_breaks<T: QuadValue, F: Fn(f64) -> T>(f: F, points: &[f64], opts: QuadOptions) -> QuadResult<T> {
    assert!(points.len() >= 2, "need at least one interval");
    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    for w in points.windows(2) {
        if w[1] == w[0] {
            continue;
        }
        let (value, error) = gk15(&f, w[0], w[1]);
        evaluations += 15;
        heap.push(Segment { a: w[0], b: w[1], value, error });
    }
    if heap.is_empty() {
        return QuadResult { value: T::zero(), error: 0.0, evaluations, converged: true, worst: (points[0], points[0]) };
    }
    let totals = |heap: &BinaryHeap<Segment<T>>| {
        heap.iter().fold((T::zero(), 0.0), |(v, e), s: &Segment<T>| (v.add(s.value), e + s.error))
    };
    let (mut total, mut err) = totals(&heap);
    loop {
        let target = opts.abs_tol.max(opts.rel_tol * total.magnitude());
        if err <= target || heap.len() >= opts.max_intervals {
            // refresh the running sums before reporting
            let (t, e) = totals(&heap);
            let target = opts.abs_tol.max(opts.rel_tol * t.magnitude());
            if e <= target || heap.len() >= opts.max_intervals {
                let worst = heap.peek().map(|s| (s.a, s.b)).unwrap();
                return QuadResult { value: t, error: e, evaluations, converged: e <= target, worst };
            }
            total = t;
            err = e;
        }
        let seg = heap.pop().unwrap();
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            // interval cannot be split further in floating point
            let worst = (seg.a, seg.b);
            heap.push(seg);
            let (t, e) = totals(&heap);
            let target = opts.abs_tol.max(opts.rel_tol * t.magnitude());
            return QuadResult { value: t, error: e, evaluations, converged: e <= target, worst };
        }
        let (v1, e1) = gk15(&f, seg.a, mid);
        let (v2, e2) = gk15(&f, mid, seg.b);
        evaluations += 30;
        total = total.add(seg.value.scale(-1.0)).add(v1).add(v2);
        err += e1 + e2 - seg.error;
        heap.push(Segment { a: seg.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: seg.b, value: v2, error: e2 });
    }
}

/// Integrate over `[a, ∞)`.
pub fn integrate_upper<T: QuadValue, F: Fn(f64) -> T>(f: F, a: f64, opts: QuadOptions) -> QuadResult<T> {
    let g = |t: f64| {
        let s = 1.0 - t;
        if s <= 0.0 {
            return T::zero();
        }
        let x = a + t / s;
        let v = f(x);
        if v.magnitude() == 0.0 {
            T::zero()
        } else {
            v.scale(1.0 / (s * s))
        }
    };
    let mut r = integrate(g, 0.0, 1.0, opts);
    r.worst = map_back(a, r.worst, 1.0);
    r
}

/// Integrate over `(-∞, b]`.
pub fn integrate_lower<T: QuadValue, F: Fn(f64) -> T>(f: F, b: f64, opts: QuadOptions) -> QuadResult<T> {
    let mut r = integrate_upper(|y: f64| f(-y), -b, opts);
    r.worst = (-r.worst.1, -r.worst.0);
    r
}

/// Integrate over the whole real line, split at `center`.
pub fn integrate_line<T: QuadValue, F: Fn(f64) -> T>(f: F, center: f64, opts: QuadOptions) -> QuadResult<T> {
    let half = QuadOptions { abs_tol: 0.5 * opts.abs_tol, ..opts };
    let lo = integrate_lower(&f, center, half);
    let hi = integrate_upper(&f, center, half);
    QuadResult {
        value: lo.value.add(hi.value),
        error: lo.error + hi.error,
        evaluations: lo.evaluations + hi.evaluations,
        converged: lo.converged && hi.converged,
        worst: if lo.error > hi.error { lo.worst } else { hi.worst },
    }
}

fn map_back(a: f64, (t0, t1): (f64, f64), _sign: f64) -> (f64, f64) {
    let m = |t: f64| if t >= 1.0 { f64::INFINITY } else { a + t / (1.0 - t) };
    (m(t0), m(t1))
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = KahanSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_exact() {
        let r = integrate(|x: f64| x.powi(5) - 3.0 * x * x, -1.0, 2.0, QuadOptions::default());
        let exact = (64.0 - 1.0) / 6.0 - (8.0 + 1.0);
        assert!((r.value - exact).abs() < 1e-13);
        assert!(r.converged);
    }

    #[test]
    fn gaussian_over_line() {
        let r = integrate_line(|x: f64| (-x * x / 2.0).exp(), 0.0, QuadOptions::default());
        assert!((r.value - (2.0 * PI).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn algebraic_tail() {
        let r = integrate_upper(|x: f64| x.powf(-2.5), 1.0, QuadOptions::default());
        assert!((r.value - 1.0 / 1.5).abs() < 1e-9, "{}", r.value);
    }

    #[test]
    fn complex_oscillatory() {
        let r = integrate(|x: f64| Complex64::new(0.0, 3.0 * x).exp(), 0.0, PI, QuadOptions::default());
        let exact = (Complex64::new(0.0, 3.0 * PI).exp() - 1.0) / Complex64::new(0.0, 3.0);
        assert!((r.value - exact).norm() < 1e-12);
    }

    #[test]
    fn endpoint_singularity_reports_nonconvergence() {
        let opts = QuadOptions { max_intervals: 20, ..QuadOptions::default() };
        let r = integrate(|x: f64| 1.0 / x, 0.0, 1.0, opts);
        assert!(!r.converged);
        assert_eq!(r.worst.0, 0.0);
    }

    #[test]
    fn kahan_recovers_small_terms() {
        let mut s = KahanSum::new();
        s.add(1e16);
        for _ in 0..10 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 10.0);
    }
}
