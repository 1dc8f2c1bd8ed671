//! Small numerical helpers shared across modules.

use num_complex::Complex64;
use statrs::function::erf;
use std::f64::consts::SQRT_2;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// `e^z - 1` without cancellation for small `|z|`.
pub fn cexpm1(z: Complex64) -> Complex64 {
    let (x, y) = (z.re, z.im);
    let em1 = x.exp_m1();
    let s = (0.5 * y).sin();
    Complex64::new(em1 * y.cos() - 2.0 * s * s, x.exp() * y.sin())
}

/// `e^z - 1 - z`, accurate near zero.
pub fn cexpm1_minus_linear(z: Complex64) -> Complex64 {
    if z.norm() < 0.2 {
        let mut term = z * z * 0.5;
        let mut sum = term;
        for k in 3..30 {
            term = term * z / k as f64;
            sum += term;
            if term.norm() < 1e-18 * sum.norm() {
                break;
            }
        }
        sum
    } else {
        z.exp() - 1.0 - z
    }
}

/// `(e^x - 1) / x` with the removable point at zero.
pub fn exprel(x: f64) -> f64 {
    if x.abs() < 1e-5 {
        1.0 + x * (0.5 + x / 6.0)
    } else {
        x.exp_m1() / x
    }
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erf::erfc(-x / SQRT_2)
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

pub fn normal_quantile(p: f64) -> f64 {
    let x = -SQRT_2 * erf::erfc_inv(2.0 * p);
    if !x.is_finite() {
        return x;
    }
    // one Newton step against the complementary-error-function CDF
    let pdf = normal_pdf(x);
    if pdf > 0.0 {
        x - (normal_cdf(x) - p) / pdf
    } else {
        x
    }
}

/// Golden-section minimisation of a unimodal function on `[a, b]`.
pub fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
        if (b - a).abs() <= 1e-15 * (a.abs() + b.abs()).max(1e-300) {
            break;
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Smallest `x` in `[lo, hi]` with `pred(x)` true, assuming `pred` is monotone
/// (false then true) and `pred(hi)` holds.
pub fn bisect_first<P: Fn(f64) -> bool>(pred: P, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm1_matches_direct_away_from_zero() {
        let z = Complex64::new(-0.7, 2.3);
        assert!((cexpm1(z) - (z.exp() - 1.0)).norm() < 1e-15);
        let w = Complex64::new(1e-9, -2e-9);
        assert!((cexpm1(w) - w).norm() < 1e-17);
    }

    #[test]
    fn quadratic_remainder_series() {
        let z = Complex64::new(0.05, 0.1);
        let direct = z.exp() - 1.0 - z;
        assert!((cexpm1_minus_linear(z) - direct).norm() < 1e-15);
        let tiny = Complex64::new(0.0, 1e-6);
        let series = tiny * tiny * 0.5 + tiny * tiny * tiny / 6.0;
        assert!((cexpm1_minus_linear(tiny) - series).norm() < 1e-25);
    }

    #[test]
    fn normal_quantile_inverts_cdf() {
        for &p in &[1e-6, 0.01, 0.3, 0.5, 0.9, 0.999] {
            assert!((normal_cdf(normal_quantile(p)) - p).abs() < 1e-12 * p.max(1e-3));
        }
    }

    #[test]
    fn golden_section_finds_parabola_vertex() {
        let (x, _) = golden_min(|x| (x - 0.3).powi(2), -1.0, 2.0, 200);
        assert!((x - 0.3).abs() < 1e-7);
    }
}
