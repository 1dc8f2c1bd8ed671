//! Standard symmetric stable law with characteristic function `exp(-|ξ|^α)`,
//! tabulated once per index by Fourier quadrature.

use crate::interp::UniformSpline;
use crate::quad::{integrate, integrate_breaks, QuadOptions};
use statrs::function::gamma::{gamma, ln_gamma};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

const Z_MAX: f64 = 40.0;
const DZ: f64 = 0.01;

#[derive(Debug)]
pub(crate) struct StandardStable {
    alpha: f64,
    pdf: UniformSpline,
    tail_at_max: f64,
}

fn cache() -> &'static Mutex<HashMap<u64, Arc<StandardStable>>> {
    static CACHE: OnceLock<Mutex<HashMap<u64, Arc<StandardStable>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Shared table for index `alpha` in `(1, 2)`.
pub(crate) fn standard_stable(alpha: f64) -> Arc<StandardStable> {
    let key = alpha.to_bits();
    if let Some(t) = cache().lock().unwrap().get(&key) {
        return t.clone();
    }
    let table = Arc::new(StandardStable::build(alpha));
    cache().lock().unwrap().entry(key).or_insert(table).clone()
}

/// `(1/π) ∫₀^∞ cos(zξ) exp(-ξ^α) dξ`.
pub(crate) fn fourier_pdf(alpha: f64, z: f64) -> f64 {
    let cutoff = (42.0f64).powf(1.0 / alpha);
    let step = if z.abs() > 1.0 { (PI / z.abs()).min(1.0) } else { 1.0 };
    let n = (cutoff / step).ceil() as usize;
    let pts: Vec<f64> = (0..=n).map(|k| (k as f64 * step).min(cutoff)).collect();
    let opts = QuadOptions::with_tol(1e-14, 1e-12);
    // ξ = t² on the first piece removes the ξ^α kink at the origin
    let head = integrate(|t| 2.0 * t * (z * t * t).cos() * (-t.powf(2.0 * alpha)).exp(), 0.0, pts[1].sqrt(), opts);
    let rest = integrate_breaks(|xi| (z * xi).cos() * (-xi.powf(alpha)).exp(), &pts[1..], opts);
    (head.value + rest.value) / PI
}

/// Asymptotic (α > 1) series for the density at large `|z|`.
fn series_pdf(alpha: f64, z: f64) -> f64 {
    let z = z.abs();
    let lz = z.ln();
    let mut sum: f64 = 0.0;
    let mut prev = f64::INFINITY;
    for k in 1..=30 {
        let kf = k as f64;
        let mag = (ln_gamma(alpha * kf + 1.0) - ln_gamma(kf + 1.0) - (alpha * kf + 1.0) * lz).exp();
        if mag > prev || mag < 1e-18 * sum.abs() {
            break;
        }
        prev = mag;
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        sum += sign * mag * (kf * PI * alpha / 2.0).sin();
    }
    sum / PI
}

/// `P(Z > z)` for large `z` from the term-wise integrated series.
fn series_tail(alpha: f64, z: f64) -> f64 {
    let lz = z.ln();
    let mut sum: f64 = 0.0;
    let mut prev = f64::INFINITY;
    for k in 1..=30 {
        let kf = k as f64;
        let mag = (ln_gamma(alpha * kf) - ln_gamma(kf + 1.0) - alpha * kf * lz).exp();
        if mag > prev || mag < 1e-18 * sum.abs() {
            break;
        }
        prev = mag;
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        sum += sign * mag * (kf * PI * alpha / 2.0).sin();
    }
    sum / PI
}

impl StandardStable {
    fn build(alpha: f64) -> Self {
        use rayon::prelude::*;
        let n = (Z_MAX / DZ).round() as usize;
        let half: Vec<f64> = (0..=n).into_par_iter().map(|k| fourier_pdf(alpha, k as f64 * DZ)).collect();
        let mut y = Vec::with_capacity(2 * n + 1);
        y.extend(half.iter().rev());
        y.extend(half.iter().skip(1));
        let pdf = UniformSpline::new(-Z_MAX, DZ, y);
        Self { alpha, pdf, tail_at_max: series_tail(alpha, Z_MAX) }
    }

    pub(crate) fn pdf(&self, z: f64) -> f64 {
        if z.abs() <= Z_MAX {
            self.pdf.eval(z)
        } else {
            series_pdf(self.alpha, z)
        }
    }

    pub(crate) fn cdf(&self, z: f64) -> f64 {
        if z < -Z_MAX {
            series_tail(self.alpha, -z)
        } else if z > Z_MAX {
            1.0 - series_tail(self.alpha, z)
        } else if z <= 0.0 {
            self.tail_at_max + self.pdf.integral_to(z)
        } else {
            1.0 - self.tail_at_max - (self.pdf.total_integral() - self.pdf.integral_to(z))
        }
    }

    /// `P(Z > z)` for `z ≥ 0` without cancellation.
    pub(crate) fn upper_tail(&self, z: f64) -> f64 {
        if z > Z_MAX {
            series_tail(self.alpha, z)
        } else {
            1.0 - self.cdf(z)
        }
    }

    pub(crate) fn abs_mean(&self) -> f64 {
        2.0 * gamma(1.0 - 1.0 / self.alpha) / PI
    }

    #[cfg(test)]
    fn table_mass(&self) -> f64 {
        self.pdf.total_integral() + 2.0 * self.tail_at_max
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate_upper;

    #[test]
    fn table_normalizes() {
        let t = standard_stable(1.5);
        assert!((t.table_mass() - 1.0).abs() < 1e-9, "{}", t.table_mass());
        assert!((t.cdf(0.0) - 0.5).abs() < 1e-10);
    }

    #[test]
    fn density_at_zero_matches_gamma_formula() {
        for &a in &[1.2, 1.5, 1.8] {
            let t = standard_stable(a);
            let exact = gamma(1.0 + 1.0 / a) / PI;
            assert!((t.pdf(0.0) - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn series_and_table_agree_at_the_seam() {
        let t = standard_stable(1.5);
        for &z in &[25.0, 35.0, 39.9] {
            let q = fourier_pdf(1.5, z);
            assert!((series_pdf(1.5, z) - q).abs() < 1e-12 * 1e3 * q, "{z}");
        }
        assert!((t.pdf(40.0 - 1e-9) - t.pdf(40.0 + 1e-9)).abs() < 1e-13);
        let seam = t.cdf(40.0 - 1e-9) - t.cdf(40.0 + 1e-9);
        assert!(seam.abs() < 1e-10);
    }

    #[test]
    fn tail_series_matches_integrated_density() {
        let t = standard_stable(1.5);
        let direct = integrate_upper(|z| series_pdf(1.5, z), 60.0, QuadOptions::with_tol(1e-16, 1e-12)).value;
        assert!((series_tail(1.5, 60.0) - direct).abs() < 1e-12);
        let core = integrate(|z| t.pdf(z), 1.0, 2.0, Default::default()).value;
        assert!((t.cdf(2.0) - t.cdf(1.0) - core).abs() < 1e-11);
    }
}
