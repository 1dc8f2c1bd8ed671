//! Initial and target densities with closed-form or quadrature Fourier
//! transforms, moments, CDFs and inverse-CDF sampling.

mod regularity;
mod stable;
mod tabulated;

pub use regularity::{check_regularity, RegularityReport, SurrogateCheck};

use crate::numeric::{cexpm1, normal_cdf, normal_quantile, I};
use num_complex::Complex64;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use stable::StandardStable;
use std::f64::consts::{FRAC_2_PI, PI};
use std::path::Path;
use std::sync::Arc;
use tabulated::TabulatedDensity;

#[derive(Debug, thiserror::Error)]
pub enum DensityError {
    #[error("invalid density: {0}")]
    Invalid(String),
    #[error("cannot read tabulated density: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    pub mean: f64,
    pub variance: f64,
}

/// Serializable description of a density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "kebab-case")]
pub enum DensitySpec {
    Gaussian { mean: f64, variance: f64 },
    GaussianMixture { components: Vec<MixtureComponent> },
    Laplace { location: f64, scale: f64 },
    /// Law of `L_t` for the symmetric stable process with exponent `-scale·|u|^index`.
    StableMarginal { index: f64, scale: f64, time: f64 },
    Tabulated { grid: Vec<f64>, values: Vec<f64> },
}

impl DensitySpec {
    pub fn gaussian(mean: f64, variance: f64) -> Self {
        DensitySpec::Gaussian { mean, variance }
    }

    /// Two-column `x,h` CSV; a non-numeric first row is treated as a header.
    pub fn tabulated_from_csv(path: &Path) -> Result<Self, DensityError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| DensityError::Io(format!("{}: {e}", path.display())))?;
        let (mut grid, mut values) = (Vec::new(), Vec::new());
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| DensityError::Io(e.to_string()))?;
            if rec.len() < 2 {
                return Err(DensityError::Io(format!("line {}: expected two columns", line + 1)));
            }
            match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
                (Ok(x), Ok(h)) => {
                    grid.push(x);
                    values.push(h);
                }
                _ if line == 0 => continue,
                _ => return Err(DensityError::Io(format!("line {}: non-numeric entry", line + 1))),
            }
        }
        Ok(DensitySpec::Tabulated { grid, values })
    }
}

/// Cached raw moments `E[X^j]`, `j = 1..=4`, and `E|X|`; `None` when infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub raw: [Option<f64>; 4],
    pub abs_mean: Option<f64>,
}

impl Moments {
    pub fn mean(&self) -> Option<f64> {
        self.raw[0]
    }

    pub fn second(&self) -> Option<f64> {
        self.raw[1]
    }

    pub fn variance(&self) -> Option<f64> {
        Some(self.raw[1]? - self.raw[0]?.powi(2))
    }

    /// Cumulants `κ₁..κ₄` from the raw moments.
    pub fn cumulants(&self) -> [Option<f64>; 4] {
        let [m1, m2, m3, m4] = self.raw;
        let k1 = m1;
        let k2 = m2.zip(m1).map(|(a, b)| a - b * b);
        let k3 = match (m1, m2, m3) {
            (Some(a), Some(b), Some(c)) => Some(c - 3.0 * b * a + 2.0 * a.powi(3)),
            _ => None,
        };
        let k4 = match (m1, m2, m3, m4) {
            (Some(a), Some(b), Some(c), Some(d)) => Some(d - 4.0 * c * a - 3.0 * b * b + 12.0 * b * a * a - 6.0 * a.powi(4)),
            _ => None,
        };
        [k1, k2, k3, k4]
    }
}

#[derive(Debug, Clone)]
enum Repr {
    Gaussian { mean: f64, sd: f64 },
    Mixture(Vec<(f64, f64, f64)>),
    Laplace { location: f64, scale: f64 },
    Cauchy { scale: f64 },
    Stable { table: Arc<StandardStable>, alpha: f64, rate: f64, scale: f64 },
    Tabulated(TabulatedDensity),
}

/// A validated density ready for evaluation.
#[derive(Debug, Clone)]
pub struct Density {
    spec: DensitySpec,
    repr: Repr,
    moments: Moments,
}

fn positive(name: &str, v: f64) -> Result<f64, DensityError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(DensityError::Invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

fn finite(name: &str, v: f64) -> Result<f64, DensityError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(DensityError::Invalid(format!("{name} must be finite")))
    }
}

fn gaussian_raw(mu: f64, v: f64) -> [f64; 4] {
    [mu, mu * mu + v, mu.powi(3) + 3.0 * mu * v, mu.powi(4) + 6.0 * mu * mu * v + 3.0 * v * v]
}

fn gaussian_abs_mean(mu: f64, sd: f64) -> f64 {
    sd * FRAC_2_PI.sqrt() * (-0.5 * (mu / sd).powi(2)).exp() + mu * (1.0 - 2.0 * normal_cdf(-mu / sd))
}

impl Density {
    pub fn new(spec: DensitySpec) -> Result<Self, DensityError> {
        let (repr, moments) = match &spec {
            DensitySpec::Gaussian { mean, variance } => {
                let mu = finite("mean", *mean)?;
                let v = positive("variance", *variance)?;
                let sd = v.sqrt();
                (Repr::Gaussian { mean: mu, sd }, Moments { raw: gaussian_raw(mu, v).map(Some), abs_mean: Some(gaussian_abs_mean(mu, sd)) })
            }
            DensitySpec::GaussianMixture { components } => {
                if components.is_empty() {
                    return Err(DensityError::Invalid("mixture needs at least one component".into()));
                }
                let total: f64 = components.iter().map(|c| c.weight).sum();
                let mut comps = Vec::new();
                let mut raw = [0.0; 4];
                let mut abs = 0.0;
                for c in components {
                    positive("mixture weight", c.weight)?;
                    let mu = finite("mean", c.mean)?;
                    let v = positive("variance", c.variance)?;
                    let w = c.weight / total;
                    comps.push((w, mu, v.sqrt()));
                    for (r, g) in raw.iter_mut().zip(gaussian_raw(mu, v)) {
                        *r += w * g;
                    }
                    abs += w * gaussian_abs_mean(mu, v.sqrt());
                }
                (Repr::Mixture(comps), Moments { raw: raw.map(Some), abs_mean: Some(abs) })
            }
            DensitySpec::Laplace { location, scale } => {
                let mu = finite("location", *location)?;
                let b = positive("scale", *scale)?;
                let raw = [mu, mu * mu + 2.0 * b * b, mu.powi(3) + 6.0 * mu * b * b, mu.powi(4) + 12.0 * mu * mu * b * b + 24.0 * b.powi(4)];
                let abs = mu.abs() + b * (-mu.abs() / b).exp();
                (Repr::Laplace { location: mu, scale: b }, Moments { raw: raw.map(Some), abs_mean: Some(abs) })
            }
            DensitySpec::StableMarginal { index, scale, time } => {
                let c = positive("scale", *scale)?;
                let t = positive("time", *time)?;
                let a = *index;
                if a == 1.0 {
                    let s = c * t;
                    (Repr::Cauchy { scale: s }, Moments { raw: [None; 4], abs_mean: None })
                } else if a > 1.0 && a < 2.0 {
                    let s = (c * t).powf(1.0 / a);
                    let table = stable::standard_stable(a);
                    let abs = s * table.abs_mean();
                    (Repr::Stable { table, alpha: a, rate: c * t, scale: s }, Moments { raw: [Some(0.0), None, None, None], abs_mean: Some(abs) })
                } else {
                    return Err(DensityError::Invalid(format!(
                        "stable-marginal index must be 1 or lie in (1, 2); got {a} (use gaussian for index 2)"
                    )));
                }
            }
            DensitySpec::Tabulated { grid, values } => {
                let t = TabulatedDensity::new(grid, values)?;
                let (raw, abs) = t.moments();
                (Repr::Tabulated(t), Moments { raw: raw.map(Some), abs_mean: Some(abs) })
            }
        };
        Ok(Self { spec, repr, moments })
    }

    pub fn spec(&self) -> &DensitySpec {
        &self.spec
    }

    pub fn moments(&self) -> &Moments {
        &self.moments
    }

    pub fn is_tabulated(&self) -> bool {
        matches!(self.repr, Repr::Tabulated(_))
    }

    /// Node grid for tabulated kinds.
    pub fn table_nodes(&self) -> Option<&[f64]> {
        match &self.repr {
            Repr::Tabulated(t) => Some(t.nodes()),
            _ => None,
        }
    }

    pub(crate) fn table_spacing(&self) -> Option<f64> {
        match &self.repr {
            Repr::Tabulated(t) => Some(t.min_spacing()),
            _ => None,
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match &self.repr {
            Repr::Gaussian { mean, sd } => (-0.5 * ((x - mean) / sd).powi(2)).exp() / (sd * (2.0 * PI).sqrt()),
            Repr::Mixture(c) => c.iter().map(|&(w, m, s)| w * (-0.5 * ((x - m) / s).powi(2)).exp() / (s * (2.0 * PI).sqrt())).sum(),
            Repr::Laplace { location, scale } => (-(x - location).abs() / scale).exp() / (2.0 * scale),
            Repr::Cauchy { scale } => scale / (PI * (x * x + scale * scale)),
            Repr::Stable { table, scale, .. } => table.pdf(x / scale) / scale,
            Repr::Tabulated(t) => t.pdf(x),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match &self.repr {
            Repr::Gaussian { mean, sd } => normal_cdf((x - mean) / sd),
            Repr::Mixture(c) => c.iter().map(|&(w, m, s)| w * normal_cdf((x - m) / s)).sum(),
            Repr::Laplace { location, scale } => {
                let z = (x - location) / scale;
                if z < 0.0 {
                    0.5 * z.exp()
                } else {
                    1.0 - 0.5 * (-z).exp()
                }
            }
            Repr::Cauchy { scale } => 0.5 + (x / scale).atan() / PI,
            Repr::Stable { table, scale, .. } => table.cdf(x / scale),
            Repr::Tabulated(t) => t.cdf(x),
        }
    }

    /// `P(|X - center| > r)` evaluated without cancellation in the far tails.
    fn two_sided_tail(&self, r: f64) -> f64 {
        let c = self.center();
        match &self.repr {
            Repr::Stable { table, scale, .. } => 2.0 * table.upper_tail(r / scale),
            _ => self.cdf(c - r) + (1.0 - self.cdf(c + r)),
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        match &self.repr {
            Repr::Gaussian { mean, sd } => mean + sd * normal_quantile(p),
            Repr::Laplace { location, scale } => {
                if p < 0.5 {
                    location + scale * (2.0 * p).ln()
                } else {
                    location - scale * (2.0 * (1.0 - p)).ln()
                }
            }
            Repr::Cauchy { scale } => scale * (PI * (p - 0.5)).tan(),
            Repr::Tabulated(t) => t.quantile(p),
            Repr::Mixture(_) | Repr::Stable { .. } => self.bisect_quantile(p),
        }
    }

    fn bisect_quantile(&self, p: f64) -> f64 {
        let c = self.center();
        let mut w = self.core_scale();
        while self.cdf(c - w) > p {
            w *= 2.0;
        }
        let mut lo = c - w;
        let mut w = self.core_scale();
        while self.cdf(c + w) < p {
            w *= 2.0;
        }
        let mut hi = c + w;
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if m <= lo || m >= hi {
                break;
            }
            if self.cdf(m) < p {
                lo = m;
            } else {
                hi = m;
            }
        }
        0.5 * (lo + hi)
    }

    /// Inverse-CDF draw; the uniform variate avoids both endpoints.
    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        let u = ((rng.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64;
        match &self.repr {
            Repr::Mixture(c) => {
                // pick a component, then invert its CDF with a second uniform
                let v = ((rng.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64;
                let mut acc = 0.0;
                for &(w, m, s) in c {
                    acc += w;
                    if u < acc {
                        return m + s * normal_quantile(v);
                    }
                }
                let &(_, m, s) = c.last().unwrap();
                m + s * normal_quantile(v)
            }
            _ => self.quantile(u),
        }
    }

    pub fn fourier(&self, xi: f64) -> Complex64 {
        self.fourier_minus_one(xi) + 1.0
    }

    /// `ĥ(ξ) - 1`, accurate for small `ξ`.
    pub fn fourier_minus_one(&self, xi: f64) -> Complex64 {
        match &self.repr {
            Repr::Gaussian { mean, sd } => cexpm1(Complex64::new(-0.5 * (sd * xi).powi(2), mean * xi)),
            Repr::Mixture(c) => c.iter().map(|&(w, m, s)| w * cexpm1(Complex64::new(-0.5 * (s * xi).powi(2), m * xi))).sum(),
            Repr::Laplace { location, scale } => {
                let b2 = (scale * xi).powi(2);
                (cexpm1(I * (location * xi)) - b2) / (1.0 + b2)
            }
            Repr::Cauchy { scale } => Complex64::new((-scale * xi.abs()).exp_m1(), 0.0),
            Repr::Stable { alpha, rate, .. } => Complex64::new((-rate * xi.abs().powf(*alpha)).exp_m1(), 0.0),
            Repr::Tabulated(t) => t.fourier_minus_one(xi),
        }
    }

    /// Mean when finite, otherwise the centre of symmetry.
    pub fn center(&self) -> f64 {
        match &self.repr {
            Repr::Cauchy { .. } => 0.0,
            _ => self.moments.mean().unwrap_or(0.0),
        }
    }

    pub fn sd(&self) -> Option<f64> {
        self.moments.variance().map(f64::sqrt)
    }

    /// Width of the central feature; sets the resolution of numerical grids.
    pub fn core_scale(&self) -> f64 {
        match &self.repr {
            Repr::Gaussian { sd, .. } => *sd,
            Repr::Mixture(c) => c.iter().map(|&(_, _, s)| s).fold(f64::INFINITY, f64::min),
            Repr::Laplace { scale, .. } => *scale,
            Repr::Cauchy { scale } => *scale,
            Repr::Stable { scale, .. } => *scale,
            Repr::Tabulated(_) => self.sd().unwrap(),
        }
    }

    /// Half-width `r` around `center()` with `P(|X - center| > r) ≤ mass`.
    pub fn tail_extent(&self, mass: f64) -> f64 {
        let mut r = self.core_scale();
        while self.two_sided_tail(r) > mass {
            r *= 2.0;
        }
        let mut lo = 0.5 * r;
        for _ in 0..100 {
            let m = 0.5 * (lo + r);
            if self.two_sided_tail(m) > mass {
                lo = m;
            } else {
                r = m;
            }
            if r - lo < 1e-6 * r {
                break;
            }
        }
        r
    }
}

/// Initial law `h₀` and target law `h₁`.
#[derive(Debug, Clone)]
pub struct DensityPair {
    pub h0: Density,
    pub h1: Density,
}

impl DensityPair {
    pub fn new(h0: Density, h1: Density) -> Self {
        Self { h0, h1 }
    }

    pub fn from_specs(h0: DensitySpec, h1: DensitySpec) -> Result<Self, DensityError> {
        Ok(Self::new(Density::new(h0)?, Density::new(h1)?))
    }

    pub fn identical(&self) -> bool {
        self.h0.spec == self.h1.spec
    }

    /// `g = h₁ - h₀`.
    pub fn g(&self, x: f64) -> f64 {
        if self.identical() {
            0.0
        } else {
            self.h1.pdf(x) - self.h0.pdf(x)
        }
    }

    /// `ĝ(ξ) = ĥ₁(ξ) - ĥ₀(ξ)`.
    pub fn g_hat(&self, xi: f64) -> Complex64 {
        if self.identical() {
            Complex64::new(0.0, 0.0)
        } else {
            self.h1.fourier_minus_one(xi) - self.h0.fourier_minus_one(xi)
        }
    }

    /// `φ(t, x) = (1 - t) h₀(x) + t h₁(x)`.
    pub fn phi(&self, t: f64, x: f64) -> f64 {
        (1.0 - t) * self.h0.pdf(x) + t * self.h1.pdf(x)
    }

    pub fn phi_cdf(&self, t: f64, x: f64) -> f64 {
        (1.0 - t) * self.h0.cdf(x) + t * self.h1.cdf(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate_line, QuadOptions};
    use proptest::prelude::*;
    use rand::SeedableRng;

    fn all_kinds() -> Vec<DensitySpec> {
        vec![
            DensitySpec::gaussian(0.3, 2.0),
            DensitySpec::GaussianMixture {
                components: vec![
                    MixtureComponent { weight: 0.3, mean: -1.0, variance: 0.5 },
                    MixtureComponent { weight: 0.7, mean: 2.0, variance: 1.5 },
                ],
            },
            DensitySpec::Laplace { location: -0.5, scale: 0.8 },
            DensitySpec::StableMarginal { index: 1.5, scale: 1.0, time: 2.0 },
            DensitySpec::Tabulated {
                grid: (0..=400).map(|i| -6.0 + 0.03 * i as f64).collect(),
                values: (0..=400).map(|i| { let x = -6.0 + 0.03 * i as f64; (-0.5 * x * x).exp() * (1.0 + 0.3 * x.sin()) }).collect(),
            },
        ]
    }

    #[test]
    fn gaussian_transform_closed_form() {
        let d = Density::new(DensitySpec::gaussian(0.0, 3.0)).unwrap();
        for &xi in &[0.0, 0.5, -1.7] {
            assert!((d.fourier(xi) - Complex64::new((-1.5 * xi * xi).exp(), 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn stable_marginal_transform_is_time_power() {
        let d = Density::new(DensitySpec::StableMarginal { index: 1.5, scale: 1.0, time: 2.0 }).unwrap();
        for &xi in &[0.2, 1.0, -3.0] {
            let exact: f64 = (-2.0 * f64::abs(xi).powf(1.5)).exp();
            assert!((d.fourier(xi).re - exact).abs() < 1e-15);
            // density itself inverts to the same transform
            let q = integrate_line(|x| Complex64::new(0.0, xi * x).exp() * d.pdf(x), 0.0, QuadOptions::with_tol(1e-11, 1e-10));
            assert!((q.value.re - exact).abs() < 2e-8, "{xi}: {} vs {exact}", q.value.re);
        }
    }

    #[test]
    fn every_kind_normalizes_and_transform_is_one_at_zero() {
        for spec in all_kinds() {
            let d = Density::new(spec.clone()).unwrap();
            let q = integrate_line(|x| d.pdf(x), d.center(), QuadOptions::with_tol(1e-12, 1e-11));
            assert!((q.value - 1.0).abs() < 1e-8, "{spec:?}: {}", q.value);
            assert!((d.fourier(0.0) - 1.0).norm() < 1e-10);
            for &xi in &[0.1, 1.0, 4.0, 25.0] {
                assert!(d.fourier(xi).norm() <= 1.0 + 1e-12);
                assert!((d.fourier(-xi) - d.fourier(xi).conj()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn moment_cache_matches_quadrature() {
        for spec in all_kinds() {
            let d = Density::new(spec.clone()).unwrap();
            let opts = QuadOptions::with_tol(1e-12, 1e-11);
            if let Some(m1) = d.moments().mean() {
                let q = integrate_line(|x| x * d.pdf(x), d.center(), opts).value;
                assert!((q - m1).abs() < 1e-8, "{spec:?}");
            }
            if let Some(m2) = d.moments().second() {
                let q = integrate_line(|x| x * x * d.pdf(x), d.center(), opts).value;
                assert!((q - m2).abs() < 1e-8 * m2.max(1.0), "{spec:?}");
            }
            if let Some(a) = d.moments().abs_mean {
                let q = if matches!(spec, DensitySpec::StableMarginal { .. }) {
                    // heavy tails: use E|X| = (2/π)∫(1 - Re ĥ(ξ))/ξ² dξ with ξ = t²
                    let f = |t: f64| 2.0 * (-d.fourier_minus_one(t * t).re) / (t * t * t);
                    FRAC_2_PI * crate::quad::integrate_upper(f, 0.0, opts).value
                } else {
                    integrate_line(|x| x.abs() * d.pdf(x), 0.0, opts).value
                };
                assert!((q - a).abs() < 1e-8, "{spec:?} {q} {a}");
            }
        }
    }

    #[test]
    fn mixture_transform_is_linear() {
        let comps = [(0.25, -1.0, 0.5), (0.75, 2.0, 1.5)];
        let mix = Density::new(DensitySpec::GaussianMixture {
            components: comps.iter().map(|&(weight, mean, variance)| MixtureComponent { weight, mean, variance }).collect(),
        })
        .unwrap();
        for &xi in &[0.3, 1.1, -2.5] {
            let manual: Complex64 = comps
                .iter()
                .map(|&(w, m, v)| w * Density::new(DensitySpec::gaussian(m, v)).unwrap().fourier(xi))
                .sum();
            assert!((mix.fourier(xi) - manual).norm() < 1e-12);
        }
    }

    #[test]
    fn cdf_quantile_round_trip() {
        for spec in all_kinds() {
            let d = Density::new(spec.clone()).unwrap();
            for &p in &[1e-5, 0.1, 0.5, 0.93] {
                let x = d.quantile(p);
                assert!((d.cdf(x) - p).abs() < 1e-9, "{spec:?} p={p}");
            }
        }
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let d = Density::new(DensitySpec::gaussian(0.0, 1.0)).unwrap();
        let mut a = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut b = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        assert_eq!(d.sample(&mut a).to_bits(), d.sample(&mut b).to_bits());
    }

    #[test]
    fn csv_loader_skips_header() {
        let dir = std::env::temp_dir().join(format!("levy-density-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("h.csv");
        std::fs::write(&p, "x,h\n0,1\n0.5,1\n1,1\n").unwrap();
        let spec = DensitySpec::tabulated_from_csv(&p).unwrap();
        assert_eq!(spec, DensitySpec::Tabulated { grid: vec![0.0, 0.5, 1.0], values: vec![1.0; 3] });
        std::fs::write(&p, "0,1\n0.5,abc\n").unwrap();
        assert!(DensitySpec::tabulated_from_csv(&p).is_err());
    }

    #[test]
    fn json_shape() {
        let s = serde_json::to_string(&DensitySpec::gaussian(0.0, 2.0)).unwrap();
        assert_eq!(s, r#"{"kind":"gaussian","params":{"mean":0.0,"variance":2.0}}"#);
        let back: DensitySpec = serde_json::from_str(r#"{"kind":"stable-marginal","params":{"index":1.5,"scale":1,"time":1}}"#).unwrap();
        assert!(matches!(back, DensitySpec::StableMarginal { .. }));
    }

    #[test]
    fn pair_difference_vanishes_for_identical_specs() {
        let p = DensityPair::from_specs(DensitySpec::gaussian(0.0, 1.0), DensitySpec::gaussian(0.0, 1.0)).unwrap();
        assert_eq!(p.g(0.3), 0.0);
        assert_eq!(p.g_hat(1.0), Complex64::new(0.0, 0.0));
        let q = DensityPair::from_specs(DensitySpec::gaussian(0.0, 1.0), DensitySpec::gaussian(0.0, 2.0)).unwrap();
        let exact = (-1.0f64).exp() - (-0.5f64).exp();
        assert!((q.g_hat(1.0).re - exact).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn gaussian_fourier_invariants(mean in -3.0f64..3.0, var in 0.05f64..5.0, xi in -20.0f64..20.0) {
            let d = Density::new(DensitySpec::gaussian(mean, var)).unwrap();
            let f = d.fourier(xi);
            prop_assert!(f.norm() <= 1.0 + 1e-14);
            prop_assert!((d.fourier(-xi) - f.conj()).norm() < 1e-14);
            let direct = Complex64::new(-0.5 * var * xi * xi, mean * xi).exp();
            prop_assert!((f - direct).norm() < 1e-14);
        }

        #[test]
        fn laplace_fourier_invariants(loc in -3.0f64..3.0, b in 0.1f64..3.0, xi in -20.0f64..20.0) {
            let d = Density::new(DensitySpec::Laplace { location: loc, scale: b }).unwrap();
            let direct = Complex64::new(0.0, loc * xi).exp() / (1.0 + b * b * xi * xi);
            prop_assert!((d.fourier(xi) - direct).norm() < 1e-14);
        }
    }
}
