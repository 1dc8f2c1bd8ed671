use super::{linear_interp, tabulated_breaks, JumpMeasure, LevyError, LevyTriplet, StableJumps};
use crate::quad::{integrate, integrate_breaks, integrate_upper, QuadOptions, QuadResult};

/// A twice-differentiable function with its derivatives.
pub trait TestFunction: Sync {
    fn eval3(&self, x: f64) -> (f64, f64, f64);

    fn value(&self, x: f64) -> f64 {
        self.eval3(x).0
    }

    /// Closed interval outside which the function vanishes, if any.
    fn support(&self) -> Option<(f64, f64)> {
        None
    }
}

/// `amplitude · exp(-((x - center)/width)²)`.
#[derive(Debug, Clone, Copy)]
pub struct GaussianBump {
    pub center: f64,
    pub width: f64,
    pub amplitude: f64,
}

impl TestFunction for GaussianBump {
    fn eval3(&self, x: f64) -> (f64, f64, f64) {
        let z = (x - self.center) / self.width;
        let v = self.amplitude * (-z * z).exp();
        let w = self.width;
        (v, -2.0 * z * v / w, (4.0 * z * z - 2.0) * v / (w * w))
    }
}

/// `amplitude · exp(-1/(1 - r²))` for `|r| < 1`, `r = (x - center)/radius`.
#[derive(Debug, Clone, Copy)]
pub struct CompactBump {
    pub center: f64,
    pub radius: f64,
    pub amplitude: f64,
}

impl TestFunction for CompactBump {
    fn eval3(&self, x: f64) -> (f64, f64, f64) {
        let r = (x - self.center) / self.radius;
        if r.abs() >= 1.0 {
            return (0.0, 0.0, 0.0);
        }
        let q = 1.0 - r * r;
        let v = self.amplitude * (-1.0 / q).exp();
        let d1 = -2.0 * r / (q * q) * v;
        let d2 = (-2.0 / (q * q) - 8.0 * r * r / (q * q * q) + 4.0 * r * r / (q * q * q * q)) * v;
        (v, d1 / self.radius, d2 / (self.radius * self.radius))
    }

    fn support(&self) -> Option<(f64, f64)> {
        Some((self.center - self.radius, self.center + self.radius))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Sine;

impl TestFunction for Sine {
    fn eval3(&self, x: f64) -> (f64, f64, f64) {
        (x.sin(), x.cos(), -x.sin())
    }
}

const OPTS: QuadOptions = QuadOptions { abs_tol: 1e-11, rel_tol: 1e-10, max_intervals: 4000 };

fn checked(r: QuadResult<f64>) -> Result<f64, LevyError> {
    if r.converged {
        Ok(r.value)
    } else {
        Err(LevyError::Quadrature { achieved: r.error, lo: r.worst.0, hi: r.worst.1 })
    }
}

/// Second-order Taylor remainder `f(x+y) - f(x) - y f'(x)`.
fn remainder<F: TestFunction + ?Sized>(f: &F, x: f64, fx: (f64, f64, f64), y: f64, cut: f64) -> f64 {
    if y.abs() < cut {
        let (_, _, d2y) = f.eval3(x + y);
        y * y * (fx.2 / 3.0 + d2y / 6.0)
    } else {
        f.value(x + y) - fx.0 - y * fx.1
    }
}

/// `𝒜f(x)` for the process with the given triplet.
pub fn generator_apply<F: TestFunction + ?Sized>(triplet: &LevyTriplet, f: &F, x: f64) -> Result<f64, LevyError> {
    let fx = f.eval3(x);
    let local = 0.5 * triplet.alpha2 * fx.2 + triplet.gamma * fx.1;
    let jumps = match &triplet.nu {
        JumpMeasure::None => 0.0,
        JumpMeasure::FiniteAtoms { atoms } => atoms
            .iter()
            .map(|a| {
                let comp = if a.location.abs() <= 1.0 { a.location * fx.1 } else { 0.0 };
                a.rate * (f.value(x + a.location) - fx.0 - comp)
            })
            .sum(),
        JumpMeasure::StableDensity(s) => stable_jump_part(s, f, x, fx)?,
        JumpMeasure::TabulatedDensity { grid, values } => {
            let pts = tabulated_breaks(grid);
            let integrand = |y: f64| {
                let v = linear_interp(grid, values, y);
                if v == 0.0 {
                    return 0.0;
                }
                let inner = if y.abs() <= 1.0 { remainder(f, x, fx, y, 1e-4) } else { f.value(x + y) - fx.0 };
                v * inner
            };
            checked(integrate_breaks(integrand, &pts, OPTS))?
        }
    };
    Ok(local + jumps)
}

/// `𝒜*f(x)`: generator of the dual process.
pub fn adjoint_apply<F: TestFunction + ?Sized>(triplet: &LevyTriplet, f: &F, x: f64) -> Result<f64, LevyError> {
    generator_apply(&triplet.reflected(), f, x)
}

fn stable_jump_part<F: TestFunction + ?Sized>(s: &StableJumps, f: &F, x: f64, fx: (f64, f64, f64)) -> Result<f64, LevyError> {
    let (cl, cr) = s.constants();
    let a = s.alpha;
    // inner |y| ≤ 1 with y = t^p, p = 1/(2-α): the y^{1-α} singularity becomes bounded
    let p = 1.0 / (2.0 - a);
    let inner_integrand = |t: f64| {
        if t <= 0.0 {
            return 0.0;
        }
        let y = t.powf(p);
        let rp = remainder(f, x, fx, y, s.truncation);
        let rm = remainder(f, x, fx, -y, s.truncation);
        p * (cr * rp + cl * rm) / (y.powf(a) * t)
    };
    // the Taylor switch at the truncation radius is a breakpoint
    let inner = integrate_breaks(inner_integrand, &[0.0, s.truncation.powf(1.0 / p), 1.0], OPTS);
    if !inner.converged {
        let lo = inner.worst.0.powf(p);
        let hi = inner.worst.1.powf(p);
        return Err(LevyError::Quadrature { achieved: inner.error, lo, hi });
    }
    let kernel = |y: f64| y.powf(-1.0 - a);
    let outer_side = |sign: f64, c: f64| -> Result<f64, LevyError> {
        if c == 0.0 {
            return Ok(0.0);
        }
        let g = |y: f64| c * f.value(x + sign * y) * kernel(y);
        match f.support() {
            Some((lo, hi)) => {
                // y range for which x + sign·y meets the support
                let (y0, y1) = if sign > 0.0 { (lo - x, hi - x) } else { (x - hi, x - lo) };
                let y0 = y0.max(1.0);
                if y1 <= y0 {
                    Ok(0.0)
                } else {
                    checked(integrate(g, y0, y1, OPTS))
                }
            }
            None => {
                let span = 8.0f64.max(2.0 * x.abs());
                let near = checked(integrate(g, 1.0, 1.0 + span, OPTS))?;
                let far = checked(integrate_upper(g, 1.0 + span, OPTS))?;
                Ok(near + far)
            }
        }
    };
    let outer = outer_side(1.0, cr)? + outer_side(-1.0, cl)? - fx.0 * (cl + cr) / a;
    Ok(inner.value + outer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::{eta_eval, StableJumps};
    use num_complex::Complex64;
    use std::f64::consts::PI;

    #[test]
    fn brownian_on_gaussian() {
        let f = GaussianBump { center: 0.0, width: 1.0, amplitude: 1.0 };
        let v = generator_apply(&LevyTriplet::brownian(1.0), &f, 0.0).unwrap();
        assert!((v + 1.0).abs() < 1e-14);
    }

    #[test]
    fn single_far_atom_on_sine() {
        let t = LevyTriplet::compound_poisson(&[(2.0, 1.0)], 0.0);
        let v = generator_apply(&t, &Sine, 0.0).unwrap();
        assert!((v - 2f64.sin()).abs() < 1e-15);
        assert!((v - 0.9093).abs() < 1e-4);
        let w = adjoint_apply(&t, &Sine, 0.0).unwrap();
        assert!((w + 0.9093).abs() < 1e-4);
    }

    /// Fourier-multiplier oracle: 𝒜f(x) = (1/2π) ∫ η(-ξ) f̂(ξ) e^{-ixξ} dξ with
    /// f̂(ξ) = ∫ e^{iξx} f(x) dx; for e^{-x²}, f̂(ξ) = √π e^{-ξ²/4}.
    fn fourier_oracle(t: &LevyTriplet, x: f64) -> f64 {
        let integrand = |xi: f64| {
            let eta = eta_eval(t, -xi).unwrap();
            let fhat = PI.sqrt() * (-xi * xi / 4.0).exp();
            (eta * fhat * Complex64::new(0.0, -x * xi).exp()).re
        };
        crate::quad::integrate(integrand, -40.0, 40.0, QuadOptions::with_tol(1e-13, 1e-13)).value / (2.0 * PI)
    }

    #[test]
    fn stable_generator_matches_fourier_oracle() {
        let t = LevyTriplet::symmetric_stable(1.5, 1.0);
        let f = GaussianBump { center: 0.0, width: 1.0, amplitude: 1.0 };
        for &x in &[0.0, 0.4, 1.3, -2.5] {
            let direct = generator_apply(&t, &f, x).unwrap();
            let oracle = fourier_oracle(&t, x);
            assert!((direct - oracle).abs() < 1e-6, "x={x}: {direct} vs {oracle}");
        }
    }

    #[test]
    fn skewed_stable_generator_matches_fourier_oracle() {
        let t = LevyTriplet {
            alpha2: 0.3,
            gamma: 0.2,
            nu: JumpMeasure::StableDensity(StableJumps { alpha: 0.7, scale: 0.8, weight_left: 0.9, weight_right: 0.1, truncation: 1e-4 }),
        };
        let f = GaussianBump { center: 0.0, width: 1.0, amplitude: 1.0 };
        for &x in &[0.0, 0.9, -1.7] {
            let direct = generator_apply(&t, &f, x).unwrap();
            let oracle = fourier_oracle(&t, x);
            assert!((direct - oracle).abs() < 1e-6, "x={x}: {direct} vs {oracle}");
            let dual = adjoint_apply(&t, &f, x).unwrap();
            let dual_oracle = fourier_oracle(&t.reflected(), x);
            assert!((dual - dual_oracle).abs() < 1e-6);
        }
    }

    #[test]
    fn symmetric_adjoint_equals_generator() {
        let t = LevyTriplet::symmetric_stable(1.2, 0.5);
        let f = CompactBump { center: 0.3, radius: 1.5, amplitude: 2.0 };
        for &x in &[-1.0, 0.0, 0.7, 3.0] {
            let a = generator_apply(&t, &f, x).unwrap();
            let b = adjoint_apply(&t, &f, x).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn compact_bump_derivatives_match_differences() {
        let f = CompactBump { center: 0.2, radius: 0.8, amplitude: 1.5 };
        let h = 1e-5;
        for &x in &[-0.3, 0.1, 0.55, 0.9] {
            let (_, d1, d2) = f.eval3(x);
            let fd1 = (f.value(x + h) - f.value(x - h)) / (2.0 * h);
            let fd2 = (f.eval3(x + h).1 - f.eval3(x - h).1) / (2.0 * h);
            assert!((d1 - fd1).abs() < 1e-7 * (1.0 + d1.abs()));
            assert!((d2 - fd2).abs() < 1e-6 * (1.0 + d2.abs()));
        }
    }

    #[test]
    fn tabulated_generator_matches_atom_sum() {
        // two narrow triangles approximate atoms at -0.5 (rate 1) and 1.5 (rate 2)
        let w = 1e-4;
        let grid = vec![-0.5 - w, -0.5, -0.5 + w, 1.5 - w, 1.5, 1.5 + w];
        let values = vec![0.0, 1.0 / w, 0.0, 0.0, 2.0 / w, 0.0];
        let tab = LevyTriplet { alpha2: 0.0, gamma: 0.0, nu: JumpMeasure::TabulatedDensity { grid, values } };
        let atoms = LevyTriplet::compound_poisson(&[(-0.5, 1.0), (1.5, 2.0)], 0.0);
        let f = GaussianBump { center: 0.1, width: 0.7, amplitude: 1.0 };
        let a = generator_apply(&tab, &f, 0.2).unwrap();
        let b = generator_apply(&atoms, &f, 0.2).unwrap();
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }
}
