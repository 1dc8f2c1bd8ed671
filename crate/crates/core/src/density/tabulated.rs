//! Tabulated densities: PCHIP between nodes, exponential tails outside.

use super::DensityError;
use crate::interp::Pchip;
use crate::numeric::{cexpm1, I};
use crate::quad::gk15;
use num_complex::Complex64;

#[derive(Debug, Clone)]
pub(crate) struct TabulatedDensity {
    interp: Pchip,
    left_rate: f64,
    right_rate: f64,
    /// Cumulative mass at each node, including the left tail.
    cum: Vec<f64>,
    min_spacing: f64,
}

impl TabulatedDensity {
    pub(crate) fn new(grid: &[f64], values: &[f64]) -> Result<Self, DensityError> {
        if grid.len() < 3 || grid.len() != values.len() {
            return Err(DensityError::Invalid("tabulated density needs at least 3 (x, h) pairs of equal length".into()));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) || grid.iter().any(|x| !x.is_finite()) {
            return Err(DensityError::Invalid("tabulated grid must be finite and strictly increasing".into()));
        }
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(DensityError::Invalid(format!("tabulated value at x = {} is not strictly positive", grid[i])));
        }
        let n = grid.len();
        let edge_rate = |h_edge: f64, h_in: f64, dx: f64| ((h_in / h_edge).ln() / dx).max(1.0 / dx);
        let left_rate = edge_rate(values[0], values[1], grid[1] - grid[0]);
        let right_rate = edge_rate(values[n - 1], values[n - 2], grid[n - 1] - grid[n - 2]);
        let raw = Pchip::new(grid.to_vec(), values.to_vec());
        let mut mass = values[0] / left_rate + values[n - 1] / right_rate;
        for i in 0..n - 1 {
            mass += gk15(&|x| raw.eval(x), grid[i], grid[i + 1]).0;
        }
        let scaled: Vec<f64> = values.iter().map(|v| v / mass).collect();
        let interp = Pchip::new(grid.to_vec(), scaled);
        let mut cum = vec![interp.node_values()[0] / left_rate; n];
        for i in 1..n {
            cum[i] = cum[i - 1] + gk15(&|x| interp.eval(x), grid[i - 1], grid[i]).0;
        }
        let min_spacing = grid.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        Ok(Self { interp, left_rate, right_rate, cum, min_spacing })
    }

    fn lo(&self) -> f64 {
        self.interp.nodes()[0]
    }

    fn hi(&self) -> f64 {
        *self.interp.nodes().last().unwrap()
    }

    fn h_lo(&self) -> f64 {
        self.interp.node_values()[0]
    }

    fn h_hi(&self) -> f64 {
        *self.interp.node_values().last().unwrap()
    }

    pub(crate) fn nodes(&self) -> &[f64] {
        self.interp.nodes()
    }

    pub(crate) fn min_spacing(&self) -> f64 {
        self.min_spacing
    }

    pub(crate) fn pdf(&self, x: f64) -> f64 {
        if x < self.lo() {
            self.h_lo() * (self.left_rate * (x - self.lo())).exp()
        } else if x > self.hi() {
            self.h_hi() * (-self.right_rate * (x - self.hi())).exp()
        } else {
            self.interp.eval(x)
        }
    }

    pub(crate) fn cdf(&self, x: f64) -> f64 {
        if x < self.lo() {
            return self.pdf(x) / self.left_rate;
        }
        if x >= self.hi() {
            return 1.0 - self.pdf(x) / self.right_rate;
        }
        let nodes = self.interp.nodes();
        let i = nodes.partition_point(|&v| v <= x) - 1;
        self.cum[i] + gk15(&|t| self.interp.eval(t), nodes[i], x).0
    }

    pub(crate) fn quantile(&self, p: f64) -> f64 {
        let left_mass = self.cum[0];
        let right_mass = self.h_hi() / self.right_rate;
        if p <= left_mass {
            return self.lo() + (p / left_mass).ln() / self.left_rate;
        }
        if p >= 1.0 - right_mass {
            return self.hi() - ((1.0 - p) / right_mass).ln() / self.right_rate;
        }
        let nodes = self.interp.nodes();
        let i = (self.cum.partition_point(|&c| c <= p).max(1) - 1).min(nodes.len() - 2);
        let (mut a, mut b) = (nodes[i], nodes[i + 1]);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if self.cdf(m) < p {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }

    /// `∫ (e^{iξx} - 1) h(x) dx`; Gauss–Kronrod on short cells, exact otherwise.
    pub(crate) fn fourier_minus_one(&self, xi: f64) -> Complex64 {
        if xi == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let (a, b) = (self.lo(), self.hi());
        let iz = I * xi;
        let (kl, kr) = (self.left_rate, self.right_rate);
        let left = self.h_lo() * (kl * cexpm1(iz * a) - iz) / (kl * (kl + iz));
        let right = self.h_hi() * (kr * cexpm1(iz * b) + iz) / (kr * (kr - iz));
        let f = |x: f64| cexpm1(iz * x) * self.interp.eval(x);
        let nodes = self.interp.nodes();
        let mut sum = left + right;
        for i in 0..nodes.len() - 1 {
            let (x0, x1) = (nodes[i], nodes[i + 1]);
            if xi.abs() * (x1 - x0) < 1.0 {
                sum += gk15(&f, x0, x1).0;
            } else {
                sum += self.cell_fourier(i, xi) - (self.cum[i + 1] - self.cum[i]);
            }
        }
        sum
    }

    /// `∫ p(x) e^{iξx}` over cell `i` by repeated integration by parts of the cubic.
    fn cell_fourier(&self, i: usize, xi: f64) -> Complex64 {
        let (x, y, d) = (self.interp.nodes(), self.interp.node_values(), self.interp.node_slopes());
        let h = x[i + 1] - x[i];
        let (y0, y1, s0, s1) = (y[i], y[i + 1], d[i] * h, d[i + 1] * h);
        let d2a = (-6.0 * y0 - 4.0 * s0 + 6.0 * y1 - 2.0 * s1) / (h * h);
        let d2b = (6.0 * y0 + 2.0 * s0 - 6.0 * y1 + 4.0 * s1) / (h * h);
        let d3 = (12.0 * y0 + 6.0 * s0 - 12.0 * y1 + 6.0 * s1) / (h * h * h);
        let iz = I * xi;
        let end = |x: f64, derivs: [f64; 4]| -> Complex64 {
            let mut acc = Complex64::new(0.0, 0.0);
            let mut denom = iz;
            for (k, dk) in derivs.iter().enumerate() {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                acc += sign * dk / denom;
                denom *= iz;
            }
            (iz * x).exp() * acc
        };
        end(x[i + 1], [y1, d[i + 1], d2b, d3]) - end(x[i], [y0, d[i], d2a, d3])
    }

    /// `∫ x^j h(x) dx` for `j = 1..=4` and `∫|x| h`.
    pub(crate) fn moments(&self) -> ([f64; 4], f64) {
        let mut m = [0.0; 4];
        let mut abs = 0.0;
        let nodes = self.interp.nodes();
        for w in nodes.windows(2) {
            let mut cells = vec![(w[0], w[1])];
            if w[0] < 0.0 && w[1] > 0.0 {
                cells = vec![(w[0], 0.0), (0.0, w[1])];
            }
            for (lo, hi) in cells {
                for (j, mj) in m.iter_mut().enumerate() {
                    *mj += gk15(&|x| x.powi(j as i32 + 1) * self.interp.eval(x), lo, hi).0;
                }
                abs += gk15(&|x| x.abs() * self.interp.eval(x), lo, hi).0;
            }
        }
        // exponential tails: ∫_0^∞ (e + dir·s)^j h e^{-ks} ds, expanded binomially
        let tail = |edge: f64, h: f64, k: f64, dir: f64, j: usize| -> f64 {
            let mut total = 0.0;
            let mut fact = 1.0;
            for r in 0..=j {
                if r > 0 {
                    fact *= r as f64;
                }
                let binom = (1..=r).fold(1.0, |acc, q| acc * (j + 1 - q) as f64 / q as f64);
                total += binom * edge.powi((j - r) as i32) * dir.powi(r as i32) * fact / k.powi(r as i32 + 1);
            }
            h * total
        };
        for (j, mj) in m.iter_mut().enumerate() {
            *mj += tail(self.lo(), self.h_lo(), self.left_rate, -1.0, j + 1);
            *mj += tail(self.hi(), self.h_hi(), self.right_rate, 1.0, j + 1);
        }
        abs += abs_tail(self.lo(), self.h_lo(), self.left_rate, -1.0);
        abs += abs_tail(self.hi(), self.h_hi(), self.right_rate, 1.0);
        (m, abs)
    }
}

/// `∫ |e + dir·s| h e^{-ks} ds` over `s ≥ 0`.
fn abs_tail(edge: f64, h: f64, k: f64, dir: f64) -> f64 {
    let signed = edge / k + dir / (k * k);
    if edge * dir >= 0.0 {
        return h * signed.abs();
    }
    // the tail crosses zero at s0 = |edge|
    let s0 = edge.abs();
    let before = edge.abs() / k - 1.0 / (k * k) + (-k * s0).exp() / (k * k);
    let after = (-k * s0).exp() / (k * k);
    h * (before + after)
}
