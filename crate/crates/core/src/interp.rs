//! Cubic interpolants: natural splines on uniform grids and monotone
//! piecewise-cubic Hermite (PCHIP) on arbitrary grids.

/// Natural cubic spline through equally spaced samples.
#[derive(Debug, Clone)]
pub struct UniformSpline {
    x0: f64,
    dx: f64,
    y: Vec<f64>,
    m: Vec<f64>,
    cum: Vec<f64>,
}

impl UniformSpline {
    pub fn new(x0: f64, dx: f64, y: Vec<f64>) -> Self {
        assert!(y.len() >= 3 && dx > 0.0);
        let n = y.len();
        let mut m = vec![0.0; n];
        // Thomas algorithm on the interior system m[i-1] + 4 m[i] + m[i+1] = rhs.
        let k = n - 2;
        let mut c = vec![0.0; k];
        let mut d = vec![0.0; k];
        let scale = 6.0 / (dx * dx);
        for j in 0..k {
            let i = j + 1;
            let rhs = scale * (y[i + 1] - 2.0 * y[i] + y[i - 1]);
            if j == 0 {
                c[j] = 1.0 / 4.0;
                d[j] = rhs / 4.0;
            } else {
                let denom = 4.0 - c[j - 1];
                c[j] = 1.0 / denom;
                d[j] = (rhs - d[j - 1]) / denom;
            }
        }
        for j in (0..k).rev() {
            let next = if j + 1 < k { m[j + 2] } else { 0.0 };
            m[j + 1] = d[j] - c[j] * next;
        }
        let mut cum = vec![0.0; n];
        for i in 1..n {
            cum[i] = cum[i - 1] + dx * 0.5 * (y[i - 1] + y[i]) - dx * dx * dx * (m[i - 1] + m[i]) / 24.0;
        }
        Self { x0, dx, y, m, cum }
    }

    /// Exact integral of the spline from the first node to `x` (clamped to the grid).
    pub fn integral_to(&self, x: f64) -> f64 {
        if x <= self.x0 {
            return 0.0;
        }
        if x >= self.x_max() {
            return *self.cum.last().unwrap();
        }
        let (i, t) = self.locate(x);
        let a = 1.0 - t;
        let h = self.dx;
        let part = self.y[i] * (t - 0.5 * t * t)
            + self.y[i + 1] * 0.5 * t * t
            + h * h / 6.0 * (self.m[i] * (-0.25 * a.powi(4) + 0.5 * a * a - 0.25) + self.m[i + 1] * (0.25 * t.powi(4) - 0.5 * t * t));
        self.cum[i] + h * part
    }

    pub fn total_integral(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    pub fn x_min(&self) -> f64 {
        self.x0
    }

    pub fn x_max(&self) -> f64 {
        self.x0 + self.dx * (self.y.len() - 1) as f64
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.x0 && x <= self.x_max()
    }

    fn locate(&self, x: f64) -> (usize, f64) {
        let s = (x - self.x0) / self.dx;
        let last = self.y.len() - 2;
        let i = if s <= 0.0 { 0 } else { (s.floor() as usize).min(last) };
        (i, s - i as f64)
    }

    /// Value and first two derivatives; callers keep `x` inside the grid.
    pub fn eval3(&self, x: f64) -> (f64, f64, f64) {
        let (i, t) = self.locate(x);
        let (a, b) = (1.0 - t, t);
        let (y0, y1, m0, m1) = (self.y[i], self.y[i + 1], self.m[i], self.m[i + 1]);
        let h = self.dx;
        let v = a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let d1 = (y1 - y0) / h - (3.0 * a * a - 1.0) / 6.0 * h * m0 + (3.0 * b * b - 1.0) / 6.0 * h * m1;
        let d2 = a * m0 + b * m1;
        (v, d1, d2)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (i, t) = self.locate(x);
        let (a, b) = (1.0 - t, t);
        let h2 = self.dx * self.dx / 6.0;
        a * self.y[i] + b * self.y[i + 1] + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h2
    }
}

/// Shape-preserving cubic Hermite interpolant (Fritsch–Carlson slopes).
#[derive(Debug, Clone)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        let n = x.len();
        assert!(n >= 2 && y.len() == n);
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut d = vec![0.0; n];
        if n == 2 {
            d[0] = delta[0];
            d[1] = delta[0];
            return Self { x, y, d };
        }
        for i in 1..n - 1 {
            if delta[i - 1] * delta[i] > 0.0 {
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
        }
        d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
        d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        Self { x, y, d }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.x
    }

    pub fn node_values(&self) -> &[f64] {
        &self.y
    }

    pub fn node_slopes(&self) -> &[f64] {
        &self.d
    }

    fn locate(&self, x: f64) -> usize {
        let i = self.x.partition_point(|&v| v <= x);
        i.saturating_sub(1).min(self.x.len() - 2)
    }

    pub fn eval3(&self, x: f64) -> (f64, f64, f64) {
        let i = self.locate(x);
        let h = self.x[i + 1] - self.x[i];
        let t = (x - self.x[i]) / h;
        let (y0, y1, d0, d1) = (self.y[i], self.y[i + 1], self.d[i] * h, self.d[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * d0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * d1;
        let v1 = (6.0 * t2 - 6.0 * t) * y0 + (3.0 * t2 - 4.0 * t + 1.0) * d0 + (-6.0 * t2 + 6.0 * t) * y1 + (3.0 * t2 - 2.0 * t) * d1;
        let v2 = (12.0 * t - 6.0) * y0 + (6.0 * t - 4.0) * d0 + (-12.0 * t + 6.0) * y1 + (6.0 * t - 2.0) * d1;
        (v, v1 / h, v2 / (h * h))
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval3(x).0
    }
}

fn end_slope(h0: f64, h1: f64, del0: f64, del1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if d.signum() != del0.signum() {
        0.0
    } else if del0.signum() != del1.signum() && d.abs() > 3.0 * del0.abs() {
        3.0 * del0
    } else {
        d
    }
}
