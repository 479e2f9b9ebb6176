use crate::error::{Error, Result};

/// Clamped cubic spline through tabulated samples, extended linearly outside the table.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    xs: Vec<f64>,
    ys: Vec<f64>,
    second: Vec<f64>,
    slope_left: f64,
    slope_right: f64,
}

impl Table {
    /// End slopes are taken from the outermost sample pairs unless given.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, end_slopes: Option<(f64, f64)>) -> Result<Self> {
        let n = xs.len();
        if n < 3 || ys.len() != n {
            return Err(Error::InvalidModel("a table needs at least three (x, y) samples".into()));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) || xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("table abscissae must be finite and strictly increasing".into()));
        }
        let (slope_left, slope_right) = end_slopes.unwrap_or((
            (ys[1] - ys[0]) / (xs[1] - xs[0]),
            (ys[n - 1] - ys[n - 2]) / (xs[n - 1] - xs[n - 2]),
        ));
        // Tridiagonal system for the second derivatives with clamped first derivatives.
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        let mut lower = vec![0.0; n];
        diag[0] = 2.0 * h[0];
        upper[0] = h[0];
        rhs[0] = 6.0 * ((ys[1] - ys[0]) / h[0] - slope_left);
        for i in 1..n - 1 {
            lower[i] = h[i - 1];
            diag[i] = 2.0 * (h[i - 1] + h[i]);
            upper[i] = h[i];
            rhs[i] = 6.0 * ((ys[i + 1] - ys[i]) / h[i] - (ys[i] - ys[i - 1]) / h[i - 1]);
        }
        lower[n - 1] = h[n - 2];
        diag[n - 1] = 2.0 * h[n - 2];
        rhs[n - 1] = 6.0 * (slope_right - (ys[n - 1] - ys[n - 2]) / h[n - 2]);
        for i in 1..n {
            let w = lower[i] / diag[i - 1];
            diag[i] -= w * upper[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        let mut second = vec![0.0; n];
        second[n - 1] = rhs[n - 1] / diag[n - 1];
        for i in (0..n - 1).rev() {
            second[i] = (rhs[i] - upper[i] * second[i + 1]) / diag[i];
        }
        Ok(Table { xs, ys, second, slope_left, slope_right })
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    fn locate(&self, x: f64) -> usize {
        self.xs.partition_point(|&v| v <= x).clamp(1, self.xs.len() - 1) - 1
    }

    pub fn value(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x < self.xs[0] {
            return self.ys[0] + self.slope_left * (x - self.xs[0]);
        }
        if x > self.xs[n - 1] {
            return self.ys[n - 1] + self.slope_right * (x - self.xs[n - 1]);
        }
        let i = self.locate(x);
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        a * self.ys[i]
            + b * self.ys[i + 1]
            + ((a * a * a - a) * self.second[i] + (b * b * b - b) * self.second[i + 1]) * h * h / 6.0
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x < self.xs[0] {
            return self.slope_left;
        }
        if x > self.xs[n - 1] {
            return self.slope_right;
        }
        let i = self.locate(x);
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        (self.ys[i + 1] - self.ys[i]) / h
            + ((1.0 - 3.0 * a * a) * self.second[i] + (3.0 * b * b - 1.0) * self.second[i + 1]) * h / 6.0
    }

    /// Whether the samples have non-negative second differences.
    pub fn is_convex(&self) -> bool {
        self.xs.windows(3).zip(self.ys.windows(3)).all(|(x, y)| {
            (y[2] - y[1]) / (x[2] - x[1]) >= (y[1] - y[0]) / (x[1] - x[0]) - 1e-12
        })
    }
}
