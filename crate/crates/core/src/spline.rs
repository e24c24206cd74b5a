//! Not-a-knot cubic spline through sampled profiles, with first and second
//! derivatives.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 4 || y.len() != n {
            return Err(Error::InvalidInput(format!(
                "spline needs ≥ 4 matching samples, got {} and {}",
                n,
                y.len()
            )));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) || x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "spline knots must be finite and strictly increasing".into(),
            ));
        }
        let h = |i: usize| x[i + 1] - x[i];
        // interior rows a m_{i−1} + b m_i + c m_{i+1} = rhs; the end values are
        // eliminated with continuity of the third derivative at x₁ and x_{n−2}
        let (first, last) = (h(0) / h(1), h(n - 2) / h(n - 3));
        let mut cp = vec![0.0; n];
        let mut dp = vec![0.0; n];
        for i in 1..n - 1 {
            let (h0, h1) = (h(i - 1), h(i));
            let (mut a, mut b, mut c) = (h0 / 6.0, (h0 + h1) / 3.0, h1 / 6.0);
            let rhs = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
            if i == 1 {
                b += a * (1.0 + first);
                c -= a * first;
                a = 0.0;
            }
            if i == n - 2 {
                b += c * (1.0 + last);
                a -= c * last;
                c = 0.0;
            }
            let pivot = b - a * cp[i - 1];
            if pivot.abs() < 1e-300 {
                return Err(Error::SingularSystem { row: i });
            }
            cp[i] = c / pivot;
            dp[i] = (rhs - a * dp[i - 1]) / pivot;
        }
        let mut m = vec![0.0; n];
        m[n - 2] = dp[n - 2];
        for i in (1..n - 2).rev() {
            m[i] = dp[i] - cp[i] * m[i + 1];
        }
        m[0] = m[1] + first * (m[1] - m[2]);
        m[n - 1] = m[n - 2] + last * (m[n - 2] - m[n - 3]);
        Ok(Self { x, y, m })
    }

    pub fn range(&self) -> [f64; 2] {
        [self.x[0], self.x[self.x.len() - 1]]
    }

    /// `(f, f′, f″)` at `t`, extrapolating linearly in the end cells.
    pub fn eval(&self, t: f64) -> [f64; 3] {
        let n = self.x.len();
        let i = match self.x.partition_point(|&k| k <= t) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let (x0, x1) = (self.x[i], self.x[i + 1]);
        let h = x1 - x0;
        let (a, b) = ((x1 - t) / h, (t - x0) / h);
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let (y0, y1) = (self.y[i], self.y[i + 1]);
        let f = a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let df =
            (y1 - y0) / h - (3.0 * a * a - 1.0) / 6.0 * h * m0 + (3.0 * b * b - 1.0) / 6.0 * h * m1;
        let d2f = a * m0 + b * m1;
        [f, df, d2f]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_knots_and_is_fourth_order() {
        let err = |n: usize| {
            let x: Vec<f64> = (0..n).map(|i| 1.0 + i as f64 / (n - 1) as f64).collect();
            let y: Vec<f64> = x.iter().map(|t| t.sin()).collect();
            let s = CubicSpline::new(x.clone(), y.clone()).unwrap();
            assert!(x
                .iter()
                .zip(&y)
                .all(|(t, v)| (s.eval(*t)[0] - v).abs() < 1e-14));
            (0..200)
                .map(|k| 1.0 + k as f64 / 199.0)
                .map(|t| (s.eval(t)[0] - t.sin()).abs())
                .fold(0.0, f64::max)
        };
        let order = (err(41) / err(81)).log2();
        assert!(order > 3.5, "{order}");
    }

    #[test]
    fn reproduces_cubics_exactly() {
        let x = vec![0.0, 0.5, 1.5, 2.0, 2.2];
        let s = CubicSpline::new(x.clone(), x.iter().map(|t| t * t * t - t).collect()).unwrap();
        let [f, d1, d2] = s.eval(0.7);
        assert!((f - (0.343 - 0.7)).abs() < 1e-13 && (d1 - (3.0 * 0.49 - 1.0)).abs() < 1e-13);
        assert!((d2 - 4.2).abs() < 1e-12);
        assert!(CubicSpline::new(vec![0.0, 0.0, 1.0, 2.0], vec![1.0; 4]).is_err());
    }
}
