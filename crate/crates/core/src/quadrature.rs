//! Gauss-Legendre rules and 1D quadrature helpers.

use std::f64::consts::PI;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss-Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    x.iter()
        .zip(&w)
        .map(|(xi, wi)| (mid + half * xi, half * wi))
        .collect()
}

/// Cumulative integral of nodal samples on a uniform grid, fourth order:
/// composite Simpson at even nodes, plus a one-interval correction at odd
/// nodes using the three trailing samples.
pub fn cumulative_simpson(values: &[f64], dx: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    if n == 2 {
        out[1] = 0.5 * dx * (values[0] + values[1]);
        return out;
    }
    // first interval from nodes 0,1,2
    out[1] = dx / 12.0 * (5.0 * values[0] + 8.0 * values[1] - values[2]);
    for i in 2..n {
        if i % 2 == 0 {
            out[i] = out[i - 2] + dx / 3.0 * (values[i - 2] + 4.0 * values[i - 1] + values[i]);
        } else {
            out[i] =
                out[i - 1] + dx / 12.0 * (-values[i - 2] + 8.0 * values[i - 1] + 5.0 * values[i]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        for n in [2, 5, 8, 13] {
            let rule = gauss_legendre_on(n, 0.0, 2.0);
            let deg = 2 * n - 1;
            let sum: f64 = rule.iter().map(|(x, w)| w * x.powi(deg as i32)).sum();
            let exact = 2f64.powi(deg as i32 + 1) / (deg as f64 + 1.0);
            assert!((sum - exact).abs() < 1e-11 * exact, "n={n}");
        }
    }

    #[test]
    fn weights_sum_to_interval() {
        let (_, w) = gauss_legendre(31);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
        assert!(w.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn cumulative_simpson_is_fourth_order() {
        let err = |n: usize| {
            let dx = 1.0 / (n - 1) as f64;
            let v: Vec<f64> = (0..n).map(|i| (i as f64 * dx).exp()).collect();
            let c = cumulative_simpson(&v, dx);
            (0..n)
                .map(|i| (c[i] - ((i as f64 * dx).exp() - 1.0)).abs())
                .fold(0.0, f64::max)
        };
        let order = (err(41) / err(81)).log2();
        assert!(order > 3.7, "order {order}");
    }
}
