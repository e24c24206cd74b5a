//! Central-difference derivative oracle.
//!
//! Everything here is second order in the step and independent of the
//! analytic derivative paths it is used to check.

use std::ops::{Add, Mul, Sub};

use super::{ChartedMetric, Vect};
use crate::error::{Error, Result};

/// Default relative step for oracle differentiation.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Central-difference partials `[∂_0 F, …, ∂_{N-1} F]` of an arbitrary
/// linear-space valued map.
pub fn fd_partials<T, F, const N: usize>(f: F, p: &Vect<N>, h: f64) -> [T; N]
where
    F: Fn(&Vect<N>) -> T,
    T: Sub<Output = T> + Mul<f64, Output = T>,
{
    std::array::from_fn(|k| {
        let mut plus = *p;
        let mut minus = *p;
        plus[k] += h;
        minus[k] -= h;
        (f(&plus) - f(&minus)) * (0.5 / h)
    })
}

/// Fallible variant of [`fd_partials`].
pub fn try_fd_partials<T, F, const N: usize>(f: F, p: &Vect<N>, h: f64) -> Result<[T; N]>
where
    F: Fn(&Vect<N>) -> Result<T>,
    T: Sub<Output = T> + Mul<f64, Output = T>,
{
    let mut out: [Option<T>; N] = std::array::from_fn(|_| None);
    for (k, slot) in out.iter_mut().enumerate() {
        let mut plus = *p;
        let mut minus = *p;
        plus[k] += h;
        minus[k] -= h;
        *slot = Some((f(&plus)? - f(&minus)?) * (0.5 / h));
    }
    Ok(out.map(|v| v.expect("filled above")))
}

/// Central-difference gradient of a scalar map.
pub fn fd_gradient<F, const N: usize>(f: F, p: &Vect<N>, h: f64) -> Vect<N>
where
    F: Fn(&Vect<N>) -> f64,
{
    Vect::<N>::from(fd_partials(f, p, h))
}

/// Second partials of a scalar map from the standard 4-point mixed stencil.
pub fn fd_hessian<F, const N: usize>(f: F, p: &Vect<N>, h: f64) -> super::Mat<N>
where
    F: Fn(&Vect<N>) -> f64,
{
    let mut out = super::Mat::<N>::zeros();
    let f0 = f(p);
    for i in 0..N {
        for j in i..N {
            let v = if i == j {
                let mut a = *p;
                let mut b = *p;
                a[i] += h;
                b[i] -= h;
                (f(&a) - 2.0 * f0 + f(&b)) / (h * h)
            } else {
                let shifted = |si: f64, sj: f64| {
                    let mut q = *p;
                    q[i] += si * h;
                    q[j] += sj * h;
                    f(&q)
                };
                (shifted(1.0, 1.0) - shifted(1.0, -1.0) - shifted(-1.0, 1.0) + shifted(-1.0, -1.0))
                    / (4.0 * h * h)
            };
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// Oracle partials that refuse to sample outside the chart: every stencil
/// point within `2h` of `p` along each axis must satisfy `metric.contains`.
pub fn fd_partials_in<M, T, F, const N: usize>(
    metric: &M,
    f: F,
    p: &Vect<N>,
    h: f64,
) -> Result<[T; N]>
where
    M: ChartedMetric<N> + ?Sized,
    F: Fn(&Vect<N>) -> T,
    T: Sub<Output = T> + Mul<f64, Output = T>,
{
    for k in 0..N {
        for s in [-2.0, 2.0] {
            let mut q = *p;
            q[k] += s * h;
            if !metric.contains(&q) {
                return Err(Error::DomainMargin { h });
            }
        }
    }
    Ok(fd_partials(f, p, h))
}

/// Observed convergence order between two error levels at steps `h1 > h2`.
pub fn observed_order(err_coarse: f64, err_fine: f64, h_coarse: f64, h_fine: f64) -> f64 {
    (err_coarse / err_fine).ln() / (h_coarse / h_fine).ln()
}

/// Wrapper making `[T; N]` usable with [`fd_partials`].
#[derive(Clone, Copy, Debug)]
pub struct Stack<T, const N: usize>(pub [T; N]);

impl<T: Copy + Sub<Output = T>, const N: usize> Sub for Stack<T, N> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Stack(std::array::from_fn(|i| self.0[i] - rhs.0[i]))
    }
}

impl<T: Copy + Mul<f64, Output = T>, const N: usize> Mul<f64> for Stack<T, N> {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        Stack(std::array::from_fn(|i| self.0[i] * rhs))
    }
}

impl<T: Copy + Add<Output = T>, const N: usize> Add for Stack<T, N> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Stack(std::array::from_fn(|i| self.0[i] + rhs.0[i]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector1;

    #[test]
    fn square_derivative() {
        let d = fd_gradient(|x: &Vector1<f64>| x[0] * x[0], &Vector1::new(1.0), 1e-4);
        assert!((d[0] - 2.0).abs() < 1e-7);
    }

    #[test]
    fn richardson_ratio_is_four() {
        // sin has nonzero third derivative, so the error is C h^2
        let f = |x: &Vector1<f64>| x[0].sin();
        let p = Vector1::new(0.7);
        let exact = 0.7f64.cos();
        let e1 = (fd_gradient(f, &p, 1e-2)[0] - exact).abs();
        let e2 = (fd_gradient(f, &p, 5e-3)[0] - exact).abs();
        let ratio = e1 / e2;
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }
}
