//! Analytic scalar and vector fields.

use std::sync::Arc;

use rand::Rng;

use super::{Mat, Mat3, ScalarField, Vec3, Vect, VectorField};

/// A coordinate function `x^i`.
#[derive(Clone, Copy, Debug)]
pub struct Coordinate(pub usize);

impl<const N: usize> ScalarField<N> for Coordinate {
    fn value(&self, p: &Vect<N>) -> f64 {
        p[self.0]
    }
    fn grad(&self, _p: &Vect<N>) -> Vect<N> {
        let mut g = Vect::<N>::zeros();
        g[self.0] = 1.0;
        g
    }
    fn hess(&self, _p: &Vect<N>) -> Mat<N> {
        Mat::<N>::zeros()
    }
}

/// `a·x + b`.
#[derive(Clone, Copy, Debug)]
pub struct Linear<const N: usize> {
    pub slope: Vect<N>,
    pub offset: f64,
}

impl<const N: usize> Linear<N> {
    pub fn new(slope: Vect<N>, offset: f64) -> Self {
        Self { slope, offset }
    }
}

impl<const N: usize> ScalarField<N> for Linear<N> {
    fn value(&self, p: &Vect<N>) -> f64 {
        self.slope.dot(p) + self.offset
    }
    fn grad(&self, _p: &Vect<N>) -> Vect<N> {
        self.slope
    }
    fn hess(&self, _p: &Vect<N>) -> Mat<N> {
        Mat::<N>::zeros()
    }
}

/// `xᵀ Q x` for symmetric `Q`.
#[derive(Clone, Copy, Debug)]
pub struct QuadraticForm<const N: usize> {
    pub q: Mat<N>,
}

impl<const N: usize> QuadraticForm<N> {
    pub fn new(q: Mat<N>) -> Self {
        Self {
            q: 0.5 * (q + q.transpose()),
        }
    }
}

impl<const N: usize> ScalarField<N> for QuadraticForm<N> {
    fn value(&self, p: &Vect<N>) -> f64 {
        p.dot(&(self.q * p))
    }
    fn grad(&self, p: &Vect<N>) -> Vect<N> {
        2.0 * self.q * p
    }
    fn hess(&self, _p: &Vect<N>) -> Mat<N> {
        2.0 * self.q
    }
}

type Profile = Arc<dyn Fn(f64) -> (f64, f64, f64) + Send + Sync>;

/// `F(|x|)` on a Cartesian chart; the profile returns `(F, F′, F″)`.
#[derive(Clone)]
pub struct RadialScalar {
    profile: Profile,
}

impl RadialScalar {
    pub fn new(profile: impl Fn(f64) -> (f64, f64, f64) + Send + Sync + 'static) -> Self {
        Self {
            profile: Arc::new(profile),
        }
    }
}

impl ScalarField<3> for RadialScalar {
    fn value(&self, p: &Vec3) -> f64 {
        (self.profile)(p.norm()).0
    }
    fn grad(&self, p: &Vec3) -> Vec3 {
        let r = p.norm();
        (self.profile)(r).1 * p / r
    }
    fn hess(&self, p: &Vec3) -> Mat3 {
        let r = p.norm();
        let (_, d1, d2) = (self.profile)(r);
        let n = p / r;
        let nn = n * n.transpose();
        nn * d2 + (Mat3::identity() - nn) * (d1 / r)
    }
}

/// Euclidean radius `|x|`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Radius;

impl ScalarField<3> for Radius {
    fn value(&self, p: &Vec3) -> f64 {
        p.norm()
    }
    fn grad(&self, p: &Vec3) -> Vec3 {
        p / p.norm()
    }
    fn hess(&self, p: &Vec3) -> Mat3 {
        let r = p.norm();
        let n = p / r;
        (Mat3::identity() - n * n.transpose()) / r
    }
}

/// `F(x^axis)`: a function of a single coordinate, e.g. of `r` in a
/// spherical chart.
#[derive(Clone)]
pub struct CoordinateFunction {
    pub axis: usize,
    profile: Profile,
}

impl CoordinateFunction {
    pub fn new(
        axis: usize,
        profile: impl Fn(f64) -> (f64, f64, f64) + Send + Sync + 'static,
    ) -> Self {
        Self {
            axis,
            profile: Arc::new(profile),
        }
    }
}

impl<const N: usize> ScalarField<N> for CoordinateFunction {
    fn value(&self, p: &Vect<N>) -> f64 {
        (self.profile)(p[self.axis]).0
    }
    fn grad(&self, p: &Vect<N>) -> Vect<N> {
        let mut g = Vect::<N>::zeros();
        g[self.axis] = (self.profile)(p[self.axis]).1;
        g
    }
    fn hess(&self, p: &Vect<N>) -> Mat<N> {
        let mut h = Mat::<N>::zeros();
        h[(self.axis, self.axis)] = (self.profile)(p[self.axis]).2;
        h
    }
}

/// `c + a·x + Σ α_n sin(b_n·x + φ_n)`.
#[derive(Clone, Debug)]
pub struct TrigScalar<const N: usize> {
    pub constant: f64,
    pub slope: Vect<N>,
    pub modes: Vec<(f64, Vect<N>, f64)>,
}

impl<const N: usize> TrigScalar<N> {
    pub fn random<R: Rng>(
        rng: &mut R,
        constant: f64,
        slope: Vect<N>,
        modes: usize,
        amp: f64,
        max_wave: f64,
    ) -> Self {
        let modes = (0..modes)
            .map(|_| {
                (
                    rng.gen_range(-amp..amp),
                    Vect::<N>::from_fn(|_, _| rng.gen_range(-max_wave..max_wave)),
                    rng.gen_range(0.0..std::f64::consts::TAU),
                )
            })
            .collect();
        Self {
            constant,
            slope,
            modes,
        }
    }
}

impl<const N: usize> ScalarField<N> for TrigScalar<N> {
    fn value(&self, p: &Vect<N>) -> f64 {
        self.constant
            + self.slope.dot(p)
            + self
                .modes
                .iter()
                .map(|(a, b, c)| a * (b.dot(p) + c).sin())
                .sum::<f64>()
    }
    fn grad(&self, p: &Vect<N>) -> Vect<N> {
        let mut g = self.slope;
        for (a, b, c) in &self.modes {
            g += b * (a * (b.dot(p) + c).cos());
        }
        g
    }
    fn hess(&self, p: &Vect<N>) -> Mat<N> {
        let mut h = Mat::<N>::zeros();
        for (a, b, c) in &self.modes {
            h -= b * b.transpose() * (a * (b.dot(p) + c).sin());
        }
        h
    }
}

/// Linear combination `c + Σ w_i f_i`.
pub struct Combination<const N: usize> {
    pub constant: f64,
    pub terms: Vec<(f64, Arc<dyn ScalarField<N>>)>,
}

impl<const N: usize> Combination<N> {
    pub fn new(constant: f64) -> Self {
        Self {
            constant,
            terms: Vec::new(),
        }
    }
    pub fn with(mut self, weight: f64, f: impl ScalarField<N> + 'static) -> Self {
        self.terms.push((weight, Arc::new(f)));
        self
    }
    pub fn with_shared(mut self, weight: f64, f: Arc<dyn ScalarField<N>>) -> Self {
        self.terms.push((weight, f));
        self
    }
}

impl<const N: usize> ScalarField<N> for Combination<N> {
    fn value(&self, p: &Vect<N>) -> f64 {
        self.constant + self.terms.iter().map(|(w, f)| w * f.value(p)).sum::<f64>()
    }
    fn grad(&self, p: &Vect<N>) -> Vect<N> {
        self.terms
            .iter()
            .fold(Vect::<N>::zeros(), |acc, (w, f)| acc + f.grad(p) * *w)
    }
    fn hess(&self, p: &Vect<N>) -> Mat<N> {
        self.terms
            .iter()
            .fold(Mat::<N>::zeros(), |acc, (w, f)| acc + f.hess(p) * *w)
    }
}

/// Scalar field assembled from three closures.
pub struct FnScalar<const N: usize> {
    pub value: Box<dyn Fn(&Vect<N>) -> f64 + Send + Sync>,
    pub grad: Box<dyn Fn(&Vect<N>) -> Vect<N> + Send + Sync>,
    pub hess: Box<dyn Fn(&Vect<N>) -> Mat<N> + Send + Sync>,
}

impl<const N: usize> ScalarField<N> for FnScalar<N> {
    fn value(&self, p: &Vect<N>) -> f64 {
        (self.value)(p)
    }
    fn grad(&self, p: &Vect<N>) -> Vect<N> {
        (self.grad)(p)
    }
    fn hess(&self, p: &Vect<N>) -> Mat<N> {
        (self.hess)(p)
    }
}

/// `E = q ∇(1/|x|)` on flat Cartesian space; divergence free away from 0.
#[derive(Clone, Copy, Debug)]
pub struct Coulomb {
    pub charge: f64,
}

impl VectorField<3> for Coulomb {
    fn value(&self, p: &Vec3) -> Vec3 {
        let r = p.norm();
        -self.charge * p / (r * r * r)
    }
    fn partials(&self, p: &Vec3) -> [Vec3; 3] {
        let r = p.norm();
        let r3 = r * r * r;
        let r5 = r3 * r * r;
        std::array::from_fn(|k| {
            Vec3::from_fn(|i, _| {
                let delta = if i == k { 1.0 } else { 0.0 };
                -self.charge * (delta / r3 - 3.0 * p[i] * p[k] / r5)
            })
        })
    }
}

/// The zero vector field.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroVector;

impl<const N: usize> VectorField<N> for ZeroVector {
    fn value(&self, _p: &Vect<N>) -> Vect<N> {
        Vect::<N>::zeros()
    }
    fn partials(&self, _p: &Vect<N>) -> [Vect<N>; N] {
        [Vect::<N>::zeros(); N]
    }
}

/// Vector field from a closure, with oracle partials.
pub struct FnVector<const N: usize>(pub Box<dyn Fn(&Vect<N>) -> Vect<N> + Send + Sync>);

impl<const N: usize> VectorField<N> for FnVector<N> {
    fn value(&self, p: &Vect<N>) -> Vect<N> {
        (self.0)(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::oracle::{fd_gradient, fd_hessian, fd_partials};
    use rand::SeedableRng;

    fn check_scalar<F: ScalarField<3>>(f: &F, p: &Vec3) {
        let g = fd_gradient(|q| f.value(q), p, 1e-5);
        assert!((g - f.grad(p)).amax() < 1e-8, "grad");
        let h = fd_hessian(|q| f.value(q), p, 1e-4);
        assert!((h - f.hess(p)).amax() < 1e-5, "hess");
    }

    #[test]
    fn analytic_derivatives_agree_with_oracle() {
        let p = Vec3::new(0.7, -0.4, 1.2);
        check_scalar(&Radius, &p);
        check_scalar(
            &RadialScalar::new(|r| {
                (
                    5.0 - (1.0 / r).exp(),
                    (1.0 / r).exp() / (r * r),
                    -(1.0 / r).exp() * (2.0 * r + 1.0) / r.powi(4),
                )
            }),
            &p,
        );
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        check_scalar(
            &TrigScalar::<3>::random(&mut rng, 2.0, Vec3::new(1.0, 0.0, 0.2), 3, 0.2, 1.5),
            &p,
        );
        check_scalar(
            &Combination::new(1.0)
                .with(2.0, Radius)
                .with(-0.5, Coordinate(2)),
            &p,
        );
    }

    #[test]
    fn coulomb_partials() {
        let e = Coulomb { charge: 1.0 };
        let p = Vec3::new(1.0, 0.5, -0.3);
        let fd = fd_partials(|q| e.value(q), &p, 1e-5);
        let an = e.partials(&p);
        for k in 0..3 {
            assert!((fd[k] - an[k]).amax() < 1e-8);
        }
        let div: f64 = (0..3).map(|i| an[i][i]).sum();
        assert!(div.abs() < 1e-12);
    }
}
