//! Concrete analytic charts.

use nalgebra::{Vector2, Vector4};
use rand::Rng;

use super::{ChartedMetric, Mat, Mat3, SymTensorField, Vec3, Vect};

/// Euclidean metric in Cartesian coordinates.
#[derive(Clone, Copy, Debug, Default)]
pub struct Flat<const N: usize>;

impl<const N: usize> ChartedMetric<N> for Flat<N> {
    fn components(&self, _p: &Vect<N>) -> Mat<N> {
        Mat::<N>::identity()
    }
    fn partials(&self, _p: &Vect<N>) -> [Mat<N>; N] {
        [Mat::<N>::zeros(); N]
    }
    fn second_partials(&self, _p: &Vect<N>) -> Option<[[Mat<N>; N]; N]> {
        Some([[Mat::<N>::zeros(); N]; N])
    }
}

/// Minkowski space in `(t, x, y, z)`, signature (−,+,+,+).
#[derive(Clone, Copy, Debug, Default)]
pub struct Minkowski;

impl ChartedMetric<4> for Minkowski {
    fn components(&self, _p: &Vector4<f64>) -> Mat<4> {
        Mat::<4>::from_diagonal(&Vector4::new(-1.0, 1.0, 1.0, 1.0))
    }
    fn partials(&self, _p: &Vector4<f64>) -> [Mat<4>; 4] {
        [Mat::<4>::zeros(); 4]
    }
    fn second_partials(&self, _p: &Vector4<f64>) -> Option<[[Mat<4>; 4]; 4]> {
        Some([[Mat::<4>::zeros(); 4]; 4])
    }
}

/// Round 2-sphere of the given radius in `(θ, φ)`.
#[derive(Clone, Copy, Debug)]
pub struct RoundSphere {
    pub radius: f64,
}

impl ChartedMetric<2> for RoundSphere {
    fn components(&self, p: &Vector2<f64>) -> Mat<2> {
        let a2 = self.radius * self.radius;
        let s = p[0].sin();
        Mat::<2>::new(a2, 0.0, 0.0, a2 * s * s)
    }
    fn partials(&self, p: &Vector2<f64>) -> [Mat<2>; 2] {
        let a2 = self.radius * self.radius;
        let s2 = (2.0 * p[0]).sin();
        [Mat::<2>::new(0.0, 0.0, 0.0, a2 * s2), Mat::<2>::zeros()]
    }
    fn scale(&self) -> f64 {
        self.radius
    }
    fn contains(&self, p: &Vector2<f64>) -> bool {
        p[0] > 0.0 && p[0] < std::f64::consts::PI
    }
}

/// Flat space in spherical coordinates `(r, θ, φ)`.
#[derive(Clone, Copy, Debug, Default)]
pub struct FlatSpherical;

impl ChartedMetric<3> for FlatSpherical {
    fn components(&self, p: &Vec3) -> Mat3 {
        SchwarzschildSpatial::new(0.0).components(p)
    }
    fn partials(&self, p: &Vec3) -> [Mat3; 3] {
        SchwarzschildSpatial::new(0.0).partials(p)
    }
    fn second_partials(&self, p: &Vec3) -> Option<[[Mat3; 3]; 3]> {
        SchwarzschildSpatial::new(0.0).second_partials(p)
    }
    fn contains(&self, p: &Vec3) -> bool {
        p[0] > 0.0 && p[1] > 0.0 && p[1] < std::f64::consts::PI
    }
}

/// The `t = const` slice of Schwarzschild in static coordinates `(r, θ, φ)`:
/// `g = φ⁻² dr² + r² g_{S²}` with `φ² = 1 − 2m/r`.
#[derive(Clone, Copy, Debug)]
pub struct SchwarzschildSpatial {
    pub mass: f64,
}

impl SchwarzschildSpatial {
    pub fn new(mass: f64) -> Self {
        Self { mass }
    }
}

impl ChartedMetric<3> for SchwarzschildSpatial {
    fn components(&self, p: &Vec3) -> Mat3 {
        let (r, th) = (p[0], p[1]);
        let s = th.sin();
        Mat3::from_diagonal(&Vec3::new(r / (r - 2.0 * self.mass), r * r, r * r * s * s))
    }
    fn partials(&self, p: &Vec3) -> [Mat3; 3] {
        let (r, th) = (p[0], p[1]);
        let m = self.mass;
        let s = th.sin();
        let d_r = Mat3::from_diagonal(&Vec3::new(
            -2.0 * m / (r - 2.0 * m).powi(2),
            2.0 * r,
            2.0 * r * s * s,
        ));
        let d_th = Mat3::from_diagonal(&Vec3::new(0.0, 0.0, r * r * (2.0 * th).sin()));
        [d_r, d_th, Mat3::zeros()]
    }
    fn second_partials(&self, p: &Vec3) -> Option<[[Mat3; 3]; 3]> {
        let (r, th) = (p[0], p[1]);
        let m = self.mass;
        let s = th.sin();
        let rr = Mat3::from_diagonal(&Vec3::new(
            4.0 * m / (r - 2.0 * m).powi(3),
            2.0,
            2.0 * s * s,
        ));
        let rt = Mat3::from_diagonal(&Vec3::new(0.0, 0.0, 2.0 * r * (2.0 * th).sin()));
        let tt = Mat3::from_diagonal(&Vec3::new(0.0, 0.0, 2.0 * r * r * (2.0 * th).cos()));
        let z = Mat3::zeros();
        Some([[rr, rt, z], [rt, tt, z], [z, z, z]])
    }
    fn scale(&self) -> f64 {
        if self.mass > 0.0 {
            self.mass
        } else {
            1.0
        }
    }
    fn contains(&self, p: &Vec3) -> bool {
        p[0] > 2.0 * self.mass && p[0] > 0.0 && p[1] > 0.0 && p[1] < std::f64::consts::PI
    }
}

/// Schwarzschild spacetime in static coordinates `(t, r, θ, φ)`.
#[derive(Clone, Copy, Debug)]
pub struct SchwarzschildStatic {
    pub mass: f64,
}

impl SchwarzschildStatic {
    pub fn new(mass: f64) -> Self {
        Self { mass }
    }
    pub fn phi2(&self, r: f64) -> f64 {
        1.0 - 2.0 * self.mass / r
    }
}

impl ChartedMetric<4> for SchwarzschildStatic {
    fn components(&self, p: &Vector4<f64>) -> Mat<4> {
        let (r, th) = (p[1], p[2]);
        let f = self.phi2(r);
        let s = th.sin();
        Mat::<4>::from_diagonal(&Vector4::new(-f, 1.0 / f, r * r, r * r * s * s))
    }
    fn partials(&self, p: &Vector4<f64>) -> [Mat<4>; 4] {
        let (r, th) = (p[1], p[2]);
        let m = self.mass;
        let f = self.phi2(r);
        let df = 2.0 * m / (r * r);
        let s = th.sin();
        let d_r =
            Mat::<4>::from_diagonal(&Vector4::new(-df, -df / (f * f), 2.0 * r, 2.0 * r * s * s));
        let d_th = Mat::<4>::from_diagonal(&Vector4::new(0.0, 0.0, 0.0, r * r * (2.0 * th).sin()));
        [Mat::<4>::zeros(), d_r, d_th, Mat::<4>::zeros()]
    }
    fn scale(&self) -> f64 {
        if self.mass > 0.0 {
            self.mass
        } else {
            1.0
        }
    }
    fn contains(&self, p: &Vector4<f64>) -> bool {
        p[1] > 2.0 * self.mass && p[1] > 0.0 && p[2] > 0.0 && p[2] < std::f64::consts::PI
    }
}

/// One trigonometric mode `A sin(b·x + c)` of a symmetric tensor.
#[derive(Clone, Debug)]
pub struct TensorMode<const N: usize> {
    pub amplitude: Mat<N>,
    pub wave: Vect<N>,
    pub phase: f64,
}

/// `base + Σ A_n sin(b_n·x + c_n)` with exact derivatives of all orders.
/// Serves both as a smooth random metric and as a random `k`.
#[derive(Clone, Debug)]
pub struct TrigTensor<const N: usize> {
    pub base: Mat<N>,
    pub modes: Vec<TensorMode<N>>,
}

impl<const N: usize> TrigTensor<N> {
    /// Random symmetric perturbation with modes of Frobenius size ≤ `amp`.
    pub fn random<R: Rng>(
        rng: &mut R,
        base: Mat<N>,
        modes: usize,
        amp: f64,
        max_wave: f64,
    ) -> Self {
        let modes = (0..modes)
            .map(|_| {
                let raw = Mat::<N>::from_fn(|_, _| rng.gen_range(-1.0..1.0));
                let sym = 0.5 * (raw + raw.transpose());
                let amplitude = sym * (amp / sym.norm().max(1e-12));
                let wave = Vect::<N>::from_fn(|_, _| rng.gen_range(-max_wave..max_wave));
                TensorMode {
                    amplitude,
                    wave,
                    phase: rng.gen_range(0.0..std::f64::consts::TAU),
                }
            })
            .collect();
        Self { base, modes }
    }

    pub fn eval(&self, p: &Vect<N>) -> Mat<N> {
        let mut out = self.base;
        for m in &self.modes {
            out += m.amplitude * (m.wave.dot(p) + m.phase).sin();
        }
        out
    }

    pub fn eval_partials(&self, p: &Vect<N>) -> [Mat<N>; N] {
        let mut out = [Mat::<N>::zeros(); N];
        for m in &self.modes {
            let c = (m.wave.dot(p) + m.phase).cos();
            for (k, slot) in out.iter_mut().enumerate() {
                *slot += m.amplitude * (m.wave[k] * c);
            }
        }
        out
    }

    pub fn eval_second_partials(&self, p: &Vect<N>) -> [[Mat<N>; N]; N] {
        let mut out = [[Mat::<N>::zeros(); N]; N];
        for m in &self.modes {
            let s = (m.wave.dot(p) + m.phase).sin();
            for (k, row) in out.iter_mut().enumerate() {
                for (l, slot) in row.iter_mut().enumerate() {
                    *slot -= m.amplitude * (m.wave[k] * m.wave[l] * s);
                }
            }
        }
        out
    }
}

impl<const N: usize> ChartedMetric<N> for TrigTensor<N> {
    fn components(&self, p: &Vect<N>) -> Mat<N> {
        self.eval(p)
    }
    fn partials(&self, p: &Vect<N>) -> [Mat<N>; N] {
        self.eval_partials(p)
    }
    fn second_partials(&self, p: &Vect<N>) -> Option<[[Mat<N>; N]; N]> {
        Some(self.eval_second_partials(p))
    }
}

impl<const N: usize> SymTensorField<N> for TrigTensor<N> {
    fn value(&self, p: &Vect<N>) -> Mat<N> {
        self.eval(p)
    }
    fn partials(&self, p: &Vect<N>) -> [Mat<N>; N] {
        self.eval_partials(p)
    }
}

/// Views a metric as a symmetric tensor field.
pub struct MetricAsTensor<M>(pub M);

impl<const N: usize, M: ChartedMetric<N>> SymTensorField<N> for MetricAsTensor<M> {
    fn value(&self, p: &Vect<N>) -> Mat<N> {
        self.0.components(p)
    }
    fn partials(&self, p: &Vect<N>) -> [Mat<N>; N] {
        self.0.partials(p)
    }
}

/// A constant multiple of a metric, e.g. `k = ξ g`.
pub struct ScaledMetric<M> {
    pub metric: M,
    pub factor: f64,
}

impl<const N: usize, M: ChartedMetric<N>> SymTensorField<N> for ScaledMetric<M> {
    fn value(&self, p: &Vect<N>) -> Mat<N> {
        self.metric.components(p) * self.factor
    }
    fn partials(&self, p: &Vect<N>) -> [Mat<N>; N] {
        self.metric.partials(p).map(|m| m * self.factor)
    }
}

/// Identically zero symmetric tensor.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroTensor;

impl<const N: usize> SymTensorField<N> for ZeroTensor {
    fn value(&self, _p: &Vect<N>) -> Mat<N> {
        Mat::<N>::zeros()
    }
    fn partials(&self, _p: &Vect<N>) -> [Mat<N>; N] {
        [Mat::<N>::zeros(); N]
    }
}

/// Map from spherical `(r, θ, φ)` to Cartesian coordinates with its
/// Jacobian `J[(i, a)] = ∂x^i/∂y^a` and second derivatives `∂_c J`.
pub fn spherical_to_cartesian(y: &Vec3) -> (Vec3, Mat3, [Mat3; 3]) {
    let (r, th, ph) = (y[0], y[1], y[2]);
    let (st, ct, sp, cp) = (th.sin(), th.cos(), ph.sin(), ph.cos());
    let x = Vec3::new(r * st * cp, r * st * sp, r * ct);
    #[rustfmt::skip]
    let jac = Mat3::new(
        st * cp, r * ct * cp, -r * st * sp,
        st * sp, r * ct * sp,  r * st * cp,
        ct,      -r * st,      0.0,
    );
    #[rustfmt::skip]
    let d_r = Mat3::new(
        0.0, ct * cp, -st * sp,
        0.0, ct * sp,  st * cp,
        0.0, -st,      0.0,
    );
    #[rustfmt::skip]
    let d_th = Mat3::new(
        ct * cp, -r * st * cp, -r * ct * sp,
        ct * sp, -r * st * sp,  r * ct * cp,
        -st,     -r * ct,       0.0,
    );
    #[rustfmt::skip]
    let d_ph = Mat3::new(
        -st * sp, -r * ct * sp, -r * st * cp,
         st * cp,  r * ct * cp, -r * st * sp,
         0.0,      0.0,          0.0,
    );
    (x, jac, [d_r, d_th, d_ph])
}

/// A Cartesian-chart metric re-expressed in spherical coordinates.
pub struct SphericalPullback<M> {
    pub inner: M,
}

impl<M: ChartedMetric<3>> ChartedMetric<3> for SphericalPullback<M> {
    fn components(&self, y: &Vec3) -> Mat3 {
        let (x, j, _) = spherical_to_cartesian(y);
        j.transpose() * self.inner.components(&x) * j
    }
    fn partials(&self, y: &Vec3) -> [Mat3; 3] {
        let (x, j, dj) = spherical_to_cartesian(y);
        let g = self.inner.components(&x);
        let dg = self.inner.partials(&x);
        std::array::from_fn(|c| {
            let mut chain = Mat3::zeros();
            for k in 0..3 {
                chain += dg[k] * j[(k, c)];
            }
            dj[c].transpose() * g * j + j.transpose() * g * dj[c] + j.transpose() * chain * j
        })
    }
    fn scale(&self) -> f64 {
        self.inner.scale()
    }
    fn contains(&self, y: &Vec3) -> bool {
        y[0] > 0.0
            && y[1] > 0.0
            && y[1] < std::f64::consts::PI
            && self.inner.contains(&spherical_to_cartesian(y).0)
    }
}

/// A Cartesian symmetric tensor field re-expressed in spherical coordinates.
pub struct SphericalPullbackTensor<T> {
    pub inner: T,
}

impl<T: SymTensorField<3>> SymTensorField<3> for SphericalPullbackTensor<T> {
    fn value(&self, y: &Vec3) -> Mat3 {
        let (x, j, _) = spherical_to_cartesian(y);
        j.transpose() * self.inner.value(&x) * j
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::oracle::{fd_partials, Stack};
    use rand::SeedableRng;

    fn max_dev<const N: usize>(a: &[Mat<N>; N], b: &[Mat<N>; N]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).amax())
            .fold(0.0, f64::max)
    }

    #[test]
    fn analytic_partials_match_oracle() {
        let y = Vec3::new(4.0, 1.1, 0.7);
        let s = SchwarzschildSpatial::new(1.0);
        let fd = fd_partials(|q| s.components(q), &y, 1e-5);
        assert!(max_dev(&s.partials(&y), &fd) < 1e-8);
        let d2 = s.second_partials(&y).unwrap();
        let fd2 = fd_partials(|q| Stack(s.partials(q)), &y, 1e-5);
        for l in 0..3 {
            assert!(max_dev(&d2[l], &fd2[l].0) < 1e-7);
        }

        let st = SchwarzschildStatic::new(1.0);
        let p = Vector4::new(0.2, 4.0, 1.1, 0.7);
        let fd = fd_partials(|q| st.components(q), &p, 1e-5);
        assert!(max_dev(&st.partials(&p), &fd) < 1e-8);

        let pb = SphericalPullback { inner: Flat::<3> };
        let fd = fd_partials(|q| pb.components(q), &y, 1e-5);
        assert!(max_dev(&pb.partials(&y), &fd) < 1e-8);
        assert!((pb.components(&y) - FlatSpherical.components(&y)).amax() < 1e-12);
    }

    #[test]
    fn sphere_partials_richardson() {
        // residual of dg against the oracle drops by ~4 when h halves
        let s = RoundSphere { radius: 1.0 };
        let p = Vector2::new(0.8, 0.1);
        let exact = s.partials(&p);
        let e1 = max_dev(&exact, &fd_partials(|q| s.components(q), &p, 1e-2));
        let e2 = max_dev(&exact, &fd_partials(|q| s.components(q), &p, 5e-3));
        let ratio = e1 / e2;
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
        assert!(max_dev(&exact, &fd_partials(|q| s.components(q), &p, 1e-5)) < 1e-6);
    }

    #[test]
    fn random_trig_metric_partials() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let t = TrigTensor::<3>::random(&mut rng, Mat3::identity(), 3, 0.1, 1.0);
        let y = Vec3::new(0.3, -0.2, 1.0);
        let fd = fd_partials(|q| t.eval(q), &y, 1e-5);
        assert!(max_dev(&t.eval_partials(&y), &fd) < 1e-9);
    }
}
