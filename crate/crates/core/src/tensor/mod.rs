//! Coordinate-chart tensor calculus.
//!
//! Metrics and fields are evaluated pointwise from analytic closed forms.
//! Index conventions: `dg[k]` is `∂_k g`, `gamma[k][(i, j)]` is `Γ^k_ij`,
//! gradients are returned as covectors (plain partials) unless stated.

pub mod charts;
pub mod fields;
pub mod oracle;

use nalgebra::{SMatrix, SVector};

use crate::error::{Error, Result};
use oracle::{fd_partials, Stack, DEFAULT_FD_STEP};

pub type Vect<const N: usize> = SVector<f64, N>;
pub type Mat<const N: usize> = SMatrix<f64, N, N>;
pub type Vec3 = Vect<3>;
pub type Mat3 = Mat<3>;

/// A coordinate chart carrying metric components and their exact first
/// partials. Second partials are optional; when absent they are obtained
/// by central differences of `partials`.
pub trait ChartedMetric<const N: usize>: Send + Sync {
    fn components(&self, p: &Vect<N>) -> Mat<N>;
    fn partials(&self, p: &Vect<N>) -> [Mat<N>; N];
    fn second_partials(&self, _p: &Vect<N>) -> Option<[[Mat<N>; N]; N]> {
        None
    }
    /// Characteristic length of the chart; scales oracle steps and floors.
    fn scale(&self) -> f64 {
        1.0
    }
    fn contains(&self, _p: &Vect<N>) -> bool {
        true
    }
}

impl<const N: usize, T: ChartedMetric<N> + ?Sized> ChartedMetric<N> for &T {
    fn components(&self, p: &Vect<N>) -> Mat<N> {
        (**self).components(p)
    }
    fn partials(&self, p: &Vect<N>) -> [Mat<N>; N] {
        (**self).partials(p)
    }
    fn second_partials(&self, p: &Vect<N>) -> Option<[[Mat<N>; N]; N]> {
        (**self).second_partials(p)
    }
    fn scale(&self) -> f64 {
        (**self).scale()
    }
    fn contains(&self, p: &Vect<N>) -> bool {
        (**self).contains(p)
    }
}

impl<const N: usize, T: ChartedMetric<N> + ?Sized> ChartedMetric<N> for Box<T> {
    fn components(&self, p: &Vect<N>) -> Mat<N> {
        (**self).components(p)
    }
    fn partials(&self, p: &Vect<N>) -> [Mat<N>; N] {
        (**self).partials(p)
    }
    fn second_partials(&self, p: &Vect<N>) -> Option<[[Mat<N>; N]; N]> {
        (**self).second_partials(p)
    }
    fn scale(&self) -> f64 {
        (**self).scale()
    }
    fn contains(&self, p: &Vect<N>) -> bool {
        (**self).contains(p)
    }
}

impl<const N: usize, T: ChartedMetric<N> + ?Sized> ChartedMetric<N> for std::sync::Arc<T> {
    fn components(&self, p: &Vect<N>) -> Mat<N> {
        (**self).components(p)
    }
    fn partials(&self, p: &Vect<N>) -> [Mat<N>; N] {
        (**self).partials(p)
    }
    fn second_partials(&self, p: &Vect<N>) -> Option<[[Mat<N>; N]; N]> {
        (**self).second_partials(p)
    }
    fn scale(&self) -> f64 {
        (**self).scale()
    }
    fn contains(&self, p: &Vect<N>) -> bool {
        (**self).contains(p)
    }
}

/// Scalar field with exact first and second partials.
pub trait ScalarField<const N: usize>: Send + Sync {
    fn value(&self, p: &Vect<N>) -> f64;
    fn grad(&self, p: &Vect<N>) -> Vect<N>;
    fn hess(&self, p: &Vect<N>) -> Mat<N>;
}

/// Symmetric 2-tensor field (covariant components).
pub trait SymTensorField<const N: usize>: Send + Sync {
    fn value(&self, p: &Vect<N>) -> Mat<N>;
    fn partials(&self, p: &Vect<N>) -> [Mat<N>; N] {
        fd_partials(|q| self.value(q), p, DEFAULT_FD_STEP)
    }
}

/// Vector field (contravariant components).
pub trait VectorField<const N: usize>: Send + Sync {
    fn value(&self, p: &Vect<N>) -> Vect<N>;
    fn partials(&self, p: &Vect<N>) -> [Vect<N>; N] {
        fd_partials(|q| self.value(q), p, DEFAULT_FD_STEP)
    }
}

macro_rules! forward_field {
    ($tr:ident { $($m:ident -> $ret:ty),* }) => {
        impl<const N: usize, T: $tr<N> + ?Sized> $tr<N> for &T {
            $(fn $m(&self, p: &Vect<N>) -> $ret { (**self).$m(p) })*
        }
        impl<const N: usize, T: $tr<N> + ?Sized> $tr<N> for Box<T> {
            $(fn $m(&self, p: &Vect<N>) -> $ret { (**self).$m(p) })*
        }
        impl<const N: usize, T: $tr<N> + ?Sized> $tr<N> for std::sync::Arc<T> {
            $(fn $m(&self, p: &Vect<N>) -> $ret { (**self).$m(p) })*
        }
    };
}

forward_field!(ScalarField { value -> f64, grad -> Vect<N>, hess -> Mat<N> });
forward_field!(SymTensorField { value -> Mat<N>, partials -> [Mat<N>; N] });
forward_field!(VectorField { value -> Vect<N>, partials -> [Vect<N>; N] });

/// Metric data and Levi-Civita connection at one point.
#[derive(Clone, Debug)]
pub struct Connection<const N: usize> {
    pub g: Mat<N>,
    pub ginv: Mat<N>,
    pub dg: [Mat<N>; N],
    pub gamma: [Mat<N>; N],
}

impl<const N: usize> Connection<N> {
    pub fn at<M: ChartedMetric<N> + ?Sized>(metric: &M, p: &Vect<N>) -> Result<Self> {
        let g = metric.components(p);
        let scale = metric.scale();
        let (det, ginv) = det_inverse(&g).ok_or(Error::SingularMetric { det: 0.0 })?;
        if !det.is_finite() || det.abs() < 1e-14 * scale.powi(2 * N as i32).max(1e-300) {
            return Err(Error::SingularMetric { det });
        }
        let dg = metric.partials(p);
        let lowered = lowered_christoffel(&dg);
        let gamma = std::array::from_fn(|k| {
            let mut m = Mat::<N>::zeros();
            for l in 0..N {
                m += lowered[l] * ginv[(k, l)];
            }
            m
        });
        Ok(Self { g, ginv, dg, gamma })
    }

    pub fn raise(&self, w: &Vect<N>) -> Vect<N> {
        self.ginv * w
    }

    pub fn lower(&self, v: &Vect<N>) -> Vect<N> {
        self.g * v
    }

    /// `g^{ij} a_i b_j` for covectors.
    pub fn dot_co(&self, a: &Vect<N>, b: &Vect<N>) -> f64 {
        a.dot(&(self.ginv * b))
    }

    pub fn norm_co(&self, a: &Vect<N>) -> f64 {
        self.dot_co(a, a).max(0.0).sqrt()
    }

    /// `g^{ij} T_ij`.
    pub fn trace(&self, t: &Mat<N>) -> f64 {
        (self.ginv * t).trace()
    }

    /// Full index-raised norm squared `g^{ik} g^{jl} T_ij T_kl`.
    pub fn norm2(&self, t: &Mat<N>) -> f64 {
        (self.ginv * t * self.ginv * t).trace()
    }

    /// Covariant Hessian from plain partials of a scalar.
    pub fn hessian(&self, grad: &Vect<N>, hess: &Mat<N>) -> Mat<N> {
        let mut out = *hess;
        for k in 0..N {
            out -= self.gamma[k] * grad[k];
        }
        out
    }

    /// `Γ^i_{ik}` contracted, the log-derivative of `sqrt|det g|`.
    pub fn contracted_gamma(&self) -> Vect<N> {
        Vect::<N>::from_fn(|k, _| (0..N).map(|i| self.gamma[i][(i, k)]).sum())
    }
}

/// Determinant and inverse by Gauss-Jordan elimination with partial
/// pivoting; `None` for an exactly singular matrix.
pub fn det_inverse<const N: usize>(m: &Mat<N>) -> Option<(f64, Mat<N>)> {
    let mut a = *m;
    let mut inv = Mat::<N>::identity();
    let mut det = 1.0;
    for col in 0..N {
        let pivot = (col..N).max_by(|&i, &j| a[(i, col)].abs().total_cmp(&a[(j, col)].abs()))?;
        if a[(pivot, col)] == 0.0 {
            return None;
        }
        if pivot != col {
            a.swap_rows(pivot, col);
            inv.swap_rows(pivot, col);
            det = -det;
        }
        let d = a[(col, col)];
        det *= d;
        for j in 0..N {
            a[(col, j)] /= d;
            inv[(col, j)] /= d;
        }
        for i in 0..N {
            if i != col {
                let f = a[(i, col)];
                if f != 0.0 {
                    for j in 0..N {
                        a[(i, j)] -= f * a[(col, j)];
                        inv[(i, j)] -= f * inv[(col, j)];
                    }
                }
            }
        }
    }
    Some((det, inv))
}

/// `Γ_{l,ij} = ½(∂_i g_jl + ∂_j g_il − ∂_l g_ij)`, indexed `[l][(i,j)]`.
fn lowered_christoffel<const N: usize>(dg: &[Mat<N>; N]) -> [Mat<N>; N] {
    std::array::from_fn(|l| {
        Mat::<N>::from_fn(|i, j| 0.5 * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]))
    })
}

/// Christoffel symbols of the second kind, `out[k][(i,j)] = Γ^k_ij`.
pub fn christoffel_symbols<M, const N: usize>(metric: &M, p: &Vect<N>) -> Result<[Mat<N>; N]>
where
    M: ChartedMetric<N> + ?Sized,
{
    Ok(Connection::at(metric, p)?.gamma)
}

/// Ricci tensor and scalar curvature.
#[derive(Clone, Debug)]
pub struct Curvature<const N: usize> {
    pub ricci: Mat<N>,
    pub scalar: f64,
}

/// Curvature with the default oracle step for second metric derivatives.
pub fn curvature<M, const N: usize>(metric: &M, p: &Vect<N>) -> Result<Curvature<N>>
where
    M: ChartedMetric<N> + ?Sized,
{
    curvature_with_step(metric, p, DEFAULT_FD_STEP)
}

/// Curvature where missing second partials of `g` come from central
/// differences of `dg` at step `h · scale`.
pub fn curvature_with_step<M, const N: usize>(
    metric: &M,
    p: &Vect<N>,
    h: f64,
) -> Result<Curvature<N>>
where
    M: ChartedMetric<N> + ?Sized,
{
    let conn = Connection::at(metric, p)?;
    let d2g: [[Mat<N>; N]; N] = match metric.second_partials(p) {
        Some(d) => d,
        None => {
            let step = h * metric.scale();
            // d2g[l][m] = ∂_l ∂_m g
            fd_partials(|q| Stack(metric.partials(q)), p, step).map(|s| s.0)
        }
    };
    let lowered = lowered_christoffel(&conn.dg);
    // dgamma[l][k][(i,j)] = ∂_l Γ^k_ij
    let dgamma: [[Mat<N>; N]; N] = std::array::from_fn(|l| {
        let dginv = -(conn.ginv * conn.dg[l] * conn.ginv);
        let dlowered: [Mat<N>; N] = std::array::from_fn(|m| {
            Mat::<N>::from_fn(|i, j| {
                0.5 * (d2g[l][i][(j, m)] + d2g[l][j][(i, m)] - d2g[l][m][(i, j)])
            })
        });
        std::array::from_fn(|k| {
            let mut out = Mat::<N>::zeros();
            for m in 0..N {
                out += lowered[m] * dginv[(k, m)] + dlowered[m] * conn.ginv[(k, m)];
            }
            out
        })
    });
    let gamma = &conn.gamma;
    let ricci = Mat::<N>::from_fn(|i, j| {
        let mut r = 0.0;
        for k in 0..N {
            r += dgamma[k][k][(i, j)] - dgamma[j][k][(i, k)];
            for l in 0..N {
                r += gamma[k][(k, l)] * gamma[l][(i, j)] - gamma[k][(j, l)] * gamma[l][(i, k)];
            }
        }
        r
    });
    let ricci = 0.5 * (ricci + ricci.transpose());
    let scalar = conn.trace(&ricci);
    Ok(Curvature { ricci, scalar })
}

/// Covariant Hessian `∇²f`.
pub fn scalar_hessian<M, F, const N: usize>(metric: &M, f: &F, p: &Vect<N>) -> Result<Mat<N>>
where
    M: ChartedMetric<N> + ?Sized,
    F: ScalarField<N> + ?Sized,
{
    let conn = Connection::at(metric, p)?;
    Ok(conn.hessian(&f.grad(p), &f.hess(p)))
}

/// `(div T)_j = g^{il} ∇_i T_lj` for a symmetric field.
pub fn tensor_divergence<M, T, const N: usize>(metric: &M, t: &T, p: &Vect<N>) -> Result<Vect<N>>
where
    M: ChartedMetric<N> + ?Sized,
    T: SymTensorField<N> + ?Sized,
{
    let conn = Connection::at(metric, p)?;
    Ok(divergence_from_parts(&conn, &t.value(p), &t.partials(p)))
}

pub(crate) fn divergence_from_parts<const N: usize>(
    conn: &Connection<N>,
    t: &Mat<N>,
    dt: &[Mat<N>; N],
) -> Vect<N> {
    let gamma = &conn.gamma;
    Vect::<N>::from_fn(|j, _| {
        let mut acc = 0.0;
        for i in 0..N {
            for l in 0..N {
                let gil = conn.ginv[(i, l)];
                if gil == 0.0 {
                    continue;
                }
                let mut cov = dt[i][(l, j)];
                for m in 0..N {
                    cov -= gamma[m][(i, l)] * t[(m, j)] + gamma[m][(i, j)] * t[(l, m)];
                }
                acc += gil * cov;
            }
        }
        acc
    })
}

/// Divergence of a vector field given by a closure, `∂_i V^i + Γ^i_ik V^k`,
/// with the partials taken by central differences at `h`.
pub fn vector_divergence_fd<M, F, const N: usize>(
    metric: &M,
    field: F,
    p: &Vect<N>,
    h: f64,
) -> Result<f64>
where
    M: ChartedMetric<N> + ?Sized,
    F: Fn(&Vect<N>) -> Result<Vect<N>>,
{
    let conn = Connection::at(metric, p)?;
    let v = field(p)?;
    let dv = oracle::try_fd_partials(&field, p, h)?;
    let partial_div: f64 = (0..N).map(|i| dv[i][i]).sum();
    Ok(partial_div + conn.contracted_gamma().dot(&v))
}

/// Same divergence through `|g|^{-1/2} ∂_i(|g|^{1/2} V^i)`; a second
/// finite-difference route used to cross-check the first.
pub fn vector_divergence_density_fd<M, F, const N: usize>(
    metric: &M,
    field: F,
    p: &Vect<N>,
    h: f64,
) -> Result<f64>
where
    M: ChartedMetric<N> + ?Sized,
    F: Fn(&Vect<N>) -> Result<Vect<N>>,
{
    let vol = |q: &Vect<N>| det_inverse(&metric.components(q)).map_or(0.0, |(d, _)| d.abs().sqrt());
    let weighted = |q: &Vect<N>| -> Result<Vect<N>> { Ok(field(q)? * vol(q)) };
    let dv = oracle::try_fd_partials(weighted, p, h)?;
    Ok((0..N).map(|i| dv[i][i]).sum::<f64>() / vol(p))
}

/// Geometry of the level set of `f` through a point.
#[derive(Clone, Debug)]
pub struct LevelSetFrame<const N: usize> {
    /// Unit normal, contravariant.
    pub nu: Vect<N>,
    /// Unit normal, covariant.
    pub nu_flat: Vect<N>,
    pub grad_norm: f64,
    /// Mean curvature `div(∇f/|∇f|)`.
    pub mean_curvature: f64,
    /// Second fundamental form, covariant, restricted to the tangent space.
    pub second_form: Mat<N>,
    /// Gaussian (intrinsic) curvature of the level set; meaningful for N = 3.
    pub gauss_curvature: f64,
}

/// Gradient floor below which level-set geometry is refused.
pub fn gradient_floor(scale: f64) -> f64 {
    1e-10 / scale
}

/// Level-set frame with the default curvature oracle step.
pub fn level_set_geometry<M, F, const N: usize>(
    metric: &M,
    f: &F,
    p: &Vect<N>,
) -> Result<LevelSetFrame<N>>
where
    M: ChartedMetric<N> + ?Sized,
    F: ScalarField<N> + ?Sized,
{
    level_set_geometry_with_step(metric, f, p, DEFAULT_FD_STEP)
}

pub fn level_set_geometry_with_step<M, F, const N: usize>(
    metric: &M,
    f: &F,
    p: &Vect<N>,
    h: f64,
) -> Result<LevelSetFrame<N>>
where
    M: ChartedMetric<N> + ?Sized,
    F: ScalarField<N> + ?Sized,
{
    let conn = Connection::at(metric, p)?;
    let curv = curvature_with_step(metric, p, h)?;
    let grad = f.grad(p);
    let hess = conn.hessian(&grad, &f.hess(p));
    level_set_from_parts(&conn, &curv, &grad, &hess, metric.scale())
}

/// Assembles the frame from precomputed pointwise data. The Gaussian
/// curvature comes from the Gauss equation
/// `2K = R − 2 Ric(ν,ν) + H² − |A|²`.
pub fn level_set_from_parts<const N: usize>(
    conn: &Connection<N>,
    curv: &Curvature<N>,
    grad: &Vect<N>,
    hess: &Mat<N>,
    scale: f64,
) -> Result<LevelSetFrame<N>> {
    let norm = conn.norm_co(grad);
    let floor = gradient_floor(scale);
    if norm <= floor || !norm.is_finite() {
        return Err(Error::DegenerateGradient { norm, floor });
    }
    let nu_flat = grad / norm;
    let nu = conn.raise(&nu_flat);
    // projector P[a][i] = δ_ai − ν^a ν_i
    let proj = Mat::<N>::identity() - nu * nu_flat.transpose();
    let second_form = proj.transpose() * hess * proj / norm;
    let second_form = 0.5 * (second_form + second_form.transpose());
    let mean_curvature = conn.trace(&second_form);
    let a2 = conn.norm2(&second_form);
    let ric_nn = nu.dot(&(curv.ricci * nu));
    let gauss_curvature = 0.5 * (curv.scalar - 2.0 * ric_nn + mean_curvature * mean_curvature - a2);
    Ok(LevelSetFrame {
        nu,
        nu_flat,
        grad_norm: norm,
        mean_curvature,
        second_form,
        gauss_curvature,
    })
}
