//! Divergence identities for pairs of level-set functions.
//!
//! Every identity is checked as `lhs = div(flux)` against `rhs = bulk`.
//! Fluxes are assembled from analytic first and second derivatives of the
//! inputs; their divergence is taken by central differences of the
//! assembled field, so the residual of an exact identity decays as `h²`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::initial_data::{densities_from_parts, InitialDataSet};
use crate::tensor::oracle::{observed_order, DEFAULT_FD_STEP};
use crate::tensor::{
    curvature, level_set_from_parts, vector_divergence_fd, ChartedMetric, Connection, Curvature,
    Mat3, ScalarField, Vec3, VectorField,
};

/// Relative derivative ladder used for refinement-order diagnostics.
pub const LADDER: [f64; 3] = [4e-3, 2e-3, 1e-3];

/// Absolute tolerance on PDE sources before a mismatch is reported.
pub const SOURCE_TOL: f64 = 1e-6;

/// Tolerance on `div E`.
pub const DIV_FREE_TOL: f64 = 1e-8;

/// `|ν_u + ν_v|` below this makes `η` undefined.
pub const OPPOSITE_NORMALS_TOL: f64 = 1e-12;

/// Metric, curvature, `k` and the constraint densities at a point.
#[derive(Clone, Debug)]
pub struct Background {
    pub conn: Connection<3>,
    pub curv: Curvature<3>,
    pub k: Mat3,
    pub trk: f64,
    pub mu: f64,
    /// Covariant.
    pub j: Vec3,
    pub scale: f64,
}

impl Background {
    pub fn at(ids: &InitialDataSet, p: &Vec3) -> Result<Self> {
        let conn = Connection::at(ids.metric.as_ref(), p)?;
        let curv = curvature(ids.metric.as_ref(), p)?;
        let k = ids.k_at(p);
        let (mu, j) = densities_from_parts(&conn, curv.scalar, &k, &ids.k.partials(p));
        let trk = conn.trace(&k);
        Ok(Self {
            conn,
            curv,
            k,
            trk,
            mu,
            j,
            scale: ids.metric.scale(),
        })
    }
}

/// First and second derivative data of a function with nonvanishing
/// gradient.
#[derive(Clone, Debug)]
pub struct LevelData {
    pub value: f64,
    /// `du`, covariant.
    pub d: Vec3,
    /// `∇u`, contravariant.
    pub sharp: Vec3,
    pub norm: f64,
    /// Unit normal, contravariant.
    pub nu: Vec3,
    /// Covariant Hessian.
    pub hess: Mat3,
    pub lap: f64,
}

impl LevelData {
    pub fn at<F: ScalarField<3> + ?Sized>(
        conn: &Connection<3>,
        f: &F,
        p: &Vec3,
        scale: f64,
    ) -> Result<Self> {
        let d = f.grad(p);
        let norm = conn.norm_co(&d);
        let floor = crate::tensor::gradient_floor(scale);
        if norm <= floor || !norm.is_finite() {
            return Err(Error::DegenerateGradient { norm, floor });
        }
        let sharp = conn.raise(&d);
        let hess = conn.hessian(&d, &f.hess(p));
        Ok(Self {
            value: f.value(p),
            d,
            sharp,
            norm,
            nu: sharp / norm,
            hess,
            lap: conn.trace(&hess),
        })
    }

    /// `d|∇u|`, covariant.
    pub fn d_norm(&self) -> Vec3 {
        self.hess * self.sharp / self.norm
    }

    /// Gaussian curvature of the level set through the point.
    pub fn gauss_curvature(
        &self,
        conn: &Connection<3>,
        curv: &Curvature<3>,
        scale: f64,
    ) -> Result<f64> {
        Ok(level_set_from_parts(conn, curv, &self.d, &self.hess, scale)?.gauss_curvature)
    }
}

/// The pair of modified Hessians at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct ModifiedHessians {
    pub plus: Mat3,
    pub minus: Mat3,
    pub trace_plus: f64,
    pub trace_minus: f64,
    /// `(∇̄²₊)(ν_u, ν_u)`.
    pub normal_plus: f64,
    /// `(∇̄²₋)(ν_v, ν_v)`.
    pub normal_minus: f64,
    pub a: f64,
}

/// `|∇u||∇v| + ⟨∇u, ∇v⟩`.
pub fn null_coupling(conn: &Connection<3>, lu: &LevelData, lv: &LevelData) -> f64 {
    lu.norm * lv.norm + conn.dot_co(&lu.d, &lv.d)
}

pub fn modified_hessians_from(
    conn: &Connection<3>,
    k: &Mat3,
    lu: &LevelData,
    lv: &LevelData,
    a: f64,
) -> Result<ModifiedHessians> {
    let s = lu.value + lv.value;
    if !(s > 0.0) {
        return Err(Error::NonPositive {
            what: "u + v",
            value: s,
        });
    }
    let q = null_coupling(conn, lu, lv);
    let cross = (lu.d * lv.d.transpose() + lv.d * lu.d.transpose()) / s;
    let common = cross - conn.g * (q / s);
    let plus = lu.hess + k * lu.norm + common;
    let minus = lv.hess - k * lv.norm + common;
    Ok(ModifiedHessians {
        plus,
        minus,
        trace_plus: conn.trace(&plus),
        trace_minus: conn.trace(&minus),
        normal_plus: lu.nu.dot(&(plus * lu.nu)),
        normal_minus: lv.nu.dot(&(minus * lv.nu)),
        a,
    })
}

/// `∇̄²₊u` and `∇̄²₋v` at `p`.
pub fn modified_hessians<U, V>(
    ids: &InitialDataSet,
    u: &U,
    v: &V,
    a: f64,
    p: &Vec3,
) -> Result<ModifiedHessians>
where
    U: ScalarField<3> + ?Sized,
    V: ScalarField<3> + ?Sized,
{
    let conn = Connection::at(ids.metric.as_ref(), p)?;
    let k = ids.k_at(p);
    let scale = ids.metric.scale();
    let lu = LevelData::at(&conn, u, p, scale)?;
    let lv = LevelData::at(&conn, v, p, scale)?;
    modified_hessians_from(&conn, &k, &lu, &lv, a)
}

/// The flux `Y` of the double-null identity, contravariant.
pub fn flux_y<U, V>(ids: &InitialDataSet, u: &U, v: &V, p: &Vec3) -> Result<Vec3>
where
    U: ScalarField<3> + ?Sized,
    V: ScalarField<3> + ?Sized,
{
    let conn = Connection::at(ids.metric.as_ref(), p)?;
    let k = ids.k_at(p);
    let scale = ids.metric.scale();
    let lu = LevelData::at(&conn, u, p, scale)?;
    let lv = LevelData::at(&conn, v, p, scale)?;
    let s = lu.value + lv.value;
    let trk = conn.trace(&k);
    let diff = lu.d - lv.d;
    let flat = 2.0 * (lu.d_norm() + lv.d_norm())
        + 2.0 * k * conn.raise(&diff)
        + 4.0 * (lu.norm * lv.d + lv.norm * lu.d) / s
        - 2.0 * lu.lap * lu.d / lu.norm
        - 2.0 * lv.lap * lv.d / lv.norm
        - 2.0 * trk * diff;
    Ok(conn.raise(&flat))
}

/// Source terms `f₁, f₂` on the right of the double-null identity.
#[derive(Clone)]
pub enum Sources {
    /// `f₁ = a(∇̄²₊)(ν_u,ν_u)`, `f₂ = a(∇̄²₋)(ν_v,ν_v)`; requires the system
    /// `Δ̄₊u = f₁`, `Δ̄₋v = f₂` to hold.
    AForm(f64),
    /// `f₁ := Δ̄₊u`, `f₂ := Δ̄₋v`; the identity then holds for any pair.
    SelfSourced,
    /// User-supplied `(f₁, f₂)`; requires the system to hold.
    Given(Arc<dyn Fn(&Vec3) -> (f64, f64) + Send + Sync>),
}

impl std::fmt::Debug for Sources {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Sources::AForm(a) => write!(f, "AForm({a})"),
            Sources::SelfSourced => write!(f, "SelfSourced"),
            Sources::Given(_) => write!(f, "Given"),
        }
    }
}

impl Sources {
    fn resolve(&self, mh: &ModifiedHessians, p: &Vec3) -> Result<(f64, f64)> {
        let (f1, f2) = match self {
            Sources::SelfSourced => return Ok((mh.trace_plus, mh.trace_minus)),
            Sources::AForm(a) => (a * mh.normal_plus, a * mh.normal_minus),
            Sources::Given(f) => f(p),
        };
        let mismatch = (mh.trace_plus - f1).abs().max((mh.trace_minus - f2).abs());
        if !(mismatch <= SOURCE_TOL) {
            return Err(Error::SourceMismatch {
                mismatch,
                limit: SOURCE_TOL,
            });
        }
        Ok((f1, f2))
    }
}

/// Pointwise sides of an identity: `lhs` at each step of a ladder and the
/// step-independent `rhs`.
pub type PointSides = (Vec<f64>, f64);

fn lhs_ladder<F>(
    metric: &dyn ChartedMetric<3>,
    field: F,
    p: &Vec3,
    steps: &[f64],
) -> Result<Vec<f64>>
where
    F: Fn(&Vec3) -> Result<Vec3>,
{
    let scale = metric.scale();
    steps
        .iter()
        .map(|h| vector_divergence_fd(metric, &field, p, h * scale))
        .collect()
}

/// Both sides of the double-null identity at `p`.
pub fn identity_point<U, V>(
    ids: &InitialDataSet,
    u: &U,
    v: &V,
    sources: &Sources,
    p: &Vec3,
    steps: &[f64],
) -> Result<PointSides>
where
    U: ScalarField<3> + ?Sized,
    V: ScalarField<3> + ?Sized,
{
    let bg = Background::at(ids, p)?;
    let lu = LevelData::at(&bg.conn, u, p, bg.scale)?;
    let lv = LevelData::at(&bg.conn, v, p, bg.scale)?;
    let a = if let Sources::AForm(a) = sources {
        *a
    } else {
        0.0
    };
    let mh = modified_hessians_from(&bg.conn, &bg.k, &lu, &lv, a)?;
    let (f1, f2) = sources.resolve(&mh, p)?;
    let ku = lu.gauss_curvature(&bg.conn, &bg.curv, bg.scale)?;
    let kv = lv.gauss_curvature(&bg.conn, &bg.curv, bg.scale)?;
    let rhs = (bg.conn.norm2(&mh.plus) - f1 * f1) / lu.norm
        + (bg.conn.norm2(&mh.minus) - f2 * f2) / lv.norm
        + 2.0 * bg.mu * (lu.norm + lv.norm)
        + 2.0 * bg.conn.dot_co(&bg.j, &(lu.d - lv.d))
        - 2.0 * ku * lu.norm
        - 2.0 * kv * lv.norm;
    let lhs = lhs_ladder(ids.metric.as_ref(), |q| flux_y(ids, u, v, q), p, steps)?;
    Ok((lhs, rhs))
}

/// Pointwise residuals over a lattice with refinement diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualReport {
    pub points: Vec<[f64; 3]>,
    /// Values at the finest step.
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub residual: Vec<f64>,
    pub max: f64,
    pub l2_mean: f64,
    pub ladder: Vec<LadderLevel>,
    /// Observed orders between consecutive ladder levels; `None` when a
    /// level is exactly zero.
    pub orders: Vec<Option<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LadderLevel {
    pub step: f64,
    pub max: f64,
    pub l2_mean: f64,
}

impl ResidualReport {
    /// Assembles a report from `eval(p, steps)`; lattice points are
    /// evaluated in parallel and collected in lattice order.
    pub fn collect<F>(lattice: &[Vec3], steps: &[f64], eval: F) -> Result<Self>
    where
        F: Fn(&Vec3, &[f64]) -> Result<PointSides> + Sync,
    {
        if steps.is_empty() || lattice.is_empty() {
            return Err(Error::InvalidInput(
                "residual report needs a lattice and at least one step".into(),
            ));
        }
        let sides: Vec<PointSides> = lattice
            .par_iter()
            .map(|p| eval(p, steps))
            .collect::<Result<_>>()?;
        let n = lattice.len() as f64;
        let ladder: Vec<LadderLevel> = steps
            .iter()
            .enumerate()
            .map(|(s, &step)| {
                let res = sides.iter().map(|(l, r)| l[s] - r);
                let (mut max, mut sq) = (0.0f64, 0.0);
                for x in res {
                    max = max.max(x.abs());
                    sq += x * x;
                }
                LadderLevel {
                    step,
                    max,
                    l2_mean: (sq / n).sqrt(),
                }
            })
            .collect();
        let orders = ladder
            .windows(2)
            .map(|w| {
                (w[0].max > 0.0 && w[1].max > 0.0)
                    .then(|| observed_order(w[0].max, w[1].max, w[0].step, w[1].step))
            })
            .collect();
        let last = steps.len() - 1;
        let lhs: Vec<f64> = sides.iter().map(|(l, _)| l[last]).collect();
        let rhs: Vec<f64> = sides.iter().map(|(_, r)| *r).collect();
        let residual: Vec<f64> = lhs.iter().zip(&rhs).map(|(l, r)| l - r).collect();
        Ok(Self {
            points: lattice.iter().map(|p| (*p).into()).collect(),
            lhs,
            rhs,
            residual,
            max: ladder[last].max,
            l2_mean: ladder[last].l2_mean,
            ladder,
            orders,
        })
    }

    pub fn terminal_order(&self) -> Option<f64> {
        self.orders.last().copied().flatten()
    }
}

/// Double-null identity residual over a lattice.
pub fn identity_residual<U, V>(
    ids: &InitialDataSet,
    u: &U,
    v: &V,
    sources: &Sources,
    lattice: &[Vec3],
    steps: &[f64],
) -> Result<ResidualReport>
where
    U: ScalarField<3> + ?Sized,
    V: ScalarField<3> + ?Sized,
{
    ResidualReport::collect(lattice, steps, |p, h| {
        identity_point(ids, u, v, sources, p, h)
    })
}

/// `∇|∇u| − Δu ν`, contravariant.
fn stern_flux<M, U>(metric: &M, u: &U, p: &Vec3) -> Result<Vec3>
where
    M: ChartedMetric<3> + ?Sized,
    U: ScalarField<3> + ?Sized,
{
    let conn = Connection::at(metric, p)?;
    let l = LevelData::at(&conn, u, p, metric.scale())?;
    Ok(conn.raise(&(l.d_norm() - l.lap * l.d / l.norm)))
}

/// Both sides of `2 div(∇|∇u| − Δu ν) = (|∇²u|² + |∇u|²(R − 2K) − (Δu)²)/|∇u|`.
pub fn stern_point<U>(
    metric: &dyn ChartedMetric<3>,
    u: &U,
    p: &Vec3,
    steps: &[f64],
) -> Result<PointSides>
where
    U: ScalarField<3> + ?Sized,
{
    let conn = Connection::at(metric, p)?;
    let curv = curvature(metric, p)?;
    let l = LevelData::at(&conn, u, p, metric.scale())?;
    let k = l.gauss_curvature(&conn, &curv, metric.scale())?;
    let rhs =
        (conn.norm2(&l.hess) + l.norm * l.norm * (curv.scalar - 2.0 * k) - l.lap * l.lap) / l.norm;
    let lhs = lhs_ladder(
        metric,
        |q| stern_flux(metric, u, q).map(|y| 2.0 * y),
        p,
        steps,
    )?;
    Ok((lhs, rhs))
}

pub fn stern_residual<U>(
    metric: &dyn ChartedMetric<3>,
    u: &U,
    lattice: &[Vec3],
    steps: &[f64],
) -> Result<ResidualReport>
where
    U: ScalarField<3> + ?Sized,
{
    ResidualReport::collect(lattice, steps, |p, h| stern_point(metric, u, p, h))
}

/// Source of the single-function identity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RiemannianSource {
    /// `f = a 𝓗(ν,ν)`; requires `tr 𝓗 = f`.
    AForm(f64),
    /// `f := tr 𝓗`.
    SelfSourced,
}

/// `𝓗 = ∇²u − (|∇u|²/u) g + ∇u⊗∇u / u`.
pub fn imcf_hessian(conn: &Connection<3>, l: &LevelData) -> Mat3 {
    l.hess - conn.g * (l.norm * l.norm / l.value) + l.d * l.d.transpose() / l.value
}

fn riemannian_flux<M, U>(metric: &M, u: &U, p: &Vec3) -> Result<Vec3>
where
    M: ChartedMetric<3> + ?Sized,
    U: ScalarField<3> + ?Sized,
{
    let conn = Connection::at(metric, p)?;
    let l = LevelData::at(&conn, u, p, metric.scale())?;
    Ok(conn.raise(&(2.0 * (l.d_norm() + l.norm / l.value * l.d - l.lap * l.d / l.norm))))
}

/// Both sides of
/// `R|∇u| + (|𝓗|² − f²)/|∇u| − 2K|∇u| = 2 div(∇|∇u| + (|∇u|/u)∇u − Δu ν)`.
pub fn riemannian_point<U>(
    metric: &dyn ChartedMetric<3>,
    u: &U,
    source: RiemannianSource,
    p: &Vec3,
    steps: &[f64],
) -> Result<PointSides>
where
    U: ScalarField<3> + ?Sized,
{
    let conn = Connection::at(metric, p)?;
    let curv = curvature(metric, p)?;
    let l = LevelData::at(&conn, u, p, metric.scale())?;
    if !(l.value > 0.0) {
        return Err(Error::NonPositive {
            what: "u",
            value: l.value,
        });
    }
    let h = imcf_hessian(&conn, &l);
    let tr = conn.trace(&h);
    let f = match source {
        RiemannianSource::SelfSourced => tr,
        RiemannianSource::AForm(a) => {
            let f = a * l.nu.dot(&(h * l.nu));
            let mismatch = (tr - f).abs();
            if !(mismatch <= SOURCE_TOL) {
                return Err(Error::SourceMismatch {
                    mismatch,
                    limit: SOURCE_TOL,
                });
            }
            f
        }
    };
    let k = l.gauss_curvature(&conn, &curv, metric.scale())?;
    let rhs = curv.scalar * l.norm + (conn.norm2(&h) - f * f) / l.norm - 2.0 * k * l.norm;
    let lhs = lhs_ladder(metric, |q| riemannian_flux(metric, u, q), p, steps)?;
    Ok((lhs, rhs))
}

pub fn riemannian_residual<U>(
    metric: &dyn ChartedMetric<3>,
    u: &U,
    source: RiemannianSource,
    lattice: &[Vec3],
    steps: &[f64],
) -> Result<ResidualReport>
where
    U: ScalarField<3> + ?Sized,
{
    ResidualReport::collect(lattice, steps, |p, h| {
        riemannian_point(metric, u, source, p, h)
    })
}

/// Which form of the electric term to place in the flux `Z`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChargedFlux {
    /// `2ξ⁻¹(|∇u||∇v| + ⟨∇u,∇v⟩) E`; agrees with `Projected` only where
    /// `ν_u = ν_v`.
    Statement,
    /// `2ξ⁻¹(|∇u|⟨∇v,η⟩ + |∇v|⟨∇u,η⟩) E`; the identity holds for all
    /// pairs with this term.
    #[default]
    Projected,
}

/// Whether `u, v` are required to solve the charged system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChargedSources {
    /// `Δu = ξE_η − tr k |∇u|`, `Δv = ξE_η + tr k |∇v|` must hold.
    System,
    /// Extension: the defects `F± = tr ℰ±` are carried as sources.
    SelfSourced,
}

/// Pointwise charged-frame data.
#[derive(Clone, Debug, PartialEq)]
pub struct ChargedFrame {
    /// Contravariant.
    pub e: Vec3,
    /// Unit, contravariant.
    pub eta: Vec3,
    pub xi: f64,
    pub e_plus: Mat3,
    pub e_minus: Mat3,
    /// `tr ℰ₊ = Δu − ξE_η + tr k |∇u|`.
    pub defect_plus: f64,
    /// `tr ℰ₋ = Δv − ξE_η − tr k |∇v|`.
    pub defect_minus: f64,
}

fn unit_eta(conn: &Connection<3>, lu: &LevelData, lv: &LevelData) -> Result<Vec3> {
    let sum = lu.nu + lv.nu;
    let n = conn.lower(&sum).dot(&sum).max(0.0).sqrt();
    if n <= OPPOSITE_NORMALS_TOL {
        return Err(Error::ParallelOppositeNormals);
    }
    Ok(sum / n)
}

pub fn charged_frame_from(
    conn: &Connection<3>,
    k: &Mat3,
    lu: &LevelData,
    lv: &LevelData,
    e: &Vec3,
) -> Result<ChargedFrame> {
    let eta = unit_eta(conn, lu, lv)?;
    let xi = (lu.norm * lv.norm).sqrt();
    let (eta_f, e_f) = (conn.lower(&eta), conn.lower(e));
    let e_eta = e_f.dot(&eta);
    let electric = xi * (eta_f * e_f.transpose() + e_f * eta_f.transpose()) - conn.g * (xi * e_eta);
    let e_plus = lu.hess + electric + k * lu.norm;
    let e_minus = lv.hess + electric - k * lv.norm;
    let trk = conn.trace(k);
    Ok(ChargedFrame {
        e: *e,
        eta,
        xi,
        e_plus,
        e_minus,
        defect_plus: lu.lap - xi * e_eta + trk * lu.norm,
        defect_minus: lv.lap - xi * e_eta - trk * lv.norm,
    })
}

/// The flux `Z`, contravariant.
pub fn flux_z<U, V, E>(
    ids: &InitialDataSet,
    u: &U,
    v: &V,
    e: &E,
    form: ChargedFlux,
    p: &Vec3,
) -> Result<Vec3>
where
    U: ScalarField<3> + ?Sized,
    V: ScalarField<3> + ?Sized,
    E: VectorField<3> + ?Sized,
{
    let conn = Connection::at(ids.metric.as_ref(), p)?;
    let k = ids.k_at(p);
    let scale = ids.metric.scale();
    let lu = LevelData::at(&conn, u, p, scale)?;
    let lv = LevelData::at(&conn, v, p, scale)?;
    let xi = (lu.norm * lv.norm).sqrt();
    let trk = conn.trace(&k);
    let weight = match form {
        ChargedFlux::Statement => null_coupling(&conn, &lu, &lv),
        ChargedFlux::Projected => {
            let eta = unit_eta(&conn, &lu, &lv)?;
            lu.norm * lv.d.dot(&eta) + lv.norm * lu.d.dot(&eta)
        }
    };
    let flat =
        lu.d_norm() - lu.lap * lu.d / lu.norm + lv.d_norm() - lv.lap * lv.d / lv.norm - trk * lu.d
            + trk * lv.d
            + k * (lu.sharp - lv.sharp);
    Ok(conn.raise(&flat) + e.value(p) * (2.0 * weight / xi))
}

fn check_divergence_free<E: VectorField<3> + ?Sized>(
    conn: &Connection<3>,
    e: &E,
    p: &Vec3,
) -> Result<()> {
    let de = e.partials(p);
    let div = (0..3).map(|i| de[i][i]).sum::<f64>() + conn.contracted_gamma().dot(&e.value(p));
    if !(div.abs() <= DIV_FREE_TOL) {
        return Err(Error::NotDivergenceFree { div });
    }
    Ok(())
}

/// Both sides of the charged identity at `p`.
#[allow(clippy::too_many_arguments)]
pub fn charged_point<U, V, E>(
    ids: &InitialDataSet,
    u: &U,
    v: &V,
    e: &E,
    sources: ChargedSources,
    form: ChargedFlux,
    p: &Vec3,
    steps: &[f64],
) -> Result<PointSides>
where
    U: ScalarField<3> + ?Sized,
    V: ScalarField<3> + ?Sized,
    E: VectorField<3> + ?Sized,
{
    let bg = Background::at(ids, p)?;
    check_divergence_free(&bg.conn, e, p)?;
    let lu = LevelData::at(&bg.conn, u, p, bg.scale)?;
    let lv = LevelData::at(&bg.conn, v, p, bg.scale)?;
    let ev = e.value(p);
    let frame = charged_frame_from(&bg.conn, &bg.k, &lu, &lv, &ev)?;
    let (fp, fm) = match sources {
        ChargedSources::SelfSourced => (frame.defect_plus, frame.defect_minus),
        ChargedSources::System => {
            let mismatch = frame.defect_plus.abs().max(frame.defect_minus.abs());
            if !(mismatch <= SOURCE_TOL) {
                return Err(Error::SourceMismatch {
                    mismatch,
                    limit: SOURCE_TOL,
                });
            }
            (0.0, 0.0)
        }
    };
    let e2 = bg.conn.lower(&ev).dot(&ev);
    let ku = lu.gauss_curvature(&bg.conn, &bg.curv, bg.scale)?;
    let kv = lv.gauss_curvature(&bg.conn, &bg.curv, bg.scale)?;
    let (nu2, nv2) = (lu.norm * lu.norm, lv.norm * lv.norm);
    let rhs = (bg.conn.norm2(&frame.e_plus) - fp * fp
        + nu2 * (2.0 * bg.mu - 2.0 * ku - 2.0 * e2)
        + 2.0 * lu.norm * bg.j.dot(&lu.sharp))
        / (2.0 * lu.norm)
        + (bg.conn.norm2(&frame.e_minus) - fm * fm + nv2 * (2.0 * bg.mu - 2.0 * kv - 2.0 * e2)
            - 2.0 * lv.norm * bg.j.dot(&lv.sharp))
            / (2.0 * lv.norm);
    let lhs = lhs_ladder(
        ids.metric.as_ref(),
        |q| flux_z(ids, u, v, e, form, q),
        p,
        steps,
    )?;
    Ok((lhs, rhs))
}

#[allow(clippy::too_many_arguments)]
pub fn charged_residual<U, V, E>(
    ids: &InitialDataSet,
    u: &U,
    v: &V,
    e: &E,
    sources: ChargedSources,
    form: ChargedFlux,
    lattice: &[Vec3],
    steps: &[f64],
) -> Result<ResidualReport>
where
    U: ScalarField<3> + ?Sized,
    V: ScalarField<3> + ?Sized,
    E: VectorField<3> + ?Sized,
{
    ResidualReport::collect(lattice, steps, |p, h| {
        charged_point(ids, u, v, e, sources, form, p, h)
    })
}

/// Single-function identity for `Δu = −σ tr k |∇u|` with `σ = ±1`
/// (`σ = −1` is the time-reversed data), assembled independently of the
/// charged machinery:
/// `div(∇|∇u| − Δu ν + σ(k(∇u,·) − tr k ∇u))
///   = (|∇²u + σk|∇u||² − F² + |∇u|²(2μ − 2K) + 2σ|∇u|⟨J,∇u⟩) / 2|∇u|`
/// with defect `F = Δu + σ tr k |∇u|`.
pub fn spacetime_harmonic_point<U>(
    ids: &InitialDataSet,
    u: &U,
    sigma: f64,
    p: &Vec3,
    steps: &[f64],
) -> Result<PointSides>
where
    U: ScalarField<3> + ?Sized,
{
    let metric = ids.metric.as_ref();
    let conn = Connection::at(metric, p)?;
    let curv = curvature(metric, p)?;
    let k = ids.k_at(p) * sigma;
    let trk = conn.trace(&k);
    let dk = ids.k.partials(p).map(|m| m * sigma);
    let (mu, j) = densities_from_parts(&conn, curv.scalar, &k, &dk);
    let grad = u.grad(p);
    let hess = conn.hessian(&grad, &u.hess(p));
    let norm = conn.norm_co(&grad);
    let frame = level_set_from_parts(&conn, &curv, &grad, &hess, metric.scale())?;
    let lap = conn.trace(&hess);
    let shifted = hess + k * norm;
    let defect = lap + trk * norm;
    let rhs = (conn.norm2(&shifted) - defect * defect
        + norm * norm * (2.0 * mu - 2.0 * frame.gauss_curvature)
        + 2.0 * norm * conn.dot_co(&j, &grad))
        / (2.0 * norm);
    let flux = |q: &Vec3| -> Result<Vec3> {
        let c = Connection::at(metric, q)?;
        let kq = ids.k_at(q) * sigma;
        let g = u.grad(q);
        let h = c.hessian(&g, &u.hess(q));
        let n = c.norm_co(&g);
        let up = c.raise(&g);
        let dn = h * up / n;
        let flat = dn - c.trace(&h) * g / n + kq * up - c.trace(&kq) * g;
        Ok(c.raise(&flat))
    };
    let lhs = lhs_ladder(metric, flux, p, steps)?;
    Ok((lhs, rhs))
}

pub fn spacetime_harmonic_residual<U>(
    ids: &InitialDataSet,
    u: &U,
    sigma: f64,
    lattice: &[Vec3],
    steps: &[f64],
) -> Result<ResidualReport>
where
    U: ScalarField<3> + ?Sized,
{
    ResidualReport::collect(lattice, steps, |p, h| {
        spacetime_harmonic_point(ids, u, sigma, p, h)
    })
}

/// Default single step for non-ladder evaluations.
pub const DEFAULT_STEP: [f64; 1] = [DEFAULT_FD_STEP];
