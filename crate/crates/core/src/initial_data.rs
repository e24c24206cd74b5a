//! Initial data sets `(M, g, k)`: constraint densities, null expansions
//! and Hawking masses of closed surfaces.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre_on;
use crate::tensor::fields::{Coordinate, Radius};
use crate::tensor::oracle::DEFAULT_FD_STEP;
use crate::tensor::{
    curvature_with_step, divergence_from_parts, ChartedMetric, Connection, Mat3, ScalarField,
    SymTensorField, Vec3,
};

/// How the annulus boundary is described in the chart.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadialChart {
    /// Chart is Cartesian; the boundary-defining function is `|x − center|`.
    Cartesian { center: [f64; 3] },
    /// Chart is `(r, θ, φ)`; the boundary-defining function is `r`.
    Spherical,
}

/// Labels for the two boundary components.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Inner,
    Outer,
}

/// Annulus `{inner ≤ b ≤ outer}` of a boundary-defining function `b`;
/// `∂₋M = {b = inner}`, `∂₊M = {b = outer}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Annulus {
    pub chart: RadialChart,
    pub inner: f64,
    pub outer: f64,
}

impl Annulus {
    pub fn spherical(inner: f64, outer: f64) -> Self {
        Self {
            chart: RadialChart::Spherical,
            inner,
            outer,
        }
    }

    pub fn cartesian(inner: f64, outer: f64) -> Self {
        Self {
            chart: RadialChart::Cartesian { center: [0.0; 3] },
            inner,
            outer,
        }
    }

    pub fn level(&self, which: Boundary) -> f64 {
        match which {
            Boundary::Inner => self.inner,
            Boundary::Outer => self.outer,
        }
    }

    /// The boundary-defining function.
    pub fn boundary_function(&self) -> Arc<dyn ScalarField<3>> {
        match self.chart {
            RadialChart::Spherical => Arc::new(Coordinate(0)),
            RadialChart::Cartesian { center } => {
                let c = Vec3::from(center);
                if c == Vec3::zeros() {
                    Arc::new(Radius)
                } else {
                    Arc::new(Shifted { center: c })
                }
            }
        }
    }

    /// Chart point at radial parameter `r` in direction `(θ, φ)`.
    pub fn point(&self, r: f64, theta: f64, phi: f64) -> Vec3 {
        match self.chart {
            RadialChart::Spherical => Vec3::new(r, theta, phi),
            RadialChart::Cartesian { center } => Vec3::from(center) + r * direction(theta, phi),
        }
    }

    /// Cell-centred interior lattice of `n_r × n_θ × n_φ` points. Cell
    /// centring keeps every point off the boundary and off the poles.
    pub fn lattice(&self, n_r: usize, n_theta: usize, n_phi: usize) -> Vec<Vec3> {
        let mut out = Vec::with_capacity(n_r * n_theta * n_phi);
        for i in 0..n_r {
            let r = self.inner + (self.outer - self.inner) * (i as f64 + 0.5) / n_r as f64;
            for j in 0..n_theta {
                let theta = PI * (j as f64 + 0.5) / n_theta as f64;
                for k in 0..n_phi {
                    let phi = 2.0 * PI * (k as f64 + 0.5) / n_phi as f64;
                    out.push(self.point(r, theta, phi));
                }
            }
        }
        out
    }
}

struct Shifted {
    center: Vec3,
}

impl ScalarField<3> for Shifted {
    fn value(&self, p: &Vec3) -> f64 {
        Radius.value(&(p - self.center))
    }
    fn grad(&self, p: &Vec3) -> Vec3 {
        Radius.grad(&(p - self.center))
    }
    fn hess(&self, p: &Vec3) -> Mat3 {
        Radius.hess(&(p - self.center))
    }
}

fn direction(theta: f64, phi: f64) -> Vec3 {
    Vec3::new(
        theta.sin() * phi.cos(),
        theta.sin() * phi.sin(),
        theta.cos(),
    )
}

/// A Riemannian 3-manifold with a symmetric 2-tensor `k`.
#[derive(Clone)]
pub struct InitialDataSet {
    pub name: String,
    pub metric: Arc<dyn ChartedMetric<3>>,
    pub k: Arc<dyn SymTensorField<3>>,
    pub domain: Annulus,
}

impl std::fmt::Debug for InitialDataSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("InitialDataSet")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .finish()
    }
}

impl InitialDataSet {
    pub fn new(
        name: impl Into<String>,
        metric: impl ChartedMetric<3> + 'static,
        k: impl SymTensorField<3> + 'static,
        domain: Annulus,
    ) -> Self {
        Self {
            name: name.into(),
            metric: Arc::new(metric),
            k: Arc::new(k),
            domain,
        }
    }

    /// The same data with `k ↦ −k`.
    pub fn time_reversed(&self) -> Self {
        Self {
            name: format!("{}-reversed", self.name),
            metric: self.metric.clone(),
            k: Arc::new(Negated(self.k.clone())),
            domain: self.domain,
        }
    }

    /// Symmetrised `k` at `p`.
    pub fn k_at(&self, p: &Vec3) -> Mat3 {
        let k = self.k.value(p);
        0.5 * (k + k.transpose())
    }
}

struct Negated(Arc<dyn SymTensorField<3>>);

impl SymTensorField<3> for Negated {
    fn value(&self, p: &Vec3) -> Mat3 {
        -self.0.value(p)
    }
    fn partials(&self, p: &Vec3) -> [Mat3; 3] {
        self.0.partials(p).map(|m| -m)
    }
}

/// Energy and momentum densities at a point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstraintDensities {
    pub mu: f64,
    /// Covariant components.
    pub j: [f64; 3],
    pub j_norm: f64,
    pub dec_margin: f64,
}

/// `μ = ½(R + (tr k)² − |k|²)`, `J = div(k − (tr k) g)`.
pub fn constraint_densities(ids: &InitialDataSet, p: &Vec3) -> Result<ConstraintDensities> {
    constraint_densities_with_step(ids, p, DEFAULT_FD_STEP)
}

pub fn constraint_densities_with_step(
    ids: &InitialDataSet,
    p: &Vec3,
    h: f64,
) -> Result<ConstraintDensities> {
    let conn = Connection::at(ids.metric.as_ref(), p)?;
    let curv = curvature_with_step(ids.metric.as_ref(), p, h)?;
    let (mu, j) = densities_from_parts(&conn, curv.scalar, &ids.k_at(p), &ids.k.partials(p));
    let j_norm = conn.norm_co(&j);
    Ok(ConstraintDensities {
        mu,
        j: j.into(),
        j_norm,
        dec_margin: mu - j_norm,
    })
}

/// `(μ, J)` from pointwise metric data, `k` and its partials; `J` covariant.
pub fn densities_from_parts(
    conn: &Connection<3>,
    scalar_curvature: f64,
    k: &Mat3,
    dk: &[Mat3; 3],
) -> (f64, Vec3) {
    let trk = conn.trace(k);
    let mu = 0.5 * (scalar_curvature + trk * trk - conn.norm2(k));
    // ∂_i tr k = g^{ab} ∂_i k_ab − g^{ac} ∂_i g_cd g^{db} k_ab
    let dtrk: [f64; 3] = std::array::from_fn(|i| {
        (conn.ginv * dk[i]).trace() - (conn.ginv * conn.dg[i] * conn.ginv * k).trace()
    });
    let t = k - conn.g * trk;
    let dt: [Mat3; 3] = std::array::from_fn(|i| dk[i] - conn.g * dtrk[i] - conn.dg[i] * trk);
    (mu, divergence_from_parts(conn, &t, &dt))
}

/// Result of a lattice scan of `μ − |J|`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecScan {
    pub min_margin: f64,
    pub argmin: [f64; 3],
    pub argmin_index: usize,
    pub points: usize,
    pub satisfies_dec: bool,
}

/// Minimum DEC margin over a lattice. Points are evaluated in parallel;
/// the reduction is sequential in lattice order so ties resolve to the
/// lowest index. `tol` absorbs derivative roundoff in the classification.
pub fn dec_margin_scan(ids: &InitialDataSet, lattice: &[Vec3], tol: f64) -> Result<DecScan> {
    if lattice.is_empty() {
        return Err(Error::InvalidInput("empty lattice".into()));
    }
    let margins: Vec<f64> = lattice
        .par_iter()
        .map(|p| constraint_densities(ids, p).map(|c| c.dec_margin))
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, m) in margins.iter().enumerate() {
        if *m < margins[best] {
            best = i;
        }
    }
    Ok(DecScan {
        min_margin: margins[best],
        argmin: lattice[best].into(),
        argmin_index: best,
        points: lattice.len(),
        satisfies_dec: margins[best] >= -tol,
    })
}

/// Pointwise surface geometry relevant to the null expansions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Expansions {
    pub mean_curvature: f64,
    /// `tr_g k − k(ν, ν)`.
    pub surface_trace_k: f64,
    pub theta_plus: f64,
    pub theta_minus: f64,
}

/// `θ± = H ± tr_Σ k` on the level set of `f` through `p`.
pub fn null_expansions<F: ScalarField<3> + ?Sized>(
    ids: &InitialDataSet,
    f: &F,
    p: &Vec3,
) -> Result<Expansions> {
    let conn = Connection::at(ids.metric.as_ref(), p)?;
    let grad = f.grad(p);
    let norm = conn.norm_co(&grad);
    let floor = crate::tensor::gradient_floor(ids.metric.scale());
    if norm <= floor || !norm.is_finite() {
        return Err(Error::DegenerateGradient { norm, floor });
    }
    let nu = conn.raise(&(grad / norm));
    let hess = conn.hessian(&grad, &f.hess(p));
    // H = div ν = (Δf − ∇²f(ν,ν)) / |∇f|
    let mean_curvature = (conn.trace(&hess) - nu.dot(&(hess * nu))) / norm;
    let k = ids.k_at(p);
    let surface_trace_k = conn.trace(&k) - nu.dot(&(k * nu));
    Ok(Expansions {
        mean_curvature,
        surface_trace_k,
        theta_plus: mean_curvature + surface_trace_k,
        theta_minus: mean_curvature - surface_trace_k,
    })
}

/// A closed 2-surface given as a level set.
#[derive(Clone)]
pub enum Surface {
    /// `{r = radius}` in a spherical chart, parametrised by `(θ, φ)`.
    CoordinateSphere { radius: f64 },
    /// `{f = level}` in a Cartesian chart, star-shaped about `center`;
    /// located along rays starting from radius `guess`.
    StarShaped {
        f: Arc<dyn ScalarField<3>>,
        level: f64,
        center: Vec3,
        guess: f64,
    },
}

impl std::fmt::Debug for Surface {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Surface::CoordinateSphere { radius } => write!(fm, "CoordinateSphere({radius})"),
            Surface::StarShaped { level, center, .. } => {
                write!(fm, "StarShaped(level={level}, center={center:?})")
            }
        }
    }
}

impl Surface {
    /// A boundary component of the data set's annulus.
    pub fn boundary(ids: &InitialDataSet, which: Boundary) -> Self {
        let level = ids.domain.level(which);
        match ids.domain.chart {
            RadialChart::Spherical => Surface::CoordinateSphere { radius: level },
            RadialChart::Cartesian { center } => Surface::StarShaped {
                f: ids.domain.boundary_function(),
                level,
                center: Vec3::from(center),
                guess: level,
            },
        }
    }

    fn level_function(&self) -> Arc<dyn ScalarField<3>> {
        match self {
            Surface::CoordinateSphere { .. } => Arc::new(Coordinate(0)),
            Surface::StarShaped { f, .. } => f.clone(),
        }
    }
}

/// A surface with quadrature and the null expansions at the nodes.
#[derive(Clone, Debug)]
pub struct SurfaceSlice {
    pub surface: Surface,
    pub nodes: Vec<Vec3>,
    /// Area weights; they sum to `area`.
    pub weights: Vec<f64>,
    pub mean_curvature: Vec<f64>,
    pub theta_plus: Vec<f64>,
    pub theta_minus: Vec<f64>,
    pub area: f64,
}

impl SurfaceSlice {
    /// Product Gauss-Legendre rule with `n` nodes in `θ` and `2n` in `φ`.
    pub fn build(ids: &InitialDataSet, surface: &Surface, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInput(format!(
                "surface quadrature needs n ≥ 2, got {n}"
            )));
        }
        let th_rule = gauss_legendre_on(n, 0.0, PI);
        let ph_rule = gauss_legendre_on(2 * n, 0.0, 2.0 * PI);
        let f = surface.level_function();
        let mut nodes = Vec::with_capacity(2 * n * n);
        let mut weights = Vec::with_capacity(2 * n * n);
        for &(th, wt) in &th_rule {
            for &(ph, wp) in &ph_rule {
                let (x, tangents) = match surface {
                    Surface::CoordinateSphere { radius } => (
                        Vec3::new(*radius, th, ph),
                        [Vec3::new(0.0, 1.0, 0.0), Vec3::new(0.0, 0.0, 1.0)],
                    ),
                    Surface::StarShaped {
                        f,
                        level,
                        center,
                        guess,
                    } => ray_point(f.as_ref(), *level, center, *guess, th, ph)?,
                };
                let g = ids.metric.components(&x);
                let h00 = tangents[0].dot(&(g * tangents[0]));
                let h01 = tangents[0].dot(&(g * tangents[1]));
                let h11 = tangents[1].dot(&(g * tangents[1]));
                let det = h00 * h11 - h01 * h01;
                if !(det > 0.0) {
                    return Err(Error::SingularMetric { det });
                }
                nodes.push(x);
                weights.push(wt * wp * det.sqrt());
            }
        }
        let exps: Vec<Expansions> = nodes
            .par_iter()
            .map(|x| null_expansions(ids, f.as_ref(), x))
            .collect::<Result<_>>()?;
        let area = weights.iter().sum();
        Ok(Self {
            surface: surface.clone(),
            nodes,
            weights,
            mean_curvature: exps.iter().map(|e| e.mean_curvature).collect(),
            theta_plus: exps.iter().map(|e| e.theta_plus).collect(),
            theta_minus: exps.iter().map(|e| e.theta_minus).collect(),
            area,
        })
    }

    pub fn integrate(&self, values: impl Iterator<Item = f64>) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    /// `∮ θ₊θ₋` or `∮ H²`.
    pub fn mass_integrand(&self, variant: MassVariant) -> f64 {
        match variant {
            MassVariant::Spacetime => self.integrate(
                self.theta_plus
                    .iter()
                    .zip(&self.theta_minus)
                    .map(|(a, b)| a * b),
            ),
            MassVariant::Riemannian => self.integrate(self.mean_curvature.iter().map(|h| h * h)),
        }
    }

    pub fn hawking_mass(&self, variant: MassVariant) -> f64 {
        hawking_mass_from(self.area, self.mass_integrand(variant))
    }
}

/// `(point, [∂_θ X, ∂_φ X])` for the ray crossing of a star-shaped surface.
fn ray_point<F: ScalarField<3> + ?Sized>(
    f: &F,
    level: f64,
    center: &Vec3,
    guess: f64,
    th: f64,
    ph: f64,
) -> Result<(Vec3, [Vec3; 2])> {
    let n = direction(th, ph);
    let n_th = Vec3::new(th.cos() * ph.cos(), th.cos() * ph.sin(), -th.sin());
    let n_ph = Vec3::new(-th.sin() * ph.sin(), th.sin() * ph.cos(), 0.0);
    let mut rho = guess;
    for _ in 0..100 {
        let x = center + rho * n;
        let slope = f.grad(&x).dot(&n);
        if slope == 0.0 || !slope.is_finite() {
            return Err(Error::DegenerateGradient {
                norm: slope.abs(),
                floor: 0.0,
            });
        }
        let step = (f.value(&x) - level) / slope;
        rho -= step;
        if step.abs() <= 1e-15 * rho.abs().max(1.0) {
            break;
        }
    }
    let x = center + rho * n;
    let grad = f.grad(&x);
    let radial = grad.dot(&n);
    if (f.value(&x) - level).abs() > 1e-12 * level.abs().max(1.0) || radial <= 0.0 || rho <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "surface is not star-shaped about {center:?} at (θ, φ) = ({th}, {ph})"
        )));
    }
    // implicit differentiation of f(c + ρ n) = level
    let rho_th = -rho * grad.dot(&n_th) / radial;
    let rho_ph = -rho * grad.dot(&n_ph) / radial;
    Ok((x, [rho_th * n + rho * n_th, rho_ph * n + rho * n_ph]))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MassVariant {
    Riemannian,
    Spacetime,
}

/// `√(|Σ|/16π)(1 − I/16π)`.
pub fn hawking_mass_from(area: f64, integral: f64) -> f64 {
    (area / (16.0 * PI)).sqrt() * (1.0 - integral / (16.0 * PI))
}

/// Hawking mass with its convergence evidence.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MassEstimate {
    pub mass: f64,
    pub area: f64,
    pub integral: f64,
    pub nodes: usize,
    /// Relative change of area and integral between the two levels.
    pub refinement_change: f64,
}

/// Relative tolerance of the two-level refinement gate.
pub const QUADRATURE_TOL: f64 = 1e-6;

/// Hawking mass of `surface` at `n` and `2n` nodes; the finer value is
/// returned when both area and integral agree to [`QUADRATURE_TOL`].
/// The integral is compared on the scale `max(|I|, 16π)` on which it
/// enters the mass.
pub fn hawking_mass(
    ids: &InitialDataSet,
    surface: &Surface,
    variant: MassVariant,
    n: usize,
) -> Result<MassEstimate> {
    let coarse = SurfaceSlice::build(ids, surface, n)?;
    let fine = SurfaceSlice::build(ids, surface, 2 * n)?;
    let (ic, i_f) = (coarse.mass_integrand(variant), fine.mass_integrand(variant));
    let change_area = (coarse.area - fine.area).abs() / fine.area;
    let change_int = (ic - i_f).abs() / i_f.abs().max(16.0 * PI);
    let change = change_area.max(change_int);
    if !(change <= QUADRATURE_TOL) {
        return Err(Error::QuadratureUnderResolved {
            change,
            tol: QUADRATURE_TOL,
        });
    }
    Ok(MassEstimate {
        mass: hawking_mass_from(fine.area, i_f),
        area: fine.area,
        integral: i_f,
        nodes: fine.nodes.len(),
        refinement_change: change,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::charts::{
        Flat, FlatSpherical, ScaledMetric, SchwarzschildSpatial, ZeroTensor,
    };

    fn flat_k_eq_g() -> InitialDataSet {
        InitialDataSet::new(
            "k=g",
            Flat::<3>,
            ScaledMetric {
                metric: Flat::<3>,
                factor: 1.0,
            },
            Annulus::cartesian(1.0, 2.0),
        )
    }

    #[test]
    fn vacuum_flat_constraints_vanish() {
        let ids = InitialDataSet::new("flat", Flat::<3>, ZeroTensor, Annulus::cartesian(1.0, 2.0));
        let c = constraint_densities(&ids, &Vec3::new(1.0, 0.2, 0.3)).unwrap();
        assert_eq!(c.mu, 0.0);
        assert_eq!(c.j_norm, 0.0);
    }

    #[test]
    fn umbilic_k_has_margin_three() {
        let ids = flat_k_eq_g();
        let scan = dec_margin_scan(&ids, &ids.domain.lattice(3, 4, 5), 1e-8).unwrap();
        assert!((scan.min_margin - 3.0).abs() < 1e-12);
        assert!(scan.satisfies_dec);
    }

    #[test]
    fn schwarzschild_slice_is_vacuum() {
        let ids = InitialDataSet::new(
            "schw",
            SchwarzschildSpatial::new(1.0),
            ZeroTensor,
            Annulus::spherical(3.0, 6.0),
        );
        let scan = dec_margin_scan(&ids, &ids.domain.lattice(3, 3, 3), 1e-6).unwrap();
        assert!(scan.min_margin.abs() < 1e-6, "{}", scan.min_margin);
    }

    #[test]
    fn expansions_of_spheres() {
        let flat = InitialDataSet::new(
            "flat",
            FlatSpherical,
            ZeroTensor,
            Annulus::spherical(1.0, 3.0),
        );
        let e = null_expansions(&flat, &Coordinate(0), &Vec3::new(2.0, 1.0, 0.5)).unwrap();
        assert!((e.theta_plus - 1.0).abs() < 1e-14 && (e.theta_minus - 1.0).abs() < 1e-14);

        let ids = flat_k_eq_g();
        let e = null_expansions(&ids, &Radius, &Vec3::new(0.0, 0.6, 0.8)).unwrap();
        assert!((e.theta_plus - 4.0).abs() < 1e-14 && e.theta_minus.abs() < 1e-14);

        let schw = InitialDataSet::new(
            "schw",
            SchwarzschildSpatial::new(1.0),
            ZeroTensor,
            Annulus::spherical(2.5, 6.0),
        );
        let e = null_expansions(&schw, &Coordinate(0), &Vec3::new(2.0 + 1e-12, 1.0, 0.5)).unwrap();
        assert!(e.theta_plus.abs() < 1e-5 && e.theta_minus.abs() < 1e-5);
    }

    #[test]
    fn hawking_masses() {
        let flat = InitialDataSet::new(
            "flat",
            FlatSpherical,
            ZeroTensor,
            Annulus::spherical(1.0, 3.0),
        );
        for r in [0.5, 2.0, 7.0] {
            let m = hawking_mass(
                &flat,
                &Surface::CoordinateSphere { radius: r },
                MassVariant::Riemannian,
                8,
            )
            .unwrap();
            assert!(m.mass.abs() < 1e-12, "r={r}: {}", m.mass);
        }
        let schw = InitialDataSet::new(
            "schw",
            SchwarzschildSpatial::new(1.0),
            ZeroTensor,
            Annulus::spherical(3.0, 6.0),
        );
        let m = hawking_mass(
            &schw,
            &Surface::CoordinateSphere { radius: 4.0 },
            MassVariant::Spacetime,
            8,
        )
        .unwrap();
        assert!((m.mass - 1.0).abs() < 1e-10, "{}", m.mass);

        let ids = flat_k_eq_g();
        let unit = Surface::StarShaped {
            f: Arc::new(Radius),
            level: 1.0,
            center: Vec3::zeros(),
            guess: 1.0,
        };
        let m = hawking_mass(&ids, &unit, MassVariant::Spacetime, 8).unwrap();
        assert!((m.mass - 0.5).abs() < 1e-12, "{}", m.mass);
    }

    #[test]
    fn star_shaped_weights_sum_to_area() {
        let ids = InitialDataSet::new("flat", Flat::<3>, ZeroTensor, Annulus::cartesian(1.0, 2.0));
        let off = Surface::StarShaped {
            f: ids.domain.boundary_function(),
            level: 1.5,
            center: Vec3::new(0.1, 0.0, -0.2),
            guess: 1.5,
        };
        let s = SurfaceSlice::build(&ids, &off, 16).unwrap();
        assert!(s.weights.iter().all(|w| *w > 0.0));
        assert!((s.area - 4.0 * PI * 2.25).abs() < 1e-10);
    }

    #[test]
    fn coarse_quadrature_is_refused() {
        let ids = InitialDataSet::new("flat", Flat::<3>, ZeroTensor, Annulus::cartesian(1.0, 2.0));
        let ellipsoid = Surface::StarShaped {
            f: Arc::new(crate::tensor::fields::QuadraticForm::new(
                Mat3::from_diagonal(&Vec3::new(1.0, 4.0, 25.0)),
            )),
            level: 1.0,
            center: Vec3::zeros(),
            guess: 0.5,
        };
        let err = hawking_mass(&ids, &ellipsoid, MassVariant::Riemannian, 2);
        assert!(matches!(err, Err(Error::QuadratureUnderResolved { .. })));
    }
}
