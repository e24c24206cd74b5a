//! Closed-form initial data: graph slices `t = f(x)` of static spacetimes,
//! the Minkowski null pair `u = r + t`, `v = r − t`, and the Schwarzschild
//! null fields and tortoise pair.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{SMatrix, Vector4};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::identity::{modified_hessians_from, null_coupling, LevelData};
use crate::initial_data::{null_expansions, Annulus, InitialDataSet, RadialChart};
use crate::tensor::charts::{Minkowski, SchwarzschildStatic};
use crate::tensor::fields::{Combination, CoordinateFunction, Linear, Radius};
use crate::tensor::{ChartedMetric, Connection, Mat, Mat3, ScalarField, SymTensorField, Vec3};

pub type Vec4 = Vector4<f64>;
type Frame = SMatrix<f64, 4, 3>;

/// Smallest admissible `−ĝ(n, n)` for the conormal `n = d(t − f)`; equals
/// `1 − (1 − 10⁻⁶)²` for Minkowski graphs.
pub const SPACELIKE_MARGIN: f64 = 1.999999e-6;

/// The hypersurface `t = f(x)` of a spacetime whose coordinates are
/// `(t, x¹, x², x³)`.
#[derive(Clone)]
pub struct GraphSlice {
    pub ambient: Arc<dyn ChartedMetric<4>>,
    pub f: Arc<dyn ScalarField<3>>,
}

impl GraphSlice {
    fn embed(&self, x: &Vec3) -> Vec4 {
        Vec4::new(self.f.value(x), x[0], x[1], x[2])
    }

    /// Columns `e_i = ∂_i X = (∂_i f, δ_i)`.
    fn frame(&self, x: &Vec3) -> Frame {
        let df = self.f.grad(x);
        let mut e = Frame::zeros();
        for i in 0..3 {
            e[(0, i)] = df[i];
            e[(i + 1, i)] = 1.0;
        }
        e
    }

    /// `−ĝ^{μν} n_μ n_ν` for `n = (1, −∂f)`; positive on spacelike slices.
    pub fn spacelike_measure(&self, x: &Vec3) -> Result<f64> {
        let big_x = self.embed(x);
        let (_, ginv) = crate::tensor::det_inverse(&self.ambient.components(&big_x))
            .ok_or(Error::SingularMetric { det: 0.0 })?;
        let n = self.conormal(x);
        Ok(-n.dot(&(ginv * n)))
    }

    fn conormal(&self, x: &Vec3) -> Vec4 {
        let df = self.f.grad(x);
        Vec4::new(1.0, -df[0], -df[1], -df[2])
    }
}

/// Induced metric of a [`GraphSlice`], with exact partials by the chain rule.
pub struct InducedMetric(pub Arc<GraphSlice>);

impl ChartedMetric<3> for InducedMetric {
    fn components(&self, x: &Vec3) -> Mat3 {
        let e = self.0.frame(x);
        e.transpose() * self.0.ambient.components(&self.0.embed(x)) * e
    }
    fn partials(&self, x: &Vec3) -> [Mat3; 3] {
        let s = &self.0;
        let e = s.frame(x);
        let big_x = s.embed(x);
        let gh = s.ambient.components(&big_x);
        let dgh = s.ambient.partials(&big_x);
        let hf = s.f.hess(x);
        std::array::from_fn(|k| {
            let mut de = Frame::zeros();
            for i in 0..3 {
                de[(0, i)] = hf[(k, i)];
            }
            let mut along = Mat::<4>::zeros();
            for l in 0..4 {
                along += dgh[l] * e[(l, k)];
            }
            de.transpose() * gh * e + e.transpose() * along * e + e.transpose() * gh * de
        })
    }
    fn scale(&self) -> f64 {
        self.0.ambient.scale()
    }
    fn contains(&self, x: &Vec3) -> bool {
        self.0.ambient.contains(&self.0.embed(x))
            && self.0.spacelike_measure(x).is_ok_and(|s| s > 0.0)
    }
}

/// Second fundamental form `k_ij = N_μ(∂_i e_j^μ + Γ̂^μ_αβ e_i^α e_j^β)` with
/// `N` the future unit normal; `k = −∂²f/√(1 − |∂f|²)` in Minkowski. This
/// sign makes `∇̄²₊u = ∇̄²₋v = 0` for `u = r + t`, `v = r − t`.
pub struct InducedK(pub Arc<GraphSlice>);

impl SymTensorField<3> for InducedK {
    fn value(&self, x: &Vec3) -> Mat3 {
        let s = &self.0;
        let big_x = s.embed(x);
        let e = s.frame(x);
        let n = s.conormal(x);
        let lambda = match s.spacelike_measure(x) {
            Ok(m) if m > 0.0 => 1.0 / m.sqrt(),
            _ => f64::NAN,
        };
        let gamma = match Connection::at(s.ambient.as_ref(), &big_x) {
            Ok(c) => c.gamma,
            Err(_) => return Mat3::repeat(f64::NAN),
        };
        let hf = s.f.hess(x);
        // N_μ = −λ n_μ, and n_μ ∂_i e_j^μ = ∂_i∂_j f
        let mut k = hf;
        for (mu, g) in gamma.iter().enumerate() {
            k += e.transpose() * g * e * n[mu];
        }
        -k * lambda
    }
}

/// Domain points sampled for precondition checks: a cell-centred interior
/// lattice plus both boundary spheres.
fn precondition_samples(domain: &Annulus) -> Vec<Vec3> {
    let n = 8;
    let mut pts = domain.lattice(n, n, n);
    for r in [domain.inner, domain.outer] {
        for j in 0..n {
            let th = PI * (j as f64 + 0.5) / n as f64;
            for k in 0..n {
                pts.push(domain.point(r, th, 2.0 * PI * (k as f64 + 0.5) / n as f64));
            }
        }
    }
    pts
}

fn check_spacelike(slice: &GraphSlice, samples: &[Vec3]) -> Result<()> {
    for x in samples {
        let m = slice.spacelike_measure(x)?;
        if !(m >= SPACELIKE_MARGIN) {
            return Err(Error::NotSpacelike {
                detail: format!("−ĝ(n,n) = {m:.3e} at {:?}", x.as_slice()),
            });
        }
    }
    Ok(())
}

fn induce(name: &str, slice: GraphSlice, domain: Annulus) -> InitialDataSet {
    let slice = Arc::new(slice);
    InitialDataSet::new(name, InducedMetric(slice.clone()), InducedK(slice), domain)
}

/// A spacelike graph `t = f(x)` in Minkowski space with its induced data.
#[derive(Clone)]
pub struct MinkowskiGraphSlice {
    pub f: Arc<dyn ScalarField<3>>,
    pub ids: InitialDataSet,
}

/// Induced data of `t = f(x)` over a Cartesian annulus.
pub fn induce_minkowski_graph(
    name: &str,
    f: Arc<dyn ScalarField<3>>,
    domain: Annulus,
) -> Result<MinkowskiGraphSlice> {
    if !matches!(domain.chart, RadialChart::Cartesian { .. }) {
        return Err(Error::InvalidInput(
            "Minkowski graphs live on Cartesian annuli".into(),
        ));
    }
    let slice = GraphSlice {
        ambient: Arc::new(Minkowski),
        f: f.clone(),
    };
    check_spacelike(&slice, &precondition_samples(&domain))?;
    Ok(MinkowskiGraphSlice {
        f,
        ids: induce(name, slice, domain),
    })
}

/// `t = 0`.
pub fn minkowski_t0(domain: Annulus) -> Result<MinkowskiGraphSlice> {
    induce_minkowski_graph(
        "minkowski-t0",
        Arc::new(Linear::new(Vec3::zeros(), 0.0)),
        domain,
    )
}

/// `t = a·x`.
pub fn minkowski_boost(a: f64, domain: Annulus) -> Result<MinkowskiGraphSlice> {
    induce_minkowski_graph(
        "minkowski-boost",
        Arc::new(Linear::new(Vec3::new(a, 0.0, 0.0), 0.0)),
        domain,
    )
}

/// `t = c|x|²`.
pub fn minkowski_quadratic(c: f64, domain: Annulus) -> Result<MinkowskiGraphSlice> {
    let f = crate::tensor::fields::QuadraticForm::new(Mat3::identity() * c);
    induce_minkowski_graph("minkowski-graph", Arc::new(f), domain)
}

/// A pair of functions on a slice.
#[derive(Clone)]
pub struct NullPair {
    pub u: Arc<dyn ScalarField<3>>,
    pub v: Arc<dyn ScalarField<3>>,
}

fn check_positive(pair: &NullPair, samples: &[Vec3]) -> Result<()> {
    for x in samples {
        for (what, f) in [("u", &pair.u), ("v", &pair.v)] {
            let value = f.value(x);
            if !(value > 0.0) {
                return Err(Error::NonPositive { what, value });
            }
        }
    }
    Ok(())
}

/// `u = |x| + f`, `v = |x| − f` on a Minkowski graph.
pub fn minkowski_null_pair(slice: &MinkowskiGraphSlice) -> Result<NullPair> {
    let pair = NullPair {
        u: Arc::new(
            Combination::new(0.0)
                .with(1.0, Radius)
                .with_shared(1.0, slice.f.clone()),
        ),
        v: Arc::new(
            Combination::new(0.0)
                .with(1.0, Radius)
                .with_shared(-1.0, slice.f.clone()),
        ),
    };
    check_positive(&pair, &precondition_samples(&slice.ids.domain))?;
    Ok(pair)
}

/// Lattice maxima of the modified Hessians of a pair.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NullPairReport {
    pub points: usize,
    /// `max |∇̄²₊u|_g`.
    pub max_plus: f64,
    /// `max |∇̄²₋v|_g`.
    pub max_minus: f64,
    /// Range of `|∇u||∇v| + ⟨∇u,∇v⟩`.
    pub coupling_min: f64,
    pub coupling_max: f64,
}

impl NullPairReport {
    pub fn max_residual(&self) -> f64 {
        self.max_plus.max(self.max_minus)
    }
}

/// Evaluates both modified Hessians over a lattice. A large residual is a
/// report outcome; errors are reserved for degenerate input.
pub fn verify_null_pair(
    ids: &InitialDataSet,
    pair: &NullPair,
    lattice: &[Vec3],
) -> Result<NullPairReport> {
    let scale = ids.metric.scale();
    let mut rep = NullPairReport {
        points: lattice.len(),
        max_plus: 0.0,
        max_minus: 0.0,
        coupling_min: f64::INFINITY,
        coupling_max: f64::NEG_INFINITY,
    };
    for p in lattice {
        let conn = Connection::at(ids.metric.as_ref(), p)?;
        let k = ids.k_at(p);
        let lu = LevelData::at(&conn, pair.u.as_ref(), p, scale)?;
        let lv = LevelData::at(&conn, pair.v.as_ref(), p, scale)?;
        let mh = modified_hessians_from(&conn, &k, &lu, &lv, 1.0)?;
        rep.max_plus = rep.max_plus.max(conn.norm2(&mh.plus).sqrt());
        rep.max_minus = rep.max_minus.max(conn.norm2(&mh.minus).sqrt());
        let q = null_coupling(&conn, &lu, &lv);
        rep.coupling_min = rep.coupling_min.min(q);
        rep.coupling_max = rep.coupling_max.max(q);
    }
    Ok(rep)
}

/// A graph slice of Schwarzschild in static coordinates.
#[derive(Clone)]
pub struct SchwarzschildSlice {
    pub mass: f64,
    /// Time function `t = f(r, θ, φ)`.
    pub time: Arc<dyn ScalarField<3>>,
    pub ids: InitialDataSet,
}

/// Time function `t = c·r`.
pub fn tilted_time(c: f64) -> Arc<dyn ScalarField<3>> {
    Arc::new(Linear::new(Vec3::new(c, 0.0, 0.0), 0.0))
}

/// Induced data on `t = f` over a spherical annulus `r ∈ [inner, outer]`.
pub fn schwarzschild_static_data(
    mass: f64,
    time: Arc<dyn ScalarField<3>>,
    domain: Annulus,
) -> Result<SchwarzschildSlice> {
    if mass < 0.0 {
        return Err(Error::NonPositive {
            what: "mass",
            value: mass,
        });
    }
    if domain.chart != RadialChart::Spherical {
        return Err(Error::InvalidInput(
            "Schwarzschild slices live on spherical annuli".into(),
        ));
    }
    if domain.inner <= 2.0 * mass {
        return Err(Error::HorizonContact {
            r: domain.inner,
            two_m: 2.0 * mass,
        });
    }
    let slice = GraphSlice {
        ambient: Arc::new(SchwarzschildStatic::new(mass)),
        f: time.clone(),
    };
    check_spacelike(&slice, &precondition_samples(&domain))?;
    let name = format!("schwarzschild-m{mass}");
    Ok(SchwarzschildSlice {
        mass,
        time,
        ids: induce(&name, slice, domain),
    })
}

/// Maxima of the null-field identity residuals for `X` and `Y`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NullFieldsReport {
    pub checks: usize,
    pub max_x: f64,
    pub max_y: f64,
}

fn orthogonal_to_rt(a: &Vec4) -> bool {
    a[0].abs() <= 1e-14 * a.norm() && a[1].abs() <= 1e-14 * a.norm()
}

/// Residual of `∇̂_α X_β = (φ²/r) ĝ_αβ − (X_α Y_β + X_β Y_α)/2r` and of the
/// same equation for `Y`, where `X = dr + φ² dt` and `Y = dr − φ² dt`, at
/// spacetime points `(t, r, θ, φ)` and direction pairs `(a, b)`.
pub fn schwarzschild_null_fields_check(
    mass: f64,
    points: &[Vec4],
    directions: &[(Vec4, Vec4)],
) -> Result<NullFieldsReport> {
    let st = SchwarzschildStatic::new(mass);
    for (a, b) in directions {
        if !orthogonal_to_rt(a) && !orthogonal_to_rt(b) {
            return Err(Error::InadmissibleDirections);
        }
    }
    let mut rep = NullFieldsReport {
        checks: 0,
        max_x: 0.0,
        max_y: 0.0,
    };
    for p in points {
        let r = p[1];
        if r <= 2.0 * mass {
            return Err(Error::HorizonContact {
                r,
                two_m: 2.0 * mass,
            });
        }
        let conn = Connection::at(&st, p)?;
        let phi2 = st.phi2(r);
        let dphi2 = 2.0 * mass / (r * r);
        for sign in [1.0, -1.0] {
            let field = Vec4::new(sign * phi2, 1.0, 0.0, 0.0);
            let other = Vec4::new(-sign * phi2, 1.0, 0.0, 0.0);
            // ∇̂_α W_β = ∂_α W_β − Γ^μ_αβ W_μ; only ∂_r W_t is nonzero
            let mut cov = Mat::<4>::zeros();
            cov[(1, 0)] = sign * dphi2;
            for (mu, g) in conn.gamma.iter().enumerate() {
                cov -= g * field[mu];
            }
            let rhs = conn.g * (phi2 / r)
                - (field * other.transpose() + other * field.transpose()) / (2.0 * r);
            for (a, b) in directions {
                let res = (a.transpose() * (cov - rhs) * b)[(0, 0)].abs();
                if sign > 0.0 {
                    rep.max_x = rep.max_x.max(res);
                } else {
                    rep.max_y = rep.max_y.max(res);
                }
            }
        }
        rep.checks += directions.len();
    }
    Ok(rep)
}

/// Integrability of `X = dr + φ² dt` and `Y = dr − φ² dt`: the Frobenius
/// defect `W ∧ dW` and the curl of `φ⁻² W`, both expected to vanish since
/// `φ⁻² X = d(r* + t)` and `φ⁻² Y = d(r* − t)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntegrabilityReport {
    pub max_frobenius: f64,
    pub max_curl_rescaled: f64,
}

pub fn schwarzschild_integrability(mass: f64, points: &[Vec4]) -> Result<IntegrabilityReport> {
    let st = SchwarzschildStatic::new(mass);
    let mut rep = IntegrabilityReport {
        max_frobenius: 0.0,
        max_curl_rescaled: 0.0,
    };
    for p in points {
        let r = p[1];
        if r <= 2.0 * mass {
            return Err(Error::HorizonContact {
                r,
                two_m: 2.0 * mass,
            });
        }
        for sign in [1.0, -1.0] {
            let w = |q: &Vec4| Vec4::new(sign * st.phi2(q[1]), 1.0, 0.0, 0.0);
            let rescaled = |q: &Vec4| w(q) / st.phi2(q[1]);
            let dw = crate::tensor::oracle::fd_partials(w, p, 1e-5 * st.scale());
            let dr = crate::tensor::oracle::fd_partials(rescaled, p, 1e-5 * st.scale());
            let wp = w(p);
            for a in 0..4 {
                for b in 0..4 {
                    let curl = dr[a][b] - dr[b][a];
                    rep.max_curl_rescaled = rep.max_curl_rescaled.max(curl.abs());
                    for c in 0..4 {
                        // W_[a ∂_b W_c]
                        let f = wp[a] * (dw[b][c] - dw[c][b])
                            + wp[b] * (dw[c][a] - dw[a][c])
                            + wp[c] * (dw[a][b] - dw[b][a]);
                        rep.max_frobenius = rep.max_frobenius.max(f.abs());
                    }
                }
            }
        }
    }
    Ok(rep)
}

/// Tortoise coordinate `r* = r + 2m ln(r/2m − 1)` with its first two
/// derivatives `1/φ²` and `−(2m/r²)/φ⁴`.
pub fn tortoise(mass: f64, r: f64) -> (f64, f64, f64) {
    let phi2 = 1.0 - 2.0 * mass / r;
    (
        r + 2.0 * mass * (r / (2.0 * mass) - 1.0).ln(),
        1.0 / phi2,
        -(2.0 * mass / (r * r)) / (phi2 * phi2),
    )
}

/// `u = r* + f`, `v = r* − f` on a Schwarzschild slice.
pub fn tortoise_pair(slice: &SchwarzschildSlice) -> Result<NullPair> {
    let m = slice.mass;
    if m == 0.0 {
        return Err(Error::MassZeroTortoise);
    }
    let d = slice.ids.domain;
    if d.inner / (2.0 * m) - 1.0 <= 1e-6 {
        return Err(Error::HorizonContact {
            r: d.inner,
            two_m: 2.0 * m,
        });
    }
    let rstar = Arc::new(CoordinateFunction::new(0, move |r| tortoise(m, r)));
    Ok(NullPair {
        u: Arc::new(
            Combination::new(0.0)
                .with_shared(1.0, rstar.clone())
                .with_shared(1.0, slice.time.clone()),
        ),
        v: Arc::new(
            Combination::new(0.0)
                .with_shared(1.0, rstar)
                .with_shared(-1.0, slice.time.clone()),
        ),
    })
}

/// Maxima of the four tortoise-pair residuals.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TortoiseReport {
    pub points: usize,
    /// `θ₊(Σ_u)|∇u| − φ²Q/r`.
    pub expansion_plus: f64,
    /// `θ₋(Σ_v)|∇v| − φ²Q/r`.
    pub expansion_minus: f64,
    pub hessian_u: f64,
    pub hessian_v: f64,
}

impl TortoiseReport {
    pub fn max(&self) -> f64 {
        self.expansion_plus
            .max(self.expansion_minus)
            .max(self.hessian_u)
            .max(self.hessian_v)
    }
}

/// Checks, with `Q = |∇u||∇v| + ⟨∇u,∇v⟩`,
/// `θ₊(Σ_u)|∇u| = θ₋(Σ_v)|∇v| = φ²Q/r` and
/// `∇²u = −k|∇u| + (φ²Q/2r) g − (m/r²) du⊗du − (φ²/2r)(du⊗dv + dv⊗du)`,
/// `∇²v = +k|∇v| + (φ²Q/2r) g − (m/r²) dv⊗dv − (φ²/2r)(du⊗dv + dv⊗du)`.
pub fn tortoise_pair_check(slice: &SchwarzschildSlice, lattice: &[Vec3]) -> Result<TortoiseReport> {
    let pair = tortoise_pair(slice)?;
    let ids = &slice.ids;
    let m = slice.mass;
    let scale = ids.metric.scale();
    let mut rep = TortoiseReport {
        points: lattice.len(),
        expansion_plus: 0.0,
        expansion_minus: 0.0,
        hessian_u: 0.0,
        hessian_v: 0.0,
    };
    for p in lattice {
        let r = p[0];
        let phi2 = 1.0 - 2.0 * m / r;
        let conn = Connection::at(ids.metric.as_ref(), p)?;
        let k = ids.k_at(p);
        let lu = LevelData::at(&conn, pair.u.as_ref(), p, scale)?;
        let lv = LevelData::at(&conn, pair.v.as_ref(), p, scale)?;
        let q = null_coupling(&conn, &lu, &lv);
        let target = phi2 * q / r;
        let eu = null_expansions(ids, pair.u.as_ref(), p)?;
        let ev = null_expansions(ids, pair.v.as_ref(), p)?;
        rep.expansion_plus = rep
            .expansion_plus
            .max((eu.theta_plus * lu.norm - target).abs());
        rep.expansion_minus = rep
            .expansion_minus
            .max((ev.theta_minus * lv.norm - target).abs());
        let cross = (lu.d * lv.d.transpose() + lv.d * lu.d.transpose()) * (phi2 / (2.0 * r));
        let common = conn.g * (target / 2.0) - cross;
        let res_u = lu.hess + k * lu.norm - common + lu.d * lu.d.transpose() * (m / (r * r));
        let res_v = lv.hess - k * lv.norm - common + lv.d * lv.d.transpose() * (m / (r * r));
        rep.hessian_u = rep.hessian_u.max(conn.norm2(&res_u).sqrt());
        rep.hessian_v = rep.hessian_v.max(conn.norm2(&res_v).sqrt());
    }
    Ok(rep)
}
