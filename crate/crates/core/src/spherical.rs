//! Spherically symmetric data in the distance gauge `g = dr² + ρ(r)² g_{S²}`,
//! `k = kn dr² + kt ρ² g_{S²}`, and the decoupled `a = 1` flow built from
//! rescaled inverse mean curvature flow.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::initial_data::{Annulus, InitialDataSet};
use crate::quadrature::cumulative_simpson;
use crate::spline::CubicSpline;
use crate::tensor::{ChartedMetric, Mat3, SymTensorField, Vec3};

pub const DEFAULT_NODES: usize = 2001;
pub const HORIZON_TOL: f64 = 1e-10;
pub const MONOTONE_TOL: f64 = 1e-8;
/// `kn` and `kt` closer than this count as `k = ξ g`.
pub const UMBILIC_TOL: f64 = 1e-10;

/// `r ↦ (ρ, ρ′, ρ″)`.
pub type AreaRadius = Arc<dyn Fn(f64) -> [f64; 3] + Send + Sync>;
/// `r ↦ (value, derivative)`.
pub type RadialFunction = Arc<dyn Fn(f64) -> [f64; 2] + Send + Sync>;

#[derive(Clone)]
pub struct RadialIDS {
    pub name: String,
    pub r_range: [f64; 2],
    pub rho: AreaRadius,
    pub kn: RadialFunction,
    pub kt: RadialFunction,
    pub nodes: usize,
}

impl fmt::Debug for RadialIDS {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialIDS")
            .field("name", &self.name)
            .field("r_range", &self.r_range)
            .field("nodes", &self.nodes)
            .finish_non_exhaustive()
    }
}

impl RadialIDS {
    pub fn new(
        name: impl Into<String>,
        r_range: [f64; 2],
        rho: AreaRadius,
        kn: RadialFunction,
        kt: RadialFunction,
        nodes: usize,
    ) -> Result<Self> {
        if !(r_range[0] < r_range[1]) || !r_range.iter().all(|r| r.is_finite()) {
            return Err(Error::InvalidInput(format!("radial range {r_range:?}")));
        }
        if nodes < 5 {
            return Err(Error::InvalidInput(format!(
                "{nodes} radial nodes, need at least 5"
            )));
        }
        let data = Self {
            name: name.into(),
            r_range,
            rho,
            kn,
            kt,
            nodes,
        };
        for r in data.grid() {
            let rho = (data.rho)(r)[0];
            if !(rho > 0.0) {
                return Err(Error::NonPositive {
                    what: "area radius",
                    value: rho,
                });
            }
        }
        Ok(data)
    }

    /// Data from sampled `ρ, kn, kt` on increasing `r`, through natural cubic
    /// splines.
    pub fn from_table(name: impl Into<String>, table: &RadialTable, nodes: usize) -> Result<Self> {
        let rho = CubicSpline::new(table.r.clone(), table.rho.clone())?;
        let kn = CubicSpline::new(table.r.clone(), table.kn.clone())?;
        let kt = CubicSpline::new(table.r.clone(), table.kt.clone())?;
        let range = rho.range();
        Self::new(
            name,
            range,
            Arc::new(move |r| rho.eval(r)),
            Arc::new(move |r| {
                let [f, d, _] = kn.eval(r);
                [f, d]
            }),
            Arc::new(move |r| {
                let [f, d, _] = kt.eval(r);
                [f, d]
            }),
            nodes,
        )
    }

    pub fn grid(&self) -> Vec<f64> {
        uniform(self.r_range[0], self.r_range[1], self.nodes)
    }

    /// `k → −k`.
    pub fn time_reversed(&self) -> Self {
        let (kn, kt) = (self.kn.clone(), self.kt.clone());
        Self {
            name: format!("{}-reversed", self.name),
            kn: Arc::new(move |r| kn(r).map(|x| -x)),
            kt: Arc::new(move |r| kt(r).map(|x| -x)),
            ..self.clone()
        }
    }

    /// The same data as a 3-chart in `(r, θ, φ)`.
    pub fn to_initial_data(&self) -> InitialDataSet {
        InitialDataSet::new(
            self.name.clone(),
            WarpedMetric {
                rho: self.rho.clone(),
            },
            WarpedK {
                rho: self.rho.clone(),
                kn: self.kn.clone(),
                kt: self.kt.clone(),
            },
            Annulus::spherical(self.r_range[0], self.r_range[1]),
        )
    }

    fn check_range(&self, r: f64) -> Result<()> {
        let slack = 1e-12 * (self.r_range[1] - self.r_range[0]);
        if r < self.r_range[0] - slack || r > self.r_range[1] + slack || !r.is_finite() {
            return Err(Error::OutOfRange {
                r,
                lo: self.r_range[0],
                hi: self.r_range[1],
            });
        }
        Ok(())
    }
}

fn uniform(a: f64, b: f64, n: usize) -> Vec<f64> {
    let h = (b - a) / (n - 1) as f64;
    (0..n)
        .map(|i| if i + 1 == n { b } else { a + h * i as f64 })
        .collect()
}

/// `dr² + ρ² g_{S²}` in `(r, θ, φ)`.
#[derive(Clone)]
pub struct WarpedMetric {
    pub rho: AreaRadius,
}

impl ChartedMetric<3> for WarpedMetric {
    fn components(&self, p: &Vec3) -> Mat3 {
        let rho = (self.rho)(p[0])[0];
        let s = p[1].sin();
        Mat3::from_diagonal(&Vec3::new(1.0, rho * rho, rho * rho * s * s))
    }
    fn partials(&self, p: &Vec3) -> [Mat3; 3] {
        let [rho, d1, _] = (self.rho)(p[0]);
        let (s, c) = p[1].sin_cos();
        let a = 2.0 * rho * d1;
        [
            Mat3::from_diagonal(&Vec3::new(0.0, a, a * s * s)),
            Mat3::from_diagonal(&Vec3::new(0.0, 0.0, rho * rho * 2.0 * s * c)),
            Mat3::zeros(),
        ]
    }
    fn second_partials(&self, p: &Vec3) -> Option<[[Mat3; 3]; 3]> {
        let [rho, d1, d2] = (self.rho)(p[0]);
        let (s, c) = p[1].sin_cos();
        let rr = 2.0 * d1 * d1 + 2.0 * rho * d2;
        let d = |z: f64| Mat3::from_diagonal(&Vec3::new(0.0, 0.0, z));
        let rt = d(2.0 * rho * d1 * 2.0 * s * c);
        let tt = d(rho * rho * 2.0 * (2.0 * p[1]).cos());
        let z = Mat3::zeros();
        Some([
            [Mat3::from_diagonal(&Vec3::new(0.0, rr, rr * s * s)), rt, z],
            [rt, tt, z],
            [z, z, z],
        ])
    }
    fn contains(&self, p: &Vec3) -> bool {
        p[1] > 0.0 && p[1] < PI
    }
}

/// `kn dr² + kt ρ² g_{S²}` in `(r, θ, φ)`.
#[derive(Clone)]
pub struct WarpedK {
    pub rho: AreaRadius,
    pub kn: RadialFunction,
    pub kt: RadialFunction,
}

impl SymTensorField<3> for WarpedK {
    fn value(&self, p: &Vec3) -> Mat3 {
        let rho = (self.rho)(p[0])[0];
        let (kn, kt) = ((self.kn)(p[0])[0], (self.kt)(p[0])[0]);
        let s = p[1].sin();
        Mat3::from_diagonal(&Vec3::new(kn, kt * rho * rho, kt * rho * rho * s * s))
    }
    fn partials(&self, p: &Vec3) -> [Mat3; 3] {
        let [rho, d1, _] = (self.rho)(p[0]);
        let [kn, dkn] = (self.kn)(p[0]);
        let [kt, dkt] = (self.kt)(p[0]);
        let _ = kn;
        let (s, c) = p[1].sin_cos();
        let a = dkt * rho * rho + 2.0 * kt * rho * d1;
        [
            Mat3::from_diagonal(&Vec3::new(dkn, a, a * s * s)),
            Mat3::from_diagonal(&Vec3::new(0.0, 0.0, kt * rho * rho * 2.0 * s * c)),
            Mat3::zeros(),
        ]
    }
}

/// Sampled radial profiles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadialTable {
    pub r: Vec<f64>,
    pub rho: Vec<f64>,
    pub kn: Vec<f64>,
    pub kt: Vec<f64>,
}

/// Built-in radial data families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RadialPreset {
    /// `ρ = r`, `k = 0`.
    Flat,
    /// `ρ = r`, `k = ξ g`.
    Umbilic { xi: f64 },
    /// Time-symmetric Schwarzschild; `r` is the distance from the throat.
    Schwarzschild { mass: f64 },
    /// Schwarzschild geometry with `kn = kt = ε/(1 + 1.25 ε r)`, which keeps
    /// `μ − |J| = ½ kt² > 0`.
    DecPerturbed { mass: f64, epsilon: f64 },
    /// `ρ = r + b sin r`, `k = 0`.
    Rippled { amplitude: f64 },
    /// The graph `t = c ln R` in Minkowski space. The range is given in the
    /// Euclidean radius `R > c` and converted to distance from `R = c`.
    MinkowskiLog { c: f64 },
}

impl RadialPreset {
    pub fn build(&self, r_range: [f64; 2], nodes: usize) -> Result<RadialIDS> {
        let zero: RadialFunction = Arc::new(|_| [0.0, 0.0]);
        let flat: AreaRadius = Arc::new(|r| [r, 1.0, 0.0]);
        match *self {
            RadialPreset::Flat => RadialIDS::new("flat", r_range, flat, zero.clone(), zero, nodes),
            RadialPreset::Umbilic { xi } => {
                let k: RadialFunction = Arc::new(move |_| [xi, 0.0]);
                RadialIDS::new(format!("umbilic-{xi}"), r_range, flat, k.clone(), k, nodes)
            }
            RadialPreset::Schwarzschild { mass } => RadialIDS::new(
                format!("schwarzschild-{mass}"),
                r_range,
                schwarzschild_area_radius(mass)?,
                zero.clone(),
                zero,
                nodes,
            ),
            RadialPreset::DecPerturbed { mass, epsilon } => {
                let beta = 1.25 * epsilon;
                let k: RadialFunction = Arc::new(move |r| {
                    let q = 1.0 + beta * r;
                    [epsilon / q, -epsilon * beta / (q * q)]
                });
                RadialIDS::new(
                    format!("dec-perturbed-{mass}-{epsilon}"),
                    r_range,
                    schwarzschild_area_radius(mass)?,
                    k.clone(),
                    k,
                    nodes,
                )
            }
            RadialPreset::Rippled { amplitude: b } => {
                if b.abs() >= 1.0 {
                    return Err(Error::InvalidInput(format!(
                        "ripple amplitude {b} must be below 1"
                    )));
                }
                let rho: AreaRadius =
                    Arc::new(move |r| [r + b * r.sin(), 1.0 + b * r.cos(), -b * r.sin()]);
                RadialIDS::new(
                    format!("rippled-{b}"),
                    r_range,
                    rho,
                    zero.clone(),
                    zero,
                    nodes,
                )
            }
            RadialPreset::MinkowskiLog { c } => {
                if !(c > 0.0) || r_range[0] <= c {
                    return Err(Error::NotSpacelike {
                        detail: format!("t = {c} ln R needs 0 < {c} < R"),
                    });
                }
                let slice = LogSlice { c };
                let range = [slice.distance(r_range[0]), slice.distance(r_range[1])];
                let rho: AreaRadius = Arc::new(move |r| {
                    let big_r = slice.area_radius(r);
                    let d1 = 1.0 / (1.0 - c * c / (big_r * big_r)).sqrt();
                    [big_r, d1, -d1.powi(4) * c * c / big_r.powi(3)]
                });
                let kn: RadialFunction = Arc::new(move |r| {
                    let big_r = slice.area_radius(r);
                    let q = big_r * big_r - c * c;
                    let d1 = big_r / q.sqrt();
                    [
                        c * big_r / q.powf(1.5),
                        -c * (2.0 * big_r * big_r + c * c) / q.powf(2.5) * d1,
                    ]
                });
                let kt: RadialFunction = Arc::new(move |r| {
                    let big_r = slice.area_radius(r);
                    let q = big_r * big_r - c * c;
                    let p = big_r * q.sqrt();
                    let dp = (2.0 * big_r * big_r - c * c) / q.sqrt();
                    [-c / p, c * dp / (p * p) * big_r / q.sqrt()]
                });
                RadialIDS::new(format!("minkowski-log-{c}"), range, rho, kn, kt, nodes)
            }
        }
    }

    /// The exact null pair `(u, v)` at distance `r`, when the preset is a
    /// Minkowski slice.
    pub fn exact_null_pair(&self, r: f64) -> Option<(f64, f64)> {
        match *self {
            RadialPreset::MinkowskiLog { c } => {
                let big_r = LogSlice { c }.area_radius(r);
                Some((big_r + c * big_r.ln(), big_r - c * big_r.ln()))
            }
            RadialPreset::Flat => Some((r, r)),
            _ => None,
        }
    }
}

/// Distance along `t = c ln R` from `R = c`: `√(R² − c²) − c arccos(c/R)`.
#[derive(Clone, Copy, Debug)]
struct LogSlice {
    c: f64,
}

impl LogSlice {
    fn distance(&self, big_r: f64) -> f64 {
        let c = self.c;
        (big_r * big_r - c * c).sqrt() - c * (c / big_r).acos()
    }

    /// Newton on `R`; the distance is convex in `R` with slope `√(1 − c²/R²)`.
    fn area_radius(&self, r: f64) -> f64 {
        let c = self.c;
        let mut big_r = (r + c).max(c * (1.0 + 1e-12));
        for _ in 0..100 {
            let slope = (1.0 - c * c / (big_r * big_r)).sqrt();
            let step = (self.distance(big_r) - r) / slope;
            big_r = (big_r - step).max(0.5 * (big_r + c));
            if step.abs() <= 1e-15 * big_r {
                break;
            }
        }
        big_r
    }
}

/// Schwarzschild area radius as a function of distance from the throat:
/// with `y = √(ρ − 2m)`, `r = y√(y² + 2m) + 2m asinh(y/√(2m))`, inverted by
/// Newton's method (convex and increasing in `y`).
pub fn schwarzschild_area_radius(mass: f64) -> Result<AreaRadius> {
    if mass < 0.0 || !mass.is_finite() {
        return Err(Error::NonPositive {
            what: "mass",
            value: mass,
        });
    }
    if mass == 0.0 {
        return Ok(Arc::new(|r| [r, 1.0, 0.0]));
    }
    let two_m = 2.0 * mass;
    let root = two_m.sqrt();
    Ok(Arc::new(move |r: f64| {
        let r = r.max(0.0);
        let mut y = r / (2.0 * root);
        for _ in 0..100 {
            let q = (y * y + two_m).sqrt();
            let f = y * q + two_m * (y / root).asinh() - r;
            let dy = f / (2.0 * q);
            y -= dy;
            if dy.abs() <= 1e-16 * (1.0 + y) {
                break;
            }
        }
        let rho = two_m + y * y;
        [rho, y / rho.sqrt(), mass / (rho * rho)]
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RadialGeometry {
    pub mean_curvature: f64,
    pub scalar_curvature: f64,
    pub theta_plus: f64,
    pub theta_minus: f64,
    pub mu: f64,
    pub j_r: f64,
}

impl RadialGeometry {
    pub fn dec_margin(&self) -> f64 {
        self.mu - self.j_r.abs()
    }
}

pub fn radial_geometry(data: &RadialIDS, r: f64) -> Result<RadialGeometry> {
    data.check_range(r)?;
    Ok(geometry_unchecked(data, r))
}

fn geometry_unchecked(data: &RadialIDS, r: f64) -> RadialGeometry {
    let [rho, d1, d2] = (data.rho)(r);
    let [kn, _] = (data.kn)(r);
    let [kt, dkt] = (data.kt)(r);
    let h = 2.0 * d1 / rho;
    let scalar = 2.0 / (rho * rho) * (1.0 - d1 * d1) - 4.0 * d2 / rho;
    RadialGeometry {
        mean_curvature: h,
        scalar_curvature: scalar,
        theta_plus: h + 2.0 * kt,
        theta_minus: h - 2.0 * kt,
        mu: 0.5 * scalar + 2.0 * kn * kt + kt * kt,
        j_r: -2.0 * dkt + h * (kn - kt),
    }
}

/// Minimum of `μ − |J|` over the grid.
pub fn radial_dec_margin(data: &RadialIDS) -> (f64, f64) {
    data.grid()
        .into_iter()
        .map(|r| (r, geometry_unchecked(data, r).dec_margin()))
        .fold((f64::NAN, f64::INFINITY), |best, x| {
            if x.1 < best.1 {
                x
            } else {
                best
            }
        })
}

/// Outermost zero of `min(θ₊, θ₋)`, refined by bisection. The minimum has a
/// simple zero where `θ₊ θ₋` may only touch zero.
pub fn find_outermost_horizon(data: &RadialIDS) -> Option<f64> {
    let g = |r: f64| {
        let geo = geometry_unchecked(data, r);
        geo.theta_plus.min(geo.theta_minus)
    };
    let grid = data.grid();
    let values: Vec<f64> = grid.iter().map(|&r| g(r)).collect();
    let last = values.iter().rposition(|&x| x <= 0.0)?;
    if values[last] == 0.0 || last + 1 == grid.len() {
        return Some(grid[last]);
    }
    let (mut a, mut b) = (grid[last], grid[last + 1]);
    while b - a > HORIZON_TOL {
        let m = 0.5 * (a + b);
        if g(m) <= 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

/// Sampled profile on the uniform grid `[r₀, r₊]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ImcfProfile {
    pub r: Vec<f64>,
    pub s: Vec<f64>,
}

/// RK4 for `s′ = ½ H s`, `s(r₀) = s₀`, on `nodes` uniform points up to the
/// outer end of the data.
pub fn solve_rescaled_imcf(data: &RadialIDS, r0: f64, s0: f64) -> Result<ImcfProfile> {
    data.check_range(r0)?;
    if !(s0 > 0.0) {
        return Err(Error::NonPositive {
            what: "initial rescaled IMCF value",
            value: s0,
        });
    }
    let r = uniform(r0, data.r_range[1], data.nodes);
    let half_h = |x: f64| 0.5 * geometry_unchecked(data, x).mean_curvature;
    let mut s = Vec::with_capacity(r.len());
    s.push(s0);
    for i in 1..r.len() {
        let (a, dr) = (r[i - 1], r[i] - r[i - 1]);
        let h1 = half_h(a);
        let hm = half_h(a + 0.5 * dr);
        let h2 = half_h(r[i]);
        for (x, hx) in [(a, h1), (a + 0.5 * dr, hm), (r[i], h2)] {
            if hx <= 0.0 && (i > 1 || x > r0) {
                return Err(Error::HorizonInterior { r: x, h: 2.0 * hx });
            }
        }
        let y = s[i - 1];
        let k1 = h1 * y;
        let k2 = hm * (y + 0.5 * dr * k1);
        let k3 = hm * (y + 0.5 * dr * k2);
        let k4 = h2 * (y + dr * k3);
        s.push(y + dr / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
    }
    Ok(ImcfProfile { r, s })
}

/// Fourth-order first derivative of uniform samples.
pub fn derivative(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    assert!(n >= 5, "derivative stencil needs 5 samples");
    let mut d = vec![0.0; n];
    let c = 12.0 * h;
    d[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / c;
    d[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / c;
    for i in 2..n - 2 {
        d[i] = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / c;
    }
    d[n - 2] = (3.0 * f[n - 1] + 10.0 * f[n - 2] - 18.0 * f[n - 3] + 6.0 * f[n - 4] - f[n - 5]) / c;
    d[n - 1] = (25.0 * f[n - 1] - 48.0 * f[n - 2] + 36.0 * f[n - 3] - 16.0 * f[n - 4]
        + 3.0 * f[n - 5])
        / c;
    d
}

/// `u + v = s`, `v − u = w` with `w′ = kt s`, `w(r₀) = 0`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlowSolution {
    pub r: Vec<f64>,
    pub rho: Vec<f64>,
    pub s: Vec<f64>,
    pub w: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// Differentiated samples of `u` and `v`.
    pub du: Vec<f64>,
    pub dv: Vec<f64>,
    pub theta_plus: Vec<f64>,
    pub theta_minus: Vec<f64>,
    pub m_h: Vec<f64>,
    /// `max |u′ − ¼θ₋ s|, |v′ − ¼θ₊ s|`.
    pub theta_residual: f64,
}

impl FlowSolution {
    pub fn spacing(&self) -> f64 {
        (self.r[self.r.len() - 1] - self.r[0]) / (self.r.len() - 1) as f64
    }

    /// Local cubic interpolation of sampled columns at `r`.
    fn interpolate(&self, column: &[f64], r: f64) -> f64 {
        let n = self.r.len();
        let h = self.spacing();
        let x = (r - self.r[0]) / h;
        let i0 = (x.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
        (i0..i0 + 4)
            .map(|i| {
                let li: f64 = (i0..i0 + 4)
                    .filter(|&j| j != i)
                    .map(|j| (x - j as f64) / (i as f64 - j as f64))
                    .product();
                li * column[i]
            })
            .sum()
    }
}

/// Assemble `(u, v)` from `s` without checking the sign of `u′, v′`.
pub fn assemble_flow(data: &RadialIDS, profile: &ImcfProfile) -> Result<FlowSolution> {
    let r = profile.r.clone();
    if r.len() < 5 {
        return Err(Error::InvalidInput(
            "flow grid needs at least 5 nodes".into(),
        ));
    }
    let h = (r[r.len() - 1] - r[0]) / (r.len() - 1) as f64;
    let s = profile.s.clone();
    let integrand: Vec<f64> = r
        .iter()
        .zip(&s)
        .map(|(&x, s)| (data.kt)(x)[0] * s)
        .collect();
    let w = cumulative_simpson(&integrand, h);
    let u: Vec<f64> = s.iter().zip(&w).map(|(s, w)| 0.5 * (s - w)).collect();
    let v: Vec<f64> = s.iter().zip(&w).map(|(s, w)| 0.5 * (s + w)).collect();
    let (du, dv) = (derivative(&u, h), derivative(&v, h));
    let geo: Vec<RadialGeometry> = r.iter().map(|&x| geometry_unchecked(data, x)).collect();
    let rho: Vec<f64> = r.iter().map(|&x| (data.rho)(x)[0]).collect();
    let theta_plus: Vec<f64> = geo.iter().map(|g| g.theta_plus).collect();
    let theta_minus: Vec<f64> = geo.iter().map(|g| g.theta_minus).collect();
    let m_h = rho
        .iter()
        .zip(&geo)
        .map(|(&p, g)| 0.5 * p * (1.0 - 0.25 * p * p * g.theta_plus * g.theta_minus))
        .collect();
    let theta_residual = (0..r.len())
        .map(|i| {
            let a = (du[i] - 0.25 * theta_minus[i] * s[i]).abs();
            let b = (dv[i] - 0.25 * theta_plus[i] * s[i]).abs();
            a.max(b)
        })
        .fold(0.0, f64::max);
    Ok(FlowSolution {
        r,
        rho,
        s,
        w,
        u,
        v,
        du,
        dv,
        theta_plus,
        theta_minus,
        m_h,
        theta_residual,
    })
}

/// [`assemble_flow`], refusing profiles where `u` or `v` stops increasing
/// outside the starting sphere.
pub fn build_double_null_flow(data: &RadialIDS, profile: &ImcfProfile) -> Result<FlowSolution> {
    let flow = assemble_flow(data, profile)?;
    for i in 1..flow.r.len() {
        if flow.du[i] <= 0.0 || flow.dv[i] <= 0.0 || flow.u[i] <= 0.0 || flow.v[i] <= 0.0 {
            let detail = format!("u′ = {:e}, v′ = {:e}", flow.du[i], flow.dv[i]);
            return Err(Error::FlowDegenerate {
                r: flow.r[i],
                detail,
            });
        }
    }
    Ok(flow)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonotonicityRow {
    pub r: f64,
    pub area: f64,
    pub theta_plus: f64,
    pub theta_minus: f64,
    pub m_h: f64,
    pub delta_m_h: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonotonicityTable {
    pub rows: Vec<MonotonicityRow>,
    pub min_delta: f64,
    pub monotone: bool,
    /// `max |m_H − m_H(r₀)|`.
    pub drift: f64,
    /// `m_H(r₊) − √(|Σ₀|/16π)`.
    pub penrose_gap: f64,
}

pub fn hawking_profile(flow: &FlowSolution) -> MonotonicityTable {
    let rows: Vec<MonotonicityRow> = (0..flow.r.len())
        .map(|i| MonotonicityRow {
            r: flow.r[i],
            area: 4.0 * PI * flow.rho[i] * flow.rho[i],
            theta_plus: flow.theta_plus[i],
            theta_minus: flow.theta_minus[i],
            m_h: flow.m_h[i],
            delta_m_h: if i == 0 {
                0.0
            } else {
                flow.m_h[i] - flow.m_h[i - 1]
            },
        })
        .collect();
    let min_delta = rows
        .iter()
        .skip(1)
        .map(|r| r.delta_m_h)
        .fold(f64::INFINITY, f64::min);
    let drift = rows
        .iter()
        .map(|r| (r.m_h - rows[0].m_h).abs())
        .fold(0.0, f64::max);
    let penrose_gap = rows[rows.len() - 1].m_h - (rows[0].area / (16.0 * PI)).sqrt();
    MonotonicityTable {
        rows,
        min_delta,
        monotone: min_delta >= -MONOTONE_TOL,
        drift,
        penrose_gap,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PenroseReport {
    pub horizon: Option<f64>,
    /// Present when the flow starts on the outermost horizon.
    pub penrose_gap: Option<f64>,
    /// Relative spread of `|Σ| / (u + v)²`; present when `k = ξ g`.
    pub area_law_drift: Option<f64>,
    pub notes: Vec<String>,
}

pub fn penrose_and_area_checks(
    data: &RadialIDS,
    flow: &FlowSolution,
    table: &MonotonicityTable,
) -> PenroseReport {
    let mut notes = Vec::new();
    let horizon = find_outermost_horizon(data);
    let penrose_gap = match horizon {
        Some(r0) if (r0 - flow.r[0]).abs() <= 1e-8 * (1.0 + r0.abs()) => Some(table.penrose_gap),
        Some(r0) => {
            notes.push(format!(
                "flow starts at {} but the outermost horizon is at {r0}",
                flow.r[0]
            ));
            None
        }
        None => {
            notes.push("no horizon: penrose check skipped".into());
            None
        }
    };
    let umbilic = data
        .grid()
        .iter()
        .all(|&r| ((data.kn)(r)[0] - (data.kt)(r)[0]).abs() <= UMBILIC_TOL);
    let area_law_drift = if umbilic {
        let q: Vec<f64> = table
            .rows
            .iter()
            .zip(&flow.s)
            .map(|(row, s)| row.area / (s * s))
            .collect();
        let q0 = q[0];
        Some(q.iter().map(|x| ((x - q0) / q0).abs()).fold(0.0, f64::max))
    } else {
        notes.push("k is not pure trace: area law skipped".into());
        None
    };
    PenroseReport {
        horizon,
        penrose_gap,
        area_law_drift,
        notes,
    }
}

/// Both assemblies of the boundary term on the centred sphere at `r`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundaryFunctional {
    pub r: f64,
    /// `(u+v)[1 − (1/8π)∮(2θ₊|∇u|/(u+v) + 2θ₋|∇v|/(u+v) − 8|∇u||∇v|/(u+v)²)]`.
    pub general: f64,
    /// `(u+v)(1 − (1/16π)∮θ₊θ₋)`.
    pub null_expansion: f64,
}

impl BoundaryFunctional {
    pub fn delta(&self) -> f64 {
        (self.general - self.null_expansion).abs()
    }
}

pub fn boundary_functional(
    data: &RadialIDS,
    flow: &FlowSolution,
    r: f64,
) -> Result<BoundaryFunctional> {
    let (a, b) = (flow.r[0], flow.r[flow.r.len() - 1]);
    let slack = 1e-12 * (b - a);
    if r < a - slack || r > b + slack {
        return Err(Error::OutOfRange { r, lo: a, hi: b });
    }
    let geo = geometry_unchecked(data, r);
    let rho = (data.rho)(r)[0];
    let area = 4.0 * PI * rho * rho;
    let (u, v) = (flow.interpolate(&flow.u, r), flow.interpolate(&flow.v, r));
    let (du, dv) = (
        flow.interpolate(&flow.du, r).abs(),
        flow.interpolate(&flow.dv, r).abs(),
    );
    let sum = u + v;
    let density = 2.0 * geo.theta_plus * du / sum + 2.0 * geo.theta_minus * dv / sum
        - 8.0 * du * dv / (sum * sum);
    Ok(BoundaryFunctional {
        r,
        general: sum * (1.0 - area * density / (8.0 * PI)),
        null_expansion: sum * (1.0 - area * geo.theta_plus * geo.theta_minus / (16.0 * PI)),
    })
}

/// Everything the radial pipeline produces for one data set.
#[derive(Clone, Debug, Serialize)]
pub struct FlowRun {
    pub start: f64,
    pub flow: FlowSolution,
    pub table: MonotonicityTable,
    pub report: PenroseReport,
    pub max_boundary_delta: f64,
    pub dec_margin: f64,
}

/// Start at the outermost horizon when there is one, else at the inner end,
/// with `s₀ = ρ(r₀)/2`.
pub fn run_flow(data: &RadialIDS) -> Result<FlowRun> {
    let start = find_outermost_horizon(data).unwrap_or(data.r_range[0]);
    if start >= data.r_range[1] {
        return Err(Error::NoHorizon);
    }
    let profile = solve_rescaled_imcf(data, start, 0.5 * (data.rho)(start)[0])?;
    let flow = build_double_null_flow(data, &profile)?;
    let table = hawking_profile(&flow);
    let report = penrose_and_area_checks(data, &flow, &table);
    let max_boundary_delta = flow
        .r
        .iter()
        .map(|&r| boundary_functional(data, &flow, r).map(|b| b.delta()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(FlowRun {
        start,
        flow,
        table,
        report,
        max_boundary_delta,
        dec_margin: radial_dec_margin(data).1,
    })
}
