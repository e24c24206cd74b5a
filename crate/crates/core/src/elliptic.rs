//! The `a = 0` system on radial annuli:
//!
//! `Δu = −σ tr k |∇u| + N/(|u + v| + ε)`, `Δv = σ tr k |∇v| + N/(|u + v| + ε)`,
//! `N = 3|∇u||∇v| + ⟨∇u, ∇v⟩`,
//!
//! solved by damped Picard iteration of the inverse Dirichlet Laplacian,
//! continued in `σ` from the harmonic seed and then in `ε` towards zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spherical::RadialIDS;

pub const BOUNDS_TOL: f64 = 1e-8;
pub const LOW_GRADIENT: f64 = 1e-12;
const MAX_HALVINGS: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryData {
    pub c_minus: f64,
    pub c_plus: f64,
    pub d_minus: f64,
    pub d_plus: f64,
}

impl BoundaryData {
    pub fn validate(&self) -> Result<()> {
        for (what, x) in [
            ("c₋", self.c_minus),
            ("c₊", self.c_plus),
            ("d₋", self.d_minus),
            ("d₊", self.d_plus),
        ] {
            if !(x > 0.0) || !x.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "boundary value {what} = {x} must be positive"
                )));
            }
        }
        if !(self.c_minus < self.c_plus && self.d_minus < self.d_plus) {
            return Err(Error::InvalidInput(format!(
                "boundary values must increase outward: {self:?}"
            )));
        }
        Ok(())
    }

    /// Dirichlet values of `v` on the `(σ, ε)` leg.
    pub fn v_boundary(&self, sigma: f64, eps: f64) -> (f64, f64) {
        (
            sigma * self.d_minus + (1.0 - sigma) * self.c_minus - eps,
            sigma * self.d_plus + (1.0 - sigma) * self.c_plus - eps,
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContinuationSchedule {
    pub sigma_steps: Vec<f64>,
    pub eps_ladder: Vec<f64>,
    pub damping: f64,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for ContinuationSchedule {
    fn default() -> Self {
        Self {
            sigma_steps: (0..=10).map(|i| i as f64 / 10.0).collect(),
            eps_ladder: vec![1e-2, 1e-3, 1e-4, 1e-5, 1e-6],
            damping: 0.5,
            max_iters: 20_000,
            tol: 1e-10,
        }
    }
}

impl ContinuationSchedule {
    pub fn with_eps_floor(mut self, floor: f64) -> Self {
        let mut eps = self.eps_ladder[0];
        self.eps_ladder.clear();
        while eps >= floor * (1.0 - 1e-9) {
            self.eps_ladder.push(eps);
            eps /= 10.0;
        }
        self
    }

    pub fn validate(&self, bc: &BoundaryData) -> Result<()> {
        let s = &self.sigma_steps;
        if s.first() != Some(&0.0) || s.last() != Some(&1.0) || s.windows(2).any(|w| !(w[0] < w[1]))
        {
            return Err(Error::InvalidInput(
                "σ steps must increase from 0 to 1".into(),
            ));
        }
        let e = &self.eps_ladder;
        if e.is_empty() || e.iter().any(|x| !(*x > 0.0)) || e.windows(2).any(|w| !(w[0] > w[1])) {
            return Err(Error::InvalidInput(
                "ε ladder must be positive and decreasing".into(),
            ));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "damping {} outside (0, 1]",
                self.damping
            )));
        }
        if !(self.tol > 0.0) || self.max_iters == 0 {
            return Err(Error::InvalidInput(
                "tolerance and iteration budget must be positive".into(),
            ));
        }
        let floor = bc.c_minus.min(bc.d_minus).min(bc.c_plus).min(bc.d_plus);
        if e[0] >= floor {
            return Err(Error::InvalidInput(format!(
                "ε = {} leaves nonpositive v boundary values",
                e[0]
            )));
        }
        Ok(())
    }
}

/// Radial grid with the coefficients of `Δψ = ψ″ + H ψ′` and `tr k`.
#[derive(Clone, Debug)]
pub struct RadialOperator {
    pub r: Vec<f64>,
    pub h: f64,
    pub mean_curvature: Vec<f64>,
    pub trace_k: Vec<f64>,
}

impl RadialOperator {
    pub fn new(data: &RadialIDS) -> Result<Self> {
        let r = data.grid();
        if r.len() < 3 {
            return Err(Error::InvalidInput(
                "radial grid needs at least 3 nodes".into(),
            ));
        }
        let h = (data.r_range[1] - data.r_range[0]) / (r.len() - 1) as f64;
        let mean_curvature = r
            .iter()
            .map(|&x| {
                let [rho, d1, _] = (data.rho)(x);
                2.0 * d1 / rho
            })
            .collect();
        let trace_k = r
            .iter()
            .map(|&x| (data.kn)(x)[0] + 2.0 * (data.kt)(x)[0])
            .collect();
        Ok(Self {
            r,
            h,
            mean_curvature,
            trace_k,
        })
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// Central second differences at interior nodes; zero at the ends.
    pub fn laplacian(&self, f: &[f64]) -> Vec<f64> {
        let (n, h) = (f.len(), self.h);
        let mut out = vec![0.0; n];
        for i in 1..n - 1 {
            let d2 = (f[i + 1] - 2.0 * f[i] + f[i - 1]) / (h * h);
            let d1 = (f[i + 1] - f[i - 1]) / (2.0 * h);
            out[i] = d2 + self.mean_curvature[i] * d1;
        }
        out
    }

    /// Central differences inside, one-sided second order at the ends.
    pub fn gradient(&self, f: &[f64]) -> Vec<f64> {
        let (n, h) = (f.len(), self.h);
        let mut d = vec![0.0; n];
        d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
        d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
        for i in 1..n - 1 {
            d[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
        }
        d
    }

    /// Solve `Δψ = rhs` at interior nodes with `ψ` fixed at both ends.
    pub fn solve_dirichlet(&self, rhs: &[f64], bc: (f64, f64)) -> Result<Vec<f64>> {
        let n = self.len();
        if rhs.len() != n {
            return Err(Error::InvalidInput(format!(
                "{} right-hand side values for {n} nodes",
                rhs.len()
            )));
        }
        let h = self.h;
        let m = n - 2;
        let mut psi = vec![0.0; n];
        psi[0] = bc.0;
        psi[n - 1] = bc.1;
        if m == 0 {
            return Ok(psi);
        }
        let lower = |i: usize| 1.0 / (h * h) - self.mean_curvature[i] / (2.0 * h);
        let upper = |i: usize| 1.0 / (h * h) + self.mean_curvature[i] / (2.0 * h);
        let diag = -2.0 / (h * h);
        // Thomas sweep over interior rows 1..=m
        let mut c_prime = vec![0.0; n];
        let mut d_prime = vec![0.0; n];
        for i in 1..=m {
            let mut d = rhs[i];
            if i == 1 {
                d -= lower(1) * bc.0;
            }
            if i == m {
                d -= upper(m) * bc.1;
            }
            let a = if i == 1 { 0.0 } else { lower(i) };
            let pivot = diag - a * c_prime[i - 1];
            if pivot.abs() < 1e-300 || !pivot.is_finite() {
                return Err(Error::SingularSystem { row: i });
            }
            c_prime[i] = if i == m { 0.0 } else { upper(i) / pivot };
            d_prime[i] = (d - a * d_prime[i - 1]) / pivot;
        }
        psi[m] = d_prime[m];
        for i in (1..m).rev() {
            psi[i] = d_prime[i] - c_prime[i] * psi[i + 1];
        }
        Ok(psi)
    }
}

pub fn discrete_laplace_inverse(data: &RadialIDS, rhs: &[f64], bc: (f64, f64)) -> Result<Vec<f64>> {
    RadialOperator::new(data)?.solve_dirichlet(rhs, bc)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Seed {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// `max |Δu − 2|∇u|²/u|` at interior nodes.
    pub residual: f64,
}

/// `u₀ = 1/U₀` with `U₀` discrete harmonic, `U₀ = 1/c±`, and `v₀ = u₀ − ε`.
pub fn harmonic_seed(data: &RadialIDS, bc: &BoundaryData, eps: f64) -> Result<Seed> {
    seed_on(&RadialOperator::new(data)?, bc, eps)
}

fn seed_on(op: &RadialOperator, bc: &BoundaryData, eps: f64) -> Result<Seed> {
    if !(bc.c_minus > 0.0 && bc.c_plus > 0.0) {
        return Err(Error::NonPositiveSeed {
            node: 0,
            value: bc.c_minus.min(bc.c_plus),
        });
    }
    let zero = vec![0.0; op.len()];
    let big_u = op.solve_dirichlet(&zero, (1.0 / bc.c_minus, 1.0 / bc.c_plus))?;
    let u: Vec<f64> = big_u.iter().map(|x| 1.0 / x).collect();
    let v: Vec<f64> = u.iter().map(|x| x - eps).collect();
    if let Some(i) = v.iter().position(|&x| !(x > 0.0)) {
        return Err(Error::NonPositiveSeed {
            node: i,
            value: v[i],
        });
    }
    let lap = op.laplacian(&u);
    let du = op.gradient(&u);
    let residual = (1..u.len() - 1)
        .map(|i| (lap[i] - 2.0 * du[i] * du[i] / u[i]).abs())
        .fold(0.0, f64::max);
    Ok(Seed { u, v, residual })
}

/// Right-hand sides of both equations at every node.
pub fn sources(
    op: &RadialOperator,
    u: &[f64],
    v: &[f64],
    sigma: f64,
    eps: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (du, dv) = (op.gradient(u), op.gradient(v));
    let mut su = vec![0.0; u.len()];
    let mut sv = vec![0.0; u.len()];
    for i in 0..u.len() {
        let coupling =
            (3.0 * du[i].abs() * dv[i].abs() + du[i] * dv[i]) / ((u[i] + v[i]).abs() + eps);
        su[i] = -sigma * op.trace_k[i] * du[i].abs() + coupling;
        sv[i] = sigma * op.trace_k[i] * dv[i].abs() + coupling;
        if !su[i].is_finite() || !sv[i].is_finite() {
            return Err(Error::NaNSource { node: i });
        }
    }
    Ok((su, sv))
}

/// One relaxed application of the fixed-point map; the end nodes carry the
/// leg's Dirichlet values exactly.
pub fn fixed_point_step(
    data: &RadialIDS,
    state: (&[f64], &[f64]),
    sigma: f64,
    eps: f64,
    bc: &BoundaryData,
    damping: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    step_on(&RadialOperator::new(data)?, state, sigma, eps, bc, damping)
}

fn step_on(
    op: &RadialOperator,
    (u, v): (&[f64], &[f64]),
    sigma: f64,
    eps: f64,
    bc: &BoundaryData,
    damping: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (su, sv) = sources(op, u, v, sigma, eps)?;
    let un = op.solve_dirichlet(&su, (bc.c_minus, bc.c_plus))?;
    let vn = op.solve_dirichlet(&sv, bc.v_boundary(sigma, eps))?;
    let relax = |new: Vec<f64>, old: &[f64]| -> Vec<f64> {
        let n = new.len();
        (0..n)
            .map(|i| {
                if i == 0 || i + 1 == n {
                    new[i]
                } else {
                    damping * new[i] + (1.0 - damping) * old[i]
                }
            })
            .collect()
    };
    Ok((relax(un, u), relax(vn, v)))
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Margins of the maximum-principle bounds; negative means violated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundsMargins {
    pub u_lower: f64,
    pub u_upper: f64,
    pub v_lower: f64,
    pub v_upper: f64,
}

impl BoundsMargins {
    pub fn of(u: &[f64], v: &[f64], bc: &BoundaryData, sigma: f64, eps: f64) -> Self {
        let min = |f: &[f64]| f.iter().copied().fold(f64::INFINITY, f64::min);
        let max = |f: &[f64]| f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (vl, vu) = bc.v_boundary(sigma, eps);
        Self {
            u_lower: min(u) - bc.c_minus,
            u_upper: bc.c_plus - max(u),
            v_lower: min(v) - vl,
            v_upper: vu - max(v),
        }
    }

    pub fn min(&self) -> f64 {
        self.u_lower
            .min(self.u_upper)
            .min(self.v_lower)
            .min(self.v_upper)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LegReport {
    pub sigma: f64,
    pub eps: f64,
    pub iterations: usize,
    pub final_change: f64,
    pub damping: f64,
    pub bounds: BoundsMargins,
    /// Sup-norm distance from the state the leg started from.
    pub jump: f64,
    /// Sup-norm step change per iteration.
    pub history: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscreteSolution {
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// Nodal residuals of the regularized system on the last leg.
    pub residual_u: Vec<f64>,
    pub residual_v: Vec<f64>,
    pub max_residual: f64,
    /// Same with `σ = 1`, `ε = 0`.
    pub unregularized_residual: f64,
    pub sigma: f64,
    pub eps: f64,
    pub legs: Vec<LegReport>,
}

fn nodal_residuals(
    op: &RadialOperator,
    u: &[f64],
    v: &[f64],
    sigma: f64,
    eps: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (su, sv) = sources(op, u, v, sigma, eps)?;
    let (lu, lv) = (op.laplacian(u), op.laplacian(v));
    let n = u.len();
    let interior = |l: Vec<f64>, s: Vec<f64>| -> Vec<f64> {
        (0..n)
            .map(|i| {
                if i == 0 || i + 1 == n {
                    0.0
                } else {
                    l[i] - s[i]
                }
            })
            .collect()
    };
    Ok((interior(lu, su), interior(lv, sv)))
}

fn sup(f: &[f64]) -> f64 {
    f.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

fn run_leg(
    op: &RadialOperator,
    state: (Vec<f64>, Vec<f64>),
    sigma: f64,
    eps: f64,
    bc: &BoundaryData,
    schedule: &ContinuationSchedule,
) -> Result<(Vec<f64>, Vec<f64>, LegReport)> {
    let (mut u, mut v) = state;
    let mut damping = schedule.damping;
    let mut halvings = 0;
    let mut history = Vec::new();
    let mut prev = f64::INFINITY;
    for it in 1..=schedule.max_iters {
        let (un, vn) = step_on(op, (&u, &v), sigma, eps, bc, damping)?;
        let change = sup_diff(&un, &u).max(sup_diff(&vn, &v));
        history.push(change);
        u = un;
        v = vn;
        if change <= schedule.tol {
            let bounds = BoundsMargins::of(&u, &v, bc, sigma, eps);
            if bounds.min() < -BOUNDS_TOL {
                return Err(Error::BoundsViolation {
                    sigma,
                    eps,
                    margin: bounds.min(),
                });
            }
            let report = LegReport {
                sigma,
                eps,
                iterations: it,
                final_change: change,
                damping,
                bounds,
                jump: 0.0,
                history,
            };
            return Ok((u, v, report));
        }
        if !change.is_finite() {
            break;
        }
        if change > prev && halvings < MAX_HALVINGS {
            damping *= 0.5;
            halvings += 1;
        }
        prev = change;
    }
    Err(Error::NoConvergence {
        sigma,
        eps,
        iterations: history.len(),
        last_step: history.last().copied().unwrap_or(f64::NAN),
    })
}

/// `σ: 0 → 1` at the largest `ε`, then down the `ε` ladder at `σ = 1`.
pub fn continuation_solve(
    data: &RadialIDS,
    bc: &BoundaryData,
    schedule: &ContinuationSchedule,
) -> Result<DiscreteSolution> {
    bc.validate()?;
    schedule.validate(bc)?;
    let op = RadialOperator::new(data)?;
    let eps0 = schedule.eps_ladder[0];
    let seed = seed_on(&op, bc, eps0)?;
    let mut state = (seed.u, seed.v);
    let mut legs = Vec::new();
    let mut plan: Vec<(f64, f64)> = schedule.sigma_steps.iter().map(|&s| (s, eps0)).collect();
    plan.extend(schedule.eps_ladder.iter().skip(1).map(|&e| (1.0, e)));
    for (sigma, eps) in plan {
        let (u, v, mut report) = run_leg(&op, state.clone(), sigma, eps, bc, schedule)?;
        report.jump = sup_diff(&u, &state.0).max(sup_diff(&v, &state.1));
        legs.push(report);
        state = (u, v);
    }
    let (u, v) = state;
    let eps = *schedule.eps_ladder.last().unwrap();
    let (residual_u, residual_v) = nodal_residuals(&op, &u, &v, 1.0, eps)?;
    let (mu, mv) = nodal_residuals(&op, &u, &v, 1.0, 0.0)?;
    Ok(DiscreteSolution {
        r: op.r.clone(),
        max_residual: sup(&residual_u).max(sup(&residual_v)),
        unregularized_residual: sup(&mu).max(sup(&mv)),
        residual_u,
        residual_v,
        u,
        v,
        sigma: 1.0,
        eps,
        legs,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverDiagnostics {
    /// `max |Δw − σ tr k (|∇u| + |∇v|)|`, `w = v − u`.
    pub w_residual: f64,
    /// `max |½h⁻²Δh − (closed right-hand side)|`, `h = 1/(u + v + ε)`.
    pub h_residual: f64,
    pub bounds: BoundsMargins,
    pub u_monotone: bool,
    pub v_monotone: bool,
    /// Nodes where `|u′|` or `|v′|` falls below the audit floor.
    pub low_gradient_nodes: Vec<usize>,
}

pub fn solution_diagnostics(
    data: &RadialIDS,
    sol: &DiscreteSolution,
    bc: &BoundaryData,
    sigma: f64,
    eps: f64,
) -> Result<SolverDiagnostics> {
    let op = RadialOperator::new(data)?;
    let (u, v) = (&sol.u, &sol.v);
    let n = u.len();
    let w: Vec<f64> = v.iter().zip(u).map(|(v, u)| v - u).collect();
    let h: Vec<f64> = u.iter().zip(v).map(|(u, v)| 1.0 / (u + v + eps)).collect();
    let (du, dv, dw) = (op.gradient(u), op.gradient(v), op.gradient(&w));
    let (lw, lh) = (op.laplacian(&w), op.laplacian(&h));
    let mut w_residual: f64 = 0.0;
    let mut h_residual: f64 = 0.0;
    for i in 1..n - 1 {
        let tk = op.trace_k[i];
        w_residual = w_residual.max((lw[i] - sigma * tk * (du[i].abs() + dv[i].abs())).abs());
        let s = u[i] + v[i] + eps;
        let (gu, gw) = (du[i].abs(), dw[i].abs());
        let uw = du[i] * dw[i];
        let denom = (du[i] + dw[i]).abs() + gu;
        let rhs = if denom > 0.0 {
            let q = gw * gw + 2.0 * uw;
            (-3.0 * gu / denom * gw * gw + gw * gw) / s + 3.0 * uw / (denom * denom) * q / s
                - 0.5 * sigma * tk / denom * q
        } else {
            0.0
        };
        h_residual = h_residual.max((0.5 * lh[i] / (h[i] * h[i]) - rhs).abs());
    }
    let low_gradient_nodes = (0..n)
        .filter(|&i| du[i].abs() < LOW_GRADIENT || dv[i].abs() < LOW_GRADIENT)
        .collect();
    Ok(SolverDiagnostics {
        w_residual,
        h_residual,
        bounds: BoundsMargins::of(u, v, bc, sigma, eps),
        u_monotone: u.windows(2).all(|p| p[1] >= p[0]),
        v_monotone: v.windows(2).all(|p| p[1] >= p[0]),
        low_gradient_nodes,
    })
}
