//! One function per command. Each turns a validated config into checks
//! and tables; data that cannot be built is a config error, anything that
//! fails afterwards is a failed run.

use std::sync::Arc;

use dnull_core::cases::{random_case, random_charged_case};
use dnull_core::elliptic::{
    continuation_solve, solution_diagnostics, BoundaryData, ContinuationSchedule,
};
use dnull_core::exact_slices::{
    minkowski_boost, minkowski_null_pair, minkowski_quadratic, minkowski_t0,
    schwarzschild_integrability, schwarzschild_null_fields_check, schwarzschild_static_data,
    tilted_time, tortoise_pair_check, verify_null_pair, MinkowskiGraphSlice, NullPair, Vec4,
};
use dnull_core::identity::{
    charged_residual, identity_residual, riemannian_residual, spacetime_harmonic_residual,
    stern_residual, ChargedSources, ResidualReport, RiemannianSource, Sources,
};
use dnull_core::initial_data::{Annulus, InitialDataSet};
use dnull_core::spherical::{radial_dec_margin, run_flow, RadialIDS, RadialPreset};
use dnull_core::tensor::charts::{Flat, ZeroTensor};
use dnull_core::tensor::fields::{
    Combination, Coulomb, QuadraticForm, RadialScalar, Radius, ZeroVector,
};
use dnull_core::tensor::{Mat3, ScalarField, Vec3, VectorField};

use crate::config::{Command, ConfigError, RunConfig};
use crate::presets::{resolve, Resolved};
use crate::report::{Check, Outcome, Table};

/// Below this coarse-level residual the identity is exact up to round-off
/// and no convergence order is measured.
pub const EXACT_FLOOR: f64 = 1e-8;
/// Agreement required between two assemblies of the same quantity.
pub const REDUCTION_TOL: f64 = 1e-10;
/// Pointwise algebraic residuals of exact structures.
pub const EXACT_TOL: f64 = 1e-8;
pub const BOUNDS_MARGIN: f64 = -1e-8;
pub const MONOTONE_MARGIN: f64 = -1e-8;
pub const PENROSE_MARGIN: f64 = -1e-6;
/// `e^{1/r}` has large third derivatives near `r = 1`; the default ladder
/// leaves an `O(h²)` error of about `1.5e-4`.
pub const COULOMB_LADDER: [f64; 3] = [2e-4, 1e-4, 5e-5];

pub fn run(cfg: &RunConfig) -> Result<Outcome, ConfigError> {
    cfg.validate()?;
    let preset = resolve(cfg.command, &cfg.dataset)?;
    let result = match cfg.command {
        Command::VerifyMinkowski => verify_minkowski(cfg, &preset),
        Command::VerifyIdentity => verify_identity(cfg, &preset),
        Command::VerifyStern => verify_stern(cfg, &preset),
        Command::RiemannianIdentity => riemannian_identity(cfg, &preset),
        Command::VerifyCharged => verify_charged(cfg, &preset),
        Command::VerifySchwarzschild => verify_schwarzschild(cfg, &preset),
        Command::FlowSpherical => flow_spherical(cfg, &preset),
        Command::SolveA0 => solve_a0(cfg, &preset),
    };
    match result {
        Ok(out) => Ok(out),
        Err(Stop::Config(e)) => Err(e),
        Err(Stop::Module(out)) => Ok(out),
    }
}

enum Stop {
    Config(ConfigError),
    Module(Outcome),
}

impl From<ConfigError> for Stop {
    fn from(e: ConfigError) -> Self {
        Stop::Config(e)
    }
}

/// Data construction errors reject the config.
fn bad_data(e: dnull_core::Error) -> Stop {
    Stop::Config(ConfigError::invalid("dataset", e.to_string()))
}

/// Errors after construction fail the run, keeping what was gathered.
fn failed(out: &mut Outcome) -> impl FnMut(dnull_core::Error) -> Stop + '_ {
    move |e| {
        let mut done = std::mem::take(out);
        done.error = Some(e.to_string());
        Stop::Module(done)
    }
}

type Run = Result<Outcome, Stop>;

fn cartesian(p: &Resolved) -> Annulus {
    Annulus::cartesian(p.get("inner"), p.get("outer"))
}

fn cube(cfg: &RunConfig, domain: &Annulus) -> Vec<Vec3> {
    let n = cfg.lattice();
    domain.lattice(n, n, n)
}

fn minkowski_slice(p: &Resolved) -> Result<MinkowskiGraphSlice, Stop> {
    let domain = cartesian(p);
    match p.name.as_str() {
        "minkowski-t0" => minkowski_t0(domain),
        "minkowski-boost" => minkowski_boost(p.get("a"), domain),
        _ => minkowski_quadratic(p.get("c"), domain),
    }
    .map_err(bad_data)
}

/// The exact pair, or with `perturb ≠ 0` the negative control
/// `u + δ x₁²`, which no longer has vanishing modified Hessian.
fn minkowski_pair(p: &Resolved, slice: &MinkowskiGraphSlice) -> Result<NullPair, Stop> {
    let mut pair = minkowski_null_pair(slice).map_err(bad_data)?;
    let delta = p.get("perturb");
    if delta != 0.0 {
        let mut q = Mat3::zeros();
        q[(0, 0)] = delta;
        pair.u = Arc::new(
            Combination::new(0.0)
                .with_shared(1.0, pair.u.clone())
                .with(1.0, QuadraticForm::new(q)),
        );
    }
    Ok(pair)
}

fn verify_minkowski(cfg: &RunConfig, p: &Resolved) -> Run {
    let slice = minkowski_slice(p)?;
    let pair = minkowski_pair(p, &slice)?;
    let lattice = cube(cfg, &slice.ids.domain);
    let mut out = Outcome::default();
    let rep = verify_null_pair(&slice.ids, &pair, &lattice).map_err(failed(&mut out))?;
    let tol = cfg.tol();
    out.checks
        .push(Check::at_most("modified_hessian_plus", rep.max_plus, tol));
    out.checks
        .push(Check::at_most("modified_hessian_minus", rep.max_minus, tol));
    out.checks.push(Check::at_most(
        "null_coupling_min_gap",
        (rep.coupling_min - 2.0).abs(),
        tol,
    ));
    out.checks.push(Check::at_most(
        "null_coupling_max_gap",
        (rep.coupling_max - 2.0).abs(),
        tol,
    ));
    out.notes.push(format!("{} lattice points", rep.points));
    Ok(out)
}

/// Adds the terminal residual check, the order check when measurable, and
/// the ladder and pointwise tables.
fn residual_checks(
    cfg: &RunConfig,
    out: &mut Outcome,
    label: &str,
    rep: &ResidualReport,
    tol: f64,
) {
    out.checks
        .push(Check::at_most(format!("{label}_max"), rep.max, tol));
    let coarse = rep.ladder[0].max;
    if rep.ladder.len() < 2 {
        out.notes
            .push(format!("{label}: single step, no order measured"));
    } else if coarse <= EXACT_FLOOR {
        out.notes.push(format!(
            "{label}: coarse residual {coarse:.3e} is at round-off, order not measured"
        ));
    } else {
        let order = rep.terminal_order().unwrap_or(f64::NAN);
        out.checks
            .push(Check::within(format!("{label}_order"), order, cfg.order()));
    }
    let mut ladder = Table::new(
        &format!("{label}_ladder"),
        &["step", "max", "l2_mean", "order"],
    );
    for (i, level) in rep.ladder.iter().enumerate() {
        let order = i
            .checked_sub(1)
            .and_then(|j| rep.orders[j])
            .unwrap_or(f64::NAN);
        ladder.push(vec![level.step, level.max, level.l2_mean, order]);
    }
    let mut points = Table::new(
        &format!("{label}_points"),
        &["x0", "x1", "x2", "lhs", "rhs", "residual"],
    );
    for (i, x) in rep.points.iter().enumerate() {
        points.push(vec![
            x[0],
            x[1],
            x[2],
            rep.lhs[i],
            rep.rhs[i],
            rep.residual[i],
        ]);
    }
    out.tables.push(ladder);
    out.tables.push(points);
}

struct PairCase {
    ids: InitialDataSet,
    u: Arc<dyn ScalarField<3>>,
    v: Arc<dyn ScalarField<3>>,
}

fn flat_data(p: &Resolved) -> InitialDataSet {
    InitialDataSet::new("flat", Flat::<3>, ZeroTensor, cartesian(p))
}

fn pair_case(cfg: &RunConfig, p: &Resolved) -> Result<PairCase, Stop> {
    Ok(match p.name.as_str() {
        "random-analytic" => {
            let c = random_case(cfg.seed);
            PairCase {
                ids: c.ids,
                u: c.u,
                v: c.v,
            }
        }
        "flat-radius" => PairCase {
            ids: flat_data(p),
            u: Arc::new(Radius),
            v: Arc::new(Radius),
        },
        _ => {
            let slice = minkowski_slice(p)?;
            let pair = minkowski_pair(p, &slice)?;
            PairCase {
                ids: slice.ids,
                u: pair.u,
                v: pair.v,
            }
        }
    })
}

fn verify_identity(cfg: &RunConfig, p: &Resolved) -> Run {
    let case = pair_case(cfg, p)?;
    let sources = cfg.a.map_or(Sources::SelfSourced, Sources::AForm);
    let lattice = cube(cfg, &case.ids.domain);
    let mut out = Outcome::default();
    let rep = identity_residual(
        &case.ids,
        case.u.as_ref(),
        case.v.as_ref(),
        &sources,
        &lattice,
        &cfg.ladder(),
    )
    .map_err(failed(&mut out))?;
    residual_checks(cfg, &mut out, "identity", &rep, cfg.tol());
    Ok(out)
}

fn verify_stern(cfg: &RunConfig, p: &Resolved) -> Run {
    let case = pair_case(cfg, p)?;
    let lattice = cube(cfg, &case.ids.domain);
    let mut out = Outcome::default();
    let rep = stern_residual(
        case.ids.metric.as_ref(),
        case.u.as_ref(),
        &lattice,
        &cfg.ladder(),
    )
    .map_err(failed(&mut out))?;
    residual_checks(cfg, &mut out, "stern", &rep, cfg.tol());
    Ok(out)
}

fn riemannian_identity(cfg: &RunConfig, p: &Resolved) -> Run {
    let case = pair_case(cfg, p)?;
    let source = cfg
        .a
        .map_or(RiemannianSource::SelfSourced, RiemannianSource::AForm);
    let lattice = cube(cfg, &case.ids.domain);
    let mut out = Outcome::default();
    let rep = riemannian_residual(
        case.ids.metric.as_ref(),
        case.u.as_ref(),
        source,
        &lattice,
        &cfg.ladder(),
    )
    .map_err(failed(&mut out))?;
    residual_checks(cfg, &mut out, "riemannian", &rep, cfg.tol());
    Ok(out)
}

/// `5 − e^{1/r}`: with `E = ∇(1/r)` and `k = 0` the pair `u = v` solves the
/// charged system with `ξ = 2`.
fn coulomb_potential() -> RadialScalar {
    RadialScalar::new(|r| {
        let e = (1.0 / r).exp();
        let r2 = r * r;
        (5.0 - e, e / r2, -e * (2.0 * r + 1.0) / (r2 * r2))
    })
}

fn verify_charged(cfg: &RunConfig, p: &Resolved) -> Run {
    let ladder = cfg.ladder();
    let mut out = Outcome::default();
    if p.name == "coulomb" {
        let ladder = cfg
            .grid
            .ladder
            .clone()
            .unwrap_or_else(|| COULOMB_LADDER.to_vec());
        let ids = flat_data(p);
        let u = coulomb_potential();
        let e = Coulomb { charge: p.get("q") };
        let lattice = cube(cfg, &ids.domain);
        let rep = charged_residual(
            &ids,
            &u,
            &u,
            &e,
            ChargedSources::System,
            cfg.flux,
            &lattice,
            &ladder,
        )
        .map_err(failed(&mut out))?;
        residual_checks(cfg, &mut out, "charged", &rep, cfg.tol().min(1e-6));
        return Ok(out);
    }
    let cc = random_charged_case(cfg.seed);
    let (ids, u, v) = (&cc.case.ids, cc.case.u.as_ref(), cc.case.v.as_ref());
    let lattice = cube(cfg, &ids.domain);
    let rep = charged_residual(
        ids,
        u,
        v,
        cc.e.as_ref(),
        ChargedSources::SelfSourced,
        cfg.flux,
        &lattice,
        &ladder,
    )
    .map_err(failed(&mut out))?;
    residual_checks(cfg, &mut out, "charged", &rep, cfg.tol());
    let gap = electric_free_gap(ids, u, v, &lattice, &ladder).map_err(failed(&mut out))?;
    out.checks.push(Check::at_most(
        "uncharged_reduction_gap",
        gap,
        REDUCTION_TOL,
    ));
    Ok(out)
}

/// With `E = 0` the charged identity is the sum of the single-function
/// identities for `u` on the data and `v` on the time-reversed data.
pub fn electric_free_gap<U, V>(
    ids: &InitialDataSet,
    u: &U,
    v: &V,
    lattice: &[Vec3],
    ladder: &[f64],
) -> dnull_core::Result<f64>
where
    U: ScalarField<3> + ?Sized,
    V: ScalarField<3> + ?Sized,
{
    let zero: &dyn VectorField<3> = &ZeroVector;
    let c = charged_residual(
        ids,
        u,
        v,
        zero,
        ChargedSources::SelfSourced,
        Default::default(),
        lattice,
        ladder,
    )?;
    let hu = spacetime_harmonic_residual(ids, u, 1.0, lattice, ladder)?;
    let hv = spacetime_harmonic_residual(ids, v, -1.0, lattice, ladder)?;
    let mut gap = 0.0f64;
    for i in 0..lattice.len() {
        let scale = 1.0 + c.lhs[i].abs().max(c.rhs[i].abs());
        gap = gap.max((c.lhs[i] - hu.lhs[i] - hv.lhs[i]).abs() / scale);
        gap = gap.max((c.rhs[i] - hu.rhs[i] - hv.rhs[i]).abs() / scale);
    }
    Ok(gap)
}

/// Pairs of coordinate directions `(t, r, θ, φ)` with at least one member
/// orthogonal to the `r`-`t` plane, plus two mixed pairs.
fn admissible_directions() -> Vec<(Vec4, Vec4)> {
    let e = |i: usize| Vec4::from_fn(|j, _| if i == j { 1.0 } else { 0.0 });
    let mut dirs = Vec::new();
    for a in [2, 3] {
        for b in 0..4 {
            dirs.push((e(a), e(b)));
        }
    }
    dirs.push((e(2) + 0.5 * e(3), e(0) + e(1)));
    dirs.push((e(0) - 2.0 * e(1), e(2) - e(3)));
    dirs
}

fn verify_schwarzschild(cfg: &RunConfig, p: &Resolved) -> Run {
    let mass = p.get("m");
    let time = match p.name.as_str() {
        "schwarzschild-tilted" => tilted_time(p.get("c")),
        _ => tilted_time(0.0),
    };
    let domain = Annulus::spherical(p.get("inner"), p.get("outer"));
    let slice = schwarzschild_static_data(mass, time, domain).map_err(bad_data)?;
    let lattice = cube(cfg, &domain);
    let points: Vec<Vec4> = lattice
        .iter()
        .map(|x| Vec4::new(slice.time.value(x), x[0], x[1], x[2]))
        .collect();
    let mut out = Outcome::default();
    let fields = schwarzschild_null_fields_check(mass, &points, &admissible_directions())
        .map_err(failed(&mut out))?;
    out.checks
        .push(Check::at_most("null_field_x", fields.max_x, EXACT_TOL));
    out.checks
        .push(Check::at_most("null_field_y", fields.max_y, EXACT_TOL));
    let integ = schwarzschild_integrability(mass, &points).map_err(failed(&mut out))?;
    out.checks
        .push(Check::at_most("frobenius", integ.max_frobenius, EXACT_TOL));
    out.checks.push(Check::at_most(
        "rescaled_curl",
        integ.max_curl_rescaled,
        EXACT_TOL,
    ));
    if mass > 0.0 {
        let tort = tortoise_pair_check(&slice, &lattice).map_err(failed(&mut out))?;
        out.checks.push(Check::at_most(
            "tortoise_expansion_plus",
            tort.expansion_plus,
            cfg.tol(),
        ));
        out.checks.push(Check::at_most(
            "tortoise_expansion_minus",
            tort.expansion_minus,
            cfg.tol(),
        ));
        out.checks.push(Check::at_most(
            "tortoise_hessian_u",
            tort.hessian_u,
            cfg.tol(),
        ));
        out.checks.push(Check::at_most(
            "tortoise_hessian_v",
            tort.hessian_v,
            cfg.tol(),
        ));
    } else {
        out.notes
            .push("m = 0: tortoise coordinate undefined, tortoise checks skipped".into());
    }
    out.notes.push(format!(
        "{} points, {} direction pairs",
        points.len(),
        fields.checks / points.len().max(1)
    ));
    Ok(out)
}

/// Radial data and, for Minkowski-type presets, its exact null pair.
fn radial_data(cfg: &RunConfig, p: &Resolved) -> Result<(RadialIDS, Option<RadialPreset>), Stop> {
    let nodes = cfg.nodes();
    if let Some(table) = &cfg.dataset.table {
        return Ok((
            RadialIDS::from_table("table", table, nodes).map_err(bad_data)?,
            None,
        ));
    }
    let preset = match p.name.as_str() {
        "flat" => RadialPreset::Flat,
        "umbilic" => RadialPreset::Umbilic { xi: p.get("xi") },
        "schwarzschild-t0" => RadialPreset::Schwarzschild { mass: p.get("m") },
        "dec-perturbed" => RadialPreset::DecPerturbed {
            mass: p.get("m"),
            epsilon: p.get("epsilon"),
        },
        "rippled" => RadialPreset::Rippled {
            amplitude: p.get("amplitude"),
        },
        _ => RadialPreset::MinkowskiLog { c: p.get("c") },
    };
    let data = preset.build(p.range(), nodes).map_err(bad_data)?;
    Ok((data, Some(preset)))
}

fn flow_spherical(cfg: &RunConfig, p: &Resolved) -> Run {
    let (data, preset) = radial_data(cfg, p)?;
    let mut out = Outcome::default();
    let run = run_flow(&data).map_err(failed(&mut out))?;
    let (flow, table, tol) = (&run.flow, &run.table, cfg.tol());
    let s_gap = flow
        .s
        .iter()
        .zip(&flow.rho)
        .map(|(s, r)| (s - 0.5 * r).abs())
        .fold(0.0, f64::max);
    out.checks.push(Check::at_most(
        "imcf_half_area_radius",
        s_gap,
        tol.min(1e-10),
    ));
    out.checks.push(Check::at_most(
        "theta_relation_residual",
        flow.theta_residual,
        tol,
    ));
    out.checks.push(Check::at_most(
        "boundary_functional_gap",
        run.max_boundary_delta,
        tol,
    ));
    if run.dec_margin >= 0.0 {
        out.checks.push(Check::at_least(
            "min_step_delta_m_h",
            table.min_delta,
            MONOTONE_MARGIN,
        ));
    } else {
        out.notes.push(format!(
            "dominant energy fails (margin {:.3e}): monotonicity not asserted",
            run.dec_margin
        ));
    }
    if let Some(gap) = run.report.penrose_gap {
        out.checks
            .push(Check::at_least("penrose_gap", gap, PENROSE_MARGIN));
    }
    if let Some(drift) = run.report.area_law_drift {
        out.checks
            .push(Check::at_most("area_law_drift", drift, tol));
    }
    if let Some(RadialPreset::Schwarzschild { .. }) = preset {
        out.checks
            .push(Check::at_most("hawking_mass_drift", table.drift, tol));
    }
    out.notes.extend(run.report.notes.iter().cloned());
    out.notes
        .push(format!("flow starts at r = {:.12e}", run.start));
    let mut t = Table::new(
        "flow",
        &["r", "area", "theta_plus", "theta_minus", "m_h", "delta_m_h"],
    );
    for row in &table.rows {
        t.push(vec![
            row.r,
            row.area,
            row.theta_plus,
            row.theta_minus,
            row.m_h,
            row.delta_m_h,
        ]);
    }
    let mut prof = Table::new("profiles", &["r", "rho", "s", "w", "u", "v"]);
    for i in 0..flow.r.len() {
        prof.push(vec![
            flow.r[i],
            flow.rho[i],
            flow.s[i],
            flow.w[i],
            flow.u[i],
            flow.v[i],
        ]);
    }
    out.tables.push(t);
    out.tables.push(prof);
    Ok(out)
}

fn solve_a0(cfg: &RunConfig, p: &Resolved) -> Run {
    let (data, preset) = radial_data(cfg, p)?;
    let [lo, hi] = data.r_range;
    let exact = |r: f64| preset.as_ref().and_then(|pr| pr.exact_null_pair(r));
    let bc = match (&cfg.boundary, exact(lo), exact(hi)) {
        (Some(bc), _, _) => *bc,
        (None, Some((ul, vl)), Some((uh, vh))) => BoundaryData {
            c_minus: ul,
            c_plus: uh,
            d_minus: vl,
            d_plus: vh,
        },
        _ => {
            return Err(
                ConfigError::invalid("boundary", "required for data without an exact pair").into(),
            )
        }
    };
    bc.validate()
        .map_err(|e| ConfigError::invalid("boundary", e.to_string()))?;
    let schedule = cfg
        .schedule
        .clone()
        .unwrap_or_else(ContinuationSchedule::default);
    schedule
        .validate(&bc)
        .map_err(|e| ConfigError::invalid("schedule", e.to_string()))?;
    let mut out = Outcome::default();
    let sol = continuation_solve(&data, &bc, &schedule).map_err(failed(&mut out))?;
    let diag =
        solution_diagnostics(&data, &sol, &bc, sol.sigma, sol.eps).map_err(failed(&mut out))?;
    out.checks
        .push(Check::at_most("max_residual", sol.max_residual, cfg.tol()));
    let worst_leg = sol
        .legs
        .iter()
        .map(|l| l.bounds.min())
        .fold(f64::INFINITY, f64::min);
    out.checks
        .push(Check::at_least("bounds_margin", worst_leg, BOUNDS_MARGIN));
    let h = sol.r[1] - sol.r[0];
    if exact(lo).is_some() && cfg.boundary.is_none() {
        let err = (0..sol.r.len())
            .filter_map(|i| {
                exact(sol.r[i]).map(|(u, v)| (sol.u[i] - u).abs().max((sol.v[i] - v).abs()))
            })
            .fold(0.0, f64::max);
        out.checks
            .push(Check::at_most("exact_pair_error", err, h * h + sol.eps));
    }
    out.notes.push(format!(
        "w residual {:.3e}, h residual {:.3e}, unregularized residual {:.3e}, {} low-gradient nodes",
        diag.w_residual, diag.h_residual, sol.unregularized_residual, diag.low_gradient_nodes.len()
    ));
    let mut t = Table::new("solution", &["r", "u", "v", "residual_u", "residual_v"]);
    for i in 0..sol.r.len() {
        t.push(vec![
            sol.r[i],
            sol.u[i],
            sol.v[i],
            sol.residual_u[i],
            sol.residual_v[i],
        ]);
    }
    let mut legs = Table::new(
        "legs",
        &[
            "sigma",
            "eps",
            "iterations",
            "final_change",
            "damping",
            "bounds_margin",
            "jump",
        ],
    );
    for l in &sol.legs {
        legs.push(vec![
            l.sigma,
            l.eps,
            l.iterations as f64,
            l.final_change,
            l.damping,
            l.bounds.min(),
            l.jump,
        ]);
    }
    out.tables.push(t);
    out.tables.push(legs);
    if radial_dec_margin(&data).1 < 0.0 {
        out.notes
            .push("data violates the dominant energy condition".into());
    }
    Ok(out)
}
