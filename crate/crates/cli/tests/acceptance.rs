//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Runs without the libtest harness so the lines are never
//! captured.

use std::fs;
use std::path::Path;
use std::process::Command as Proc;
use std::sync::Arc;
use std::time::Instant;

use dnull_cli::commands::{electric_free_gap, COULOMB_LADDER};
use dnull_core::cases::{random_case, random_charged_case};
use dnull_core::elliptic::{
    continuation_solve, solution_diagnostics, BoundaryData, ContinuationSchedule,
};
use dnull_core::exact_slices::{
    minkowski_boost, minkowski_null_pair, minkowski_quadratic, minkowski_t0,
    schwarzschild_null_fields_check, schwarzschild_static_data, tilted_time, tortoise_pair_check,
    verify_null_pair, Vec4,
};
use dnull_core::identity::{
    charged_residual, identity_residual, riemannian_residual, stern_residual, ChargedFlux,
    ChargedSources, RiemannianSource, Sources, LADDER,
};
use dnull_core::initial_data::{Annulus, InitialDataSet};
use dnull_core::spherical::{boundary_functional, run_flow, RadialPreset, DEFAULT_NODES};
use dnull_core::tensor::charts::{Flat, ZeroTensor};
use dnull_core::tensor::fields::{Combination, Coulomb, QuadraticForm, RadialScalar, Radius};
use dnull_core::tensor::{Mat3, ScalarField};

type Verdict = Result<String, String>;

/// Ladder for exact cases, where the only error is `O(h²)` truncation.
const FINE_LADDER: [f64; 3] = [4e-5, 2e-5, 1e-5];

/// `Ok` with the detail when `cond`, else `Err` with it.
fn verdict(cond: bool, detail: String) -> Verdict {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn all(parts: Vec<Verdict>) -> Verdict {
    let pass = parts.iter().all(|p| p.is_ok());
    let detail: Vec<String> = parts
        .into_iter()
        .map(|p| p.unwrap_or_else(|e| format!("FAILED[{e}]")))
        .collect();
    verdict(pass, detail.join("; "))
}

fn lift(r: dnull_core::Result<Verdict>) -> Verdict {
    r.unwrap_or_else(|e| Err(format!("error: {e}")))
}

fn minkowski_exactness() -> Verdict {
    lift((|| {
        let domain = Annulus::cartesian(1.0, 2.0);
        let lattice = domain.lattice(10, 10, 10);
        let mut parts = Vec::new();
        for (name, slice) in [
            ("t=0", minkowski_t0(domain)?),
            ("boost 0.4", minkowski_boost(0.4, domain)?),
            ("quadratic 0.1", minkowski_quadratic(0.1, domain)?),
        ] {
            let pair = minkowski_null_pair(&slice)?;
            let rep = verify_null_pair(&slice.ids, &pair, &lattice)?;
            parts.push(verdict(
                rep.max_residual() <= 1e-8,
                format!("{name} {:.2e}", rep.max_residual()),
            ));
            let mut q = Mat3::zeros();
            q[(0, 0)] = 1e-3;
            let mut bent = pair.clone();
            bent.u = Arc::new(
                Combination::new(0.0)
                    .with_shared(1.0, pair.u.clone())
                    .with(1.0, QuadraticForm::new(q)),
            );
            let neg = verify_null_pair(&slice.ids, &bent, &lattice)?;
            parts.push(verdict(
                neg.max_plus > 1e-4,
                format!("{name} perturbed {:.2e}", neg.max_plus),
            ));
        }
        Ok(all(parts))
    })())
}

fn order_ok(order: Option<f64>) -> bool {
    order.is_some_and(|o| (1.8..=2.2).contains(&o))
}

fn main_identity() -> Verdict {
    lift((|| {
        let mut parts = Vec::new();
        for seed in [1, 2, 3] {
            let c = random_case(seed);
            let lattice = c.ids.domain.lattice(4, 4, 4);
            let rep = identity_residual(
                &c.ids,
                c.u.as_ref(),
                c.v.as_ref(),
                &Sources::SelfSourced,
                &lattice,
                &LADDER,
            )?;
            let order = rep.terminal_order();
            parts.push(verdict(
                order_ok(order) && rep.max <= 1e-5,
                format!(
                    "seed {seed} order {:.3} max {:.2e}",
                    order.unwrap_or(f64::NAN),
                    rep.max
                ),
            ));
        }
        Ok(all(parts))
    })())
}

fn stern() -> Verdict {
    lift((|| {
        let mut parts = Vec::new();
        for seed in [1, 2, 3] {
            let c = random_case(seed);
            let lattice = c.ids.domain.lattice(4, 4, 4);
            let rep = stern_residual(c.ids.metric.as_ref(), c.u.as_ref(), &lattice, &LADDER)?;
            let order = rep.terminal_order();
            parts.push(verdict(
                order_ok(order) && rep.max <= 1e-5,
                format!(
                    "seed {seed} order {:.3} max {:.2e}",
                    order.unwrap_or(f64::NAN),
                    rep.max
                ),
            ));
        }
        // u = r on flat space: twice the flux is -4x/r², with divergence -4/r²
        let lattice = Annulus::cartesian(1.0, 2.0).lattice(4, 4, 4);
        let rep = stern_residual(&Flat::<3>, &Radius, &lattice, &FINE_LADDER)?;
        let closed = (0..lattice.len())
            .map(|i| (rep.rhs[i] + 4.0 / lattice[i].norm_squared()).abs())
            .fold(0.0, f64::max);
        parts.push(verdict(
            rep.max <= 1e-8 && closed <= 1e-8,
            format!(
                "u=r flat: fine-ladder residual {:.2e}, rhs vs closed form {closed:.2e}",
                rep.max
            ),
        ));
        Ok(all(parts))
    })())
}

/// With `k = 0` and `v = u` the double-null identity is twice the
/// Riemannian one, pointwise on both sides.
fn riemannian_specialization() -> Verdict {
    lift((|| {
        let mut parts = Vec::new();
        let flat = InitialDataSet::new("flat", Flat::<3>, ZeroTensor, Annulus::cartesian(1.0, 2.0));
        let curved = random_case(5);
        let curved = InitialDataSet::new(
            "curved",
            curved.ids.metric.clone(),
            ZeroTensor,
            curved.ids.domain,
        );
        let u_curved = random_case(5).u;
        let cases: [(
            &str,
            &InitialDataSet,
            Arc<dyn ScalarField<3>>,
            Sources,
            RiemannianSource,
        ); 3] = [
            (
                "u=r a=0",
                &flat,
                Arc::new(Radius),
                Sources::AForm(0.0),
                RiemannianSource::AForm(0.0),
            ),
            (
                "u=r a=1",
                &flat,
                Arc::new(Radius),
                Sources::AForm(1.0),
                RiemannianSource::AForm(1.0),
            ),
            (
                "curved self-sourced",
                &curved,
                u_curved,
                Sources::SelfSourced,
                RiemannianSource::SelfSourced,
            ),
        ];
        for (name, ids, u, s, rs) in cases {
            let lattice = ids.domain.lattice(4, 4, 4);
            let a = identity_residual(ids, u.as_ref(), u.as_ref(), &s, &lattice, &LADDER)?;
            let b = riemannian_residual(ids.metric.as_ref(), u.as_ref(), rs, &lattice, &LADDER)?;
            let gap = (0..lattice.len())
                .map(|i| {
                    let scale = 1.0 + b.lhs[i].abs().max(b.rhs[i].abs());
                    ((a.lhs[i] - 2.0 * b.lhs[i])
                        .abs()
                        .max((a.rhs[i] - 2.0 * b.rhs[i]).abs()))
                        / scale
                })
                .fold(0.0, f64::max);
            parts.push(verdict(gap <= 1e-10, format!("{name} {gap:.2e}")));
        }
        Ok(all(parts))
    })())
}

fn charged() -> Verdict {
    lift((|| {
        let mut parts = Vec::new();
        for seed in [1, 2, 3] {
            let cc = random_charged_case(seed);
            let lattice = cc.case.ids.domain.lattice(4, 4, 4);
            let gap = electric_free_gap(
                &cc.case.ids,
                cc.case.u.as_ref(),
                cc.case.v.as_ref(),
                &lattice,
                &LADDER,
            )?;
            parts.push(verdict(gap <= 1e-10, format!("E=0 seed {seed} {gap:.2e}")));
        }
        let ids = InitialDataSet::new("flat", Flat::<3>, ZeroTensor, Annulus::cartesian(1.0, 2.0));
        let u = RadialScalar::new(|r| {
            let e = (1.0 / r).exp();
            (5.0 - e, e / (r * r), -e * (2.0 * r + 1.0) / r.powi(4))
        });
        let lattice = ids.domain.lattice(4, 4, 4);
        let e = Coulomb { charge: 1.0 };
        let rep = charged_residual(
            &ids,
            &u,
            &u,
            &e,
            ChargedSources::System,
            ChargedFlux::Projected,
            &lattice,
            &COULOMB_LADDER,
        )?;
        parts.push(verdict(
            rep.max <= 1e-6,
            format!("k=0 Coulomb {:.2e}", rep.max),
        ));
        Ok(all(parts))
    })())
}

fn schwarzschild() -> Verdict {
    lift((|| {
        let e = |i: usize| Vec4::from_fn(|j, _| if i == j { 1.0 } else { 0.0 });
        let mut dirs = Vec::new();
        for a in [2, 3] {
            for b in 0..4 {
                dirs.push((e(a), e(b)));
            }
        }
        let mut parts = Vec::new();
        for (name, c) in [("static", 0.0), ("tilted", 0.1)] {
            let domain = Annulus::spherical(3.0, 8.0);
            let slice = schwarzschild_static_data(1.0, tilted_time(c), domain)?;
            let lattice = domain.lattice(6, 6, 6);
            let points: Vec<Vec4> = lattice
                .iter()
                .map(|x| Vec4::new(slice.time.value(x), x[0], x[1], x[2]))
                .collect();
            let nf = schwarzschild_null_fields_check(1.0, &points, &dirs)?;
            let tort = tortoise_pair_check(&slice, &lattice)?;
            parts.push(verdict(
                nf.max_x.max(nf.max_y) <= 1e-8 && tort.max() <= 1e-7,
                format!(
                    "{name} fields {:.2e} tortoise {:.2e}",
                    nf.max_x.max(nf.max_y),
                    tort.max()
                ),
            ));
        }
        Ok(all(parts))
    })())
}

fn spherical_flow() -> Verdict {
    lift((|| {
        let mut parts = Vec::new();
        let d = RadialPreset::Schwarzschild { mass: 1.0 }.build([0.0, 20.0], DEFAULT_NODES)?;
        let run = run_flow(&d)?;
        let f = &run.flow;
        let s_gap =
            f.s.iter()
                .zip(&f.rho)
                .map(|(s, r)| (s - 0.5 * r).abs())
                .fold(0.0, f64::max);
        let m_gap = run
            .table
            .rows
            .iter()
            .map(|r| (r.m_h - 1.0).abs())
            .fold(0.0, f64::max);
        let gap = run.report.penrose_gap.unwrap_or(f64::NAN);
        parts.push(verdict(
            s_gap <= 1e-10
                && f.theta_residual <= 1e-8
                && m_gap <= 1e-8
                && run.table.drift <= 1e-8
                && gap >= -1e-6
                && run.max_boundary_delta <= 1e-8,
            format!(
                "schwarzschild s {s_gap:.1e} theta {:.1e} |m-1| {m_gap:.1e} drift {:.1e} gap {gap:.1e} boundary {:.1e}",
                f.theta_residual, run.table.drift, run.max_boundary_delta
            ),
        ));
        let d = RadialPreset::DecPerturbed {
            mass: 1.0,
            epsilon: 0.25,
        }
        .build([0.0, 20.0], DEFAULT_NODES)?;
        let run = run_flow(&d)?;
        let mid = run.flow.r[run.flow.r.len() / 2];
        let bf = boundary_functional(&d, &run.flow, mid)?;
        parts.push(verdict(
            run.dec_margin > 0.0
                && run.table.min_delta >= -1e-8
                && run.flow.theta_residual <= 1e-8
                && run.max_boundary_delta <= 1e-8,
            format!(
                "dec margin {:.1e} min step {:.2e} theta {:.1e} boundary {:.1e} (mid {:.1e})",
                run.dec_margin,
                run.table.min_delta,
                run.flow.theta_residual,
                run.max_boundary_delta,
                bf.delta()
            ),
        ));
        Ok(all(parts))
    })())
}

fn solver() -> Verdict {
    lift((|| {
        let mut parts = Vec::new();
        let preset = RadialPreset::MinkowskiLog { c: 0.5 };
        let schedule = ContinuationSchedule {
            tol: 1e-13,
            ..ContinuationSchedule::default()
        }
        .with_eps_floor(1e-10);
        let mut rows = Vec::new();
        for n in [101, 201, 401, 801] {
            let d = preset.build([1.0, 2.0], n)?;
            let grid = d.grid();
            let exact: Vec<(f64, f64)> = grid
                .iter()
                .map(|&r| preset.exact_null_pair(r).unwrap())
                .collect();
            let bc = BoundaryData {
                c_minus: exact[0].0,
                c_plus: exact[n - 1].0,
                d_minus: exact[0].1,
                d_plus: exact[n - 1].1,
            };
            let sol = continuation_solve(&d, &bc, &schedule)?;
            let err = exact
                .iter()
                .zip(sol.u.iter().zip(&sol.v))
                .map(|((eu, ev), (u, v))| (u - eu).abs().max((v - ev).abs()))
                .fold(0.0, f64::max);
            let diag = solution_diagnostics(&d, &sol, &bc, 1.0, sol.eps)?;
            let margin = sol
                .legs
                .iter()
                .map(|l| l.bounds.min())
                .fold(f64::INFINITY, f64::min);
            let h = grid[1] - grid[0];
            rows.push((n, h, err, margin, diag.w_residual, diag.h_residual, sol.eps));
        }
        for w in rows.windows(2) {
            let (a, b) = (w[0], w[1]);
            let order = (a.2 / b.2).log2();
            let h_order = (a.5 / b.5).log2();
            parts.push(verdict(
                (1.8..=2.2).contains(&order) && (1.8..=2.2).contains(&h_order),
                format!("N {}->{} order {order:.3} h-order {h_order:.3}", a.0, b.0),
            ));
        }
        for &(n, h, err, margin, w_res, _, eps) in &rows {
            parts.push(verdict(
                err <= h * h + eps && margin >= -1e-8 && w_res <= h * h,
                format!("N {n} err {err:.2e} margin {margin:.1e} w {w_res:.1e}"),
            ));
        }
        let bc = BoundaryData {
            c_minus: 1.0,
            c_plus: 3.0,
            d_minus: 1.0,
            d_plus: 3.0,
        };
        let exact = |r: f64| 3.0 * r / (4.0 - r);
        let mut errs = Vec::new();
        for n in [101, 201] {
            let d = RadialPreset::Flat.build([1.0, 2.0], n)?;
            let sol = continuation_solve(
                &d,
                &bc,
                &ContinuationSchedule::default().with_eps_floor(1e-10),
            )?;
            let err = sol
                .r
                .iter()
                .zip(sol.u.iter().zip(&sol.v))
                .map(|(&r, (u, v))| (u - exact(r)).abs().max((v - exact(r)).abs()))
                .fold(0.0, f64::max);
            errs.push(err);
        }
        let order = (errs[0] / errs[1]).log2();
        parts.push(verdict(
            (1.8..=2.2).contains(&order),
            format!("flat shell order {order:.3}"),
        ));
        Ok(all(parts))
    })())
}

/// Configs for every command: one that passes, one that fails, one that is
/// rejected.
const MATRIX: [(&str, &str, &str, &str); 8] = [
    (
        "verify-minkowski",
        r#"{"dataset": {"preset": "minkowski-boost"}}"#,
        r#"{"dataset": {"preset": "minkowski-boost", "params": {"perturb": 0.01}}}"#,
        r#"{"dataset": {"preset": "minkowski-boost", "params": {"a": 1.5}}}"#,
    ),
    (
        "verify-identity",
        r#"{"dataset": {"preset": "random-analytic"}, "seed": 2}"#,
        r#"{"dataset": {"preset": "random-analytic"}, "seed": 2, "a": 1.0}"#,
        r#"{"dataset": {"preset": "random-analytic"}, "tol": -1}"#,
    ),
    (
        "verify-stern",
        r#"{"dataset": {"preset": "random-analytic"}, "seed": 3}"#,
        r#"{"dataset": {"preset": "random-analytic"}, "seed": 3, "tol": 1e-12}"#,
        r#"{"dataset": {"preset": "random-analytic"}, "grid": {"ladder": [1e-3, 2e-3]}}"#,
    ),
    (
        "verify-charged",
        r#"{"dataset": {"preset": "coulomb"}}"#,
        r#"{"dataset": {"preset": "coulomb", "params": {"q": 2.0}}}"#,
        r#"{"dataset": {"preset": "coulomb"}, "flux": "sideways"}"#,
    ),
    (
        "verify-schwarzschild",
        r#"{"dataset": {"preset": "schwarzschild-tilted"}}"#,
        r#"{"dataset": {"preset": "schwarzschild-tilted"}, "tol": 1e-16}"#,
        r#"{"dataset": {"preset": "schwarzschild-tilted", "params": {"inner": 1.5}}}"#,
    ),
    (
        "flow-spherical",
        r#"{"dataset": {"preset": "dec-perturbed"}}"#,
        r#"{"dataset": {"preset": "umbilic", "params": {"xi": 0.5}}}"#,
        r#"{"dataset": {"preset": "dec-perturbed"}, "unknown": 1}"#,
    ),
    (
        "solve-a0",
        r#"{"dataset": {"preset": "minkowski-log"}}"#,
        r#"{"dataset": {"preset": "minkowski-log"}, "schedule": {"max_iters": 3}}"#,
        r#"{"dataset": {"preset": "rippled"}}"#,
    ),
    (
        "riemannian-identity",
        r#"{"dataset": {"preset": "random-analytic"}, "seed": 4}"#,
        r#"{"dataset": {"preset": "random-analytic"}, "seed": 4, "a": 1.0}"#,
        r#"{"dataset": {"preset": "nowhere"}}"#,
    ),
];

/// Splices `"command"` into a config body.
fn with_command(cmd: &str, body: &str) -> String {
    format!("{{\"command\": \"{cmd}\", {}", &body.trim_start()[1..])
}

fn invoke(cmd: &str, config: &Path, out: &Path) -> Option<i32> {
    Proc::new(env!("CARGO_BIN_EXE_dnull"))
        .env_remove(dnull_cli::OUT_DIR_ENV)
        .arg(cmd)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .ok()?
        .status
        .code()
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .map(|it| {
            it.filter_map(|e| e.ok())
                .map(|e| {
                    (
                        e.file_name().to_string_lossy().into_owned(),
                        fs::read(e.path()).unwrap_or_default(),
                    )
                })
                .collect()
        })
        .unwrap_or_default();
    files.sort();
    files
}

fn harness() -> Verdict {
    let tmp = match tempfile::tempdir() {
        Ok(t) => t,
        Err(e) => return Err(format!("tempdir: {e}")),
    };
    let mut parts = Vec::new();
    for (cmd, pass, fail, bad) in MATRIX {
        let mut codes = Vec::new();
        for (kind, body) in [("pass", pass), ("fail", fail), ("bad", bad)] {
            let cfg = tmp.path().join(format!("{cmd}-{kind}.json"));
            fs::write(&cfg, with_command(cmd, body)).unwrap();
            codes.push(invoke(
                cmd,
                &cfg,
                &tmp.path().join(format!("{cmd}-{kind}-a")),
            ));
        }
        let cfg = tmp.path().join(format!("{cmd}-pass.json"));
        let (a, b) = (
            tmp.path().join(format!("{cmd}-pass-a")),
            tmp.path().join(format!("{cmd}-pass-b")),
        );
        invoke(cmd, &cfg, &b);
        let (fa, fb) = (dir_bytes(&a), dir_bytes(&b));
        let identical = !fa.is_empty() && fa == fb;
        parts.push(verdict(
            codes == [Some(0), Some(1), Some(2)] && identical,
            format!(
                "{cmd} exits {codes:?} identical {identical} ({} files)",
                fa.len()
            ),
        ));
    }
    all(parts)
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 9] = [
        ("Minkowski exactness", minkowski_exactness),
        ("main divergence identity", main_identity),
        ("Stern identity", stern),
        ("Riemannian specialization", riemannian_specialization),
        ("charged identity", charged),
        ("Schwarzschild structures", schwarzschild),
        ("spherical flow", spherical_flow),
        ("a=0 solver", solver),
        ("harness determinism and exit codes", harness),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (tag, detail) = match check() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!(
            "criterion {} {tag}: {name} ({:.1}s): {detail}",
            i + 1,
            start.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} of {} criteria pass",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
