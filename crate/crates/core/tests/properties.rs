use std::f64::consts::PI;
use std::sync::Arc;

use dnull_core::cases::random_case;
use dnull_core::elliptic::{continuation_solve, BoundaryData, ContinuationSchedule};
use dnull_core::exact_slices::{
    minkowski_boost, minkowski_null_pair, minkowski_quadratic, verify_null_pair,
};
use dnull_core::identity::{modified_hessians, LevelData};
use dnull_core::initial_data::{
    constraint_densities, hawking_mass, null_expansions, Annulus, InitialDataSet, MassVariant,
    Surface,
};
use dnull_core::spherical::{run_flow, RadialPreset};
use dnull_core::tensor::charts::{
    SphericalPullback, SphericalPullbackTensor, TrigTensor, ZeroTensor,
};
use dnull_core::tensor::fields::{Radius, TrigScalar};
use dnull_core::tensor::{level_set_geometry, Connection, Mat3, ScalarField, Vec3};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn point(r: f64, theta: f64, phi: f64) -> Vec3 {
    Annulus::cartesian(1.0, 2.0).point(r, theta, phi)
}

fn angles() -> impl Strategy<Value = (f64, f64, f64)> {
    (1.1f64..1.9, 0.3f64..(PI - 0.3), 0.0f64..(2.0 * PI))
}

/// `2f` for a scalar field `f`.
struct Doubled(Arc<dyn ScalarField<3>>);

impl ScalarField<3> for Doubled {
    fn value(&self, p: &Vec3) -> f64 {
        2.0 * self.0.value(p)
    }
    fn grad(&self, p: &Vec3) -> Vec3 {
        2.0 * self.0.grad(p)
    }
    fn hess(&self, p: &Vec3) -> Mat3 {
        2.0 * self.0.hess(p)
    }
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn connection_is_torsion_free_and_metric(seed in 0u64..10_000, (r, t, f) in angles()) {
        let case = random_case(seed);
        let p = point(r, t, f);
        let c = Connection::at(case.ids.metric.as_ref(), &p).unwrap();
        for k in 0..3 {
            prop_assert!((c.gamma[k] - c.gamma[k].transpose()).amax() < 1e-14);
        }
        // ∇_k g_ij = ∂_k g_ij − Γ^l_ki g_lj − Γ^l_kj g_il
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    let mut d = c.dg[k][(i, j)];
                    for l in 0..3 {
                        d -= c.gamma[l][(k, i)] * c.g[(l, j)] + c.gamma[l][(k, j)] * c.g[(i, l)];
                    }
                    prop_assert!(d.abs() < 1e-10, "{d}");
                }
            }
        }
    }

    #[test]
    fn level_set_frame_ignores_scaling(seed in 0u64..10_000, (r, t, f) in angles()) {
        let case = random_case(seed);
        let p = point(r, t, f);
        let m = case.ids.metric.as_ref();
        let a = level_set_geometry(m, case.u.as_ref(), &p).unwrap();
        let b = level_set_geometry(m, &Doubled(case.u.clone()), &p).unwrap();
        prop_assert!((a.nu - b.nu).amax() < 1e-13);
        prop_assert!((a.mean_curvature - b.mean_curvature).abs() < 1e-12);
        prop_assert!((a.second_form - b.second_form).amax() < 1e-12);
        prop_assert!((a.gauss_curvature - b.gauss_curvature).abs() < 1e-9);
    }

    #[test]
    fn time_reversal_swaps_expansions(seed in 0u64..10_000, (r, t, f) in angles()) {
        let case = random_case(seed);
        let p = point(r, t, f);
        let fwd = null_expansions(&case.ids, case.u.as_ref(), &p).unwrap();
        let rev = null_expansions(&case.ids.time_reversed(), case.u.as_ref(), &p).unwrap();
        prop_assert!((fwd.theta_plus - rev.theta_minus).abs() < 1e-13);
        prop_assert!((fwd.theta_minus - rev.theta_plus).abs() < 1e-13);
        prop_assert!((fwd.theta_plus + fwd.theta_minus - 2.0 * fwd.mean_curvature).abs() < 1e-13);
    }

    #[test]
    fn densities_are_chart_independent(seed in 0u64..10_000, (r, t, f) in angles()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = TrigTensor::random(&mut rng, Mat3::identity(), 3, 0.06, 1.0);
        let k = TrigTensor::random(&mut rng, Mat3::identity() * 0.2, 3, 0.2, 1.0);
        let cart = InitialDataSet::new("cartesian", g.clone(), k.clone(), Annulus::cartesian(1.0, 2.0));
        let sph = InitialDataSet::new(
            "spherical",
            SphericalPullback { inner: g },
            SphericalPullbackTensor { inner: k },
            Annulus::spherical(1.0, 2.0),
        );
        let x = cart.domain.point(r, t, f);
        let y = sph.domain.point(r, t, f);
        let a = constraint_densities(&cart, &x).unwrap();
        let b = constraint_densities(&sph, &y).unwrap();
        prop_assert!((a.mu - b.mu).abs() < 1e-8, "{} {}", a.mu, b.mu);
        prop_assert!((a.j_norm - b.j_norm).abs() < 1e-8, "{} {}", a.j_norm, b.j_norm);
    }

    #[test]
    fn modified_hessian_dominates_its_normal_part(seed in 0u64..10_000, a in 0.0f64..=1.0, (r, t, f) in angles()) {
        let case = random_case(seed);
        let p = point(r, t, f);
        let mh = modified_hessians(&case.ids, case.u.as_ref(), case.v.as_ref(), a, &p).unwrap();
        let c = Connection::at(case.ids.metric.as_ref(), &p).unwrap();
        prop_assert!(c.norm2(&mh.plus) - (a * mh.normal_plus).powi(2) >= -1e-10);
        prop_assert!(c.norm2(&mh.minus) - (a * mh.normal_minus).powi(2) >= -1e-10);
    }

    #[test]
    fn null_coupling_is_nonnegative(seed in 0u64..10_000, (r, t, f) in angles()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let case = random_case(seed);
        let slope = Vec3::new(-1.0, 0.3, 0.2);
        let w = TrigScalar::random(&mut rng, 0.0, slope, 2, 0.2, 1.0);
        let p = point(r, t, f);
        let c = Connection::at(case.ids.metric.as_ref(), &p).unwrap();
        let scale = case.ids.metric.scale();
        let lu = LevelData::at(&c, case.u.as_ref(), &p, scale).unwrap();
        let lw = LevelData::at(&c, &w, &p, scale).unwrap();
        prop_assert!(dnull_core::identity::null_coupling(&c, &lu, &lw) >= -1e-12);
    }

    #[test]
    fn minkowski_pairs_have_unit_coupling(a in -0.6f64..0.6, c in -0.15f64..0.15) {
        let domain = Annulus::cartesian(1.0, 2.0);
        let lattice = domain.lattice(3, 3, 3);
        for slice in [minkowski_boost(a, domain).unwrap(), minkowski_quadratic(c, domain).unwrap()] {
            let pair = minkowski_null_pair(&slice).unwrap();
            let rep = verify_null_pair(&slice.ids, &pair, &lattice).unwrap();
            prop_assert!(rep.max_residual() < 1e-8);
            prop_assert!((rep.coupling_min - 2.0).abs() < 1e-8 && (rep.coupling_max - 2.0).abs() < 1e-8);
        }
    }
}

proptest! {
    #![proptest_config(config(6))]

    #[test]
    fn spacetime_mass_reduces_without_k(seed in 0u64..10_000, level in 1.2f64..1.8) {
        let case = random_case(seed);
        let ids = InitialDataSet::new("k=0", case.ids.metric.clone(), ZeroTensor, case.ids.domain);
        let surface = Surface::StarShaped { f: Arc::new(Radius), level, center: Vec3::zeros(), guess: level };
        let st = hawking_mass(&ids, &surface, MassVariant::Spacetime, 24).unwrap();
        let rm = hawking_mass(&ids, &surface, MassVariant::Riemannian, 24).unwrap();
        prop_assert!((st.mass - rm.mass).abs() < 1e-12, "{} {}", st.mass, rm.mass);
    }

    #[test]
    fn time_reversal_swaps_the_flow_pair(mass in 0.5f64..2.0, epsilon in 0.05f64..0.3) {
        let d = RadialPreset::DecPerturbed { mass, epsilon }.build([0.0, 12.0], 401).unwrap();
        let fwd = run_flow(&d).unwrap();
        let rev = run_flow(&d.time_reversed()).unwrap();
        prop_assert_eq!(fwd.start, rev.start);
        let (a, b) = (&fwd.flow, &rev.flow);
        for i in 0..a.r.len() {
            prop_assert!((a.u[i] - b.v[i]).abs() < 1e-12 && (a.v[i] - b.u[i]).abs() < 1e-12);
            prop_assert!((a.w[i] + b.w[i]).abs() < 1e-12);
            prop_assert!((a.theta_plus[i] - b.theta_minus[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn flow_recovers_half_area_radius(amplitude in -0.5f64..0.5) {
        let d = RadialPreset::Rippled { amplitude }.build([1.0, 5.0], 2001).unwrap();
        let run = run_flow(&d).unwrap();
        let gap = run.flow.s.iter().zip(&run.flow.rho).map(|(s, r)| (s - 0.5 * r).abs()).fold(0.0, f64::max);
        prop_assert!(gap < 1e-10, "{gap}");
        // ripples can make R negative; monotonicity needs the energy condition
        if run.dec_margin >= 0.0 {
            prop_assert!(run.table.min_delta >= -1e-8);
        }
    }
}

fn log_slice_problem(nodes: usize) -> (dnull_core::spherical::RadialIDS, BoundaryData) {
    let preset = RadialPreset::MinkowskiLog { c: 0.5 };
    let d = preset.build([1.0, 2.0], nodes).unwrap();
    let [lo, hi] = d.r_range;
    let ((cl, dl), (ch, dh)) = (
        preset.exact_null_pair(lo).unwrap(),
        preset.exact_null_pair(hi).unwrap(),
    );
    (
        d,
        BoundaryData {
            c_minus: cl,
            c_plus: ch,
            d_minus: dl,
            d_plus: dh,
        },
    )
}

#[test]
fn sigma_legs_shrink_with_the_step() {
    let (d, bc) = log_slice_problem(101);
    let jumps: Vec<f64> = [5, 10, 20]
        .iter()
        .map(|&n| {
            let schedule = ContinuationSchedule {
                sigma_steps: (0..=n).map(|i| i as f64 / n as f64).collect(),
                eps_ladder: vec![1e-2],
                ..ContinuationSchedule::default()
            };
            let sol = continuation_solve(&d, &bc, &schedule).unwrap();
            sol.legs.iter().skip(1).map(|l| l.jump).fold(0.0, f64::max)
        })
        .collect();
    assert!(jumps.windows(2).all(|w| w[1] < 0.7 * w[0]), "{jumps:?}");
}

#[test]
fn eps_legs_decrease_along_the_ladder() {
    for (name, d, bc) in [
        (
            "minkowski-log",
            log_slice_problem(201).0,
            log_slice_problem(201).1,
        ),
        (
            "flat",
            RadialPreset::Flat.build([1.0, 2.0], 201).unwrap(),
            BoundaryData {
                c_minus: 1.0,
                c_plus: 3.0,
                d_minus: 1.0,
                d_plus: 3.0,
            },
        ),
        (
            "schwarzschild",
            RadialPreset::Schwarzschild { mass: 1.0 }
                .build([0.5, 4.0], 201)
                .unwrap(),
            BoundaryData {
                c_minus: 1.0,
                c_plus: 2.5,
                d_minus: 0.8,
                d_plus: 3.0,
            },
        ),
    ] {
        let sol = continuation_solve(&d, &bc, &ContinuationSchedule::default()).unwrap();
        let sigma_legs = ContinuationSchedule::default().sigma_steps.len();
        let jumps: Vec<f64> = sol.legs[sigma_legs..].iter().map(|l| l.jump).collect();
        assert!(jumps.windows(2).all(|w| w[1] < w[0]), "{name}: {jumps:?}");
    }
}
