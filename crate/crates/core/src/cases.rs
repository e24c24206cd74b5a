//! Seeded random analytic test cases `(g, k, u, v, E)`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::initial_data::{Annulus, InitialDataSet};
use crate::tensor::charts::{Flat, TrigTensor};
use crate::tensor::fields::TrigScalar;
use crate::tensor::{Mat3, ScalarField, Vec3, VectorField};

/// A smooth random data set with a pair of positive functions whose
/// gradients stay away from zero and from each other's negatives.
#[derive(Clone)]
pub struct AnalyticCase {
    pub seed: u64,
    pub ids: InitialDataSet,
    pub u: Arc<dyn ScalarField<3>>,
    pub v: Arc<dyn ScalarField<3>>,
}

fn pair<R: Rng>(rng: &mut R) -> (TrigScalar<3>, TrigScalar<3>) {
    let slope_u = Vec3::new(1.0, rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3));
    let slope_v = Vec3::new(rng.gen_range(0.2..0.6), 1.0, rng.gen_range(-0.3..0.3));
    let u = TrigScalar::random(rng, 6.0, slope_u, 3, 0.15, 1.2);
    let v = TrigScalar::random(rng, 6.0, slope_v, 3, 0.15, 1.2);
    (u, v)
}

/// Curved metric `δ + O(0.06)` and `k = 0.2 δ + O(0.2)` on the Cartesian
/// annulus `1 ≤ |x| ≤ 2`.
pub fn random_case(seed: u64) -> AnalyticCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = TrigTensor::random(&mut rng, Mat3::identity(), 3, 0.06, 1.0);
    let k = TrigTensor::random(&mut rng, Mat3::identity() * 0.2, 3, 0.2, 1.0);
    let (u, v) = pair(&mut rng);
    AnalyticCase {
        seed,
        ids: InitialDataSet::new(format!("random-{seed}"), g, k, Annulus::cartesian(1.0, 2.0)),
        u: Arc::new(u),
        v: Arc::new(v),
    }
}

/// `curl A` for `A = Σ a_n sin(b_n·x + c_n)`: divergence free in a flat
/// Cartesian chart.
#[derive(Clone, Debug)]
pub struct TrigCurl {
    pub modes: Vec<(Vec3, Vec3, f64)>,
}

impl TrigCurl {
    pub fn random<R: Rng>(rng: &mut R, modes: usize, amp: f64, max_wave: f64) -> Self {
        let modes = (0..modes)
            .map(|_| {
                let a = Vec3::from_fn(|_, _| rng.gen_range(-amp..amp));
                let b = Vec3::from_fn(|_, _| rng.gen_range(-max_wave..max_wave));
                (a, b, rng.gen_range(0.0..std::f64::consts::TAU))
            })
            .collect();
        Self { modes }
    }
}

impl VectorField<3> for TrigCurl {
    fn value(&self, p: &Vec3) -> Vec3 {
        self.modes
            .iter()
            .map(|(a, b, c)| b.cross(a) * (b.dot(p) + c).cos())
            .sum()
    }
    fn partials(&self, p: &Vec3) -> [Vec3; 3] {
        std::array::from_fn(|k| {
            self.modes
                .iter()
                .map(|(a, b, c)| b.cross(a) * (-(b.dot(p) + c).sin() * b[k]))
                .sum()
        })
    }
}

/// A flat-metric case with random `k`, `u`, `v` and a divergence-free `E`.
#[derive(Clone)]
pub struct ChargedCase {
    pub case: AnalyticCase,
    pub e: Arc<dyn VectorField<3>>,
}

pub fn random_charged_case(seed: u64) -> ChargedCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_c4a6);
    let k = TrigTensor::random(&mut rng, Mat3::identity() * 0.2, 3, 0.2, 1.0);
    let (u, v) = pair(&mut rng);
    let e = TrigCurl::random(&mut rng, 3, 0.3, 1.0);
    ChargedCase {
        case: AnalyticCase {
            seed,
            ids: InitialDataSet::new(
                format!("random-charged-{seed}"),
                Flat::<3>,
                k,
                Annulus::cartesian(1.0, 2.0),
            ),
            u: Arc::new(u),
            v: Arc::new(v),
        },
        e: Arc::new(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::oracle::fd_partials;

    #[test]
    fn curl_field_is_divergence_free() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let e = TrigCurl::random(&mut rng, 4, 1.0, 2.0);
        let p = Vec3::new(0.4, -1.0, 0.7);
        let d = e.partials(&p);
        assert!((0..3).map(|i| d[i][i]).sum::<f64>().abs() < 1e-14);
        let fd = fd_partials(|q| e.value(q), &p, 1e-5);
        for k in 0..3 {
            assert!((fd[k] - d[k]).amax() < 1e-8);
        }
    }

    #[test]
    fn cases_are_deterministic() {
        let p = Vec3::new(1.2, 0.3, -0.4);
        let (a, b) = (random_case(7), random_case(7));
        assert_eq!(a.u.value(&p), b.u.value(&p));
        assert_eq!(a.ids.metric.components(&p), b.ids.metric.components(&p));
    }
}
