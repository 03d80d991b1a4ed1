use copula_discrepancy::baselines::{ksd, naive_tau_discrepancy, KsdConfig, KsdEstimator};
use copula_discrepancy::{seeded_rng, BivariateSample};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn standard_score(x: [f64; 2]) -> [f64; 2] {
    [-x[0], -x[1]]
}

fn normal_sample(n: usize, shift: f64, seed: u64) -> BivariateSample {
    let mut rng = seeded_rng(seed);
    BivariateSample::from_points((0..n).map(|_| {
        let a: f64 = rng.sample(StandardNormal);
        let b: f64 = rng.sample(StandardNormal);
        (a + shift, b + shift)
    }))
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn vstat_is_non_negative(
        points in prop::collection::vec((-5f64..5.0, -5f64..5.0), 2..=60),
        c in 0.1f64..3.0,
        beta in -0.95f64..-0.05,
        mx in -2f64..2.0,
    ) {
        let s = BivariateSample::from_points(points).unwrap();
        let cfg = KsdConfig { c, beta, estimator: KsdEstimator::VStat };
        let v = ksd(&s, |x| [mx - x[0], -2.0 * x[1]], &cfg).unwrap();
        prop_assert!(v >= -1e-12, "{}", v);
    }

    #[test]
    fn ksd_ignores_point_order(points in prop::collection::vec((-5f64..5.0, -5f64..5.0), 2..=60), rot in 0usize..60) {
        let s = BivariateSample::from_points(points.clone()).unwrap();
        let mut p = points;
        let k = rot % p.len();
        p.rotate_left(k);
        p.reverse();
        let t = BivariateSample::from_points(p).unwrap();
        let cfg = KsdConfig::default();
        let (a, b) = (ksd(&s, standard_score, &cfg).unwrap(), ksd(&t, standard_score, &cfg).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }
}

#[test]
fn ustat_is_centred_under_the_null() {
    let cfg = KsdConfig::default();
    let values: Vec<f64> = (0..20)
        .map(|r| ksd(&normal_sample(5000, 0.0, 300 + r), standard_score, &cfg).unwrap())
        .collect();
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt();
    // One draw at n = 5000 against the spread of independent draws.
    assert!(values[0].abs() < 3.0 * sd, "{} vs sd {sd}", values[0]);
    assert!(
        mean.abs() < 3.0 * sd / m.sqrt(),
        "mean {mean}, se {}",
        sd / m.sqrt()
    );
}

#[test]
fn shifted_sample_is_separated() {
    let cfg = KsdConfig::default();
    for r in 0..100 {
        let on = ksd(&normal_sample(2000, 0.0, 10_000 + r), standard_score, &cfg).unwrap();
        let off = ksd(&normal_sample(2000, 2.0, 20_000 + r), standard_score, &cfg).unwrap();
        assert!(off > on, "replication {r}: {off} <= {on}");
    }
}

#[test]
fn naive_discrepancy_reference_cases() {
    let s = BivariateSample::from_points([(1., 1.), (2., 3.), (3., 2.), (4., 4.)]).unwrap();
    assert!(naive_tau_discrepancy(&s, 2.0 / 3.0).unwrap() < 1e-15);
    assert!((naive_tau_discrepancy(&s, 0.5).unwrap() - 1.0 / 6.0).abs() < 1e-15);
    assert!(naive_tau_discrepancy(&s, 1.5).is_err());
}
