mod common;

use acs_core::lp_lp::{derive_lp_params_with, EpsPrimeReading, LpOptions};
use acs_core::{derive_lp_params, error_ratio, lp_lp_recover, Error, MeasurementOracle, Seed};
use common::*;
use proptest::prelude::*;

#[test]
fn derived_parameter_examples() {
    let a = derive_lp_params(8, 0.25, 1.0).unwrap();
    assert_eq!((a.f, a.q, a.r), (0.5, 0.5, 2));
    assert_eq!(a.reps, (8.0 / (2.0 * 0.5 * 3f64.sqrt())).ceil() as usize);

    let b = derive_lp_params(8, 0.3, 0.5).unwrap();
    assert_eq!(b.q, 0.0);

    let c = derive_lp_params(8, 0.1, 1.999).unwrap();
    assert!((c.f - 0.1).abs() < 1e-3);
    assert_eq!(c.r, 4);

    assert_eq!(derive_lp_params(1, 0.5, 1.0).unwrap().r, 1);
    assert!(matches!(derive_lp_params(8, 0.25, 2.0), Err(Error::InvalidP(_))));
    assert!(matches!(derive_lp_params(8, 0.25, 0.0), Err(Error::InvalidP(_))));
}

#[test]
fn eps_prime_readings_and_floor() {
    // r = 2, so the grouped reading is (1/12)^2 and the other is 1/(4 * 9).
    let grouped = derive_lp_params(8, 0.25, 1.0).unwrap();
    assert_eq!(grouped.eps_prime, 0.05);
    assert!(grouped.eps_prime_raised);
    let opts = LpOptions { eps_prime_reading: EpsPrimeReading::ExponentOnLevels, eps_prime_floor: 0.0, ..LpOptions::default() };
    let other = derive_lp_params_with(8, 0.25, 1.0, opts).unwrap();
    assert!((other.eps_prime - 1.0 / 36.0).abs() < 1e-15);
    let loose = LpOptions { eps_prime_floor: 0.0, ..LpOptions::default() };
    let raw = derive_lp_params_with(8, 0.25, 1.0, loose).unwrap();
    assert!((raw.eps_prime - 1.0 / 144.0).abs() < 1e-15);
    assert!(!raw.eps_prime_raised);
}

#[test]
fn repetitions_beyond_budget_are_flagged() {
    let opts = LpOptions { max_reps: 3, ..LpOptions::default() };
    let params = derive_lp_params_with(64, 0.25, 1.0, opts).unwrap();
    assert!(params.budget_clipped());
    assert_eq!(params.reps_used(), 3);
    let mut o = MeasurementOracle::new(signal(gaussian(1 << 10, Seed(1))));
    assert!(lp_lp_recover(&mut o, &params, Seed(2)).unwrap().budget_clipped);
}

#[test]
fn exact_sparse_and_zero() {
    let (n, k) = (1 << 12, 8);
    for p in [0.5, 1.0, 1.5] {
        let mut v = vec![0.0; n];
        let mut rng = Seed(3).rng();
        for (j, i) in rand::seq::index::sample(&mut rng, n, k).into_iter().enumerate() {
            v[i] = 4.0 + j as f64;
        }
        let x = signal(v);
        let mut o = MeasurementOracle::new(x.clone());
        let out = lp_lp_recover(&mut o, &derive_lp_params(k, 0.25, p).unwrap(), Seed(4)).unwrap();
        assert_eq!(error_ratio(&x, &out.estimate, k, p), 0.0);
    }
    let mut o = MeasurementOracle::new(signal(vec![0.0; n]));
    assert!(lp_lp_recover(&mut o, &derive_lp_params(k, 0.5, 1.0).unwrap(), Seed(4)).unwrap().estimate.is_empty());
}

/// `k` ones and `ceil(1/eps)` entries equal to `eps` at random positions.
fn hard_instance(n: usize, k: usize, eps: f64, seed: Seed) -> Vec<f64> {
    let tail = (1.0 / eps).ceil() as usize;
    let mut v = vec![0.0; n];
    let mut rng = seed.rng();
    for (j, i) in rand::seq::index::sample(&mut rng, n, k + tail).into_iter().enumerate() {
        v[i] = if j < k { 1.0 } else { eps };
    }
    v
}

#[test]
fn hard_instance_in_l1() {
    let (n, k, eps, trials) = (1 << 14, 8, 0.25, 300);
    let params = derive_lp_params(k, eps, 1.0).unwrap();
    let mut good = 0;
    for t in 0..trials {
        let x = signal(hard_instance(n, k, eps, Seed(t)));
        let mut o = MeasurementOracle::new(x.clone());
        let out = lp_lp_recover(&mut o, &params, Seed(t).derive("lp", 0)).unwrap();
        if error_ratio(&x, &out.estimate, k, 1.0) <= 1.0 + eps {
            good += 1;
        }
    }
    assert!(rate(good, trials as usize) >= 2.0 / 3.0, "{good} of {trials}");
}

#[test]
fn medians_stay_within_their_targets() {
    let (n, k) = (1 << 12, 4);
    for eps in [0.1, 0.5] {
        let params = derive_lp_params(k, eps, 1.0).unwrap();
        let mut ratios: Vec<f64> = (0..21)
            .map(|t| {
                let x = signal(power_law(n, 0.9, Seed(t)));
                let mut o = MeasurementOracle::new(x.clone());
                let out = lp_lp_recover(&mut o, &params, Seed(t).derive("m", 0)).unwrap();
                error_ratio(&x, &out.estimate, k, 1.0)
            })
            .collect();
        ratios.sort_by(f64::total_cmp);
        assert!(ratios[10] <= 1.0 + eps, "eps={eps}: median {}", ratios[10]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn levels_are_disjoint_and_values_observed(
        log_n in 8u32..12, k in 1usize..6, eps in 0.2f64..0.9, p in 0.3f64..1.9, s in any::<u64>()
    ) {
        let n = 1usize << log_n;
        let v = power_law(n, 0.8, Seed(s));
        let mut o = MeasurementOracle::new(signal(v.clone()));
        let params = derive_lp_params(k, eps, p).unwrap();
        let out = lp_lp_recover(&mut o, &params, Seed(s ^ 4)).unwrap();
        prop_assert_eq!(out.levels.len(), params.r + 1);
        let total: usize = out.levels.iter().map(|l| l.len()).sum();
        let mut all: Vec<usize> = out.levels.iter().flat_map(|l| l.iter()).collect();
        all.sort_unstable();
        all.dedup();
        prop_assert_eq!(all.len(), total);
        for (i, a) in out.estimate.iter() {
            prop_assert_eq!(a, v[i]);
            prop_assert!(all.binary_search(&i).is_ok());
        }
    }

    #[test]
    fn derived_counts_are_positive(k in 1usize..100, eps in 0.01f64..0.99, p in 0.05f64..1.99) {
        let params = derive_lp_params(k, eps, p).unwrap();
        prop_assert!(params.r >= 1 && params.reps >= 1);
        prop_assert!((params.f - eps.powf(p / 2.0)).abs() <= 1e-15);
        prop_assert_eq!(params.q, (p - 0.5).max(0.0));
        prop_assert!(params.eps_prime >= params.options.eps_prime_floor);
    }
}
