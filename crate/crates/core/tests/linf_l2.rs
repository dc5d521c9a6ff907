mod common;

use acs_core::linf_l2::{linf_l2_recover_on, LinfL2Params};
use acs_core::{linf_error_ratio, linf_l2_recover, MeasurementOracle, Seed, SupportSet};
use common::*;
use proptest::prelude::*;

fn run(v: &[f64], params: &LinfL2Params, seed: Seed) -> (acs_core::linf_l2::LinfL2Output, MeasurementOracle) {
    let mut o = MeasurementOracle::new(signal(v.to_vec()));
    let out = linf_l2_recover_on(&mut o, &SupportSet::full(v.len()), params, seed).unwrap();
    (out, o)
}

#[test]
fn exact_sparse_is_recovered_exactly() {
    let (n, k) = (1 << 14, 8);
    for t in 0..20 {
        let mut v = vec![0.0; n];
        let mut rng = Seed(t).rng();
        for (j, i) in rand::seq::index::sample(&mut rng, n, k).into_iter().enumerate() {
            v[i] = 10.0 + 3.0 * j as f64;
        }
        let (out, _) = run(&v, &LinfL2Params::new(k), Seed(t).derive("linf", 0));
        for (i, &a) in v.iter().enumerate() {
            assert_eq!(out.estimate.get(i), a, "trial {t} coordinate {i}");
        }
    }
}

#[test]
fn zero_signal() {
    let n = 1 << 12;
    let mut o = MeasurementOracle::new(signal(vec![0.0; n]));
    assert!(linf_l2_recover(&mut o, &LinfL2Params::new(4), Seed(1)).unwrap().is_empty());
}

#[test]
fn small_universe_is_observed_outright() {
    let v = gaussian(100, Seed(2));
    let (out, o) = run(&v, &LinfL2Params::new(8), Seed(3));
    assert!(out.degenerate);
    assert_eq!(o.ledger().total_measurements(), 100);
    assert_eq!(o.ledger().total_rounds(), 1);
    assert_eq!(linf_error_ratio(&signal(v), &out.estimate, 8), 0.0);
}

fn guarantee_rate(k: usize, forced: usize, trials: u64) -> (f64, f64) {
    let n = 1 << 14;
    let mut params = LinfL2Params::new(k);
    params.forced_search_failures = forced;
    let (mut good, mut all_spikes) = (0, 0);
    for t in 0..trials {
        let (v, spikes) = spikes_over_noise(n, k, 10.0, Seed(t));
        let (out, _) = run(&v, &params, Seed(t).derive("linf", 0));
        if linf_error_ratio(&signal(v), &out.estimate, k) <= 1.0 {
            good += 1;
        }
        if spikes.iter().all(|&i| out.estimate.get(i) != 0.0) {
            all_spikes += 1;
        }
    }
    (rate(good, trials as usize), rate(all_spikes, trials as usize))
}

#[test]
fn planted_spikes_meet_the_guarantee() {
    for k in [8, 16] {
        let (ok, spikes) = guarantee_rate(k, 0, 300);
        assert!(ok >= 0.9, "k={k}: {ok}");
        assert!(spikes >= 0.9, "k={k}: spikes found in {spikes}");
    }
}

// The cleanup sketch absorbs ceil(k / log2(n)^2) failed searches, and a few more.
#[test]
fn tolerates_failed_searches() {
    let (n, k) = (1usize << 14, 16);
    let budget = (k as f64 / ((n as f64).log2().powi(2))).ceil() as usize;
    for forced in [budget, budget + 1] {
        let (ok, _) = guarantee_rate(k, forced, 100);
        assert!(ok >= 0.9, "{forced} forced failures: {ok}");
    }
}

#[test]
fn rounds_grow_doubly_logarithmically() {
    let k = 8;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for log_n in [10u32, 12, 14, 16, 18] {
        let n = 1usize << log_n;
        let mut rounds: Vec<usize> = (0..21)
            .map(|t| {
                let (v, _) = spikes_over_noise(n, k, 10.0, Seed(t));
                run(&v, &LinfL2Params::new(k), Seed(t).derive("r", 0)).1.ledger().total_rounds()
            })
            .collect();
        rounds.sort_unstable();
        xs.push((log_n as f64).log2());
        ys.push(rounds[10] as f64);
    }
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    assert!(sxy / sxx <= 12.0, "medians {ys:?}");
    assert!(ys.iter().all(|&r| r <= 30.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn searches_respect_cap_and_estimate_is_observed(
        log_n in 9u32..14, k in 1usize..12, s in any::<u64>(), alpha in 0.3f64..1.2
    ) {
        let n = 1usize << log_n;
        let v = power_law(n, alpha, Seed(s));
        let params = LinfL2Params::new(k);
        let (out, _) = run(&v, &params, Seed(s ^ 5));
        prop_assert!(out.parts_searched <= params.selection_cap());
        for (i, a) in out.estimate.iter() {
            prop_assert_eq!(a, v[i]);
            prop_assert!(out.observed.contains(i));
        }
    }
}
