mod common;

use acs_core::{merge_parallel, Error, LinearFunctional, MeasurementLedger, MeasurementOracle, Seed, Signal, SupportSet};
use common::*;
use proptest::prelude::*;
use rand::Rng;

fn oracle(v: &[f64]) -> MeasurementOracle {
    MeasurementOracle::new(Signal::new(v.to_vec()).unwrap())
}

/// A closed ledger with the given per-round counts.
fn ledger(counts: &[usize]) -> MeasurementLedger {
    let mut o = oracle(&[1.0; 8]);
    for &c in counts {
        let batch: Vec<LinearFunctional> = (0..c).map(|i| LinearFunctional::basis(i % 8)).collect();
        o.measure_round(&batch).unwrap();
    }
    o.ledger().clone()
}

#[test]
fn round_protocol() {
    let mut o = oracle(&[0.0, 0.0, 0.0, 7.0]);
    let t = o.begin_round().unwrap();
    assert_eq!(o.ledger().total_rounds(), 0);
    assert!(matches!(o.begin_round(), Err(Error::RoundAlreadyOpen)));
    assert_eq!(o.measure(&[LinearFunctional::basis(3)]).unwrap(), vec![7.0]);
    o.commit_round(t).unwrap();
    assert_eq!(o.ledger().total_rounds(), 1);
    assert!(matches!(o.commit_round(t), Err(Error::StaleToken) | Err(Error::NoOpenRound)));
    let t2 = o.begin_round().unwrap();
    assert!(matches!(o.commit_round(t), Err(Error::StaleToken)));
    o.commit_round(t2).unwrap();
    assert_eq!(o.ledger().per_round_counts(), &[1, 0]);
    assert_eq!(o.ledger().empty_rounds(), 1);
    assert!(matches!(o.measure(&[LinearFunctional::basis(0)]), Err(Error::NoOpenRound)));
}

#[test]
fn measure_examples() {
    let mut o = oracle(&[1.0, 2.0, 3.0]);
    let ones = LinearFunctional::new(vec![(0, 1.0), (1, 1.0), (2, 1.0)]).unwrap();
    assert_eq!(o.measure_round(&[ones]).unwrap(), vec![6.0]);
    let t = o.begin_round().unwrap();
    assert!(matches!(
        o.measure(&[LinearFunctional::basis(5)]),
        Err(Error::IndexOutOfRange { index: 5, n: 3 })
    ));
    let batch = vec![LinearFunctional::basis(0); 3];
    o.measure(&batch).unwrap();
    o.commit_round(t).unwrap();
    assert_eq!(o.ledger().per_round_counts(), &[1, 3]);
}

#[test]
fn observe_examples() {
    let mut o = oracle(&[9.0, 8.0, 7.0]);
    let got = o.observe_round(&SupportSet::new(vec![0, 2], 3).unwrap()).unwrap();
    assert_eq!(got.into_iter().collect::<Vec<_>>(), vec![(0, 9.0), (2, 7.0)]);
    let t = o.begin_round().unwrap();
    assert!(o.observe_coordinates(&SupportSet::empty()).unwrap().is_empty());
    o.commit_round(t).unwrap();
    assert_eq!(o.ledger().total_measurements(), 2);
    let mut o = oracle(&[1.0; 100]);
    o.observe_round(&SupportSet::full(100)).unwrap();
    assert_eq!(o.ledger().total_measurements(), 100);
}

// E[(sum_i s_i x_i)^2] = ||x||_2^2 over random signs.
#[test]
fn random_sign_measurements_estimate_energy() {
    let v = gaussian(50, Seed(1));
    let energy: f64 = v.iter().map(|a| a * a).sum();
    let mut o = oracle(&v);
    let mut rng = Seed(2).rng();
    let draws = 10_000;
    let batch: Vec<LinearFunctional> = (0..draws)
        .map(|_| {
            LinearFunctional::new((0..v.len()).map(|i| (i, if rng.random::<bool>() { 1.0 } else { -1.0 })).collect())
                .unwrap()
        })
        .collect();
    let y = o.measure_round(&batch).unwrap();
    let mean = y.iter().map(|a| a * a).sum::<f64>() / draws as f64;
    // Var(y^2) <= 2 ||x||^4, so the standard error is below 1.5% of the energy.
    assert!((mean - energy).abs() < 0.06 * energy, "{mean} vs {energy}");
}

#[test]
fn repeated_batches_are_identical() {
    let v = gaussian(200, Seed(5));
    let mut o = oracle(&v);
    let f = LinearFunctional::new((0..200).map(|i| (i, (i as f64).sin())).collect()).unwrap();
    let a = o.measure_round(std::slice::from_ref(&f)).unwrap();
    let b = o.measure_round(&[f]).unwrap();
    assert_eq!(a, b);
}

#[test]
fn merge_examples() {
    let m = merge_parallel(&[ledger(&[5, 5]), ledger(&[3, 3])]).unwrap();
    assert_eq!((m.total_rounds(), m.total_measurements()), (2, 16));
    let m = merge_parallel(&[MeasurementLedger::new(), ledger(&[1, 2, 3, 4])]).unwrap();
    assert_eq!(m.total_rounds(), 4);
    let one = ledger(&[4, 1, 7]);
    let many = merge_parallel(&vec![one.clone(); 64]).unwrap();
    assert_eq!(many.total_measurements(), 64 * one.total_measurements());
    assert_eq!(many.total_rounds(), one.total_rounds());
}

#[test]
fn merge_rejects_open_ledgers() {
    let mut o = oracle(&[1.0]);
    o.begin_round().unwrap();
    assert!(matches!(merge_parallel(&[o.ledger().clone()]), Err(Error::OpenLedger)));
}

#[test]
fn forked_children_charge_parent_as_parallel() {
    let mut o = oracle(&[1.0, 2.0, 3.0, 4.0]);
    o.measure_round(&[LinearFunctional::basis(0)]).unwrap();
    let mut a = o.fork();
    let mut b = o.fork();
    a.measure_round(&[LinearFunctional::basis(1), LinearFunctional::basis(2)]).unwrap();
    for i in 0..3 {
        b.measure_round(&[LinearFunctional::basis(i)]).unwrap();
    }
    o.join_parallel(vec![a, b]).unwrap();
    assert_eq!(o.ledger().per_round_counts(), &[1, 3, 1, 1]);
}

proptest! {
    #[test]
    fn merge_sums_and_maxes(a in prop::collection::vec(0usize..6, 0..6), b in prop::collection::vec(0usize..6, 0..6)) {
        let (la, lb) = (ledger(&a), ledger(&b));
        let m = merge_parallel(&[la.clone(), lb.clone()]).unwrap();
        prop_assert_eq!(m.total_rounds(), a.len().max(b.len()));
        prop_assert_eq!(m.total_measurements(), la.total_measurements() + lb.total_measurements());
        prop_assert_eq!(m.total_measurements(), m.per_round_counts().iter().sum::<u64>());
        prop_assert_eq!(merge_parallel(std::slice::from_ref(&la)).unwrap(), la);
    }

    #[test]
    fn ledger_counts_never_decrease(rounds in prop::collection::vec(0usize..5, 1..8)) {
        let mut o = oracle(&[1.0; 8]);
        let mut last = (0u64, 0usize);
        for c in rounds {
            let batch: Vec<LinearFunctional> = (0..c).map(LinearFunctional::basis).collect();
            o.measure_round(&batch).unwrap();
            let now = (o.ledger().total_measurements(), o.ledger().total_rounds());
            prop_assert!(now.0 >= last.0 && now.1 == last.1 + 1);
            last = now;
        }
    }

    #[test]
    fn functional_merges_duplicates(terms in prop::collection::vec((0usize..10, -5i32..5), 1..20)) {
        let f = LinearFunctional::new(terms.iter().map(|&(i, a)| (i, a as f64)).collect());
        let mut dense = [0.0f64; 10];
        for &(i, a) in &terms {
            dense[i] += a as f64;
        }
        match f {
            Ok(f) => {
                for &(i, a) in f.terms() {
                    prop_assert_eq!(a, dense[i]);
                }
                prop_assert_eq!(f.nnz(), dense.iter().filter(|a| **a != 0.0).count());
            }
            Err(e) => {
                prop_assert!(matches!(e, Error::EmptyFunctional));
                prop_assert!(dense.iter().all(|a| *a == 0.0));
            }
        }
    }
}
