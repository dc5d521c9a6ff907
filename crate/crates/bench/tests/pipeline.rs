use std::process::Command;

use acs_bench::check::check_records;
use acs_bench::records::{estimates_text, parse_estimates, records_from_csv, records_to_csv};
use acs_bench::summary::wilson_interval;
use acs_bench::{generate_signal, parse_config, run_grid, summarize, FamilyKind, RunRecord, SignalFamily};
use acs_core::{tail_norm, Seed};
use proptest::prelude::*;

fn family(kind: FamilyKind, n: usize, k: usize, eps: f64) -> SignalFamily {
    SignalFamily { kind, n, k, eps }
}

#[test]
fn family_examples() {
    let zero = generate_signal(&family(FamilyKind::Zero, 16, 1, 0.5), Seed(1)).unwrap();
    assert!(zero.values().iter().all(|&v| v == 0.0));

    let sparse = generate_signal(&family(FamilyKind::ExactSparse { amplitude: 1.0 }, 16, 3, 0.5), Seed(1)).unwrap();
    assert_eq!(sparse.values().iter().filter(|v| **v != 0.0).count(), 3);
    assert_eq!(tail_norm(&sparse, 3, 1.0), 0.0);

    let hard = generate_signal(&family(FamilyKind::HardInstance, 64, 1, 0.1), Seed(1)).unwrap();
    let mut vals: Vec<f64> = hard.values().iter().copied().filter(|v| *v != 0.0).collect();
    vals.sort_by(|a, b| b.total_cmp(a));
    assert_eq!(vals.len(), 11);
    assert_eq!(vals[0], 1.0);
    assert!(vals[1..].iter().all(|&v| v == 0.1));
    assert!((tail_norm(&hard, 1, 1.0) - 1.0).abs() < 1e-12);

    assert!(generate_signal(&family(FamilyKind::ExactSparse { amplitude: 1.0 }, 4, 9, 0.5), Seed(1)).is_err());
}

#[test]
fn family_labels_round_trip() {
    for kind in [
        FamilyKind::Zero,
        FamilyKind::ExactSparse { amplitude: 2.5 },
        FamilyKind::SpikePlusGaussian { snr: 10.0 },
        FamilyKind::PowerLaw { alpha: 0.7 },
        FamilyKind::HardInstance,
    ] {
        assert_eq!(FamilyKind::parse(&kind.to_string()).unwrap(), kind);
    }
    assert!(FamilyKind::parse("pink-noise").is_err());
}

const SMALL: &str = "
[defaults]
trials = 10

[one]
scheme = linf_l2
family = spike-plus-gaussian(snr=10)
n = 2048
k = 4
eps = 0.5
";

#[test]
fn grid_gives_one_record_per_trial_and_repeats() {
    let cells = parse_config(SMALL).unwrap();
    let a = run_grid(&cells, 7);
    assert_eq!(a.len(), 10);
    let ids: Vec<&str> = a.iter().map(|o| o.record.run_id.as_str()).collect();
    assert_eq!(ids[0], "c0000-t00000");
    assert_eq!(ids[9], "c0000-t00009");
    let b = acs_bench::runner::run_grid_sequential(&cells, 7);
    let rec = |o: &[acs_bench::TrialOutcome]| -> Vec<RunRecord> { o.iter().map(|t| t.record.clone()).collect() };
    assert_eq!(records_to_csv(&rec(&a)).unwrap(), records_to_csv(&rec(&b)).unwrap());
    let c = run_grid(&cells, 8);
    assert_ne!(records_to_csv(&rec(&a)).unwrap(), records_to_csv(&rec(&c)).unwrap());
}

#[test]
fn bad_eps_is_a_config_error() {
    let err = parse_config(&SMALL.replace("eps = 0.5", "eps = 0")).unwrap_err();
    assert_eq!(err.line, 10);
}

#[test]
fn checker_agrees_with_recorded_flags() {
    let text = "
[defaults]
trials = 6
[mixed]
scheme = lp_lp, linf_l2, round_optimal_l2l2, eps_improved_l2l2, count_sketch
family = spike-plus-gaussian(snr=3), power-law(alpha=0.7), hard-instance-eps
n = 1024
k = 4
eps = 0.25
p = 0.5, 1.5
";
    let outcomes = run_grid(&parse_config(text).unwrap(), 11);
    let records: Vec<RunRecord> = outcomes.iter().map(|o| o.record.clone()).collect();
    let est = estimates_text(outcomes.iter().filter_map(|o| o.estimate.as_ref().map(|e| (o.record.run_id.as_str(), e))));
    let report = check_records(&records, &parse_estimates(&est).unwrap());
    assert_eq!(report.checked, records.len());
    assert!(report.mismatches.is_empty(), "{:?}", report.mismatches);
    // Not every run succeeds at snr 3, so the agreement is not vacuous.
    assert!(records.iter().any(|r| r.success) && records.iter().any(|r| !r.success));
}

fn record(measurements: u64, rounds: usize, ratio: f64, success: bool) -> RunRecord {
    RunRecord {
        run_id: "c0000-t00000".into(),
        scheme: "linf_l2".into(),
        family: "zero".into(),
        n: 64,
        k: 2,
        eps: 0.5,
        p: f64::INFINITY,
        seed: 1,
        measurements,
        rounds,
        error_ratio: ratio,
        success,
        status: "ok".into(),
        wall_time_ms: 0.0,
    }
}

#[test]
fn summary_examples() {
    let s = summarize(&vec![record(10, 3, 0.5, true); 10]).unwrap();
    assert_eq!(s.cells.len(), 1);
    assert_eq!(s.cells[0].success_rate, 1.0);

    let recs = vec![record(10, 1, 0.1, true), record(30, 5, 0.9, false), record(20, 2, 0.3, true), record(40, 9, 2.0, false)];
    let c = &summarize(&recs).unwrap().cells[0];
    assert_eq!((c.median_measurements, c.median_rounds, c.median_error_ratio), (25.0, 3.5, 0.6));
    assert_eq!(c.successes, 2);
    let (lo, hi) = wilson_interval(2, 4);
    assert_eq!((c.wilson_low, c.wilson_high), (lo, hi));
    assert!(summarize(&[]).is_err());
}

#[test]
fn clipped_runs_are_excluded_from_rates() {
    let mut clipped = record(10, 3, 9.0, false);
    clipped.status = "budget-clipped".into();
    let c = &summarize(&[record(10, 3, 0.5, true), clipped]).unwrap().cells[0];
    assert_eq!((c.trials, c.successes, c.clipped), (1, 1, 1));
}

#[test]
fn cli_run_summarize_check() {
    let dir = std::env::temp_dir().join(format!("acs-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("grid.conf");
    std::fs::write(&cfg, SMALL).unwrap();
    let out = dir.join("runs.csv");
    let bin = env!("CARGO_BIN_EXE_acs");
    let status = Command::new(bin)
        .args(["run", "--config", cfg.to_str().unwrap(), "--seed", "3", "--out", out.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    let records = records_from_csv(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(records.len(), 10);
    let summary = dir.join("summary.csv");
    let status = Command::new(bin)
        .args(["summarize", "--in", out.to_str().unwrap(), "--out", summary.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(std::fs::read_to_string(&summary).unwrap().lines().count() >= 2);
    let status = Command::new(bin).args(["check", "--in", out.to_str().unwrap()]).status().unwrap();
    assert!(status.success());

    std::fs::write(&cfg, SMALL.replace("n = 2048", "n = lots")).unwrap();
    let output = Command::new(bin)
        .args(["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("line 8"));
    std::fs::remove_dir_all(&dir).ok();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn signals_are_deterministic(n in 1usize..500, k in 1usize..8, s in any::<u64>(), which in 0usize..4) {
        let kind = [
            FamilyKind::SpikePlusGaussian { snr: 10.0 },
            FamilyKind::PowerLaw { alpha: 0.7 },
            FamilyKind::HardInstance,
            FamilyKind::ExactSparse { amplitude: 3.0 },
        ][which];
        let fam = family(kind, n.max(k + 8), k, 0.25);
        prop_assert_eq!(generate_signal(&fam, Seed(s)).unwrap(), generate_signal(&fam, Seed(s)).unwrap());
    }

    #[test]
    fn wilson_interval_brackets_the_rate(t in 1usize..2000, frac in 0.0f64..=1.0) {
        let s = ((t as f64) * frac).round() as usize;
        let (lo, hi) = wilson_interval(s, t);
        let r = s as f64 / t as f64;
        prop_assert!(0.0 <= lo && lo <= r + 1e-12 && r <= hi + 1e-12 && hi <= 1.0);
    }
}
