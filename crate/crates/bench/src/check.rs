//! Independent recomputation of success flags.
//!
//! Regenerates each run's signal from its family and seed, reads the stored
//! estimate, and recomputes the guarantee with a sort-based implementation
//! that shares no code with the schemes or with the library's metrics.

use std::collections::HashMap;

use acs_core::Seed;

use crate::config::SchemeKind;
use crate::families::{generate_signal, FamilyKind, SignalFamily};
use crate::records::RunRecord;
use crate::runner::signal_seed;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckReport {
    pub checked: usize,
    pub skipped: usize,
    /// `(run_id, recorded success, recomputed success)` for every disagreement.
    pub mismatches: Vec<(String, bool, bool)>,
}

fn magnitudes_desc(x: &[f64]) -> Vec<f64> {
    let mut m: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    m.sort_by(|a, b| b.total_cmp(a));
    m
}

fn tail_p(x: &[f64], k: usize, p: f64) -> f64 {
    magnitudes_desc(x).iter().skip(k).map(|v| v.powf(p)).sum::<f64>()
}

/// Recomputes the guarantee for one run.
pub fn recompute_success(scheme: SchemeKind, x: &[f64], xhat: &[(usize, f64)], k: usize, eps: f64, p: f64) -> bool {
    let mut r = x.to_vec();
    for &(i, v) in xhat {
        r[i] -= v;
    }
    if scheme == SchemeKind::LinfL2 {
        let worst = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let bound = tail_p(x, k, 2.0) / k as f64;
        return worst * worst <= bound * (1.0 + 1e-9);
    }
    let num = r.iter().map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p);
    let den = tail_p(x, k, p).powf(1.0 / p);
    num <= (1.0 + eps) * den * (1.0 + 1e-9)
}

pub fn check_records(records: &[RunRecord], estimates: &[(String, Vec<(usize, f64)>)]) -> CheckReport {
    let by_id: HashMap<&str, &Vec<(usize, f64)>> = estimates.iter().map(|(id, e)| (id.as_str(), e)).collect();
    let mut report = CheckReport { checked: 0, skipped: 0, mismatches: Vec::new() };
    for rec in records {
        let (Ok(scheme), Ok(kind), Some(xhat)) = (
            rec.scheme.parse::<SchemeKind>(),
            FamilyKind::parse(&rec.family),
            by_id.get(rec.run_id.as_str()),
        ) else {
            report.skipped += 1;
            continue;
        };
        if rec.status.starts_with("error") {
            report.skipped += 1;
            continue;
        }
        let family = SignalFamily { kind, n: rec.n, k: rec.k, eps: rec.eps };
        let Ok(x) = generate_signal(&family, signal_seed(Seed(rec.seed))) else {
            report.skipped += 1;
            continue;
        };
        if xhat.iter().any(|&(i, _)| i >= rec.n) {
            report.mismatches.push((rec.run_id.clone(), rec.success, false));
            continue;
        }
        let ok = recompute_success(scheme, x.values(), xhat, rec.k, rec.eps, rec.p);
        report.checked += 1;
        if ok != rec.success {
            report.mismatches.push((rec.run_id.clone(), rec.success, ok));
        }
    }
    report
}
