//! Runs grid cells as seeded trials.
//!
//! Trial `t` of cell `c` uses `trial_seed = Seed(master).derive("trial", c << 32 | t)`.
//! The signal is drawn from `trial_seed.derive("signal", 0)` and the scheme's
//! randomness from `trial_seed.derive("scheme", 0)`, so the two never share a stream.

use std::time::Instant;

use acs_core::l2l2::{EpsImprovedParams, RoundOptimalParams};
use acs_core::linf_l2::LinfL2Params;
use acs_core::{
    count_sketch_recover, derive_lp_params, eps_improved_l2l2, error_ratio, linf_error_ratio, linf_l2_recover,
    lp_lp_recover, round_optimal_l2l2, MeasurementOracle, Seed, Signal, SparseEstimate, SupportSet,
};

use crate::config::{Cell, SchemeKind};
use crate::families::generate_signal;
use crate::records::RunRecord;

pub fn trial_seed(master: u64, cell_index: usize, trial: usize) -> Seed {
    Seed(master).derive("trial", ((cell_index as u64) << 32) | trial as u64)
}

pub fn signal_seed(trial: Seed) -> Seed {
    trial.derive("signal", 0)
}

pub fn scheme_seed(trial: Seed) -> Seed {
    trial.derive("scheme", 0)
}

pub fn run_id(cell_index: usize, trial: usize) -> String {
    format!("c{cell_index:04}-t{trial:05}")
}

#[derive(Clone, Debug)]
pub struct TrialOutcome {
    pub record: RunRecord,
    pub estimate: Option<SparseEstimate>,
}

struct SchemeRun {
    estimate: SparseEstimate,
    clipped: bool,
}

fn run_scheme(cell: &Cell, oracle: &mut MeasurementOracle, seed: Seed) -> acs_core::Result<SchemeRun> {
    let n = oracle.dimension();
    let plain = |estimate| SchemeRun { estimate, clipped: false };
    match cell.scheme {
        SchemeKind::LpLp => {
            let params = derive_lp_params(cell.k, cell.eps, cell.p)?;
            let out = lp_lp_recover(oracle, &params, seed)?;
            Ok(SchemeRun { estimate: out.estimate, clipped: out.budget_clipped })
        }
        SchemeKind::LinfL2 => linf_l2_recover(oracle, &LinfL2Params::new(cell.k), seed).map(plain),
        SchemeKind::RoundOptimalL2L2 => {
            round_optimal_l2l2(oracle, &RoundOptimalParams::new(cell.k, cell.eps), seed).map(plain)
        }
        SchemeKind::EpsImprovedL2L2 => {
            eps_improved_l2l2(oracle, &EpsImprovedParams::new(cell.k, cell.eps, cell.delta), seed).map(plain)
        }
        SchemeKind::CountSketch => {
            count_sketch_recover(oracle, &SupportSet::full(n), cell.k, cell.delta, seed).map(plain)
        }
    }
}

/// The scheme's error ratio and whether it meets the guarantee.
pub fn judge(scheme: SchemeKind, x: &Signal, xhat: &SparseEstimate, k: usize, eps: f64, p: f64) -> (f64, bool) {
    if scheme == SchemeKind::LinfL2 {
        let r = linf_error_ratio(x, xhat, k);
        (r, r <= 1.0)
    } else {
        let r = error_ratio(x, xhat, k, p);
        (r, r <= 1.0 + eps)
    }
}

pub fn run_trial(cell: &Cell, cell_index: usize, trial: usize, master: u64) -> TrialOutcome {
    let seed = trial_seed(master, cell_index, trial);
    let mut record = RunRecord {
        run_id: run_id(cell_index, trial),
        scheme: cell.scheme.name().to_string(),
        family: cell.family.kind.to_string(),
        n: cell.n,
        k: cell.k,
        eps: cell.eps,
        p: cell.p,
        seed: seed.0,
        measurements: 0,
        rounds: 0,
        error_ratio: f64::NAN,
        success: false,
        status: String::new(),
        wall_time_ms: 0.0,
    };
    let x = match generate_signal(&cell.family, signal_seed(seed)) {
        Ok(x) => x,
        Err(e) => {
            record.status = format!("error: {e}");
            return TrialOutcome { record, estimate: None };
        }
    };
    let mut oracle = MeasurementOracle::new(x.clone());
    let start = Instant::now();
    let result = run_scheme(cell, &mut oracle, scheme_seed(seed));
    record.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    record.measurements = oracle.ledger().total_measurements();
    record.rounds = oracle.ledger().total_rounds();
    match result {
        Ok(run) => {
            let (ratio, ok) = judge(cell.scheme, &x, &run.estimate, cell.k, cell.eps, cell.p);
            record.error_ratio = ratio;
            record.success = ok;
            record.status = if run.clipped { "budget-clipped".into() } else { "ok".into() };
            TrialOutcome { record, estimate: Some(run.estimate) }
        }
        Err(e) => {
            record.status = format!("error: {e}");
            TrialOutcome { record, estimate: None }
        }
    }
}

/// All trials of all cells, ordered by (cell, trial).
pub fn run_grid(cells: &[Cell], master: u64) -> Vec<TrialOutcome> {
    let jobs: Vec<(usize, usize)> = cells
        .iter()
        .enumerate()
        .flat_map(|(c, cell)| (0..cell.trials).map(move |t| (c, t)))
        .collect();
    map_jobs(jobs, |(c, t)| run_trial(&cells[c], c, t, master))
}

#[cfg(feature = "parallel")]
fn map_jobs<F>(jobs: Vec<(usize, usize)>, f: F) -> Vec<TrialOutcome>
where
    F: Fn((usize, usize)) -> TrialOutcome + Sync + Send,
{
    use rayon::prelude::*;
    jobs.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_jobs<F>(jobs: Vec<(usize, usize)>, f: F) -> Vec<TrialOutcome>
where
    F: Fn((usize, usize)) -> TrialOutcome,
{
    jobs.into_iter().map(f).collect()
}

/// Runs trials sequentially regardless of the `parallel` feature.
pub fn run_grid_sequential(cells: &[Cell], master: u64) -> Vec<TrialOutcome> {
    cells
        .iter()
        .enumerate()
        .flat_map(|(c, cell)| (0..cell.trials).map(move |t| run_trial(cell, c, t, master)))
        .collect()
}
