//! Adaptive l_2/l_2 recovery: a bucketed composition of l_inf/l_2 recovery
//! with few rounds, and an iterative subsample-and-isolate loop that is
//! frugal in `eps`.

use crate::error::{invalid, Result};
use crate::hashing::BucketHash;
use crate::linf_l2::{fit_hash_exponent, linf_l2_recover_on, LinfL2Params};
use crate::one_sparse::{improved_one_sparse_recover_with, ImprovedOneSparseConfig};
use crate::oracle::MeasurementOracle;
use crate::parallel::run_forked;
use crate::seed::Seed;
use crate::signal::{subsample_indices, SparseEstimate, SupportSet};
use crate::sketch::{count_sketch_recover_with, SketchConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct RoundOptimalParams {
    pub k: usize,
    pub eps: f64,
    /// `B = ceil(c_bucket * k / (eps * log2 n))` buckets.
    pub c_bucket: f64,
    /// Recover with l_inf/l_2 directly when `k / eps <= log_threshold * log2 n`.
    pub log_threshold: f64,
    /// Each bucket runs l_inf/l_2 at sparsity `ceil(bucket_sparsity * log2 n)`.
    pub bucket_sparsity: f64,
    /// Failure probability of the residual count-sketch.
    pub delta: f64,
    /// Template for the per-bucket (or direct) l_inf/l_2 runs; `k` and `c` are overwritten.
    pub linf: LinfL2Params,
    pub sketch: SketchConfig,
}

impl RoundOptimalParams {
    pub fn new(k: usize, eps: f64) -> Self {
        RoundOptimalParams {
            k,
            eps,
            c_bucket: 8.0,
            log_threshold: 0.25,
            bucket_sparsity: 0.25,
            delta: 0.05,
            linf: LinfL2Params::new(1),
            sketch: SketchConfig::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(invalid("l_2/l_2 recovery needs k >= 1"));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(invalid("l_2/l_2 recovery needs 0 < eps < 1"));
        }
        Ok(())
    }

    /// Bucket count for a universe of `len` coordinates; `None` means direct l_inf/l_2.
    pub fn bucket_count(&self, len: usize) -> Option<usize> {
        let log_n = (len as f64).log2().max(1.0);
        let ratio = self.k as f64 / self.eps;
        if ratio <= self.log_threshold * log_n {
            return None;
        }
        Some((self.c_bucket * ratio / log_n).ceil() as usize)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoundOptimalOutput {
    pub estimate: SparseEstimate,
    /// Coordinates observed directly by the l_inf/l_2 stage.
    pub observed: SupportSet,
    /// Bucket count, or `None` when l_inf/l_2 ran directly.
    pub buckets: Option<usize>,
}

pub fn round_optimal_l2l2(
    oracle: &mut MeasurementOracle,
    params: &RoundOptimalParams,
    seed: Seed,
) -> Result<SparseEstimate> {
    let universe = SupportSet::full(oracle.dimension());
    Ok(round_optimal_l2l2_on(oracle, &universe, params, seed)?.estimate)
}

fn linf_for(template: &LinfL2Params, k: f64, len: usize, delta: f64) -> LinfL2Params {
    let mut p = template.clone();
    p.k = k;
    p.delta = delta;
    if let Some(c) = fit_hash_exponent(k, len, template.c, 2.0) {
        p.c = c;
    }
    p
}

/// How [`round_optimal_l2l2_on`] splits `universe` into `buckets` for a given run seed.
pub fn bucket_members(universe: &SupportSet, buckets: usize, seed: Seed) -> Vec<Vec<usize>> {
    let hash = BucketHash::new(&mut seed.derive("l2-buckets", 0).rng(), buckets.max(1));
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); buckets.max(1)];
    for i in universe.iter() {
        members[hash.bucket(i)].push(i);
    }
    members
}

pub fn round_optimal_l2l2_on(
    oracle: &mut MeasurementOracle,
    universe: &SupportSet,
    params: &RoundOptimalParams,
    seed: Seed,
) -> Result<RoundOptimalOutput> {
    params.validate()?;
    let n = oracle.dimension();
    let log_n = (universe.len() as f64).log2().max(1.0);
    let ratio = params.k as f64 / params.eps;
    let bucket_delta = (1.0 / (log_n * log_n)).min(params.linf.delta);

    let Some(buckets) = params.bucket_count(universe.len()) else {
        let lp = linf_for(&params.linf, ratio, universe.len(), params.linf.delta);
        let out = linf_l2_recover_on(oracle, universe, &lp, seed.derive("l2-direct", 0))?;
        return Ok(RoundOptimalOutput { estimate: out.estimate, observed: out.observed, buckets: None });
    };

    let members = bucket_members(universe, buckets, seed);
    let bucket_k = (params.bucket_sparsity * log_n).ceil().max(1.0);
    let jobs: Vec<(usize, SupportSet)> = members
        .into_iter()
        .enumerate()
        .filter(|(_, m)| !m.is_empty())
        .map(|(b, m)| (b, SupportSet::from_sorted(m)))
        .collect();
    let outputs = run_forked(oracle, jobs, |child, (b, set)| {
        let lp = linf_for(&params.linf, bucket_k, set.len(), bucket_delta);
        linf_l2_recover_on(child, &set, &lp, seed.derive("l2-bucket", b as u64))
    })?;

    let mut estimate = SparseEstimate::new(n);
    let mut observed = Vec::new();
    for out in &outputs {
        observed.extend(out.observed.iter());
        for (i, v) in out.estimate.iter() {
            estimate.insert(i, v)?;
        }
    }
    let observed = SupportSet::from_unsorted(observed);

    let residual_universe = universe.difference(&observed);
    let residual_k = (ratio / (log_n * log_n)).ceil().max(1.0) as usize;
    let residual = count_sketch_recover_with(
        oracle,
        &residual_universe,
        residual_k,
        params.delta,
        &params.sketch,
        seed.derive("l2-residual", 0),
    )?;
    for (i, v) in residual.iter() {
        estimate.insert(i, v)?;
    }
    Ok(RoundOptimalOutput { estimate, observed, buckets: Some(buckets) })
}

/// Support of a round-optimal l_2/l_2 run on `universe`.
pub fn adaptive_l2l2_oracle_on(
    oracle: &mut MeasurementOracle,
    universe: &SupportSet,
    params: &RoundOptimalParams,
    seed: Seed,
) -> Result<SupportSet> {
    Ok(round_optimal_l2l2_on(oracle, universe, params, seed)?.estimate.support())
}

pub fn adaptive_l2l2_oracle(oracle: &mut MeasurementOracle, k: usize, eps: f64, seed: Seed) -> Result<SupportSet> {
    let universe = SupportSet::full(oracle.dimension());
    adaptive_l2l2_oracle_on(oracle, &universe, &RoundOptimalParams::new(k, eps), seed)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpsImprovedParams {
    pub k: usize,
    pub eps: f64,
    pub delta: f64,
    /// Each iteration keeps coordinates with probability `1 / (c0 * k_r)`.
    pub c0: f64,
    /// Iterations per outer round: `ceil(iteration_factor * k_r * ceil(log2(1 / (delta_r f_r))))`.
    pub iteration_factor: f64,
    pub max_outer_rounds: usize,
    pub improved: ImprovedOneSparseConfig,
}

impl EpsImprovedParams {
    pub fn new(k: usize, eps: f64, delta: f64) -> Self {
        EpsImprovedParams {
            k,
            eps,
            delta,
            c0: 8.0,
            iteration_factor: 8.0,
            max_outer_rounds: 16,
            improved: ImprovedOneSparseConfig::default(),
        }
    }
}

/// Parameters of one outer round of the iterative loop.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoopRound {
    pub r: usize,
    pub k_r: f64,
    pub eps_r: f64,
    pub delta_r: f64,
    pub f_r: f64,
    pub iterations: usize,
}

/// The outer-round parameters, stopping before the first round with `k_r < 1`.
///
/// `delta_0 = delta/2`, `eps_0 = eps/e`, `f_0 = 1/32`, `k_0 = k`, then
/// `delta_{r+1} = delta_r / 8`, `eps_{r+1} = eps_r / 2`,
/// `f_{r+1} = 2^(-1 / (4^r f_r))` and `k_{r+1} = f_r k_r`.
pub fn loop_schedule(params: &EpsImprovedParams) -> Vec<LoopRound> {
    let mut out = Vec::new();
    let mut k_r = params.k as f64;
    let mut eps_r = params.eps / std::f64::consts::E;
    let mut delta_r = params.delta / 2.0;
    let mut f_r = 1.0 / 32.0;
    let mut r = 0;
    while k_r >= 1.0 && r < params.max_outer_rounds {
        let log_term = (1.0 / (delta_r * f_r)).log2().ceil();
        let iterations = (params.iteration_factor * k_r * log_term).ceil() as usize;
        out.push(LoopRound { r, k_r, eps_r, delta_r, f_r, iterations });
        let f_next = 2f64.powf(-1.0 / (4f64.powi(r as i32) * f_r));
        k_r *= f_r;
        f_r = f_next;
        delta_r /= 8.0;
        eps_r /= 2.0;
        r += 1;
    }
    out
}

/// Iterative l_2/l_2 recovery.
///
/// Each outer round repeatedly subsamples the coordinates not yet found and
/// isolates the dominant coordinate of each subsample; the iterations of a
/// round are independent and run side by side. Found coordinates are
/// observed directly and leave the live universe.
pub fn eps_improved_l2l2(
    oracle: &mut MeasurementOracle,
    params: &EpsImprovedParams,
    seed: Seed,
) -> Result<SparseEstimate> {
    if params.k == 0 {
        return Err(invalid("l_2/l_2 recovery needs k >= 1"));
    }
    if !(params.eps > 0.0 && params.eps < 1.0) || !(params.delta > 0.0 && params.delta < 1.0) {
        return Err(invalid("l_2/l_2 recovery needs 0 < eps < 1 and 0 < delta < 1"));
    }
    let n = oracle.dimension();
    let mut estimate = SparseEstimate::new(n);
    let mut found = SupportSet::empty();
    let mut live = SupportSet::full(n);
    for round in loop_schedule(params) {
        if live.is_empty() {
            break;
        }
        let rate = 1.0 / (params.c0 * round.k_r);
        let rseed = seed.derive("l2-loop", round.r as u64);
        let iterations: Vec<usize> = (0..round.iterations).collect();
        let live_ref = &live;
        let results = run_forked(oracle, iterations, |child, t| {
            let sample = subsample_indices(live_ref, rate, rseed.derive("sample", t as u64));
            improved_one_sparse_recover_with(
                child,
                sample.as_slice(),
                round.eps_r,
                &params.improved,
                rseed.derive("isolate", t as u64),
            )
        })?;
        let mut new = Vec::new();
        for est in results {
            for (i, v) in est.iter() {
                estimate.insert(i, v)?;
                new.push(i);
            }
        }
        found = found.union(&SupportSet::from_unsorted(new));
        live = live.difference(&found);
    }
    Ok(estimate)
}
