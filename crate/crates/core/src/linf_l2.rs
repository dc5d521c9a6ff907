//! Adaptive l_inf/l_2 recovery.
//!
//! Hash the universe into about `k^c` parts so the large coordinates land in
//! different parts, find the parts with large energy relative to the tail
//! estimate, locate the dominant coordinate of each such part, then sweep up
//! whatever the per-part searches missed with one more sketch over the
//! selected parts. Every returned value is observed directly.

use crate::error::{invalid, Result};
use crate::hashing::BucketHash;
use crate::one_sparse::{one_sparse_recover_with, OneSparseConfig};
use crate::oracle::MeasurementOracle;
use crate::parallel::run_forked;
use crate::seed::Seed;
use crate::signal::{SparseEstimate, SupportSet};
use crate::sketch::{
    estimate_tail_v_with, largest_nonzero, partition_count_sketch_with, PartitionSpec, SketchConfig,
    TAIL_C2,
};

#[derive(Clone, Debug, PartialEq)]
pub struct LinfL2Params {
    /// Target sparsity. Fractional values are allowed for internal callers.
    pub k: f64,
    /// Hash the universe into `ceil(k^c)` parts.
    pub c: f64,
    /// Parts with estimated energy at least `gamma_prime * V` are searched.
    pub gamma_prime: f64,
    /// Accuracy parameter handed to the partition sketch.
    pub gamma: f64,
    /// Failure probability for the tail estimate.
    pub delta: f64,
    /// The part-selection sketch runs at sparsity `pcs_sparsity_factor * k`.
    pub pcs_sparsity_factor: f64,
    pub sketch: SketchConfig,
    pub one_sparse: OneSparseConfig,
    /// Fault injection: the first this many part searches report failure.
    pub forced_search_failures: usize,
}

impl LinfL2Params {
    pub fn new(k: usize) -> Self {
        LinfL2Params {
            k: k as f64,
            c: 3.0,
            gamma_prime: 0.25,
            gamma: 0.1,
            delta: 0.05,
            pcs_sparsity_factor: 4.0,
            sketch: SketchConfig::default(),
            one_sparse: OneSparseConfig::default(),
            forced_search_failures: 0,
        }
    }

    /// Number of parts the universe is hashed into.
    pub fn part_count(&self) -> usize {
        self.k.max(1.0).powf(self.c).ceil() as usize
    }

    /// Cap on how many parts are searched.
    pub fn selection_cap(&self) -> usize {
        ((1.0 / self.gamma_prime + 1.0) * TAIL_C2 * self.k).ceil() as usize
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinfL2Output {
    pub estimate: SparseEstimate,
    /// Every coordinate observed directly, including those observed as zero.
    pub observed: SupportSet,
    pub parts_searched: usize,
    /// True when the universe was too small to hash and was observed outright.
    pub degenerate: bool,
}

/// l_inf/l_2 recovery of the whole signal.
pub fn linf_l2_recover(oracle: &mut MeasurementOracle, params: &LinfL2Params, seed: Seed) -> Result<SparseEstimate> {
    let universe = SupportSet::full(oracle.dimension());
    Ok(linf_l2_recover_on(oracle, &universe, params, seed)?.estimate)
}

/// Largest exponent `c' <= c_max` with `k^c' <= len`, if it is at least `c_min`.
pub fn fit_hash_exponent(k: f64, len: usize, c_max: f64, c_min: f64) -> Option<f64> {
    if k <= 1.0 {
        return Some(c_max);
    }
    let c = ((len as f64).ln() / k.ln()).min(c_max);
    (c >= c_min).then_some(c)
}

fn observe_into(
    oracle: &mut MeasurementOracle,
    set: &SupportSet,
    est: &mut SparseEstimate,
) -> Result<()> {
    if set.is_empty() {
        return Ok(());
    }
    for (i, v) in oracle.observe_round(set)? {
        est.insert(i, v)?;
    }
    Ok(())
}

pub fn linf_l2_recover_on(
    oracle: &mut MeasurementOracle,
    universe: &SupportSet,
    params: &LinfL2Params,
    seed: Seed,
) -> Result<LinfL2Output> {
    if params.k <= 0.0 {
        return Err(invalid("l_inf/l_2 recovery needs k > 0"));
    }
    if !(params.gamma_prime > 0.0) || !(params.delta > 0.0 && params.delta < 1.0) {
        return Err(invalid("l_inf/l_2 recovery needs gamma' > 0 and 0 < delta < 1"));
    }
    let n = oracle.dimension();
    let mut estimate = SparseEstimate::new(n);
    let part_count = params.part_count();
    if part_count > universe.len() {
        observe_into(oracle, universe, &mut estimate)?;
        return Ok(LinfL2Output {
            estimate,
            observed: universe.clone(),
            parts_searched: 0,
            degenerate: true,
        });
    }

    let tail = estimate_tail_v_with(oracle, universe, params.k, params.delta, &params.sketch, seed.derive("linf-tail", 0))?;

    let hash = BucketHash::new(&mut seed.derive("linf-parts", 0).rng(), part_count);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); part_count];
    for i in universe.iter() {
        members[hash.bucket(i)].push(i);
    }
    members.retain(|m| !m.is_empty());
    let partition = PartitionSpec::from_disjoint(
        members.iter().map(|m| SupportSet::from_sorted(m.clone())).collect(),
    );
    let norms = partition_count_sketch_with(
        oracle,
        params.pcs_sparsity_factor * params.k,
        &partition,
        params.gamma,
        &params.sketch,
        seed.derive("linf-pcs", 0),
    )?
    .norms;

    let threshold = params.gamma_prime * tail.v;
    let energy: Vec<f64> = norms
        .iter()
        .map(|w| {
            let e = w * w;
            if e > 0.0 && e >= threshold {
                e
            } else {
                0.0
            }
        })
        .collect();
    let selected = largest_nonzero(&energy, params.selection_cap());

    let forced = params.forced_search_failures;
    let searches: Vec<(usize, usize)> = selected.iter().copied().enumerate().collect();
    let found = run_forked(oracle, searches, |child, (rank, j)| {
        if rank < forced {
            return Ok(None);
        }
        let r = one_sparse_recover_with(child, &members[j], &params.one_sparse, seed.derive("linf-search", j as u64))?;
        Ok(r.index)
    })?;
    let located = SupportSet::from_unsorted(found.into_iter().flatten().collect());
    observe_into(oracle, &located, &mut estimate)?;

    let rest: Vec<usize> = selected
        .iter()
        .flat_map(|&j| members[j].iter().copied())
        .filter(|&i| !located.contains(i))
        .collect();
    let rest = SupportSet::from_unsorted(rest);
    let mut observed = located.clone();
    if !rest.is_empty() {
        let log_n = (universe.len() as f64).log2().max(1.0);
        let sweep_k = (params.k / log_n).ceil().max(1.0);
        let singles = PartitionSpec::singletons(&rest);
        let w = partition_count_sketch_with(
            oracle,
            sweep_k,
            &singles,
            params.gamma,
            &params.sketch,
            seed.derive("linf-sweep", 0),
        )?
        .norms;
        let take = (2.0 * params.k).ceil() as usize;
        let extra = SupportSet::from_unsorted(
            largest_nonzero(&w, take).into_iter().map(|j| rest.as_slice()[j]).collect(),
        );
        observe_into(oracle, &extra, &mut estimate)?;
        observed = observed.union(&extra);
    }
    Ok(LinfL2Output {
        estimate,
        observed,
        parts_searched: selected.len(),
        degenerate: false,
    })
}
