//! Locating a single dominant coordinate with few adaptive rounds.
//!
//! The search keeps a window `W` that should contain the dominant coordinate.
//! The first round splits `W` into a handful of random blocks and keeps the
//! block with the largest signed sum. Each later round hashes the window into
//! `D` blocks and measures, for a few independent sign patterns, both the
//! signed sum `m1` and the sum weighted by the centered block label `m2`.
//! When one coordinate dominates, `m2 / m1` sits near its block label, so the
//! window shrinks by a factor of about `D`. Shrinking the window removes noise,
//! so the usable `D` grows with every round and the number of rounds is
//! doubly logarithmic in `|U|`.

use crate::error::{invalid, Result};
use crate::hashing::{BucketHash, SignHash};
use crate::oracle::{LinearFunctional, MeasurementOracle};
use crate::parallel::run_forked;
use crate::seed::Seed;
use crate::signal::{SparseEstimate, SupportSet};
use crate::sketch::{count_sketch_estimates, largest_nonzero, SignedGroups};

#[derive(Clone, Debug, PartialEq)]
pub struct OneSparseConfig {
    /// Blocks in the first round.
    pub initial_blocks: usize,
    /// Independent sign patterns per later round.
    pub copies: usize,
    /// Ratio of the dominant amplitude to the window's remaining 2-norm assumed at the start.
    pub assumed_snr: f64,
    /// Later rounds use `floor(blocks_per_snr * snr)` blocks.
    pub blocks_per_snr: f64,
    pub max_rounds: usize,
}

impl Default for OneSparseConfig {
    fn default() -> Self {
        OneSparseConfig {
            initial_blocks: 8,
            copies: 3,
            assumed_snr: 5.0,
            blocks_per_snr: 0.29,
            max_rounds: 40,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OneSparseResult {
    pub index: Option<usize>,
    /// False when some round's decision was marginal.
    pub confident: bool,
}

impl OneSparseResult {
    fn none() -> Self {
        OneSparseResult { index: None, confident: true }
    }
}

pub fn one_sparse_recover(
    oracle: &mut MeasurementOracle,
    universe: &SupportSet,
    seed: Seed,
) -> Result<OneSparseResult> {
    one_sparse_recover_with(oracle, universe.as_slice(), &OneSparseConfig::default(), seed)
}

fn split(window: &[usize], blocks: usize, seed: Seed) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); blocks];
    if blocks >= window.len() {
        for (b, &i) in window.iter().enumerate() {
            out[b].push(i);
        }
    } else {
        let hash = BucketHash::new(&mut seed.rng(), blocks);
        for &i in window {
            out[hash.bucket(i)].push(i);
        }
    }
    out
}

pub fn one_sparse_recover_with(
    oracle: &mut MeasurementOracle,
    universe: &[usize],
    cfg: &OneSparseConfig,
    seed: Seed,
) -> Result<OneSparseResult> {
    if universe.is_empty() {
        return Err(invalid("one-sparse recovery needs a nonempty universe"));
    }
    if universe.len() == 1 {
        let y = oracle.measure_round(&[LinearFunctional::basis(universe[0])])?;
        let index = (y[0] != 0.0).then_some(universe[0]);
        return Ok(OneSparseResult { index, confident: true });
    }
    let mut confident = true;

    let blocks = split(universe, cfg.initial_blocks.clamp(2, universe.len()), seed.derive("os-split", 0));
    let sign = SignHash::new(&mut seed.derive("os-sign", 0).rng());
    let mut which = Vec::new();
    let mut batch = Vec::new();
    for (b, members) in blocks.iter().enumerate() {
        if !members.is_empty() {
            which.push(b);
            batch.push(LinearFunctional::from_distinct(
                members.iter().map(|&i| (i, sign.sign(i))).collect(),
            ));
        }
    }
    let y = oracle.measure_round(&batch)?;
    let mut mags: Vec<(f64, usize)> = y.iter().zip(&which).map(|(v, &b)| (v.abs(), b)).collect();
    mags.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    if mags[0].0 == 0.0 {
        return Ok(OneSparseResult::none());
    }
    if mags.len() > 1 && mags[1].0 * 2.0 > mags[0].0 {
        confident = false;
    }
    let mut window = blocks[mags[0].1].clone();
    let mut snr = cfg.assumed_snr * (blocks.len() as f64).sqrt();

    let mut round = 1;
    while window.len() > 1 {
        if round >= cfg.max_rounds {
            return Ok(OneSparseResult { index: None, confident: false });
        }
        let d = ((cfg.blocks_per_snr * snr).floor() as usize).clamp(2, window.len());
        let blocks = split(&window, d, seed.derive("os-split", round as u64));
        let center = (d as f64 - 1.0) / 2.0;
        let label: Vec<(usize, f64)> = blocks
            .iter()
            .enumerate()
            .flat_map(|(b, members)| members.iter().map(move |&i| (i, b as f64 - center)))
            .collect();
        let mut batch = Vec::with_capacity(2 * cfg.copies);
        let mut has_m2 = Vec::with_capacity(cfg.copies);
        for c in 0..cfg.copies {
            let sign = SignHash::new(&mut seed.derive("os-copy", (round * 64 + c) as u64).rng());
            batch.push(LinearFunctional::from_distinct(
                label.iter().map(|&(i, _)| (i, sign.sign(i))).collect(),
            ));
            let m2: Vec<(usize, f64)> = label
                .iter()
                .filter(|t| t.1 != 0.0)
                .map(|&(i, w)| (i, w * sign.sign(i)))
                .collect();
            has_m2.push(!m2.is_empty());
            if !m2.is_empty() {
                batch.push(LinearFunctional::from_distinct(m2));
            }
        }
        let y = oracle.measure_round(&batch)?;
        let mut picks = Vec::with_capacity(cfg.copies);
        let mut pos = 0;
        for &has in &has_m2 {
            let m1 = y[pos];
            let m2 = if has { y[pos + 1] } else { 0.0 };
            pos += if has { 2 } else { 1 };
            if m1 == 0.0 {
                continue;
            }
            let est = m2 / m1 + center;
            if (est - est.round()).abs() > 0.25 {
                confident = false;
            }
            picks.push(est.round().clamp(0.0, d as f64 - 1.0) as usize);
        }
        if picks.is_empty() {
            return Ok(OneSparseResult::none());
        }
        picks.sort_unstable();
        if picks.first() != picks.last() {
            confident = false;
        }
        let chosen = picks[(picks.len() - 1) / 2];
        window = blocks[chosen].clone();
        if window.is_empty() {
            return Ok(OneSparseResult { index: None, confident: false });
        }
        snr *= (d as f64).sqrt();
        round += 1;
    }
    Ok(OneSparseResult { index: Some(window[0]), confident })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImprovedOneSparseConfig {
    /// Buckets: `ceil(eps^-exponent)`, capped by `max_buckets` and the universe size.
    pub exponent: f64,
    pub max_buckets: usize,
    pub sketch_rows: usize,
    pub sketch_buckets: usize,
    /// Buckets passed on to one-sparse recovery.
    pub candidates: usize,
    pub one_sparse: OneSparseConfig,
}

impl Default for ImprovedOneSparseConfig {
    fn default() -> Self {
        ImprovedOneSparseConfig {
            exponent: 4.0,
            max_buckets: 10_000,
            sketch_rows: 5,
            sketch_buckets: 8,
            candidates: 2,
            one_sparse: OneSparseConfig::default(),
        }
    }
}

/// Sparsity bound on the output of [`improved_one_sparse_recover`].
pub const IMPROVED_MAX_SUPPORT: usize = 8;

pub fn improved_bucket_count(eps: f64, universe_len: usize, cfg: &ImprovedOneSparseConfig) -> usize {
    let b = eps.powf(-cfg.exponent).ceil();
    let b = if b.is_finite() { b as usize } else { usize::MAX };
    b.min(cfg.max_buckets).min(universe_len).max(1)
}

/// Finds the coordinate carrying a `(1 - eps)` share of the energy, if there
/// is one, by hashing into many buckets, sketching the signed bucket sums,
/// and running one-sparse recovery inside the strongest buckets.
pub fn improved_one_sparse_recover(
    oracle: &mut MeasurementOracle,
    universe: &SupportSet,
    eps: f64,
    seed: Seed,
) -> Result<SparseEstimate> {
    improved_one_sparse_recover_with(oracle, universe.as_slice(), eps, &ImprovedOneSparseConfig::default(), seed)
}

pub fn improved_one_sparse_recover_with(
    oracle: &mut MeasurementOracle,
    universe: &[usize],
    eps: f64,
    cfg: &ImprovedOneSparseConfig,
    seed: Seed,
) -> Result<SparseEstimate> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid("improved one-sparse recovery needs 0 < eps < 1"));
    }
    let mut out = SparseEstimate::new(oracle.dimension());
    if universe.is_empty() {
        return Ok(out);
    }
    if universe.len() == 1 {
        let set = SupportSet::from_sorted(vec![universe[0]]);
        for (i, v) in oracle.observe_round(&set)? {
            out.insert(i, v)?;
        }
        return Ok(out);
    }
    let buckets = improved_bucket_count(eps, universe.len(), cfg);
    let members = split(universe, buckets, seed.derive("ios-hash", 0));
    let sign = SignHash::new(&mut seed.derive("ios-sign", 0).rng());
    let z = SignedGroups { members: &members, sign: &sign };
    let est = count_sketch_estimates(
        oracle,
        &z,
        cfg.sketch_rows,
        cfg.sketch_buckets,
        seed.derive("ios-sketch", 0),
    )?;
    let chosen = largest_nonzero(&est, cfg.candidates);
    let mut found: Vec<usize> = Vec::new();
    let mut searches = Vec::new();
    for j in chosen {
        match members[j].len() {
            0 => {}
            1 => found.push(members[j][0]),
            _ => searches.push(j),
        }
    }
    let results = run_forked(oracle, searches, |child, j| {
        one_sparse_recover_with(child, &members[j], &cfg.one_sparse, seed.derive("ios-search", j as u64))
    })?;
    found.extend(results.into_iter().filter_map(|r| r.index));
    let found = SupportSet::from_unsorted(found);
    if !found.is_empty() {
        for (i, v) in oracle.observe_round(&found)? {
            out.insert(i, v)?;
        }
    }
    Ok(out)
}
