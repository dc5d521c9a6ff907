//! Non-adaptive building blocks: partition count-sketch, count-sketch
//! recovery and the tail-energy estimate. Each call spends exactly one round.

use rand::Rng;

use crate::error::{invalid, Result};
use crate::hashing::{BucketHash, SignHash};
use crate::oracle::{LinearFunctional, MeasurementOracle};
use crate::seed::Seed;
use crate::signal::{subsample_indices, SparseEstimate, SupportSet};
use crate::stats::{lower_median, median};

/// Constants shared by the sketches.
#[derive(Clone, Debug, PartialEq)]
pub struct SketchConfig {
    /// Partition count-sketch buckets per unit of sparsity. Also the constant in
    /// the hard cap `pcs_buckets_per_k * k * log2(parts)` on its measurements.
    pub pcs_buckets_per_k: f64,
    /// Count-sketch recovery uses `ceil(cs_buckets_per_k * k / cs_gamma)` buckets per row.
    pub cs_buckets_per_k: f64,
    pub cs_gamma: f64,
    /// Each tail-energy measurement sums a random `1 / (tail_sample_factor * k)` fraction.
    pub tail_sample_factor: f64,
    /// Tail-energy measurements: `ceil(tail_measurements_per_log * ln(1/delta))`, odd, at least 5.
    pub tail_measurements_per_log: f64,
    /// Multiplier applied to the median squared measurement after rescaling by the sampling rate.
    pub tail_scale: f64,
}

impl Default for SketchConfig {
    fn default() -> Self {
        SketchConfig {
            pcs_buckets_per_k: 6.0,
            cs_buckets_per_k: 1.0,
            cs_gamma: 0.1,
            tail_sample_factor: 8.0,
            tail_measurements_per_log: 5.0,
            tail_scale: 0.5,
        }
    }
}

/// Disjoint parts of a universe.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionSpec {
    parts: Vec<SupportSet>,
}

impl PartitionSpec {
    pub fn new(parts: Vec<SupportSet>) -> Result<Self> {
        let mut all: Vec<usize> = parts.iter().flat_map(|p| p.iter()).collect();
        let total = all.len();
        all.sort_unstable();
        all.dedup();
        if all.len() != total {
            return Err(invalid("partition parts overlap"));
        }
        Ok(PartitionSpec { parts })
    }

    pub(crate) fn from_disjoint(parts: Vec<SupportSet>) -> Self {
        PartitionSpec { parts }
    }

    /// Each coordinate of `universe` as its own part.
    pub fn singletons(universe: &SupportSet) -> Self {
        PartitionSpec {
            parts: universe.iter().map(|i| SupportSet::from_sorted(vec![i])).collect(),
        }
    }

    pub fn parts(&self) -> &[SupportSet] {
        &self.parts
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }
}

/// Estimated 2-norm of each part, in part order.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionNormEstimates {
    pub norms: Vec<f64>,
    pub gamma: f64,
}

/// Estimate `V` of the per-slot tail energy `||x_{-k}||_2^2 / k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailEstimate {
    pub v: f64,
    /// `V >= ||x_{-c2 k}||^2 / (c1 k)` is the lower side of the guarantee.
    pub c1: f64,
    pub c2: f64,
}

pub const TAIL_C1: f64 = 20.0;
pub const TAIL_C2: f64 = 10.0;

/// Rows and buckets the partition count-sketch uses for `parts` parts at sparsity `k`.
pub fn pcs_shape(k: f64, parts: usize, cfg: &SketchConfig) -> (usize, usize) {
    let buckets = ((cfg.pcs_buckets_per_k * k).ceil() as usize).clamp(1, parts.max(1));
    let rows = if parts < 2 { 1 } else { (parts as f64).log2().floor() as usize };
    (rows.max(1), buckets)
}

/// Estimates `||x_{P_j}||_2` for every part with one round of measurements.
pub fn partition_count_sketch(
    oracle: &mut MeasurementOracle,
    universe: &SupportSet,
    k: usize,
    partition: &PartitionSpec,
    gamma: f64,
    seed: Seed,
) -> Result<PartitionNormEstimates> {
    for part in partition.parts() {
        if let Some(i) = part.iter().find(|&i| !universe.contains(i)) {
            return Err(invalid(format!("partition coordinate {i} is outside the universe")));
        }
    }
    partition_count_sketch_with(oracle, k as f64, partition, gamma, &SketchConfig::default(), seed)
}

pub(crate) fn partition_count_sketch_with(
    oracle: &mut MeasurementOracle,
    k: f64,
    partition: &PartitionSpec,
    gamma: f64,
    cfg: &SketchConfig,
    seed: Seed,
) -> Result<PartitionNormEstimates> {
    if k <= 0.0 {
        return Err(invalid("partition count-sketch needs k > 0"));
    }
    let parts = partition.parts();
    let (rows, buckets) = pcs_shape(k, parts.len(), cfg);
    let identity = buckets >= parts.len();
    let token = oracle.begin_round()?;
    let mut assignment: Vec<Vec<u32>> = Vec::with_capacity(rows);
    let mut values: Vec<Vec<f64>> = Vec::with_capacity(rows);
    for t in 0..rows {
        let mut rng = seed.derive("pcs-row", t as u64).rng();
        let hash = BucketHash::new(&mut rng, buckets);
        let sign = SignHash::new(&mut rng);
        let map: Vec<u32> = (0..parts.len())
            .map(|j| if identity { j as u32 } else { hash.bucket(j) as u32 })
            .collect();
        let mut terms: Vec<Vec<(usize, f64)>> = vec![Vec::new(); buckets];
        for (j, part) in parts.iter().enumerate() {
            let b = &mut terms[map[j] as usize];
            b.extend(part.iter().map(|i| (i, sign.sign(i))));
        }
        let (y, _) = measure_buckets(oracle, terms)?;
        assignment.push(map);
        values.push(y);
    }
    oracle.commit_round(token)?;
    let mut buf = vec![0.0; rows];
    let norms = (0..parts.len())
        .map(|j| {
            for t in 0..rows {
                let y = values[t][assignment[t][j] as usize];
                buf[t] = y * y;
            }
            lower_median(&mut buf).sqrt()
        })
        .collect();
    Ok(PartitionNormEstimates { norms, gamma })
}

/// Measures one functional per nonempty bucket. Empty buckets read as zero
/// and cost nothing. Returns the per-bucket values and the number measured.
fn measure_buckets(
    oracle: &mut MeasurementOracle,
    terms: Vec<Vec<(usize, f64)>>,
) -> Result<(Vec<f64>, usize)> {
    let buckets = terms.len();
    let mut which = Vec::new();
    let mut batch = Vec::new();
    for (b, t) in terms.into_iter().enumerate() {
        if !t.is_empty() {
            which.push(b);
            batch.push(LinearFunctional::from_distinct(t));
        }
    }
    let measured = oracle.measure(&batch)?;
    let mut y = vec![0.0; buckets];
    for (b, v) in which.iter().zip(measured) {
        y[*b] = v;
    }
    Ok((y, which.len()))
}

/// A vector indexed by `0..dim` whose coordinates are linear in the signal.
pub(crate) trait VirtualVector {
    fn dim(&self) -> usize;
    /// Stable key used to hash coordinate `j`.
    fn key(&self, j: usize) -> usize;
    /// Appends the signal terms of `coef * v_j`.
    fn push_terms(&self, j: usize, coef: f64, out: &mut Vec<(usize, f64)>);
}

/// The signal restricted to a universe, in universe order.
pub(crate) struct Restricted<'a>(pub &'a [usize]);

impl VirtualVector for Restricted<'_> {
    fn dim(&self) -> usize {
        self.0.len()
    }
    fn key(&self, j: usize) -> usize {
        self.0[j]
    }
    fn push_terms(&self, j: usize, coef: f64, out: &mut Vec<(usize, f64)>) {
        out.push((self.0[j], coef));
    }
}

/// `z_j = sum_{i in members[j]} sign(i) x_i`.
pub(crate) struct SignedGroups<'a> {
    pub members: &'a [Vec<usize>],
    pub sign: &'a SignHash,
}

impl VirtualVector for SignedGroups<'_> {
    fn dim(&self) -> usize {
        self.members.len()
    }
    fn key(&self, j: usize) -> usize {
        j
    }
    fn push_terms(&self, j: usize, coef: f64, out: &mut Vec<(usize, f64)>) {
        out.extend(self.members[j].iter().map(|&i| (i, coef * self.sign.sign(i))));
    }
}

/// One round of count-sketch over `v`; returns the median estimate of every coordinate.
pub(crate) fn count_sketch_estimates<V: VirtualVector>(
    oracle: &mut MeasurementOracle,
    v: &V,
    rows: usize,
    buckets: usize,
    seed: Seed,
) -> Result<Vec<f64>> {
    let dim = v.dim();
    let identity = buckets >= dim;
    let (rows, buckets) = if identity { (1, dim) } else { (rows.max(1), buckets.max(1)) };
    let token = oracle.begin_round()?;
    let mut hashes = Vec::with_capacity(rows);
    let mut values = Vec::with_capacity(rows);
    for t in 0..rows {
        let mut rng = seed.derive("cs-row", t as u64).rng();
        let hash = BucketHash::new(&mut rng, buckets.max(1));
        let sign = SignHash::new(&mut rng);
        let mut terms: Vec<Vec<(usize, f64)>> = vec![Vec::new(); buckets];
        for j in 0..dim {
            let key = v.key(j);
            let b = if identity { j } else { hash.bucket(key) };
            v.push_terms(j, sign.sign(key), &mut terms[b]);
        }
        let (y, _) = measure_buckets(oracle, terms)?;
        hashes.push((hash, sign));
        values.push(y);
    }
    oracle.commit_round(token)?;
    let mut buf = vec![0.0; rows];
    Ok((0..dim)
        .map(|j| {
            let key = v.key(j);
            for (t, (hash, sign)) in hashes.iter().enumerate() {
                let b = if identity { j } else { hash.bucket(key) };
                buf[t] = sign.sign(key) * values[t][b];
            }
            median(&mut buf)
        })
        .collect())
}

/// Positions of the `count` largest nonzero magnitudes, largest first, ties to lower position.
pub(crate) fn largest_nonzero(values: &[f64], count: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).filter(|&j| values[j] != 0.0).collect();
    let cmp = |a: &usize, b: &usize| values[*b].abs().total_cmp(&values[*a].abs()).then(a.cmp(b));
    if count < idx.len() {
        if count == 0 {
            return Vec::new();
        }
        idx.select_nth_unstable_by(count - 1, cmp);
        idx.truncate(count);
    }
    idx.sort_unstable_by(cmp);
    idx
}

/// Rows and buckets used by [`count_sketch_recover`].
pub fn count_sketch_shape(k: usize, universe_len: usize, delta: f64, cfg: &SketchConfig) -> (usize, usize) {
    let buckets = (cfg.cs_buckets_per_k * k as f64 / cfg.cs_gamma).ceil().max(1.0) as usize;
    let rows = ((universe_len.max(1) as f64) / delta).ln().ceil().max(1.0) as usize;
    (rows, buckets)
}

/// Non-adaptive recovery: at most `2k` coordinates of the universe with
/// their median count-sketch estimates.
pub fn count_sketch_recover(
    oracle: &mut MeasurementOracle,
    universe: &SupportSet,
    k: usize,
    delta: f64,
    seed: Seed,
) -> Result<SparseEstimate> {
    count_sketch_recover_with(oracle, universe, k, delta, &SketchConfig::default(), seed)
}

pub fn count_sketch_recover_with(
    oracle: &mut MeasurementOracle,
    universe: &SupportSet,
    k: usize,
    delta: f64,
    cfg: &SketchConfig,
    seed: Seed,
) -> Result<SparseEstimate> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("count-sketch failure probability must lie in (0, 1)"));
    }
    let mut out = SparseEstimate::new(oracle.dimension());
    if k == 0 || universe.is_empty() {
        let token = oracle.begin_round()?;
        oracle.commit_round(token)?;
        return Ok(out);
    }
    let (rows, buckets) = count_sketch_shape(k, universe.len(), delta, cfg);
    let u = universe.as_slice();
    let est = count_sketch_estimates(oracle, &Restricted(u), rows, buckets, seed)?;
    for j in largest_nonzero(&est, 2 * k) {
        out.insert(u[j], est[j])?;
    }
    Ok(out)
}

/// One round of random-subset measurements whose median squared value,
/// rescaled, estimates the per-slot tail energy of `x` on the universe.
pub fn estimate_tail_v(
    oracle: &mut MeasurementOracle,
    universe: &SupportSet,
    k: usize,
    delta: f64,
    seed: Seed,
) -> Result<TailEstimate> {
    estimate_tail_v_with(oracle, universe, k as f64, delta, &SketchConfig::default(), seed)
}

pub(crate) fn tail_measurement_count(delta: f64, cfg: &SketchConfig) -> usize {
    let m = ((cfg.tail_measurements_per_log * (1.0 / delta).ln()).ceil() as usize).max(5);
    m | 1
}

pub(crate) fn estimate_tail_v_with(
    oracle: &mut MeasurementOracle,
    universe: &SupportSet,
    k: f64,
    delta: f64,
    cfg: &SketchConfig,
    seed: Seed,
) -> Result<TailEstimate> {
    if k <= 0.0 {
        return Err(invalid("tail estimate needs k > 0"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("tail estimate failure probability must lie in (0, 1)"));
    }
    let m = tail_measurement_count(delta, cfg);
    let rate = (1.0 / (cfg.tail_sample_factor * k)).min(1.0);
    let mut batch = Vec::with_capacity(m);
    for t in 0..m {
        let sample = subsample_indices(universe, rate, seed.derive("tail-sample", t as u64));
        if sample.is_empty() {
            continue;
        }
        let mut rng = seed.derive("tail-sign", t as u64).rng();
        let terms = sample
            .iter()
            .map(|i| (i, if rng.random::<bool>() { 1.0 } else { -1.0 }))
            .collect();
        batch.push(LinearFunctional::from_distinct(terms));
    }
    let y = oracle.measure_round(&batch)?;
    let mut sq: Vec<f64> = y.iter().map(|v| v * v).collect();
    sq.resize(m, 0.0);
    let v = lower_median(&mut sq) * cfg.tail_sample_factor * cfg.tail_scale;
    Ok(TailEstimate { v, c1: TAIL_C1, c2: TAIL_C2 })
}
