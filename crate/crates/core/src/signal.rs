//! Signals, supports, sparse estimates and the reference metrics on them.

use std::collections::BTreeMap;

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::seed::Seed;

/// Sums of at least this many terms use compensated (Neumaier) summation.
pub const COMPENSATED_SUM_MIN_LEN: usize = 1 << 20;

/// A dense real vector of dimension at least one with finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct Signal {
    values: Vec<f64>,
}

impl Signal {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySignal);
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteEntry { index });
        }
        Ok(Signal { values })
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Signal::new(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false; a signal has at least one entry.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn scaled(&self, factor: f64) -> Result<Signal> {
        Signal::new(self.values.iter().map(|v| v * factor).collect())
    }

    /// Copy of `self` with every coordinate outside `set` zeroed.
    pub fn restricted_to(&self, set: &SupportSet) -> Signal {
        let mut values = vec![0.0; self.len()];
        for i in set.iter() {
            values[i] = self.values[i];
        }
        Signal { values }
    }

    /// Little-endian encoding: the dimension as a `u64`, then each entry as an `f64`.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + 8 * self.len());
        out.extend_from_slice(&(self.len() as u64).to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_le_bytes(bytes: &[u8]) -> Result<Signal> {
        if bytes.len() < 8 {
            return Err(Error::Decode("missing 8-byte length header".into()));
        }
        let n = u64::from_le_bytes(bytes[..8].try_into().unwrap()) as usize;
        let body = &bytes[8..];
        if body.len() != n.checked_mul(8).ok_or_else(|| Error::Decode("length overflow".into()))? {
            return Err(Error::Decode(format!(
                "header says {n} entries but body has {} bytes",
                body.len()
            )));
        }
        let values = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Signal::new(values)
    }

    /// One value per line, in shortest round-trip form.
    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(self.len() * 20);
        for v in &self.values {
            s.push_str(&format!("{v}\n"));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Signal> {
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            let v: f64 = t
                .parse()
                .map_err(|_| Error::Decode(format!("line {}: not a number: {t:?}", lineno + 1)))?;
            values.push(v);
        }
        Signal::new(values)
    }
}

/// A sorted set of distinct coordinates.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct SupportSet {
    indices: Vec<usize>,
}

impl SupportSet {
    pub fn empty() -> Self {
        SupportSet::default()
    }

    /// `{0, 1, ..., n - 1}`.
    pub fn full(n: usize) -> Self {
        SupportSet { indices: (0..n).collect() }
    }

    /// Builds a set from arbitrary indices, all of which must lie in `0..n`.
    pub fn new(mut indices: Vec<usize>, n: usize) -> Result<Self> {
        if let Some(&index) = indices.iter().find(|&&i| i >= n) {
            return Err(Error::IndexOutOfRange { index, n });
        }
        indices.sort_unstable();
        indices.dedup();
        Ok(SupportSet { indices })
    }

    pub(crate) fn from_sorted(indices: Vec<usize>) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        SupportSet { indices }
    }

    pub(crate) fn from_unsorted(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        SupportSet { indices }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.indices
    }

    pub fn union(&self, other: &SupportSet) -> SupportSet {
        let (a, b) = (&self.indices, &other.indices);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        SupportSet { indices: out }
    }

    pub fn difference(&self, other: &SupportSet) -> SupportSet {
        SupportSet {
            indices: self.indices.iter().copied().filter(|&i| !other.contains(i)).collect(),
        }
    }

    pub fn is_subset(&self, other: &SupportSet) -> bool {
        self.indices.iter().all(|&i| other.contains(i))
    }
}

impl FromIterator<usize> for SupportSet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        SupportSet::from_unsorted(iter.into_iter().collect())
    }
}

/// A sparse vector of dimension `n`: the output of every recovery scheme.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseEstimate {
    n: usize,
    entries: BTreeMap<usize, f64>,
}

impl SparseEstimate {
    pub fn new(n: usize) -> Self {
        SparseEstimate { n, entries: BTreeMap::new() }
    }

    pub fn from_entries(n: usize, entries: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let mut est = SparseEstimate::new(n);
        for (i, v) in entries {
            est.insert(i, v)?;
        }
        Ok(est)
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    /// Sets coordinate `i`; exact zeros are not stored.
    pub fn insert(&mut self, i: usize, v: f64) -> Result<()> {
        if i >= self.n {
            return Err(Error::IndexOutOfRange { index: i, n: self.n });
        }
        if !v.is_finite() {
            return Err(invalid(format!("estimate for coordinate {i} is not finite")));
        }
        if v == 0.0 {
            self.entries.remove(&i);
        } else {
            self.entries.insert(i, v);
        }
        Ok(())
    }

    pub fn get(&self, i: usize) -> f64 {
        self.entries.get(&i).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries.iter().map(|(&i, &v)| (i, v))
    }

    pub fn support(&self) -> SupportSet {
        SupportSet::from_sorted(self.entries.keys().copied().collect())
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (i, v) in self.iter() {
            out[i] = v;
        }
        out
    }
}

pub(crate) fn sum_terms(terms: impl Iterator<Item = f64>, len: usize) -> f64 {
    if len < COMPENSATED_SUM_MIN_LEN {
        return terms.sum();
    }
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for t in terms {
        let s = sum + t;
        if sum.abs() >= t.abs() {
            comp += (sum - s) + t;
        } else {
            comp += (t - s) + sum;
        }
        sum = s;
    }
    sum + comp
}

fn abs_pow(v: f64, p: f64) -> f64 {
    if p == 2.0 {
        v * v
    } else if p == 1.0 {
        v.abs()
    } else {
        v.abs().powf(p)
    }
}

/// `sum_i |v_i|^p`.
pub fn lp_norm_pow(values: &[f64], p: f64) -> f64 {
    sum_terms(values.iter().map(|&v| abs_pow(v, p)), values.len())
}

pub fn lp_norm(values: &[f64], p: f64) -> f64 {
    lp_norm_pow(values, p).powf(1.0 / p)
}

/// Positions of the `k` largest magnitudes, ties broken toward lower index, sorted ascending.
pub(crate) fn top_k_positions(values: &[f64], k: usize) -> Vec<usize> {
    let k = k.min(values.len());
    if k == 0 {
        return Vec::new();
    }
    let mut idx: Vec<usize> = (0..values.len()).collect();
    if k < idx.len() {
        idx.select_nth_unstable_by(k - 1, |&a, &b| {
            values[b].abs().total_cmp(&values[a].abs()).then(a.cmp(&b))
        });
        idx.truncate(k);
    }
    idx.sort_unstable();
    idx
}

/// The `k` largest-magnitude coordinates of `x`; ties go to the lower index.
pub fn top_k_support(x: &Signal, k: usize) -> SupportSet {
    SupportSet::from_sorted(top_k_positions(x.values(), k))
}

fn tail_pow(values: &[f64], k: usize, p: f64) -> f64 {
    let top = top_k_positions(values, k);
    let mut t = 0;
    let terms = values.iter().enumerate().filter_map(|(i, &v)| {
        if t < top.len() && top[t] == i {
            t += 1;
            None
        } else {
            Some(abs_pow(v, p))
        }
    });
    sum_terms(terms, values.len())
}

/// `||x_{-k}||_p`: the p-norm of `x` with its top-k coordinates zeroed.
pub fn tail_norm(x: &Signal, k: usize, p: f64) -> f64 {
    tail_pow(x.values(), k, p).powf(1.0 / p)
}

/// `sum_{i in set} |x_i|^p`.
pub fn restricted_norm_pow(x: &Signal, set: &SupportSet, p: f64) -> f64 {
    sum_terms(set.iter().map(|i| abs_pow(x.get(i), p)), set.len())
}

/// Nonzero coordinates with `|x_i|^2 >= (eps / k) * ||x_{-k}||_2^2`. Empty when `k == 0`.
pub fn heavy_set(x: &Signal, k: usize, eps: f64) -> SupportSet {
    if k == 0 {
        return SupportSet::empty();
    }
    let threshold = eps / k as f64 * tail_pow(x.values(), k, 2.0);
    SupportSet::from_sorted(
        x.values()
            .iter()
            .enumerate()
            .filter(|&(_, &v)| v != 0.0 && v * v >= threshold)
            .map(|(i, _)| i)
            .collect(),
    )
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else if den == 0.0 {
        f64::INFINITY
    } else {
        num / den
    }
}

fn residual(x: &Signal, xhat: &SparseEstimate) -> Vec<f64> {
    assert_eq!(x.len(), xhat.dimension(), "estimate dimension does not match signal");
    let mut r = x.values().to_vec();
    for (i, v) in xhat.iter() {
        r[i] -= v;
    }
    r
}

/// `||x - xhat||_p / ||x_{-k}||_p`, with `0/0 = 0` and `positive/0 = inf`.
pub fn error_ratio(x: &Signal, xhat: &SparseEstimate, k: usize, p: f64) -> f64 {
    let num = lp_norm(&residual(x, xhat), p);
    let den = tail_norm(x, k, p);
    ratio(num, den)
}

/// `||x - xhat||_inf^2 / ((1/k) ||x_{-k}||_2^2)`, with the same conventions as [`error_ratio`].
pub fn linf_error_ratio(x: &Signal, xhat: &SparseEstimate, k: usize) -> f64 {
    let r = residual(x, xhat);
    let num = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let den = tail_pow(x.values(), k, 2.0) / k.max(1) as f64;
    ratio(num * num, den)
}

/// Keeps each coordinate of `universe` independently with probability `prob`.
///
/// Uses geometric skipping, so the cost is proportional to the output size.
pub fn subsample_indices(universe: &SupportSet, prob: f64, seed: Seed) -> SupportSet {
    if prob >= 1.0 {
        return universe.clone();
    }
    if prob <= 0.0 || universe.is_empty() {
        return SupportSet::empty();
    }
    let mut rng = seed.rng();
    let log_q = (-prob).ln_1p();
    let src = universe.as_slice();
    let mut out = Vec::with_capacity((src.len() as f64 * prob * 1.2) as usize + 4);
    let mut pos = 0usize;
    loop {
        let u: f64 = rng.random::<f64>();
        // Number of rejected coordinates before the next kept one.
        let skip = ((1.0 - u).ln() / log_q).floor();
        if !skip.is_finite() || skip >= (src.len() - pos) as f64 {
            break;
        }
        pos += skip as usize;
        out.push(src[pos]);
        pos += 1;
        if pos >= src.len() {
            break;
        }
    }
    SupportSet::from_sorted(out)
}
