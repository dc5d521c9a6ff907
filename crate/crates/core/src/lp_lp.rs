//! (1 + eps)-approximate l_p/l_p recovery for `0 < p < 2`, built from l_2/l_2
//! support oracles: two calls on the whole signal catch the head, and `r`
//! levels of subsampled sparsity-2 calls pick up coordinates of decreasing
//! magnitude. Every coordinate found is observed directly at the end.

use crate::error::{invalid, Error, Result};
use crate::l2l2::{adaptive_l2l2_oracle_on, RoundOptimalParams};
use crate::oracle::MeasurementOracle;
use crate::parallel::run_forked;
use crate::seed::Seed;
use crate::signal::{subsample_indices, SparseEstimate, SupportSet};

/// How the per-level accuracy `eps'` is read from `1/(4(r+1))^{2/p}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EpsPrimeReading {
    /// `(1 / (4 (r + 1)))^(2/p)`.
    Grouped,
    /// `1 / (4 (r + 1)^(2/p))`.
    ExponentOnLevels,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpOptions {
    pub eps_prime_reading: EpsPrimeReading,
    /// `eps'` is raised to at least this value.
    pub eps_prime_floor: f64,
    /// Per-level repetitions beyond this are clipped and the run is flagged.
    pub max_reps: usize,
    /// Template for every l_2/l_2 oracle call; `k` and `eps` are overwritten.
    pub l2: RoundOptimalParams,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions {
            eps_prime_reading: EpsPrimeReading::Grouped,
            eps_prime_floor: 0.05,
            max_reps: 4096,
            l2: RoundOptimalParams::new(1, 0.5),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpParams {
    pub k: usize,
    pub eps: f64,
    pub p: f64,
    /// `eps^(p/2)`.
    pub f: f64,
    /// Number of subsampling levels, `max(1, ceil(log2(1/eps)))`.
    pub r: usize,
    /// `max(p - 1/2, 0)`.
    pub q: f64,
    /// Accuracy of the per-level sparsity-2 calls, after the floor.
    pub eps_prime: f64,
    pub eps_prime_raised: bool,
    /// `ceil(k / (2 f (r+1)^q))`, before clipping.
    pub reps: usize,
    pub options: LpOptions,
}

impl LpParams {
    pub fn reps_used(&self) -> usize {
        self.reps.min(self.options.max_reps)
    }

    pub fn budget_clipped(&self) -> bool {
        self.reps > self.options.max_reps
    }

    /// Sampling probability at level `j`: `2^-j f / k`.
    pub fn level_rate(&self, j: usize) -> f64 {
        (0.5f64).powi(j as i32) * self.f / self.k as f64
    }
}

pub fn derive_lp_params(k: usize, eps: f64, p: f64) -> Result<LpParams> {
    derive_lp_params_with(k, eps, p, LpOptions::default())
}

pub fn derive_lp_params_with(k: usize, eps: f64, p: f64, options: LpOptions) -> Result<LpParams> {
    if !(p > 0.0 && p < 2.0) {
        return Err(Error::InvalidP(p));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid("l_p/l_p recovery needs 0 < eps < 1"));
    }
    if k == 0 {
        return Err(invalid("l_p/l_p recovery needs k >= 1"));
    }
    let f = eps.powf(p / 2.0);
    let q = (p - 0.5).max(0.0);
    // (2/p) log2(1/f) is log2(1/eps), computed from eps to avoid rounding up an exact integer.
    let r = ((1.0 / eps).log2().ceil() as usize).max(1);
    let levels = (r + 1) as f64;
    let raw = match options.eps_prime_reading {
        EpsPrimeReading::Grouped => (1.0 / (4.0 * levels)).powf(2.0 / p),
        EpsPrimeReading::ExponentOnLevels => 1.0 / (4.0 * levels.powf(2.0 / p)),
    };
    let eps_prime = raw.max(options.eps_prime_floor);
    let reps = (k as f64 / (2.0 * f * levels.powf(q))).ceil() as usize;
    Ok(LpParams {
        k,
        eps,
        p,
        f,
        r,
        q,
        eps_prime,
        eps_prime_raised: raw < options.eps_prime_floor,
        reps,
        options,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpRecovery {
    pub estimate: SparseEstimate,
    /// `S_0, ..., S_r`, pairwise disjoint.
    pub levels: Vec<SupportSet>,
    pub budget_clipped: bool,
    pub eps_prime_raised: bool,
}

enum Call {
    Head { k: usize, eps: f64, tag: u64 },
    Level { j: usize, t: usize },
}

pub fn lp_lp_recover(oracle: &mut MeasurementOracle, params: &LpParams, seed: Seed) -> Result<LpRecovery> {
    let n = oracle.dimension();
    let full = SupportSet::full(n);
    let r = params.r;
    let head_k = (2.0 * params.k as f64 / params.f).ceil() as usize;
    let second_eps = params.f / (r * r) as f64;
    let mut calls = vec![
        Call::Head { k: head_k, eps: 0.1, tag: 0 },
        Call::Head { k: 4 * params.k, eps: second_eps, tag: 1 },
    ];
    for j in 1..=r {
        for t in 0..params.reps_used() {
            calls.push(Call::Level { j, t });
        }
    }
    let template = &params.options.l2;
    let full_ref = &full;
    let found = run_forked(oracle, calls, |child, call| match call {
        Call::Head { k, eps, tag } => {
            let mut l2 = template.clone();
            l2.k = k;
            l2.eps = eps;
            let s = adaptive_l2l2_oracle_on(child, full_ref, &l2, seed.derive("lp-head", tag))?;
            Ok((0, s))
        }
        Call::Level { j, t } => {
            let id = ((j as u64) << 32) | t as u64;
            let sample = subsample_indices(full_ref, params.level_rate(j), seed.derive("lp-sample", id));
            if sample.is_empty() {
                return Ok((j, SupportSet::empty()));
            }
            let mut l2 = template.clone();
            l2.k = 2;
            l2.eps = params.eps_prime;
            let s = adaptive_l2l2_oracle_on(child, &sample, &l2, seed.derive("lp-level", id))?;
            Ok((j, s))
        }
    })?;

    let mut raw = vec![SupportSet::empty(); r + 1];
    for (j, s) in found {
        raw[j] = raw[j].union(&s);
    }
    let mut levels = Vec::with_capacity(r + 1);
    let mut seen = SupportSet::empty();
    for set in raw {
        let s = set.difference(&seen);
        seen = seen.union(&s);
        levels.push(s);
    }
    assert_eq!(
        levels.iter().map(|s| s.len()).sum::<usize>(),
        seen.len(),
        "support levels must be disjoint"
    );

    let mut estimate = SparseEstimate::new(n);
    if !seen.is_empty() {
        for (i, v) in oracle.observe_round(&seen)? {
            estimate.insert(i, v)?;
        }
    }
    Ok(LpRecovery {
        estimate,
        levels,
        budget_clipped: params.budget_clipped(),
        eps_prime_raised: params.eps_prime_raised,
    })
}
