//! The measurement oracle: the only way a scheme can learn about the signal.
//!
//! Schemes receive a `&mut MeasurementOracle`; the signal itself is private,
//! so any information a scheme uses must flow through [`MeasurementOracle::measure`]
//! or [`MeasurementOracle::observe_coordinates`], both of which are metered.
//!
//! ```compile_fail
//! use acs_core::{MeasurementOracle, Signal};
//! let oracle = MeasurementOracle::new(Signal::new(vec![1.0]).unwrap());
//! let _peek = &oracle.signal;
//! ```

use std::collections::BTreeMap;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{invalid, Error, Result};
use crate::seed::Seed;
use crate::signal::{Signal, SupportSet};

/// A linear functional `x -> sum_i a_i x_i` with at least one nonzero coefficient.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearFunctional {
    terms: Vec<(usize, f64)>,
}

impl LinearFunctional {
    /// Merges repeated coordinates and drops zero coefficients.
    pub fn new(mut terms: Vec<(usize, f64)>) -> Result<Self> {
        terms.sort_by_key(|t| t.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
        for (i, a) in terms {
            if !a.is_finite() {
                return Err(invalid(format!("coefficient for coordinate {i} is not finite")));
            }
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1 += a,
                _ => merged.push((i, a)),
            }
        }
        merged.retain(|t| t.1 != 0.0);
        if merged.is_empty() {
            return Err(Error::EmptyFunctional);
        }
        Ok(LinearFunctional { terms: merged })
    }

    /// Caller guarantees distinct coordinates and at least one nonzero coefficient.
    pub(crate) fn from_distinct(terms: Vec<(usize, f64)>) -> Self {
        debug_assert!(terms.iter().any(|t| t.1 != 0.0));
        LinearFunctional { terms }
    }

    pub fn basis(i: usize) -> Self {
        LinearFunctional { terms: vec![(i, 1.0)] }
    }

    pub fn terms(&self) -> &[(usize, f64)] {
        &self.terms
    }

    pub fn nnz(&self) -> usize {
        self.terms.len()
    }
}

/// Handle for the currently open round; must be handed back to close it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RoundToken {
    id: u64,
}

/// Per-round measurement counts.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MeasurementLedger {
    per_round: Vec<u64>,
    open: Option<u64>,
}

impl MeasurementLedger {
    pub fn new() -> Self {
        MeasurementLedger::default()
    }

    pub fn total_measurements(&self) -> u64 {
        self.per_round.iter().sum::<u64>() + self.open.unwrap_or(0)
    }

    /// Number of committed rounds.
    pub fn total_rounds(&self) -> usize {
        self.per_round.len()
    }

    pub fn per_round_counts(&self) -> &[u64] {
        &self.per_round
    }

    pub fn is_open(&self) -> bool {
        self.open.is_some()
    }

    /// Committed rounds in which nothing was measured.
    pub fn empty_rounds(&self) -> usize {
        self.per_round.iter().filter(|&&c| c == 0).count()
    }

    fn append_rounds(&mut self, other: &MeasurementLedger) {
        self.per_round.extend_from_slice(&other.per_round);
    }
}

/// Combines the ledgers of sub-schemes that ran side by side.
///
/// Round `r` of the result holds the sum of round `r` over all inputs, so the
/// total measurement count is the sum and the round count is the maximum.
pub fn merge_parallel(ledgers: &[MeasurementLedger]) -> Result<MeasurementLedger> {
    if ledgers.iter().any(|l| l.is_open()) {
        return Err(Error::OpenLedger);
    }
    let rounds = ledgers.iter().map(|l| l.total_rounds()).max().unwrap_or(0);
    let mut per_round = vec![0u64; rounds];
    for l in ledgers {
        for (slot, c) in per_round.iter_mut().zip(&l.per_round) {
            *slot += c;
        }
    }
    Ok(MeasurementLedger { per_round, open: None })
}

#[derive(Clone, Debug)]
struct NoiseModel {
    normal: Normal<f64>,
    rng: ChaCha8Rng,
}

/// Wraps a private signal, answers batched linear measurements and meters them.
#[derive(Debug)]
pub struct MeasurementOracle {
    signal: Arc<Signal>,
    ledger: MeasurementLedger,
    open_token: Option<u64>,
    next_token: u64,
    noise: Option<NoiseModel>,
    seed: Seed,
    forks: u64,
}

impl MeasurementOracle {
    pub fn new(signal: Signal) -> Self {
        Self::from_shared(Arc::new(signal), None, Seed(0))
    }

    /// Adds independent `N(0, sigma^2)` noise to every measured value.
    /// Direct coordinate observations stay exact.
    pub fn with_noise(signal: Signal, sigma: f64, seed: Seed) -> Result<Self> {
        let normal = Normal::new(0.0, sigma).map_err(|e| invalid(format!("noise sigma: {e}")))?;
        let noise = NoiseModel { normal, rng: seed.derive("oracle-noise", 0).rng() };
        Ok(Self::from_shared(Arc::new(signal), Some(noise), seed))
    }

    fn from_shared(signal: Arc<Signal>, noise: Option<NoiseModel>, seed: Seed) -> Self {
        MeasurementOracle {
            signal,
            ledger: MeasurementLedger::new(),
            open_token: None,
            next_token: 0,
            noise,
            seed,
            forks: 0,
        }
    }

    pub fn dimension(&self) -> usize {
        self.signal.len()
    }

    pub fn ledger(&self) -> &MeasurementLedger {
        &self.ledger
    }

    pub fn begin_round(&mut self) -> Result<RoundToken> {
        if self.open_token.is_some() {
            return Err(Error::RoundAlreadyOpen);
        }
        let id = self.next_token;
        self.next_token += 1;
        self.open_token = Some(id);
        self.ledger.open = Some(0);
        Ok(RoundToken { id })
    }

    pub fn commit_round(&mut self, token: RoundToken) -> Result<()> {
        match self.open_token {
            None => Err(Error::NoOpenRound),
            Some(id) if id != token.id => Err(Error::StaleToken),
            Some(_) => {
                let count = self.ledger.open.take().unwrap_or(0);
                self.ledger.per_round.push(count);
                self.open_token = None;
                Ok(())
            }
        }
    }

    fn check_range(&self, i: usize) -> Result<()> {
        let n = self.dimension();
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, n });
        }
        Ok(())
    }

    /// Evaluates every functional in `batch` inside the open round.
    ///
    /// The batch is validated as a whole first; on error nothing is counted.
    pub fn measure(&mut self, batch: &[LinearFunctional]) -> Result<Vec<f64>> {
        if self.open_token.is_none() {
            return Err(Error::NoOpenRound);
        }
        for f in batch {
            for &(i, _) in &f.terms {
                self.check_range(i)?;
            }
        }
        let x = self.signal.values();
        let mut out: Vec<f64> = batch
            .iter()
            .map(|f| f.terms.iter().map(|&(i, a)| a * x[i]).sum())
            .collect();
        if let Some(noise) = self.noise.as_mut() {
            for v in out.iter_mut() {
                *v += noise.normal.sample(&mut noise.rng);
            }
        }
        *self.ledger.open.as_mut().expect("open round") += batch.len() as u64;
        Ok(out)
    }

    /// Reads the listed coordinates exactly, one measurement each, inside the open round.
    pub fn observe_coordinates(&mut self, set: &SupportSet) -> Result<BTreeMap<usize, f64>> {
        if self.open_token.is_none() {
            return Err(Error::NoOpenRound);
        }
        for i in set.iter() {
            self.check_range(i)?;
        }
        *self.ledger.open.as_mut().expect("open round") += set.len() as u64;
        Ok(set.iter().map(|i| (i, self.signal.get(i))).collect())
    }

    /// Opens a round, measures `batch` and commits it.
    pub fn measure_round(&mut self, batch: &[LinearFunctional]) -> Result<Vec<f64>> {
        let token = self.begin_round()?;
        let out = self.measure(batch)?;
        self.commit_round(token)?;
        Ok(out)
    }

    /// Opens a round, observes `set` and commits it.
    pub fn observe_round(&mut self, set: &SupportSet) -> Result<BTreeMap<usize, f64>> {
        let token = self.begin_round()?;
        let out = self.observe_coordinates(set)?;
        self.commit_round(token)?;
        Ok(out)
    }

    /// A child oracle over the same signal with an empty ledger.
    ///
    /// Children stand for sub-schemes run side by side; hand them back to
    /// [`MeasurementOracle::join_parallel`] to charge their rounds to `self`.
    pub fn fork(&mut self) -> MeasurementOracle {
        let child_seed = self.seed.derive("oracle-fork", self.forks);
        self.forks += 1;
        let noise = self.noise.as_ref().map(|n| NoiseModel {
            normal: n.normal,
            rng: child_seed.derive("oracle-noise", 0).rng(),
        });
        Self::from_shared(Arc::clone(&self.signal), noise, child_seed)
    }

    /// Appends the parallel merge of the children's ledgers to this ledger.
    pub fn join_parallel(&mut self, children: Vec<MeasurementOracle>) -> Result<()> {
        if self.open_token.is_some() {
            return Err(Error::OpenLedger);
        }
        let ledgers: Vec<MeasurementLedger> = children.into_iter().map(|c| c.ledger).collect();
        let merged = merge_parallel(&ledgers)?;
        self.ledger.append_rounds(&merged);
        Ok(())
    }
}

/// One line of the per-run ledger report.
#[derive(Clone, Debug, PartialEq)]
pub struct LedgerReport {
    pub run_id: String,
    pub scheme: String,
    pub n: usize,
    pub k: usize,
    pub eps: f64,
    pub p: f64,
    pub measurements: u64,
    pub rounds: usize,
    pub empty_rounds: usize,
    pub error_ratio: f64,
    pub success: bool,
}

impl LedgerReport {
    pub const CSV_HEADER: &'static str =
        "run_id,scheme,n,k,eps,p,measurements,rounds,error_ratio,success,empty_rounds";

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.run_id,
            self.scheme,
            self.n,
            self.k,
            self.eps,
            self.p,
            self.measurements,
            self.rounds,
            self.error_ratio,
            self.success,
            self.empty_rounds
        )
    }
}
