//! Synthetic signal families.

use std::fmt;

use acs_core::{Seed, Signal};
use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid family parameters: {0}")]
pub struct InvalidFamilyParams(pub String);

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FamilyKind {
    Zero,
    /// `k` nonzeros of magnitude in `[amplitude, 2 amplitude)` with random signs.
    ExactSparse { amplitude: f64 },
    /// Unit Gaussian noise with `k` coordinates replaced by `±snr * sqrt(noise energy / k)`.
    SpikePlusGaussian { snr: f64 },
    /// Magnitudes `rank^-alpha`, shuffled, with random signs.
    PowerLaw { alpha: f64 },
    /// `k` entries equal to 1 and `ceil(1/eps)` entries equal to `eps`.
    HardInstance,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SignalFamily {
    pub kind: FamilyKind,
    pub n: usize,
    pub k: usize,
    pub eps: f64,
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilyKind::Zero => write!(f, "zero"),
            FamilyKind::ExactSparse { amplitude } => write!(f, "exact-sparse(amplitude={amplitude})"),
            FamilyKind::SpikePlusGaussian { snr } => write!(f, "spike-plus-gaussian(snr={snr})"),
            FamilyKind::PowerLaw { alpha } => write!(f, "power-law(alpha={alpha})"),
            FamilyKind::HardInstance => write!(f, "hard-instance-eps"),
        }
    }
}

impl FamilyKind {
    /// Parses a label such as `power-law(alpha=0.7)`, `power-law(0.7)` or `spike-plus-gaussian`.
    pub fn parse(label: &str) -> Result<FamilyKind, InvalidFamilyParams> {
        let label = label.trim();
        let (name, arg) = match label.find('(') {
            Some(open) => {
                let inner = label[open + 1..]
                    .strip_suffix(')')
                    .ok_or_else(|| InvalidFamilyParams(format!("unbalanced parentheses in {label:?}")))?;
                (&label[..open], Some(inner))
            }
            None => (label, None),
        };
        let value = |key: &str, default: f64| -> Result<f64, InvalidFamilyParams> {
            let Some(arg) = arg else { return Ok(default) };
            let raw = arg.split_once('=').map_or(arg, |(k, v)| {
                if k.trim() == key {
                    v
                } else {
                    ""
                }
            });
            raw.trim()
                .parse::<f64>()
                .map_err(|_| InvalidFamilyParams(format!("bad parameter {arg:?} for {name}")))
        };
        match name.trim() {
            "zero" => Ok(FamilyKind::Zero),
            "exact-sparse" => Ok(FamilyKind::ExactSparse { amplitude: value("amplitude", 1.0)? }),
            "spike-plus-gaussian" => Ok(FamilyKind::SpikePlusGaussian { snr: value("snr", 10.0)? }),
            "power-law" => Ok(FamilyKind::PowerLaw { alpha: value("alpha", 0.7)? }),
            "hard-instance-eps" => Ok(FamilyKind::HardInstance),
            other => Err(InvalidFamilyParams(format!("unknown signal family {other:?}"))),
        }
    }
}

impl SignalFamily {
    pub fn validate(&self) -> Result<(), InvalidFamilyParams> {
        let bad = |m: String| Err(InvalidFamilyParams(m));
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        match self.kind {
            FamilyKind::Zero => Ok(()),
            FamilyKind::ExactSparse { amplitude } => {
                if self.k > self.n || !(amplitude > 0.0 && amplitude.is_finite()) {
                    return bad(format!("exact-sparse needs k <= n and amplitude > 0, got k={} amplitude={amplitude}", self.k));
                }
                Ok(())
            }
            FamilyKind::SpikePlusGaussian { snr } => {
                if self.k > self.n || !(snr >= 0.0 && snr.is_finite()) {
                    return bad(format!("spike-plus-gaussian needs k <= n and snr >= 0, got k={} snr={snr}", self.k));
                }
                Ok(())
            }
            FamilyKind::PowerLaw { alpha } => {
                if !(alpha > 0.0 && alpha.is_finite()) {
                    return bad(format!("power-law needs alpha > 0, got {alpha}"));
                }
                Ok(())
            }
            FamilyKind::HardInstance => {
                if !(self.eps > 0.0 && self.eps < 1.0) {
                    return bad(format!("hard-instance-eps needs 0 < eps < 1, got {}", self.eps));
                }
                if self.k + hard_tail_len(self.eps) > self.n {
                    return bad(format!("hard-instance-eps needs k + ceil(1/eps) <= n (n={})", self.n));
                }
                Ok(())
            }
        }
    }
}

fn hard_tail_len(eps: f64) -> usize {
    (1.0 / eps).ceil() as usize
}

fn random_sign<R: Rng>(rng: &mut R) -> f64 {
    if rng.random::<bool>() {
        1.0
    } else {
        -1.0
    }
}

/// Deterministic in `(family, seed)`.
pub fn generate_signal(family: &SignalFamily, seed: Seed) -> Result<Signal, InvalidFamilyParams> {
    family.validate()?;
    let n = family.n;
    let k = family.k;
    let mut rng = seed.rng();
    let mut x = vec![0.0; n];
    match family.kind {
        FamilyKind::Zero => {}
        FamilyKind::ExactSparse { amplitude } => {
            for i in sample(&mut rng, n, k) {
                x[i] = random_sign(&mut rng) * amplitude * (1.0 + rng.random::<f64>());
            }
        }
        FamilyKind::SpikePlusGaussian { snr } => {
            for v in x.iter_mut() {
                *v = StandardNormal.sample(&mut rng);
            }
            let spikes: Vec<usize> = sample(&mut rng, n, k).into_vec();
            for &i in &spikes {
                x[i] = 0.0;
            }
            let noise: f64 = x.iter().map(|v| v * v).sum();
            let amp = snr * (noise / k.max(1) as f64).sqrt();
            for &i in &spikes {
                x[i] = random_sign(&mut rng) * amp;
            }
        }
        FamilyKind::PowerLaw { alpha } => {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            for (rank, &i) in order.iter().enumerate() {
                x[i] = random_sign(&mut rng) * ((rank + 1) as f64).powf(-alpha);
            }
        }
        FamilyKind::HardInstance => {
            let tail = hard_tail_len(family.eps);
            let pos = sample(&mut rng, n, k + tail).into_vec();
            for (j, &i) in pos.iter().enumerate() {
                x[i] = if j < k { 1.0 } else { family.eps };
            }
        }
    }
    Signal::new(x).map_err(|e| InvalidFamilyParams(e.to_string()))
}
