#![allow(dead_code)]

use acs_core::{Seed, Signal};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

pub fn gaussian(n: usize, seed: Seed) -> Vec<f64> {
    let mut rng = seed.rng();
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// `|x_i| ~ i^-alpha` with random signs, shuffled.
pub fn power_law(n: usize, alpha: f64, seed: Seed) -> Vec<f64> {
    let mut rng = seed.rng();
    let mut v: Vec<f64> = (1..=n)
        .map(|i| {
            let s = if rng.random::<bool>() { 1.0 } else { -1.0 };
            s * (i as f64).powf(-alpha)
        })
        .collect();
    v.shuffle(&mut rng);
    v
}

/// Gaussian noise with `k` spikes of magnitude `snr * sqrt(||noise||^2 / k)` at random positions.
/// Returns the signal and the spike positions.
pub fn spikes_over_noise(n: usize, k: usize, snr: f64, seed: Seed) -> (Vec<f64>, Vec<usize>) {
    let mut v = gaussian(n, seed.derive("noise", 0));
    let energy: f64 = v.iter().map(|x| x * x).sum();
    let amp = snr * (energy / k as f64).sqrt();
    let mut rng = seed.derive("spikes", 0).rng();
    let pos: Vec<usize> = rand::seq::index::sample(&mut rng, n, k).into_vec();
    for &i in &pos {
        v[i] = if rng.random::<bool>() { amp } else { -amp };
    }
    (v, pos)
}

pub fn signal(v: Vec<f64>) -> Signal {
    Signal::new(v).unwrap()
}

/// Indices sorted by decreasing magnitude, ties to the lower index.
pub fn order_desc(v: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[b].abs().total_cmp(&v[a].abs()).then(a.cmp(&b)));
    idx
}

pub fn tail_sq(v: &[f64], k: usize) -> f64 {
    order_desc(v).iter().skip(k).map(|&i| v[i] * v[i]).sum()
}

pub fn rate(hits: usize, total: usize) -> f64 {
    hits as f64 / total as f64
}
