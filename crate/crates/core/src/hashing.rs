//! k-wise independent hash families: random polynomials over GF(2^61 - 1).

use rand::Rng;

const P: u64 = (1u64 << 61) - 1;

#[inline]
fn reduce(x: u128) -> u64 {
    let lo = (x as u64) & P;
    let hi = (x >> 61) as u64;
    let mut r = lo + hi;
    if r >= P {
        r -= P;
    }
    r
}

#[inline]
fn mul_mod(a: u64, b: u64) -> u64 {
    reduce(a as u128 * b as u128)
}

#[inline]
fn add_mod(a: u64, b: u64) -> u64 {
    let s = a + b;
    if s >= P {
        s - P
    } else {
        s
    }
}

/// Degree `D - 1` polynomial with uniform coefficients: a `D`-wise independent family.
#[derive(Clone, Debug)]
pub(crate) struct PolyHash<const D: usize> {
    coeffs: [u64; D],
}

impl<const D: usize> PolyHash<D> {
    pub(crate) fn new<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut coeffs = [0u64; D];
        for c in coeffs.iter_mut() {
            *c = rng.random_range(0..P);
        }
        if D > 1 && coeffs[D - 1] == 0 {
            coeffs[D - 1] = 1;
        }
        PolyHash { coeffs }
    }

    #[inline]
    pub(crate) fn eval(&self, key: u64) -> u64 {
        let x = key % P;
        let mut acc = self.coeffs[D - 1];
        for i in (0..D - 1).rev() {
            acc = add_mod(mul_mod(acc, x), self.coeffs[i]);
        }
        acc
    }
}

/// Pairwise independent map into `0..buckets`.
#[derive(Clone, Debug)]
pub(crate) struct BucketHash {
    poly: PolyHash<2>,
    buckets: usize,
}

impl BucketHash {
    pub(crate) fn new<R: Rng + ?Sized>(rng: &mut R, buckets: usize) -> Self {
        assert!(buckets > 0);
        BucketHash { poly: PolyHash::new(rng), buckets }
    }

    #[inline]
    pub(crate) fn bucket(&self, key: usize) -> usize {
        (self.poly.eval(key as u64) % self.buckets as u64) as usize
    }
}

/// Four-wise independent random sign.
#[derive(Clone, Debug)]
pub(crate) struct SignHash {
    poly: PolyHash<4>,
}

impl SignHash {
    pub(crate) fn new<R: Rng + ?Sized>(rng: &mut R) -> Self {
        SignHash { poly: PolyHash::new(rng) }
    }

    #[inline]
    pub(crate) fn sign(&self, key: usize) -> f64 {
        if self.poly.eval(key as u64) & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}
