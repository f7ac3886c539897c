//! Seeded hash families: polynomial hashing over the Mersenne prime 2^61 - 1
//! (k-wise independent) and 128-bit multiply-add-shift (pairwise independent).

use std::collections::HashMap;
use std::hash::{BuildHasherDefault, Hasher};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// The Mersenne prime 2^61 - 1.
pub const MERSENNE_61: u64 = (1 << 61) - 1;

#[inline]
fn reduce(x: u128) -> u64 {
    let p = MERSENNE_61 as u128;
    let folded = (x & p) + (x >> 61);
    let folded = (folded & p) + (folded >> 61);
    let r = folded as u64;
    if r >= MERSENNE_61 {
        r - MERSENNE_61
    } else {
        r
    }
}

/// Hasher for integer keys that are already hash outputs, such as sketch
/// columns. One multiply instead of SipHash.
#[derive(Debug, Default, Clone, Copy)]
pub struct KeyHasher(u64);

impl Hasher for KeyHasher {
    fn finish(&self) -> u64 {
        self.0 ^ (self.0 >> 32)
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.write_u64(b as u64);
        }
    }

    fn write_u64(&mut self, x: u64) {
        self.0 = (self.0.rotate_left(5) ^ x).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    }
}

pub type KeyMap<V> = HashMap<u64, V, BuildHasherDefault<KeyHasher>>;

/// Deterministic random source for seed material. `stream` separates
/// independent consumers of the same user seed.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Random polynomial of a fixed degree over GF(2^61 - 1). A polynomial of
/// degree `d` with uniform coefficients is a (d+1)-wise independent family.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolyHash {
    coeffs: Vec<u64>,
}

impl PolyHash {
    pub fn random<R: Rng + ?Sized>(degree: usize, rng: &mut R) -> Self {
        let coeffs = (0..=degree)
            .map(|_| rng.random_range(0..MERSENNE_61))
            .collect();
        PolyHash { coeffs }
    }

    pub fn from_coeffs(coeffs: Vec<u64>) -> Self {
        assert!(
            !coeffs.is_empty(),
            "polynomial needs at least one coefficient"
        );
        PolyHash {
            coeffs: coeffs.into_iter().map(|c| c % MERSENNE_61).collect(),
        }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Value in `[0, 2^61 - 1)`.
    #[inline]
    pub fn eval(&self, x: u64) -> u64 {
        let x = reduce(x as u128) as u128;
        let mut acc: u64 = 0;
        for &c in &self.coeffs {
            acc = reduce(acc as u128 * x + c as u128);
        }
        acc
    }

    /// A ±1 value taken from the low bit of the field element.
    #[inline]
    pub fn sign(&self, x: u64) -> i32 {
        if self.eval(x) & 1 == 0 {
            1
        } else {
            -1
        }
    }
}

/// `h(x) = ((a*x + b) mod 2^128) >> 64` with uniform 128-bit `a`, `b`:
/// strongly universal from 64-bit keys to 64-bit values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiplyShift {
    a: [u64; 2],
    b: [u64; 2],
}

impl MultiplyShift {
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        MultiplyShift {
            a: [rng.random(), rng.random()],
            b: [rng.random(), rng.random()],
        }
    }

    #[inline]
    fn wide(w: [u64; 2]) -> u128 {
        (w[0] as u128) << 64 | w[1] as u128
    }

    /// Full 64-bit output, usable as a fixed-point fraction of 2^64.
    #[inline]
    pub fn hash(&self, x: u64) -> u64 {
        let v = Self::wide(self.a)
            .wrapping_mul(x as u128)
            .wrapping_add(Self::wide(self.b));
        (v >> 64) as u64
    }

    /// Maps `x` into `[0, n)` by fixed-point scaling.
    #[inline]
    pub fn bucket(&self, x: u64, n: u64) -> u64 {
        scale(self.hash(x), n)
    }

    #[inline]
    pub fn sign(&self, x: u64) -> i32 {
        if self.hash(x) >> 63 == 0 {
            1
        } else {
            -1
        }
    }
}

/// `floor(h * n / 2^64)`.
#[inline]
pub fn scale(h: u64, n: u64) -> u64 {
    ((h as u128 * n as u128) >> 64) as u64
}
