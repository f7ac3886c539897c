//! Min-wise hashing. A [`RankFamily`] assigns each id a rank under each of
//! `k` functions; the min-hash of a set is its lowest-ranked member. Ranks are
//! compared as `(value, id)` pairs so a value collision still yields a strict
//! order, as a permutation would.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_unit, Error, Result};
use crate::hash::PolyHash;
use crate::stream::Universe;

/// `c₁` in the polynomial degree `d = ⌈c₁ · ln(1/ε′)⌉`.
pub const DEGREE_CONSTANT: f64 = 4.0;

/// A hashed rank with the id as tie-breaker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MinKey {
    pub value: u64,
    pub id: u64,
}

/// `k` functions ranking the ids of a universe. Indices are 0-based.
pub trait RankFamily {
    fn len(&self) -> usize;

    fn universe(&self) -> Universe;

    /// Rank of `id` under function `i`; both must be in range.
    fn value(&self, i: usize, id: u64) -> u64;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn key(&self, i: usize, id: u64) -> MinKey {
        MinKey {
            value: self.value(i, id),
            id,
        }
    }

    /// Checked evaluation.
    fn eval(&self, i: usize, id: u64) -> Result<u64> {
        if i >= self.len() {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.len(),
            });
        }
        self.universe().check(id)?;
        Ok(self.value(i, id))
    }

    /// Keys of `id` under every function, written into `out`.
    fn keys_into(&self, id: u64, out: &mut Vec<MinKey>) {
        out.clear();
        out.extend((0..self.len()).map(|i| self.key(i, id)));
    }
}

/// Random polynomials of degree `d` over GF(2^61 - 1), approximately
/// min-wise independent for `d = ⌈4 ln(1/ε′)⌉`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinHashFamily {
    eps_prime: f64,
    universe: Universe,
    hashes: Vec<PolyHash>,
}

impl MinHashFamily {
    pub fn degree_for(eps_prime: f64) -> usize {
        (DEGREE_CONSTANT * (1.0 / eps_prime).ln()).ceil().max(1.0) as usize
    }

    pub fn new<R: Rng + ?Sized>(
        k: usize,
        eps_prime: f64,
        universe: Universe,
        rng: &mut R,
    ) -> Result<Self> {
        check_unit("eps_prime", eps_prime)?;
        if k == 0 {
            return Err(Error::invalid("k", "must be positive"));
        }
        let d = Self::degree_for(eps_prime);
        Ok(MinHashFamily {
            eps_prime,
            universe,
            hashes: (0..k).map(|_| PolyHash::random(d, rng)).collect(),
        })
    }

    pub fn eps_prime(&self) -> f64 {
        self.eps_prime
    }

    pub fn degree(&self) -> usize {
        self.hashes[0].degree()
    }
}

impl RankFamily for MinHashFamily {
    fn len(&self) -> usize {
        self.hashes.len()
    }

    fn universe(&self) -> Universe {
        self.universe
    }

    #[inline]
    fn value(&self, i: usize, id: u64) -> u64 {
        self.hashes[i].eval(id)
    }
}

/// Exact permutations of `[1, u]`: `value(i, id)` is the position of `id`
/// in permutation `i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermutationFamily {
    universe: Universe,
    ranks: Vec<Vec<u64>>,
}

impl PermutationFamily {
    /// `ranks[i][id - 1]` is the rank of `id` under function `i`; each row
    /// must be a permutation of `0..u`.
    pub fn from_ranks(ranks: Vec<Vec<u64>>) -> Result<Self> {
        let u = ranks.first().map_or(0, |r| r.len());
        let universe = Universe::new(u as u64)?;
        for row in &ranks {
            let mut seen = vec![false; u];
            for &r in row {
                if row.len() != u
                    || r as usize >= u
                    || std::mem::replace(&mut seen[r as usize], true)
                {
                    return Err(Error::invalid("ranks", "every row must permute 0..u"));
                }
            }
        }
        Ok(PermutationFamily { universe, ranks })
    }

    pub fn random<R: Rng + ?Sized>(k: usize, universe: Universe, rng: &mut R) -> Self {
        let u = universe.size();
        let ranks = (0..k)
            .map(|_| {
                let mut row: Vec<u64> = (0..u).collect();
                row.shuffle(rng);
                row
            })
            .collect();
        PermutationFamily { universe, ranks }
    }
}

impl RankFamily for PermutationFamily {
    fn len(&self) -> usize {
        self.ranks.len()
    }

    fn universe(&self) -> Universe {
        self.universe
    }

    #[inline]
    fn value(&self, i: usize, id: u64) -> u64 {
        self.ranks[i][id as usize - 1]
    }
}

/// Running minimum of one function over a growing set.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MinTracker {
    min: Option<MinKey>,
}

impl MinTracker {
    /// Records `key`; true iff it is strictly below the current minimum.
    #[inline]
    pub fn observe(&mut self, key: MinKey) -> bool {
        match self.min {
            Some(m) if m <= key => false,
            _ => {
                self.min = Some(key);
                true
            }
        }
    }

    pub fn min(&self) -> Option<MinKey> {
        self.min
    }

    pub fn argmin(&self) -> Option<u64> {
        self.min.map(|m| m.id)
    }
}

/// Min-hash of a set under function `i`.
pub fn min_of<F: RankFamily + ?Sized>(
    family: &F,
    i: usize,
    ids: impl IntoIterator<Item = u64>,
) -> Option<MinKey> {
    ids.into_iter().map(|id| family.key(i, id)).min()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hash::seeded_rng;
    use std::collections::BTreeSet;

    fn u(n: u64) -> Universe {
        Universe::new(n).unwrap()
    }

    #[test]
    fn degree_and_validation() {
        assert_eq!(MinHashFamily::degree_for(0.1), 10);
        assert_eq!(MinHashFamily::degree_for(0.05), 12);
        let f = MinHashFamily::new(3, 0.1, u(8), &mut seeded_rng(0, 0)).unwrap();
        assert_eq!(f.degree(), 10);
        assert!(matches!(f.eval(3, 1), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(f.eval(0, 9), Err(Error::Domain { .. })));
        assert_eq!(f.eval(2, 5).unwrap(), f.eval(2, 5).unwrap());
        assert!(MinHashFamily::new(0, 0.1, u(8), &mut seeded_rng(0, 0)).is_err());
        assert!(PermutationFamily::from_ranks(vec![vec![0, 0, 1]]).is_err());
        assert!(PermutationFamily::from_ranks(vec![vec![2, 0, 1]]).is_ok());
    }

    #[test]
    fn tracker_semantics() {
        let f = PermutationFamily::from_ranks(vec![vec![2, 0, 1]]).unwrap();
        let mut t = MinTracker::default();
        assert!(t.observe(f.key(0, 1)));
        assert!(!t.observe(f.key(0, 1)));
        assert!(t.observe(f.key(0, 2)));
        assert_eq!(t.argmin(), Some(2));
        assert!(!t.observe(f.key(0, 3)));
        // equal values fall back to the id order
        let mut t = MinTracker::default();
        t.observe(MinKey { value: 5, id: 4 });
        assert!(!t.observe(MinKey { value: 5, id: 4 }));
        assert!(t.observe(MinKey { value: 5, id: 2 }));
        assert!(!t.observe(MinKey { value: 5, id: 3 }));
    }

    #[test]
    fn min_is_monotone_and_order_free() {
        let f = MinHashFamily::new(20, 0.1, u(100), &mut seeded_rng(1, 0)).unwrap();
        let mut rng = seeded_rng(1, 1);
        for _ in 0..200 {
            let a: Vec<u64> = (0..rng.random_range(1..30))
                .map(|_| rng.random_range(1..=100))
                .collect();
            let c: Vec<u64> = (0..rng.random_range(1..30))
                .map(|_| rng.random_range(1..=100))
                .collect();
            let mut shuffled = a.clone();
            shuffled.shuffle(&mut rng);
            for i in 0..f.len() {
                let ma = min_of(&f, i, a.iter().copied()).unwrap();
                let mac = min_of(&f, i, a.iter().chain(&c).copied()).unwrap();
                assert!(mac <= ma);
                let mut t = MinTracker::default();
                shuffled.iter().for_each(|&x| {
                    t.observe(f.key(i, x));
                });
                assert_eq!(t.min(), Some(ma));
            }
        }
    }

    #[test]
    fn approximately_min_wise() {
        // each member of A is the minimizer with probability (1 ± ε′)/|A|,
        // for A = [8] and every A = [8] minus one element
        let eps_prime = 0.1;
        let seeds = 100_000;
        let sets: Vec<Vec<u64>> = std::iter::once((1..=8).collect())
            .chain((1..=8).map(|j| (1..=8).filter(|&x| x != j).collect()))
            .collect();
        let mut wins = vec![[0u32; 9]; sets.len()];
        for seed in 0..seeds {
            let f = MinHashFamily::new(1, eps_prime, u(8), &mut seeded_rng(seed, 7)).unwrap();
            let values: Vec<u64> = (1..=8).map(|x| f.value(0, x)).collect();
            for (s, set) in sets.iter().enumerate() {
                let best = set
                    .iter()
                    .min_by_key(|&&x| (values[x as usize - 1], x))
                    .unwrap();
                wins[s][*best as usize] += 1;
            }
        }
        for (s, set) in sets.iter().enumerate() {
            let p = 1.0 / set.len() as f64;
            let slack = 4.0 * (p * (1.0 - p) / seeds as f64).sqrt();
            for &a in set {
                let freq = wins[s][a as usize] as f64 / seeds as f64;
                assert!(
                    (freq - p).abs() <= eps_prime * p + slack,
                    "set {s} id {a}: {freq} vs {p}"
                );
            }
        }
    }

    #[test]
    fn agreement_rate_matches_jaccard() {
        // for W ⊆ A, the fraction of functions with h(A) = h(W) is |W|/|A|
        // up to ε′ and a Chernoff term at k = ⌈2/ε² ln(2/δ)⌉
        let (eps, delta) = (0.2f64, 0.1f64);
        let k = (2.0 / (eps * eps) * (2.0 / delta).ln()).ceil() as usize;
        let eps_prime = eps / 2.0;
        let mut rng = seeded_rng(2, 1);
        let trials = 200;
        let mut bad = 0;
        for t in 0..trials {
            let f = MinHashFamily::new(k, eps_prime, u(64), &mut seeded_rng(t, 2)).unwrap();
            let a: BTreeSet<u64> = (0..rng.random_range(2..64))
                .map(|_| rng.random_range(1..=64))
                .collect();
            let w: BTreeSet<u64> = a.iter().copied().filter(|_| rng.random_bool(0.6)).collect();
            if w.is_empty() {
                continue;
            }
            let agree = (0..k)
                .filter(|&i| min_of(&f, i, a.iter().copied()) == min_of(&f, i, w.iter().copied()))
                .count();
            let est = agree as f64 / k as f64;
            let j = w.len() as f64 / a.len() as f64;
            bad += ((est - j).abs() > eps_prime + eps) as usize;
        }
        assert!(bad as f64 <= delta * trials as f64, "{bad} violations");
    }

    #[test]
    fn permutation_family_is_exact() {
        let f = PermutationFamily::random(50, u(8), &mut seeded_rng(3, 0));
        for i in 0..f.len() {
            let ranks: BTreeSet<u64> = (1..=8).map(|x| f.value(i, x)).collect();
            assert_eq!(ranks, (0..8).collect());
        }
    }
}
