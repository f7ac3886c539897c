//! Sliding-window α-rarity: the fraction of distinct window ids that occur
//! exactly α times.
//!
//! A distinct-count smooth histogram partitions the stream. In every bucket
//! and for each of `k` min-hash functions we track the bucket's minimizer and
//! the timestamps of its last α+1 occurrences. A function votes "rare" when
//! exactly α of those timestamps lie in the window; the estimate is the
//! fraction of votes in `A1`.

use serde::{Deserialize, Serialize};

use crate::distinct_sketch::{DistinctParams, DistinctSketchEstimator};
use crate::error::{check_unit, Error, Result};
use crate::hash::seeded_rng;
use crate::minhash::{MinHashFamily, MinKey, MinTracker, RankFamily};
use crate::oracle::ExactDistinct;
use crate::smooth_histogram::{BucketAttachment, SmoothHistogram, SmoothSpec, SuffixEstimator};
use crate::stream::{StreamElement, Timestamp, Universe};

/// `⌈2/ε² · ln(2/δ)⌉`, the number of hash functions for an `(ε, δ)` answer.
pub fn functions_for(eps: f64, delta: f64) -> usize {
    (2.0 / (eps * eps) * (2.0 / delta).ln()).ceil() as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RarityConfig {
    pub alpha: u64,
    pub eps: f64,
    pub delta: f64,
    pub window: u64,
    pub universe: u64,
    pub k: usize,
    pub seed: u64,
}

impl RarityConfig {
    /// A configuration with the smallest admissible `k`.
    pub fn new(alpha: u64, eps: f64, delta: f64, window: u64, universe: u64, seed: u64) -> Self {
        RarityConfig {
            alpha,
            eps,
            delta,
            window,
            universe,
            k: functions_for(eps, delta),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_unit("eps", self.eps)?;
        check_unit("delta", self.delta)?;
        if self.alpha == 0 {
            return Err(Error::invalid("alpha", "must be positive"));
        }
        if self.window == 0 {
            return Err(Error::invalid("window", "must be positive"));
        }
        let min_k = functions_for(self.eps, self.delta);
        if self.k < min_k {
            return Err(Error::invalid(
                "k",
                format!("{} is below the required {min_k}", self.k),
            ));
        }
        Universe::new(self.universe)?;
        Ok(())
    }

    /// Distinct-count sketch accuracy: `(ε, δ/2)`.
    pub fn distinct_params(&self) -> Result<DistinctParams> {
        DistinctParams::new(self.eps, self.delta / 2.0)
    }

    /// Min-wise approximation of the hash family: `ε/2`.
    pub fn eps_prime(&self) -> f64 {
        self.eps / 2.0
    }
}

/// The most recent occurrences of a bucket's minimizer, at most `α + 1`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OccurrenceList {
    timestamps: Vec<Timestamp>,
}

impl OccurrenceList {
    pub fn timestamps(&self) -> &[Timestamp] {
        &self.timestamps
    }

    fn reset(&mut self, ts: Timestamp) {
        self.timestamps.clear();
        self.timestamps.push(ts);
    }

    fn push(&mut self, ts: Timestamp, capacity: usize) {
        if self.timestamps.len() == capacity {
            self.timestamps.remove(0);
        }
        self.timestamps.push(ts);
    }

    /// Timestamps at or after `window_start`.
    pub fn active(&self, window_start: Timestamp) -> usize {
        self.timestamps.len() - self.timestamps.partition_point(|&ts| ts < window_start)
    }
}

/// One hash function's view of a bucket.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RaritySlot {
    pub tracker: MinTracker,
    pub list: OccurrenceList,
}

/// Min-hash trackers and occurrence lists for every bucket.
#[derive(Debug, Clone)]
pub struct RarityAttachment<R> {
    family: R,
    alpha: u64,
    keys: Vec<MinKey>,
}

impl<R: RankFamily> RarityAttachment<R> {
    pub fn new(family: R, alpha: u64) -> Self {
        RarityAttachment {
            family,
            alpha,
            keys: Vec::new(),
        }
    }

    pub fn family(&self) -> &R {
        &self.family
    }

    pub fn alpha(&self) -> u64 {
        self.alpha
    }

    /// Number of functions whose list holds exactly α active timestamps.
    pub fn rare_votes(&self, slots: &[RaritySlot], window_start: Timestamp) -> usize {
        slots
            .iter()
            .filter(|s| s.list.active(window_start) as u64 == self.alpha)
            .count()
    }
}

impl<R: RankFamily> BucketAttachment for RarityAttachment<R> {
    type State = Vec<RaritySlot>;

    fn open(&mut self, _start: Timestamp) -> Vec<RaritySlot> {
        vec![RaritySlot::default(); self.family.len()]
    }

    fn absorb(
        &mut self,
        element: StreamElement,
        _starts: &[Timestamp],
        states: &mut [Vec<RaritySlot>],
    ) {
        self.family.keys_into(element.id, &mut self.keys);
        let capacity = self.alpha as usize + 1;
        for slots in states {
            for (slot, &key) in slots.iter_mut().zip(&self.keys) {
                if slot.tracker.observe(key) {
                    slot.list.reset(element.ts);
                } else if slot.tracker.argmin() == Some(element.id) {
                    slot.list.push(element.ts, capacity);
                }
            }
        }
    }

    fn counters(&self, _state: &Vec<RaritySlot>) -> usize {
        // min value, arg-min and α + 1 timestamps per function
        self.family.len() * (self.alpha as usize + 3)
    }
}

/// Sliding-window α-rarity estimator. [`Rarity::new`] uses sketches
/// throughout; [`Rarity::exact`] replaces the distinct-count sketch by an
/// exact count.
pub struct Rarity<D = DistinctSketchEstimator, R = MinHashFamily>
where
    D: SuffixEstimator,
    R: RankFamily,
{
    config: RarityConfig,
    histogram: SmoothHistogram<D, RarityAttachment<R>>,
}

fn family_for(config: &RarityConfig) -> Result<MinHashFamily> {
    let mut rng = seeded_rng(config.seed, 0x5241_5249);
    MinHashFamily::new(
        config.k,
        config.eps_prime(),
        Universe::new(config.universe)?,
        &mut rng,
    )
}

impl Rarity {
    pub fn new(config: RarityConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = seeded_rng(config.seed, 0x4445_4331);
        let estimator = DistinctSketchEstimator::new(config.distinct_params()?, &mut rng);
        Self::with_parts(config, estimator, family_for(&config)?)
    }
}

impl Rarity<ExactDistinct, MinHashFamily> {
    pub fn exact(config: RarityConfig) -> Result<Self> {
        config.validate()?;
        Self::with_parts(config, ExactDistinct::default(), family_for(&config)?)
    }
}

impl<D: SuffixEstimator, R: RankFamily> Rarity<D, R> {
    /// Builds from an explicit distinct-count estimator and rank family. The
    /// family's size takes the place of `config.k`.
    pub fn with_parts(config: RarityConfig, estimator: D, family: R) -> Result<Self> {
        let histogram = SmoothHistogram::with_attachment(
            config.window,
            SmoothSpec::distinct(config.eps)?,
            Universe::new(config.universe)?,
            estimator,
            RarityAttachment::new(family, config.alpha),
        )?;
        Ok(Rarity { config, histogram })
    }

    pub fn config(&self) -> &RarityConfig {
        &self.config
    }

    pub fn histogram(&self) -> &SmoothHistogram<D, RarityAttachment<R>> {
        &self.histogram
    }

    pub fn insert(&mut self, element: StreamElement) -> Result<()> {
        self.histogram.insert(element)
    }

    pub fn push(&mut self, id: u64) -> Result<StreamElement> {
        self.histogram.push(id)
    }

    /// The estimate `ρ̂_α`.
    pub fn query(&self) -> Result<f64> {
        let first = self
            .histogram
            .first()
            .ok_or(Error::NoData("rarity of an empty stream"))?;
        let att = self.histogram.attachment();
        let votes = att.rare_votes(first.attachment, self.histogram.window_start());
        Ok(votes as f64 / att.family().len() as f64)
    }

    pub fn counters(&self) -> usize {
        self.histogram.counters()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minhash::PermutationFamily;
    use crate::oracle::ExactWindow;
    use rand::Rng;

    fn config(alpha: u64, window: u64, universe: u64, seed: u64) -> RarityConfig {
        RarityConfig::new(alpha, 0.2, 0.1, window, universe, seed)
    }

    #[test]
    fn config_checks() {
        assert_eq!(functions_for(0.2, 0.1), 150);
        let mut c = config(1, 64, 32, 0);
        assert!(c.validate().is_ok());
        c.k = 149;
        assert!(matches!(
            c.validate(),
            Err(Error::InvalidParameter { name: "k", .. })
        ));
        assert!(config(0, 64, 32, 0).validate().is_err());
        assert!(Rarity::new(config(1, 64, 32, 0)).unwrap().query().is_err());
    }

    #[test]
    fn single_element_lists() {
        let mut r = Rarity::new(config(1, 8, 8, 1)).unwrap();
        r.push(3).unwrap();
        let first = r.histogram().first().unwrap();
        assert!(first.attachment.iter().all(|s| s.list.timestamps() == [1]));
        assert_eq!(r.query().unwrap(), 1.0);
    }

    #[test]
    fn lists_keep_alpha_plus_one_newest() {
        let alpha = 2;
        let mut r = Rarity::new(config(alpha, 16, 8, 2)).unwrap();
        for _ in 0..alpha + 2 {
            r.push(5).unwrap();
        }
        for b in r.histogram().buckets() {
            for s in b.attachment {
                let expect: Vec<u64> = (b.start.max(2)..=4).collect();
                assert_eq!(s.list.timestamps(), &expect[..]);
            }
        }
        assert_eq!(r.query().unwrap(), 0.0);
    }

    #[test]
    fn list_resets_when_min_changes() {
        // id 2 ranks below id 1 under the only function
        let family = PermutationFamily::from_ranks(vec![vec![1, 0, 2]]).unwrap();
        let cfg = config(1, 10, 3, 0);
        let mut r = Rarity::with_parts(cfg, ExactDistinct::default(), family).unwrap();
        r.push(1).unwrap();
        r.push(1).unwrap();
        let slot = &r.histogram().first().unwrap().attachment[0];
        assert_eq!(slot.list.timestamps(), [1, 2]);
        r.push(2).unwrap();
        let slot = &r.histogram().first().unwrap().attachment[0];
        assert_eq!(slot.tracker.argmin(), Some(2));
        assert_eq!(slot.list.timestamps(), [3]);
        r.push(3).unwrap();
        let slot = &r.histogram().first().unwrap().attachment[0];
        assert_eq!(slot.list.timestamps(), [3]);
    }

    #[test]
    fn extreme_windows() {
        let n = 64;
        let mut ok_distinct = 0;
        let mut ok_twice = 0;
        for seed in 0..20 {
            let mut r = Rarity::new(config(1, n, 1000, seed)).unwrap();
            for id in 1..=2 * n {
                r.push(id).unwrap();
            }
            ok_distinct += (r.query().unwrap() >= 1.0 - 2.0 * 0.2) as usize;
            let mut r = Rarity::new(config(1, n, 1000, seed)).unwrap();
            for id in 1..=n {
                r.push(id).unwrap();
                r.push(id).unwrap();
            }
            ok_twice += (r.query().unwrap() <= 2.0 * 0.2) as usize;
        }
        assert!(ok_distinct >= 18 && ok_twice >= 18);
    }

    #[test]
    fn lists_are_sorted_and_inside_their_bucket() {
        let mut r = Rarity::new(config(2, 20, 10, 3)).unwrap();
        let mut rng = crate::hash::seeded_rng(3, 1);
        for _ in 0..500 {
            r.push(rng.random_range(1..=10)).unwrap();
            for b in r.histogram().buckets() {
                for s in b.attachment {
                    let ts = s.list.timestamps();
                    assert!(ts.len() <= 3 && !ts.is_empty());
                    assert!(ts.windows(2).all(|w| w[0] < w[1]));
                    assert!(ts[0] >= b.start);
                }
            }
        }
    }

    #[test]
    fn oracle_mode_transfer() {
        // (1-ε)|A1| <= |W| <= |A1| gives (1-ε)ρ <= |R_α|/|A1| <= ρ
        let cfg = config(1, 30, 12, 4);
        let mut r = Rarity::exact(cfg).unwrap();
        let mut w = ExactWindow::new(30).unwrap();
        let mut rng = crate::hash::seeded_rng(4, 1);
        let mut stream = Vec::new();
        for _ in 0..2000 {
            let id = rng.random_range(1..=12);
            stream.push(id);
            r.push(id).unwrap();
            w.push_id(id);
            let a1 = r.histogram().starts()[0] as usize;
            let a1_ids: std::collections::BTreeSet<u64> =
                stream[a1 - 1..].iter().copied().collect();
            let d_w = w.distinct() as f64;
            let d_a = a1_ids.len() as f64;
            assert!((1.0 - cfg.eps) * d_a <= d_w && d_w <= d_a);
            let rho = w.rarity(1).unwrap();
            let rare = w.counts().values().filter(|&&c| c == 1).count() as f64;
            assert!((1.0 - cfg.eps) * rho <= rare / d_a + 1e-12 && rare / d_a <= rho + 1e-12);
        }
    }
}
