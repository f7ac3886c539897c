//! Jaccard similarity of the windows of two streams.
//!
//! Each stream runs its own distinct-count smooth histogram. Buckets on both
//! sides track the minimum of the same `k` hash functions; the estimate is
//! the fraction of functions on which the two `A1` buckets share a minimizer.

use serde::{Deserialize, Serialize};

use crate::distinct_sketch::{DistinctParams, DistinctSketchEstimator};
use crate::error::{check_unit, Error, Result};
use crate::hash::seeded_rng;
use crate::minhash::{MinHashFamily, MinKey, MinTracker, RankFamily};
use crate::oracle::ExactDistinct;
use crate::rarity::functions_for;
use crate::smooth_histogram::{BucketAttachment, SmoothHistogram, SmoothSpec, SuffixEstimator};
use crate::stream::{StreamElement, Timestamp, Universe};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityConfig {
    pub eps: f64,
    /// Smoothness of the distinct-count histograms; must be below `ε/2`.
    pub eps_prime: f64,
    pub delta: f64,
    pub window: u64,
    pub universe: u64,
    pub k: usize,
    pub seed: u64,
}

impl SimilarityConfig {
    /// `ε′ = ε/4` and the smallest admissible `k`.
    pub fn new(eps: f64, delta: f64, window: u64, universe: u64, seed: u64) -> Self {
        SimilarityConfig {
            eps,
            eps_prime: eps / 4.0,
            delta,
            window,
            universe,
            k: functions_for(eps, delta),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_unit("eps", self.eps)?;
        check_unit("eps_prime", self.eps_prime)?;
        check_unit("delta", self.delta)?;
        if self.eps_prime >= self.eps / 2.0 {
            return Err(Error::invalid("eps_prime", "must be below eps/2"));
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

    /// Distinct-count sketch accuracy per side: `(ε′, δ/4)`.
    pub fn distinct_params(&self) -> Result<DistinctParams> {
        DistinctParams::new(self.eps_prime, self.delta / 4.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    X,
    Y,
}

/// Per-bucket minimum of every hash function.
#[derive(Debug, Clone)]
pub struct MinHashAttachment<R> {
    family: R,
    keys: Vec<MinKey>,
}

impl<R: RankFamily> MinHashAttachment<R> {
    pub fn new(family: R) -> Self {
        MinHashAttachment {
            family,
            keys: Vec::new(),
        }
    }

    pub fn family(&self) -> &R {
        &self.family
    }
}

impl<R: RankFamily> BucketAttachment for MinHashAttachment<R> {
    type State = Vec<MinTracker>;

    fn open(&mut self, _start: Timestamp) -> Vec<MinTracker> {
        vec![MinTracker::default(); self.family.len()]
    }

    fn absorb(
        &mut self,
        element: StreamElement,
        _starts: &[Timestamp],
        states: &mut [Vec<MinTracker>],
    ) {
        self.family.keys_into(element.id, &mut self.keys);
        for trackers in states {
            for (t, &key) in trackers.iter_mut().zip(&self.keys) {
                t.observe(key);
            }
        }
    }

    fn counters(&self, _state: &Vec<MinTracker>) -> usize {
        2 * self.family.len()
    }
}

pub type SideHistogram<D, R> = SmoothHistogram<D, MinHashAttachment<R>>;

/// Two-stream similarity estimator. The sides are independent and may be
/// fed at different rates, or from different threads through
/// [`Similarity::sides_mut`].
pub struct Similarity<D = DistinctSketchEstimator, R = MinHashFamily>
where
    D: SuffixEstimator,
    R: RankFamily,
{
    config: SimilarityConfig,
    x: SideHistogram<D, R>,
    y: SideHistogram<D, R>,
}

fn family_for(config: &SimilarityConfig) -> Result<MinHashFamily> {
    let mut rng = seeded_rng(config.seed, 0x5349_4d31);
    MinHashFamily::new(
        config.k,
        config.eps_prime,
        Universe::new(config.universe)?,
        &mut rng,
    )
}

impl Similarity {
    pub fn new(config: SimilarityConfig) -> Result<Self> {
        config.validate()?;
        let params = config.distinct_params()?;
        let dx = DistinctSketchEstimator::new(params, &mut seeded_rng(config.seed, 0x4445_4358));
        let dy = DistinctSketchEstimator::new(params, &mut seeded_rng(config.seed, 0x4445_4359));
        Self::with_parts(config, dx, dy, family_for(&config)?)
    }
}

impl Similarity<ExactDistinct, MinHashFamily> {
    pub fn exact(config: SimilarityConfig) -> Result<Self> {
        config.validate()?;
        Self::with_parts(
            config,
            ExactDistinct::default(),
            ExactDistinct::default(),
            family_for(&config)?,
        )
    }
}

impl<D: SuffixEstimator, R: RankFamily + Clone> Similarity<D, R> {
    /// Both sides get a copy of `family`, hence identical hash functions.
    pub fn with_parts(config: SimilarityConfig, x: D, y: D, family: R) -> Result<Self> {
        let spec = SmoothSpec::distinct(config.eps_prime)?;
        let universe = Universe::new(config.universe)?;
        let side = |estimator, family| {
            SmoothHistogram::with_attachment(
                config.window,
                spec,
                universe,
                estimator,
                MinHashAttachment::new(family),
            )
        };
        Ok(Similarity {
            config,
            x: side(x, family.clone())?,
            y: side(y, family)?,
        })
    }
}

impl<D: SuffixEstimator, R: RankFamily> Similarity<D, R> {
    pub fn config(&self) -> &SimilarityConfig {
        &self.config
    }

    pub fn side(&self, side: Side) -> &SideHistogram<D, R> {
        match side {
            Side::X => &self.x,
            Side::Y => &self.y,
        }
    }

    /// Both sides, for feeding them independently.
    pub fn sides_mut(&mut self) -> (&mut SideHistogram<D, R>, &mut SideHistogram<D, R>) {
        (&mut self.x, &mut self.y)
    }

    pub fn insert(&mut self, side: Side, element: StreamElement) -> Result<()> {
        match side {
            Side::X => self.x.insert(element),
            Side::Y => self.y.insert(element),
        }
    }

    pub fn push(&mut self, side: Side, id: u64) -> Result<StreamElement> {
        match side {
            Side::X => self.x.push(id),
            Side::Y => self.y.push(id),
        }
    }

    /// The estimate `σ̂`: the fraction of functions on which the `A1` buckets
    /// of both sides have the same minimizer.
    pub fn query(&self) -> Result<f64> {
        let (Some(ax), Some(ay)) = (self.x.first(), self.y.first()) else {
            return Err(Error::NoData("similarity needs both streams non-empty"));
        };
        let agree = ax
            .attachment
            .iter()
            .zip(ay.attachment)
            .filter(|(a, b)| a.min().is_some() && a.min() == b.min())
            .count();
        Ok(agree as f64 / ax.attachment.len() as f64)
    }

    pub fn counters(&self) -> usize {
        self.x.counters() + self.y.counters()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hash::seeded_rng;
    use rand::Rng;

    fn config(seed: u64) -> SimilarityConfig {
        SimilarityConfig::new(0.2, 0.1, 64, 128, seed)
    }

    #[test]
    fn config_checks() {
        let c = config(0);
        assert_eq!(c.k, 150);
        assert!((c.eps_prime - 0.05).abs() < 1e-12);
        assert!(c.validate().is_ok());
        let mut bad = c;
        bad.eps_prime = 0.1;
        assert!(bad.validate().is_err());
        let s = Similarity::new(c).unwrap();
        assert!(matches!(s.query(), Err(Error::NoData(_))));
    }

    #[test]
    fn single_and_disjoint() {
        let mut s = Similarity::new(config(1)).unwrap();
        s.push(Side::X, 7).unwrap();
        assert!(s.query().is_err());
        s.push(Side::Y, 7).unwrap();
        assert_eq!(s.query().unwrap(), 1.0);

        let mut s = Similarity::new(config(1)).unwrap();
        s.push(Side::X, 1).unwrap();
        s.push(Side::Y, 2).unwrap();
        assert_eq!(s.query().unwrap(), 0.0);
    }

    fn random_pair(seed: u64) -> (Vec<u64>, Vec<u64>) {
        let mut rng = seeded_rng(seed, 9);
        let x: Vec<u64> = (0..300).map(|_| rng.random_range(1..=60)).collect();
        let y: Vec<u64> = (0..250).map(|_| rng.random_range(30..=128)).collect();
        (x, y)
    }

    #[test]
    fn symmetric_and_order_independent() {
        for seed in 0..10 {
            let (x, y) = random_pair(seed);
            let mut a = Similarity::new(config(seed)).unwrap();
            let mut b = Similarity::new(config(seed)).unwrap();
            let mut c = Similarity::new(config(seed)).unwrap();
            for &id in &x {
                a.push(Side::X, id).unwrap();
            }
            for &id in &y {
                a.push(Side::Y, id).unwrap();
            }
            for &id in &x {
                b.push(Side::Y, id).unwrap();
            }
            for &id in &y {
                b.push(Side::X, id).unwrap();
            }
            // interleaved feeding
            let mut xi = x.iter();
            let mut yi = y.iter();
            loop {
                let (nx, ny) = (xi.next(), yi.next());
                if nx.is_none() && ny.is_none() {
                    break;
                }
                if let Some(&id) = nx {
                    c.push(Side::X, id).unwrap();
                }
                if let Some(&id) = ny {
                    c.push(Side::Y, id).unwrap();
                }
            }
            assert_eq!(a.query().unwrap(), b.query().unwrap());
            assert_eq!(a.query().unwrap(), c.query().unwrap());
        }
    }

    #[test]
    fn identical_streams_give_one() {
        let (x, _) = random_pair(3);
        let mut s = Similarity::new(config(3)).unwrap();
        for &id in &x {
            s.push(Side::X, id).unwrap();
            s.push(Side::Y, id).unwrap();
            assert_eq!(s.query().unwrap(), 1.0);
        }
    }

    #[test]
    fn sides_can_be_fed_from_threads() {
        let (x, y) = random_pair(4);
        let mut s = Similarity::new(config(4)).unwrap();
        let (sx, sy) = s.sides_mut();
        std::thread::scope(|scope| {
            scope.spawn(|| {
                x.iter().for_each(|&id| {
                    sx.push(id).unwrap();
                })
            });
            scope.spawn(|| {
                y.iter().for_each(|&id| {
                    sy.push(id).unwrap();
                })
            });
        });
        let mut t = Similarity::new(config(4)).unwrap();
        for &id in &x {
            t.push(Side::X, id).unwrap();
        }
        for &id in &y {
            t.push(Side::Y, id).unwrap();
        }
        assert_eq!(s.query().unwrap(), t.query().unwrap());
    }

    #[test]
    fn exact_mode_set_algebra() {
        // an exact distinct count keeps (1-ε′)|A| <= |W| <= |A| on each side,
        // which bounds the union of the covering buckets
        let cfg = config(5);
        let mut s = Similarity::exact(cfg).unwrap();
        let (x, y) = random_pair(5);
        let (mut hx, mut hy) = (Vec::new(), Vec::new());
        for (&a, &b) in x.iter().zip(&y) {
            s.push(Side::X, a).unwrap();
            s.push(Side::Y, b).unwrap();
            hx.push(a);
            hy.push(b);
            let set = |h: &[u64], from: usize| {
                h[from..]
                    .iter()
                    .copied()
                    .collect::<std::collections::BTreeSet<u64>>()
            };
            let wx = set(&hx, hx.len().saturating_sub(64));
            let wy = set(&hy, hy.len().saturating_sub(64));
            let ax = set(&hx, s.side(Side::X).starts()[0] as usize - 1);
            let ay = set(&hy, s.side(Side::Y).starts()[0] as usize - 1);
            let w_union = wx.union(&wy).count() as f64;
            let a_union = ax.union(&ay).count() as f64;
            let e = cfg.eps_prime;
            assert!(w_union <= a_union && a_union <= (1.0 + e) / (1.0 - e) * w_union + 1e-9);
        }
    }
}
