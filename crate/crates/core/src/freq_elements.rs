//! Sliding-window L2 heavy hitters.
//!
//! An L2 smooth histogram with accuracy `(ε/2, δ/2)` partitions the stream;
//! every bucket carries a CountSketch sized for `(γ, ε/4)`. A query takes the
//! candidates of the oldest bucket `A1` and keeps those with
//! `n̂ > γ·L̂2/(1+ε)`, where `L̂2` is the histogram's window estimate.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::countsketch::{Candidate, CountSketchAttachment, CountSketchParams};
use crate::error::{check_unit, Error, Result};
use crate::hash::seeded_rng;
use crate::l2_sketch::{L2Params, L2SketchEstimator};
use crate::oracle::{ExactFrequencies, ExactL2};
use crate::smooth_histogram::{BucketAttachment, SmoothHistogram, SmoothSpec, SuffixEstimator};
use crate::stream::{StreamElement, Timestamp, Universe};

/// A bucket attachment that can list heavy-hitter candidates of its bucket.
pub trait HeavyCandidates: BucketAttachment {
    /// Candidates of the bucket starting at `start`, by estimate descending.
    fn candidates(&self, start: Timestamp, state: &Self::State) -> Vec<Candidate>;
}

impl HeavyCandidates for CountSketchAttachment {
    fn candidates(&self, start: Timestamp, state: &Self::State) -> Vec<Candidate> {
        self.topk(start, state)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreqConfig {
    pub gamma: f64,
    pub eps: f64,
    pub delta: f64,
    pub window: u64,
    pub universe: u64,
    pub seed: u64,
}

/// Everything derived from a [`FreqConfig`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreqParams {
    pub smooth: SmoothSpec,
    pub l2: L2Params,
    /// Cap on simultaneously live buckets used for the δ split.
    pub max_buckets: u64,
    pub countsketch: CountSketchParams,
}

impl FreqConfig {
    pub fn validate(&self) -> Result<()> {
        check_unit("gamma", self.gamma)?;
        check_unit("eps", self.eps)?;
        check_unit("delta", self.delta)?;
        let e = self.eps;
        if e / 2.0 + e * e / 8.0 >= e {
            return Err(Error::invalid("eps", "needs eps/2 + eps^2/8 < eps"));
        }
        if self.window == 0 {
            return Err(Error::invalid("window", "must be positive"));
        }
        Universe::new(self.universe)?;
        Ok(())
    }

    pub fn params(&self) -> Result<FreqParams> {
        self.validate()?;
        let alpha = self.eps / 2.0;
        let smooth = SmoothSpec::l2(alpha)?;
        let l2 = L2Params::new(alpha, self.delta / 2.0)?;
        let n = self.window as f64;
        let max_buckets = ((8.0 / (self.eps * self.eps)) * n.log2()).ceil().max(1.0) as u64;
        let n_max = ((n / (1.0 - alpha)).ceil() as u64).min(4 * self.window);
        let countsketch = CountSketchParams::new(
            self.gamma,
            self.eps / 4.0,
            self.delta / 2.0 / max_buckets as f64,
            n_max,
        )?;
        Ok(FreqParams {
            smooth,
            l2,
            max_buckets,
            countsketch,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeavyHitter {
    pub id: u64,
    pub estimate: f64,
    /// Whether the candidate passed the final filter.
    pub reported: bool,
}

/// Result of a query: every candidate of `A1`, flagged by whether it passes
/// `n̂ > γ·L̂2/(1+ε)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeavyHitterReport {
    pub items: Vec<HeavyHitter>,
    pub l2_estimate: f64,
    pub threshold: f64,
    pub bucket_count: usize,
}

impl HeavyHitterReport {
    pub fn reported(&self) -> impl Iterator<Item = &HeavyHitter> {
        self.items.iter().filter(|h| h.reported)
    }

    pub fn ids(&self) -> BTreeSet<u64> {
        self.reported().map(|h| h.id).collect()
    }
}

/// The sliding-window heavy-hitter structure. The type parameters select the
/// L2 estimator and the candidate source; [`FrequentElements::new`] builds
/// the sketch version and [`FrequentElements::exact`] the oracle version.
pub struct FrequentElements<E = L2SketchEstimator, A = CountSketchAttachment>
where
    E: SuffixEstimator,
    A: HeavyCandidates,
{
    config: FreqConfig,
    params: FreqParams,
    histogram: SmoothHistogram<E, A>,
}

impl FrequentElements {
    pub fn new(config: FreqConfig) -> Result<Self> {
        let params = config.params()?;
        let mut rng = seeded_rng(config.seed, 0x4652_4551);
        let estimator = L2SketchEstimator::new(params.l2, &mut rng);
        let attachment = CountSketchAttachment::new(params.countsketch, &mut rng);
        Self::with_parts(config, estimator, attachment)
    }
}

impl FrequentElements<ExactL2, ExactFrequencies> {
    /// Exact L2 norms and exact frequencies in place of both sketches.
    pub fn exact(config: FreqConfig) -> Result<Self> {
        Self::with_parts(config, ExactL2::default(), ExactFrequencies::default())
    }
}

impl<E: SuffixEstimator, A: HeavyCandidates> FrequentElements<E, A> {
    pub fn with_parts(config: FreqConfig, estimator: E, attachment: A) -> Result<Self> {
        let params = config.params()?;
        let histogram = SmoothHistogram::with_attachment(
            config.window,
            params.smooth,
            Universe::new(config.universe)?,
            estimator,
            attachment,
        )?;
        Ok(FrequentElements {
            config,
            params,
            histogram,
        })
    }

    pub fn config(&self) -> &FreqConfig {
        &self.config
    }

    pub fn params(&self) -> &FreqParams {
        &self.params
    }

    pub fn histogram(&self) -> &SmoothHistogram<E, A> {
        &self.histogram
    }

    pub fn insert(&mut self, element: StreamElement) -> Result<()> {
        self.histogram.insert(element)
    }

    pub fn push(&mut self, id: u64) -> Result<StreamElement> {
        self.histogram.push(id)
    }

    pub fn query(&self) -> Result<HeavyHitterReport> {
        let first = self
            .histogram
            .first()
            .ok_or(Error::NoData("heavy hitters of an empty stream"))?;
        let l2_estimate = first.estimate;
        let threshold = self.config.gamma * l2_estimate / (1.0 + self.config.eps);
        let items = self
            .histogram
            .attachment()
            .candidates(first.start, first.attachment)
            .into_iter()
            .map(|c| HeavyHitter {
                id: c.id,
                estimate: c.estimate,
                reported: c.estimate > threshold,
            })
            .collect();
        Ok(HeavyHitterReport {
            items,
            l2_estimate,
            threshold,
            bucket_count: self.histogram.len(),
        })
    }

    /// Model memory over all live buckets.
    pub fn counters(&self) -> usize {
        self.histogram.counters()
    }
}
