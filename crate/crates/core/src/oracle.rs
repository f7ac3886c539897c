//! Exact reference computations.
//!
//! [`ExactWindow`] keeps the last `N` elements and their counts and answers
//! every window query exactly. [`ExactDistinct`] and [`ExactL2`] are exact
//! suffix estimators for running a smooth histogram in oracle mode.

use std::collections::{BTreeSet, HashMap, VecDeque};

use crate::countsketch::{sort_candidates, Candidate};
use crate::error::{Error, Result};
use crate::freq_elements::HeavyCandidates;
use crate::smooth_histogram::{BucketAttachment, SuffixEstimator};
use crate::stream::{StreamElement, Timestamp};

/// Elements between bookkeeping trims in the exact estimators.
const TRIM_PERIOD: u64 = 1024;

/// The last `N` elements of a stream with their multiplicities. Before `N`
/// arrivals the window holds everything seen so far.
#[derive(Debug, Clone)]
pub struct ExactWindow {
    window: u64,
    ring: VecDeque<StreamElement>,
    counts: HashMap<u64, u64>,
    now: Timestamp,
}

impl ExactWindow {
    pub fn new(window: u64) -> Result<Self> {
        if window == 0 {
            return Err(Error::invalid("window", "must be positive"));
        }
        Ok(ExactWindow {
            window,
            ring: VecDeque::new(),
            counts: HashMap::new(),
            now: 0,
        })
    }

    pub fn push(&mut self, element: StreamElement) {
        self.now = element.ts;
        self.ring.push_back(element);
        *self.counts.entry(element.id).or_insert(0) += 1;
        if self.ring.len() as u64 > self.window {
            let old = self.ring.pop_front().expect("non-empty ring");
            let c = self.counts.get_mut(&old.id).expect("counted element");
            *c -= 1;
            if *c == 0 {
                self.counts.remove(&old.id);
            }
        }
    }

    /// Pushes `id` at the next timestamp.
    pub fn push_id(&mut self, id: u64) -> StreamElement {
        let e = StreamElement::new(id, self.now + 1);
        self.push(e);
        e
    }

    pub fn window(&self) -> u64 {
        self.window
    }

    pub fn now(&self) -> Timestamp {
        self.now
    }

    /// Number of elements in the window (the L1 norm).
    pub fn len(&self) -> usize {
        self.ring.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ring.is_empty()
    }

    pub fn elements(&self) -> impl Iterator<Item = &StreamElement> {
        self.ring.iter()
    }

    pub fn counts(&self) -> &HashMap<u64, u64> {
        &self.counts
    }

    /// Counts recomputed from the ring buffer.
    pub fn rebuild_counts(&self) -> HashMap<u64, u64> {
        let mut counts = HashMap::new();
        for e in &self.ring {
            *counts.entry(e.id).or_insert(0) += 1;
        }
        counts
    }

    pub fn frequency(&self, id: u64) -> u64 {
        self.counts.get(&id).copied().unwrap_or(0)
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn ids(&self) -> BTreeSet<u64> {
        self.counts.keys().copied().collect()
    }

    pub fn l2(&self) -> f64 {
        l2_of(self.counts.values().copied())
    }

    /// `{i : n_i > gamma * L2}`.
    pub fn heavy(&self, gamma: f64) -> BTreeSet<u64> {
        let threshold = gamma * self.l2();
        self.counts
            .iter()
            .filter(|(_, &n)| n as f64 > threshold)
            .map(|(&id, _)| id)
            .collect()
    }

    /// Fraction of distinct window ids that occur exactly `alpha` times.
    pub fn rarity(&self, alpha: u64) -> Result<f64> {
        if self.counts.is_empty() {
            return Err(Error::NoData("rarity of an empty window"));
        }
        let rare = self.counts.values().filter(|&&n| n == alpha).count();
        Ok(rare as f64 / self.counts.len() as f64)
    }

    /// Jaccard similarity of the distinct-id sets of two windows.
    pub fn similarity(&self, other: &ExactWindow) -> Result<f64> {
        jaccard(&self.ids(), &other.ids())
    }
}

/// `sqrt(sum n_i^2)`.
pub fn l2_of(counts: impl IntoIterator<Item = u64>) -> f64 {
    let f2: u128 = counts.into_iter().map(|n| n as u128 * n as u128).sum();
    (f2 as f64).sqrt()
}

/// `|a ∩ b| / |a ∪ b|`; fails when both sets are empty.
pub fn jaccard(a: &BTreeSet<u64>, b: &BTreeSet<u64>) -> Result<f64> {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        return Err(Error::NoData("similarity of two empty windows"));
    }
    Ok(inter as f64 / union as f64)
}

/// Exact distinct count of every bucket. Keeps the last arrival time of each
/// id: an arrival adds one to exactly the buckets that start after the id's
/// previous occurrence.
#[derive(Debug, Clone, Default)]
pub struct ExactDistinct {
    last_seen: HashMap<u64, Timestamp>,
    oldest: Timestamp,
    since_trim: u64,
}

impl SuffixEstimator for ExactDistinct {
    type State = u64;

    fn open(&mut self, _start: Timestamp) -> u64 {
        0
    }

    fn absorb(&mut self, element: StreamElement, starts: &[Timestamp], states: &mut [u64]) {
        let previous = self.last_seen.insert(element.id, element.ts).unwrap_or(0);
        for (start, count) in starts.iter().zip(states.iter_mut()).rev() {
            if *start <= previous {
                break;
            }
            *count += 1;
        }
        self.since_trim += 1;
        if self.since_trim >= TRIM_PERIOD {
            self.since_trim = 0;
            let oldest = self.oldest;
            self.last_seen.retain(|_, ts| *ts >= oldest);
        }
    }

    fn estimate(&self, state: &u64) -> f64 {
        *state as f64
    }

    fn retire(&mut self, oldest_start: Timestamp) {
        self.oldest = oldest_start;
    }

    fn counters(&self, _state: &u64) -> usize {
        1
    }
}

/// Exact L2 norm of every bucket. Keeps the arrival times of each id so the
/// per-bucket count `n` of an arriving id is a pointer walk, and the squared
/// norm grows by `2n + 1`.
#[derive(Debug, Clone, Default)]
pub struct ExactL2 {
    occurrences: HashMap<u64, Vec<Timestamp>>,
    oldest: Timestamp,
    since_trim: u64,
}

impl SuffixEstimator for ExactL2 {
    type State = u64;

    fn open(&mut self, _start: Timestamp) -> u64 {
        0
    }

    fn absorb(&mut self, element: StreamElement, starts: &[Timestamp], states: &mut [u64]) {
        let occ = self.occurrences.entry(element.id).or_default();
        let mut p = occ.len();
        for (start, f2) in starts.iter().zip(states.iter_mut()).rev() {
            while p > 0 && occ[p - 1] >= *start {
                p -= 1;
            }
            let n = (occ.len() - p) as u64;
            *f2 += 2 * n + 1;
        }
        occ.push(element.ts);
        self.since_trim += 1;
        if self.since_trim >= TRIM_PERIOD {
            self.since_trim = 0;
            let oldest = self.oldest;
            self.occurrences.retain(|_, occ| {
                let stale = occ.partition_point(|&ts| ts < oldest);
                occ.drain(..stale);
                !occ.is_empty()
            });
        }
    }

    fn estimate(&self, state: &u64) -> f64 {
        (*state as f64).sqrt()
    }

    fn retire(&mut self, oldest_start: Timestamp) {
        self.oldest = oldest_start;
    }

    fn counters(&self, _state: &u64) -> usize {
        1
    }
}

/// Exact per-bucket frequencies, the oracle stand-in for CountSketch.
#[derive(Debug, Clone, Default)]
pub struct ExactFrequencies {
    occurrences: HashMap<u64, Vec<Timestamp>>,
    oldest: Timestamp,
    since_trim: u64,
}

impl ExactFrequencies {
    /// Occurrences of `id` at or after `start`.
    pub fn count_since(&self, id: u64, start: Timestamp) -> u64 {
        self.occurrences.get(&id).map_or(0, |occ| {
            (occ.len() - occ.partition_point(|&ts| ts < start)) as u64
        })
    }
}

impl BucketAttachment for ExactFrequencies {
    type State = ();

    fn open(&mut self, _start: Timestamp) {}

    fn absorb(&mut self, element: StreamElement, _starts: &[Timestamp], _states: &mut [()]) {
        self.occurrences
            .entry(element.id)
            .or_default()
            .push(element.ts);
        self.since_trim += 1;
        if self.since_trim >= TRIM_PERIOD {
            self.since_trim = 0;
            let oldest = self.oldest;
            self.occurrences.retain(|_, occ| {
                let stale = occ.partition_point(|&ts| ts < oldest);
                occ.drain(..stale);
                !occ.is_empty()
            });
        }
    }

    fn retire(&mut self, oldest_start: Timestamp) {
        self.oldest = oldest_start;
    }
}

impl HeavyCandidates for ExactFrequencies {
    /// Every id of the bucket with its exact count.
    fn candidates(&self, start: Timestamp, _state: &()) -> Vec<Candidate> {
        let mut v: Vec<Candidate> = self
            .occurrences
            .keys()
            .map(|&id| Candidate {
                id,
                estimate: self.count_since(id, start) as f64,
            })
            .filter(|c| c.estimate > 0.0)
            .collect();
        sort_candidates(&mut v);
        v
    }
}
