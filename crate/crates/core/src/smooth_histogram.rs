//! Smooth histograms: a sliding-window scaffold over nested stream suffixes.
//!
//! Every arrival opens a new bucket (a suffix starting at that arrival) and is
//! fed to all live buckets. Adjacent buckets whose estimates are within a
//! `(1 - beta)` factor are collapsed to one representative, and the oldest
//! bucket is dropped once the second-oldest already covers the window. The
//! oldest live bucket `A1` therefore always contains the window `W`, and for
//! an `(alpha, beta)`-smooth function `(1 - alpha) f(A1) <= f(A2) <= f(W) <= f(A1)`.
//!
//! The smooth function itself is supplied by a [`SuffixEstimator`]; any
//! non-smooth per-bucket state (CountSketch candidates, min-hash samples)
//! rides along as a [`BucketAttachment`] and follows the same bucket
//! lifecycle.

use serde::{Deserialize, Serialize};

use crate::error::{check_unit, Error, Result};
use crate::stream::{Clock, StreamElement, Timestamp, Universe};

/// Smoothness parameters `0 < beta <= alpha < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothSpec {
    alpha: f64,
    beta: f64,
}

impl SmoothSpec {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        check_unit("alpha", alpha)?;
        check_unit("beta", beta)?;
        if beta > alpha {
            return Err(Error::invalid(
                "beta",
                format!("{beta} exceeds alpha = {alpha}"),
            ));
        }
        Ok(SmoothSpec { alpha, beta })
    }

    /// The L2 norm is `(alpha, alpha^2 / 2)`-smooth.
    pub fn l2(alpha: f64) -> Result<Self> {
        Self::new(alpha, alpha * alpha / 2.0)
    }

    /// The distinct count is `(eps, eps)`-smooth.
    pub fn distinct(eps: f64) -> Result<Self> {
        Self::new(eps, eps)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// An unbounded-stream estimator of a smooth function, instantiated once per
/// bucket. The estimator object itself holds whatever is shared across
/// buckets (hash functions, occurrence indexes).
pub trait SuffixEstimator {
    type State;

    /// Fresh state for a bucket whose first element arrives at `start`.
    fn open(&mut self, start: Timestamp) -> Self::State;

    /// Feeds `element` to every live bucket. `starts` is strictly increasing
    /// and parallel to `states`; the newest bucket (last) was opened for
    /// this very element.
    fn absorb(&mut self, element: StreamElement, starts: &[Timestamp], states: &mut [Self::State]);

    /// Current non-negative estimate of the bucket. Must not decrease as the
    /// bucket absorbs more elements.
    fn estimate(&self, state: &Self::State) -> f64;

    /// Called after expiry with the start of the oldest live bucket; shared
    /// bookkeeping older than this may be discarded.
    fn retire(&mut self, _oldest_start: Timestamp) {}

    /// Model memory of one bucket, in counters or stored words.
    fn counters(&self, _state: &Self::State) -> usize {
        0
    }
}

/// Per-bucket state that is not used for partitioning but lives and dies with
/// the bucket.
pub trait BucketAttachment {
    type State;

    fn open(&mut self, start: Timestamp) -> Self::State;

    fn absorb(&mut self, element: StreamElement, starts: &[Timestamp], states: &mut [Self::State]);

    fn retire(&mut self, _oldest_start: Timestamp) {}

    fn counters(&self, _state: &Self::State) -> usize {
        0
    }
}

/// The empty attachment.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoAttachment;

impl BucketAttachment for NoAttachment {
    type State = ();

    fn open(&mut self, _start: Timestamp) {}

    fn absorb(&mut self, _element: StreamElement, _starts: &[Timestamp], _states: &mut [()]) {}
}

/// Read-only view of one bucket.
#[derive(Debug)]
pub struct BucketRef<'a, S, T> {
    pub start: Timestamp,
    pub estimate: f64,
    pub state: &'a S,
    pub attachment: &'a T,
}

/// Buckets are stored column-wise so estimators and attachments each see a
/// contiguous slice of their own states.
pub struct SmoothHistogram<E: SuffixEstimator, A: BucketAttachment = NoAttachment> {
    window: u64,
    spec: SmoothSpec,
    universe: Universe,
    clock: Clock,
    estimator: E,
    attachment: A,
    starts: Vec<Timestamp>,
    estimates: Vec<f64>,
    states: Vec<E::State>,
    attached: Vec<A::State>,
}

impl<E: SuffixEstimator> SmoothHistogram<E, NoAttachment> {
    pub fn new(window: u64, spec: SmoothSpec, universe: Universe, estimator: E) -> Result<Self> {
        Self::with_attachment(window, spec, universe, estimator, NoAttachment)
    }
}

impl<E: SuffixEstimator, A: BucketAttachment> SmoothHistogram<E, A> {
    pub fn with_attachment(
        window: u64,
        spec: SmoothSpec,
        universe: Universe,
        estimator: E,
        attachment: A,
    ) -> Result<Self> {
        if window == 0 {
            return Err(Error::invalid("window", "must be positive"));
        }
        Ok(SmoothHistogram {
            window,
            spec,
            universe,
            clock: Clock::default(),
            estimator,
            attachment,
            starts: Vec::new(),
            estimates: Vec::new(),
            states: Vec::new(),
            attached: Vec::new(),
        })
    }

    /// Ingests one element: it must carry the next timestamp and an id in the
    /// universe. Feeds every bucket, opens a new one, prunes, then expires.
    pub fn insert(&mut self, element: StreamElement) -> Result<()> {
        self.universe.check(element.id)?;
        self.clock.advance(element.ts)?;

        self.starts.push(element.ts);
        self.estimates.push(0.0);
        self.states.push(self.estimator.open(element.ts));
        self.attached.push(self.attachment.open(element.ts));

        self.estimator
            .absorb(element, &self.starts, &mut self.states);
        self.attachment
            .absorb(element, &self.starts, &mut self.attached);

        for (cached, state) in self.estimates.iter_mut().zip(&self.states) {
            let fresh = self.estimator.estimate(state);
            debug_assert!(
                fresh >= *cached - 1e-9 * cached.abs().max(1.0),
                "estimator decreased from {cached} to {fresh}"
            );
            *cached = fresh;
        }

        self.prune();
        self.expire();
        Ok(())
    }

    /// Ingests `id` at the next timestamp.
    pub fn push(&mut self, id: u64) -> Result<StreamElement> {
        let element = StreamElement::new(id, self.clock.next());
        self.insert(element)?;
        Ok(element)
    }

    /// Collapses runs of buckets with close estimates (see [`prune_mask`]).
    pub fn prune(&mut self) {
        let keep = prune_mask(&self.estimates, self.spec.beta);
        if keep.iter().all(|&k| k) {
            return;
        }
        retain_mask(&mut self.starts, &keep);
        retain_mask(&mut self.estimates, &keep);
        retain_mask(&mut self.states, &keep);
        retain_mask(&mut self.attached, &keep);
    }

    /// Drops `A1` while `A2` already starts at or before the window start, so
    /// that afterwards `start(A1) <= window start < start(A2)`.
    pub fn expire(&mut self) {
        let window_start = self.window_start();
        let mut drop = 0;
        while self.starts.len() - drop >= 2 && self.starts[drop + 1] <= window_start {
            drop += 1;
        }
        if drop > 0 {
            self.starts.drain(..drop);
            self.estimates.drain(..drop);
            self.states.drain(..drop);
            self.attached.drain(..drop);
            let oldest = self.starts[0];
            self.estimator.retire(oldest);
            self.attachment.retire(oldest);
        }
    }

    /// Estimate of the window value: the estimate of `A1`.
    pub fn window_estimate(&self) -> Result<f64> {
        self.estimates
            .first()
            .copied()
            .ok_or(Error::NoData("smooth histogram is empty"))
    }

    /// Timestamp of the oldest element still inside the window.
    pub fn window_start(&self) -> Timestamp {
        (self.clock.now() + 1).saturating_sub(self.window).max(1)
    }

    pub fn now(&self) -> Timestamp {
        self.clock.now()
    }

    pub fn window(&self) -> u64 {
        self.window
    }

    pub fn spec(&self) -> SmoothSpec {
        self.spec
    }

    pub fn universe(&self) -> Universe {
        self.universe
    }

    pub fn len(&self) -> usize {
        self.starts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.starts.is_empty()
    }

    pub fn starts(&self) -> &[Timestamp] {
        &self.starts
    }

    pub fn estimates(&self) -> &[f64] {
        &self.estimates
    }

    pub fn bucket(&self, index: usize) -> Option<BucketRef<'_, E::State, A::State>> {
        Some(BucketRef {
            start: *self.starts.get(index)?,
            estimate: self.estimates[index],
            state: &self.states[index],
            attachment: &self.attached[index],
        })
    }

    /// The window-covering bucket `A1`.
    pub fn first(&self) -> Option<BucketRef<'_, E::State, A::State>> {
        self.bucket(0)
    }

    pub fn buckets(&self) -> impl Iterator<Item = BucketRef<'_, E::State, A::State>> {
        (0..self.len()).map(move |i| self.bucket(i).expect("index in range"))
    }

    pub fn estimator(&self) -> &E {
        &self.estimator
    }

    pub fn attachment(&self) -> &A {
        &self.attachment
    }

    /// Total model memory over all live buckets.
    pub fn counters(&self) -> usize {
        let own: usize = self.states.iter().map(|s| self.estimator.counters(s)).sum();
        let attached: usize = self
            .attached
            .iter()
            .map(|s| self.attachment.counters(s))
            .sum();
        own + attached
    }
}

/// Which buckets survive pruning, given estimates ordered oldest first.
///
/// Starting from the oldest bucket `i`, finds the largest `j > i + 1` with
/// `est[j] >= (1 - beta) * est[i]`, deletes everything strictly between, and
/// continues from `j`. Afterwards no three consecutive survivors satisfy
/// `est[i + 2] >= (1 - beta) * est[i]`.
pub fn prune_mask(estimates: &[f64], beta: f64) -> Vec<bool> {
    let n = estimates.len();
    let mut keep = vec![false; n];
    // suffix maxima turn "largest j with est[j] >= thr" into a binary search
    let mut suffix_max = estimates.to_vec();
    for j in (0..n.saturating_sub(1)).rev() {
        suffix_max[j] = suffix_max[j].max(suffix_max[j + 1]);
    }
    let mut i = 0;
    while i < n {
        keep[i] = true;
        let threshold = (1.0 - beta) * estimates[i];
        if i + 2 < n && suffix_max[i + 2] >= threshold {
            let run = suffix_max[i + 2..].partition_point(|&m| m >= threshold);
            i = i + 2 + run - 1;
        } else {
            i += 1;
        }
    }
    keep
}

fn retain_mask<T>(values: &mut Vec<T>, keep: &[bool]) {
    let mut idx = 0;
    values.retain(|_| {
        let k = keep[idx];
        idx += 1;
        k
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{ExactDistinct, ExactL2};

    fn distinct_hist(window: u64, eps: f64) -> SmoothHistogram<ExactDistinct> {
        SmoothHistogram::new(
            window,
            SmoothSpec::distinct(eps).unwrap(),
            Universe::new(1 << 20).unwrap(),
            ExactDistinct::default(),
        )
        .unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(SmoothSpec::new(0.5, 0.5).is_ok());
        assert!(SmoothSpec::new(0.2, 0.3).is_err());
        assert!(SmoothSpec::new(0.0, 0.0).is_err());
        assert!(SmoothSpec::new(1.0, 0.5).is_err());
        assert!((SmoothSpec::l2(0.1).unwrap().beta() - 0.005).abs() < 1e-15);
    }

    #[test]
    fn prune_largest_j_rule() {
        // thr = 9.0: largest j >= 2 with est >= 9 is j = 2, so 9.9 goes
        let keep = prune_mask(&[10.0, 9.9, 9.8, 5.0], 0.1);
        assert_eq!(keep, vec![true, false, true, true]);
    }

    #[test]
    fn prune_trivial_cases() {
        assert_eq!(prune_mask(&[3.0], 0.1), vec![true]);
        assert!(prune_mask(&[], 0.1).is_empty());
        let geometric = [100.0, 80.0, 64.0, 51.2, 40.96];
        assert!(prune_mask(&geometric, 0.1).iter().all(|&k| k));
        // idempotent on an already pruned list
        let est = [10.0, 9.8, 5.0];
        assert_eq!(prune_mask(&est, 0.1), vec![true; 3]);
    }

    #[test]
    fn prune_postcondition_on_random_lists() {
        use rand::Rng;
        let mut rng = crate::hash::seeded_rng(5, 0);
        for _ in 0..500 {
            let n = rng.random_range(1..40);
            let mut est: Vec<f64> = (0..n).map(|_| rng.random_range(1.0..100.0)).collect();
            est.sort_by(|a, b| b.total_cmp(a));
            let beta = rng.random_range(0.01..0.5);
            let keep = prune_mask(&est, beta);
            assert!(keep[0] && keep[n - 1], "oldest and newest always survive");
            let kept: Vec<f64> = est
                .iter()
                .zip(&keep)
                .filter(|(_, k)| **k)
                .map(|(e, _)| *e)
                .collect();
            for w in kept.windows(3) {
                assert!(w[2] < (1.0 - beta) * w[0], "{kept:?} beta {beta}");
            }
        }
    }

    #[test]
    fn single_insert_opens_one_bucket() {
        let mut h = distinct_hist(10, 0.1);
        h.push(7).unwrap();
        assert_eq!(h.len(), 1);
        assert_eq!(h.starts(), &[1]);
        assert_eq!(h.window_estimate().unwrap(), 1.0);
    }

    #[test]
    fn identical_elements_collapse_to_two_buckets() {
        let mut h = distinct_hist(100, 0.1);
        for _ in 0..5 {
            h.push(3).unwrap();
        }
        assert_eq!(h.starts(), &[1, 5]);
        assert_eq!(h.estimates(), &[1.0, 1.0]);
    }

    #[test]
    fn window_cover_after_saturation() {
        let n = 8;
        let mut h = distinct_hist(n, 0.3);
        for id in 1..=n + 1 {
            h.push(id).unwrap();
        }
        // window is [2, 9]
        assert_eq!(h.window_start(), 2);
        assert!(h.starts()[0] <= 2);
        if h.len() >= 2 {
            assert!(h.starts()[1] > 2);
        }
    }

    #[test]
    fn expiry_drops_stale_first_bucket() {
        // N = 3, buckets at 1 and 2 with current time 5: window starts at 3
        let mut h = distinct_hist(3, 0.5);
        h.starts = vec![1, 2];
        h.estimates = vec![2.0, 1.0];
        h.states = vec![2, 1];
        h.attached = vec![(), ()];
        h.clock = Clock::default();
        for ts in 1..=5 {
            h.clock.advance(ts).unwrap();
        }
        h.expire();
        assert_eq!(h.starts(), &[2]);
    }

    #[test]
    fn no_expiry_before_window_fills() {
        let mut h = distinct_hist(50, 0.01);
        for id in 1..=20 {
            h.push(id).unwrap();
            assert_eq!(h.starts()[0], 1);
        }
    }

    #[test]
    fn single_bucket_never_dropped() {
        let mut h = distinct_hist(2, 0.5);
        h.push(1).unwrap();
        h.expire();
        assert_eq!(h.len(), 1);
    }

    #[test]
    fn rejects_bad_input_without_mutation() {
        let mut h = SmoothHistogram::new(
            4,
            SmoothSpec::distinct(0.1).unwrap(),
            Universe::new(10).unwrap(),
            ExactDistinct::default(),
        )
        .unwrap();
        assert!(matches!(h.push(11), Err(Error::Domain { .. })));
        assert!(h.is_empty());
        h.push(1).unwrap();
        assert!(matches!(
            h.insert(StreamElement::new(2, 5)),
            Err(Error::Ordering {
                expected: 2,
                got: 5
            })
        ));
        assert_eq!(h.len(), 1);
        assert!(matches!(
            distinct_hist(3, 0.1).window_estimate(),
            Err(Error::NoData(_))
        ));
    }

    #[test]
    fn oracle_window_estimate_brackets_window_value() {
        use crate::oracle::ExactWindow;
        use rand::Rng;
        let mut rng = crate::hash::seeded_rng(11, 0);
        let n = 100;
        let alpha = 0.2;
        let mut h = SmoothHistogram::new(
            n,
            SmoothSpec::l2(alpha).unwrap(),
            Universe::new(50).unwrap(),
            ExactL2::default(),
        )
        .unwrap();
        let mut w = ExactWindow::new(n).unwrap();
        for _ in 0..1_000 {
            let id = rng.random_range(1..=50);
            let e = h.push(id).unwrap();
            w.push(e);
            let est = h.window_estimate().unwrap();
            let exact = w.l2();
            assert!(est >= exact - 1e-9);
            assert!(est <= exact / (1.0 - alpha) + 1e-9);
        }
    }
}
