//! Distinct-element counting by level sampling.
//!
//! Each copy keeps the ids whose hash lies below `2^(64-z)`, raising the
//! level `z` whenever more than `cap = ⌈32/ε²⌉` ids qualify. A copy estimates
//! `|sample| · 2^z`; the sketch reports the median over `⌈6 ln(1/δ)⌉` copies,
//! held at its running maximum.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_unit, Result};
use crate::hash::MultiplyShift;
use crate::smooth_histogram::SuffixEstimator;
use crate::stats::median;
use crate::stream::{StreamElement, Timestamp, Universe};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistinctParams {
    pub eps: f64,
    pub delta: f64,
    pub cap: usize,
    pub copies: usize,
}

impl DistinctParams {
    pub fn new(eps: f64, delta: f64) -> Result<Self> {
        check_unit("eps", eps)?;
        check_unit("delta", delta)?;
        Ok(DistinctParams {
            eps,
            delta,
            cap: (32.0 / (eps * eps)).ceil() as usize,
            copies: (6.0 * (1.0 / delta).ln()).ceil() as usize,
        })
    }

    pub fn counters(&self) -> usize {
        self.cap * self.copies
    }
}

#[inline]
fn below(hash: u64, level: u32) -> bool {
    level == 0 || hash >> (64 - level) == 0
}

/// One copy: sampled ids with their hashes.
#[derive(Debug, Clone, Default, PartialEq)]
struct Sample {
    level: u32,
    items: HashMap<u64, u64>,
}

impl Sample {
    fn insert(&mut self, id: u64, hash: u64, cap: usize) {
        if !below(hash, self.level) {
            return;
        }
        self.items.insert(id, hash);
        while self.items.len() > cap && self.level < 63 {
            self.level += 1;
            let level = self.level;
            self.items.retain(|_, h| below(*h, level));
        }
    }

    fn estimate(&self) -> f64 {
        self.items.len() as f64 * (self.level as f64).exp2()
    }
}

fn median_estimate(samples: &[Sample]) -> f64 {
    let mut v: Vec<f64> = samples.iter().map(Sample::estimate).collect();
    median(&mut v)
}

/// Per-copy hash functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistinctHashes {
    copies: Vec<MultiplyShift>,
}

impl DistinctHashes {
    pub fn random<R: Rng + ?Sized>(params: &DistinctParams, rng: &mut R) -> Self {
        DistinctHashes {
            copies: (0..params.copies)
                .map(|_| MultiplyShift::random(rng))
                .collect(),
        }
    }
}

/// Sampled ids of every copy plus the running-maximum estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct DistinctState {
    samples: Vec<Sample>,
    max: f64,
}

impl DistinctState {
    fn new(copies: usize) -> Self {
        DistinctState {
            samples: vec![Sample::default(); copies],
            max: 0.0,
        }
    }

    fn insert(&mut self, id: u64, hashes: &[u64], cap: usize) {
        for (sample, &h) in self.samples.iter_mut().zip(hashes) {
            sample.insert(id, h, cap);
        }
        self.max = self.max.max(median_estimate(&self.samples));
    }

    /// Levels of every copy.
    pub fn levels(&self) -> Vec<u32> {
        self.samples.iter().map(|s| s.level).collect()
    }

    pub fn raw_estimate(&self) -> f64 {
        median_estimate(&self.samples)
    }

    pub fn estimate(&self) -> f64 {
        self.max
    }
}

/// A standalone distinct-count sketch.
#[derive(Debug, Clone)]
pub struct DistinctSketch {
    params: DistinctParams,
    universe: Universe,
    hashes: DistinctHashes,
    state: DistinctState,
    scratch: Vec<u64>,
}

impl DistinctSketch {
    pub fn new<R: Rng + ?Sized>(params: DistinctParams, universe: Universe, rng: &mut R) -> Self {
        DistinctSketch {
            hashes: DistinctHashes::random(&params, rng),
            state: DistinctState::new(params.copies),
            params,
            universe,
            scratch: Vec::new(),
        }
    }

    pub fn params(&self) -> &DistinctParams {
        &self.params
    }

    pub fn state(&self) -> &DistinctState {
        &self.state
    }

    pub fn update(&mut self, id: u64) -> Result<()> {
        self.universe.check(id)?;
        self.scratch.clear();
        self.scratch
            .extend(self.hashes.copies.iter().map(|h| h.hash(id)));
        self.state.insert(id, &self.scratch, self.params.cap);
        Ok(())
    }

    pub fn estimate(&self) -> f64 {
        self.state.estimate()
    }
}

/// Distinct-count sketches for every bucket of a histogram. Hash functions
/// are shared, so an arriving id is hashed once for all buckets.
#[derive(Debug, Clone)]
pub struct DistinctSketchEstimator {
    params: DistinctParams,
    hashes: DistinctHashes,
    scratch: Vec<u64>,
}

impl DistinctSketchEstimator {
    pub fn new<R: Rng + ?Sized>(params: DistinctParams, rng: &mut R) -> Self {
        DistinctSketchEstimator {
            hashes: DistinctHashes::random(&params, rng),
            params,
            scratch: Vec::new(),
        }
    }

    pub fn params(&self) -> &DistinctParams {
        &self.params
    }
}

impl SuffixEstimator for DistinctSketchEstimator {
    type State = DistinctState;

    fn open(&mut self, _start: Timestamp) -> DistinctState {
        DistinctState::new(self.params.copies)
    }

    fn absorb(
        &mut self,
        element: StreamElement,
        _starts: &[Timestamp],
        states: &mut [DistinctState],
    ) {
        self.scratch.clear();
        self.scratch
            .extend(self.hashes.copies.iter().map(|h| h.hash(element.id)));
        for state in states {
            state.insert(element.id, &self.scratch, self.params.cap);
        }
    }

    fn estimate(&self, state: &DistinctState) -> f64 {
        state.estimate()
    }

    fn counters(&self, _state: &DistinctState) -> usize {
        self.params.counters()
    }
}
