//! Random-sign linear sketch of the L2 frequency norm.
//!
//! The `g · r` counters are split into `g` groups of width `r`. Each id lands
//! in one counter per group with a 4-wise independent sign, so a group's sum
//! of squared counters is an unbiased estimate of `F2 = Σ n_i²` with the
//! variance of a mean over `r` tug-of-war counters. The estimate is the
//! square root of the median over groups, held at its running maximum so it
//! never decreases as the stream grows.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_unit, Error, Result};
use crate::hash::{MultiplyShift, PolyHash};
use crate::history::CellHistory;
use crate::smooth_histogram::SuffixEstimator;
use crate::stream::{StreamElement, Timestamp, Universe};

const TRIM_PERIOD: u64 = 1024;

/// Accuracy target of an L2 sketch and the table shape derived from it:
/// `g = ⌈8 ln(1/δ)⌉` groups of `r = ⌈8/ε²⌉` counters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct L2Params {
    pub eps: f64,
    pub delta: f64,
    pub groups: usize,
    pub width: usize,
}

impl L2Params {
    pub fn new(eps: f64, delta: f64) -> Result<Self> {
        check_unit("eps", eps)?;
        check_unit("delta", delta)?;
        Ok(L2Params {
            eps,
            delta,
            groups: (8.0 * (1.0 / delta).ln()).ceil() as usize,
            width: (8.0 / (eps * eps)).ceil() as usize,
        })
    }

    pub fn counters(&self) -> usize {
        self.groups * self.width
    }
}

/// Column and sign functions, one pair per group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L2Hashes {
    width: usize,
    columns: Vec<MultiplyShift>,
    signs: Vec<PolyHash>,
}

impl L2Hashes {
    pub fn random<R: Rng + ?Sized>(params: &L2Params, rng: &mut R) -> Self {
        L2Hashes {
            width: params.width,
            columns: (0..params.groups)
                .map(|_| MultiplyShift::random(rng))
                .collect(),
            signs: (0..params.groups)
                .map(|_| PolyHash::random(3, rng))
                .collect(),
        }
    }

    pub fn groups(&self) -> usize {
        self.columns.len()
    }

    /// Flat counter index and sign of `id` in `group`.
    #[inline]
    pub fn cell(&self, group: usize, id: u64) -> (usize, i64) {
        let col = self.columns[group].bucket(id, self.width as u64) as usize;
        (group * self.width + col, self.signs[group].sign(id) as i64)
    }
}

/// Square root of the median group sum, clamped at zero.
fn median_sqrt(sums: &[i64], scratch: &mut Vec<i64>) -> f64 {
    scratch.clear();
    scratch.extend_from_slice(sums);
    let n = scratch.len();
    if n == 0 {
        return 0.0;
    }
    let (lower, &mut upper, _) = scratch.select_nth_unstable(n / 2);
    let m = if n % 2 == 1 {
        upper as f64
    } else {
        let below = *lower.iter().max().expect("even length >= 2");
        (below as f64 + upper as f64) / 2.0
    };
    m.max(0.0).sqrt()
}

#[derive(Debug, Clone, Copy)]
struct Touched {
    idx: usize,
    sign: i64,
    current: i64,
    cursor: usize,
}

/// A standalone L2 sketch of one stream.
#[derive(Debug, Clone)]
pub struct L2Sketch {
    params: L2Params,
    universe: Universe,
    hashes: Arc<L2Hashes>,
    counters: Vec<i64>,
    sums: Vec<i64>,
    max: f64,
}

impl L2Sketch {
    pub fn new<R: Rng + ?Sized>(params: L2Params, universe: Universe, rng: &mut R) -> Self {
        let hashes = Arc::new(L2Hashes::random(&params, rng));
        Self::with_hashes(params, universe, hashes)
    }

    /// A sketch sharing hash functions with others, so they can be merged.
    pub fn with_hashes(params: L2Params, universe: Universe, hashes: Arc<L2Hashes>) -> Self {
        L2Sketch {
            params,
            universe,
            counters: vec![0; params.counters()],
            sums: vec![0; params.groups],
            hashes,
            max: 0.0,
        }
    }

    pub fn params(&self) -> &L2Params {
        &self.params
    }

    pub fn hashes(&self) -> &Arc<L2Hashes> {
        &self.hashes
    }

    pub fn counters(&self) -> &[i64] {
        &self.counters
    }

    pub fn update(&mut self, id: u64) -> Result<()> {
        self.universe.check(id)?;
        for g in 0..self.params.groups {
            let (idx, s) = self.hashes.cell(g, id);
            let c = &mut self.counters[idx];
            self.sums[g] += 2 * *c * s + 1;
            *c += s;
        }
        self.max = self.max.max(self.raw_estimate());
        Ok(())
    }

    /// Median-based estimate without the running maximum.
    pub fn raw_estimate(&self) -> f64 {
        median_sqrt(&self.sums, &mut Vec::with_capacity(self.sums.len()))
    }

    pub fn estimate(&self) -> f64 {
        self.max
    }

    /// Adds the counters of a sketch built with the same hash functions; the
    /// result sketches the concatenation of both streams.
    pub fn merge(&mut self, other: &L2Sketch) -> Result<()> {
        if !Arc::ptr_eq(&self.hashes, &other.hashes) && self.hashes != other.hashes {
            return Err(Error::invalid(
                "other",
                "sketches use different hash functions",
            ));
        }
        for (a, b) in self.counters.iter_mut().zip(&other.counters) {
            *a += b;
        }
        let width = self.params.width;
        for (g, sum) in self.sums.iter_mut().enumerate() {
            *sum = self.counters[g * width..(g + 1) * width]
                .iter()
                .map(|c| c * c)
                .sum();
        }
        self.max = self.max.max(other.max).max(self.raw_estimate());
        Ok(())
    }
}

/// Per-bucket state of [`L2SketchEstimator`]: squared norms of each group's
/// suffix counters and the running-maximum estimate.
#[derive(Debug, Clone)]
pub struct L2Suffix {
    sums: Vec<i64>,
    // groups ordered by sum; sums move little per step, so an insertion sort
    // restores the order in near-linear time
    order: Vec<u32>,
    best: i64,
    estimate: f64,
}

impl L2Suffix {
    fn new(groups: usize) -> Self {
        L2Suffix {
            sums: vec![0; groups],
            order: (0..groups as u32).collect(),
            best: 0,
            estimate: 0.0,
        }
    }

    /// Group sums, indexed by group.
    pub fn sums(&self) -> Vec<i64> {
        self.sums.clone()
    }

    #[inline]
    fn add(&mut self, increments: &[i64], uniform: bool) {
        let sums = &mut self.sums;
        for (s, &inc) in sums.iter_mut().zip(increments) {
            *s += inc;
        }
        let order = &mut self.order;
        if !uniform
            && !order
                .windows(2)
                .all(|w| sums[w[0] as usize] <= sums[w[1] as usize])
        {
            for i in 1..order.len() {
                let item = order[i];
                let key = sums[item as usize];
                let mut j = i;
                while j > 0 && sums[order[j - 1] as usize] > key {
                    order[j] = order[j - 1];
                    j -= 1;
                }
                order[j] = item;
            }
        }
        // twice the median, to stay in integers for even group counts
        let n = order.len();
        let twice = if n % 2 == 1 {
            2 * sums[order[n / 2] as usize]
        } else {
            sums[order[n / 2 - 1] as usize] + sums[order[n / 2] as usize]
        };
        if twice > self.best {
            self.best = twice;
            self.estimate = (twice as f64 / 2.0).sqrt();
        }
    }
}

/// L2 sketches of every bucket of a histogram, sharing one hash family and
/// one time-versioned counter table. A bucket's counters are the current
/// counters minus their values just before the bucket started, which is what
/// a separate sketch fed from that start would hold.
#[derive(Debug, Clone)]
pub struct L2SketchEstimator {
    params: L2Params,
    hashes: L2Hashes,
    cells: Vec<CellHistory>,
    touched: Vec<Touched>,
    increments: Vec<i64>,
    oldest: Timestamp,
    since_trim: u64,
}

impl L2SketchEstimator {
    pub fn new<R: Rng + ?Sized>(params: L2Params, rng: &mut R) -> Self {
        L2SketchEstimator {
            hashes: L2Hashes::random(&params, rng),
            cells: vec![CellHistory::default(); params.counters()],
            params,
            touched: Vec::new(),
            increments: Vec::new(),
            oldest: 0,
            since_trim: 0,
        }
    }

    pub fn params(&self) -> &L2Params {
        &self.params
    }

    pub fn hashes(&self) -> &L2Hashes {
        &self.hashes
    }

    /// Stored history entries across the table.
    pub fn stored_entries(&self) -> usize {
        self.cells.iter().map(CellHistory::len).sum()
    }
}

impl SuffixEstimator for L2SketchEstimator {
    type State = L2Suffix;

    fn open(&mut self, _start: Timestamp) -> L2Suffix {
        L2Suffix::new(self.params.groups)
    }

    fn absorb(&mut self, element: StreamElement, starts: &[Timestamp], states: &mut [L2Suffix]) {
        let groups = self.params.groups;
        self.touched.clear();
        for g in 0..groups {
            let (idx, s) = self.hashes.cell(g, element.id);
            let cell = &self.cells[idx];
            self.touched.push(Touched {
                idx,
                sign: s,
                current: cell.current(),
                cursor: cell.len(),
            });
        }
        // A group's increment 2·d·s + 1 only changes where a start crosses
        // an entry of its cell; equal increments leave the order intact.
        let cells = &self.cells;
        let touched = &mut self.touched;
        let increments = &mut self.increments;
        increments.resize(groups, 0);
        let mut threshold = Timestamp::MAX;
        let mut uniform = true;
        for (start, state) in starts.iter().zip(states.iter_mut()).rev() {
            if *start <= threshold {
                threshold = 0;
                for (t, inc) in touched.iter_mut().zip(increments.iter_mut()) {
                    let cell = &cells[t.idx];
                    let d = t.current - cell.before(&mut t.cursor, *start).0;
                    *inc = 2 * d * t.sign + 1;
                    threshold = threshold.max(cell.next_break(t.cursor));
                }
                uniform = increments.iter().all(|&v| v == increments[0]);
            }
            state.add(increments, uniform);
        }
        for t in &self.touched {
            self.cells[t.idx].record(element.ts, t.sign);
        }
        self.since_trim += 1;
        if self.since_trim >= TRIM_PERIOD {
            self.since_trim = 0;
            let oldest = self.oldest;
            for cell in &mut self.cells {
                cell.trim(oldest);
            }
        }
    }

    fn estimate(&self, state: &L2Suffix) -> f64 {
        state.estimate
    }

    fn retire(&mut self, oldest_start: Timestamp) {
        self.oldest = oldest_start;
    }

    fn counters(&self, _state: &L2Suffix) -> usize {
        self.params.counters()
    }
}
