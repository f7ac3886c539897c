//! CountSketch with a bounded candidate set, sized for L2 heavy hitters:
//! `k = ⌈1/γ²⌉ + 1` candidates and width `b = ⌈256/(γ²ε′²)⌉`, so every
//! frequency estimate is within `8·L2/√b = γε′L2/2` of the truth.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_unit, Error, Result};
use crate::hash::{KeyMap, MultiplyShift};
use crate::history::CellHistory;
use crate::smooth_histogram::BucketAttachment;
use crate::stats::median;
use crate::stream::{StreamElement, Timestamp, Universe};

/// `c` in the row count `t = ⌈c · ln(n_max/δ)⌉`.
pub const ROW_CONSTANT: f64 = 4.0;

const TRIM_PERIOD: u64 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountSketchParams {
    pub gamma: f64,
    pub eps_prime: f64,
    pub delta: f64,
    /// Cap on the length of any sketched stream.
    pub n_max: u64,
    pub k: usize,
    pub b: u64,
    pub t: usize,
}

impl CountSketchParams {
    pub fn new(gamma: f64, eps_prime: f64, delta: f64, n_max: u64) -> Result<Self> {
        check_unit("gamma", gamma)?;
        check_unit("eps_prime", eps_prime)?;
        check_unit("delta", delta)?;
        if n_max == 0 {
            return Err(Error::invalid("n_max", "must be positive"));
        }
        let g2 = gamma * gamma;
        Ok(CountSketchParams {
            gamma,
            eps_prime,
            delta,
            n_max,
            k: (1.0 / g2).ceil() as usize + 1,
            b: (256.0 / (g2 * eps_prime * eps_prime)).ceil() as u64,
            t: (ROW_CONSTANT * (n_max as f64 / delta).ln()).ceil().max(1.0) as usize,
        })
    }

    /// The per-estimate error bound `8·L2/√b` for a stream with norm `l2`.
    pub fn error_bound(&self, l2: f64) -> f64 {
        8.0 * l2 / (self.b as f64).sqrt()
    }

    /// Model memory of one sketch: the `t × b` table plus the candidates.
    pub fn counters(&self) -> usize {
        self.t * self.b as usize + self.k
    }
}

/// Pairwise independent column and sign functions, one pair per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountSketchHashes {
    b: u64,
    columns: Vec<MultiplyShift>,
    signs: Vec<MultiplyShift>,
}

impl CountSketchHashes {
    pub fn random<R: Rng + ?Sized>(params: &CountSketchParams, rng: &mut R) -> Self {
        CountSketchHashes {
            b: params.b,
            columns: (0..params.t).map(|_| MultiplyShift::random(rng)).collect(),
            signs: (0..params.t).map(|_| MultiplyShift::random(rng)).collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.columns.len()
    }

    #[inline]
    pub fn cell(&self, row: usize, id: u64) -> (u64, i64) {
        (
            self.columns[row].bucket(id, self.b),
            self.signs[row].sign(id) as i64,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: u64,
    pub estimate: f64,
}

/// At most `k` ids with the estimate they had when last seen. A newcomer
/// competes with the weakest entry; the loser on lower estimate, then on
/// larger id, is the one left out.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidates {
    k: usize,
    ids: Vec<u64>,
    estimates: Vec<f64>,
    weakest: usize,
    // one bit per id under a multiplicative hash; a clear bit means absent
    present: u128,
}

#[inline]
fn bit(id: u64) -> u128 {
    1u128 << (id.wrapping_mul(0x9E37_79B9_7F4A_7C15) >> 57)
}

#[inline]
fn weaker(a: (f64, u64), b: (f64, u64)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 > b.1)
}

impl Candidates {
    pub fn new(k: usize) -> Self {
        assert!(k >= 1, "candidate set needs room for one id");
        Candidates {
            k,
            ids: Vec::with_capacity(k),
            estimates: Vec::with_capacity(k),
            weakest: 0,
            present: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn contains(&self, id: u64) -> bool {
        self.ids.contains(&id)
    }

    pub fn get(&self, id: u64) -> Option<f64> {
        let p = self.ids.iter().position(|&x| x == id)?;
        Some(self.estimates[p])
    }

    pub fn iter(&self) -> impl Iterator<Item = Candidate> + '_ {
        self.ids
            .iter()
            .zip(&self.estimates)
            .map(|(&id, &estimate)| Candidate { id, estimate })
    }

    #[inline]
    fn entry(&self, p: usize) -> (f64, u64) {
        (self.estimates[p], self.ids[p])
    }

    fn find_weakest(&mut self) {
        let mut w = 0;
        for p in 1..self.ids.len() {
            if weaker(self.entry(p), self.entry(w)) {
                w = p;
            }
        }
        self.weakest = w;
    }

    pub fn offer(&mut self, id: u64, estimate: f64) {
        let known = self.present & bit(id) != 0;
        if let Some(p) = known
            .then(|| self.ids.iter().position(|&x| x == id))
            .flatten()
        {
            self.estimates[p] = estimate;
            if p == self.weakest {
                self.find_weakest();
            } else if weaker(self.entry(p), self.entry(self.weakest)) {
                self.weakest = p;
            }
            return;
        }
        if self.ids.len() < self.k {
            self.ids.push(id);
            self.estimates.push(estimate);
            self.present |= bit(id);
            let p = self.ids.len() - 1;
            if weaker(self.entry(p), self.entry(self.weakest)) {
                self.weakest = p;
            }
            return;
        }
        if weaker(self.entry(self.weakest), (estimate, id)) {
            self.ids[self.weakest] = id;
            self.estimates[self.weakest] = estimate;
            self.present = self.ids.iter().fold(0, |m, &x| m | bit(x));
            self.find_weakest();
        }
    }

    /// Entries by estimate descending, ties by id ascending.
    pub fn sorted(&self) -> Vec<Candidate> {
        let mut v: Vec<Candidate> = self.iter().collect();
        sort_candidates(&mut v);
        v
    }
}

pub fn sort_candidates(v: &mut [Candidate]) {
    v.sort_by(|a, b| b.estimate.total_cmp(&a.estimate).then(a.id.cmp(&b.id)));
}

/// A CountSketch over one stream. The table is stored sparsely since `b` is
/// usually far larger than the number of distinct ids.
#[derive(Debug, Clone)]
pub struct CountSketch {
    params: CountSketchParams,
    universe: Universe,
    hashes: Arc<CountSketchHashes>,
    rows: Vec<KeyMap<i64>>,
    candidates: Candidates,
    n: u64,
}

impl CountSketch {
    pub fn new<R: Rng + ?Sized>(
        params: CountSketchParams,
        universe: Universe,
        rng: &mut R,
    ) -> Self {
        let hashes = Arc::new(CountSketchHashes::random(&params, rng));
        Self::with_hashes(params, universe, hashes)
    }

    pub fn with_hashes(
        params: CountSketchParams,
        universe: Universe,
        hashes: Arc<CountSketchHashes>,
    ) -> Self {
        CountSketch {
            rows: vec![KeyMap::default(); params.t],
            candidates: Candidates::new(params.k),
            params,
            universe,
            hashes,
            n: 0,
        }
    }

    pub fn params(&self) -> &CountSketchParams {
        &self.params
    }

    pub fn hashes(&self) -> &Arc<CountSketchHashes> {
        &self.hashes
    }

    pub fn len(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn candidates(&self) -> &Candidates {
        &self.candidates
    }

    pub fn update(&mut self, id: u64) -> Result<()> {
        self.universe.check(id)?;
        for (row, table) in self.rows.iter_mut().enumerate() {
            let (col, s) = self.hashes.cell(row, id);
            *table.entry(col).or_insert(0) += s;
        }
        self.n += 1;
        let est = self.estimate(id);
        self.candidates.offer(id, est);
        Ok(())
    }

    /// Median over rows of the signed counter in `id`'s cell.
    pub fn estimate(&self, id: u64) -> f64 {
        let mut vals: Vec<f64> = self
            .rows
            .iter()
            .enumerate()
            .map(|(row, table)| {
                let (col, s) = self.hashes.cell(row, id);
                (s * table.get(&col).copied().unwrap_or(0)) as f64
            })
            .collect();
        median(&mut vals)
    }

    /// Candidates with estimates recomputed from the table, by estimate
    /// descending.
    pub fn topk(&self) -> Vec<Candidate> {
        let mut v: Vec<Candidate> = self
            .candidates
            .iter()
            .map(|c| Candidate {
                id: c.id,
                estimate: self.estimate(c.id),
            })
            .collect();
        sort_candidates(&mut v);
        v
    }

    /// Adds the table of a sketch with the same hash functions. Candidates
    /// are re-chosen from the union of both candidate sets using estimates in
    /// the merged table.
    pub fn merge(&mut self, other: &CountSketch) -> Result<()> {
        if !Arc::ptr_eq(&self.hashes, &other.hashes) && self.hashes != other.hashes {
            return Err(Error::invalid(
                "other",
                "sketches use different hash functions",
            ));
        }
        for (mine, theirs) in self.rows.iter_mut().zip(&other.rows) {
            for (&col, &v) in theirs {
                *mine.entry(col).or_insert(0) += v;
            }
        }
        self.n += other.n;
        let ids: Vec<u64> = self
            .candidates
            .iter()
            .chain(other.candidates.iter())
            .map(|c| c.id)
            .collect();
        self.rebuild_candidates(ids);
        Ok(())
    }

    /// Replaces the candidates by the best `k` of `ids` under fresh estimates.
    pub fn rebuild_candidates(&mut self, ids: impl IntoIterator<Item = u64>) {
        let mut fresh = Candidates::new(self.params.k);
        for id in ids {
            fresh.offer(id, self.estimate(id));
        }
        self.candidates = fresh;
    }

    /// Signed counter at `(row, col)`.
    pub fn counter(&self, row: usize, col: u64) -> i64 {
        self.rows[row].get(&col).copied().unwrap_or(0)
    }

    pub fn counters(&self) -> usize {
        self.params.counters()
    }
}

#[derive(Debug, Clone, Copy)]
struct Touched<'a> {
    cell: &'a CellHistory,
    sign: i64,
    current: i64,
    cursor: usize,
}

/// Median of `values` together with `repeats` copies of `value`, averaging
/// the two middle elements for an even total. Sorts `values`.
fn median_with_repeats(values: &mut [f64], value: f64, repeats: usize) -> f64 {
    values.sort_unstable_by(f64::total_cmp);
    let below = values.partition_point(|&v| v < value);
    let kth = |i: usize| {
        if i < below {
            values[i]
        } else if i < below + repeats {
            value
        } else {
            values[i - repeats]
        }
    };
    let n = values.len() + repeats;
    if n == 0 {
        0.0
    } else if n % 2 == 1 {
        kth(n / 2)
    } else {
        (kth(n / 2 - 1) + kth(n / 2)) / 2.0
    }
}

/// CountSketches for every bucket of a smooth histogram. All buckets share
/// one hash family and one time-versioned table; a bucket's sketch is the
/// difference between the current table and the table just before its start.
/// Each bucket owns its candidate set.
#[derive(Debug, Clone)]
pub struct CountSketchAttachment {
    params: CountSketchParams,
    hashes: CountSketchHashes,
    rows: Vec<KeyMap<CellHistory>>,
    oldest: Timestamp,
    since_trim: u64,
    scratch: Vec<f64>,
}

impl CountSketchAttachment {
    pub fn new<R: Rng + ?Sized>(params: CountSketchParams, rng: &mut R) -> Self {
        CountSketchAttachment {
            hashes: CountSketchHashes::random(&params, rng),
            rows: vec![KeyMap::default(); params.t],
            params,
            oldest: 0,
            since_trim: 0,
            scratch: Vec::new(),
        }
    }

    pub fn params(&self) -> &CountSketchParams {
        &self.params
    }

    pub fn hashes(&self) -> &CountSketchHashes {
        &self.hashes
    }

    /// Estimate of `id`'s frequency in the suffix starting at `start`.
    pub fn estimate_since(&self, id: u64, start: Timestamp) -> f64 {
        let mut vals: Vec<f64> = self
            .rows
            .iter()
            .enumerate()
            .map(|(row, table)| {
                let (col, s) = self.hashes.cell(row, id);
                table.get(&col).map_or(0.0, |cell| {
                    (s * (cell.current() - cell.value_before(start))) as f64
                })
            })
            .collect();
        median(&mut vals)
    }

    /// Candidates of a bucket with estimates recomputed at query time.
    pub fn topk(&self, start: Timestamp, candidates: &Candidates) -> Vec<Candidate> {
        let mut v: Vec<Candidate> = candidates
            .iter()
            .map(|c| Candidate {
                id: c.id,
                estimate: self.estimate_since(c.id, start),
            })
            .collect();
        sort_candidates(&mut v);
        v
    }

    /// Stored history entries across all rows.
    pub fn stored_entries(&self) -> usize {
        self.rows
            .iter()
            .flat_map(|r| r.values())
            .map(CellHistory::len)
            .sum()
    }
}

impl BucketAttachment for CountSketchAttachment {
    type State = Candidates;

    fn open(&mut self, _start: Timestamp) -> Candidates {
        Candidates::new(self.params.k)
    }

    fn absorb(&mut self, element: StreamElement, starts: &[Timestamp], states: &mut [Candidates]) {
        let id = element.id;
        // A cell only ever touched by `id` holds its exact count, so all such
        // rows agree and one of them stands for the rest. Cells shared with
        // other ids are tracked individually.
        let mut clean = 0;
        let mut representative = None;
        let mut shared = Vec::new();
        for (row, table) in self.rows.iter_mut().enumerate() {
            let (col, sign) = self.hashes.cell(row, id);
            let cell = table.entry(col).or_default();
            cell.record_for(id, element.ts, sign);
            let cell: &CellHistory = cell;
            let t = Touched {
                cell,
                sign,
                current: cell.current(),
                cursor: cell.len(),
            };
            if cell.owned_by(id) {
                clean += 1;
                representative.get_or_insert(t);
            } else {
                shared.push(t);
            }
        }

        let mut threshold = Timestamp::MAX;
        let mut estimate = 0.0;
        for (start, candidates) in starts.iter().zip(states.iter_mut()).rev() {
            if *start <= threshold {
                threshold = 0;
                let mut step = |t: &mut Touched| {
                    let (before, _) = t.cell.before(&mut t.cursor, *start);
                    threshold = threshold.max(t.cell.next_break(t.cursor));
                    t.sign * (t.current - before)
                };
                let count = representative.as_mut().map_or(0, &mut step);
                self.scratch.clear();
                for t in shared.iter_mut() {
                    self.scratch.push(step(t) as f64);
                }
                estimate = median_with_repeats(&mut self.scratch, count as f64, clean);
            }
            candidates.offer(id, estimate);
        }

        self.since_trim += 1;
        if self.since_trim >= TRIM_PERIOD {
            self.since_trim = 0;
            let oldest = self.oldest;
            for table in &mut self.rows {
                table.retain(|_, cell| !cell.trim(oldest));
            }
        }
    }

    fn retire(&mut self, oldest_start: Timestamp) {
        self.oldest = oldest_start;
    }

    fn counters(&self, _state: &Candidates) -> usize {
        self.params.counters()
    }
}
