//! Time-versioned counters. A linear sketch over a suffix starting at `s` is
//! the current table minus the table as it stood just before `s`, so one
//! shared table with per-cell histories serves every bucket of a histogram.

use crate::stream::Timestamp;

/// Cumulative values of one counter, one entry per update.
#[derive(Debug, Clone, Default)]
pub(crate) struct CellHistory {
    entries: Vec<(Timestamp, i64)>,
    owner: u64,
}

/// Owner marker of a cell updated by more than one id.
const SHARED: u64 = u64::MAX;

impl CellHistory {
    /// Like [`record`](Self::record), also remembering whether every update
    /// since the cell was last emptied came from the same id.
    #[inline]
    pub fn record_for(&mut self, id: u64, ts: Timestamp, delta: i64) -> i64 {
        if self.entries.is_empty() {
            self.owner = id;
        } else if self.owner != id {
            self.owner = SHARED;
        }
        self.record(ts, delta)
    }

    /// True when every stored update came from `id`.
    #[inline]
    pub fn owned_by(&self, id: u64) -> bool {
        self.owner == id
    }

    #[inline]
    pub fn current(&self) -> i64 {
        self.entries.last().map_or(0, |e| e.1)
    }

    #[inline]
    pub fn record(&mut self, ts: Timestamp, delta: i64) -> i64 {
        let value = self.current() + delta;
        self.entries.push((ts, value));
        value
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Value just before `start`. `cursor` is an index into the history that
    /// only moves backwards, so walking starts in decreasing order costs
    /// amortized O(1) per step. Returns whether the cursor moved.
    #[inline]
    pub fn before(&self, cursor: &mut usize, start: Timestamp) -> (i64, bool) {
        let mut moved = false;
        while *cursor > 0 && self.entries[*cursor - 1].0 >= start {
            *cursor -= 1;
            moved = true;
        }
        let value = if *cursor == 0 {
            0
        } else {
            self.entries[*cursor - 1].1
        };
        (value, moved)
    }

    /// Timestamp of the entry the cursor would step over next: a start at or
    /// below it moves the cursor.
    #[inline]
    pub fn next_break(&self, cursor: usize) -> Timestamp {
        if cursor == 0 {
            0
        } else {
            self.entries[cursor - 1].0
        }
    }

    /// Value just before `start`, by binary search.
    pub fn value_before(&self, start: Timestamp) -> i64 {
        let p = self.entries.partition_point(|e| e.0 < start);
        if p == 0 {
            0
        } else {
            self.entries[p - 1].1
        }
    }

    /// Forgets entries that no suffix starting at or after `oldest` can see,
    /// keeping the last entry before `oldest` as the base. Returns true when
    /// the cell is indistinguishable from an untouched one.
    pub fn trim(&mut self, oldest: Timestamp) -> bool {
        let stale = self.entries.partition_point(|e| e.0 < oldest);
        if stale == self.entries.len() {
            self.entries.clear();
            return true;
        }
        if stale > 1 {
            self.entries.drain(..stale - 1);
        }
        false
    }
}
