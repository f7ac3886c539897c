//! Stream elements, logical timestamps and the element universe.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Logical arrival time: the 1-based position of an element in its stream.
pub type Timestamp = u64;

/// One stream arrival.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamElement {
    pub id: u64,
    pub ts: Timestamp,
}

impl StreamElement {
    pub fn new(id: u64, ts: Timestamp) -> Self {
        StreamElement { id, ts }
    }
}

/// The id domain `[1, size]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Universe(u64);

impl Universe {
    pub fn new(size: u64) -> Result<Self> {
        if size == 0 {
            return Err(Error::invalid("universe", "must be positive"));
        }
        Ok(Universe(size))
    }

    pub fn size(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn check(self, id: u64) -> Result<()> {
        if id >= 1 && id <= self.0 {
            Ok(())
        } else {
            Err(Error::Domain {
                id,
                universe: self.0,
            })
        }
    }
}

/// Tracks the next expected timestamp of a single stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Clock {
    now: Timestamp,
}

impl Clock {
    /// Timestamp of the last accepted element (0 before the first one).
    pub fn now(self) -> Timestamp {
        self.now
    }

    pub fn next(self) -> Timestamp {
        self.now + 1
    }

    /// Accepts `ts` iff it is exactly one past the current time.
    pub fn advance(&mut self, ts: Timestamp) -> Result<()> {
        if ts != self.now + 1 {
            return Err(Error::Ordering {
                expected: self.now + 1,
                got: ts,
            });
        }
        self.now = ts;
        Ok(())
    }
}

/// Wraps a sequence of ids into timestamped elements starting at 1.
pub fn timestamped(ids: &[u64]) -> impl Iterator<Item = StreamElement> + '_ {
    ids.iter()
        .enumerate()
        .map(|(i, &id)| StreamElement::new(id, i as Timestamp + 1))
}
