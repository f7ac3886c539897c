pub mod countsketch;
pub mod distinct_sketch;
pub mod error;
pub mod freq_elements;
pub mod hash;
mod history;
pub mod l2_sketch;
pub mod minhash;
pub mod oracle;
pub mod rarity;
pub mod similarity;
pub mod smooth_histogram;
pub mod stats;
pub mod stream;
pub mod stream_io;

pub use error::{Error, Result};
pub use stream::{StreamElement, Timestamp, Universe};
