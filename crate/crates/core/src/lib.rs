//! Sample-communication coders built on A* search over Gumbel processes.
//!
//! A sender holding a target `Q` and a receiver holding a proposal `P` share a
//! seed. The sender encodes an exact (or near-exact) sample of `Q` as a short
//! integer code the receiver can turn back into the same sample.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod bitstream;
pub mod cli;
pub mod coders;
pub mod distributions;
pub mod error;
pub mod isokl;
pub mod randomness;
pub mod tree;

pub use coders::{decode, Code, CoderSpec, Encoded, TrialStats, Variant};
pub use distributions::{Distribution1D, PairSpec, Region};
pub use error::{Error, Result};
pub use tree::PartitionKind;
