//! Encoders and decoders for a single sample.
//!
//! | variant | search                               | payload                         |
//! |---------|--------------------------------------|---------------------------------|
//! | AS*     | A* coding, split at the node sample  | heap index                      |
//! | AD*     | A* coding, dyadic split              | heap index                      |
//! | DAD*    | depth-limited AD*, two root arrivals | codeword in `[0, 2^budget)`     |
//! | PFR     | exponential race (global bound)      | arrival index `K >= 1`          |
//! | MRC     | importance-weighted categorical      | codeword in `[0, 2^budget)`     |

mod astar;
mod mrc;
mod pfr;

pub use astar::{dad_limit, decode_astar, decode_dad, encode_astar, encode_dad};
pub use mrc::{decode_mrc, encode_mrc};
pub use pfr::{decode_pfr, encode_pfr};

use serde::{Deserialize, Serialize};

use crate::bitstream::{delta_len, gamma_len};
use crate::distributions::{Distribution1D, PairSpec};
use crate::error::{Error, Result};
use crate::tree::{depth_of, PartitionKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    AsStar,
    AdStar,
    Dad,
    Pfr,
    Mrc,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::AsStar => "as*",
            Variant::AdStar => "ad*",
            Variant::Dad => "dad*",
            Variant::Pfr => "pfr",
            Variant::Mrc => "mrc",
        }
    }

    /// The partition the variant searches with, if it is a tree search.
    pub fn partition(self) -> Option<PartitionKind> {
        match self {
            Variant::AsStar => Some(PartitionKind::SampleSplit),
            Variant::AdStar | Variant::Dad => Some(PartitionKind::Dyadic),
            Variant::Pfr => Some(PartitionKind::GlobalBound),
            Variant::Mrc => None,
        }
    }

    pub fn for_partition(kind: PartitionKind) -> Self {
        match kind {
            PartitionKind::SampleSplit => Variant::AsStar,
            PartitionKind::Dyadic => Variant::AdStar,
            PartitionKind::GlobalBound => Variant::Pfr,
        }
    }

    /// True for the variants whose codelength is fixed in advance.
    pub fn is_fixed_length(self) -> bool {
        matches!(self, Variant::Dad | Variant::Mrc)
    }
}

/// An encoded sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Code {
    pub variant: Variant,
    /// Tree depth for AS*/AD*, the bit budget for DAD*/MRC, `K`'s bit length for PFR.
    pub depth_or_budget: u32,
    pub payload: u64,
}

impl Code {
    pub fn exact(variant: Variant, heap_index: u64) -> Self {
        Self {
            variant,
            depth_or_budget: depth_of(heap_index),
            payload: heap_index,
        }
    }

    pub fn pfr(index: u64) -> Self {
        Self {
            variant: Variant::Pfr,
            depth_or_budget: depth_of(index),
            payload: index,
        }
    }

    pub fn fixed(variant: Variant, budget: u32, codeword: u64) -> Self {
        Self {
            variant,
            depth_or_budget: budget,
            payload: codeword,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.variant {
            Variant::AsStar | Variant::AdStar => {
                self.payload >= 1 && depth_of(self.payload) == self.depth_or_budget
            }
            Variant::Pfr => self.payload >= 1,
            Variant::Dad | Variant::Mrc => {
                self.depth_or_budget <= 63 && self.payload < (1u64 << self.depth_or_budget)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidCode(format!("{self:?}")))
        }
    }

    /// Bits a decoder needs beyond the shared randomness, excluding any header.
    pub fn payload_bits(&self) -> u32 {
        self.depth_or_budget
    }

    /// Per-symbol length-signalling bits in the per-symbol wire modes.
    pub fn overhead_bits(&self) -> u32 {
        match self.variant {
            Variant::AsStar | Variant::AdStar => gamma_len(self.depth_or_budget as u64) - 1,
            Variant::Pfr => delta_len(self.payload) - self.depth_or_budget,
            Variant::Dad | Variant::Mrc => 0,
        }
    }
}

/// Per-run measurements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialStats {
    /// Priority-queue pops (or proposal draws for MRC).
    pub steps: u64,
    pub returned_depth: u32,
    pub payload_bits: u32,
    pub overhead_bits: u32,
    /// Final value of the incumbent's objective `G + log r(X)`.
    pub lower_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Encoded {
    pub code: Code,
    pub sample: f64,
    pub stats: TrialStats,
}

/// Coder selection with its tuning parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "coder", rename_all = "snake_case")]
pub enum CoderSpec {
    AsStar,
    AdStar,
    Dad { budget: u32 },
    Pfr { max_steps: u64 },
    Mrc { budget: u32 },
}

pub const DEFAULT_PFR_MAX_STEPS: u64 = 50_000_000;

impl CoderSpec {
    pub fn variant(&self) -> Variant {
        match self {
            CoderSpec::AsStar => Variant::AsStar,
            CoderSpec::AdStar => Variant::AdStar,
            CoderSpec::Dad { .. } => Variant::Dad,
            CoderSpec::Pfr { .. } => Variant::Pfr,
            CoderSpec::Mrc { .. } => Variant::Mrc,
        }
    }

    pub fn encode(&self, pair: &PairSpec, seed: u64) -> Result<Encoded> {
        match *self {
            CoderSpec::AsStar => encode_astar(pair, PartitionKind::SampleSplit, seed, None),
            CoderSpec::AdStar => encode_astar(pair, PartitionKind::Dyadic, seed, None),
            CoderSpec::Dad { budget } => encode_dad(pair, seed, budget),
            CoderSpec::Pfr { max_steps } => encode_pfr(pair, seed, max_steps),
            CoderSpec::Mrc { budget } => encode_mrc(pair, seed, budget),
        }
    }
}

/// Decodes any code given the proposal and the shared seed.
pub fn decode(proposal: &Distribution1D, code: &Code, seed: u64) -> Result<f64> {
    match code.variant {
        Variant::AsStar => decode_astar(proposal, PartitionKind::SampleSplit, code, seed),
        Variant::AdStar => decode_astar(proposal, PartitionKind::Dyadic, code, seed),
        Variant::Dad => decode_dad(proposal, code, seed),
        Variant::Pfr => decode_pfr(proposal, code, seed),
        Variant::Mrc => decode_mrc(proposal, code, seed),
    }
}
