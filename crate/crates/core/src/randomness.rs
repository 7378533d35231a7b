//! Shared randomness: counter-based uniforms addressed by node, plus the Gumbel
//! transforms used by the search.
//!
//! Every uniform the encoder consumes is a pure function of a [`StreamKey`], so the
//! decoder can regenerate the draws of any single node without replaying the
//! encoder's search order.
//!
//! The key hash is part of the wire format:
//!
//! ```text
//! mix(z)  = splitmix64 finalizer:
//!           z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//!           z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//!           z ^ (z >> 31)
//! h0      = mix(seed + 0x9E3779B97F4A7C15)
//! h1      = mix((h0 + 0x9E3779B97F4A7C15) ^ node_index)
//! h2      = mix((h1 + 0x9E3779B97F4A7C15) ^ slot)
//! h3      = mix((h2 + 0x9E3779B97F4A7C15) ^ counter)
//! u       = ((h3 >> 11) + 0.5) / 2^53
//! ```
//!
//! All additions and multiplications wrap modulo 2^64. `u` lies strictly inside
//! `(0, 1)` by construction.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
fn absorb(h: u64, word: u64) -> u64 {
    mix64(h.wrapping_add(GOLDEN) ^ word)
}

/// Which draw of a node a uniform feeds. Discriminants are normative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum DrawSlot {
    Gumbel = 0,
    Sample = 1,
    ExtraRootGumbel = 2,
    ExtraRootSample = 3,
    /// Proposal candidate `i` of minimal random coding (node index = `i`).
    MrcCandidate = 4,
    /// The categorical selection uniform of minimal random coding.
    MrcSelect = 5,
    /// Namespace derivation for per-coordinate seeds.
    Namespace = 6,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub node_index: u64,
    pub slot: DrawSlot,
    pub counter: u64,
}

impl StreamKey {
    pub const fn new(seed: u64, node_index: u64, slot: DrawSlot) -> Self {
        Self {
            seed,
            node_index,
            slot,
            counter: 0,
        }
    }

    pub const fn with_counter(self, counter: u64) -> Self {
        Self { counter, ..self }
    }

    pub fn hash(&self) -> u64 {
        let h = mix64(self.seed.wrapping_add(GOLDEN));
        let h = absorb(h, self.node_index);
        let h = absorb(h, self.slot as u64);
        absorb(h, self.counter)
    }

    pub fn uniform(&self) -> f64 {
        ((self.hash() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }
}

/// The uniform addressed by `key`, strictly inside `(0, 1)`.
pub fn keyed_uniform(key: StreamKey) -> f64 {
    key.uniform()
}

/// Seed of an independent sub-stream, e.g. one coordinate of a block.
pub fn derive_seed(seed: u64, namespace: u64) -> u64 {
    StreamKey::new(seed, namespace, DrawSlot::Namespace).hash()
}

/// A (possibly truncated) Gumbel draw with unit scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GumbelValue {
    pub value: f64,
    pub location: f64,
    pub truncation: f64,
}

pub fn gumbel(u: f64, location: f64) -> GumbelValue {
    GumbelValue {
        value: location - (-u.ln()).ln(),
        location,
        truncation: f64::INFINITY,
    }
}

/// Inverse-CDF draw from `Gumbel(location)` conditioned on `value <= bound`.
///
/// The CDF is `exp(exp(-(bound - location)) - exp(-(g - location)))`. For
/// `bound - location < 0` the draw is written as `bound - ln_1p(E * e^a)` to avoid
/// overflowing `exp(-a)`.
pub fn trunc_gumbel(u: f64, location: f64, bound: f64) -> GumbelValue {
    let e = -u.ln();
    let a = bound - location;
    let value = if a >= 0.0 {
        location - ((-a).exp() + e).ln()
    } else {
        bound - (e * a.exp()).ln_1p()
    };
    GumbelValue {
        value: value.min(bound),
        location,
        truncation: bound,
    }
}

/// Arrival time of the exponential race corresponding to a Gumbel value.
pub fn gumbel_to_arrival(g: f64) -> f64 {
    (-g).exp()
}
