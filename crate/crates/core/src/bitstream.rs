//! Bit-level serialization of codes.
//!
//! Bits are written MSB-first within each byte and the final byte is zero padded.
//! See `docs/wire-format.md` for the normative layout of a message.

use crate::coders::{Code, Variant};
use crate::error::{Error, Result};

#[derive(Debug, Default, Clone)]
pub struct BitWriter {
    bytes: Vec<u8>,
    len: usize,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len_bits(&self) -> usize {
        self.len
    }

    pub fn write_bit(&mut self, bit: bool) {
        if self.len.is_multiple_of(8) {
            self.bytes.push(0);
        }
        if bit {
            let last = self.bytes.len() - 1;
            self.bytes[last] |= 0x80 >> (self.len % 8);
        }
        self.len += 1;
    }

    /// Writes the low `n` bits of `value`, most significant first.
    pub fn write_bits(&mut self, value: u64, n: u32) {
        debug_assert!(n <= 64);
        for i in (0..n).rev() {
            self.write_bit((value >> i) & 1 == 1);
        }
    }

    /// Elias gamma: `floor(log2 n)` zeros followed by the binary digits of `n`.
    pub fn write_gamma(&mut self, n: u64) -> Result<()> {
        if n == 0 {
            return Err(Error::Domain("Elias gamma cannot code 0".into()));
        }
        let digits = 64 - n.leading_zeros();
        self.write_bits(0, digits - 1);
        self.write_bits(n, digits);
        Ok(())
    }

    /// Elias delta: gamma code of the digit count, then the digits after the leading 1.
    pub fn write_delta(&mut self, n: u64) -> Result<()> {
        if n == 0 {
            return Err(Error::Domain("Elias delta cannot code 0".into()));
        }
        let digits = 64 - n.leading_zeros();
        self.write_gamma(digits as u64)?;
        self.write_bits(n, digits - 1);
        Ok(())
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    /// The written bits as a string of `0`/`1`.
    pub fn to_bit_string(&self) -> String {
        (0..self.len)
            .map(|i| {
                if self.bytes[i / 8] & (0x80 >> (i % 8)) != 0 {
                    '1'
                } else {
                    '0'
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.bytes.len() * 8 - self.pos
    }

    pub fn read_bit(&mut self) -> Result<bool> {
        if self.pos >= self.bytes.len() * 8 {
            return Err(Error::MalformedMessage("unexpected end of stream".into()));
        }
        let bit = self.bytes[self.pos / 8] & (0x80 >> (self.pos % 8)) != 0;
        self.pos += 1;
        Ok(bit)
    }

    pub fn read_bits(&mut self, n: u32) -> Result<u64> {
        let mut v = 0u64;
        for _ in 0..n {
            v = (v << 1) | self.read_bit()? as u64;
        }
        Ok(v)
    }

    pub fn read_gamma(&mut self) -> Result<u64> {
        let mut zeros = 0u32;
        while !self.read_bit()? {
            zeros += 1;
            if zeros > 63 {
                return Err(Error::MalformedMessage("gamma prefix too long".into()));
            }
        }
        Ok((1u64 << zeros) | self.read_bits(zeros)?)
    }

    pub fn read_delta(&mut self) -> Result<u64> {
        let digits = self.read_gamma()?;
        if digits > 64 {
            return Err(Error::MalformedMessage(format!("delta length {digits}")));
        }
        let rest = self.read_bits(digits as u32 - 1)?;
        Ok(if digits == 64 {
            (1u64 << 63) | rest
        } else {
            (1u64 << (digits - 1)) | rest
        })
    }
}

pub fn gamma_len(n: u64) -> u32 {
    2 * (63 - n.max(1).leading_zeros()) + 1
}

pub fn delta_len(n: u64) -> u32 {
    let digits = 64 - n.max(1).leading_zeros();
    gamma_len(digits as u64) + digits - 1
}

/// Elias gamma code of the depth, then the heap index without its leading 1.
pub fn pack_exact(w: &mut BitWriter, code: &Code) -> Result<()> {
    if !matches!(code.variant, Variant::AsStar | Variant::AdStar) {
        return Err(Error::InvalidCode(format!(
            "{} is not an exact tree code",
            code.variant.name()
        )));
    }
    code.validate()?;
    let depth = code.depth_or_budget;
    w.write_gamma(depth as u64)?;
    w.write_bits(code.payload, depth - 1);
    Ok(())
}

pub fn unpack_exact(r: &mut BitReader, variant: Variant) -> Result<Code> {
    let depth = r.read_gamma()?;
    if depth > 64 {
        return Err(Error::MalformedMessage(format!("depth {depth}")));
    }
    let depth = depth as u32;
    let low = r.read_bits(depth - 1)?;
    let payload = if depth == 64 {
        (1u64 << 63) | low
    } else {
        (1u64 << (depth - 1)) | low
    };
    Ok(Code {
        variant,
        depth_or_budget: depth,
        payload,
    })
}

/// Elias delta code of the arrival index.
pub fn pack_pfr(w: &mut BitWriter, code: &Code) -> Result<()> {
    if code.variant != Variant::Pfr {
        return Err(Error::InvalidCode(format!(
            "{} is not a PFR code",
            code.variant.name()
        )));
    }
    code.validate()?;
    w.write_delta(code.payload)
}

pub fn unpack_pfr(r: &mut BitReader) -> Result<Code> {
    Ok(Code::pfr(r.read_delta()?))
}

/// A block of fixed-length codewords: `gamma(D)`, `gamma(len + 1)`, then `len`
/// codewords of `D` bits each.
pub fn pack_block(w: &mut BitWriter, codes: &[Code], budget: u32) -> Result<()> {
    if budget == 0 || budget > 63 {
        return Err(Error::InvalidCode(format!("block budget {budget}")));
    }
    for c in codes {
        if !c.variant.is_fixed_length() || c.depth_or_budget != budget || c.payload >> budget != 0 {
            return Err(Error::InvalidCode(format!(
                "{c:?} does not fit a {budget}-bit block"
            )));
        }
    }
    w.write_gamma(budget as u64)?;
    w.write_gamma(codes.len() as u64 + 1)?;
    for c in codes {
        w.write_bits(c.payload, budget);
    }
    Ok(())
}

pub fn unpack_block(r: &mut BitReader, variant: Variant) -> Result<Vec<Code>> {
    let budget = r.read_gamma()?;
    if budget > 63 {
        return Err(Error::MalformedMessage(format!("block budget {budget}")));
    }
    let len = r.read_gamma()? - 1;
    if len.saturating_mul(budget) > r.remaining() as u64 {
        return Err(Error::MalformedMessage(
            "block longer than the stream".into(),
        ));
    }
    (0..len)
        .map(|_| {
            Ok(Code::fixed(
                variant,
                budget as u32,
                r.read_bits(budget as u32)?,
            ))
        })
        .collect()
}

/// How a message communicates codelengths.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameMode {
    /// Every symbol carries its own length (AS*, AD*, PFR).
    ExactPerSymbol,
    /// One budget per block of fixed-length codewords (DAD*, MRC).
    BlockTied,
}

/// A self-delimiting sequence of codes of one variant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Message {
    PerSymbol {
        variant: Variant,
        codes: Vec<Code>,
    },
    Blocks {
        variant: Variant,
        blocks: Vec<Vec<Code>>,
    },
}

fn variant_tag(v: Variant) -> u64 {
    match v {
        Variant::AsStar => 0,
        Variant::AdStar => 1,
        Variant::Pfr => 2,
        Variant::Dad => 3,
        Variant::Mrc => 4,
    }
}

fn tag_variant(tag: u64) -> Result<Variant> {
    Ok(match tag {
        0 => Variant::AsStar,
        1 => Variant::AdStar,
        2 => Variant::Pfr,
        3 => Variant::Dad,
        4 => Variant::Mrc,
        t => return Err(Error::MalformedMessage(format!("unknown variant tag {t}"))),
    })
}

const TAG_BITS: u32 = 3;

impl Message {
    pub fn variant(&self) -> Variant {
        match self {
            Message::PerSymbol { variant, .. } | Message::Blocks { variant, .. } => *variant,
        }
    }

    pub fn mode(&self) -> FrameMode {
        match self {
            Message::PerSymbol { .. } => FrameMode::ExactPerSymbol,
            Message::Blocks { .. } => FrameMode::BlockTied,
        }
    }

    /// All codes in order, flattening blocks.
    pub fn codes(&self) -> Vec<Code> {
        match self {
            Message::PerSymbol { codes, .. } => codes.clone(),
            Message::Blocks { blocks, .. } => blocks.iter().flatten().copied().collect(),
        }
    }

    pub fn write(&self, w: &mut BitWriter) -> Result<()> {
        let variant = self.variant();
        w.write_bits(variant_tag(variant), TAG_BITS);
        match self {
            Message::PerSymbol { codes, .. } => {
                if variant.is_fixed_length() {
                    return Err(Error::InvalidCode(
                        "fixed-length codes must be sent in blocks".into(),
                    ));
                }
                w.write_gamma(codes.len() as u64 + 1)?;
                for c in codes {
                    if c.variant != variant {
                        return Err(Error::InvalidCode("mixed variants in one message".into()));
                    }
                    if variant == Variant::Pfr {
                        pack_pfr(w, c)?;
                    } else {
                        pack_exact(w, c)?;
                    }
                }
            }
            Message::Blocks { blocks, .. } => {
                if !variant.is_fixed_length() {
                    return Err(Error::InvalidCode(format!(
                        "{} cannot be block coded",
                        variant.name()
                    )));
                }
                w.write_gamma(blocks.len() as u64 + 1)?;
                for block in blocks {
                    let budget = block.first().map_or(1, |c| c.depth_or_budget);
                    if block.iter().any(|c| c.variant != variant) {
                        return Err(Error::InvalidCode("mixed variants in one message".into()));
                    }
                    pack_block(w, block, budget)?;
                }
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = BitWriter::new();
        self.write(&mut w)?;
        Ok(w.into_bytes())
    }

    pub fn read(r: &mut BitReader) -> Result<Self> {
        let variant = tag_variant(r.read_bits(TAG_BITS)?)?;
        let count = r.read_gamma()? - 1;
        if count > r.remaining() as u64 {
            return Err(Error::MalformedMessage(
                "item count exceeds stream length".into(),
            ));
        }
        let message = if variant.is_fixed_length() {
            let blocks = (0..count)
                .map(|_| unpack_block(r, variant))
                .collect::<Result<Vec<_>>>()?;
            Message::Blocks { variant, blocks }
        } else {
            let codes = (0..count)
                .map(|_| match variant {
                    Variant::Pfr => unpack_pfr(r),
                    _ => unpack_exact(r, variant),
                })
                .collect::<Result<Vec<_>>>()?;
            Message::PerSymbol { variant, codes }
        };
        Ok(message)
    }

    /// Parses a complete message; trailing bits must be zero padding.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = BitReader::new(bytes);
        let message = Self::read(&mut r)?;
        if r.remaining() >= 8 {
            return Err(Error::MalformedMessage(
                "trailing bytes after message".into(),
            ));
        }
        while r.remaining() > 0 {
            if r.read_bit()? {
                return Err(Error::MalformedMessage("nonzero padding".into()));
            }
        }
        Ok(message)
    }
}
