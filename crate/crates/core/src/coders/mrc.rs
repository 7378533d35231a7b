use super::{Code, Encoded, TrialStats, Variant};
use crate::distributions::{Distribution1D, PairSpec};
use crate::error::{Error, Result};
use crate::randomness::{keyed_uniform, DrawSlot, StreamKey};
use crate::tree::{sample_in_span, CdfSpan};

pub const MAX_MRC_BITS: u32 = 32;

fn candidate(proposal: &Distribution1D, seed: u64, i: u64) -> f64 {
    let u = keyed_uniform(StreamKey::new(seed, i, DrawSlot::MrcCandidate));
    sample_in_span(proposal, CdfSpan::FULL, u).0
}

/// Minimal random coding: draws `2^n_bits` proposal candidates and picks one with
/// probability proportional to `dQ/dP`.
pub fn encode_mrc(pair: &PairSpec, seed: u64, n_bits: u32) -> Result<Encoded> {
    if n_bits > MAX_MRC_BITS {
        return Err(Error::Domain(format!(
            "MRC budget {n_bits} exceeds {MAX_MRC_BITS} bits"
        )));
    }
    let proposal = pair.proposal();
    let n = 1u64 << n_bits;

    // streaming log-sum-exp of the log weights
    let mut max = f64::NEG_INFINITY;
    let mut sum = 0.0;
    for i in 0..n {
        let lw = pair.log_ratio_unchecked(candidate(proposal, seed, i));
        if lw == f64::NEG_INFINITY {
            continue;
        }
        if lw > max {
            sum = sum * (max - lw).exp() + 1.0;
            max = lw;
        } else {
            sum += (lw - max).exp();
        }
    }
    if max == f64::NEG_INFINITY {
        return Err(Error::DegenerateTarget);
    }

    let threshold = keyed_uniform(StreamKey::new(seed, 0, DrawSlot::MrcSelect)) * sum;
    let mut acc = 0.0;
    let mut chosen = None;
    let mut last_positive = 0;
    for i in 0..n {
        let x = candidate(proposal, seed, i);
        let lw = pair.log_ratio_unchecked(x);
        if lw == f64::NEG_INFINITY {
            continue;
        }
        acc += (lw - max).exp();
        last_positive = i;
        if acc > threshold {
            chosen = Some((i, x));
            break;
        }
    }
    // rounding can leave the threshold just above the final cumulative sum
    let (index, sample) =
        chosen.unwrap_or_else(|| (last_positive, candidate(proposal, seed, last_positive)));

    let code = Code::fixed(Variant::Mrc, n_bits, index);
    Ok(Encoded {
        code,
        sample,
        stats: TrialStats {
            steps: n,
            returned_depth: n_bits,
            payload_bits: n_bits,
            overhead_bits: 0,
            lower_bound: max,
        },
    })
}

pub fn decode_mrc(proposal: &Distribution1D, code: &Code, seed: u64) -> Result<f64> {
    if code.variant != Variant::Mrc {
        return Err(Error::InvalidCode(format!(
            "{} code given to MRC",
            code.variant.name()
        )));
    }
    if code.depth_or_budget > MAX_MRC_BITS {
        return Err(Error::InvalidCode(format!(
            "budget {}",
            code.depth_or_budget
        )));
    }
    code.validate()?;
    Ok(candidate(proposal, seed, code.payload))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_candidate_always_selected() {
        let pair = PairSpec::new(
            Distribution1D::gaussian(0.3, 0.5).unwrap(),
            Distribution1D::standard_normal(),
        )
        .unwrap();
        for seed in 0..50 {
            let e = encode_mrc(&pair, seed, 0).unwrap();
            assert_eq!(e.code.payload, 0);
            assert_eq!(e.stats.steps, 1);
        }
    }

    #[test]
    fn identical_pair_selects_uniformly() {
        let p = Distribution1D::standard_normal();
        let pair = PairSpec::new(p.clone(), p).unwrap();
        let mut counts = [0u32; 8];
        let trials = 40_000;
        for seed in 0..trials {
            counts[encode_mrc(&pair, seed, 3).unwrap().code.payload as usize] += 1;
        }
        let expected = trials as f64 / 8.0;
        let se = (expected * (1.0 - 1.0 / 8.0)).sqrt();
        for c in counts {
            assert!((c as f64 - expected).abs() < 4.0 * se, "{counts:?}");
        }
    }

    #[test]
    fn round_trip_and_degenerate_target() {
        let pair = PairSpec::new(
            Distribution1D::gaussian(1.0, 0.2).unwrap(),
            Distribution1D::standard_normal(),
        )
        .unwrap();
        for seed in 0..200 {
            let e = encode_mrc(&pair, seed, 5).unwrap();
            assert_eq!(
                decode_mrc(pair.proposal(), &e.code, seed)
                    .unwrap()
                    .to_bits(),
                e.sample.to_bits()
            );
        }
        // target mass far from every candidate of a 1-candidate draw
        let tiny = PairSpec::new(
            Distribution1D::uniform(0.999_999, 1e-7).unwrap(),
            Distribution1D::uniform(0.5, 1.0).unwrap(),
        )
        .unwrap();
        assert_eq!(
            encode_mrc(&tiny, 3, 0).unwrap_err(),
            Error::DegenerateTarget
        );
    }
}
