use super::{Code, Encoded, TrialStats, Variant};
use crate::distributions::{Distribution1D, PairSpec};
use crate::error::{Error, Result};
use crate::randomness::{keyed_uniform, DrawSlot, StreamKey};
use crate::tree::{self, CdfSpan, PartitionKind};

/// Poisson functional representation: returns the arrival index `K` minimising
/// `T_K / r(X_K)` over the exponential race `T_k = T_{k-1} + E_k`.
///
/// Arrival `k` takes its exponential from the `(k, Gumbel)` slot and its sample
/// from the `(k, Sample)` slot, so this is the same race that global-bound A*
/// coding walks in Gumbel space.
pub fn encode_pfr(pair: &PairSpec, seed: u64, max_steps: u64) -> Result<Encoded> {
    if pair.analytic_dinf().is_infinite() {
        return Err(Error::UnboundedRatio);
    }
    let proposal = pair.proposal();
    let bound = pair.bound_m(&CdfSpan::FULL.region(proposal));

    let mut arrival = 0.0f64;
    let mut best = f64::NEG_INFINITY;
    let mut winner = (0u64, f64::NAN);
    let mut steps = 0u64;
    for k in 1u64.. {
        arrival += -keyed_uniform(StreamKey::new(seed, k, DrawSlot::Gumbel)).ln();
        let g = -arrival.ln();
        // no later arrival can beat the incumbent
        if k > 1 && !(best < g + bound) {
            break;
        }
        if steps >= max_steps {
            return Err(Error::BudgetExhausted(steps));
        }
        steps += 1;
        let u = keyed_uniform(StreamKey::new(seed, k, DrawSlot::Sample));
        let x = tree::sample_in_span(proposal, CdfSpan::FULL, u).0;
        let score = g + pair.log_ratio_unchecked(x);
        if best < score {
            best = score;
            winner = (k, x);
        }
    }

    let code = Code::pfr(winner.0);
    Ok(Encoded {
        code,
        sample: winner.1,
        stats: TrialStats {
            steps,
            returned_depth: winner.0.min(u32::MAX as u64) as u32,
            payload_bits: code.payload_bits(),
            overhead_bits: code.overhead_bits(),
            lower_bound: best,
        },
    })
}

pub fn decode_pfr(proposal: &Distribution1D, code: &Code, seed: u64) -> Result<f64> {
    if code.variant != Variant::Pfr {
        return Err(Error::InvalidCode(format!(
            "{} code given to PFR",
            code.variant.name()
        )));
    }
    code.validate()?;
    Ok(tree::locate(PartitionKind::GlobalBound, proposal, seed, code.payload)?.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coders::encode_astar;

    #[test]
    fn race_and_global_bound_astar_agree() {
        let pairs = [
            PairSpec::new(
                Distribution1D::gaussian(0.0, 0.25).unwrap(),
                Distribution1D::standard_normal(),
            )
            .unwrap(),
            PairSpec::new(
                Distribution1D::gaussian(1.2, 0.1).unwrap(),
                Distribution1D::standard_normal(),
            )
            .unwrap(),
            PairSpec::new(
                Distribution1D::uniform(0.3, 0.1).unwrap(),
                Distribution1D::uniform(0.5, 1.0).unwrap(),
            )
            .unwrap(),
        ];
        for pair in &pairs {
            for seed in 0..1000 {
                let race = encode_pfr(pair, seed, 1_000_000).unwrap();
                let astar = encode_astar(pair, PartitionKind::GlobalBound, seed, None).unwrap();
                assert_eq!(race.code, astar.code, "seed {seed}");
                assert_eq!(race.stats.steps, astar.stats.steps);
                assert_eq!(race.sample.to_bits(), astar.sample.to_bits());
            }
        }
    }

    #[test]
    fn identical_pair_picks_first_arrival() {
        let p = Distribution1D::standard_normal();
        let pair = PairSpec::new(p.clone(), p.clone()).unwrap();
        for seed in 0..100 {
            let e = encode_pfr(&pair, seed, 10).unwrap();
            assert_eq!(e.code.payload, 1);
            assert_eq!(decode_pfr(&p, &e.code, seed).unwrap(), e.sample);
        }
    }

    #[test]
    fn step_budget_is_enforced() {
        let pair = PairSpec::new(
            Distribution1D::gaussian(0.0, 1e-4).unwrap(),
            Distribution1D::standard_normal(),
        )
        .unwrap();
        assert!(matches!(
            encode_pfr(&pair, 1, 3),
            Err(Error::BudgetExhausted(3))
        ));
    }
}
