use std::collections::BinaryHeap;

use super::{Code, Encoded, TrialStats, Variant};
use crate::distributions::{Distribution1D, PairSpec};
use crate::error::{Error, Result};
use crate::randomness::{keyed_uniform, trunc_gumbel, DrawSlot, StreamKey};
use crate::tree::{self, depth_of, CdfSpan, NodeRecord, PartitionKind, QueueEntry, MAX_DEPTH};

/// Arena slot marking the second root arrival.
const EXTRA_SLOT: usize = usize::MAX;

pub(crate) struct SearchConfig {
    pub kind: PartitionKind,
    /// Nodes at this depth are scored but not expanded.
    pub max_depth: Option<u32>,
    /// Draw a second arrival at the root, addressable as index 0.
    pub extra_root: bool,
    pub max_steps: Option<u64>,
}

pub(crate) struct SearchOutcome {
    /// Winning node index; 0 is the extra root arrival.
    pub index: u64,
    pub depth: u32,
    pub sample: f64,
    pub steps: u64,
    pub lower_bound: f64,
}

fn extra_root_sample(proposal: &Distribution1D, seed: u64) -> f64 {
    let u = keyed_uniform(StreamKey::new(seed, 0, DrawSlot::ExtraRootSample));
    tree::sample_in_span(proposal, CdfSpan::FULL, u).0
}

/// Branch-and-bound search over the proposal's Gumbel process.
///
/// Pops the node with the largest `G + M(B)`, scores it with `G + log r(X)`, and
/// expands it into children whose bound can still beat the incumbent. Stops when
/// the incumbent beats every queued priority.
pub(crate) fn search(pair: &PairSpec, seed: u64, cfg: &SearchConfig) -> Result<SearchOutcome> {
    let proposal = pair.proposal();
    let root = tree::root(proposal, seed);
    let root_bound = pair.bound_m(&root.region);

    let mut nodes: Vec<NodeRecord> = vec![root];
    let mut bounds: Vec<f64> = vec![root_bound];
    let mut queue = BinaryHeap::new();

    // the root's children are truncated below the lowest root arrival
    let mut root_child_truncation = root.gumbel.value;
    let mut extra = None;
    if cfg.extra_root {
        let u = keyed_uniform(StreamKey::new(seed, 0, DrawSlot::ExtraRootGumbel));
        let g = trunc_gumbel(u, 0.0, root.gumbel.value).value;
        let x = extra_root_sample(proposal, seed);
        root_child_truncation = g;
        extra = Some((g, x));
        queue.push(QueueEntry {
            priority: g + root_bound,
            index: 0,
            slot: EXTRA_SLOT,
        });
    }
    queue.push(QueueEntry {
        priority: root.gumbel.value + root_bound,
        index: 1,
        slot: 0,
    });

    let mut lb = f64::NEG_INFINITY;
    let mut best: Option<(u64, u32, f64)> = None;
    let mut steps = 0u64;

    while let Some(top) = queue.peek() {
        if !(lb < top.priority) {
            break;
        }
        if cfg.max_steps.is_some_and(|m| steps >= m) {
            return Err(Error::BudgetExhausted(steps));
        }
        let entry = queue.pop().expect("peeked");
        steps += 1;

        if entry.slot == EXTRA_SLOT {
            let (g, x) = extra.expect("extra root present");
            let lb_n = g + pair.log_ratio_unchecked(x);
            if lb < lb_n {
                lb = lb_n;
                best = Some((0, 1, x));
            }
            continue;
        }

        let node = nodes[entry.slot];
        let node_bound = bounds[entry.slot];
        let lb_n = node.gumbel.value + pair.log_ratio_unchecked(node.sample);
        if lb < lb_n {
            lb = lb_n;
            best = Some((node.heap_index, node.depth, node.sample));
        }

        if cfg.max_depth.is_some_and(|d| node.depth >= d) {
            continue;
        }
        let truncation = if node.depth == 1 {
            root_child_truncation
        } else {
            node.gumbel.value
        };
        let children = tree::expand_truncated(&node, cfg.kind, proposal, seed, truncation)?;
        for child in children {
            if lb < child.gumbel.value + node_bound {
                let child_bound = pair.bound_m(&child.region);
                if lb < child.gumbel.value + child_bound {
                    queue.push(QueueEntry {
                        priority: child.gumbel.value + child_bound,
                        index: child.heap_index,
                        slot: nodes.len(),
                    });
                    nodes.push(child);
                    bounds.push(child_bound);
                }
            }
        }
    }

    let (index, depth, sample) = best.ok_or(Error::DegenerateTarget)?;
    Ok(SearchOutcome {
        index,
        depth,
        sample,
        steps,
        lower_bound: lb,
    })
}

/// A* coding with the given partition.
///
/// With `max_depth = None` the returned sample is an exact draw from the target;
/// such runs are refused when `D_inf(Q || P)` is infinite. `GlobalBound` yields a
/// PFR code whose payload is the winning arrival index.
pub fn encode_astar(
    pair: &PairSpec,
    kind: PartitionKind,
    seed: u64,
    max_depth: Option<u32>,
) -> Result<Encoded> {
    if max_depth.is_none() && pair.analytic_dinf().is_infinite() {
        return Err(Error::UnboundedRatio);
    }
    if let Some(d) = max_depth {
        if d == 0 || (kind != PartitionKind::GlobalBound && d > MAX_DEPTH) {
            return Err(Error::Domain(format!("max depth {d} out of range")));
        }
    }
    let cfg = SearchConfig {
        kind,
        max_depth,
        extra_root: false,
        max_steps: None,
    };
    let out = search(pair, seed, &cfg)?;
    let code = match kind {
        PartitionKind::GlobalBound => Code::pfr(out.index),
        _ => Code::exact(Variant::for_partition(kind), out.index),
    };
    Ok(Encoded {
        code,
        sample: out.sample,
        stats: TrialStats {
            steps: out.steps,
            returned_depth: out.depth,
            payload_bits: code.payload_bits(),
            overhead_bits: code.overhead_bits(),
            lower_bound: out.lower_bound,
        },
    })
}

pub fn decode_astar(
    proposal: &Distribution1D,
    kind: PartitionKind,
    code: &Code,
    seed: u64,
) -> Result<f64> {
    if code.variant != Variant::for_partition(kind) {
        return Err(Error::InvalidCode(format!(
            "{} code given to a {kind:?} decoder",
            code.variant.name()
        )));
    }
    code.validate()?;
    Ok(tree::locate(kind, proposal, seed, code.payload)?.1)
}

/// Depth-limited AD* with a fixed budget of `budget` bits.
///
/// The root carries two arrivals of the race; the second is a leaf addressed by
/// codeword 0, so all `2^budget` codewords are in use.
pub fn encode_dad(pair: &PairSpec, seed: u64, budget: u32) -> Result<Encoded> {
    if budget == 0 || budget > MAX_DEPTH {
        return Err(Error::Domain(format!(
            "DAD* budget {budget} out of range 1..={MAX_DEPTH}"
        )));
    }
    let cfg = SearchConfig {
        kind: PartitionKind::Dyadic,
        max_depth: Some(budget),
        extra_root: true,
        max_steps: None,
    };
    let out = search(pair, seed, &cfg)?;
    let code = Code::fixed(Variant::Dad, budget, out.index);
    Ok(Encoded {
        code,
        sample: out.sample,
        stats: TrialStats {
            steps: out.steps,
            returned_depth: out.depth,
            payload_bits: budget,
            overhead_bits: 0,
            lower_bound: out.lower_bound,
        },
    })
}

/// The codeword and sample DAD* settles on as its budget grows: an unlimited
/// search of the same two-root-arrival tree. The sample is an exact target draw.
pub fn dad_limit(pair: &PairSpec, seed: u64) -> Result<(u64, f64)> {
    if pair.analytic_dinf().is_infinite() {
        return Err(Error::UnboundedRatio);
    }
    let cfg = SearchConfig {
        kind: PartitionKind::Dyadic,
        max_depth: None,
        extra_root: true,
        max_steps: None,
    };
    let out = search(pair, seed, &cfg)?;
    Ok((out.index, out.sample))
}

pub fn decode_dad(proposal: &Distribution1D, code: &Code, seed: u64) -> Result<f64> {
    if code.variant != Variant::Dad {
        return Err(Error::InvalidCode(format!(
            "{} code given to DAD*",
            code.variant.name()
        )));
    }
    if code.depth_or_budget == 0 || code.depth_or_budget > MAX_DEPTH {
        return Err(Error::InvalidCode(format!(
            "budget {}",
            code.depth_or_budget
        )));
    }
    code.validate()?;
    if code.payload == 0 {
        return Ok(extra_root_sample(proposal, seed));
    }
    debug_assert!(depth_of(code.payload) <= code.depth_or_budget);
    Ok(tree::locate(PartitionKind::Dyadic, proposal, seed, code.payload)?.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{Distribution1D, MixtureComponent};

    fn narrow() -> PairSpec {
        PairSpec::new(
            Distribution1D::gaussian(0.0, 0.25).unwrap(),
            Distribution1D::standard_normal(),
        )
        .unwrap()
    }

    #[test]
    fn identical_pair_returns_root() {
        let g = Distribution1D::gaussian(1.0, 2.0).unwrap();
        let pair = PairSpec::new(g.clone(), g).unwrap();
        for seed in 0..100 {
            for kind in [
                PartitionKind::SampleSplit,
                PartitionKind::Dyadic,
                PartitionKind::GlobalBound,
            ] {
                let e = encode_astar(&pair, kind, seed, None).unwrap();
                assert_eq!(e.code.payload, 1);
                assert_eq!(e.stats.returned_depth, 1);
                assert_eq!(e.stats.steps, 1);
            }
            let d = encode_dad(&pair, seed, 4).unwrap();
            assert!(d.code.payload <= 1);
        }
    }

    #[test]
    fn round_trips_bit_exact() {
        let mix = PairSpec::new(
            Distribution1D::uniform_mixture(vec![
                MixtureComponent {
                    weight: 0.3,
                    low: 0.05,
                    high: 0.1,
                },
                MixtureComponent {
                    weight: 0.7,
                    low: 0.6,
                    high: 0.65,
                },
            ])
            .unwrap(),
            Distribution1D::uniform(0.5, 1.0).unwrap(),
        )
        .unwrap();
        for pair in [narrow(), mix] {
            for seed in 0..300 {
                for kind in [
                    PartitionKind::SampleSplit,
                    PartitionKind::Dyadic,
                    PartitionKind::GlobalBound,
                ] {
                    let e = encode_astar(&pair, kind, seed, None).unwrap();
                    let x = decode_astar(pair.proposal(), kind, &e.code, seed).unwrap();
                    assert_eq!(x.to_bits(), e.sample.to_bits());
                }
                // at depth 8 some dyadic cell lies inside each target component
                let e = encode_dad(&pair, seed, 8).unwrap();
                assert!(e.code.payload < 256);
                let x = decode_dad(pair.proposal(), &e.code, seed).unwrap();
                assert_eq!(x.to_bits(), e.sample.to_bits());
            }
        }
    }

    #[test]
    fn refuses_unbounded_exact_runs() {
        let pair = PairSpec::new(
            Distribution1D::gaussian(1.0, 1.0).unwrap(),
            Distribution1D::standard_normal(),
        )
        .unwrap();
        assert_eq!(
            encode_astar(&pair, PartitionKind::Dyadic, 0, None).unwrap_err(),
            Error::UnboundedRatio
        );
        // fixed-budget search always terminates
        let e = encode_dad(&pair, 0, 6).unwrap();
        assert!(e.code.payload < 64);
    }

    #[test]
    fn decoder_rejects_bad_codes() {
        let p = Distribution1D::standard_normal();
        let zero = Code {
            variant: Variant::AdStar,
            depth_or_budget: 1,
            payload: 0,
        };
        assert!(decode_astar(&p, PartitionKind::Dyadic, &zero, 0).is_err());
        let wrong_depth = Code {
            variant: Variant::AdStar,
            depth_or_budget: 2,
            payload: 5,
        };
        assert!(decode_astar(&p, PartitionKind::Dyadic, &wrong_depth, 0).is_err());
        let overflow = Code::fixed(Variant::Dad, 3, 8);
        assert!(decode_dad(&p, &overflow, 0).is_err());
        let zero_dad = Code::fixed(Variant::Dad, 3, 0);
        assert_eq!(
            decode_dad(&p, &zero_dad, 4).unwrap(),
            extra_root_sample(&p, 4)
        );
        let one = Code::fixed(Variant::Dad, 3, 1);
        assert_eq!(decode_dad(&p, &one, 4).unwrap(), tree::root(&p, 4).sample);
    }

    #[test]
    fn depth_limit_caps_codeword() {
        for seed in 0..200 {
            for budget in 1..6 {
                let e = encode_astar(&narrow(), PartitionKind::Dyadic, seed, Some(budget)).unwrap();
                assert!(e.stats.returned_depth <= budget);
            }
        }
    }
}
