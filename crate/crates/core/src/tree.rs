//! The binary search tree over the proposal's Gumbel process.
//!
//! Nodes are addressed by heap index (root 1, children `2H` and `2H + 1`). Each
//! node's region is tracked in the proposal's CDF coordinates, which makes dyadic
//! splits exact and lets the decoder rebuild a region from the path alone.

use serde::Serialize;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::distributions::{Distribution1D, Region};
use crate::error::{Error, Result};
use crate::randomness::{keyed_uniform, trunc_gumbel, DrawSlot, GumbelValue, StreamKey};

/// Deepest node the splitting partitions may create.
pub const MAX_DEPTH: u32 = 62;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, serde::Deserialize)]
pub enum PartitionKind {
    /// No refinement: the single child keeps the whole region.
    GlobalBound,
    /// Split at the node's own sample (AS*).
    SampleSplit,
    /// Split at the proposal median of the region (AD*).
    Dyadic,
}

pub fn depth_of(heap_index: u64) -> u32 {
    64 - heap_index.leading_zeros()
}

pub fn heap_children(heap_index: u64) -> Result<(u64, u64)> {
    let depth = depth_of(heap_index);
    if heap_index == 0 || depth >= MAX_DEPTH {
        return Err(Error::DepthExceeded(depth + 1));
    }
    Ok((2 * heap_index, 2 * heap_index + 1))
}

/// Region endpoints in the proposal's CDF coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CdfSpan {
    pub lo: f64,
    pub hi: f64,
}

impl CdfSpan {
    pub const FULL: CdfSpan = CdfSpan { lo: 0.0, hi: 1.0 };

    pub fn mass(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn region(&self, proposal: &Distribution1D) -> Region {
        Region {
            low: proposal.quantile(self.lo),
            high: proposal.quantile(self.hi),
        }
    }
}

/// One expanded node of the search tree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NodeRecord {
    /// Heap index for the splitting partitions; the arrival index for `GlobalBound`.
    pub heap_index: u64,
    pub depth: u32,
    pub region: Region,
    pub span: CdfSpan,
    pub sample: f64,
    /// Proposal CDF coordinate of `sample`.
    pub sample_cdf: f64,
    #[serde(skip)]
    pub gumbel: GumbelValue,
    pub parent_gumbel: f64,
}

impl NodeRecord {
    pub fn gumbel_value(&self) -> f64 {
        self.gumbel.value
    }
}

/// `P` restricted to `span`, drawn through the quantile function.
pub fn sample_in_span(proposal: &Distribution1D, span: CdfSpan, u: f64) -> (f64, f64) {
    let v = span.lo + u * (span.hi - span.lo);
    let region = span.region(proposal);
    let x = proposal.quantile(v).clamp(region.low, region.high);
    (x, v)
}

fn node_sample(proposal: &Distribution1D, seed: u64, index: u64, span: CdfSpan) -> (f64, f64) {
    let u = keyed_uniform(StreamKey::new(seed, index, DrawSlot::Sample));
    sample_in_span(proposal, span, u)
}

/// Builds a node: draws its truncated Gumbel and its restricted sample.
pub fn make_node(
    proposal: &Distribution1D,
    seed: u64,
    heap_index: u64,
    depth: u32,
    span: CdfSpan,
    truncation: f64,
) -> NodeRecord {
    let ug = keyed_uniform(StreamKey::new(seed, heap_index, DrawSlot::Gumbel));
    let gumbel = trunc_gumbel(ug, span.mass().ln(), truncation);
    let (sample, sample_cdf) = node_sample(proposal, seed, heap_index, span);
    NodeRecord {
        heap_index,
        depth,
        region: span.region(proposal),
        span,
        sample,
        sample_cdf,
        gumbel,
        parent_gumbel: truncation,
    }
}

pub fn root(proposal: &Distribution1D, seed: u64) -> NodeRecord {
    make_node(proposal, seed, 1, 1, CdfSpan::FULL, f64::INFINITY)
}

/// Child spans in CDF coordinates: `(left, right)`; `left` is `None` for `GlobalBound`.
pub fn child_spans(
    kind: PartitionKind,
    span: CdfSpan,
    sample_cdf: f64,
) -> (Option<CdfSpan>, CdfSpan) {
    match kind {
        PartitionKind::GlobalBound => (None, span),
        PartitionKind::SampleSplit => (
            Some(CdfSpan {
                lo: span.lo,
                hi: sample_cdf,
            }),
            CdfSpan {
                lo: sample_cdf,
                hi: span.hi,
            },
        ),
        PartitionKind::Dyadic => {
            let mid = 0.5 * (span.lo + span.hi);
            (
                Some(CdfSpan {
                    lo: span.lo,
                    hi: mid,
                }),
                CdfSpan {
                    lo: mid,
                    hi: span.hi,
                },
            )
        }
    }
}

/// Splits `region` according to `kind`.
pub fn partition(
    kind: PartitionKind,
    region: &Region,
    x: f64,
    proposal: &Distribution1D,
) -> Result<(Option<Region>, Region)> {
    if proposal.mass(region) <= 0.0 {
        return Err(Error::DegenerateRegion);
    }
    let split = match kind {
        PartitionKind::GlobalBound => return Ok((None, *region)),
        PartitionKind::SampleSplit => {
            if !region.contains(x) {
                return Err(Error::Domain(format!("split point {x} outside region")));
            }
            x
        }
        PartitionKind::Dyadic => match proposal {
            Distribution1D::Gaussian { mean, variance } if region.low >= *mean => {
                let s = 0.5 * (proposal.sf(region.low) + proposal.sf(region.high));
                mean - variance.sqrt() * crate::distributions::std_normal_inv(s)
            }
            _ => proposal.quantile(0.5 * (proposal.cdf(region.low) + proposal.cdf(region.high))),
        },
    };
    let left = Region {
        low: region.low,
        high: split,
    };
    let right = Region {
        low: split,
        high: region.high,
    };
    if !(left.low < left.high && right.low < right.high)
        || proposal.mass(&left) <= 0.0
        || proposal.mass(&right) <= 0.0
    {
        return Err(Error::DegenerateRegion);
    }
    Ok((Some(left), right))
}

/// Expands `node`, truncating the children's Gumbels at `truncation`.
///
/// Zero-mass children are not emitted.
pub fn expand_truncated(
    node: &NodeRecord,
    kind: PartitionKind,
    proposal: &Distribution1D,
    seed: u64,
    truncation: f64,
) -> Result<Vec<NodeRecord>> {
    let depth = node.depth + 1;
    let (left, right) = child_spans(kind, node.span, node.sample_cdf);
    let (li, ri) = match kind {
        PartitionKind::GlobalBound => (0, node.heap_index + 1),
        _ => heap_children(node.heap_index)?,
    };
    let mut out = Vec::with_capacity(2);
    for (index, span) in [(li, left), (ri, Some(right))] {
        if let Some(span) = span.filter(|s| s.mass() > 0.0) {
            out.push(make_node(proposal, seed, index, depth, span, truncation));
        }
    }
    Ok(out)
}

pub fn expand(
    node: &NodeRecord,
    kind: PartitionKind,
    proposal: &Distribution1D,
    seed: u64,
) -> Result<Vec<NodeRecord>> {
    expand_truncated(node, kind, proposal, seed, node.gumbel.value)
}

/// Rebuilds the span and sample of the node at `heap_index` from the shared
/// randomness alone. No Gumbels are drawn and the target is never consulted.
pub fn locate(
    kind: PartitionKind,
    proposal: &Distribution1D,
    seed: u64,
    heap_index: u64,
) -> Result<(CdfSpan, f64)> {
    if heap_index == 0 {
        return Err(Error::InvalidCode("heap index 0 is reserved".into()));
    }
    if kind == PartitionKind::GlobalBound {
        let (x, _) = node_sample(proposal, seed, heap_index, CdfSpan::FULL);
        return Ok((CdfSpan::FULL, x));
    }
    let depth = depth_of(heap_index);
    if depth > MAX_DEPTH {
        return Err(Error::DepthExceeded(depth));
    }
    let mut span = CdfSpan::FULL;
    let mut index = 1u64;
    for level in (0..depth - 1).rev() {
        let (_, sample_cdf) = match kind {
            PartitionKind::SampleSplit => node_sample(proposal, seed, index, span),
            _ => (0.0, 0.0),
        };
        let (left, right) = child_spans(kind, span, sample_cdf);
        let go_right = (heap_index >> level) & 1 == 1;
        span = if go_right {
            right
        } else {
            left.expect("splitting partition")
        };
        index = 2 * index + go_right as u64;
        if span.mass() <= 0.0 {
            return Err(Error::DegenerateRegion);
        }
    }
    let (x, _) = node_sample(proposal, seed, heap_index, span);
    Ok((span, x))
}

/// Max-priority queue entry; ties go to the smaller node index.
#[derive(Debug, Clone, Copy)]
pub(crate) struct QueueEntry {
    pub priority: f64,
    pub index: u64,
    pub slot: usize,
}

impl PartialEq for QueueEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for QueueEntry {}

impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QueueEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority
            .total_cmp(&other.priority)
            .then_with(|| other.index.cmp(&self.index))
    }
}

/// A point yielded by [`TopDownProcess`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProcessPoint {
    pub sample: f64,
    pub gumbel: f64,
    pub heap_index: u64,
    pub depth: u32,
}

/// Yields the points of the proposal's Gumbel process in decreasing Gumbel order.
pub struct TopDownProcess {
    proposal: Distribution1D,
    kind: PartitionKind,
    seed: u64,
    max_depth: Option<u32>,
    remaining: usize,
    queue: BinaryHeap<QueueEntry>,
    nodes: Vec<NodeRecord>,
}

pub fn top_down_process(
    proposal: &Distribution1D,
    count: usize,
    max_depth: Option<u32>,
    kind: PartitionKind,
    seed: u64,
) -> TopDownProcess {
    let r = root(proposal, seed);
    let mut queue = BinaryHeap::new();
    queue.push(QueueEntry {
        priority: r.gumbel.value,
        index: 1,
        slot: 0,
    });
    TopDownProcess {
        proposal: proposal.clone(),
        kind,
        seed,
        max_depth,
        remaining: count,
        queue,
        nodes: vec![r],
    }
}

impl Iterator for TopDownProcess {
    type Item = ProcessPoint;

    fn next(&mut self) -> Option<ProcessPoint> {
        if self.remaining == 0 {
            return None;
        }
        let entry = self.queue.pop()?;
        let node = self.nodes[entry.slot];
        self.remaining -= 1;
        if self.max_depth.is_none_or(|d| node.depth < d) {
            if let Ok(children) = expand(&node, self.kind, &self.proposal, self.seed) {
                for child in children {
                    self.queue.push(QueueEntry {
                        priority: child.gumbel.value,
                        index: child.heap_index,
                        slot: self.nodes.len(),
                    });
                    self.nodes.push(child);
                }
            }
        }
        Some(ProcessPoint {
            sample: node.sample,
            gumbel: node.gumbel.value,
            heap_index: node.heap_index,
            depth: node.depth,
        })
    }
}
