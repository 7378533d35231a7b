use serde::Serialize;

use crate::distributions::Distribution1D;
use crate::error::{Error, Result};
use crate::randomness::derive_seed;
use crate::tree::{self, PartitionKind, MAX_DEPTH};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DepthShrinkage {
    pub depth: u32,
    pub mean_mass: f64,
    pub std_error: f64,
    /// `eps^(depth - 1)`: 3/4 for sample splits, 1/2 for dyadic, 1 for global bound.
    pub reference: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShrinkageReport {
    pub kind: PartitionKind,
    pub trials: u64,
    pub depths: Vec<DepthShrinkage>,
    pub passed: bool,
}

/// Monte-Carlo proposal mass of the nodes along the heavier-child path of the
/// `N(0, 1)` tree.
///
/// Following the heavier child is the worst case for the per-split shrink
/// factor. Dyadic masses are exact; sample splits must stay below
/// `(3/4)^(d-1) + 3 SE`.
pub fn verify_shrinkage(
    kind: PartitionKind,
    max_depth: u32,
    trials: u64,
    seed: u64,
) -> Result<ShrinkageReport> {
    if trials < 1000 {
        return Err(Error::InvalidParameters(format!(
            "need at least 1000 trials, got {trials}"
        )));
    }
    if max_depth == 0 || max_depth > MAX_DEPTH {
        return Err(Error::DepthExceeded(max_depth));
    }
    let proposal = Distribution1D::standard_normal();
    let d = max_depth as usize;
    let mut sum = vec![0.0; d];
    let mut sum_sq = vec![0.0; d];
    for t in 0..trials {
        let s = derive_seed(seed, t);
        let mut node = tree::root(&proposal, s);
        for depth in 0..d {
            let m = node.span.mass();
            sum[depth] += m;
            sum_sq[depth] += m * m;
            if depth + 1 < d {
                let children = tree::expand(&node, kind, &proposal, s)?;
                node = children
                    .into_iter()
                    .max_by(|a, b| a.span.mass().total_cmp(&b.span.mass()))
                    .ok_or(Error::DegenerateRegion)?;
            }
        }
    }
    let eps: f64 = match kind {
        PartitionKind::SampleSplit => 0.75,
        PartitionKind::Dyadic => 0.5,
        PartitionKind::GlobalBound => 1.0,
    };
    let n = trials as f64;
    let depths: Vec<DepthShrinkage> = (0..d)
        .map(|i| {
            let mean = sum[i] / n;
            let var = ((sum_sq[i] / n - mean * mean) * n / (n - 1.0)).max(0.0);
            let se = (var / n).sqrt();
            let reference = eps.powi(i as i32);
            let passed = match kind {
                PartitionKind::SampleSplit => mean <= reference + 3.0 * se,
                _ => mean == reference,
            };
            DepthShrinkage {
                depth: i as u32 + 1,
                mean_mass: mean,
                std_error: se,
                reference,
                passed,
            }
        })
        .collect();
    let passed = depths.iter().all(|d| d.passed);
    Ok(ShrinkageReport {
        kind,
        trials,
        depths,
        passed,
    })
}
