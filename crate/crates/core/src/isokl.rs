//! IsoKL parameterizations: targets specified by their KL (and optionally D∞) to
//! the proposal, so grouped coordinates share one codelength.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{E, LN_2};

use crate::bitstream::Message;
use crate::coders::{decode_dad, encode_dad, Code, Variant};
use crate::distributions::{Distribution1D, PairSpec};
use crate::error::{Error, Result};
use crate::randomness::derive_seed;

const BRANCH_POINT: f64 = -1.0 / E;

/// Principal branch `W0` of the Lambert W function on `[-1/e, inf)`.
///
/// Halley iteration from a branch-point series (near `-1/e`), Winitzki's
/// approximation (moderate `x`) or the asymptotic `ln x - ln ln x` (large `x`).
pub fn lambert_w0(x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::Domain("lambert_w0 of NaN".into()));
    }
    if x <= BRANCH_POINT {
        if BRANCH_POINT - x <= 4.0 * f64::EPSILON {
            return Ok(-1.0);
        }
        return Err(Error::Domain(format!(
            "lambert_w0 needs x >= -1/e, got {x}"
        )));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    let mut w = if x < -0.32 {
        let p = (2.0 * (E * x + 1.0)).max(0.0).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else if x < 3.0 {
        let l = x.ln_1p();
        l * (1.0 - (1.0 + l).ln() / (2.0 + l))
    } else {
        let l1 = x.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    };

    if x > 1e100 {
        // Newton on w + ln w = ln x avoids overflowing w e^w
        let lx = x.ln();
        for _ in 0..100 {
            let step = (w + w.ln() - lx) / (1.0 + 1.0 / w);
            w -= step;
            if step.abs() <= 1e-16 * w.abs() {
                break;
            }
        }
        return Ok(w);
    }

    for _ in 0..100 {
        let ew = w.exp();
        let f = w * ew - x;
        if f == 0.0 {
            break;
        }
        let wp1 = w + 1.0;
        if wp1 == 0.0 {
            break;
        }
        let next = w - f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        let done = (next - w).abs() <= 1e-16 * (1.0 + next.abs());
        w = next.max(-1.0);
        if done {
            break;
        }
    }
    Ok(w)
}

/// Target variance with `D_KL(N(mu, s2) || N(nu, rho^2)) = kappa` and `s2 < rho^2`.
pub fn gaussian_from_mean_kl(nu: f64, rho: f64, mu: f64, kappa: f64) -> Result<f64> {
    if !(rho > 0.0) || !(kappa >= 0.0) || !mu.is_finite() || !nu.is_finite() || !kappa.is_finite() {
        return Err(Error::Constraint(format!(
            "need rho > 0 and finite kappa >= 0, got rho={rho}, kappa={kappa}"
        )));
    }
    let delta = (mu - nu) / rho;
    if kappa == 0.0 {
        if delta == 0.0 {
            return Ok(rho * rho);
        }
        return Err(Error::Constraint("kappa = 0 requires mu = nu".into()));
    }
    if delta * delta >= 2.0 * kappa {
        return Err(Error::Constraint(format!(
            "|mu - nu| = {} must be below rho * sqrt(2 kappa) = {}",
            (mu - nu).abs(),
            rho * (2.0 * kappa).sqrt()
        )));
    }
    let w = lambert_w0(-(delta * delta - 2.0 * kappa - 1.0).exp())?;
    Ok(-rho * rho * w)
}

/// Unconstrained parameterization: `kappa = exp(alpha)` and
/// `mu = nu + rho sqrt(2 kappa) tanh(beta)`. Returns `(mu, s2)`.
pub fn gaussian_unconstrained(nu: f64, rho: f64, alpha: f64, beta: f64) -> Result<(f64, f64)> {
    let kappa = alpha.exp();
    let mut t = beta.tanh();
    if t.abs() >= 1.0 {
        t = t.signum() * (1.0 - f64::EPSILON);
    }
    let mu = nu + rho * (2.0 * kappa).sqrt() * t;
    let s2 = gaussian_from_mean_kl(nu, rho, mu, kappa)?;
    Ok((mu, s2))
}

/// Standardized Gaussian target with the given KL `k` and D∞ `r` (both in nats)
/// against `N(0, 1)`. Returns `(|mu|, s2)`; the sign of `mu` is free.
pub fn gaussian_from_kl_dinf(k: f64, r: f64) -> Result<(f64, f64)> {
    if !(k >= 0.0) || !(r >= k) || !r.is_finite() {
        return Err(Error::Infeasible(format!(
            "need 0 <= K <= R < inf, got K={k}, R={r}"
        )));
    }
    if r == 0.0 {
        return Ok((0.0, 1.0));
    }
    let a = 2.0 * r - 2.0 * k - 1.0;
    let b = 2.0 * r - 1.0;
    let arg = a * b.exp();
    if arg < BRANCH_POINT - 4.0 * f64::EPSILON {
        return Err(Error::Infeasible(format!("K={k} is too large for R={r}")));
    }
    let s2 = (lambert_w0(arg.max(BRANCH_POINT))? - b).exp();
    let mu2_kl = 2.0 * k - s2 + s2.ln() + 1.0;
    let mu2_dinf = (2.0 * r + s2.ln()) * (1.0 - s2);
    let mu2 = 0.5 * (mu2_kl + mu2_dinf);
    if mu2 < -1e-9 || (mu2_kl - mu2_dinf).abs() > 1e-9 * (1.0 + mu2.abs()) {
        return Err(Error::Infeasible(format!("K={k}, R={r} give mu^2 = {mu2}")));
    }
    Ok((mu2.max(0.0).sqrt(), s2))
}

/// Largest KL reachable at D∞ `r` (attained by the centred target).
pub fn max_kl_for_dinf(r: f64) -> f64 {
    r - 0.5 * (1.0 - (-2.0 * r).exp())
}

/// Uniform target of width `rho e^{-kappa}` inside `Uniform(nu, rho)`.
pub fn uniform_from_mean_kl(nu: f64, rho: f64, kappa: f64, beta: f64) -> Result<Distribution1D> {
    if !(kappa >= 0.0) || !(rho > 0.0) {
        return Err(Error::Constraint(format!(
            "need kappa >= 0 and rho > 0, got {kappa}, {rho}"
        )));
    }
    let sigma = rho * (-kappa).exp();
    let slack = 0.5 * (rho - sigma);
    let mut mu = nu + slack * beta.tanh();
    // keep the support inside the proposal despite rounding
    let (lo, hi) = (nu - 0.5 * rho, nu + 0.5 * rho);
    if mu - 0.5 * sigma < lo {
        mu = lo + 0.5 * sigma;
    }
    if mu + 0.5 * sigma > hi {
        mu = hi - 0.5 * sigma;
    }
    // the clamped edge can still round one ulp outside
    while mu - 0.5 * sigma < lo && mu + 0.5 * sigma < hi {
        mu = mu.next_up();
    }
    while mu + 0.5 * sigma > hi && mu - 0.5 * sigma > lo {
        mu = mu.next_down();
    }
    Distribution1D::uniform(mu, sigma)
}

/// Coordinates that share one KL and hence one DAD* budget.
#[derive(Debug, Clone, PartialEq)]
pub struct IsoKLGaussianBlock {
    pub prior_means: Vec<f64>,
    pub prior_stds: Vec<f64>,
    pub kappa: f64,
    pub target_means: Vec<f64>,
    pub target_variances: Vec<f64>,
}

impl IsoKLGaussianBlock {
    pub fn new(
        prior_means: Vec<f64>,
        prior_stds: Vec<f64>,
        kappa: f64,
        target_means: Vec<f64>,
    ) -> Result<Self> {
        if prior_means.len() != prior_stds.len() || prior_means.len() != target_means.len() {
            return Err(Error::Constraint("block vectors differ in length".into()));
        }
        let target_variances = prior_means
            .iter()
            .zip(&prior_stds)
            .zip(&target_means)
            .map(|((&nu, &rho), &mu)| gaussian_from_mean_kl(nu, rho, mu, kappa))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            prior_means,
            prior_stds,
            kappa,
            target_means,
            target_variances,
        })
    }

    pub fn len(&self) -> usize {
        self.prior_means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prior_means.is_empty()
    }

    pub fn prior(&self) -> BlockPrior {
        BlockPrior {
            means: self.prior_means.clone(),
            stds: self.prior_stds.clone(),
        }
    }

    pub fn pairs(&self) -> Result<Vec<PairSpec>> {
        (0..self.len())
            .map(|i| {
                PairSpec::new(
                    Distribution1D::gaussian(self.target_means[i], self.target_variances[i])?,
                    Distribution1D::gaussian(self.prior_means[i], self.prior_stds[i].powi(2))?,
                )
            })
            .collect()
    }
}

/// The proposal side of a block, all a decoder needs besides the message.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockPrior {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockCodecConfig {
    /// Bits spent beyond the block's KL: `D = ceil(kappa / ln 2) + extra_bits`.
    pub extra_bits: u32,
}

impl Default for BlockCodecConfig {
    fn default() -> Self {
        Self { extra_bits: 2 }
    }
}

impl BlockCodecConfig {
    pub fn budget(&self, kappa: f64) -> u32 {
        let bits = (kappa / LN_2 - 1e-9).ceil().max(0.0) as u32;
        (bits + self.extra_bits).max(1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockEncoding {
    pub message: Message,
    pub bytes: Vec<u8>,
    /// Encoded samples, per block, in coordinate order.
    pub samples: Vec<Vec<f64>>,
}

fn coordinate_seed(seed: u64, coordinate: usize) -> u64 {
    derive_seed(seed, coordinate as u64)
}

/// DAD*-codes every coordinate with its block's budget and frames the result as
/// one message with a single length header per block.
pub fn encode_block_vector(
    blocks: &[IsoKLGaussianBlock],
    config: &BlockCodecConfig,
    seed: u64,
) -> Result<BlockEncoding> {
    let mut offset = 0usize;
    let mut coded = Vec::with_capacity(blocks.len());
    let mut samples = Vec::with_capacity(blocks.len());
    for block in blocks {
        let budget = config.budget(block.kappa);
        let pairs = block.pairs()?;
        let results = pairs
            .par_iter()
            .enumerate()
            .map(|(i, pair)| encode_dad(pair, coordinate_seed(seed, offset + i), budget))
            .collect::<Result<Vec<_>>>()?;
        offset += block.len();
        coded.push(results.iter().map(|e| e.code).collect::<Vec<Code>>());
        samples.push(results.iter().map(|e| e.sample).collect());
    }
    let message = Message::Blocks {
        variant: Variant::Dad,
        blocks: coded,
    };
    let bytes = message.to_bytes()?;
    Ok(BlockEncoding {
        message,
        bytes,
        samples,
    })
}

pub fn decode_block_vector(
    priors: &[BlockPrior],
    bytes: &[u8],
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let message = Message::from_bytes(bytes)?;
    let Message::Blocks {
        variant: Variant::Dad,
        blocks,
    } = message
    else {
        return Err(Error::MalformedMessage(
            "expected a DAD* block message".into(),
        ));
    };
    if blocks.len() != priors.len() {
        return Err(Error::MalformedMessage(format!(
            "message has {} blocks, model has {}",
            blocks.len(),
            priors.len()
        )));
    }
    let mut offset = 0usize;
    let mut out = Vec::with_capacity(blocks.len());
    for (codes, prior) in blocks.iter().zip(priors) {
        if codes.len() != prior.means.len() || prior.means.len() != prior.stds.len() {
            return Err(Error::MalformedMessage("block length mismatch".into()));
        }
        let decoded = codes
            .par_iter()
            .enumerate()
            .map(|(i, code)| {
                let p = Distribution1D::gaussian(prior.means[i], prior.stds[i].powi(2))?;
                decode_dad(&p, code, coordinate_seed(seed, offset + i))
            })
            .collect::<Result<Vec<_>>>()?;
        offset += codes.len();
        out.push(decoded);
    }
    Ok(out)
}

/// Block model file: per-coordinate priors and target means, plus one KL per block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockModel {
    pub blocks: Vec<BlockKappa>,
    pub coordinates: Vec<CoordinateSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockKappa {
    pub block_id: u32,
    pub kappa: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoordinateSpec {
    pub prior_mean: f64,
    pub prior_std: f64,
    pub target_mean: f64,
    pub block_id: u32,
}

impl BlockModel {
    /// Groups coordinates by block, in the order blocks are listed.
    pub fn to_blocks(&self) -> Result<Vec<IsoKLGaussianBlock>> {
        self.check_ids()?;
        self.blocks
            .iter()
            .map(|b| {
                let coords: Vec<_> = self
                    .coordinates
                    .iter()
                    .filter(|c| c.block_id == b.block_id)
                    .collect();
                IsoKLGaussianBlock::new(
                    coords.iter().map(|c| c.prior_mean).collect(),
                    coords.iter().map(|c| c.prior_std).collect(),
                    b.kappa,
                    coords.iter().map(|c| c.target_mean).collect(),
                )
            })
            .collect()
    }

    pub fn priors(&self) -> Result<Vec<BlockPrior>> {
        self.check_ids()?;
        Ok(self
            .blocks
            .iter()
            .map(|b| {
                let coords = self.coordinates.iter().filter(|c| c.block_id == b.block_id);
                let (means, stds) = coords.map(|c| (c.prior_mean, c.prior_std)).unzip();
                BlockPrior { means, stds }
            })
            .collect())
    }

    /// Puts per-block values back into file order.
    pub fn scatter(&self, per_block: &[Vec<f64>]) -> Result<Vec<f64>> {
        let mut cursors = vec![0usize; self.blocks.len()];
        self.coordinates
            .iter()
            .map(|c| {
                let b = self
                    .blocks
                    .iter()
                    .position(|b| b.block_id == c.block_id)
                    .ok_or_else(|| {
                        Error::Constraint(format!(
                            "coordinate refers to unknown block {}",
                            c.block_id
                        ))
                    })?;
                let v = per_block
                    .get(b)
                    .and_then(|vals| vals.get(cursors[b]))
                    .copied()
                    .ok_or_else(|| Error::Constraint("block sample count mismatch".into()))?;
                cursors[b] += 1;
                Ok(v)
            })
            .collect()
    }

    fn check_ids(&self) -> Result<()> {
        for (i, b) in self.blocks.iter().enumerate() {
            if self.blocks[..i].iter().any(|o| o.block_id == b.block_id) {
                return Err(Error::Constraint(format!(
                    "duplicate block id {}",
                    b.block_id
                )));
            }
        }
        for c in &self.coordinates {
            if !self.blocks.iter().any(|b| b.block_id == c.block_id) {
                return Err(Error::Constraint(format!(
                    "coordinate refers to unknown block {}",
                    c.block_id
                )));
            }
        }
        Ok(())
    }
}
