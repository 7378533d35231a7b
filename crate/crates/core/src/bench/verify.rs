use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;

use super::summary::ks_test;
use super::verify_shrinkage;
use crate::bitstream::Message;
use crate::coders::{decode, CoderSpec, DEFAULT_PFR_MAX_STEPS};
use crate::distributions::{Distribution1D, MixtureComponent, PairSpec};
use crate::error::Result;
use crate::isokl::{
    decode_block_vector, encode_block_vector, gaussian_from_kl_dinf, gaussian_from_mean_kl,
    gaussian_unconstrained, lambert_w0, max_kl_for_dinf, uniform_from_mean_kl, BlockCodecConfig,
    IsoKLGaussianBlock,
};
use crate::randomness::{derive_seed, keyed_uniform, DrawSlot, StreamKey};
use crate::tree::PartitionKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Shrinkage,
    RoundTrip,
    Isokl,
    Exactness,
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> CheckOutcome {
    CheckOutcome {
        name: name.into(),
        passed,
        detail: detail.into(),
    }
}

/// Deterministic uniform stream for the randomized checks.
struct Draws {
    seed: u64,
    next: u64,
}

impl Draws {
    fn new(seed: u64) -> Self {
        Self { seed, next: 0 }
    }

    fn uniform(&mut self) -> f64 {
        self.next += 1;
        keyed_uniform(StreamKey::new(self.seed, self.next, DrawSlot::Sample))
    }

    fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    fn below(&mut self, n: u32) -> u32 {
        ((self.uniform() * n as f64) as u32).min(n - 1)
    }
}

/// A random pair with a finite density-ratio bound: a Gaussian, a uniform, or a
/// uniform mixture target.
fn random_pair(d: &mut Draws) -> Result<PairSpec> {
    match d.below(3) {
        0 => {
            let (nu, rho) = (d.range(-3.0, 3.0), d.range(0.2, 3.0));
            let (mu, s2) = gaussian_unconstrained(nu, rho, d.range(-3.0, 1.2), d.range(-1.5, 1.5))?;
            PairSpec::new(
                Distribution1D::gaussian(mu, s2)?,
                Distribution1D::gaussian(nu, rho * rho)?,
            )
        }
        1 => {
            let (c, w) = (d.range(-2.0, 2.0), d.range(0.5, 4.0));
            PairSpec::new(
                uniform_from_mean_kl(c, w, d.range(0.0, 3.0), d.range(-2.0, 2.0))?,
                Distribution1D::uniform(c, w)?,
            )
        }
        _ => {
            let n = 1 + d.below(4);
            let width = d.range(0.02, 0.2);
            let components = (0..n)
                .map(|i| {
                    let low = (i as f64 + d.range(0.0, 0.5)) / n as f64;
                    MixtureComponent {
                        weight: 1.0 / n as f64,
                        low,
                        high: low + width / n as f64,
                    }
                })
                .collect();
            PairSpec::new(
                Distribution1D::uniform_mixture(components)?,
                Distribution1D::uniform(0.5, 1.0)?,
            )
        }
    }
}

fn shrinkage(trials: u64, seed: u64) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    for kind in [PartitionKind::SampleSplit, PartitionKind::Dyadic] {
        let report = verify_shrinkage(kind, 10, trials.max(1000), seed)?;
        for d in &report.depths {
            out.push(check(
                format!("shrinkage {kind:?} depth {}", d.depth),
                d.passed,
                format!(
                    "mean mass {:.6} (se {:.2e}) vs {:.6}",
                    d.mean_mass, d.std_error, d.reference
                ),
            ));
        }
    }
    Ok(out)
}

fn round_trip(trials: u64, seed: u64) -> Result<Vec<CheckOutcome>> {
    let mut d = Draws::new(derive_seed(seed, 1));
    let mut failures = Vec::new();
    for i in 0..trials {
        let pair = random_pair(&mut d)?;
        let s = derive_seed(seed, i);
        let coder = match i % 5 {
            0 => CoderSpec::AsStar,
            1 => CoderSpec::AdStar,
            2 if pair.analytic_dinf() <= 5.0 => CoderSpec::Pfr {
                max_steps: DEFAULT_PFR_MAX_STEPS,
            },
            2 | 3 => CoderSpec::Dad {
                budget: 1 + d.below(16),
            },
            _ => CoderSpec::Mrc {
                budget: 4 + d.below(8),
            },
        };
        let e = match coder.encode(&pair, s) {
            Ok(e) => e,
            // a fixed budget can leave every candidate outside a narrow target
            Err(crate::Error::DegenerateTarget) => continue,
            Err(err) => return Err(err),
        };
        let bytes = Message::PerSymbol {
            variant: e.code.variant,
            codes: vec![e.code],
        }
        .to_bytes()?;
        let back = Message::from_bytes(&bytes)?.codes();
        let x = decode(pair.proposal(), &back[0], s)?;
        if back[0] != e.code || x.to_bits() != e.sample.to_bits() {
            failures.push(format!("trial {i} {:?}", e.code));
        }
    }
    let mut out = vec![check(
        format!("round trip x{trials}"),
        failures.is_empty(),
        failures.first().cloned().unwrap_or_default(),
    )];

    let dims = 50;
    let prior_means: Vec<f64> = (0..dims).map(|_| d.range(-2.0, 2.0)).collect();
    let prior_stds: Vec<f64> = (0..dims).map(|_| d.range(0.5, 2.0)).collect();
    let kappa: f64 = 3.0;
    let target_means: Vec<f64> = prior_means
        .iter()
        .zip(&prior_stds)
        .map(|(&m, &s)| m + 0.9 * s * (2.0 * kappa).sqrt() * d.range(-1.0, 1.0))
        .collect();
    let block = IsoKLGaussianBlock::new(prior_means, prior_stds, kappa, target_means)?;
    let enc = encode_block_vector(
        std::slice::from_ref(&block),
        &BlockCodecConfig::default(),
        seed,
    )?;
    let dec = decode_block_vector(&[block.prior()], &enc.bytes, seed)?;
    let exact = dec[0]
        .iter()
        .zip(&enc.samples[0])
        .all(|(a, b)| a.to_bits() == b.to_bits());
    out.push(check(
        "block round trip",
        exact,
        format!("{} bytes for {dims} coordinates", enc.bytes.len()),
    ));
    Ok(out)
}

fn gauss_kl(mu: f64, s2: f64, nu: f64, rho: f64) -> f64 {
    (rho / s2.sqrt()).ln() + (s2 + (mu - nu).powi(2)) / (2.0 * rho * rho) - 0.5
}

fn isokl(trials: u64, seed: u64) -> Result<Vec<CheckOutcome>> {
    let mut d = Draws::new(derive_seed(seed, 2));
    let mut worst = [0.0f64; 4];
    for _ in 0..trials {
        let (nu, rho, kappa) = (d.range(-5.0, 5.0), d.range(0.1, 5.0), d.range(1e-4, 8.0));
        let mu = nu + d.range(-0.99, 0.99) * rho * (2.0 * kappa).sqrt();
        let s2 = gaussian_from_mean_kl(nu, rho, mu, kappa)?;
        worst[0] = worst[0].max((gauss_kl(mu, s2, nu, rho) - kappa).abs());

        let r = d.range(0.01, 8.0);
        let k = d.range(0.001, 1.0) * max_kl_for_dinf(r);
        let (m, v) = gaussian_from_kl_dinf(k, r)?;
        let dinf = m * m / (2.0 * (1.0 - v)) - 0.5 * v.ln();
        worst[1] = worst[1]
            .max((gauss_kl(m, v, 0.0, 1.0) - k).abs())
            .max((dinf - r).abs());

        let (c, w) = (d.range(-3.0, 3.0), d.range(0.1, 5.0));
        let q = uniform_from_mean_kl(c, w, kappa, d.range(-3.0, 3.0))?;
        let pair = PairSpec::new(q, Distribution1D::uniform(c, w)?)?;
        worst[2] = worst[2].max((pair.analytic_kl()? - kappa).abs());

        let x = -1.0 / std::f64::consts::E + d.uniform().powi(3) * 50.0;
        let wv = lambert_w0(x)?;
        worst[3] = worst[3].max((wv * wv.exp() - x).abs() / x.abs().max(1.0));
    }
    Ok(vec![
        check(
            "isokl mean/kl",
            worst[0] <= 1e-9,
            format!("max error {:.2e} nats", worst[0]),
        ),
        check(
            "isokl kl/dinf",
            worst[1] <= 1e-9,
            format!("max error {:.2e} nats", worst[1]),
        ),
        check(
            "isokl uniform",
            worst[2] <= 1e-9,
            format!("max error {:.2e} nats", worst[2]),
        ),
        check(
            "lambert residual",
            worst[3] <= 1e-12,
            format!("max scaled residual {:.2e}", worst[3]),
        ),
    ])
}

fn exactness(trials: u64, seed: u64) -> Result<Vec<CheckOutcome>> {
    let n = trials.max(1000);
    let mut out = Vec::new();
    for r in [0.5, 1.0, 2.0] {
        let (mu, s2) = gaussian_from_kl_dinf(0.5 * max_kl_for_dinf(r), r)?;
        let target = Distribution1D::gaussian(mu, s2)?;
        let pair = PairSpec::new(target.clone(), Distribution1D::standard_normal())?;
        for coder in [
            CoderSpec::AsStar,
            CoderSpec::AdStar,
            CoderSpec::Pfr {
                max_steps: DEFAULT_PFR_MAX_STEPS,
            },
        ] {
            let xs = (0..n)
                .map(|i| coder.encode(&pair, derive_seed(seed, i)).map(|e| e.sample))
                .collect::<Result<Vec<_>>>()?;
            let ks = ks_test(&xs, |x| target.cdf(x));
            out.push(check(
                format!("exactness {:?} D_inf={r}", coder.variant()),
                ks.p_value > 0.01,
                format!(
                    "KS D={:.4} p={:.3} (n={n}, D_KL={:.2} bits)",
                    ks.statistic,
                    ks.p_value,
                    pair.analytic_kl()? / LN_2
                ),
            ));
        }
    }
    Ok(out)
}

/// Runs one property suite; every outcome carries a pass flag and a short detail.
pub fn run_suite(suite: Suite, trials: u64, seed: u64) -> Result<Vec<CheckOutcome>> {
    Ok(match suite {
        Suite::Shrinkage => shrinkage(trials, seed)?,
        Suite::RoundTrip => round_trip(trials, seed)?,
        Suite::Isokl => isokl(trials, seed)?,
        Suite::Exactness => exactness(trials, seed)?,
        Suite::All => {
            let mut all = shrinkage(trials, seed)?;
            all.extend(round_trip(trials, seed)?);
            all.extend(isokl(trials, seed)?);
            all.extend(exactness(trials, seed)?);
            all
        }
    })
}
