use serde::{Deserialize, Serialize};
use std::path::PathBuf;

use crate::coders::{CoderSpec, DEFAULT_PFR_MAX_STEPS};
use crate::distributions::{Distribution1D, MixtureComponent, PairSpec};
use crate::error::{Error, Result};
use crate::isokl::{
    gaussian_from_kl_dinf, gaussian_from_mean_kl, uniform_from_mean_kl, BlockCodecConfig,
};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    AsStar,
    AdStar,
    Pfr,
    Dad,
    Mrc,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::AsStar => "as_star",
            Algorithm::AdStar => "ad_star",
            Algorithm::Pfr => "pfr",
            Algorithm::Dad => "dad",
            Algorithm::Mrc => "mrc",
        }
    }

    /// Whether the algorithm runs on a bit budget set by the extra-bit grid.
    pub fn is_budgeted(self) -> bool {
        matches!(self, Algorithm::Dad | Algorithm::Mrc)
    }

    pub fn coder(self, budget: u32, pfr_max_steps: u64) -> CoderSpec {
        match self {
            Algorithm::AsStar => CoderSpec::AsStar,
            Algorithm::AdStar => CoderSpec::AdStar,
            Algorithm::Pfr => CoderSpec::Pfr {
                max_steps: pfr_max_steps,
            },
            Algorithm::Dad => CoderSpec::Dad { budget },
            Algorithm::Mrc => CoderSpec::Mrc { budget },
        }
    }
}

/// One problem in a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum CellSpec {
    /// Gaussian target against `N(0, 1)` with the given KL and D∞.
    Gaussian { d_kl_nats: f64, d_inf_nats: f64 },
    /// Zero-mean Gaussian target against `N(0, 1)` with the given KL.
    GaussianCentered { d_kl_nats: f64 },
    /// Uniform target of width `e^{-kappa}` centred in `Uniform(0, 1)`.
    Uniform { d_kl_nats: f64 },
    /// `n_modes` equal-mass uniform bumps spread over `Uniform(0, 1)`, each of
    /// density `e^{d_inf}`.
    Mixture { d_inf_nats: f64, n_modes: u32 },
}

impl CellSpec {
    pub fn family(&self) -> &'static str {
        match self {
            CellSpec::Gaussian { .. } | CellSpec::GaussianCentered { .. } => "gaussian",
            CellSpec::Uniform { .. } => "uniform",
            CellSpec::Mixture { .. } => "mixture",
        }
    }

    pub fn n_modes(&self) -> u32 {
        match *self {
            CellSpec::Mixture { n_modes, .. } => n_modes,
            _ => 1,
        }
    }

    pub fn pair(&self) -> Result<PairSpec> {
        match *self {
            CellSpec::Gaussian {
                d_kl_nats,
                d_inf_nats,
            } => {
                let (mu, s2) = gaussian_from_kl_dinf(d_kl_nats, d_inf_nats)?;
                PairSpec::new(
                    Distribution1D::gaussian(mu, s2)?,
                    Distribution1D::standard_normal(),
                )
            }
            CellSpec::GaussianCentered { d_kl_nats } => PairSpec::new(
                Distribution1D::gaussian(0.0, gaussian_from_mean_kl(0.0, 1.0, 0.0, d_kl_nats)?)?,
                Distribution1D::standard_normal(),
            ),
            CellSpec::Uniform { d_kl_nats } => PairSpec::new(
                uniform_from_mean_kl(0.5, 1.0, d_kl_nats, 0.0)?,
                Distribution1D::uniform(0.5, 1.0)?,
            ),
            CellSpec::Mixture {
                d_inf_nats,
                n_modes,
            } => {
                if n_modes == 0 || !(d_inf_nats >= 0.0) {
                    return Err(Error::InvalidParameters(format!(
                        "mixture cell needs n_modes >= 1 and d_inf >= 0, got {n_modes}, {d_inf_nats}"
                    )));
                }
                let n = n_modes as f64;
                let half = 0.5 * (-d_inf_nats).exp() / n;
                let components = (0..n_modes)
                    .map(|i| {
                        let c = (i as f64 + 0.5) / n;
                        MixtureComponent {
                            weight: 1.0 / n,
                            low: c - half,
                            high: c + half,
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
}

fn default_trials() -> u32 {
    1
}
fn default_extra_bits() -> Vec<u32> {
    vec![2]
}
fn default_bias_repeats() -> u32 {
    50
}
fn default_batch_size() -> u32 {
    100
}
fn default_pfr_max_dinf() -> f64 {
    7.0
}
fn default_pfr_max_steps() -> u64 {
    DEFAULT_PFR_MAX_STEPS
}
fn default_version() -> u32 {
    CONFIG_VERSION
}

/// Experiment description, read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_version")]
    pub version: u32,
    pub algorithms: Vec<Algorithm>,
    pub cells: Vec<CellSpec>,
    #[serde(default = "default_trials")]
    pub trials: u32,
    #[serde(default)]
    pub seed: u64,
    /// Bits above `ceil(D_KL)` given to budgeted algorithms.
    #[serde(default = "default_extra_bits")]
    pub extra_bits: Vec<u32>,
    /// Bias estimates per (cell, algorithm, extra bits).
    #[serde(default = "default_bias_repeats")]
    pub bias_repeats: u32,
    /// Encoded samples per bias estimate.
    #[serde(default = "default_batch_size")]
    pub batch_size: u32,
    /// PFR is skipped on cells with a larger D∞.
    #[serde(default = "default_pfr_max_dinf")]
    pub pfr_max_dinf_nats: f64,
    #[serde(default = "default_pfr_max_steps")]
    pub pfr_max_steps: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(algorithms: Vec<Algorithm>, cells: Vec<CellSpec>, trials: u32) -> Self {
        Self {
            version: CONFIG_VERSION,
            algorithms,
            cells,
            trials,
            seed: 0,
            extra_bits: default_extra_bits(),
            bias_repeats: default_bias_repeats(),
            batch_size: default_batch_size(),
            pfr_max_dinf_nats: default_pfr_max_dinf(),
            pfr_max_steps: default_pfr_max_steps(),
            out: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)
            .map_err(|e| Error::InvalidParameters(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameters(m.to_string()));
        if self.version != CONFIG_VERSION {
            return bad(&format!("unsupported config version {}", self.version));
        }
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if self.algorithms.is_empty() || self.cells.is_empty() {
            return bad("algorithms and cells must be non-empty");
        }
        if self.algorithms.iter().any(|a| a.is_budgeted()) && self.extra_bits.is_empty() {
            return bad("budgeted algorithms need a non-empty extra_bits grid");
        }
        if self.bias_repeats == 0 || self.batch_size < 2 {
            return bad("bias_repeats must be >= 1 and batch_size >= 2");
        }
        for cell in &self.cells {
            cell.pair()?;
        }
        Ok(())
    }
}

/// Bit budget for a budgeted coder: `ceil(D_KL in bits) + extra`.
pub fn budget_for(d_kl_nats: f64, extra_bits: u32) -> u32 {
    BlockCodecConfig { extra_bits }.budget(d_kl_nats)
}
