//! One-dimensional target/proposal distributions.
//!
//! A [`PairSpec`] couples a target `Q` with a proposal `P` and exposes everything
//! the coders need: the log density ratio `log dQ/dP`, a tight upper bound of that
//! ratio over an interval, the ratio mode, and closed-form KL and D∞ divergences.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const MIXTURE_WEIGHT_TOL: f64 = 1e-12;

/// Standard normal CDF.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

/// Standard normal quantile for `p` in `(0, 1)`.
///
/// Acklam's rational approximation followed by one Halley correction against the
/// erfc-based CDF. The upper half is mapped through the exact reflection
/// `1 - p`, so both tails keep full relative precision.
pub fn std_normal_inv(p: f64) -> f64 {
    if p > 0.5 {
        return -std_normal_inv_lower(1.0 - p);
    }
    std_normal_inv_lower(p)
}

fn std_normal_inv_lower(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };

    let e = std_normal_cdf(x) - p;
    let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
    let refined = x - u / (1.0 + 0.5 * x * u);
    if refined.is_finite() {
        refined
    } else {
        x
    }
}

/// One piece of a uniform mixture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    pub low: f64,
    pub high: f64,
}

impl MixtureComponent {
    fn log_density(&self) -> f64 {
        (self.weight / (self.high - self.low)).ln()
    }
}

/// A continuous distribution on the real line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDistribution", into = "RawDistribution")]
pub enum Distribution1D {
    Gaussian {
        mean: f64,
        variance: f64,
    },
    Uniform {
        center: f64,
        width: f64,
    },
    /// Components are kept sorted by `low`; intervals are pairwise disjoint.
    UniformMixture {
        components: Vec<MixtureComponent>,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
enum RawDistribution {
    Gaussian { mean: f64, variance: f64 },
    Uniform { center: f64, width: f64 },
    UniformMixture { components: Vec<MixtureComponent> },
}

impl TryFrom<RawDistribution> for Distribution1D {
    type Error = Error;

    fn try_from(raw: RawDistribution) -> Result<Self> {
        match raw {
            RawDistribution::Gaussian { mean, variance } => Self::gaussian(mean, variance),
            RawDistribution::Uniform { center, width } => Self::uniform(center, width),
            RawDistribution::UniformMixture { components } => Self::uniform_mixture(components),
        }
    }
}

impl From<Distribution1D> for RawDistribution {
    fn from(d: Distribution1D) -> Self {
        match d {
            Distribution1D::Gaussian { mean, variance } => {
                RawDistribution::Gaussian { mean, variance }
            }
            Distribution1D::Uniform { center, width } => RawDistribution::Uniform { center, width },
            Distribution1D::UniformMixture { components } => {
                RawDistribution::UniformMixture { components }
            }
        }
    }
}

impl Distribution1D {
    pub fn gaussian(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() || !(variance > 0.0 && variance.is_finite()) {
            return Err(Error::InvalidParameters(format!(
                "gaussian needs finite mean and positive variance, got ({mean}, {variance})"
            )));
        }
        Ok(Self::Gaussian { mean, variance })
    }

    pub fn standard_normal() -> Self {
        Self::Gaussian {
            mean: 0.0,
            variance: 1.0,
        }
    }

    pub fn uniform(center: f64, width: f64) -> Result<Self> {
        if !center.is_finite() || !(width > 0.0 && width.is_finite()) {
            return Err(Error::InvalidParameters(format!(
                "uniform needs finite center and positive width, got ({center}, {width})"
            )));
        }
        Ok(Self::Uniform { center, width })
    }

    pub fn uniform_mixture(mut components: Vec<MixtureComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidParameters("mixture has no components".into()));
        }
        for c in &components {
            if !(c.weight > 0.0) || !c.low.is_finite() || !c.high.is_finite() || c.low >= c.high {
                return Err(Error::InvalidParameters(format!(
                    "bad mixture component {c:?}"
                )));
            }
        }
        components.sort_by(|a, b| a.low.total_cmp(&b.low));
        if components.windows(2).any(|w| w[0].high > w[1].low) {
            return Err(Error::InvalidParameters(
                "mixture components overlap".into(),
            ));
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > MIXTURE_WEIGHT_TOL {
            return Err(Error::InvalidParameters(format!(
                "mixture weights sum to {total}, expected 1"
            )));
        }
        Ok(Self::UniformMixture { components })
    }

    /// Closed support `[low, high]` (infinite for Gaussians).
    pub fn support(&self) -> (f64, f64) {
        match self {
            Self::Gaussian { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Self::Uniform { center, width } => (center - 0.5 * width, center + 0.5 * width),
            Self::UniformMixture { components } => {
                (components[0].low, components[components.len() - 1].high)
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Self::Gaussian { mean, .. } => *mean,
            Self::Uniform { center, .. } => *center,
            Self::UniformMixture { components } => components
                .iter()
                .map(|c| c.weight * 0.5 * (c.low + c.high))
                .sum(),
        }
    }

    pub fn log_pdf(&self, x: f64) -> f64 {
        match self {
            Self::Gaussian { mean, variance } => {
                let d = x - mean;
                -0.5 * d * d / variance - 0.5 * variance.ln() - LN_SQRT_2PI
            }
            Self::Uniform { center, width } => {
                if (x - center).abs() < 0.5 * width {
                    -width.ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            Self::UniformMixture { components } => components
                .iter()
                .find(|c| c.low < x && x < c.high)
                .map_or(f64::NEG_INFINITY, MixtureComponent::log_density),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.log_pdf(x).exp()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Self::Gaussian { mean, variance } => {
                if x == f64::INFINITY {
                    return 1.0;
                }
                std_normal_cdf((x - mean) / variance.sqrt())
            }
            Self::Uniform { center, width } => {
                ((x - (center - 0.5 * width)) / width).clamp(0.0, 1.0)
            }
            Self::UniformMixture { components } => {
                let mut acc = 0.0;
                for c in components {
                    if x >= c.high {
                        acc += c.weight;
                    } else {
                        if x > c.low {
                            acc += c.weight * (x - c.low) / (c.high - c.low);
                        }
                        break;
                    }
                }
                acc.min(1.0)
            }
        }
    }

    /// Survival function `1 - cdf(x)`, accurate in the upper tail.
    pub fn sf(&self, x: f64) -> f64 {
        match self {
            Self::Gaussian { mean, variance } => {
                if x == f64::NEG_INFINITY {
                    return 1.0;
                }
                std_normal_cdf((mean - x) / variance.sqrt())
            }
            _ => 1.0 - self.cdf(x),
        }
    }

    /// Quantile function on the open unit interval.
    pub fn inv_cdf(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::Domain(format!("inv_cdf needs u in (0, 1), got {u}")));
        }
        Ok(self.quantile(u))
    }

    /// Quantile on the closed unit interval: `0` and `1` map to the support ends.
    pub(crate) fn quantile(&self, u: f64) -> f64 {
        let (lo, hi) = self.support();
        if u <= 0.0 {
            return lo;
        }
        if u >= 1.0 {
            return hi;
        }
        match self {
            Self::Gaussian { mean, variance } => mean + variance.sqrt() * std_normal_inv(u),
            Self::Uniform { width, .. } => lo + u * width,
            Self::UniformMixture { components } => {
                let mut acc = 0.0;
                for c in components {
                    if u <= acc + c.weight {
                        let frac = ((u - acc) / c.weight).clamp(0.0, 1.0);
                        return c.low + frac * (c.high - c.low);
                    }
                    acc += c.weight;
                }
                hi
            }
        }
    }

    /// Probability mass of an open interval.
    pub fn mass(&self, region: &Region) -> f64 {
        if let Self::Gaussian { mean, .. } = self {
            if region.low >= *mean {
                return (self.sf(region.low) - self.sf(region.high)).max(0.0);
            }
        }
        (self.cdf(region.high) - self.cdf(region.low)).max(0.0)
    }

    /// Inverse-CDF draw from the distribution restricted to `region`.
    pub fn sample_restricted(&self, region: &Region, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::Domain(format!(
                "sample_restricted needs u in (0, 1), got {u}"
            )));
        }
        if self.mass(region) <= 0.0 {
            return Err(Error::DegenerateRegion);
        }
        let x = match self {
            Self::Gaussian { mean, variance } if region.low >= *mean => {
                let s_lo = self.sf(region.low);
                let s_hi = self.sf(region.high);
                let s = s_lo - u * (s_lo - s_hi);
                mean - variance.sqrt() * std_normal_inv(s)
            }
            _ => {
                let c_lo = self.cdf(region.low);
                let c_hi = self.cdf(region.high);
                self.quantile(c_lo + u * (c_hi - c_lo))
            }
        };
        Ok(x.clamp(region.low, region.high))
    }
}

/// An open interval `(low, high)` of the extended real line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub low: f64,
    pub high: f64,
}

impl Region {
    pub fn new(low: f64, high: f64) -> Result<Self> {
        if low < high {
            Ok(Self { low, high })
        } else {
            Err(Error::Domain(format!(
                "region needs low < high, got ({low}, {high})"
            )))
        }
    }

    pub const fn full() -> Self {
        Self {
            low: f64::NEG_INFINITY,
            high: f64::INFINITY,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.low < x && x < self.high
    }

    pub fn intersect(&self, other: &Region) -> Option<Region> {
        let low = self.low.max(other.low);
        let high = self.high.min(other.high);
        (low < high).then_some(Region { low, high })
    }
}

/// A piece of the real line on which `log dQ/dP` has a single closed form.
#[derive(Debug, Clone, Copy)]
enum RatioPiece {
    /// Gaussian target against Gaussian proposal on the whole line; the log ratio
    /// is the quadratic `a x^2 + b x + c`.
    Quadratic { a: f64, b: f64 },
    /// Flat target density `exp(log_q)` on `(low, high)`.
    Flat { low: f64, high: f64, log_q: f64 },
}

/// A target/proposal pair with `Q << P`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPair")]
pub struct PairSpec {
    target: Distribution1D,
    proposal: Distribution1D,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPair {
    target: Distribution1D,
    proposal: Distribution1D,
}

impl TryFrom<RawPair> for PairSpec {
    type Error = Error;

    fn try_from(raw: RawPair) -> Result<Self> {
        Self::new(raw.target, raw.proposal)
    }
}

impl PairSpec {
    pub fn new(target: Distribution1D, proposal: Distribution1D) -> Result<Self> {
        use Distribution1D::*;
        match (&target, &proposal) {
            (_, UniformMixture { .. }) => {
                return Err(Error::InvalidParameters(
                    "proposal must be gaussian or uniform".into(),
                ))
            }
            (Gaussian { .. }, Uniform { .. }) => return Err(Error::AbsoluteContinuity),
            (Uniform { .. } | UniformMixture { .. }, Uniform { .. }) => {
                let (tl, th) = target.support();
                let (pl, ph) = proposal.support();
                if tl < pl || th > ph {
                    return Err(Error::AbsoluteContinuity);
                }
            }
            _ => {}
        }
        Ok(Self { target, proposal })
    }

    pub fn target(&self) -> &Distribution1D {
        &self.target
    }

    pub fn proposal(&self) -> &Distribution1D {
        &self.proposal
    }

    /// Always true for a constructed pair; construction rejects `Q` not `<< P`.
    pub fn is_absolutely_continuous(&self) -> bool {
        true
    }

    /// `log q(x) - log p(x)`; `-inf` where `q` vanishes inside the support of `P`.
    pub fn log_ratio(&self, x: f64) -> Result<f64> {
        let (lo, hi) = self.proposal.support();
        if !(x >= lo && x <= hi) || x.is_nan() {
            return Err(Error::Domain(format!(
                "{x} is outside the proposal support"
            )));
        }
        Ok(self.log_ratio_unchecked(x))
    }

    pub(crate) fn log_ratio_unchecked(&self, x: f64) -> f64 {
        let lq = self.target.log_pdf(x);
        if lq == f64::NEG_INFINITY {
            return lq;
        }
        lq - self.proposal_log_density(x)
    }

    /// Proposal log density without the support indicator.
    fn proposal_log_density(&self, x: f64) -> f64 {
        match &self.proposal {
            Distribution1D::Uniform { width, .. } => -width.ln(),
            p => p.log_pdf(x),
        }
    }

    fn pieces(&self) -> Vec<RatioPiece> {
        use Distribution1D::*;
        match (&self.target, &self.proposal) {
            (
                Gaussian {
                    mean: mq,
                    variance: vq,
                },
                Gaussian {
                    mean: mp,
                    variance: vp,
                },
            ) => {
                vec![RatioPiece::Quadratic {
                    a: 0.5 / vp - 0.5 / vq,
                    b: mq / vq - mp / vp,
                }]
            }
            (Uniform { center, width }, _) => vec![RatioPiece::Flat {
                low: center - 0.5 * width,
                high: center + 0.5 * width,
                log_q: -width.ln(),
            }],
            (UniformMixture { components }, _) => components
                .iter()
                .map(|c| RatioPiece::Flat {
                    low: c.low,
                    high: c.high,
                    log_q: c.log_density(),
                })
                .collect(),
            (Gaussian { .. }, _) => unreachable!("rejected at construction"),
        }
    }

    fn piece_value(&self, piece: &RatioPiece, x: f64) -> f64 {
        match piece {
            RatioPiece::Quadratic { .. } => self.log_ratio_unchecked(x),
            RatioPiece::Flat { log_q, .. } => log_q - self.proposal_log_density(x),
        }
    }

    /// Curvature and slope of the log ratio on a piece.
    fn piece_shape(&self, piece: &RatioPiece) -> (f64, f64) {
        match (piece, &self.proposal) {
            (RatioPiece::Quadratic { a, b }, _) => (*a, *b),
            (RatioPiece::Flat { .. }, Distribution1D::Gaussian { mean, variance }) => {
                (0.5 / variance, -mean / variance)
            }
            (RatioPiece::Flat { .. }, _) => (0.0, 0.0),
        }
    }

    /// Supremum of the piece over `region` and the point attaining it.
    fn piece_sup(&self, piece: &RatioPiece, region: &Region) -> Option<(f64, f64)> {
        let span = match piece {
            RatioPiece::Quadratic { .. } => *region,
            RatioPiece::Flat { low, high, .. } => region.intersect(&Region {
                low: *low,
                high: *high,
            })?,
        };
        let (a, b) = self.piece_shape(piece);
        let endpoint = |x: f64, dir: f64| -> f64 {
            if x.is_finite() {
                return self.piece_value(piece, x);
            }
            if a > 0.0 {
                f64::INFINITY
            } else if a < 0.0 {
                f64::NEG_INFINITY
            } else if b * dir > 0.0 {
                f64::INFINITY
            } else if b * dir < 0.0 {
                f64::NEG_INFINITY
            } else {
                self.piece_value(piece, 0.0)
            }
        };
        let mut best = (endpoint(span.low, -1.0), span.low);
        let hi = (endpoint(span.high, 1.0), span.high);
        if hi.0 > best.0 {
            best = hi;
        }
        if a < 0.0 {
            let vertex = -b / (2.0 * a);
            if span.contains(vertex) {
                let v = self.piece_value(piece, vertex);
                if v >= best.0 {
                    best = (v, vertex);
                }
            }
        } else if a == 0.0 && b == 0.0 {
            // constant piece: any interior point attains the sup
            let mid = if span.low.is_finite() && span.high.is_finite() {
                0.5 * (span.low + span.high)
            } else {
                best.1
            };
            best.1 = mid;
        }
        Some(best)
    }

    /// Tight upper bound `M(region)` on `log_ratio` over the open interval.
    pub fn bound_m(&self, region: &Region) -> f64 {
        self.pieces()
            .iter()
            .filter_map(|p| self.piece_sup(p, region))
            .map(|(v, _)| v)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// A global maximiser of `log_ratio`.
    pub fn ratio_mode(&self) -> Result<f64> {
        use Distribution1D::*;
        if let (
            Gaussian {
                mean: mq,
                variance: vq,
            },
            Gaussian {
                mean: mp,
                variance: vp,
            },
        ) = (&self.target, &self.proposal)
        {
            if vq < vp {
                return Ok((mq * vp - mp * vq) / (vp - vq));
            }
            if vq == vp && mq == mp {
                return Ok(*mp);
            }
            return Err(Error::UnboundedRatio);
        }
        let full = Region::full();
        let (value, x) = self
            .pieces()
            .iter()
            .filter_map(|p| self.piece_sup(p, &full))
            .fold((f64::NEG_INFINITY, f64::NAN), |acc, c| {
                if c.0 > acc.0 {
                    c
                } else {
                    acc
                }
            });
        if value.is_infinite() {
            return Err(Error::UnboundedRatio);
        }
        Ok(x)
    }

    /// `D_KL(Q || P)` in nats.
    pub fn analytic_kl(&self) -> Result<f64> {
        use Distribution1D::*;
        match (&self.target, &self.proposal) {
            (
                Gaussian {
                    mean: mq,
                    variance: vq,
                },
                Gaussian {
                    mean: mp,
                    variance: vp,
                },
            ) => {
                let d = mq - mp;
                Ok((0.5 * (vp / vq).ln() + (vq + d * d) / (2.0 * vp) - 0.5).max(0.0))
            }
            (_, proposal) => {
                let (mut kl, mut total) = (0.0, 0.0);
                for piece in self.pieces() {
                    let RatioPiece::Flat { low, high, log_q } = piece else {
                        unreachable!()
                    };
                    let weight = log_q.exp() * (high - low);
                    let expected_log_p = match proposal {
                        Gaussian { mean, variance } => {
                            // E[(X - mean)^2] for X uniform on (low, high)
                            let m2 = ((high - mean).powi(3) - (low - mean).powi(3))
                                / (3.0 * (high - low));
                            -0.5 * m2 / variance - 0.5 * variance.ln() - LN_SQRT_2PI
                        }
                        _ => self.proposal_log_density(0.5 * (low + high)),
                    };
                    kl += weight * (log_q - expected_log_p);
                    total += weight;
                }
                // the weights sum to one up to rounding of narrow pieces far from 0
                Ok((kl / total).max(0.0))
            }
        }
    }

    /// `D_inf(Q || P) = log sup dQ/dP` in nats, `+inf` when unbounded.
    pub fn analytic_dinf(&self) -> f64 {
        use Distribution1D::*;
        match (&self.target, &self.proposal) {
            (
                Gaussian {
                    mean: mq,
                    variance: vq,
                },
                Gaussian {
                    mean: mp,
                    variance: vp,
                },
            ) => {
                if vq < vp {
                    // standardize by the proposal
                    let mu = (mq - mp) / vp.sqrt();
                    let s2 = vq / vp;
                    mu * mu / (2.0 * (1.0 - s2)) - 0.5 * s2.ln()
                } else if vq == vp && mq == mp {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            _ => self.bound_m(&Region::full()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    fn n01() -> Distribution1D {
        Distribution1D::standard_normal()
    }

    /// Composite Simpson integral of the standard normal pdf on (-12, x).
    fn simpson_normal_cdf(x: f64) -> f64 {
        let (a, n) = (-12.0, 20_000);
        let h = (x - a) / n as f64;
        let f = |t: f64| (-0.5 * t * t).exp() / (2.0 * PI).sqrt();
        let mut s = f(a) + f(x);
        for i in 1..n {
            let t = a + i as f64 * h;
            s += if i % 2 == 1 { 4.0 * f(t) } else { 2.0 * f(t) };
        }
        s * h / 3.0
    }

    fn bisect(mut lo: f64, mut hi: f64, target: f64, f: impl Fn(f64) -> f64) -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn cdf_examples() {
        assert_eq!(n01().cdf(0.0), 0.5);
        let u = Distribution1D::uniform(0.5, 1.0).unwrap();
        assert!((u.cdf(0.25) - 0.25).abs() < 1e-15);
        let oracle = simpson_normal_cdf(0.6745);
        assert!((oracle - 0.75).abs() < 1e-4);
        assert!((n01().cdf(0.6745) - oracle).abs() < 1e-9);
    }

    #[test]
    fn inv_cdf_examples() {
        assert_eq!(n01().inv_cdf(0.5).unwrap(), 0.0);
        let u = Distribution1D::uniform(0.5, 1.0).unwrap();
        assert!((u.inv_cdf(0.75).unwrap() - 0.75).abs() < 1e-15);
        let oracle = bisect(0.0, 5.0, 0.975, simpson_normal_cdf);
        assert!((oracle - 1.95996).abs() < 1e-4);
        assert!((n01().inv_cdf(0.975).unwrap() - oracle).abs() < 1e-7);
        assert!(n01().inv_cdf(0.0).is_err());
        assert!(n01().inv_cdf(1.0).is_err());
    }

    #[test]
    fn inv_cdf_round_trip_all_families() {
        let mix = Distribution1D::uniform_mixture(vec![
            MixtureComponent {
                weight: 0.25,
                low: 0.1,
                high: 0.2,
            },
            MixtureComponent {
                weight: 0.75,
                low: 0.5,
                high: 0.9,
            },
        ])
        .unwrap();
        let families = [
            n01(),
            Distribution1D::gaussian(3.0, 0.01).unwrap(),
            Distribution1D::uniform(-2.0, 3.0).unwrap(),
            mix,
        ];
        for d in &families {
            for i in 1..10_000 {
                let u = i as f64 / 10_000.0;
                let x = d.inv_cdf(u).unwrap();
                assert!((d.cdf(x) - u).abs() <= 1e-9, "{d:?} u={u}");
            }
        }
        // tails keep relative precision
        for &u in &[1e-300, 1e-100, 1e-20, 1e-8] {
            let x = n01().inv_cdf(u).unwrap();
            assert!(((n01().cdf(x) - u) / u).abs() < 1e-9);
            // 1 - u is rounded, so mirror against the tail mass actually requested
            let upper = 1.0 - u.max(1e-15);
            let y = n01().inv_cdf(upper).unwrap();
            assert!((y + n01().inv_cdf(1.0 - upper).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn sample_restricted_examples() {
        let full = Region::full();
        assert_eq!(n01().sample_restricted(&full, 0.5).unwrap(), 0.0);
        let u = Distribution1D::uniform(0.5, 1.0).unwrap();
        let r = Region::new(0.0, 0.5).unwrap();
        assert!((u.sample_restricted(&r, 0.5).unwrap() - 0.25).abs() < 1e-15);
        let oracle = bisect(0.0, 5.0, 0.75, simpson_normal_cdf);
        let pos = Region::new(0.0, f64::INFINITY).unwrap();
        assert!((n01().sample_restricted(&pos, 0.5).unwrap() - oracle).abs() < 1e-7);
        let dead = Region::new(2.0, 3.0).unwrap();
        assert_eq!(
            u.sample_restricted(&dead, 0.5),
            Err(Error::DegenerateRegion)
        );
    }

    #[test]
    fn sample_restricted_stays_in_far_tail_region() {
        let r = Region::new(8.0, 8.5).unwrap();
        for i in 1..100 {
            let x = n01().sample_restricted(&r, i as f64 / 100.0).unwrap();
            assert!((8.0..=8.5).contains(&x));
        }
    }

    #[test]
    fn log_ratio_examples() {
        let same = PairSpec::new(n01(), n01()).unwrap();
        assert_eq!(same.log_ratio(1.3).unwrap(), 0.0);
        let pair = PairSpec::new(Distribution1D::gaussian(0.0, 0.25).unwrap(), n01()).unwrap();
        // oracle: direct pdf ratio
        let q0 = 1.0 / (2.0 * PI * 0.25).sqrt();
        let p0 = 1.0 / (2.0 * PI).sqrt();
        assert!((pair.log_ratio(0.0).unwrap() - (q0 / p0).ln()).abs() < 1e-12);
        assert!((pair.log_ratio(0.0).unwrap() - LN_2).abs() < 1e-12);
        let mix = Distribution1D::uniform_mixture(vec![MixtureComponent {
            weight: 1.0,
            low: 0.0,
            high: 0.5,
        }])
        .unwrap();
        let up = PairSpec::new(mix, Distribution1D::uniform(0.5, 1.0).unwrap()).unwrap();
        assert!((up.log_ratio(0.25).unwrap() - LN_2).abs() < 1e-15);
        assert_eq!(up.log_ratio(0.75).unwrap(), f64::NEG_INFINITY);
        assert!(up.log_ratio(1.5).is_err());
    }

    #[test]
    fn pair_validation() {
        let u = Distribution1D::uniform(0.0, 1.0).unwrap();
        assert_eq!(
            PairSpec::new(n01(), u.clone()),
            Err(Error::AbsoluteContinuity)
        );
        let wide = Distribution1D::uniform(0.0, 2.0).unwrap();
        assert_eq!(
            PairSpec::new(wide, u.clone()),
            Err(Error::AbsoluteContinuity)
        );
        assert!(PairSpec::new(u, n01()).is_ok());
        assert!(Distribution1D::gaussian(0.0, 0.0).is_err());
        assert!(Distribution1D::uniform_mixture(vec![
            MixtureComponent {
                weight: 0.5,
                low: 0.0,
                high: 0.6
            },
            MixtureComponent {
                weight: 0.5,
                low: 0.5,
                high: 0.9
            },
        ])
        .is_err());
    }

    #[test]
    fn bound_m_examples() {
        let pair = PairSpec::new(Distribution1D::gaussian(0.0, 0.25).unwrap(), n01()).unwrap();
        assert!((pair.bound_m(&Region::full()) - pair.analytic_dinf()).abs() < 1e-12);
        let left = Region::new(f64::NEG_INFINITY, -1.0).unwrap();
        assert_eq!(pair.bound_m(&left), pair.log_ratio(-1.0).unwrap());
        let mid = Region::new(-1.0, 1.0).unwrap();
        let grid_max = (0..=10_000)
            .map(|i| -1.0 + 2.0 * i as f64 / 10_000.0)
            .map(|x| pair.log_ratio(x).unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((pair.bound_m(&mid) - grid_max).abs() < 1e-9);
        assert!((grid_max - LN_2).abs() < 1e-9);
    }

    #[test]
    fn bound_m_handles_unbounded_ratio_on_finite_regions() {
        let pair = PairSpec::new(Distribution1D::gaussian(0.0, 4.0).unwrap(), n01()).unwrap();
        assert_eq!(pair.bound_m(&Region::full()), f64::INFINITY);
        let r = Region::new(-1.0, 2.0).unwrap();
        assert_eq!(pair.bound_m(&r), pair.log_ratio(2.0).unwrap());
    }

    #[test]
    fn ratio_mode_examples() {
        let pair = PairSpec::new(Distribution1D::gaussian(0.0, 0.25).unwrap(), n01()).unwrap();
        assert_eq!(pair.ratio_mode().unwrap(), 0.0);
        let shifted = PairSpec::new(Distribution1D::gaussian(1.0, 0.25).unwrap(), n01()).unwrap();
        let grid_arg = (0..=40_000)
            .map(|i| -2.0 + 6.0 * i as f64 / 40_000.0)
            .max_by(|a, b| {
                shifted
                    .log_ratio(*a)
                    .unwrap()
                    .total_cmp(&shifted.log_ratio(*b).unwrap())
            })
            .unwrap();
        assert!((grid_arg - 4.0 / 3.0).abs() < 1e-3);
        assert!((shifted.ratio_mode().unwrap() - 4.0 / 3.0).abs() < 1e-12);
        let g = Distribution1D::gaussian(2.0, 3.0).unwrap();
        let same = PairSpec::new(g.clone(), g).unwrap();
        assert_eq!(same.ratio_mode().unwrap(), 2.0);
        let wide = PairSpec::new(
            Distribution1D::gaussian(0.0, 1.0).unwrap(),
            Distribution1D::gaussian(1.0, 1.0).unwrap(),
        )
        .unwrap();
        assert_eq!(wide.ratio_mode(), Err(Error::UnboundedRatio));
    }

    #[test]
    fn divergence_examples() {
        let same = PairSpec::new(n01(), n01()).unwrap();
        assert_eq!(same.analytic_kl().unwrap(), 0.0);
        assert_eq!(same.analytic_dinf(), 0.0);
        let shift = PairSpec::new(Distribution1D::gaussian(1.0, 1.0).unwrap(), n01()).unwrap();
        assert!((shift.analytic_kl().unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(shift.analytic_dinf(), f64::INFINITY);
        let narrow = PairSpec::new(Distribution1D::gaussian(0.0, 0.25).unwrap(), n01()).unwrap();
        assert!((narrow.analytic_dinf() - LN_2).abs() < 1e-12);
        let half = PairSpec::new(
            Distribution1D::uniform(3.0, 1.0).unwrap(),
            Distribution1D::uniform(3.0, 2.0).unwrap(),
        )
        .unwrap();
        assert!((half.analytic_kl().unwrap() - LN_2).abs() < 1e-15);
        assert!((half.analytic_dinf() - LN_2).abs() < 1e-15);
    }

    #[test]
    fn json_round_trip_and_validation() {
        let d: Distribution1D =
            serde_json::from_str(r#"{"family":"gaussian","mean":1.0,"variance":2.0}"#).unwrap();
        assert_eq!(d, Distribution1D::gaussian(1.0, 2.0).unwrap());
        let s = serde_json::to_string(&d).unwrap();
        assert_eq!(s, r#"{"family":"gaussian","mean":1.0,"variance":2.0}"#);
        assert!(serde_json::from_str::<Distribution1D>(
            r#"{"family":"uniform","center":0.0,"width":-1.0}"#
        )
        .is_err());
        let p: PairSpec = serde_json::from_str(
            r#"{"target":{"family":"uniform_mixture","components":[{"weight":1.0,"low":0.1,"high":0.2}]},
                "proposal":{"family":"uniform","center":0.5,"width":1.0}}"#,
        )
        .unwrap();
        assert!((p.analytic_dinf() - 10f64.ln()).abs() < 1e-12);
    }
}
