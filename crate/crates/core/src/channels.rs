//! Per-channel observation models.
//!
//! A [`ChannelModel`] pairs a pre-change and a post-change density from the
//! same family. It samples either regime, evaluates the log-likelihood ratio
//! `log f_post(x) / f_pre(x)` in closed form, and reports the analytic KL
//! divergence `D(f_post || f_pre)`.
//!
//! Supported families:
//!
//! | family        | params              | support |
//! |---------------|---------------------|---------|
//! | `gaussian`    | `mean`, `stddev`    | ℝ       |
//! | `exponential` | `mean`              | [0, ∞)  |
//! | `laplace`     | `location`, `scale` | ℝ       |
//! | `beta`        | `alpha`, `beta`     | (0, 1)  |

use std::collections::BTreeMap;
use std::fmt;

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Exp, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{digamma, ln_gamma};

use crate::error::{Error, Result};

/// Observation family tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Gaussian,
    Exponential,
    Laplace,
    Beta,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::Exponential => "exponential",
            Family::Laplace => "laplace",
            Family::Beta => "beta",
        }
    }

    /// True when every draw lies in [0, 1].
    pub fn is_unit_bounded(self) -> bool {
        matches!(self, Family::Beta)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A validated univariate density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistributionSpec {
    Gaussian { mean: f64, stddev: f64 },
    Exponential { mean: f64 },
    Laplace { location: f64, scale: f64 },
    Beta { alpha: f64, beta: f64 },
}

fn require_finite(field: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be finite, got {value}")))
    }
}

fn require_positive(field: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be > 0, got {value}")))
    }
}

impl DistributionSpec {
    pub fn gaussian(mean: f64, stddev: f64) -> Result<Self> {
        require_finite("gaussian.mean", mean)?;
        require_positive("gaussian.stddev", stddev)?;
        Ok(DistributionSpec::Gaussian { mean, stddev })
    }

    pub fn exponential(mean: f64) -> Result<Self> {
        require_positive("exponential.mean", mean)?;
        Ok(DistributionSpec::Exponential { mean })
    }

    pub fn laplace(location: f64, scale: f64) -> Result<Self> {
        require_finite("laplace.location", location)?;
        require_positive("laplace.scale", scale)?;
        Ok(DistributionSpec::Laplace { location, scale })
    }

    pub fn beta(alpha: f64, beta: f64) -> Result<Self> {
        require_positive("beta.alpha", alpha)?;
        require_positive("beta.beta", beta)?;
        Ok(DistributionSpec::Beta { alpha, beta })
    }

    /// Re-runs the constructor checks; used after deserialization.
    pub fn validate(&self) -> Result<()> {
        match *self {
            DistributionSpec::Gaussian { mean, stddev } => Self::gaussian(mean, stddev).map(drop),
            DistributionSpec::Exponential { mean } => Self::exponential(mean).map(drop),
            DistributionSpec::Laplace { location, scale } => {
                Self::laplace(location, scale).map(drop)
            }
            DistributionSpec::Beta { alpha, beta } => Self::beta(alpha, beta).map(drop),
        }
    }

    pub fn family(&self) -> Family {
        match self {
            DistributionSpec::Gaussian { .. } => Family::Gaussian,
            DistributionSpec::Exponential { .. } => Family::Exponential,
            DistributionSpec::Laplace { .. } => Family::Laplace,
            DistributionSpec::Beta { .. } => Family::Beta,
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            DistributionSpec::Gaussian { mean, .. } => mean,
            DistributionSpec::Exponential { mean } => mean,
            DistributionSpec::Laplace { location, .. } => location,
            DistributionSpec::Beta { alpha, beta } => alpha / (alpha + beta),
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            DistributionSpec::Gaussian { stddev, .. } => stddev * stddev,
            DistributionSpec::Exponential { mean } => mean * mean,
            DistributionSpec::Laplace { scale, .. } => 2.0 * scale * scale,
            DistributionSpec::Beta { alpha, beta } => {
                let s = alpha + beta;
                alpha * beta / (s * s * (s + 1.0))
            }
        }
    }

    /// Shifts the mean by `shift`.
    ///
    /// Gaussian and Laplace move their location, Exponential moves its mean,
    /// and Beta moves its mean while holding `alpha + beta` fixed.
    pub fn mean_shifted(&self, shift: f64) -> Result<Self> {
        require_finite("shift", shift)?;
        match *self {
            DistributionSpec::Gaussian { mean, stddev } => Self::gaussian(mean + shift, stddev),
            DistributionSpec::Exponential { mean } => Self::exponential(mean + shift),
            DistributionSpec::Laplace { location, scale } => Self::laplace(location + shift, scale),
            DistributionSpec::Beta { alpha, beta } => {
                let total = alpha + beta;
                let new_mean = alpha / total + shift;
                if !(new_mean > 0.0 && new_mean < 1.0) {
                    return Err(Error::config(
                        "shift",
                        format!("beta mean {new_mean} leaves (0, 1)"),
                    ));
                }
                let new_alpha = new_mean * total;
                Self::beta(new_alpha, total - new_alpha)
            }
        }
    }

    fn params(&self) -> BTreeMap<String, f64> {
        let pairs: Vec<(&str, f64)> = match *self {
            DistributionSpec::Gaussian { mean, stddev } => vec![("mean", mean), ("stddev", stddev)],
            DistributionSpec::Exponential { mean } => vec![("mean", mean)],
            DistributionSpec::Laplace { location, scale } => {
                vec![("location", location), ("scale", scale)]
            }
            DistributionSpec::Beta { alpha, beta } => vec![("alpha", alpha), ("beta", beta)],
        };
        pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }
}

#[derive(Serialize, Deserialize)]
struct RawDistribution {
    family: String,
    params: BTreeMap<String, f64>,
}

impl TryFrom<RawDistribution> for DistributionSpec {
    type Error = Error;

    fn try_from(raw: RawDistribution) -> Result<Self> {
        let family = raw.family.to_ascii_lowercase();
        let expected: &[&str] = match family.as_str() {
            "gaussian" | "normal" => &["mean", "stddev"],
            "exponential" => &["mean"],
            "laplace" => &["location", "scale"],
            "beta" => &["alpha", "beta"],
            other => {
                return Err(Error::config(
                    "family",
                    format!("unknown family {other:?} (expected gaussian, exponential, laplace, beta)"),
                ))
            }
        };
        if let Some(extra) = raw.params.keys().find(|k| !expected.contains(&k.as_str())) {
            return Err(Error::config(
                format!("{family}.params.{extra}"),
                "unknown parameter",
            ));
        }
        let get = |name: &str| {
            raw.params
                .get(name)
                .copied()
                .ok_or_else(|| Error::config(format!("{family}.params.{name}"), "missing"))
        };
        match family.as_str() {
            "gaussian" | "normal" => Self::gaussian(get("mean")?, get("stddev")?),
            "exponential" => Self::exponential(get("mean")?),
            "laplace" => Self::laplace(get("location")?, get("scale")?),
            _ => Self::beta(get("alpha")?, get("beta")?),
        }
    }
}

impl Serialize for DistributionSpec {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        RawDistribution {
            family: self.family().name().to_string(),
            params: self.params(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DistributionSpec {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = RawDistribution::deserialize(deserializer)?;
        DistributionSpec::try_from(raw).map_err(serde::de::Error::custom)
    }
}

/// Which side of the change point a draw comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Pre,
    Post,
}

#[derive(Debug, Clone)]
enum Sampler {
    Gaussian { mean: f64, stddev: f64 },
    Exponential(Exp<f64>),
    Laplace { location: f64, scale: f64 },
    Beta(BetaSampler),
}

impl Sampler {
    fn new(spec: &DistributionSpec) -> Self {
        match *spec {
            DistributionSpec::Gaussian { mean, stddev } => Sampler::Gaussian { mean, stddev },
            DistributionSpec::Exponential { mean } => {
                Sampler::Exponential(Exp::new(1.0 / mean).expect("validated rate"))
            }
            DistributionSpec::Laplace { location, scale } => Sampler::Laplace { location, scale },
            DistributionSpec::Beta { alpha, beta } => Sampler::Beta(BetaSampler::new(alpha, beta)),
        }
    }

    #[inline]
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Sampler::Gaussian { mean, stddev } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + stddev * z
            }
            Sampler::Exponential(exp) => exp.sample(rng),
            Sampler::Laplace { location, scale } => {
                // Inverse CDF on an open interval so ln never sees 0.
                let u: f64 = rng.sample(Open01);
                let centered = u - 0.5;
                location - scale * centered.signum() * (-2.0 * centered.abs()).ln_1p()
            }
            Sampler::Beta(beta) => beta.sample(rng),
        }
    }
}

/// Beta sampler working in log space.
///
/// With shape parameters well below one (the 0.02 of the bounded scenario)
/// the textbook `G1 / (G1 + G2)` ratio underflows to exactly zero about once
/// per million draws. Drawing `ln G` instead keeps the ratio representable;
/// the rare survivors below the smallest normal are clamped into (0, 1).
#[derive(Debug, Clone)]
struct BetaSampler {
    a: LogGamma,
    b: LogGamma,
}

#[derive(Debug, Clone)]
struct LogGamma {
    gamma: Gamma<f64>,
    /// `Some(1/shape)` when shape < 1 and the boost `G(a+1) * U^(1/a)` is used.
    boost: Option<f64>,
}

impl LogGamma {
    fn new(shape: f64) -> Self {
        if shape < 1.0 {
            LogGamma {
                gamma: Gamma::new(shape + 1.0, 1.0).expect("validated shape"),
                boost: Some(1.0 / shape),
            }
        } else {
            LogGamma {
                gamma: Gamma::new(shape, 1.0).expect("validated shape"),
                boost: None,
            }
        }
    }

    #[inline]
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let base = self.gamma.sample(rng).ln();
        match self.boost {
            Some(inv_shape) => {
                let u: f64 = rng.sample(Open01);
                base + u.ln() * inv_shape
            }
            None => base,
        }
    }
}

const BETA_UPPER: f64 = 1.0 - f64::EPSILON / 2.0;

impl BetaSampler {
    fn new(alpha: f64, beta: f64) -> Self {
        BetaSampler {
            a: LogGamma::new(alpha),
            b: LogGamma::new(beta),
        }
    }

    #[inline]
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let la = self.a.sample(rng);
        let lb = self.b.sample(rng);
        // x = Ga / (Ga + Gb) = 1 / (1 + exp(lb - la))
        let x = 1.0 / (1.0 + (lb - la).exp());
        x.clamp(f64::MIN_POSITIVE, BETA_UPPER)
    }
}

/// Precomputed closed-form LLR coefficients.
#[derive(Debug, Clone, Copy)]
enum LlrKernel {
    /// pre == post
    Zero,
    /// Equal-variance Gaussian: `slope * (x - midpoint)`.
    GaussianShift { slope: f64, midpoint: f64 },
    /// `log_scale + ((x-m0)^2 / (2 s0^2) - (x-m1)^2 / (2 s1^2))`
    Gaussian {
        log_scale: f64,
        m0: f64,
        inv_2v0: f64,
        m1: f64,
        inv_2v1: f64,
    },
    /// `log_scale + x * slope`
    Exponential { log_scale: f64, slope: f64 },
    /// `log_scale + (|x-l0|/s0 - |x-l1|/s1)`
    Laplace {
        log_scale: f64,
        l0: f64,
        inv_s0: f64,
        l1: f64,
        inv_s1: f64,
    },
    /// `log_norm + ((a1-a0) ln x + (b1-b0) ln(1-x))`
    Beta { log_norm: f64, da: f64, db: f64 },
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

impl LlrKernel {
    fn new(pre: &DistributionSpec, post: &DistributionSpec) -> Self {
        use DistributionSpec as D;
        if pre == post {
            return LlrKernel::Zero;
        }
        // Every difference below is written as (pre-term - post-term) so that
        // swapping pre and post negates the result bit-for-bit.
        match (*pre, *post) {
            (D::Gaussian { mean: m0, stddev: s0 }, D::Gaussian { mean: m1, stddev: s1 }) => {
                if s0 == s1 {
                    LlrKernel::GaussianShift {
                        slope: (m1 - m0) / (s0 * s0),
                        midpoint: (m0 + m1) / 2.0,
                    }
                } else {
                    LlrKernel::Gaussian {
                        log_scale: s0.ln() - s1.ln(),
                        m0,
                        inv_2v0: 1.0 / (2.0 * s0 * s0),
                        m1,
                        inv_2v1: 1.0 / (2.0 * s1 * s1),
                    }
                }
            }
            (D::Exponential { mean: m0 }, D::Exponential { mean: m1 }) => LlrKernel::Exponential {
                log_scale: m0.ln() - m1.ln(),
                slope: 1.0 / m0 - 1.0 / m1,
            },
            (
                D::Laplace { location: l0, scale: s0 },
                D::Laplace { location: l1, scale: s1 },
            ) => LlrKernel::Laplace {
                log_scale: s0.ln() - s1.ln(),
                l0,
                inv_s0: 1.0 / s0,
                l1,
                inv_s1: 1.0 / s1,
            },
            (D::Beta { alpha: a0, beta: b0 }, D::Beta { alpha: a1, beta: b1 }) => LlrKernel::Beta {
                log_norm: ln_beta(a0, b0) - ln_beta(a1, b1),
                da: a1 - a0,
                db: b1 - b0,
            },
            _ => unreachable!("family mismatch rejected by ChannelModel::new"),
        }
    }

    #[inline]
    fn eval(&self, x: f64) -> f64 {
        match *self {
            LlrKernel::Zero => 0.0,
            LlrKernel::GaussianShift { slope, midpoint } => slope * (x - midpoint),
            LlrKernel::Gaussian {
                log_scale,
                m0,
                inv_2v0,
                m1,
                inv_2v1,
            } => {
                let d0 = x - m0;
                let d1 = x - m1;
                log_scale + (d0 * d0 * inv_2v0 - d1 * d1 * inv_2v1)
            }
            LlrKernel::Exponential { log_scale, slope } => log_scale + x * slope,
            LlrKernel::Laplace {
                log_scale,
                l0,
                inv_s0,
                l1,
                inv_s1,
            } => log_scale + ((x - l0).abs() * inv_s0 - (x - l1).abs() * inv_s1),
            LlrKernel::Beta { log_norm, da, db } => log_norm + (da * x.ln() + db * (-x).ln_1p()),
        }
    }
}

/// One action's pre/post-change density pair.
///
/// Immutable after construction; share freely across threads.
#[derive(Debug, Clone)]
pub struct ChannelModel {
    pre: DistributionSpec,
    post: DistributionSpec,
    pre_sampler: Sampler,
    post_sampler: Sampler,
    kernel: LlrKernel,
}

impl ChannelModel {
    pub fn new(pre: DistributionSpec, post: DistributionSpec) -> Result<Self> {
        pre.validate()?;
        post.validate()?;
        if pre.family() != post.family() {
            return Err(Error::config(
                "channel.post.family",
                format!("{} differs from pre-change family {}", post.family(), pre.family()),
            ));
        }
        Ok(ChannelModel {
            pre_sampler: Sampler::new(&pre),
            post_sampler: Sampler::new(&post),
            kernel: LlrKernel::new(&pre, &post),
            pre,
            post,
        })
    }

    /// A channel the change does not touch.
    pub fn unaffected(spec: DistributionSpec) -> Result<Self> {
        Self::new(spec, spec)
    }

    /// `pre` and `pre` shifted by `shift` (see [`DistributionSpec::mean_shifted`]).
    pub fn with_shift(pre: DistributionSpec, shift: f64) -> Result<Self> {
        if shift == 0.0 {
            return Self::unaffected(pre);
        }
        Self::new(pre, pre.mean_shifted(shift)?)
    }

    pub fn pre(&self) -> &DistributionSpec {
        &self.pre
    }

    pub fn post(&self) -> &DistributionSpec {
        &self.post
    }

    pub fn family(&self) -> Family {
        self.pre.family()
    }

    /// Whether the channel belongs to the affected set.
    pub fn is_affected(&self) -> bool {
        self.pre != self.post
    }

    /// The same pair with pre and post exchanged.
    pub fn swapped(&self) -> Self {
        Self::new(self.post, self.pre).expect("already validated")
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, regime: Regime, rng: &mut R) -> f64 {
        match regime {
            Regime::Pre => self.pre_sampler.sample(rng),
            Regime::Post => self.post_sampler.sample(rng),
        }
    }

    /// `log f_post(x) / f_pre(x)`.
    ///
    /// Fails with [`Error::Domain`] when `x` is outside the joint support,
    /// which can only happen with externally supplied observations.
    #[inline]
    pub fn llr(&self, x: f64) -> Result<f64> {
        let in_support = match self.pre.family() {
            Family::Gaussian | Family::Laplace => x.is_finite(),
            Family::Exponential => x.is_finite() && x >= 0.0,
            Family::Beta => x > 0.0 && x < 1.0,
        };
        if !in_support {
            return Err(Error::Domain(format!(
                "observation {x} outside {} support",
                self.pre.family()
            )));
        }
        Ok(self.kernel.eval(x))
    }

    /// `D(f_post || f_pre)`, analytically.
    pub fn kl_divergence(&self) -> f64 {
        use DistributionSpec as D;
        if !self.is_affected() {
            return 0.0;
        }
        let kl = match (self.pre, self.post) {
            (D::Gaussian { mean: m0, stddev: s0 }, D::Gaussian { mean: m1, stddev: s1 }) => {
                let d = m1 - m0;
                (s0 / s1).ln() + (s1 * s1 + d * d) / (2.0 * s0 * s0) - 0.5
            }
            (D::Exponential { mean: m0 }, D::Exponential { mean: m1 }) => {
                let r = m1 / m0;
                r - 1.0 - r.ln()
            }
            (
                D::Laplace { location: l0, scale: s0 },
                D::Laplace { location: l1, scale: s1 },
            ) => {
                let d = (l1 - l0).abs();
                (s0 / s1).ln() + d / s0 + (s1 / s0) * (-d / s1).exp() - 1.0
            }
            (D::Beta { alpha: a0, beta: b0 }, D::Beta { alpha: a1, beta: b1 }) => {
                ln_beta(a0, b0) - ln_beta(a1, b1)
                    + (a1 - a0) * digamma(a1)
                    + (b1 - b0) * digamma(b1)
                    + (a0 - a1 + b0 - b1) * digamma(a1 + b1)
            }
            _ => unreachable!("family mismatch rejected by ChannelModel::new"),
        };
        kl.max(0.0)
    }
}

/// Variance proxy `v` of the post-change LLR (its sub-Gaussian constant).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SubGaussianBound(f64);

impl SubGaussianBound {
    pub fn new(v: f64) -> Result<Self> {
        if v.is_finite() && v > 0.0 {
            Ok(SubGaussianBound(v))
        } else {
            Err(Error::config("v", format!("must be finite and > 0, got {v}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Draws used to calibrate `v` for families without an exact proxy.
pub const CALIBRATION_DRAWS: usize = 100_000;
/// Multiplier applied to the calibrated LLR variance.
pub const CALIBRATION_SAFETY: f64 = 2.0;
const CALIBRATION_SEED: u64 = 0x5eed_ca1b;

/// Default `v` for a set of channels.
///
/// Equal-variance Gaussian channels contribute their exact proxy
/// `(δ/σ)^2`; every other affected channel contributes twice the sample
/// variance of its LLR under post-change draws. Fails when no channel is
/// affected.
pub fn subgaussian_bound(channels: &[ChannelModel]) -> Result<SubGaussianBound> {
    subgaussian_bound_with(channels, CALIBRATION_DRAWS, CALIBRATION_SEED)
}

pub fn subgaussian_bound_with(
    channels: &[ChannelModel],
    draws: usize,
    seed: u64,
) -> Result<SubGaussianBound> {
    if channels.is_empty() {
        return Err(Error::config("channels", "at least one channel is required"));
    }
    let mut v = 0.0f64;
    for (index, channel) in channels.iter().enumerate() {
        if !channel.is_affected() {
            continue;
        }
        let proxy = match channel.kernel {
            LlrKernel::GaussianShift { .. } => {
                let (m0, s0) = match channel.pre {
                    DistributionSpec::Gaussian { mean, stddev } => (mean, stddev),
                    _ => unreachable!(),
                };
                let d = (channel.post.mean() - m0) / s0;
                d * d
            }
            _ => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(index as u64);
                CALIBRATION_SAFETY * llr_sample_variance(channel, Regime::Post, draws, &mut rng)?
            }
        };
        v = v.max(proxy);
    }
    if v > 0.0 {
        SubGaussianBound::new(v)
    } else {
        Err(Error::config(
            "channels",
            "affected set is empty; no channel changes distribution",
        ))
    }
}

fn llr_sample_variance<R: Rng + ?Sized>(
    channel: &ChannelModel,
    regime: Regime,
    draws: usize,
    rng: &mut R,
) -> Result<f64> {
    let (mut count, mut mean, mut m2) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..draws {
        let l = channel.llr(channel.sample(regime, rng))?;
        count += 1.0;
        let delta = l - mean;
        mean += delta / count;
        m2 += delta * (l - mean);
    }
    Ok(if count > 1.0 { m2 / (count - 1.0) } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn gauss(mean: f64) -> DistributionSpec {
        DistributionSpec::gaussian(mean, 1.0).unwrap()
    }

    fn rng(stream: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(42);
        r.set_stream(stream);
        r
    }

    /// Sample mean and its standard error.
    fn mc_mean(n: usize, mut f: impl FnMut() -> f64) -> (f64, f64) {
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let x = f();
            s += x;
            s2 += x * x;
        }
        let nf = n as f64;
        let mean = s / nf;
        let var = (s2 / nf - mean * mean) * nf / (nf - 1.0);
        (mean, (var / nf).sqrt())
    }

    #[test]
    fn constructors_reject_invalid_params() {
        assert!(DistributionSpec::gaussian(0.0, 0.0).is_err());
        assert!(DistributionSpec::gaussian(f64::NAN, 1.0).is_err());
        assert!(DistributionSpec::exponential(-1.0).is_err());
        assert!(DistributionSpec::laplace(0.0, 0.0).is_err());
        assert!(DistributionSpec::beta(0.0, 1.0).is_err());
        assert!(DistributionSpec::beta(1.0, -2.0).is_err());
        let err = ChannelModel::new(gauss(0.0), DistributionSpec::exponential(1.0).unwrap());
        assert!(err.unwrap_err().to_string().contains("channel.post.family"));
    }

    #[test]
    fn gaussian_llr_closed_form() {
        let ch = ChannelModel::new(gauss(0.0), gauss(1.0)).unwrap();
        assert_eq!(ch.llr(0.5).unwrap(), 0.0);
        assert_eq!(ch.llr(1.0).unwrap(), 0.5);
        assert_eq!(ch.kl_divergence(), 0.5);
    }

    #[test]
    fn identical_pair_has_zero_llr_and_kl() {
        for spec in [
            gauss(0.3),
            DistributionSpec::exponential(2.0).unwrap(),
            DistributionSpec::laplace(0.0, 1.0).unwrap(),
            DistributionSpec::beta(0.02, 1.98).unwrap(),
        ] {
            let ch = ChannelModel::unaffected(spec).unwrap();
            assert!(!ch.is_affected());
            assert_eq!(ch.kl_divergence(), 0.0);
            for x in [0.01, 0.5, 0.9] {
                assert_eq!(ch.llr(x).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn llr_domain_errors() {
        let beta = ChannelModel::with_shift(DistributionSpec::beta(0.02, 1.98).unwrap(), 0.04).unwrap();
        assert!(matches!(beta.llr(0.0), Err(Error::Domain(_))));
        assert!(matches!(beta.llr(1.0), Err(Error::Domain(_))));
        assert!(beta.llr(0.5).is_ok());
        let exp = ChannelModel::with_shift(DistributionSpec::exponential(1.0).unwrap(), 1.0).unwrap();
        assert!(exp.llr(-0.1).is_err());
        assert!(exp.llr(0.0).is_ok());
        let g = ChannelModel::new(gauss(0.0), gauss(1.0)).unwrap();
        assert!(g.llr(f64::INFINITY).is_err());
    }

    #[test]
    fn llr_is_antisymmetric_exactly() {
        let models = [
            ChannelModel::new(gauss(0.0), gauss(1.0)).unwrap(),
            ChannelModel::new(gauss(0.0), DistributionSpec::gaussian(0.3, 2.0).unwrap()).unwrap(),
            ChannelModel::with_shift(DistributionSpec::exponential(1.0).unwrap(), 1.0).unwrap(),
            ChannelModel::with_shift(DistributionSpec::laplace(0.0, 1.0).unwrap(), 0.1).unwrap(),
            ChannelModel::new(
                DistributionSpec::laplace(0.0, 1.0).unwrap(),
                DistributionSpec::laplace(0.5, 3.0).unwrap(),
            )
            .unwrap(),
            ChannelModel::with_shift(DistributionSpec::beta(0.02, 1.98).unwrap(), 0.19).unwrap(),
        ];
        for ch in &models {
            let sw = ch.swapped();
            for x in [1e-9, 0.01, 0.2, 0.5, 0.75, 0.999] {
                assert_eq!(sw.llr(x).unwrap(), -ch.llr(x).unwrap(), "{:?} at {x}", ch.pre());
            }
        }
    }

    #[test]
    fn mean_shift_rule() {
        let beta = DistributionSpec::beta(0.02, 1.98).unwrap();
        let DistributionSpec::Beta { alpha, beta: b } = beta.mean_shifted(0.04).unwrap() else {
            panic!()
        };
        assert_abs_diff_eq!(alpha, 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(b, 1.9, epsilon = 1e-12);
        let DistributionSpec::Beta { alpha, beta: b } = beta.mean_shifted(0.19).unwrap() else {
            panic!()
        };
        assert_abs_diff_eq!(alpha, 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(b, 1.6, epsilon = 1e-12);
        assert!(beta.mean_shifted(0.995).is_err());
        assert_eq!(
            DistributionSpec::exponential(1.0).unwrap().mean_shifted(1.0).unwrap(),
            DistributionSpec::Exponential { mean: 2.0 }
        );
    }

    #[test]
    fn gaussian_sample_mean() {
        let ch = ChannelModel::unaffected(gauss(0.0)).unwrap();
        let mut r = rng(1);
        let (m, _) = mc_mean(1_000_000, || ch.sample(Regime::Pre, &mut r));
        assert!(m.abs() < 0.01, "{m}");
    }

    #[test]
    fn exponential_sample_mean() {
        let ch = ChannelModel::unaffected(DistributionSpec::exponential(1.0).unwrap()).unwrap();
        let mut r = rng(2);
        let (m, _) = mc_mean(1_000_000, || ch.sample(Regime::Pre, &mut r));
        assert!((m - 1.0).abs() < 0.01, "{m}");
    }

    #[test]
    fn beta_sample_mean_and_support() {
        let ch = ChannelModel::unaffected(DistributionSpec::beta(0.02, 1.98).unwrap()).unwrap();
        let mut r = rng(3);
        let (m, _) = mc_mean(1_000_000, || {
            let x = ch.sample(Regime::Pre, &mut r);
            assert!(x > 0.0 && x < 1.0);
            x
        });
        assert!((m - 0.01).abs() < 0.002, "{m}");
    }

    #[test]
    fn laplace_kl_matches_mc_llr_mean() {
        let ch = ChannelModel::with_shift(DistributionSpec::laplace(0.0, 1.0).unwrap(), 0.1).unwrap();
        let mut r = rng(4);
        let (m, se) = mc_mean(1_000_000, || ch.llr(ch.sample(Regime::Post, &mut r)).unwrap());
        let kl = ch.kl_divergence();
        // d + exp(-d) - 1 at d = 0.1
        assert_abs_diff_eq!(kl, 0.1 + (-0.1f64).exp() - 1.0, epsilon = 1e-15);
        assert!((m - kl).abs() <= 3.0 * se, "mc {m} kl {kl} se {se}");
    }

    /// Families and pairs exercised by the MC identity checks. The exponential
    /// post mean stays below 2 so the pre-change likelihood ratio has finite
    /// variance and the standard error is meaningful.
    fn identity_models() -> Vec<ChannelModel> {
        vec![
            ChannelModel::new(gauss(0.0), gauss(1.0)).unwrap(),
            ChannelModel::new(gauss(0.0), DistributionSpec::gaussian(0.2, 1.3).unwrap()).unwrap(),
            ChannelModel::with_shift(DistributionSpec::exponential(1.0).unwrap(), 0.5).unwrap(),
            ChannelModel::with_shift(DistributionSpec::laplace(0.0, 1.0).unwrap(), 1.0).unwrap(),
            ChannelModel::with_shift(DistributionSpec::beta(0.02, 1.98).unwrap(), 0.04).unwrap(),
            ChannelModel::with_shift(DistributionSpec::beta(0.02, 1.98).unwrap(), 0.19).unwrap(),
        ]
    }

    #[test]
    fn likelihood_ratio_has_unit_mean_under_pre() {
        for (i, ch) in identity_models().iter().enumerate() {
            let mut r = rng(100 + i as u64);
            let (m, se) = mc_mean(1_000_000, || ch.llr(ch.sample(Regime::Pre, &mut r)).unwrap().exp());
            assert!((m - 1.0).abs() <= 3.0 * se, "{:?}: {m} ± {se}", ch.post());
        }
    }

    #[test]
    fn llr_mean_under_post_is_kl() {
        for (i, ch) in identity_models().iter().enumerate() {
            let mut r = rng(200 + i as u64);
            let (m, se) = mc_mean(1_000_000, || ch.llr(ch.sample(Regime::Post, &mut r)).unwrap());
            let kl = ch.kl_divergence();
            assert!(kl > 0.0);
            assert!((m - kl).abs() <= 3.0 * se, "{:?}: mc {m} kl {kl} se {se}", ch.post());
        }
    }

    #[test]
    fn subgaussian_gaussian_scenario_is_exact() {
        let chans: Vec<_> = [0.0, 0.1, 0.0, 1.0]
            .iter()
            .map(|&s| ChannelModel::with_shift(gauss(0.0), s).unwrap())
            .collect();
        assert_eq!(subgaussian_bound(&chans).unwrap().value(), 1.0);
    }

    #[test]
    fn subgaussian_rejects_unaffected_only() {
        let chans = vec![ChannelModel::unaffected(gauss(0.0)).unwrap()];
        let err = subgaussian_bound(&chans).unwrap_err();
        assert!(err.is_config());
        assert!(subgaussian_bound(&[]).is_err());
    }

    #[test]
    fn subgaussian_exponential_within_factor_two() {
        let base = DistributionSpec::exponential(1.0).unwrap();
        let chans: Vec<_> = [0.0, 0.1, 1.0]
            .iter()
            .map(|&s| ChannelModel::with_shift(base, s).unwrap())
            .collect();
        let v = subgaussian_bound(&chans).unwrap().value();
        // Independent oracle: LLR of Exp(1) -> Exp(2) is -ln 2 + x/2, so its
        // variance under the post law is Var(x)/4 = 1.
        let mc_var = 1.0;
        assert!(v >= mc_var && v <= 2.0 * mc_var * 1.05, "{v}");
    }

    #[test]
    fn serde_shape() {
        let spec = DistributionSpec::beta(0.1, 1.9).unwrap();
        let json = serde_json::to_value(spec).unwrap();
        assert_eq!(
            json,
            serde_json::json!({"family": "beta", "params": {"alpha": 0.1, "beta": 1.9}})
        );
        let back: DistributionSpec = serde_json::from_value(json).unwrap();
        assert_eq!(back, spec);
        let bad = serde_json::from_value::<DistributionSpec>(
            serde_json::json!({"family": "gaussian", "params": {"mean": 0.0}}),
        );
        assert!(bad.unwrap_err().to_string().contains("gaussian.params.stddev"));
        let neg = serde_json::from_value::<DistributionSpec>(
            serde_json::json!({"family": "laplace", "params": {"location": 0.0, "scale": -1.0}}),
        );
        assert!(neg.is_err());
    }
}
