use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, Continuous, ContinuousCDF, Gamma, LogNormal, Normal};

use crate::{Error, EventSequence, MmhpParams, Result};

/// One-dimensional prior family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Prior {
    Uniform { lo: f64, hi: f64 },
    LogNormal { mu: f64, sigma: f64 },
    /// Normal(0, sigma) truncated to the positive half-line.
    HalfNormal { sigma: f64 },
    /// Normal(mean, sd) truncated to the positive half-line.
    PositiveNormal { mean: f64, sd: f64 },
    Gamma { shape: f64, rate: f64 },
    Beta { a: f64, b: f64 },
    /// Improper constant density on the parameter's domain.
    Flat,
}

impl Prior {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Prior::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && lo < hi,
            Prior::LogNormal { mu, sigma } => mu.is_finite() && sigma > 0.0 && sigma.is_finite(),
            Prior::HalfNormal { sigma } => sigma > 0.0 && sigma.is_finite(),
            Prior::PositiveNormal { mean, sd } => mean.is_finite() && sd > 0.0 && sd.is_finite(),
            Prior::Gamma { shape, rate } => shape > 0.0 && rate > 0.0 && shape.is_finite() && rate.is_finite(),
            Prior::Beta { a, b } => a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite(),
            Prior::Flat => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::validation(format!("invalid prior hyperparameters: {self:?}")))
        }
    }

    /// Log density at `x`; `-inf` outside the support.
    pub fn ln_pdf(&self, x: f64) -> f64 {
        if !x.is_finite() {
            return f64::NEG_INFINITY;
        }
        match *self {
            Prior::Uniform { lo, hi } => {
                if (lo..=hi).contains(&x) {
                    -(hi - lo).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            Prior::LogNormal { mu, sigma } => positive(x, || {
                LogNormal::new(mu, sigma).expect("validated").ln_pdf(x)
            }),
            Prior::HalfNormal { sigma } => positive(x, || {
                std::f64::consts::LN_2 + Normal::new(0.0, sigma).expect("validated").ln_pdf(x)
            }),
            Prior::PositiveNormal { mean, sd } => positive(x, || {
                let n = Normal::new(mean, sd).expect("validated");
                n.ln_pdf(x) - n.sf(0.0).ln()
            }),
            Prior::Gamma { shape, rate } => positive(x, || {
                Gamma::new(shape, rate).expect("validated").ln_pdf(x)
            }),
            Prior::Beta { a, b } => {
                if x > 0.0 && x < 1.0 {
                    Beta::new(a, b).expect("validated").ln_pdf(x)
                } else {
                    f64::NEG_INFINITY
                }
            }
            Prior::Flat => 0.0,
        }
    }

    /// A draw used to start a chain. Flat priors start at 1 (or 0.5 on a
    /// unit-interval parameter).
    pub(crate) fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R, unit: bool) -> f64 {
        use rand_distr::Distribution;
        match *self {
            Prior::Uniform { lo, hi } => rng.random_range(lo..hi),
            Prior::LogNormal { mu, sigma } => {
                rand_distr::LogNormal::new(mu, sigma).expect("validated").sample(rng)
            }
            Prior::HalfNormal { sigma } => {
                let z: f64 = rand_distr::StandardNormal.sample(rng);
                (sigma * z).abs()
            }
            Prior::PositiveNormal { mean, sd } => loop {
                let z: f64 = rand_distr::StandardNormal.sample(rng);
                let x = mean + sd * z;
                if x > 0.0 {
                    break x;
                }
            },
            Prior::Gamma { shape, rate } => {
                rand_distr::Gamma::new(shape, 1.0 / rate).expect("validated").sample(rng)
            }
            Prior::Beta { a, b } => rand_distr::Beta::new(a, b).expect("validated").sample(rng),
            Prior::Flat => {
                if unit {
                    0.5
                } else {
                    1.0
                }
            }
        }
    }
}

fn positive(x: f64, f: impl FnOnce() -> f64) -> f64 {
    if x > 0.0 {
        f()
    } else {
        f64::NEG_INFINITY
    }
}

/// Full MMHP or the MMPP special case with `alpha = 0` (and `beta` pinned
/// at 1, where it has no effect).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    #[default]
    Mmhp,
    Mmpp,
}

/// Prior on `lambda0` given `lambda1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Lambda0Prior {
    /// `lambda0 | lambda1 ~ Uniform(0, lambda1)`.
    ConditionalUniform,
    /// A marginal density restricted to `lambda0 < lambda1` (unnormalized
    /// truncation).
    Restricted { prior: Prior },
}

/// How the switching rates are parameterized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SwitchingPrior {
    /// Independent priors on `q0` and `q1`.
    Rates { q0: Prior, q1: Prior },
    /// `q0 = w0 * lambda0`, `q1 = w1 * lambda1` with priors on the weights,
    /// so switches are rarer than events.
    Weights { w0: Prior, w1: Prior },
}

impl SwitchingPrior {
    pub fn uses_weights(&self) -> bool {
        matches!(self, SwitchingPrior::Weights { .. })
    }
}

/// Resolved prior over all seven parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorConfig {
    pub model: ModelKind,
    pub lambda0: Lambda0Prior,
    pub lambda1: Prior,
    pub alpha: Prior,
    pub beta: Prior,
    pub delta0: Prior,
    pub switching: SwitchingPrior,
}

impl PriorConfig {
    /// Weakly informative defaults for simulated data.
    pub fn synthetic() -> Self {
        Self {
            model: ModelKind::Mmhp,
            lambda0: Lambda0Prior::ConditionalUniform,
            lambda1: Prior::LogNormal { mu: 0.0, sigma: 1.0 },
            alpha: Prior::HalfNormal { sigma: 5.0 },
            beta: Prior::LogNormal { mu: 0.0, sigma: 0.5 },
            delta0: Prior::Uniform { lo: 0.0, hi: 1.0 },
            switching: SwitchingPrior::Rates {
                q0: Prior::LogNormal { mu: -1.0, sigma: 1.0 },
                q1: Prior::LogNormal { mu: -1.0, sigma: 1.0 },
            },
        }
    }

    /// As `synthetic` with Gamma(1, 1) on both kernel parameters.
    pub fn email() -> Self {
        Self {
            alpha: Prior::Gamma { shape: 1.0, rate: 1.0 },
            beta: Prior::Gamma { shape: 1.0, rate: 1.0 },
            ..Self::synthetic()
        }
    }

    /// Per-pair prior for contest data. `max_gap` is the longest
    /// inter-event time of the pair.
    pub fn mice_pair(kernel: KernelHyper, max_gap: f64) -> Result<Self> {
        if !(max_gap > 0.0 && max_gap.is_finite()) {
            return Err(Error::validation(format!(
                "mice_pair prior needs a positive longest gap, got {max_gap}"
            )));
        }
        let cfg = Self {
            lambda0: Lambda0Prior::Restricted {
                prior: Prior::PositiveNormal { mean: 1.0 / max_gap, sd: 0.1 },
            },
            alpha: Prior::LogNormal { mu: kernel.alpha_mu, sigma: kernel.alpha_sigma },
            beta: Prior::LogNormal { mu: kernel.beta_mu, sigma: kernel.beta_sigma },
            switching: SwitchingPrior::Weights {
                w0: Prior::Beta { a: 0.5, b: 0.5 },
                w1: Prior::Beta { a: 0.5, b: 0.5 },
            },
            ..Self::synthetic()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_model(mut self, model: ModelKind) -> Self {
        self.model = model;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let Lambda0Prior::Restricted { prior } = &self.lambda0 {
            prior.validate()?;
        }
        self.lambda1.validate()?;
        self.alpha.validate()?;
        self.beta.validate()?;
        self.delta0.validate()?;
        match &self.switching {
            SwitchingPrior::Rates { q0, q1 } => {
                q0.validate()?;
                q1.validate()?;
            }
            SwitchingPrior::Weights { w0, w1 } => {
                w0.validate()?;
                w1.validate()?;
            }
        }
        Ok(())
    }
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self::synthetic()
    }
}

/// Lognormal hyperparameters for the kernel priors of `mice_pair`; there
/// are no defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelHyper {
    pub alpha_mu: f64,
    pub alpha_sigma: f64,
    pub beta_mu: f64,
    pub beta_sigma: f64,
}

/// Prior as written in a config file; `mice_pair` is resolved against the
/// data it is fitted to.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum PriorSpec {
    #[default]
    Synthetic,
    Email,
    MicePair {
        alpha_mu: f64,
        alpha_sigma: f64,
        beta_mu: f64,
        beta_sigma: f64,
    },
    Custom {
        config: PriorConfig,
    },
}

impl PriorSpec {
    pub fn resolve(&self, data: &[EventSequence]) -> Result<PriorConfig> {
        let cfg = match self {
            PriorSpec::Synthetic => PriorConfig::synthetic(),
            PriorSpec::Email => PriorConfig::email(),
            &PriorSpec::MicePair {
                alpha_mu,
                alpha_sigma,
                beta_mu,
                beta_sigma,
            } => {
                let kernel = KernelHyper {
                    alpha_mu,
                    alpha_sigma,
                    beta_mu,
                    beta_sigma,
                };
                let max_gap = data
                    .iter()
                    .flat_map(|s| s.interevent_times())
                    .fold(0.0, f64::max);
                PriorConfig::mice_pair(kernel, max_gap)?
            }
            PriorSpec::Custom { config } => *config,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Log prior density of `theta`.
///
/// The density is over `(lambda0, lambda1, alpha, beta, delta0)` and either
/// `(q0, q1)` or the weights `(q0 / lambda0, q1 / lambda1)`, whichever
/// the switching prior is stated in. Under [`ModelKind::Mmpp`] the kernel
/// terms are dropped. Constraint violations give `-inf`.
pub fn log_prior(theta: &MmhpParams, cfg: &PriorConfig) -> f64 {
    let (lambda0, lambda1) = (theta.lambda0(), theta.lambda1());
    if !(lambda0 > 0.0 && lambda0 < lambda1) {
        return f64::NEG_INFINITY;
    }
    let mut lp = match &cfg.lambda0 {
        Lambda0Prior::ConditionalUniform => -lambda1.ln(),
        Lambda0Prior::Restricted { prior } => prior.ln_pdf(lambda0),
    };
    lp += cfg.lambda1.ln_pdf(lambda1);
    if cfg.model == ModelKind::Mmhp {
        lp += cfg.alpha.ln_pdf(theta.alpha()) + cfg.beta.ln_pdf(theta.beta());
    }
    lp += cfg.delta0.ln_pdf(theta.delta0());
    let gen = theta.generator();
    lp += match &cfg.switching {
        SwitchingPrior::Rates { q0, q1 } => q0.ln_pdf(gen.q0()) + q1.ln_pdf(gen.q1()),
        SwitchingPrior::Weights { w0, w1 } => {
            w0.ln_pdf(gen.q0() / lambda0) + w1.ln_pdf(gen.q1() / lambda1)
        }
    };
    if lp.is_nan() {
        f64::NEG_INFINITY
    } else {
        lp
    }
}
