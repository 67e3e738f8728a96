//! Bayesian fitting of MMHP parameters.
//!
//! The posterior is sampled in an unconstrained space (see [`transform`])
//! with an adaptive random-walk Metropolis sampler ([`sampler`]). Chains
//! run in parallel, each on its own random stream, so results depend only
//! on the seed.

pub mod prior;
pub mod sampler;
pub mod summary;
pub mod transform;

use std::io::{Read, Write};
use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::likelihood::{ApproxLikelihood, LikelihoodConfig};
use crate::params::PARAM_NAMES;
use crate::rng::stream;
use crate::{Error, EventSequence, MmhpParams, Result};

pub use prior::{
    log_prior, KernelHyper, Lambda0Prior, ModelKind, Prior, PriorConfig, PriorSpec, SwitchingPrior,
};
pub use sampler::{run_chain, ChainOutput, SamplerConfig};
pub use summary::{mcse, rhat, shortest_interval, RHat};
pub use transform::{free_coordinates, Transform, UnconstrainedPoint};

/// Attempts at finding a finite starting point per chain.
const INIT_ATTEMPTS: usize = 1000;

/// Log posterior over one or more independent sequences sharing `theta`.
pub struct Posterior<'a> {
    data: &'a [EventSequence],
    prior: PriorConfig,
    transform: Transform,
    likelihood: ApproxLikelihood,
    nonfinite: AtomicU64,
}

/// The three additive pieces of the log posterior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosteriorParts {
    pub log_prior: f64,
    pub loglik: f64,
    pub log_jacobian: f64,
}

impl PosteriorParts {
    pub fn total(&self) -> f64 {
        self.log_prior + self.loglik + self.log_jacobian
    }
}

impl<'a> Posterior<'a> {
    pub fn new(data: &'a [EventSequence], prior: PriorConfig, likelihood: ApproxLikelihood) -> Result<Self> {
        prior.validate()?;
        Ok(Self {
            data,
            transform: Transform::new(&prior),
            prior,
            likelihood,
            nonfinite: AtomicU64::new(0),
        })
    }

    pub fn transform(&self) -> &Transform {
        &self.transform
    }

    pub fn prior(&self) -> &PriorConfig {
        &self.prior
    }

    /// Summed approximate log-likelihood; `-inf` (counted) if any sequence
    /// fails to evaluate.
    pub fn loglik(&self, theta: &MmhpParams) -> f64 {
        let mut total = 0.0;
        for seq in self.data {
            match self.likelihood.forward_loglik(theta, seq) {
                Ok(v) if v.is_finite() => total += v,
                _ => {
                    self.nonfinite.fetch_add(1, Ordering::Relaxed);
                    return f64::NEG_INFINITY;
                }
            }
        }
        total
    }

    pub fn parts(&self, u: &UnconstrainedPoint) -> Option<PosteriorParts> {
        let theta = self.transform.constrain(u).ok()?;
        let log_prior = log_prior(&theta, &self.prior);
        if log_prior == f64::NEG_INFINITY {
            return None;
        }
        Some(PosteriorParts {
            log_prior,
            loglik: self.loglik(&theta),
            log_jacobian: self.transform.log_jacobian(u),
        })
    }

    /// `log_prior + loglik + log |Jacobian|` at an unconstrained point.
    pub fn log_density(&self, u: &UnconstrainedPoint) -> f64 {
        match self.parts(u) {
            Some(p) => {
                let v = p.total();
                if v.is_nan() {
                    f64::NEG_INFINITY
                } else {
                    v
                }
            }
            None => f64::NEG_INFINITY,
        }
    }

    /// How many likelihood evaluations came back non-finite.
    pub fn nonfinite_count(&self) -> u64 {
        self.nonfinite.load(Ordering::Relaxed)
    }

    /// A starting point drawn from the prior with a finite posterior.
    pub fn initial_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<UnconstrainedPoint> {
        for _ in 0..INIT_ATTEMPTS {
            let theta = match sample_prior(&self.prior, rng) {
                Some(t) => t,
                None => continue,
            };
            if let Ok(u) = self.transform.unconstrain(&theta) {
                if self.log_density(&u).is_finite() {
                    return Ok(u);
                }
            }
        }
        Err(Error::Adaptation(format!(
            "no prior draw with finite posterior in {INIT_ATTEMPTS} attempts"
        )))
    }
}

/// Free-standing form of [`Posterior::log_density`].
pub fn log_posterior(
    u: &UnconstrainedPoint,
    data: &[EventSequence],
    prior: &PriorConfig,
    likelihood: &ApproxLikelihood,
) -> Result<f64> {
    Ok(Posterior::new(data, *prior, likelihood.clone())?.log_density(u))
}

/// One prior draw, kept inside the open constraint set.
fn sample_prior<R: Rng + ?Sized>(cfg: &PriorConfig, rng: &mut R) -> Option<MmhpParams> {
    const EDGE: f64 = 1e-6;
    let lambda1 = cfg.lambda1.sample(rng, false);
    let lambda0 = match &cfg.lambda0 {
        Lambda0Prior::ConditionalUniform => lambda1 * rng.random_range(EDGE..1.0 - EDGE),
        Lambda0Prior::Restricted { prior } => {
            let v = prior.sample(rng, false);
            if v < lambda1 {
                v
            } else {
                lambda1 * rng.random_range(EDGE..1.0 - EDGE)
            }
        }
    };
    let (alpha, beta) = match cfg.model {
        ModelKind::Mmhp => (cfg.alpha.sample(rng, false), cfg.beta.sample(rng, false)),
        ModelKind::Mmpp => (0.0, 1.0),
    };
    let delta0 = cfg.delta0.sample(rng, true).clamp(EDGE, 1.0 - EDGE);
    let (q0, q1) = match &cfg.switching {
        SwitchingPrior::Rates { q0, q1 } => (q0.sample(rng, false), q1.sample(rng, false)),
        SwitchingPrior::Weights { w0, w1 } => (
            w0.sample(rng, true).clamp(EDGE, 1.0 - EDGE) * lambda0,
            w1.sample(rng, true).clamp(EDGE, 1.0 - EDGE) * lambda1,
        ),
    };
    MmhpParams::from_array([lambda0, lambda1, alpha.max(EDGE), beta, delta0, q0, q1]).ok()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McmcConfig {
    pub chains: usize,
    pub iters: usize,
    pub seed: u64,
    pub likelihood: LikelihoodConfig,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self {
            chains: 4,
            iters: 1000,
            seed: 0,
            likelihood: LikelihoodConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainAcceptance {
    pub componentwise: f64,
    pub joint: f64,
}

/// Post-warmup draws, `chains[c][i]` in [`PARAM_NAMES`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraws {
    pub chains: Vec<Vec<[f64; 7]>>,
    pub acceptance: Vec<ChainAcceptance>,
    pub seed: u64,
    pub model: ModelKind,
    pub nonfinite_evaluations: u64,
}

/// Samples the posterior of `theta` given independent sequences.
pub fn run_mcmc(data: &[EventSequence], prior: &PriorConfig, cfg: &McmcConfig) -> Result<PosteriorDraws> {
    if cfg.chains < 2 {
        return Err(Error::validation("at least two chains are required"));
    }
    if cfg.iters < 100 {
        return Err(Error::validation("at least 100 iterations are required"));
    }
    let posterior = Posterior::new(data, *prior, ApproxLikelihood::new(cfg.likelihood)?)?;
    let free = free_coordinates(prior.model);
    let sampler = SamplerConfig::new(cfg.iters);
    let outputs: Vec<Result<(Vec<[f64; 7]>, ChainAcceptance)>> = (0..cfg.chains)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream(cfg.seed, c as u64);
            let init = posterior.initial_point(&mut rng)?;
            let out = run_chain(
                |u: &[f64]| posterior.log_density(u.try_into().expect("dimension 7")),
                init.to_vec(),
                &free,
                &sampler,
                &mut rng,
            )?;
            let mut draws = Vec::with_capacity(out.samples.len());
            for u in &out.samples {
                let theta = posterior.transform().constrain(u.as_slice().try_into().expect("dimension 7"))?;
                let v = theta.to_array();
                assert!(v[0] > 0.0 && v[0] < v[1], "stored draw violates lambda0 < lambda1");
                assert!(v.iter().all(|x| x.is_finite() && *x >= 0.0), "stored draw outside the domain");
                draws.push(v);
            }
            Ok((
                draws,
                ChainAcceptance {
                    componentwise: out.component_accept,
                    joint: out.joint_accept,
                },
            ))
        })
        .collect();
    let mut chains = Vec::with_capacity(cfg.chains);
    let mut acceptance = Vec::with_capacity(cfg.chains);
    for o in outputs {
        let (d, a) = o?;
        chains.push(d);
        acceptance.push(a);
    }
    Ok(PosteriorDraws {
        chains,
        acceptance,
        seed: cfg.seed,
        model: prior.model,
        nonfinite_evaluations: posterior.nonfinite_count(),
    })
}

impl PosteriorDraws {
    pub fn n_chains(&self) -> usize {
        self.chains.len()
    }

    pub fn n_draws(&self) -> usize {
        self.chains.iter().map(Vec::len).sum()
    }

    /// Draws of parameter `k` per chain.
    pub fn parameter(&self, k: usize) -> Vec<Vec<f64>> {
        self.chains.iter().map(|c| c.iter().map(|d| d[k]).collect()).collect()
    }

    /// Draws of parameter `k`, chains concatenated.
    pub fn pooled(&self, k: usize) -> Vec<f64> {
        self.chains.iter().flat_map(|c| c.iter().map(move |d| d[k])).collect()
    }

    pub fn mean(&self) -> [f64; 7] {
        let mut m = [0.0; 7];
        let n = self.n_draws() as f64;
        for d in self.chains.iter().flatten() {
            for k in 0..7 {
                m[k] += d[k] / n;
            }
        }
        m
    }

    /// Posterior-mean parameters.
    pub fn mean_params(&self) -> Result<MmhpParams> {
        MmhpParams::from_array(self.mean())
    }

    /// `count` draws spaced evenly through the pooled draws.
    pub fn thinned(&self, count: usize) -> Result<Vec<MmhpParams>> {
        let all: Vec<&[f64; 7]> = self.chains.iter().flatten().collect();
        if all.is_empty() || count == 0 {
            return Err(Error::domain("no draws to thin"));
        }
        let count = count.min(all.len());
        (0..count)
            .map(|i| MmhpParams::from_array(*all[i * all.len() / count]))
            .collect()
    }

    /// CSV with columns `chain,iteration,<parameters>`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["chain".to_string(), "iteration".to_string()];
        header.extend(PARAM_NAMES.iter().map(|s| s.to_string()));
        w.write_record(&header)?;
        for (c, chain) in self.chains.iter().enumerate() {
            for (i, d) in chain.iter().enumerate() {
                let mut row = vec![c.to_string(), i.to_string()];
                row.extend(d.iter().map(|v| format!("{v:e}")));
                w.write_record(&row)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the format written by [`PosteriorDraws::write_csv`].
    /// Acceptance rates are not stored and come back as NaN.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers()?.clone();
        let expected: Vec<&str> = ["chain", "iteration"].into_iter().chain(PARAM_NAMES).collect();
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(Error::Parse {
                line: 1,
                message: format!("draws header must be {}", expected.join(",")),
            });
        }
        let mut chains: Vec<Vec<[f64; 7]>> = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let line = i + 2;
            let parse = |s: &str| {
                s.trim().parse::<f64>().map_err(|e| Error::Parse {
                    line,
                    message: format!("{e}: {s:?}"),
                })
            };
            let c: usize = rec[0].trim().parse().map_err(|e| Error::Parse {
                line,
                message: format!("chain index: {e}"),
            })?;
            let mut d = [0.0; 7];
            for k in 0..7 {
                d[k] = parse(&rec[k + 2])?;
            }
            if c >= chains.len() {
                chains.resize(c + 1, Vec::new());
            }
            chains[c].push(d);
        }
        if chains.is_empty() {
            return Err(Error::validation("draws file has no rows"));
        }
        let model = if chains.iter().flatten().all(|d| d[2] == 0.0) {
            ModelKind::Mmpp
        } else {
            ModelKind::Mmhp
        };
        Ok(Self {
            acceptance: vec![
                ChainAcceptance {
                    componentwise: f64::NAN,
                    joint: f64::NAN
                };
                chains.len()
            ],
            chains,
            seed: 0,
            model,
            nonfinite_evaluations: 0,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    /// 95% shortest interval.
    pub lower: f64,
    pub upper: f64,
    pub rhat: f64,
    pub rhat_degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub parameters: Vec<ParamSummary>,
    /// Largest R-hat over non-degenerate parameters.
    pub rhat_max: f64,
    pub acceptance: Vec<ChainAcceptance>,
    pub chains: usize,
    pub draws_per_chain: usize,
    pub seed: u64,
    pub model: ModelKind,
    pub nonfinite_evaluations: u64,
}

pub const INTERVAL_MASS: f64 = 0.95;

/// Means, 95% shortest intervals and split-R̂ for every parameter.
pub fn summarize(draws: &PosteriorDraws) -> Result<Summary> {
    let mut parameters = Vec::with_capacity(7);
    let mut rhat_max: f64 = 0.0;
    for (k, name) in PARAM_NAMES.iter().enumerate() {
        let pooled = draws.pooled(k);
        let (lower, upper) = shortest_interval(&pooled, INTERVAL_MASS)?;
        let r = rhat(&draws.parameter(k))?;
        if !r.degenerate {
            rhat_max = rhat_max.max(r.value);
        }
        parameters.push(ParamSummary {
            name: name.to_string(),
            mean: summary::mean(&pooled),
            sd: summary::std_dev(&pooled),
            lower,
            upper,
            rhat: r.value,
            rhat_degenerate: r.degenerate,
        });
    }
    Ok(Summary {
        parameters,
        rhat_max,
        acceptance: draws.acceptance.clone(),
        chains: draws.n_chains(),
        draws_per_chain: draws.chains.first().map_or(0, Vec::len),
        seed: draws.seed,
        model: draws.model,
        nonfinite_evaluations: draws.nonfinite_evaluations,
    })
}
