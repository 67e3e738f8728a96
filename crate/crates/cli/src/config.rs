//! JSON configs of the subcommands. Unknown keys are rejected and every
//! config that draws random numbers requires an explicit `seed`.

use std::collections::HashMap;
use std::path::PathBuf;

use mmhp_core::decoding::{GridSpec, DEFAULT_VOTE_DRAWS};
use mmhp_core::inference::{McmcConfig, ModelKind, PriorSpec, INTERVAL_MASS};
use mmhp_core::likelihood::{LikelihoodConfig, DEFAULT_QUADRATURE_NODES};
use mmhp_core::simulate::HistoryMode;
use mmhp_core::{ApproxLikelihood, MmhpParams};
use serde::{Deserialize, Serialize};

use crate::CliResult;

fn default_chains() -> usize {
    4
}

fn default_iters() -> usize {
    1000
}

fn default_nodes() -> usize {
    DEFAULT_QUADRATURE_NODES
}

fn default_vote_draws() -> usize {
    DEFAULT_VOTE_DRAWS
}

fn default_mass() -> f64 {
    INTERVAL_MASS
}

fn default_models() -> Vec<ModelKind> {
    vec![ModelKind::Mmhp]
}

fn likelihood(nodes: usize, taylor_form: bool) -> LikelihoodConfig {
    LikelihoodConfig {
        quadrature_nodes: nodes,
        taylor_form,
    }
}

/// `simulate`: either `events` or `horizon`, or a fixed `trajectory` file
/// together with its `horizon`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub seed: u64,
    pub params: MmhpParams,
    #[serde(default)]
    pub events: Option<usize>,
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub history_mode: HistoryMode,
    #[serde(default)]
    pub trajectory: Option<PathBuf>,
}

/// `fit`. `model` overrides the model of the resolved prior.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub seed: u64,
    #[serde(default = "PriorSpec::default")]
    pub prior: PriorSpec,
    #[serde(default)]
    pub model: Option<ModelKind>,
    #[serde(default = "default_chains")]
    pub chains: usize,
    #[serde(default = "default_iters")]
    pub iters: usize,
    #[serde(default = "default_nodes")]
    pub quadrature_nodes: usize,
    #[serde(default)]
    pub taylor_form: bool,
}

impl FitConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            prior: PriorSpec::default(),
            model: None,
            chains: default_chains(),
            iters: default_iters(),
            quadrature_nodes: default_nodes(),
            taylor_form: false,
        }
    }

    pub fn mcmc(&self) -> McmcConfig {
        McmcConfig {
            chains: self.chains,
            iters: self.iters,
            seed: self.seed,
            likelihood: likelihood(self.quadrature_nodes, self.taylor_form),
        }
    }
}

/// `decode`; every field is optional.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecodeConfig {
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default = "default_vote_draws")]
    pub vote_draws: usize,
    #[serde(default = "default_nodes")]
    pub quadrature_nodes: usize,
    #[serde(default)]
    pub taylor_form: bool,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        Self {
            grid: GridSpec::default(),
            vote_draws: default_vote_draws(),
            quadrature_nodes: default_nodes(),
            taylor_form: false,
        }
    }
}

impl DecodeConfig {
    pub fn likelihood(&self) -> CliResult<ApproxLikelihood> {
        Ok(ApproxLikelihood::new(likelihood(self.quadrature_nodes, self.taylor_form))?)
    }
}

/// `compare`: sampler settings shared by the MMPP and MMHP fits, and the
/// decoding used to obtain their compensators.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub seed: u64,
    #[serde(default = "PriorSpec::default")]
    pub prior: PriorSpec,
    #[serde(default = "default_chains")]
    pub chains: usize,
    #[serde(default = "default_iters")]
    pub iters: usize,
    #[serde(default = "default_nodes")]
    pub quadrature_nodes: usize,
    #[serde(default)]
    pub taylor_form: bool,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default = "default_vote_draws")]
    pub vote_draws: usize,
}

impl CompareConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            prior: PriorSpec::default(),
            chains: default_chains(),
            iters: default_iters(),
            quadrature_nodes: default_nodes(),
            taylor_form: false,
            grid: GridSpec::default(),
            vote_draws: default_vote_draws(),
        }
    }

    pub fn decode(&self) -> DecodeConfig {
        DecodeConfig {
            grid: self.grid,
            vote_draws: self.vote_draws,
            quadrature_nodes: self.quadrature_nodes,
            taylor_form: self.taylor_form,
        }
    }
}

/// Where `hierarchy` gets event-time states from when no decoded file is
/// given.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSource {
    /// One parameter value for every pair.
    Params { params: MmhpParams },
    /// Fit each pair (all its windows jointly) and decode by majority vote.
    Fit {
        seed: u64,
        #[serde(default = "PriorSpec::default")]
        prior: PriorSpec,
        #[serde(default = "default_chains")]
        chains: usize,
        #[serde(default = "default_iters")]
        iters: usize,
    },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HierarchyConfig {
    #[serde(default)]
    pub states: Option<StateSource>,
    /// Observation window lengths by window name; otherwise a window ends
    /// at its last event.
    #[serde(default)]
    pub window_horizons: Option<HashMap<String, f64>>,
    /// Decoding settings; the quadrature settings also apply to fits.
    #[serde(default)]
    pub decode: DecodeConfig,
}

/// `recover`: the simulation study.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecoverConfig {
    pub seed: u64,
    pub params: MmhpParams,
    pub replicates: usize,
    /// Events per replicate. With `fixed_horizon` the replicates keep the
    /// first `events` events and end at the last of them.
    #[serde(default)]
    pub events: Option<usize>,
    /// One latent path on `[0, fixed_horizon]` shared by all replicates.
    #[serde(default)]
    pub fixed_horizon: Option<f64>,
    #[serde(default = "default_models")]
    pub models: Vec<ModelKind>,
    #[serde(default = "PriorSpec::default")]
    pub prior: PriorSpec,
    #[serde(default = "default_chains")]
    pub chains: usize,
    #[serde(default = "default_iters")]
    pub iters: usize,
    #[serde(default = "default_mass")]
    pub mass: f64,
    /// Decoding settings; the quadrature settings also apply to the fits.
    #[serde(default)]
    pub decode: DecodeConfig,
}

impl RecoverConfig {
    pub fn new(seed: u64, params: MmhpParams, replicates: usize, events: usize) -> Self {
        Self {
            seed,
            params,
            replicates,
            events: Some(events),
            fixed_horizon: None,
            models: default_models(),
            prior: PriorSpec::default(),
            chains: default_chains(),
            iters: default_iters(),
            mass: default_mass(),
            decode: DecodeConfig::default(),
        }
    }
}
