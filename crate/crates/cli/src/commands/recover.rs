use std::path::PathBuf;

use mmhp_core::ctmc::sample_ctmc;
use mmhp_core::inference::{shortest_interval, ModelKind};
use mmhp_core::params::PARAM_NAMES;
use mmhp_core::rng::substream;
use mmhp_core::simulate::{simulate_fixed_trajectory, simulate_mmhp, StopRule};
use mmhp_core::{EventSequence, LatentTrajectory, MmhpParams};
use rayon::prelude::*;
use serde::Serialize;

use super::decode::{decode_sequence, score, Theta};
use super::fit::fit;
use crate::config::{FitConfig, RecoverConfig};
use crate::io::{derive_seed, ensure_dir, read_json, write_json};
use crate::{CliError, CliResult};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// JSON config with `seed`, `params`, `replicates` and `events` or `fixed_horizon`.
    #[arg(long)]
    pub config: PathBuf,
    /// Override the replicate count of the config.
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Output directory for coverage.json.
    #[arg(long)]
    pub out: PathBuf,
}

/// One model fitted to one replicate.
#[derive(Debug, Clone, Serialize)]
pub struct ModelOutcome {
    pub model: ModelKind,
    pub rhat_max: f64,
    pub posterior_mean: [f64; 7],
    pub intervals: Vec<(f64, f64)>,
    pub covered: Vec<bool>,
    pub integrated_abs_error: f64,
    pub event_state_accuracy: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReplicateResult {
    pub replicate: usize,
    pub events: usize,
    pub horizon: f64,
    pub fits: Vec<ModelOutcome>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ParameterCoverage {
    pub name: &'static str,
    pub truth: f64,
    pub coverage: f64,
    pub mean_of_posterior_means: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelReport {
    pub model: ModelKind,
    pub parameters: Vec<ParameterCoverage>,
    /// Share of replicates with every R-hat below 1.1.
    pub rhat_below_1_1: f64,
    pub median_integrated_abs_error: f64,
    pub mean_event_state_accuracy: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RecoveryReport {
    pub seed: u64,
    pub replicates: usize,
    pub mass: f64,
    pub truth: MmhpParams,
    pub models: Vec<ModelReport>,
    pub replicate_results: Vec<ReplicateResult>,
}

/// Median of a non-empty sample (mean of the middle pair for even sizes).
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn replicate_data(cfg: &RecoverConfig, shared: Option<&LatentTrajectory>, r: usize) -> CliResult<(EventSequence, LatentTrajectory)> {
    let mut rng = substream(cfg.seed, 3, r as u64);
    Ok(match shared {
        Some(traj) => {
            let seq = simulate_fixed_trajectory(&cfg.params, traj, &mut rng)?.0;
            match cfg.events {
                None => (seq, traj.clone()),
                Some(m) => {
                    if seq.len() < m || m == 0 {
                        return Err(CliError::usage(format!(
                            "replicate {r} has {} events on the fixed path, fewer than the {m} requested",
                            seq.len()
                        )));
                    }
                    let cut = seq.times()[m - 1];
                    let seq = EventSequence::new(seq.times()[..m].to_vec(), cut)?;
                    (seq, traj.truncated(cut)?)
                }
            }
        }
        None => {
            let m = cfg.events.expect("checked by caller");
            let sim = simulate_mmhp(&cfg.params, StopRule::Count(m), &mut rng)?;
            (sim.events, sim.trajectory)
        }
    })
}

fn fit_replicate(cfg: &RecoverConfig, shared: Option<&LatentTrajectory>, r: usize) -> CliResult<ReplicateResult> {
    let (seq, truth) = replicate_data(cfg, shared, r)?;
    let truth_values = cfg.params.to_array();
    let mut fits = Vec::with_capacity(cfg.models.len());
    for (k, &model) in cfg.models.iter().enumerate() {
        let fc = FitConfig {
            seed: derive_seed(cfg.seed, 5, (r * cfg.models.len() + k) as u64),
            prior: cfg.prior,
            model: Some(model),
            chains: cfg.chains,
            iters: cfg.iters,
            quadrature_nodes: cfg.decode.quadrature_nodes,
            taylor_form: cfg.decode.taylor_form,
        };
        let (draws, summary) = fit(std::slice::from_ref(&seq), &fc)?;
        let intervals = (0..7)
            .map(|j| shortest_interval(&draws.pooled(j), cfg.mass))
            .collect::<mmhp_core::Result<Vec<_>>>()?;
        let covered = intervals
            .iter()
            .zip(truth_values)
            .map(|(&(lo, hi), t)| lo <= t && t <= hi)
            .collect();
        let decoded = decode_sequence(&seq, Theta::Posterior(&draws), &cfg.decode)?;
        let metrics = score(&truth, &decoded)?;
        log::info!(
            "replicate {r} {model:?}: R-hat max {:.3}, IAE {:.3}, accuracy {:.3}",
            summary.rhat_max,
            metrics.integrated_abs_error,
            metrics.event_state_accuracy
        );
        fits.push(ModelOutcome {
            model,
            rhat_max: summary.rhat_max,
            posterior_mean: draws.mean(),
            intervals,
            covered,
            integrated_abs_error: metrics.integrated_abs_error,
            event_state_accuracy: metrics.event_state_accuracy,
        });
    }
    Ok(ReplicateResult {
        replicate: r,
        events: seq.len(),
        horizon: seq.horizon(),
        fits,
    })
}

/// Simulates the replicates, fits every configured model to each and
/// reports interval coverage, R-hat and latent-path errors.
pub fn recover(cfg: &RecoverConfig) -> CliResult<RecoveryReport> {
    if cfg.replicates == 0 || cfg.models.is_empty() {
        return Err(CliError::usage("recover needs at least one replicate and one model"));
    }
    if !(cfg.mass > 0.0 && cfg.mass < 1.0) {
        return Err(CliError::usage("`mass` must lie in (0, 1)"));
    }
    let shared = match (cfg.events, cfg.fixed_horizon) {
        (Some(_), None) => None,
        (_, Some(t)) => {
            let mut rng = substream(cfg.seed, 4, 0);
            Some(sample_ctmc(cfg.params.delta0(), cfg.params.generator(), t, &mut rng)?)
        }
        (None, None) => return Err(CliError::usage("config needs `events`, `fixed_horizon` or both")),
    };
    let results = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| fit_replicate(cfg, shared.as_ref(), r))
        .collect::<CliResult<Vec<_>>>()?;

    let n = results.len() as f64;
    let truth = cfg.params.to_array();
    let models = cfg
        .models
        .iter()
        .enumerate()
        .map(|(k, &model)| {
            let outcomes: Vec<&ModelOutcome> = results.iter().map(|r| &r.fits[k]).collect();
            let parameters = (0..7)
                .map(|j| ParameterCoverage {
                    name: PARAM_NAMES[j],
                    truth: truth[j],
                    coverage: outcomes.iter().filter(|o| o.covered[j]).count() as f64 / n,
                    mean_of_posterior_means: outcomes.iter().map(|o| o.posterior_mean[j]).sum::<f64>() / n,
                })
                .collect();
            let iae: Vec<f64> = outcomes.iter().map(|o| o.integrated_abs_error).collect();
            ModelReport {
                model,
                parameters,
                rhat_below_1_1: outcomes.iter().filter(|o| o.rhat_max < 1.1).count() as f64 / n,
                median_integrated_abs_error: median(&iae),
                mean_event_state_accuracy: outcomes.iter().map(|o| o.event_state_accuracy).sum::<f64>() / n,
            }
        })
        .collect();
    Ok(RecoveryReport {
        seed: cfg.seed,
        replicates: cfg.replicates,
        mass: cfg.mass,
        truth: cfg.params,
        models,
        replicate_results: results,
    })
}

pub fn run(args: &Args) -> CliResult<()> {
    let mut cfg: RecoverConfig = read_json(&args.config)?;
    if let Some(r) = args.replicates {
        cfg.replicates = r;
    }
    let report = recover(&cfg)?;
    ensure_dir(&args.out)?;
    write_json(&args.out.join("coverage.json"), &report)
}
