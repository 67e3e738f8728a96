use std::path::PathBuf;

use mmhp_core::diagnostics::{baseline_compensators, ks_exp1, KsResult};
use mmhp_core::hawkes::{fit_baseline, BaselineModel};
use mmhp_core::inference::ModelKind;
use mmhp_core::EventSequence;
use serde::Serialize;

use super::decode::{decode_sequence, Theta};
use super::fit::fit;
use super::gof::rescale;
use crate::config::{CompareConfig, FitConfig};
use crate::io::{derive_seed, ensure_dir, read_events, read_json, write_json};
use crate::CliResult;

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(long)]
    pub events: PathBuf,
    #[arg(long)]
    pub horizon: Option<f64>,
    /// JSON config with `seed` and the sampler and decoding settings.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory for compare.json.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelFit {
    pub model: &'static str,
    pub ks: KsResult,
    /// Maximized log-likelihood of the homogeneous baselines.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loglik: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rhat_max: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub seed: u64,
    pub events: usize,
    pub models: Vec<ModelFit>,
    /// The model with the smallest KS statistic.
    pub best: &'static str,
}

/// Fits the four models and compares their rescaled inter-event times.
/// The latent models use the posterior mean with the majority-vote path.
pub fn compare_models(seq: &EventSequence, cfg: &CompareConfig) -> CliResult<CompareReport> {
    let mut models = Vec::with_capacity(4);
    for (name, kind) in [("poisson", BaselineModel::Poisson), ("hawkes", BaselineModel::Hawkes)] {
        let f = fit_baseline(kind, seq)?;
        models.push(ModelFit {
            model: name,
            ks: ks_exp1(&baseline_compensators(&f, seq))?,
            loglik: Some(f.loglik()),
            rhat_max: None,
        });
    }
    for (k, (name, kind)) in [("mmpp", ModelKind::Mmpp), ("mmhp", ModelKind::Mmhp)].into_iter().enumerate() {
        let fc = FitConfig {
            seed: derive_seed(cfg.seed, 1, k as u64),
            prior: cfg.prior,
            model: Some(kind),
            chains: cfg.chains,
            iters: cfg.iters,
            quadrature_nodes: cfg.quadrature_nodes,
            taylor_form: cfg.taylor_form,
        };
        let (draws, summary) = fit(std::slice::from_ref(seq), &fc)?;
        let decoded = decode_sequence(seq, Theta::Posterior(&draws), &cfg.decode())?;
        let (_, ks) = rescale(&draws.mean_params()?, seq, &decoded.to_latent()?)?;
        log::info!("{name}: KS D = {:.4}, R-hat max {:.3}", ks.d, summary.rhat_max);
        models.push(ModelFit {
            model: name,
            ks,
            loglik: None,
            rhat_max: Some(summary.rhat_max),
        });
    }
    let best = models
        .iter()
        .min_by(|a, b| a.ks.d.total_cmp(&b.ks.d))
        .map(|m| m.model)
        .unwrap_or("none");
    Ok(CompareReport {
        seed: cfg.seed,
        events: seq.len(),
        models,
        best,
    })
}

pub fn run(args: &Args) -> CliResult<()> {
    let cfg: CompareConfig = read_json(&args.config)?;
    let seq = read_events(&args.events, args.horizon)?;
    let report = compare_models(&seq, &cfg)?;
    ensure_dir(&args.out)?;
    write_json(&args.out.join("compare.json"), &report)
}
