use std::path::PathBuf;

use mmhp_core::inference::{run_mcmc, summarize, Summary};
use mmhp_core::{EventSequence, PosteriorDraws};

use crate::config::FitConfig;
use crate::io::{ensure_dir, read_events, read_json, write_json, write_with};
use crate::CliResult;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Events CSV with a `time` column.
    #[arg(long)]
    pub events: PathBuf,
    /// Observation horizon; defaults to the last event time.
    #[arg(long)]
    pub horizon: Option<f64>,
    /// JSON config with `seed`, `prior`, `chains`, `iters`, ...
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory for draws.csv and summary.json.
    #[arg(long)]
    pub out: PathBuf,
}

/// Posterior draws and their summary for one or more sequences sharing
/// the same parameters.
pub fn fit(data: &[EventSequence], cfg: &FitConfig) -> CliResult<(PosteriorDraws, Summary)> {
    let mut prior = cfg.prior.resolve(data)?;
    if let Some(model) = cfg.model {
        prior = prior.with_model(model);
    }
    let draws = run_mcmc(data, &prior, &cfg.mcmc())?;
    let summary = summarize(&draws)?;
    Ok((draws, summary))
}

pub fn run(args: &Args) -> CliResult<()> {
    let cfg: FitConfig = read_json(&args.config)?;
    let seq = read_events(&args.events, args.horizon)?;
    let (draws, summary) = fit(std::slice::from_ref(&seq), &cfg)?;
    if summary.rhat_max >= 1.1 {
        log::warn!("R-hat max {:.3} suggests the chains have not mixed", summary.rhat_max);
    }
    ensure_dir(&args.out)?;
    write_with(&args.out.join("draws.csv"), |w| draws.write_csv(w))?;
    write_json(&args.out.join("summary.json"), &summary)
}
