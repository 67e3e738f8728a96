use std::path::PathBuf;

use mmhp_core::decoding::{decode, decode_posterior};
use mmhp_core::diagnostics::{event_state_accuracy, integrated_abs_error};
use mmhp_core::{DecodedTrajectory, EventSequence, LatentTrajectory, MmhpParams, PosteriorDraws};
use serde::Serialize;

use crate::config::DecodeConfig;
use crate::io::{ensure_dir, open, read_draws, read_events, read_json, read_params, write_json, write_with};
use crate::CliResult;

#[derive(Debug, clap::Args)]
#[command(group(clap::ArgGroup::new("theta").required(true).args(["draws", "params"])))]
pub struct Args {
    #[arg(long)]
    pub events: PathBuf,
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Posterior draws CSV from `fit`; decoded by majority vote.
    #[arg(long)]
    pub draws: Option<PathBuf>,
    /// Fixed parameters as JSON.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Optional JSON config with `grid`, `vote_draws` and quadrature settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// True latent path (`u,state` CSV) to score the decoding against.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Output directory for trajectory.csv, event_states.csv and metrics.json.
    #[arg(long)]
    pub out: PathBuf,
}

/// Parameters to decode under.
pub enum Theta<'a> {
    Fixed(&'a MmhpParams),
    Posterior(&'a PosteriorDraws),
}

pub fn decode_sequence(seq: &EventSequence, theta: Theta<'_>, cfg: &DecodeConfig) -> CliResult<DecodedTrajectory> {
    let lik = cfg.likelihood()?;
    Ok(match theta {
        Theta::Fixed(p) => decode(&lik, p, seq, cfg.grid)?,
        Theta::Posterior(d) => decode_posterior(&lik, &d.thinned(cfg.vote_draws)?, seq, cfg.grid)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecodeMetrics {
    pub integrated_abs_error: f64,
    pub event_state_accuracy: f64,
    pub horizon: f64,
}

pub fn score(truth: &LatentTrajectory, decoded: &DecodedTrajectory) -> CliResult<DecodeMetrics> {
    Ok(DecodeMetrics {
        integrated_abs_error: integrated_abs_error(truth, decoded)?,
        event_state_accuracy: event_state_accuracy(truth, &decoded.event_states())?,
        horizon: decoded.horizon(),
    })
}

pub fn run(args: &Args) -> CliResult<()> {
    let cfg: DecodeConfig = match &args.config {
        Some(p) => read_json(p)?,
        None => DecodeConfig::default(),
    };
    let seq = read_events(&args.events, args.horizon)?;
    let decoded = match (&args.draws, &args.params) {
        (Some(path), _) => decode_sequence(&seq, Theta::Posterior(&read_draws(path)?), &cfg)?,
        (None, Some(path)) => decode_sequence(&seq, Theta::Fixed(&read_params(path)?), &cfg)?,
        (None, None) => unreachable!("clap requires one of --draws and --params"),
    };
    ensure_dir(&args.out)?;
    write_with(&args.out.join("trajectory.csv"), |w| decoded.write_csv(w))?;
    write_with(&args.out.join("event_states.csv"), |w| decoded.write_event_states_csv(w))?;
    if let Some(path) = &args.truth {
        let truth = LatentTrajectory::read_csv(open(path)?, seq.horizon())?;
        write_json(&args.out.join("metrics.json"), &score(&truth, &decoded)?)?;
    }
    Ok(())
}
