use std::path::PathBuf;

use mmhp_core::rng::stream;
use mmhp_core::simulate::{
    simulate_fixed_trajectory_with, simulate_mmhp_with, HistoryMode, Simulation, StopRule,
};
use mmhp_core::event_data::write_single;
use mmhp_core::{LatentTrajectory, MmhpParams};
use serde::Serialize;

use crate::config::SimulateConfig;
use crate::io::{ensure_dir, open, read_json, resolve, write_json, write_with};
use crate::{CliError, CliResult};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// JSON config with `seed`, `params` and `events` or `horizon`.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory for events.csv, truth.csv and simulation.json.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Serialize)]
struct Thinning {
    proposals: u64,
    accepted: u64,
    acceptance_rate: f64,
}

#[derive(Debug, Serialize)]
struct Report {
    seed: u64,
    events: usize,
    horizon: f64,
    history_mode: HistoryMode,
    fixed_trajectory: bool,
    thinning: Thinning,
    params: MmhpParams,
}

/// Runs the simulation described by `cfg`; relative paths in it are
/// resolved against `config_path`.
pub fn simulate(cfg: &SimulateConfig, config_path: &std::path::Path) -> CliResult<Simulation> {
    let mut rng = stream(cfg.seed, 0);
    match (&cfg.trajectory, cfg.events, cfg.horizon) {
        (Some(path), None, Some(horizon)) => {
            let trajectory = LatentTrajectory::read_csv(open(&resolve(config_path, path))?, horizon)?;
            let (events, stats) =
                simulate_fixed_trajectory_with(&cfg.params, &trajectory, cfg.history_mode, &mut rng)?;
            Ok(Simulation {
                events,
                trajectory,
                stats,
            })
        }
        (Some(_), _, _) => Err(CliError::usage(
            "a fixed trajectory needs `horizon` and no `events`",
        )),
        (None, Some(m), None) => Ok(simulate_mmhp_with(&cfg.params, StopRule::Count(m), cfg.history_mode, &mut rng)?),
        (None, None, Some(t)) => Ok(simulate_mmhp_with(&cfg.params, StopRule::Horizon(t), cfg.history_mode, &mut rng)?),
        (None, _, _) => Err(CliError::usage("config needs exactly one of `events` and `horizon`")),
    }
}

pub fn run(args: &Args) -> CliResult<()> {
    let cfg: SimulateConfig = read_json(&args.config)?;
    let sim = simulate(&cfg, &args.config)?;
    ensure_dir(&args.out)?;
    write_with(&args.out.join("events.csv"), |w| write_single(&sim.events, w))?;
    write_with(&args.out.join("truth.csv"), |w| sim.trajectory.write_csv(w))?;
    let report = Report {
        seed: cfg.seed,
        events: sim.events.len(),
        horizon: sim.events.horizon(),
        history_mode: cfg.history_mode,
        fixed_trajectory: cfg.trajectory.is_some(),
        thinning: Thinning {
            proposals: sim.stats.proposals,
            accepted: sim.stats.accepted,
            acceptance_rate: sim.stats.acceptance_rate(),
        },
        params: cfg.params,
    };
    log::info!("simulated {} events on [0, {}]", report.events, report.horizon);
    write_json(&args.out.join("simulation.json"), &report)
}
