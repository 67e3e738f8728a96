//! Synthetic MMHP realizations by Ogata thinning.
//!
//! The latent chain is drawn first (lazily when stopping on an event count).
//! Within an inactive segment events are a Poisson stream at `lambda0`. Within
//! an active segment candidates are proposed at the intensity just after the
//! last refresh point and accepted with probability `lambda(t) / bound`; the
//! exponential kernel only decays between events so the bound is valid until
//! the next accepted event, where it is refreshed.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::ctmc::{sample_ctmc, sample_initial, State};
use crate::hawkes::Excitation;
use crate::{Error, EventSequence, LatentTrajectory, Result};

pub use crate::params::{MmhpParams, ParamsRecord};

/// Hard cap on generated events before the run is declared explosive.
pub const MAX_EVENTS: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StopRule {
    /// Run the chain on `[0, T]`.
    Horizon(f64),
    /// Run until this many events; `T` becomes the last event time.
    Count(usize),
}

/// Which events feed the Hawkes excitation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HistoryMode {
    /// Every past event, whatever the state it occurred in.
    #[default]
    Full,
    /// Only events that occurred in the active state.
    ActiveOnly,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThinningStats {
    pub proposals: u64,
    pub accepted: u64,
}

impl ThinningStats {
    pub fn acceptance_rate(&self) -> f64 {
        if self.proposals == 0 {
            1.0
        } else {
            self.accepted as f64 / self.proposals as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub events: EventSequence,
    pub trajectory: LatentTrajectory,
    pub stats: ThinningStats,
}

/// Simulates events together with the latent path that generated them.
pub fn simulate_mmhp<R: Rng + ?Sized>(
    theta: &MmhpParams,
    stop: StopRule,
    rng: &mut R,
) -> Result<Simulation> {
    simulate_mmhp_with(theta, stop, HistoryMode::Full, rng)
}

pub fn simulate_mmhp_with<R: Rng + ?Sized>(
    theta: &MmhpParams,
    stop: StopRule,
    mode: HistoryMode,
    rng: &mut R,
) -> Result<Simulation> {
    match stop {
        StopRule::Horizon(horizon) => {
            let trajectory = sample_ctmc(theta.delta0(), theta.generator(), horizon, rng)?;
            let (events, stats) = simulate_on_path(theta, &trajectory, mode, rng)?;
            Ok(Simulation {
                events,
                trajectory,
                stats,
            })
        }
        StopRule::Count(count) => simulate_until_count(theta, count, mode, rng),
    }
}

/// Simulates events conditional on a given latent path.
pub fn simulate_fixed_trajectory<R: Rng + ?Sized>(
    theta: &MmhpParams,
    traj: &LatentTrajectory,
    rng: &mut R,
) -> Result<(EventSequence, ThinningStats)> {
    simulate_on_path(theta, traj, HistoryMode::Full, rng)
}

pub fn simulate_fixed_trajectory_with<R: Rng + ?Sized>(
    theta: &MmhpParams,
    traj: &LatentTrajectory,
    mode: HistoryMode,
    rng: &mut R,
) -> Result<(EventSequence, ThinningStats)> {
    simulate_on_path(theta, traj, mode, rng)
}

fn simulate_on_path<R: Rng + ?Sized>(
    theta: &MmhpParams,
    traj: &LatentTrajectory,
    mode: HistoryMode,
    rng: &mut R,
) -> Result<(EventSequence, ThinningStats)> {
    let mut thinner = Thinner::new(theta, mode, MAX_EVENTS + 1);
    for (start, end, state) in traj.segments() {
        if thinner.run_segment(start, end, state, rng)? {
            return Err(runaway(theta));
        }
    }
    let events = EventSequence::new(thinner.events, traj.horizon())?;
    Ok((events, thinner.stats))
}

fn simulate_until_count<R: Rng + ?Sized>(
    theta: &MmhpParams,
    count: usize,
    mode: HistoryMode,
    rng: &mut R,
) -> Result<Simulation> {
    if count == 0 {
        return Err(Error::domain("event count must be at least 1"));
    }
    if count > MAX_EVENTS {
        return Err(runaway(theta));
    }
    let gen = theta.generator();
    let initial = sample_initial(theta.delta0(), rng);
    let mut thinner = Thinner::new(theta, mode, count);
    let mut jumps = Vec::new();
    let mut state = initial;
    let mut t = 0.0;
    loop {
        let hold: f64 = Exp1.sample(rng);
        let end = t + hold / gen.leave_rate(state);
        if thinner.run_segment(t, end, state, rng)? {
            break;
        }
        if !end.is_finite() {
            return Err(Error::Runaway(
                "latent chain stalled before reaching the event count".into(),
            ));
        }
        jumps.push(end);
        state = state.other();
        t = end;
    }
    let horizon = *thinner.events.last().expect("count >= 1");
    let trajectory = LatentTrajectory::new(initial, jumps, horizon)?;
    let events = EventSequence::new(thinner.events, horizon)?;
    Ok(Simulation {
        events,
        trajectory,
        stats: thinner.stats,
    })
}

fn runaway(theta: &MmhpParams) -> Error {
    Error::Runaway(format!(
        "more than {MAX_EVENTS} events generated (alpha/beta = {:.3})",
        theta.alpha() / theta.beta()
    ))
}

struct Thinner<'a> {
    theta: &'a MmhpParams,
    mode: HistoryMode,
    excitation: Excitation,
    events: Vec<f64>,
    stats: ThinningStats,
    limit: usize,
}

impl<'a> Thinner<'a> {
    fn new(theta: &'a MmhpParams, mode: HistoryMode, limit: usize) -> Self {
        Self {
            theta,
            mode,
            excitation: Excitation::new(),
            events: Vec::new(),
            stats: ThinningStats::default(),
            limit,
        }
    }

    fn active_intensity(&self, t: f64) -> f64 {
        self.theta.lambda1() + self.theta.alpha() * self.excitation.value_at(t, self.theta.beta())
    }

    /// Generates events on `[start, end)`; returns true once `limit` is hit.
    fn run_segment<R: Rng + ?Sized>(
        &mut self,
        start: f64,
        end: f64,
        state: State,
        rng: &mut R,
    ) -> Result<bool> {
        let beta = self.theta.beta();
        let mut t = start;
        loop {
            let bound = match state {
                State::Inactive => self.theta.lambda0(),
                State::Active => self.active_intensity(t),
            };
            let gap: f64 = Exp1.sample(rng);
            let candidate = t + gap / bound;
            if candidate >= end {
                return Ok(false);
            }
            t = candidate;
            self.stats.proposals += 1;
            let accept = match state {
                State::Inactive => true,
                State::Active => {
                    let intensity = self.active_intensity(t);
                    if intensity > bound * (1.0 + 1e-12) {
                        return Err(Error::Numerical {
                            interval: self.events.len(),
                            message: format!(
                                "thinning bound violated at t={t}: {intensity} > {bound}"
                            ),
                        });
                    }
                    rng.random::<f64>() * bound < intensity
                }
            };
            if accept {
                self.events.push(t);
                self.stats.accepted += 1;
                if self.mode == HistoryMode::Full || state == State::Active {
                    self.excitation.add_event(t, beta);
                }
                if self.events.len() >= self.limit {
                    return Ok(true);
                }
            }
        }
    }
}
