//! Latent-state decoding.
//!
//! [`viterbi`] finds the most probable embedded states `Z_0..Z_M` under the
//! same interval scores the likelihood uses. [`interpolate_trajectory`]
//! fills in each gap on a grid. At an interior time `t` of
//! `(t_m, t_{m+1})` with decoded endpoints `(a, b)` the candidate `z` is
//! scored by splitting the gap at `t` into two bridges pinned at `z`:
//!
//! ```text
//! score(z) = log P_{a,z}(t - t_m) + log P_{z,b}(t_{m+1} - t)
//!          - I_{a->z}(t_m, t) - I_{z->b}(t, t_{m+1})
//! ```
//!
//! where `I_{x->y}(c, d)` is the bridge-weighted integrated intensity over
//! `[c, d]` (the same integral as in the likelihood). The first two terms
//! are `log mu_z(t)` up to a constant; the integrals are the event-free
//! penalty of the sub-interval on either side of `t`. Past the last event
//! the right endpoint is summed out. Ties go to state 0.
//!
//! [`majority_vote`] combines per-draw trajectories decoded on the same grid.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ctmc::State;
use crate::hawkes::Excitation;
use crate::likelihood::ApproxLikelihood;
use crate::math::log_add_exp;
use crate::{Error, EventSequence, LatentTrajectory, MmhpParams, Result};

pub const DEFAULT_POINTS_PER_INTERVAL: usize = 50;
pub const MAX_POINTS_PER_INTERVAL: usize = 200;
pub const DEFAULT_VOTE_DRAWS: usize = 50;

/// Most probable embedded-state path.
#[derive(Debug, Clone, PartialEq)]
pub struct ViterbiPath {
    /// `Z_0..Z_M`.
    pub states: Vec<State>,
    /// Joint log score of the path, tail included.
    pub score: f64,
    /// `v_m[z]`, `m = 0..M`.
    pub table: Vec<[f64; 2]>,
    /// `b_m[z]`: best predecessor of `z` at step `m` (row 0 unused).
    pub backpointers: Vec<[State; 2]>,
}

pub fn viterbi(lik: &ApproxLikelihood, theta: &MmhpParams, seq: &EventSequence) -> Result<ViterbiPath> {
    let scores = lik.embedding_scores(theta, seq)?;
    let mut table = Vec::with_capacity(seq.len() + 1);
    let mut backpointers = Vec::with_capacity(seq.len() + 1);
    let mut v = scores.initial;
    table.push(v);
    backpointers.push([State::Inactive; 2]);
    for step in &scores.steps {
        let mut next = [0.0; 2];
        let mut back = [State::Inactive; 2];
        for zn in 0..2 {
            let from0 = v[0] + step[0][zn];
            let from1 = v[1] + step[1][zn];
            if from1 > from0 {
                next[zn] = from1;
                back[zn] = State::Active;
            } else {
                next[zn] = from0;
            }
        }
        v = next;
        table.push(v);
        backpointers.push(back);
    }
    let end0 = v[0] + scores.tail_marginal(State::Inactive);
    let end1 = v[1] + scores.tail_marginal(State::Active);
    let (mut z, score) = if end1 > end0 {
        (State::Active, end1)
    } else {
        (State::Inactive, end0)
    };
    if score.is_nan() {
        return Err(Error::Numerical {
            interval: seq.len(),
            message: "Viterbi score is NaN".into(),
        });
    }
    let mut states = vec![State::Inactive; seq.len() + 1];
    for m in (0..=seq.len()).rev() {
        states[m] = z;
        if m > 0 {
            z = backpointers[m][z.index()];
        }
    }
    Ok(ViterbiPath {
        states,
        score,
        table,
        backpointers,
    })
}

/// Grid used between consecutive events (and in the tail).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridSpec {
    /// Split every gap into this many equal steps.
    PerInterval(usize),
    /// Fixed step length, at most [`MAX_POINTS_PER_INTERVAL`] per gap.
    Step(f64),
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::PerInterval(DEFAULT_POINTS_PER_INTERVAL)
    }
}

impl GridSpec {
    fn steps(&self, dt: f64) -> Result<usize> {
        let n = match *self {
            GridSpec::PerInterval(n) if n >= 1 => n,
            GridSpec::Step(h) if h > 0.0 && h.is_finite() => (dt / h).ceil().max(1.0) as usize,
            _ => return Err(Error::domain(format!("invalid grid: {self:?}"))),
        };
        Ok(n.min(MAX_POINTS_PER_INTERVAL))
    }
}

/// Decoded latent path: a grid over `[0, T]` with the event times (and
/// `t_0 = 0`) among the grid points.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedTrajectory {
    times: Vec<f64>,
    states: Vec<State>,
    freq_state1: Vec<f64>,
    /// Grid index of `t_0 = 0, t_1, .., t_M`.
    event_index: Vec<usize>,
    horizon: f64,
}

impl DecodedTrajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn freq_state1(&self) -> &[f64] {
        &self.freq_state1
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `(t_m, z_m)` for `m = 0..M`, `t_0 = 0`.
    pub fn event_states(&self) -> Vec<(f64, State)> {
        self.event_index.iter().map(|&i| (self.times[i], self.states[i])).collect()
    }

    /// Piecewise-constant path that switches halfway between grid points
    /// whose states differ.
    pub fn to_latent(&self) -> Result<LatentTrajectory> {
        let jumps: Vec<f64> = self
            .times
            .windows(2)
            .zip(self.states.windows(2))
            .filter(|(_, s)| s[0] != s[1])
            .map(|(t, _)| 0.5 * (t[0] + t[1]))
            .collect();
        LatentTrajectory::new(self.states[0], jumps, self.horizon)
    }

    /// CSV `t,state,freq_state1`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "state", "freq_state1"])?;
        for ((t, s), f) in self.times.iter().zip(&self.states).zip(&self.freq_state1) {
            w.write_record([format!("{t:e}"), s.index().to_string(), format!("{f:e}")])?;
        }
        w.flush()?;
        Ok(())
    }

    /// CSV `t_m,z_m`, starting with `t_0 = 0`.
    pub fn write_event_states_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_event_states(&self.event_states(), writer)
    }

    /// Reads the format written by [`DecodedTrajectory::write_csv`].
    /// Event positions are recovered from `events`.
    pub fn read_csv<R: Read>(reader: R, events: &EventSequence) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let (mut times, mut states, mut freq) = (Vec::new(), Vec::new(), Vec::new());
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let line = i + 2;
            let num = |k: usize| -> Result<f64> {
                rec.get(k)
                    .ok_or_else(|| Error::Parse {
                        line,
                        message: "expected t,state,freq_state1".into(),
                    })?
                    .trim()
                    .parse()
                    .map_err(|e| Error::Parse {
                        line,
                        message: format!("{e}"),
                    })
            };
            times.push(num(0)?);
            states.push(parse_state(&rec[1], line)?);
            freq.push(num(2)?);
        }
        let mut event_index = Vec::with_capacity(events.len() + 1);
        let mut j = 0;
        for &t in std::iter::once(&0.0).chain(events.times()) {
            while j < times.len() && times[j] != t {
                j += 1;
            }
            if j == times.len() {
                return Err(Error::validation(format!("trajectory grid lacks event time {t}")));
            }
            event_index.push(j);
        }
        Ok(Self {
            times,
            states,
            freq_state1: freq,
            event_index,
            horizon: events.horizon(),
        })
    }
}

fn parse_state(s: &str, line: usize) -> Result<State> {
    match s.trim() {
        "0" => Ok(State::Inactive),
        "1" => Ok(State::Active),
        other => Err(Error::Parse {
            line,
            message: format!("state must be 0 or 1, got {other:?}"),
        }),
    }
}

pub fn write_event_states<W: Write>(states: &[(f64, State)], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["t_m", "z_m"])?;
    for (t, z) in states {
        w.write_record([format!("{t:e}"), z.index().to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `t_m,z_m` rows; the first row is `t_0 = 0`.
pub fn read_event_states<R: Read>(reader: R) -> Result<Vec<(f64, State)>> {
    crate::ctmc::read_breakpoints(reader, "t_m,z_m")
}

/// Candidate scores at offset `s` into a gap of length `dt` that starts
/// with excitation `exc` (unit-kernel sum), from state `a` to `b`
/// (`None` for a free right end).
fn split_scores(
    lik: &ApproxLikelihood,
    theta: &MmhpParams,
    exc: f64,
    s: f64,
    dt: f64,
    a: State,
    b: Option<State>,
) -> [f64; 2] {
    let gen = theta.generator();
    let left_p = gen.log_transition_raw(s);
    let left_i = lik.bridge_integrals(theta, exc, s);
    let rest = dt - s;
    let mut out = [0.0; 2];
    for z in State::BOTH {
        let left = left_p[a.index()][z.index()] - left_i[a.index()][z.index()];
        let right = if rest > 0.0 {
            let right_p = gen.log_transition_raw(rest);
            let right_i = lik.bridge_integrals(theta, exc * (-theta.beta() * s).exp(), rest);
            let r = |y: State| right_p[z.index()][y.index()] - right_i[z.index()][y.index()];
            match b {
                Some(y) => r(y),
                None => log_add_exp(r(State::Inactive), r(State::Active)),
            }
        } else {
            match b {
                Some(y) if y != z => f64::NEG_INFINITY,
                _ => 0.0,
            }
        };
        out[z.index()] = left + right;
    }
    out
}

fn argmax_state(scores: [f64; 2]) -> State {
    if scores[1] > scores[0] {
        State::Active
    } else {
        State::Inactive
    }
}

/// Fills every gap of `seq` on a grid given decoded event-time states.
pub fn interpolate_trajectory(
    lik: &ApproxLikelihood,
    theta: &MmhpParams,
    seq: &EventSequence,
    path: &[State],
    grid: GridSpec,
) -> Result<DecodedTrajectory> {
    if path.len() != seq.len() + 1 {
        return Err(Error::domain(format!(
            "path has {} states but the sequence needs {}",
            path.len(),
            seq.len() + 1
        )));
    }
    let beta = theta.beta();
    let mut times = vec![0.0];
    let mut states = vec![path[0]];
    let mut event_index = vec![0];
    let mut exc = Excitation::new();
    let mut prev = 0.0;

    let fill = |times: &mut Vec<f64>,
                states: &mut Vec<State>,
                start: f64,
                dt: f64,
                e: f64,
                a: State,
                b: Option<State>|
     -> Result<()> {
        let n = grid.steps(dt)?;
        for k in 1..n {
            let s = dt * k as f64 / n as f64;
            let t = start + s;
            if t <= *times.last().expect("non-empty") || s >= dt {
                continue;
            }
            times.push(t);
            states.push(argmax_state(split_scores(lik, theta, e, s, dt, a, b)));
        }
        Ok(())
    };

    for (m, &t) in seq.times().iter().enumerate() {
        fill(&mut times, &mut states, prev, t - prev, exc.sum(), path[m], Some(path[m + 1]))?;
        exc.add_event(t, beta);
        times.push(t);
        states.push(path[m + 1]);
        event_index.push(times.len() - 1);
        prev = t;
    }
    let tail = seq.horizon() - prev;
    if tail > 0.0 {
        let last = path[seq.len()];
        fill(&mut times, &mut states, prev, tail, exc.sum(), last, None)?;
        times.push(seq.horizon());
        states.push(argmax_state(split_scores(lik, theta, exc.sum(), tail, tail, last, None)));
    }
    let freq_state1 = states.iter().map(|s| s.index() as f64).collect();
    Ok(DecodedTrajectory {
        times,
        states,
        freq_state1,
        event_index,
        horizon: seq.horizon(),
    })
}

/// Per-point modal state across trajectories on a common grid; exact ties
/// go to state 0.
pub fn majority_vote(trajectories: &[DecodedTrajectory]) -> Result<DecodedTrajectory> {
    let first = trajectories
        .first()
        .ok_or_else(|| Error::domain("majority vote needs at least one trajectory"))?;
    for t in &trajectories[1..] {
        if t.times != first.times || t.event_index != first.event_index {
            return Err(Error::domain("trajectories are on different grids"));
        }
    }
    let n = trajectories.len();
    let mut states = Vec::with_capacity(first.len());
    let mut freq = Vec::with_capacity(first.len());
    for i in 0..first.len() {
        let ones = trajectories.iter().filter(|t| t.states[i] == State::Active).count();
        states.push(if 2 * ones > n { State::Active } else { State::Inactive });
        freq.push(ones as f64 / n as f64);
    }
    Ok(DecodedTrajectory {
        times: first.times.clone(),
        states,
        freq_state1: freq,
        event_index: first.event_index.clone(),
        horizon: first.horizon,
    })
}

/// Viterbi plus interpolation for one parameter value.
pub fn decode(
    lik: &ApproxLikelihood,
    theta: &MmhpParams,
    seq: &EventSequence,
    grid: GridSpec,
) -> Result<DecodedTrajectory> {
    let path = viterbi(lik, theta, seq)?;
    interpolate_trajectory(lik, theta, seq, &path.states, grid)
}

/// Decodes under every draw in parallel and takes the majority vote.
pub fn decode_posterior(
    lik: &ApproxLikelihood,
    draws: &[MmhpParams],
    seq: &EventSequence,
    grid: GridSpec,
) -> Result<DecodedTrajectory> {
    let decoded: Vec<DecodedTrajectory> = draws
        .par_iter()
        .map(|theta| decode(lik, theta, seq, grid))
        .collect::<Result<_>>()?;
    majority_vote(&decoded)
}
