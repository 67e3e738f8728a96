//! Two-state continuous-time Markov chain.
//!
//! State 0 is the inactive (Poisson) regime and state 1 the active (Hawkes)
//! regime. All matrices here are indexed `[from][to]` with row 0 for state 0.
//! Published layouts often list state 1 first; `TransitionMatrix::get`
//! takes explicit states so no transposition is ever implied.

use std::io::{Read, Write};

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum State {
    Inactive = 0,
    Active = 1,
}

impl State {
    pub const BOTH: [State; 2] = [State::Inactive, State::Active];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> State {
        if i == 0 {
            State::Inactive
        } else {
            State::Active
        }
    }

    pub fn other(self) -> State {
        match self {
            State::Inactive => State::Active,
            State::Active => State::Inactive,
        }
    }
}

/// Generator of the chain: `q0` is the rate of leaving state 0 and `q1` the
/// rate of leaving state 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    q0: f64,
    q1: f64,
}

impl Generator {
    pub fn new(q0: f64, q1: f64) -> Result<Self> {
        if !(q0.is_finite() && q0 > 0.0 && q1.is_finite() && q1 > 0.0) {
            return Err(Error::domain(format!(
                "switching rates must be positive and finite (q0={q0}, q1={q1})"
            )));
        }
        Ok(Self { q0, q1 })
    }

    pub fn q0(&self) -> f64 {
        self.q0
    }

    pub fn q1(&self) -> f64 {
        self.q1
    }

    /// Rate of leaving `state`.
    pub fn leave_rate(&self, state: State) -> f64 {
        match state {
            State::Inactive => self.q0,
            State::Active => self.q1,
        }
    }

    pub fn total_rate(&self) -> f64 {
        self.q0 + self.q1
    }

    /// Stationary distribution `[pi_0, pi_1] = [q1, q0] / (q0 + q1)`.
    pub fn stationary(&self) -> [f64; 2] {
        let s = self.total_rate();
        [self.q1 / s, self.q0 / s]
    }

    /// Generator matrix `[[-q0, q0], [q1, -q1]]`.
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        [[-self.q0, self.q0], [self.q1, -self.q1]]
    }

    /// Closed-form `P(t)` without the domain check; `t` must be `>= 0`.
    #[inline]
    pub(crate) fn transition_raw(&self, t: f64) -> [[f64; 2]; 2] {
        let s = self.q0 + self.q1;
        // exp(-inf) is 0, which gives the stationary limit
        let decay = (-s * t).exp();
        let grow = -(-s * t).exp_m1();
        [
            [(self.q1 + self.q0 * decay) / s, self.q0 * grow / s],
            [self.q1 * grow / s, (self.q0 + self.q1 * decay) / s],
        ]
    }

    /// `log P(t)` entries, finite whenever the entry is positive.
    pub(crate) fn log_transition_raw(&self, t: f64) -> [[f64; 2]; 2] {
        let s = self.q0 + self.q1;
        let ls = s.ln();
        let decay = (-s * t).exp();
        let log_grow = (-(-s * t).exp_m1()).ln();
        [
            [(self.q1 + self.q0 * decay).ln() - ls, self.q0.ln() + log_grow - ls],
            [self.q1.ln() + log_grow - ls, (self.q0 + self.q1 * decay).ln() - ls],
        ]
    }
}

/// `P_ij(t) = P(Z(u + t) = j | Z(u) = i)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionMatrix {
    entries: [[f64; 2]; 2],
}

impl TransitionMatrix {
    pub fn get(&self, from: State, to: State) -> f64 {
        self.entries[from.index()][to.index()]
    }

    /// Rows indexed by state, row 0 = state 0.
    pub fn entries(&self) -> [[f64; 2]; 2] {
        self.entries
    }
}

/// Transition probabilities over a duration `t >= 0`.
pub fn transition_matrix(gen: &Generator, t: f64) -> Result<TransitionMatrix> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::domain(format!("duration must be finite and >= 0, got {t}")));
    }
    Ok(TransitionMatrix {
        entries: gen.transition_raw(t),
    })
}

/// Piecewise-constant path of the chain on `[0, T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentTrajectory {
    initial: State,
    jumps: Vec<f64>,
    horizon: f64,
}

impl LatentTrajectory {
    /// `jumps` must be strictly increasing inside `(0, horizon)`; each one
    /// flips the state.
    pub fn new(initial: State, jumps: Vec<f64>, horizon: f64) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::validation(format!("invalid horizon {horizon}")));
        }
        let mut prev = 0.0;
        for &u in &jumps {
            if !(u > prev && u < horizon) {
                return Err(Error::validation(format!(
                    "jump times must increase strictly inside (0, {horizon}); got {u} after {prev}"
                )));
            }
            prev = u;
        }
        Ok(Self {
            initial,
            jumps,
            horizon,
        })
    }

    /// Builds a trajectory from `(start, state)` breakpoints, merging
    /// consecutive equal states.
    pub fn from_breakpoints(points: &[(f64, State)], horizon: f64) -> Result<Self> {
        let first = points
            .first()
            .ok_or_else(|| Error::validation("trajectory needs at least one breakpoint"))?;
        if first.0 != 0.0 {
            return Err(Error::validation("first breakpoint must be at time 0"));
        }
        let mut jumps = Vec::new();
        let mut current = first.1;
        for &(u, s) in &points[1..] {
            if s != current {
                jumps.push(u);
                current = s;
            }
        }
        Self::new(first.1, jumps, horizon)
    }

    pub fn initial(&self) -> State {
        self.initial
    }

    pub fn jumps(&self) -> &[f64] {
        &self.jumps
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// State during segment `k` (0-based; segment 0 starts at time 0).
    pub fn segment_state(&self, k: usize) -> State {
        if k.is_multiple_of(2) {
            self.initial
        } else {
            self.initial.other()
        }
    }

    /// `(start, end, state)` for every constant segment.
    pub fn segments(&self) -> Vec<(f64, f64, State)> {
        let mut out = Vec::with_capacity(self.jumps.len() + 1);
        let mut start = 0.0;
        for (k, &u) in self.jumps.iter().enumerate() {
            out.push((start, u, self.segment_state(k)));
            start = u;
        }
        out.push((start, self.horizon, self.segment_state(self.jumps.len())));
        out
    }

    /// Right-continuous state at time `t`.
    pub fn state_at(&self, t: f64) -> State {
        let k = self.jumps.partition_point(|&u| u <= t);
        self.segment_state(k)
    }

    pub fn final_state(&self) -> State {
        self.segment_state(self.jumps.len())
    }

    /// Total time spent in `state`.
    pub fn occupation(&self, state: State) -> f64 {
        self.segments()
            .iter()
            .filter(|s| s.2 == state)
            .map(|s| s.1 - s.0)
            .sum()
    }

    /// The same path cut at `horizon` (which must not exceed the current one).
    pub fn truncated(&self, horizon: f64) -> Result<Self> {
        let jumps = self.jumps.iter().copied().filter(|&u| u < horizon).collect();
        Self::new(self.initial, jumps, horizon)
    }

    /// CSV `u,state`: one row at time 0, then one per jump.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["u", "state"])?;
        w.write_record(["0e0".to_string(), self.initial.index().to_string()])?;
        for (k, u) in self.jumps.iter().enumerate() {
            w.write_record([format!("{u:e}"), self.segment_state(k + 1).index().to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads breakpoint rows as written by [`LatentTrajectory::write_csv`];
    /// the horizon is not stored in the file.
    pub fn read_csv<R: Read>(reader: R, horizon: f64) -> Result<Self> {
        let points = read_breakpoints(reader, "u,state")?;
        Self::from_breakpoints(&points, horizon)
    }
}

/// `(time, state)` rows under a two-column header.
pub(crate) fn read_breakpoints<R: Read>(reader: R, layout: &str) -> Result<Vec<(f64, State)>> {
    let mut r = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        if rec.len() != 2 {
            return Err(Error::Parse {
                line,
                message: format!("expected {layout}"),
            });
        }
        let t: f64 = rec[0].trim().parse().map_err(|e| Error::Parse {
            line,
            message: format!("{e}"),
        })?;
        let z = match rec[1].trim() {
            "0" => State::Inactive,
            "1" => State::Active,
            other => {
                return Err(Error::Parse {
                    line,
                    message: format!("state must be 0 or 1, got {other:?}"),
                })
            }
        };
        out.push((t, z));
    }
    Ok(out)
}

/// Log-probability density of a full chain path.
pub fn ctmc_loglik(traj: &LatentTrajectory, delta0: f64, gen: &Generator) -> Result<f64> {
    if !(delta0 > 0.0 && delta0 < 1.0) {
        return Err(Error::domain(format!("delta0 must lie in (0, 1), got {delta0}")));
    }
    let mut ll = match traj.initial {
        State::Inactive => delta0.ln(),
        State::Active => (1.0 - delta0).ln(),
    };
    let segments = traj.segments();
    let last = segments.len() - 1;
    for (k, &(start, end, state)) in segments.iter().enumerate() {
        let rate = gen.leave_rate(state);
        ll -= rate * (end - start);
        if k < last {
            // with two states the jump target is forced, so q_{s,s'} = q_s
            ll += rate.ln();
        }
    }
    Ok(ll)
}

/// Samples a path on `[0, horizon]`. `delta0` is `P(Z(0) = 0)` and may be 0 or 1.
pub fn sample_ctmc<R: Rng + ?Sized>(
    delta0: f64,
    gen: &Generator,
    horizon: f64,
    rng: &mut R,
) -> Result<LatentTrajectory> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::domain(format!("horizon must be positive, got {horizon}")));
    }
    if !(0.0..=1.0).contains(&delta0) {
        return Err(Error::domain(format!("delta0 must lie in [0, 1], got {delta0}")));
    }
    let initial = sample_initial(delta0, rng);
    let mut jumps = Vec::new();
    let mut state = initial;
    let mut t = 0.0;
    loop {
        let hold: f64 = Exp1.sample(rng);
        t += hold / gen.leave_rate(state);
        if t >= horizon {
            break;
        }
        jumps.push(t);
        state = state.other();
    }
    Ok(LatentTrajectory {
        initial,
        jumps,
        horizon,
    })
}

pub(crate) fn sample_initial<R: Rng + ?Sized>(delta0: f64, rng: &mut R) -> State {
    if rng.random::<f64>() < delta0 {
        State::Inactive
    } else {
        State::Active
    }
}
