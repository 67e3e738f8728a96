//! Approximate marginal likelihood of an MMHP.
//!
//! The latent path is summarized by its values at `t_0 = 0` and at every
//! event time (the embedded states `Z_0..Z_M`). Given consecutive embedded
//! states `(z_prev, z_next)` around an interval of length `dt`, the
//! expectation of `exp(-int lambda(Z(u), u) du)` over chain bridges is
//! replaced by the exponential of the bridge-weighted integrated intensity
//!
//! ```text
//! int_{t_{m-1}}^{t_m} sum_z lambda(z, u) mu_z(u) du,
//! mu_z(u) = P_{z_prev,z}(u - t_{m-1}) P_{z,z_next}(t_m - u) / P_{z_prev,z_next}(dt),
//! ```
//!
//! which makes each interval contribute
//! `log P_{z_prev,z_next}(dt) + log lambda_{z_next}(t_m) - integral`. The
//! embedded states are then summed out by a forward recursion in log space.
//!
//! The integral is evaluated with a fixed Gauss–Legendre rule applied on
//! panels sized to the kernel and chain time scales.
//! `taylor_form` switches to the first-order form `log(1 - integral)`,
//! floored at [`TAYLOR_FLOOR`].
//!
//! `lambda(1, u)` is the Hawkes intensity conditioned on every event before
//! `u`; `lambda(0, u) = lambda0`. When the horizon lies beyond the last
//! event, the event-free tail is scored with `has_event = false` and the
//! terminal state is summed out.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::ctmc::State;
use crate::hawkes::Excitation;
use crate::math::{log_add_exp, log_sum_exp};
use crate::{Error, EventSequence, Generator, MmhpParams, Result};

pub const DEFAULT_QUADRATURE_NODES: usize = 16;
pub const TAYLOR_FLOOR: f64 = 1e-12;
/// Largest event count accepted by [`ApproxLikelihood::brute_force_loglik`].
pub const BRUTE_FORCE_MAX_EVENTS: usize = 12;

/// Largest number of e-folds of any exponential within one panel.
pub const PANEL_EFOLDS: f64 = 8.0;
/// The excitation integral stops after this many kernel e-folds.
pub const KERNEL_CUTOFF: f64 = 40.0;
const MAX_PANELS: usize = 64;

fn panel_count(efolds: f64) -> usize {
    if efolds.is_finite() {
        ((efolds / PANEL_EFOLDS).ceil() as usize).clamp(1, MAX_PANELS)
    } else {
        MAX_PANELS
    }
}

/// Denominators below this switch the bridge weights to log-space.
const LINEAR_DOMAIN_FLOOR: f64 = 1e-250;

/// Gauss–Legendre nodes and weights mapped to `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn gauss_legendre(n: usize) -> Result<Self> {
        let degree = NonZeroUsize::new(n)
            .ok_or_else(|| Error::domain("quadrature needs at least one node"))?;
        let mut pairs: Vec<(f64, f64)> = GaussLegendre::new(degree)
            .as_node_weight_pairs()
            .iter()
            .map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (nodes, weights) = pairs.into_iter().unzip();
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let width = b - a;
        width
            * self
                .nodes
                .iter()
                .zip(&self.weights)
                .map(|(&x, &w)| w * f(a + width * x))
                .sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LikelihoodConfig {
    pub quadrature_nodes: usize,
    pub taylor_form: bool,
}

impl Default for LikelihoodConfig {
    fn default() -> Self {
        Self {
            quadrature_nodes: DEFAULT_QUADRATURE_NODES,
            taylor_form: false,
        }
    }
}

/// Log score of one interval, indexed `[z_prev][z_next]`.
pub type IntervalScores = [[f64; 2]; 2];

/// Interval scores for a whole sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingScores {
    /// `log P(Z(0) = z)`.
    pub initial: [f64; 2],
    /// One entry per event, scoring `(Z_{m-1}, Z_m)`.
    pub steps: Vec<IntervalScores>,
    /// The event-free tail `(t_M, T]`, if non-empty.
    pub tail: Option<IntervalScores>,
}

impl EmbeddingScores {
    /// Log weight of the tail with the terminal state summed out.
    pub fn tail_marginal(&self, last: State) -> f64 {
        match &self.tail {
            Some(t) => log_add_exp(t[last.index()][0], t[last.index()][1]),
            None => 0.0,
        }
    }

    /// Joint log score of one embedded-state path `Z_0..Z_M`.
    pub fn path_score(&self, path: &[State]) -> f64 {
        assert_eq!(path.len(), self.steps.len() + 1, "path must have M + 1 states");
        let mut score = self.initial[path[0].index()];
        for (step, w) in self.steps.iter().zip(path.windows(2)) {
            score += step[w[0].index()][w[1].index()];
        }
        score + self.tail_marginal(path[path.len() - 1])
    }
}

/// Forward variables `log A_m[z]`, `m = 0..M`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardState {
    pub log_alpha: Vec<[f64; 2]>,
    pub loglik: f64,
}

/// Approximate likelihood evaluator. Immutable and cheap to share.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxLikelihood {
    rule: QuadratureRule,
    taylor_form: bool,
}

impl Default for ApproxLikelihood {
    fn default() -> Self {
        Self::new(LikelihoodConfig::default()).expect("default config is valid")
    }
}

impl ApproxLikelihood {
    pub fn new(config: LikelihoodConfig) -> Result<Self> {
        Ok(Self {
            rule: QuadratureRule::gauss_legendre(config.quadrature_nodes)?,
            taylor_form: config.taylor_form,
        })
    }

    pub fn with_nodes(n: usize) -> Result<Self> {
        Self::new(LikelihoodConfig {
            quadrature_nodes: n,
            ..Default::default()
        })
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    pub fn taylor_form(&self) -> bool {
        self.taylor_form
    }

    /// Log term of one interval of length `dt` starting at `start`, where
    /// `history` holds the events up to and including `start`.
    #[allow(clippy::too_many_arguments)]
    pub fn interval_log_term(
        &self,
        theta: &MmhpParams,
        history: &[f64],
        start: f64,
        z_prev: State,
        z_next: State,
        dt: f64,
        has_event: bool,
    ) -> Result<f64> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::domain(format!("interval length must be positive, got {dt}")));
        }
        let excitation: f64 = history
            .iter()
            .take_while(|&&t| t <= start)
            .map(|&t| (-theta.beta() * (start - t)).exp())
            .sum();
        let scores = self.interval_scores(theta, excitation, dt, has_event, history.len())?;
        Ok(scores[z_prev.index()][z_next.index()])
    }

    /// The bridge-weighted integral `int_0^dt sum_z lambda(z, s) mu_z(s) ds`
    /// for every `(z_prev, z_next)`; `excitation` is the unit-kernel sum at
    /// the interval start.
    ///
    /// The rule is applied on equal panels. The baseline part
    /// `lambda0 mu_0 + lambda1 mu_1` covers `[0, dt]` with panels spanning at
    /// most [`PANEL_EFOLDS`] e-folds of the chain's mixing rate. The
    /// excitation part `alpha * excitation * exp(-beta s) mu_1(s)` covers
    /// `[0, min(dt, KERNEL_CUTOFF / beta)]` with panels bounded in both the
    /// kernel and the mixing e-folds; past the cutoff the kernel is below
    /// `exp(-KERNEL_CUTOFF)`.
    pub fn bridge_integrals(
        &self,
        theta: &MmhpParams,
        excitation: f64,
        dt: f64,
    ) -> [[f64; 2]; 2] {
        let gen = theta.generator();
        let (lambda0, lambda1, boost, beta) = (
            theta.lambda0(),
            theta.lambda1(),
            theta.alpha() * excitation,
            theta.beta(),
        );
        let mixing = gen.total_rate();
        let den = gen.transition_raw(dt);
        let linear = den.iter().flatten().all(|&p| p > LINEAR_DOMAIN_FLOOR);
        let log_den = gen.log_transition_raw(dt);
        // mu[zp][zn][z] at offset s
        let bridge = |s: f64| -> [[[f64; 2]; 2]; 2] {
            let mut mu = [[[0.0; 2]; 2]; 2];
            if linear {
                let (pa, pb) = (gen.transition_raw(s), gen.transition_raw(dt - s));
                for zp in 0..2 {
                    for zn in 0..2 {
                        for z in 0..2 {
                            mu[zp][zn][z] = pa[zp][z] * pb[z][zn] / den[zp][zn];
                        }
                    }
                }
            } else {
                let (la, lb) = (gen.log_transition_raw(s), gen.log_transition_raw(dt - s));
                for zp in 0..2 {
                    for zn in 0..2 {
                        for z in 0..2 {
                            mu[zp][zn][z] = (la[zp][z] + lb[z][zn] - log_den[zp][zn]).exp();
                        }
                    }
                }
            }
            mu
        };
        let mut acc = [[0.0; 2]; 2];
        let panels = panel_count(mixing * dt);
        self.for_each_node(0.0, dt, panels, |s, w| {
            let mu = bridge(s);
            for zp in 0..2 {
                for zn in 0..2 {
                    acc[zp][zn] += w * (lambda0 * mu[zp][zn][0] + lambda1 * mu[zp][zn][1]);
                }
            }
        });
        if boost > 0.0 {
            let reach = dt.min(KERNEL_CUTOFF / beta);
            let panels = panel_count(beta.max(mixing) * reach);
            self.for_each_node(0.0, reach, panels, |s, w| {
                let mu = bridge(s);
                let k = w * boost * (-beta * s).exp();
                for zp in 0..2 {
                    for zn in 0..2 {
                        acc[zp][zn] += k * mu[zp][zn][1];
                    }
                }
            });
        }
        acc
    }

    /// Calls `f(s, weight)` for the rule applied on `panels` equal pieces
    /// of `[a, b]`.
    fn for_each_node<F: FnMut(f64, f64)>(&self, a: f64, b: f64, panels: usize, mut f: F) {
        let width = (b - a) / panels as f64;
        for p in 0..panels {
            let start = a + width * p as f64;
            for (&x, &w) in self.rule.nodes().iter().zip(self.rule.weights()) {
                f(start + width * x, width * w);
            }
        }
    }

    fn interval_scores(
        &self,
        theta: &MmhpParams,
        excitation: f64,
        dt: f64,
        has_event: bool,
        interval: usize,
    ) -> Result<IntervalScores> {
        let integral = self.bridge_integrals(theta, excitation, dt);
        let log_p = theta.generator().log_transition_raw(dt);
        let log_rate = if has_event {
            let active = theta.lambda1() + theta.alpha() * excitation * (-theta.beta() * dt).exp();
            [theta.lambda0().ln(), active.ln()]
        } else {
            [0.0, 0.0]
        };
        let mut out = [[0.0; 2]; 2];
        for zp in 0..2 {
            for zn in 0..2 {
                let i = integral[zp][zn];
                if !i.is_finite() {
                    return Err(Error::Numerical {
                        interval,
                        message: format!("bridge integral is {i}"),
                    });
                }
                let survival = if self.taylor_form {
                    (1.0 - i).max(TAYLOR_FLOOR).ln()
                } else {
                    -i
                };
                let v = log_p[zp][zn] + log_rate[zn] + survival;
                if v.is_nan() || v == f64::INFINITY {
                    return Err(Error::Numerical {
                        interval,
                        message: format!("interval log term is {v}"),
                    });
                }
                out[zp][zn] = v;
            }
        }
        Ok(out)
    }

    /// Scores of every interval of `seq`, including the event-free tail.
    pub fn embedding_scores(&self, theta: &MmhpParams, seq: &EventSequence) -> Result<EmbeddingScores> {
        let beta = theta.beta();
        let mut excitation = Excitation::new();
        let mut prev = 0.0;
        let mut steps = Vec::with_capacity(seq.len());
        for (m, &t) in seq.times().iter().enumerate() {
            steps.push(self.interval_scores(theta, excitation.sum(), t - prev, true, m)?);
            excitation.add_event(t, beta);
            prev = t;
        }
        let tail_len = seq.horizon() - prev;
        let tail = if tail_len > 0.0 {
            Some(self.interval_scores(theta, excitation.sum(), tail_len, false, seq.len())?)
        } else {
            None
        };
        Ok(EmbeddingScores {
            initial: [theta.log_initial(State::Inactive), theta.log_initial(State::Active)],
            steps,
            tail,
        })
    }

    /// Forward recursion over the embedded states.
    pub fn forward(&self, theta: &MmhpParams, seq: &EventSequence) -> Result<ForwardState> {
        let scores = self.embedding_scores(theta, seq)?;
        Ok(forward_from_scores(&scores))
    }

    /// Approximate marginal log-likelihood `log P(H(T) | theta)`.
    pub fn forward_loglik(&self, theta: &MmhpParams, seq: &EventSequence) -> Result<f64> {
        let state = self.forward(theta, seq)?;
        if state.loglik.is_nan() || state.loglik == f64::INFINITY {
            let interval = state
                .log_alpha
                .iter()
                .position(|a| a.iter().any(|v| v.is_nan()))
                .unwrap_or(seq.len());
            return Err(Error::Numerical {
                interval,
                message: format!("marginal log-likelihood is {}", state.loglik),
            });
        }
        Ok(state.loglik)
    }

    /// Exact sum over all `2^(M+1)` embedded-state paths.
    pub fn brute_force_loglik(&self, theta: &MmhpParams, seq: &EventSequence) -> Result<f64> {
        if seq.len() > BRUTE_FORCE_MAX_EVENTS {
            return Err(Error::domain(format!(
                "brute-force enumeration refused for {} events (max {BRUTE_FORCE_MAX_EVENTS})",
                seq.len()
            )));
        }
        let scores = self.embedding_scores(theta, seq)?;
        let n = seq.len() + 1;
        let totals: Vec<f64> = (0u32..1 << n)
            .map(|mask| scores.path_score(&path_from_mask(mask, n)))
            .collect();
        Ok(log_sum_exp(&totals))
    }
}

/// Embedded-state path whose bit `m` of `mask` is `Z_m`.
pub fn path_from_mask(mask: u32, len: usize) -> Vec<State> {
    (0..len).map(|m| State::from_index(((mask >> m) & 1) as usize)).collect()
}

pub(crate) fn forward_from_scores(scores: &EmbeddingScores) -> ForwardState {
    let mut log_alpha = Vec::with_capacity(scores.steps.len() + 1);
    let mut a = scores.initial;
    log_alpha.push(a);
    for step in &scores.steps {
        let next = [
            log_add_exp(a[0] + step[0][0], a[1] + step[1][0]),
            log_add_exp(a[0] + step[0][1], a[1] + step[1][1]),
        ];
        a = next;
        log_alpha.push(a);
    }
    let loglik = log_add_exp(
        a[0] + scores.tail_marginal(State::Inactive),
        a[1] + scores.tail_marginal(State::Active),
    );
    ForwardState { log_alpha, loglik }
}

/// Bridge probabilities `[mu_0(u), mu_1(u)]` for a chain pinned at
/// `z_prev` at offset 0 and `z_next` at offset `dt`.
pub fn mu_state_prob(
    gen: &Generator,
    z_prev: State,
    z_next: State,
    dt: f64,
    u: f64,
) -> Result<[f64; 2]> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::domain(format!("interval length must be positive, got {dt}")));
    }
    if !(0.0..=dt).contains(&u) {
        return Err(Error::domain(format!("offset {u} outside [0, {dt}]")));
    }
    let log_den = gen.log_transition_raw(dt)[z_prev.index()][z_next.index()];
    if log_den == f64::NEG_INFINITY {
        return Err(Error::Numerical {
            interval: 0,
            message: "bridge endpoint probability underflows".into(),
        });
    }
    let la = gen.log_transition_raw(u);
    let lb = gen.log_transition_raw(dt - u);
    let (zp, zn) = (z_prev.index(), z_next.index());
    Ok([
        (la[zp][0] + lb[0][zn] - log_den).exp(),
        (la[zp][1] + lb[1][zn] - log_den).exp(),
    ])
}
