//! Univariate Hawkes process with exponential kernel, plus the Poisson and
//! Hawkes maximum-likelihood baselines.
//!
//! The intensity counts history strictly before `t`:
//!
//! ```text
//! lambda(t) = lambda1 + sum_{t_j < t} alpha * exp(-beta * (t - t_j))
//! ```

use argmin::core::{CostFunction, Executor};
use argmin::solver::neldermead::NelderMead;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, EventSequence, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HawkesParams {
    lambda1: f64,
    alpha: f64,
    beta: f64,
}

impl HawkesParams {
    /// `alpha = 0` is accepted and reduces the process to Poisson.
    pub fn new(lambda1: f64, alpha: f64, beta: f64) -> Result<Self> {
        let ok = lambda1.is_finite()
            && lambda1 > 0.0
            && alpha.is_finite()
            && alpha >= 0.0
            && beta.is_finite()
            && beta > 0.0;
        if !ok {
            return Err(Error::domain(format!(
                "invalid Hawkes parameters (lambda1={lambda1}, alpha={alpha}, beta={beta})"
            )));
        }
        Ok(Self {
            lambda1,
            alpha,
            beta,
        })
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Mean number of offspring per event, `alpha / beta`.
    pub fn branching_ratio(&self) -> f64 {
        self.alpha / self.beta
    }
}

/// Decayed event count `sum exp(-beta (at - t_j))` over events `t_j <= at`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Excitation {
    at: f64,
    sum: f64,
}

impl Excitation {
    pub(crate) fn new() -> Self {
        Self { at: 0.0, sum: 0.0 }
    }

    pub(crate) fn advance(&mut self, t: f64, beta: f64) {
        if t > self.at {
            self.sum *= (-beta * (t - self.at)).exp();
            self.at = t;
        }
    }

    pub(crate) fn add_event(&mut self, t: f64, beta: f64) {
        self.advance(t, beta);
        self.sum += 1.0;
    }

    /// Value at the last update time.
    pub(crate) fn sum(&self) -> f64 {
        self.sum
    }

    pub(crate) fn value_at(&self, t: f64, beta: f64) -> f64 {
        self.sum * (-beta * (t - self.at)).exp()
    }
}

/// Conditional intensity at `t` given `history` (sorted event times).
pub fn hawkes_intensity(p: &HawkesParams, history: &[f64], t: f64) -> f64 {
    let excitation: f64 = history
        .iter()
        .take_while(|&&tj| tj < t)
        .map(|&tj| (-p.beta * (t - tj)).exp())
        .sum();
    p.lambda1 + p.alpha * excitation
}

/// `int_a^b lambda(u) du` in closed form.
pub fn hawkes_compensator(p: &HawkesParams, history: &[f64], a: f64, b: f64) -> Result<f64> {
    if !(a >= 0.0 && a <= b && b.is_finite()) {
        return Err(Error::domain(format!("need 0 <= a <= b, got a={a}, b={b}")));
    }
    let width = b - a;
    let grow = -(-p.beta * width).exp_m1();
    let mut kernel = 0.0;
    for &tj in history {
        if tj < a {
            kernel += (-p.beta * (a - tj)).exp() * grow;
        } else if tj < b {
            kernel += -(-p.beta * (b - tj)).exp_m1();
        } else {
            break;
        }
    }
    Ok(p.lambda1 * width + p.alpha / p.beta * kernel)
}

/// Exact log-likelihood on `[0, T]` via the O(M) recursion.
pub fn hawkes_loglik(p: &HawkesParams, seq: &EventSequence) -> f64 {
    let mut recursion = 0.0;
    let mut prev: Option<f64> = None;
    let mut log_intensity = 0.0;
    for &t in seq.times() {
        if let Some(tp) = prev {
            recursion = (-p.beta * (t - tp)).exp() * (1.0 + recursion);
        }
        log_intensity += (p.lambda1 + p.alpha * recursion).ln();
        prev = Some(t);
    }
    let horizon = seq.horizon();
    let kernel: f64 = seq
        .times()
        .iter()
        .map(|&t| -(-p.beta * (horizon - t)).exp_m1())
        .sum();
    log_intensity - p.lambda1 * horizon - p.alpha / p.beta * kernel
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineModel {
    Poisson,
    Hawkes,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum BaselineFit {
    Poisson { rate: f64, loglik: f64 },
    Hawkes { params: HawkesParams, loglik: f64 },
}

impl BaselineFit {
    pub fn loglik(&self) -> f64 {
        match *self {
            BaselineFit::Poisson { loglik, .. } | BaselineFit::Hawkes { loglik, .. } => loglik,
        }
    }

    /// The fit viewed as a Hawkes process (`alpha = 0` for Poisson).
    pub fn as_hawkes(&self) -> HawkesParams {
        match *self {
            BaselineFit::Poisson { rate, .. } => HawkesParams {
                lambda1: rate,
                alpha: 0.0,
                beta: 1.0,
            },
            BaselineFit::Hawkes { params, .. } => params,
        }
    }
}

const HAWKES_RESTARTS: usize = 5;
const RESTART_SEED: u64 = 0x4841_574b_4553;

/// Maximum-likelihood fit of a homogeneous Poisson or Hawkes model.
pub fn fit_baseline(model: BaselineModel, seq: &EventSequence) -> Result<BaselineFit> {
    let m = seq.len();
    match model {
        BaselineModel::Poisson => {
            if m < 1 {
                return Err(Error::Estimation(
                    "Poisson fit needs at least one event".into(),
                ));
            }
            let rate = m as f64 / seq.horizon();
            let loglik = m as f64 * rate.ln() - rate * seq.horizon();
            Ok(BaselineFit::Poisson { rate, loglik })
        }
        BaselineModel::Hawkes => fit_hawkes(seq),
    }
}

struct NegLoglik<'a> {
    seq: &'a EventSequence,
}

impl CostFunction for NegLoglik<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        let (l, a, b) = (x[0].exp(), x[1].exp(), x[2].exp());
        if !(l.is_finite() && a.is_finite() && b.is_finite() && l > 0.0 && b > 0.0) {
            return Ok(f64::INFINITY);
        }
        let p = HawkesParams {
            lambda1: l,
            alpha: a,
            beta: b,
        };
        let ll = hawkes_loglik(&p, self.seq);
        Ok(if ll.is_finite() { -ll } else { f64::INFINITY })
    }
}

fn fit_hawkes(seq: &EventSequence) -> Result<BaselineFit> {
    let m = seq.len();
    if m < 2 {
        return Err(Error::Estimation("Hawkes fit needs at least two events".into()));
    }
    let rate = m as f64 / seq.horizon();
    let mut rng = ChaCha8Rng::seed_from_u64(RESTART_SEED);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for restart in 0..HAWKES_RESTARTS {
        let start = if restart == 0 {
            vec![(0.5 * rate).ln(), (0.5 * rate).ln(), rate.ln()]
        } else {
            vec![
                (rate * rng.random_range(0.1..1.0)).ln(),
                (rate * rng.random_range(0.05..2.0)).ln(),
                (rate * rng.random_range(0.2..5.0)).ln(),
            ]
        };
        let (cost, x) = nelder_mead(seq, start)?;
        if best.as_ref().is_none_or(|(c, _)| cost < *c) {
            best = Some((cost, x));
        }
    }
    let (cost, x) = best.expect("at least one restart");
    if !cost.is_finite() {
        return Err(Error::Estimation("Hawkes likelihood is not finite".into()));
    }
    let params = HawkesParams::new(x[0].exp(), x[1].exp(), x[2].exp())?;
    if params.alpha >= params.beta {
        log::warn!(
            "fitted Hawkes process is non-stationary (alpha={:.4} >= beta={:.4})",
            params.alpha,
            params.beta
        );
    }
    Ok(BaselineFit::Hawkes {
        params,
        loglik: -cost,
    })
}

fn nelder_mead(seq: &EventSequence, start: Vec<f64>) -> Result<(f64, Vec<f64>)> {
    let mut simplex = vec![start.clone()];
    for i in 0..start.len() {
        let mut v = start.clone();
        v[i] += 0.5;
        simplex.push(v);
    }
    let problem = NegLoglik { seq };
    let scale = problem
        .cost(&start)
        .ok()
        .filter(|c| c.is_finite())
        .map_or(1.0, |c| c.abs().max(1.0));
    let solver = NelderMead::new(simplex)
        .with_sd_tolerance(1e-9 * scale)
        .map_err(|e| Error::Estimation(e.to_string()))?;
    let res = Executor::new(problem, solver)
        .configure(|state| state.max_iters(5000))
        .run()
        .map_err(|e| Error::Estimation(e.to_string()))?;
    let state = res.state();
    let x = state
        .best_param
        .clone()
        .ok_or_else(|| Error::Estimation("optimizer returned no parameters".into()))?;
    Ok((state.best_cost, x))
}
