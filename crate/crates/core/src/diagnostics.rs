//! Goodness of fit by time rescaling, and latent-path error metrics.
//!
//! Given a latent path, the compensators `Lambda_m = int_{t_{m-1}}^{t_m}
//! lambda_{Z(u)}(u) du` (with `t_0 = 0`) of a correctly specified model are
//! iid Exp(1).

use serde::{Deserialize, Serialize};

use crate::ctmc::State;
use crate::decoding::DecodedTrajectory;
use crate::hawkes::{BaselineFit, Excitation};
use crate::{Error, EventSequence, LatentTrajectory, MmhpParams, Result};

/// Number of terms of the Kolmogorov series.
pub const KOLMOGOROV_TERMS: usize = 100;

/// Anything that can be read as a piecewise-constant latent path.
pub trait PiecewiseState {
    fn latent(&self) -> Result<LatentTrajectory>;
}

impl PiecewiseState for LatentTrajectory {
    fn latent(&self) -> Result<LatentTrajectory> {
        Ok(self.clone())
    }
}

impl PiecewiseState for DecodedTrajectory {
    fn latent(&self) -> Result<LatentTrajectory> {
        self.to_latent()
    }
}

fn same_horizon(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs())
}

/// Integrated intensity between consecutive events under the path `traj`.
pub fn compensators<P: PiecewiseState + ?Sized>(
    theta: &MmhpParams,
    seq: &EventSequence,
    traj: &P,
) -> Result<Vec<f64>> {
    let traj = traj.latent()?;
    if !same_horizon(traj.horizon(), seq.horizon()) {
        return Err(Error::domain(format!(
            "trajectory horizon {} does not match sequence horizon {}",
            traj.horizon(),
            seq.horizon()
        )));
    }
    let (lambda0, lambda1, alpha, beta) = (theta.lambda0(), theta.lambda1(), theta.alpha(), theta.beta());
    let jumps = traj.jumps();
    let mut next_jump = 0;
    let mut state = traj.initial();
    let mut exc = Excitation::new();
    let mut prev = 0.0;
    let mut out = Vec::with_capacity(seq.len());
    for &t in seq.times() {
        let mut total = 0.0;
        let mut a = prev;
        loop {
            let b = match jumps.get(next_jump) {
                Some(&j) if j < t => j,
                _ => t,
            };
            total += match state {
                State::Inactive => lambda0 * (b - a),
                State::Active => {
                    let decay = exc.value_at(a, beta);
                    lambda1 * (b - a) + alpha * decay * (-(-beta * (b - a)).exp_m1()) / beta
                }
            };
            if b == t {
                break;
            }
            a = b;
            next_jump += 1;
            state = state.other();
        }
        out.push(total);
        exc.add_event(t, beta);
        prev = t;
    }
    Ok(out)
}

/// Compensators of a fitted homogeneous Poisson or Hawkes model.
pub fn baseline_compensators(fit: &BaselineFit, seq: &EventSequence) -> Vec<f64> {
    let p = fit.as_hawkes();
    let (lambda1, alpha, beta) = (p.lambda1(), p.alpha(), p.beta());
    let mut exc = Excitation::new();
    let mut prev = 0.0;
    seq.times()
        .iter()
        .map(|&t| {
            let dt = t - prev;
            let c = lambda1 * dt + alpha * exc.value_at(prev, beta) * (-(-beta * dt).exp_m1()) / beta;
            exc.add_event(t, beta);
            prev = t;
            c
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "p")]
    pub p_value: f64,
    pub n: usize,
}

/// One-sample KS test against the Exp(1) distribution.
pub fn ks_exp1(values: &[f64]) -> Result<KsResult> {
    let n = values.len();
    if n < 5 {
        return Err(Error::domain(format!("KS test needs at least 5 values, got {n}")));
    }
    if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::domain("compensators must be finite and non-negative"));
    }
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    let nf = n as f64;
    let d = s
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = -(-x).exp_m1();
            ((i + 1) as f64 / nf - f).max(f - i as f64 / nf)
        })
        .fold(0.0, f64::max);
    Ok(KsResult {
        d,
        p_value: kolmogorov_sf(nf.sqrt() * d),
        n,
    })
}

/// `P(K > x)` for the Kolmogorov distribution, by its alternating series.
///
/// Below `x = 0.2` the truncated series has not converged; the true value
/// there exceeds `1 - 1e-10` so 1 is returned.
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=KOLMOGOROV_TERMS {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        sum += if k % 2 == 1 { term } else { -term };
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// `(theoretical, empirical)` pairs: sorted values against Exp(1)
/// quantiles at plotting positions `(i - 0.5) / n`.
pub fn qq_points(values: &[f64]) -> Result<Vec<(f64, f64)>> {
    let n = values.len();
    if n < 2 {
        return Err(Error::domain("QQ plot needs at least 2 values"));
    }
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(s
        .into_iter()
        .enumerate()
        .map(|(i, v)| (exp1_quantile((i as f64 + 0.5) / n as f64), v))
        .collect())
}

pub fn exp1_quantile(p: f64) -> f64 {
    -(-p).ln_1p()
}

/// Pointwise band of sorted compensator sets (one set per posterior draw):
/// `(theoretical, lower, upper)` at the `mass` central quantiles.
pub fn qq_envelope(sets: &[Vec<f64>], mass: f64) -> Result<Vec<(f64, f64, f64)>> {
    let n = sets.first().map_or(0, Vec::len);
    if n < 2 || sets.iter().any(|s| s.len() != n) {
        return Err(Error::domain("envelope needs equally sized sets of at least 2 values"));
    }
    let sorted: Vec<Vec<f64>> = sets
        .iter()
        .map(|s| {
            let mut v = s.clone();
            v.sort_by(f64::total_cmp);
            v
        })
        .collect();
    let lo_q = (1.0 - mass) / 2.0;
    Ok((0..n)
        .map(|i| {
            let mut col: Vec<f64> = sorted.iter().map(|s| s[i]).collect();
            col.sort_by(f64::total_cmp);
            let pick = |q: f64| col[((q * (col.len() - 1) as f64).round() as usize).min(col.len() - 1)];
            (exp1_quantile((i as f64 + 0.5) / n as f64), pick(lo_q), pick(1.0 - lo_q))
        })
        .collect())
}

/// `int_0^T |Z(t) - Zhat(t)| dt`, exactly.
pub fn integrated_abs_error<A, B>(truth: &A, estimate: &B) -> Result<f64>
where
    A: PiecewiseState + ?Sized,
    B: PiecewiseState + ?Sized,
{
    let (a, b) = (truth.latent()?, estimate.latent()?);
    if !same_horizon(a.horizon(), b.horizon()) {
        return Err(Error::domain(format!(
            "horizons differ: {} vs {}",
            a.horizon(),
            b.horizon()
        )));
    }
    let horizon = a.horizon().min(b.horizon());
    let mut cuts: Vec<f64> = a.jumps().iter().chain(b.jumps()).copied().filter(|&t| t < horizon).collect();
    cuts.sort_by(f64::total_cmp);
    let mut total = 0.0;
    let mut start = 0.0;
    let (mut ia, mut ib) = (0, 0);
    let (mut sa, mut sb) = (a.initial(), b.initial());
    for end in cuts.into_iter().chain(std::iter::once(horizon)) {
        if sa != sb {
            total += end - start;
        }
        while ia < a.jumps().len() && a.jumps()[ia] <= end {
            sa = sa.other();
            ia += 1;
        }
        while ib < b.jumps().len() && b.jumps()[ib] <= end {
            sb = sb.other();
            ib += 1;
        }
        start = end;
    }
    Ok(total)
}

/// Fraction of events (`m >= 1`) whose decoded state matches the truth.
pub fn event_state_accuracy(truth: &LatentTrajectory, decoded: &[(f64, State)]) -> Result<f64> {
    let events: Vec<&(f64, State)> = decoded.iter().filter(|(t, _)| *t > 0.0).collect();
    if events.is_empty() {
        return Err(Error::domain("no events to score"));
    }
    let hits = events.iter().filter(|(t, z)| truth.state_at(*t) == *z).count();
    Ok(hits as f64 / events.len() as f64)
}
