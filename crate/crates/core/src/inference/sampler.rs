//! Adaptive random-walk Metropolis.
//!
//! Each iteration runs a componentwise sweep (one Gaussian proposal per
//! free coordinate, each with its own scale) followed by one joint move
//! whose covariance is the running covariance of the warmup samples times
//! a global scale. All scales are tuned by Robbins–Monro steps towards an
//! acceptance rate of 0.234 during warmup and frozen afterwards.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{Error, Result};

pub const TARGET_ACCEPT: f64 = 0.234;
/// Consecutive iterations without a single accepted move before giving up.
pub const STALL_LIMIT: usize = 500;

/// Iterations of warmup history required before the joint move uses the
/// learned covariance.
const COVARIANCE_MIN_HISTORY: usize = 100;
const COVARIANCE_JITTER: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    pub iters: usize,
    pub warmup: usize,
    pub target_accept: f64,
}

impl SamplerConfig {
    /// `iters` total iterations, the first half warmup.
    pub fn new(iters: usize) -> Self {
        Self {
            iters,
            warmup: iters / 2,
            target_accept: TARGET_ACCEPT,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainOutput {
    /// Post-warmup states, one per iteration.
    pub samples: Vec<Vec<f64>>,
    /// Post-warmup acceptance rate of componentwise proposals.
    pub component_accept: f64,
    /// Post-warmup acceptance rate of joint proposals.
    pub joint_accept: f64,
}

/// Runs one chain on `log_density` from `init`, moving only coordinates in
/// `free`. `-inf` densities are rejected outright.
pub fn run_chain<F, R>(
    log_density: F,
    init: Vec<f64>,
    free: &[usize],
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<ChainOutput>
where
    F: Fn(&[f64]) -> f64,
    R: Rng + ?Sized,
{
    let d = free.len();
    if d == 0 {
        return Err(Error::domain("sampler needs at least one free coordinate"));
    }
    let mut x = init;
    let mut lp = log_density(&x);
    if !lp.is_finite() {
        return Err(Error::domain("initial point has non-finite log density"));
    }

    let mut log_scale = vec![0.0f64; d];
    let mut log_joint = 0.0f64;
    let mut cov = Welford::new(d);
    let mut chol: Option<Vec<Vec<f64>>> = None;

    let mut samples = Vec::with_capacity(cfg.iters.saturating_sub(cfg.warmup));
    let (mut comp_acc, mut joint_acc) = (0u64, 0u64);
    let mut stalled = 0usize;
    let mut proposal = x.clone();

    for iter in 0..cfg.iters {
        let warm = iter < cfg.warmup;
        let gain = (iter as f64 + 1.0).powf(-0.6);
        let mut any = false;

        for (k, &c) in free.iter().enumerate() {
            proposal.copy_from_slice(&x);
            let z: f64 = StandardNormal.sample(rng);
            proposal[c] += log_scale[k].exp() * z;
            let (accepted, prob) = metropolis(&log_density, &proposal, lp, rng);
            if let Some(v) = accepted {
                x.copy_from_slice(&proposal);
                lp = v;
                any = true;
                if !warm {
                    comp_acc += 1;
                }
            }
            if warm {
                log_scale[k] += gain * (prob - cfg.target_accept);
            }
        }

        proposal.copy_from_slice(&x);
        let z: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let step = log_joint.exp() * 2.38 / (d as f64).sqrt();
        match &chol {
            Some(l) => {
                for (i, &c) in free.iter().enumerate() {
                    let dz: f64 = (0..=i).map(|j| l[i][j] * z[j]).sum();
                    proposal[c] += step * dz;
                }
            }
            None => {
                for (k, &c) in free.iter().enumerate() {
                    proposal[c] += step * log_scale[k].exp() * z[k];
                }
            }
        }
        let (accepted, prob) = metropolis(&log_density, &proposal, lp, rng);
        if let Some(v) = accepted {
            x.copy_from_slice(&proposal);
            lp = v;
            any = true;
            if !warm {
                joint_acc += 1;
            }
        }

        if warm {
            log_joint += gain * (prob - cfg.target_accept);
            if iter >= cfg.warmup / 4 {
                cov.push(free.iter().map(|&c| x[c]).collect::<Vec<_>>().as_slice());
                if cov.count >= COVARIANCE_MIN_HISTORY && iter % 10 == 0 {
                    chol = cholesky(&cov.covariance(COVARIANCE_JITTER));
                }
            }
        } else {
            samples.push(x.clone());
        }

        stalled = if any { 0 } else { stalled + 1 };
        if stalled >= STALL_LIMIT {
            return Err(Error::Adaptation(format!(
                "no proposal accepted for {STALL_LIMIT} consecutive iterations (at iteration {iter})"
            )));
        }
    }

    let kept = samples.len().max(1) as f64;
    Ok(ChainOutput {
        samples,
        component_accept: comp_acc as f64 / (kept * d as f64),
        joint_accept: joint_acc as f64 / kept,
    })
}

/// Returns the accepted density (if any) and the acceptance probability.
fn metropolis<F, R>(log_density: &F, proposal: &[f64], current: f64, rng: &mut R) -> (Option<f64>, f64)
where
    F: Fn(&[f64]) -> f64,
    R: Rng + ?Sized,
{
    let cand = log_density(proposal);
    if cand.is_nan() || cand == f64::NEG_INFINITY {
        return (None, 0.0);
    }
    let log_ratio = cand - current;
    let prob = log_ratio.min(0.0).exp();
    if log_ratio >= 0.0 || rng.random::<f64>().ln() < log_ratio {
        (Some(cand), prob)
    } else {
        (None, prob)
    }
}

struct Welford {
    count: usize,
    mean: Vec<f64>,
    m2: Vec<Vec<f64>>,
}

impl Welford {
    fn new(d: usize) -> Self {
        Self {
            count: 0,
            mean: vec![0.0; d],
            m2: vec![vec![0.0; d]; d],
        }
    }

    fn push(&mut self, x: &[f64]) {
        self.count += 1;
        let n = self.count as f64;
        let delta: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        for (m, dl) in self.mean.iter_mut().zip(&delta) {
            *m += dl / n;
        }
        for i in 0..x.len() {
            for j in 0..x.len() {
                self.m2[i][j] += delta[i] * (x[j] - self.mean[j]);
            }
        }
    }

    fn covariance(&self, jitter: f64) -> Vec<Vec<f64>> {
        let n = (self.count.max(2) - 1) as f64;
        let mut c: Vec<Vec<f64>> = self
            .m2
            .iter()
            .map(|row| row.iter().map(|v| v / n).collect())
            .collect();
        for (i, row) in c.iter_mut().enumerate() {
            row[i] += jitter;
        }
        c
    }
}

/// Lower Cholesky factor, or `None` if the matrix is not positive definite.
fn cholesky(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let v = a[i][i] - s;
                if !(v > 0.0 && v.is_finite()) {
                    return None;
                }
                l[i][j] = v.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    Some(l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn cholesky_reconstructs() {
        let a = vec![vec![4.0, 2.0, 0.4], vec![2.0, 3.0, 0.5], vec![0.4, 0.5, 1.0]];
        let l = cholesky(&a).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let v: f64 = (0..3).map(|k| l[i][k] * l[j][k]).sum();
                assert!((v - a[i][j]).abs() < 1e-12);
            }
        }
        assert!(cholesky(&[vec![1.0, 2.0], vec![2.0, 1.0]]).is_none());
    }

    #[test]
    fn correlated_gaussian_moments() {
        // x ~ N(0, [[1, 0.9], [0.9, 1]])
        let target = |x: &[f64]| {
            let det = 1.0 - 0.81;
            -(x[0] * x[0] - 1.8 * x[0] * x[1] + x[1] * x[1]) / (2.0 * det)
        };
        let out = run_chain(target, vec![3.0, -3.0], &[0, 1], &SamplerConfig::new(40_000), &mut stream(4, 0))
            .unwrap();
        let n = out.samples.len() as f64;
        let m0 = out.samples.iter().map(|s| s[0]).sum::<f64>() / n;
        let v0 = out.samples.iter().map(|s| (s[0] - m0).powi(2)).sum::<f64>() / n;
        let c01 = out.samples.iter().map(|s| s[0] * s[1]).sum::<f64>() / n;
        assert!(m0.abs() < 0.1, "{m0}");
        assert!((v0 - 1.0).abs() < 0.1, "{v0}");
        assert!((c01 - 0.9).abs() < 0.1, "{c01}");
        assert!(out.joint_accept > 0.1 && out.joint_accept < 0.4, "{}", out.joint_accept);
    }

    #[test]
    fn frozen_coordinates_do_not_move() {
        let target = |x: &[f64]| -0.5 * x[0] * x[0] - 0.5 * x[1] * x[1];
        let out = run_chain(target, vec![0.0, 7.0], &[0], &SamplerConfig::new(200), &mut stream(1, 0)).unwrap();
        assert!(out.samples.iter().all(|s| s[1] == 7.0));
    }

    #[test]
    fn stalled_chain_fails() {
        // only the start point has finite density
        let target = |x: &[f64]| if x[0] == 0.5 { 0.0 } else { f64::NEG_INFINITY };
        let err = run_chain(target, vec![0.5], &[0], &SamplerConfig::new(2000), &mut stream(1, 0)).unwrap_err();
        assert!(matches!(err, Error::Adaptation(_)));
    }
}
