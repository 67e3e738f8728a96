use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RHat {
    pub value: f64,
    /// Set when the within-chain variance is zero.
    pub degenerate: bool,
}

/// Classic split-R̂: every chain is cut in half and the between/within
/// variance ratio computed over the halves.
pub fn rhat(chains: &[Vec<f64>]) -> Result<RHat> {
    if chains.len() < 2 {
        return Err(Error::domain("R-hat needs at least two chains"));
    }
    let n_min = chains.iter().map(Vec::len).min().unwrap_or(0);
    if n_min < 10 {
        return Err(Error::domain("R-hat needs at least 10 draws per chain"));
    }
    let half = n_min / 2;
    let pieces: Vec<&[f64]> = chains
        .iter()
        .flat_map(|c| {
            let c = &c[..n_min];
            [&c[..half], &c[n_min - half..]]
        })
        .collect();
    let n = half as f64;
    let means: Vec<f64> = pieces.iter().map(|p| mean(p)).collect();
    let w = pieces
        .iter()
        .zip(&means)
        .map(|(p, m)| p.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
        .sum::<f64>()
        / pieces.len() as f64;
    let grand = mean(&means);
    let b = n * means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (means.len() as f64 - 1.0);
    if w == 0.0 {
        return Ok(RHat {
            value: if b == 0.0 { 1.0 } else { f64::INFINITY },
            degenerate: true,
        });
    }
    let var_plus = (n - 1.0) / n * w + b / n;
    Ok(RHat {
        value: (var_plus / w).sqrt(),
        degenerate: false,
    })
}

/// Narrowest window of sorted samples holding `ceil(mass * n)` points;
/// the leftmost window wins ties.
pub fn shortest_interval(samples: &[f64], mass: f64) -> Result<(f64, f64)> {
    if samples.len() < 20 {
        return Err(Error::domain(format!(
            "shortest interval needs at least 20 samples, got {}",
            samples.len()
        )));
    }
    if !(mass > 0.0 && mass < 1.0) {
        return Err(Error::domain(format!("mass must lie in (0, 1), got {mass}")));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::domain("samples must be finite"));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    let k = ((mass * n as f64).ceil() as usize).clamp(1, n);
    let mut best = 0;
    let mut width = f64::INFINITY;
    for i in 0..=n - k {
        let w = s[i + k - 1] - s[i];
        if w < width {
            width = w;
            best = i;
        }
    }
    Ok((s[best], s[best + k - 1]))
}

/// Monte Carlo standard error of the mean by non-overlapping batch means
/// with `floor(sqrt(n))` batches.
pub fn mcse(samples: &[f64]) -> f64 {
    let n = samples.len();
    let batches = (n as f64).sqrt().floor() as usize;
    if batches < 2 {
        return f64::NAN;
    }
    let size = n / batches;
    let means: Vec<f64> = (0..batches).map(|b| mean(&samples[b * size..(b + 1) * size])).collect();
    let m = mean(&means);
    let var = means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (batches as f64 - 1.0);
    (var / batches as f64).sqrt()
}

pub(crate) fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub(crate) fn std_dev(x: &[f64]) -> f64 {
    let m = mean(x);
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand_distr::{Distribution, Exp1, StandardNormal};

    #[test]
    fn uniform_grid_interval() {
        let s: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(shortest_interval(&s, 0.95).unwrap(), (1.0, 95.0));
    }

    #[test]
    fn too_few_samples() {
        assert!(shortest_interval(&[1.0; 19], 0.9).is_err());
        assert!(shortest_interval(&[1.0; 30], 1.0).is_err());
    }

    #[test]
    fn normal_and_exponential_intervals() {
        let mut rng = stream(21, 0);
        let z: Vec<f64> = (0..100_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let (lo, hi) = shortest_interval(&z, 0.95).unwrap();
        assert!((lo + 1.96).abs() < 0.05 && (hi - 1.96).abs() < 0.05, "{lo} {hi}");
        let e: Vec<f64> = (0..100_000).map(|_| Exp1.sample(&mut rng)).collect();
        let (lo, hi) = shortest_interval(&e, 0.95).unwrap();
        assert!(lo < 0.01, "{lo}");
        assert!((hi - 2.996).abs() < 0.06, "{hi}");
    }

    #[test]
    fn rhat_identical_iid_chains() {
        let mut rng = stream(5, 0);
        let c: Vec<f64> = (0..1000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let r = rhat(&[c.clone(), c]).unwrap();
        assert!((0.99..=1.01).contains(&r.value), "{}", r.value);
    }

    #[test]
    fn rhat_disjoint_and_degenerate() {
        let mut rng = stream(6, 0);
        let a: Vec<f64> = (0..200).map(|_| StandardNormal.sample(&mut rng)).collect();
        let b: Vec<f64> = a.iter().map(|x| x + 10.0).collect();
        assert!(rhat(&[a, b]).unwrap().value > 3.0);
        let r = rhat(&[vec![2.0; 50], vec![2.0; 50]]).unwrap();
        assert_eq!(r, RHat { value: 1.0, degenerate: true });
        let r = rhat(&[vec![1.0; 50], vec![2.0; 50]]).unwrap();
        assert!(r.value.is_infinite() && r.degenerate);
    }

    #[test]
    fn mcse_of_iid_draws() {
        let mut rng = stream(8, 0);
        let z: Vec<f64> = (0..40_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let e = mcse(&z);
        assert!((e / (1.0 / 200.0) - 1.0).abs() < 0.3, "{e}");
    }
}
