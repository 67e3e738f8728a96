//! Map between `MmhpParams` and an unconstrained point in `R^7`.
//!
//! Coordinates: `eta, log lambda1, log alpha, log beta, logit delta0` and
//! then `log q0, log q1` (rate form) or `logit w0, logit w1` (weight form).
//! `lambda0 = lambda1 * sigmoid(eta)` keeps `lambda0 < lambda1`. Under the
//! MMPP model the `alpha` and `beta` coordinates are inert and the
//! parameters are pinned at 0 and 1.

use crate::inference::prior::{ModelKind, PriorConfig};
use crate::math::{log_sigmoid, logit, sigmoid};
use crate::{Error, Generator, HawkesParams, MmhpParams, Result};

pub const DIM: usize = 7;
pub type UnconstrainedPoint = [f64; DIM];

/// Coordinates that are sampled (the MMPP model freezes `alpha`, `beta`).
pub fn free_coordinates(model: ModelKind) -> Vec<usize> {
    match model {
        ModelKind::Mmhp => (0..DIM).collect(),
        ModelKind::Mmpp => vec![0, 1, 4, 5, 6],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transform {
    model: ModelKind,
    weights: bool,
}

impl Transform {
    pub fn new(cfg: &PriorConfig) -> Self {
        Self {
            model: cfg.model,
            weights: cfg.switching.uses_weights(),
        }
    }

    pub fn model(&self) -> ModelKind {
        self.model
    }

    pub fn constrain(&self, u: &UnconstrainedPoint) -> Result<MmhpParams> {
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("unconstrained point has non-finite entries"));
        }
        let lambda1 = u[1].exp();
        let lambda0 = lambda1 * sigmoid(u[0]);
        let (alpha, beta) = match self.model {
            ModelKind::Mmhp => (u[2].exp(), u[3].exp()),
            ModelKind::Mmpp => (0.0, 1.0),
        };
        let delta0 = sigmoid(u[4]);
        let (q0, q1) = if self.weights {
            (sigmoid(u[5]) * lambda0, sigmoid(u[6]) * lambda1)
        } else {
            (u[5].exp(), u[6].exp())
        };
        MmhpParams::new(
            lambda0,
            HawkesParams::new(lambda1, alpha, beta)?,
            delta0,
            Generator::new(q0, q1)?,
        )
    }

    pub fn unconstrain(&self, theta: &MmhpParams) -> Result<UnconstrainedPoint> {
        let (lambda0, lambda1) = (theta.lambda0(), theta.lambda1());
        if !(lambda0 < lambda1) {
            return Err(Error::domain("lambda0 < lambda1 is required"));
        }
        let delta0 = theta.delta0();
        if !(delta0 > 0.0 && delta0 < 1.0) {
            return Err(Error::domain("delta0 must lie strictly inside (0, 1)"));
        }
        let (a2, a3) = match self.model {
            ModelKind::Mmhp => {
                if theta.alpha() <= 0.0 {
                    return Err(Error::domain("alpha must be positive"));
                }
                (theta.alpha().ln(), theta.beta().ln())
            }
            ModelKind::Mmpp => (0.0, 0.0),
        };
        let gen = theta.generator();
        let (a5, a6) = if self.weights {
            let (w0, w1) = (gen.q0() / lambda0, gen.q1() / lambda1);
            if !(w0 < 1.0 && w1 < 1.0) {
                return Err(Error::domain("switching weights must lie in (0, 1)"));
            }
            (logit(w0), logit(w1))
        } else {
            (gen.q0().ln(), gen.q1().ln())
        };
        let u = [
            logit(lambda0 / lambda1),
            lambda1.ln(),
            a2,
            a3,
            logit(delta0),
            a5,
            a6,
        ];
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("parameters map outside the unconstrained space"));
        }
        Ok(u)
    }

    /// `log |d theta / d u|` over the free coordinates, with `theta` in the
    /// coordinates the prior is stated in.
    pub fn log_jacobian(&self, u: &UnconstrainedPoint) -> f64 {
        let logistic = |x: f64| log_sigmoid(x) + log_sigmoid(-x);
        // d lambda0 / d eta = lambda1 * s (1 - s); d lambda1 / d u1 = lambda1
        let mut j = logistic(u[0]) + 2.0 * u[1];
        if self.model == ModelKind::Mmhp {
            j += u[2] + u[3];
        }
        j += logistic(u[4]);
        if self.weights {
            j += logistic(u[5]) + logistic(u[6]);
        } else {
            j += u[5] + u[6];
        }
        j
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::prior::PriorConfig;

    #[test]
    fn jacobian_matches_finite_differences() {
        // weight form, checked against a numerical determinant
        let kernel = crate::inference::prior::KernelHyper {
            alpha_mu: 0.0,
            alpha_sigma: 1.0,
            beta_mu: 0.0,
            beta_sigma: 1.0,
        };
        for cfg in [PriorConfig::synthetic(), PriorConfig::mice_pair(kernel, 3.0).unwrap()] {
            let t = Transform::new(&cfg);
            let u = [0.3, -0.2, 0.1, 0.4, -0.5, -1.0, 0.7];
            let coords = |u: &UnconstrainedPoint| {
                let th = t.constrain(u).unwrap();
                let g = th.generator();
                let (s0, s1) = if cfg.switching.uses_weights() {
                    (g.q0() / th.lambda0(), g.q1() / th.lambda1())
                } else {
                    (g.q0(), g.q1())
                };
                [th.lambda0(), th.lambda1(), th.alpha(), th.beta(), th.delta0(), s0, s1]
            };
            let h = 1e-6;
            let mut jac = [[0.0; DIM]; DIM];
            for k in 0..DIM {
                let (mut up, mut dn) = (u, u);
                up[k] += h;
                dn[k] -= h;
                let (a, b) = (coords(&up), coords(&dn));
                for i in 0..DIM {
                    jac[i][k] = (a[i] - b[i]) / (2.0 * h);
                }
            }
            let det = determinant(jac);
            assert!((det.abs().ln() - t.log_jacobian(&u)).abs() < 1e-6);
        }
    }

    fn determinant(mut a: [[f64; DIM]; DIM]) -> f64 {
        let mut det = 1.0;
        for c in 0..DIM {
            let p = (c..DIM).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
            if p != c {
                a.swap(p, c);
                det = -det;
            }
            det *= a[c][c];
            for r in c + 1..DIM {
                let f = a[r][c] / a[c][c];
                for k in c..DIM {
                    a[r][k] -= f * a[c][k];
                }
            }
        }
        det
    }

    #[test]
    fn mmpp_pins_kernel() {
        let t = Transform::new(&PriorConfig::synthetic().with_model(ModelKind::Mmpp));
        let th = t.constrain(&[0.0, 0.0, 5.0, 5.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(th.alpha(), 0.0);
        assert_eq!(th.beta(), 1.0);
        assert_eq!(free_coordinates(ModelKind::Mmpp).len(), 5);
    }
}
