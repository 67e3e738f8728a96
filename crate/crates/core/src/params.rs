use serde::{Deserialize, Serialize};

use crate::ctmc::State;
use crate::{Error, Generator, HawkesParams, Result};

/// Parameter names in the canonical column order used by draws and summaries.
pub const PARAM_NAMES: [&str; 7] = ["lambda0", "lambda1", "alpha", "beta", "delta0", "q0", "q1"];

/// Full MMHP parameter set.
///
/// `delta0` is `P(Z(0) = 0)`. Identifiability requires `lambda0 < lambda1`;
/// the constructor only checks positivity so degenerate limits can be
/// evaluated, and [`MmhpParams::is_identified`] reports the ordering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmhpParams {
    lambda0: f64,
    hawkes: HawkesParams,
    delta0: f64,
    gen: Generator,
}

impl MmhpParams {
    pub fn new(lambda0: f64, hawkes: HawkesParams, delta0: f64, gen: Generator) -> Result<Self> {
        if !(lambda0.is_finite() && lambda0 > 0.0) {
            return Err(Error::domain(format!("lambda0 must be positive, got {lambda0}")));
        }
        if !(0.0..=1.0).contains(&delta0) {
            return Err(Error::domain(format!("delta0 must lie in [0, 1], got {delta0}")));
        }
        Ok(Self {
            lambda0,
            hawkes,
            delta0,
            gen,
        })
    }

    /// Builds from values in `PARAM_NAMES` order.
    pub fn from_array(v: [f64; 7]) -> Result<Self> {
        Self::new(
            v[0],
            HawkesParams::new(v[1], v[2], v[3])?,
            v[4],
            Generator::new(v[5], v[6])?,
        )
    }

    pub fn to_array(&self) -> [f64; 7] {
        [
            self.lambda0,
            self.hawkes.lambda1(),
            self.hawkes.alpha(),
            self.hawkes.beta(),
            self.delta0,
            self.gen.q0(),
            self.gen.q1(),
        ]
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    pub fn hawkes(&self) -> &HawkesParams {
        &self.hawkes
    }

    pub fn lambda1(&self) -> f64 {
        self.hawkes.lambda1()
    }

    pub fn alpha(&self) -> f64 {
        self.hawkes.alpha()
    }

    pub fn beta(&self) -> f64 {
        self.hawkes.beta()
    }

    pub fn delta0(&self) -> f64 {
        self.delta0
    }

    pub fn generator(&self) -> &Generator {
        &self.gen
    }

    /// `log P(Z(0) = state)`.
    pub fn log_initial(&self, state: State) -> f64 {
        match state {
            State::Inactive => self.delta0.ln(),
            State::Active => (1.0 - self.delta0).ln(),
        }
    }

    pub fn is_identified(&self) -> bool {
        self.lambda0 < self.hawkes.lambda1()
    }

    /// The same parameters with the self-excitation switched off (MMPP).
    pub fn without_excitation(&self) -> Self {
        let hawkes = HawkesParams::new(self.lambda1(), 0.0, self.beta()).expect("valid");
        Self { hawkes, ..*self }
    }
}

/// Flat serde form of [`MmhpParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsRecord {
    pub lambda0: f64,
    pub lambda1: f64,
    pub alpha: f64,
    pub beta: f64,
    pub delta0: f64,
    pub q0: f64,
    pub q1: f64,
}

impl From<&MmhpParams> for ParamsRecord {
    fn from(p: &MmhpParams) -> Self {
        let [lambda0, lambda1, alpha, beta, delta0, q0, q1] = p.to_array();
        Self {
            lambda0,
            lambda1,
            alpha,
            beta,
            delta0,
            q0,
            q1,
        }
    }
}

impl TryFrom<ParamsRecord> for MmhpParams {
    type Error = Error;

    fn try_from(r: ParamsRecord) -> Result<Self> {
        MmhpParams::from_array([r.lambda0, r.lambda1, r.alpha, r.beta, r.delta0, r.q0, r.q1])
    }
}

impl Serialize for MmhpParams {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ParamsRecord::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for MmhpParams {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = ParamsRecord::deserialize(d)?;
        MmhpParams::try_from(r).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn array_round_trip() {
        let v = [0.1, 0.6, 0.8, 1.2, 0.5, 0.1, 0.2];
        assert_eq!(MmhpParams::from_array(v).unwrap().to_array(), v);
    }

    #[test]
    fn rejects_invalid() {
        assert!(MmhpParams::from_array([0.0, 0.6, 0.8, 1.2, 0.5, 0.1, 0.2]).is_err());
        assert!(MmhpParams::from_array([0.1, 0.6, 0.8, 1.2, 1.5, 0.1, 0.2]).is_err());
        assert!(MmhpParams::from_array([0.1, 0.6, -0.8, 1.2, 0.5, 0.1, 0.2]).is_err());
    }
}
