//! Markov-modulated Hawkes processes (MMHP).
//!
//! An MMHP is a point process whose intensity is switched by a latent
//! two-state continuous-time Markov chain: in the inactive state events
//! arrive as a homogeneous Poisson process with rate `lambda0`, and in the
//! active state they follow a Hawkes process with exponential kernel
//! `lambda1 + sum alpha * exp(-beta * (t - t_j))` over the full history.
//!
//! The crate covers the whole workflow:
//!
//! - [`event_data`]: event sequences and CSV ingestion
//! - [`ctmc`]: two-state chain algebra and sampling
//! - [`hawkes`]: Hawkes intensity, compensator, likelihood and baseline fits
//! - [`simulate`]: synthetic MMHP realizations by thinning
//! - [`likelihood`]: the variational approximation of the marginal
//!   likelihood and its forward recursion
//! - [`inference`]: priors, reparameterization, adaptive Metropolis,
//!   R-hat and shortest intervals
//! - [`decoding`]: Viterbi, trajectory interpolation and majority vote
//! - [`diagnostics`]: time-rescaling compensators, KS/QQ and integrated
//!   absolute error
//! - [`hierarchy`]: win/loss matrices and linearity metrics

pub mod ctmc;
pub mod decoding;
pub mod diagnostics;
mod error;
pub mod event_data;
pub mod hawkes;
pub mod hierarchy;
pub mod inference;
pub mod likelihood;
mod math;
pub mod params;
pub mod rng;
pub mod simulate;

pub use ctmc::{Generator, LatentTrajectory, State, TransitionMatrix};
pub use decoding::DecodedTrajectory;
pub use error::{Error, Result};
pub use event_data::{EventSequence, PairEventData};
pub use hawkes::HawkesParams;
pub use inference::{PosteriorDraws, PriorConfig};
pub use likelihood::ApproxLikelihood;
pub use params::MmhpParams;
