//! Causal Bayesian optimization over soft interventions, with per-node
//! exogenous distributions recovered from observational data.
//!
//! The crate is organised bottom-up:
//!
//! - [`scm`]: causal graphs, action spaces, observation storage and the
//!   ground-truth simulator interface.
//! - [`gp`]: exact Gaussian-process regression with a squared-exponential
//!   ARD kernel and marginal-likelihood hyperparameter search.
//! - [`exo`]: the location/scale regression `φ`, the encoder recovering
//!   exogenous values, Gaussian-mixture density fitting and the decoder `g`.
//! - [`acquisition`]: Monte-Carlo propagation through surrogate networks,
//!   the UCB acquisition, its optimizer, the EXCBO loop and two baselines.
//! - [`benchmarks`]: ground-truth systems used in experiments.

pub mod acquisition;
pub mod benchmarks;
pub mod error;
pub mod exo;
pub mod gp;
pub mod optim;
pub mod rng;
pub mod scm;

pub use error::{Error, Result};
