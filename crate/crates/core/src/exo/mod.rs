//! Exogenous-distribution learning: `φ` regression, encoder, mixture density
//! and decoder.

mod gmm;
mod phi;
mod surrogate;

pub use gmm::{fit_gmm, fit_gmm_traced, spike, EmSettings, GaussianMixture, GmmFit};
pub use phi::{fit_phi, PhiModel, PhiPolicy};
pub use surrogate::{
    augment, exo_density, fit_decoder, fit_node, fit_surrogates, recover_all, NodeKernels, NodeSurrogate,
    SurrogateSettings,
};
