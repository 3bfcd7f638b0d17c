//! Exact Gaussian-process regression.
//!
//! [`GpModel`] is the raw zero-mean posterior. [`Regressor`] wraps it with
//! target standardization and hyperparameter selection and is what the
//! surrogate models use.

mod hyper;
mod kernel;
mod model;
mod regressor;

pub use hyper::{optimize_hyperparams, HyperSearch};
pub use kernel::{kernel_eval, KernelSpec};
pub use model::{gp_fit, GpModel};
pub use regressor::{FitPolicy, Regressor};
