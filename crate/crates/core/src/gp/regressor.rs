use super::hyper::{optimize_hyperparams, HyperSearch};
use super::kernel::KernelSpec;
use super::model::{gp_fit, GpModel};
use crate::error::{Error, Result};

/// How kernel hyperparameters are chosen when fitting a [`Regressor`].
#[derive(Debug, Clone, PartialEq)]
pub enum FitPolicy {
    Optimize(HyperSearch),
    /// Keep hyperparameters from an earlier fit (standardized units).
    Reuse(KernelSpec),
}

/// GP regression on standardized targets.
///
/// Targets are centred and scaled to unit variance before fitting; predictions
/// are mapped back. Targets without variation give a constant model with zero
/// predictive variance.
#[derive(Debug, Clone, PartialEq)]
pub struct Regressor {
    dim: usize,
    y_mean: f64,
    y_scale: f64,
    gp: Option<GpModel>,
}

impl Regressor {
    pub fn fit(inputs: &[f64], dim: usize, targets: &[f64], policy: &FitPolicy) -> Result<Self> {
        let n = targets.len();
        if n == 0 || inputs.len() != n * dim {
            return Err(Error::Shape(format!(
                "{} input values for {n} rows of width {dim}",
                inputs.len()
            )));
        }
        let y_mean = targets.iter().sum::<f64>() / n as f64;
        let var = targets.iter().map(|y| (y - y_mean).powi(2)).sum::<f64>() / n as f64;
        let y_scale = var.sqrt();
        if !(y_scale > 1e-300) {
            return Ok(Self::constant(dim, y_mean));
        }
        let z: Vec<f64> = targets.iter().map(|y| (y - y_mean) / y_scale).collect();

        let spec = match policy {
            FitPolicy::Reuse(spec) => spec.clone(),
            FitPolicy::Optimize(_) if n < 3 => Self::small_sample_kernel(inputs, dim, n),
            FitPolicy::Optimize(search) => match optimize_hyperparams(inputs, dim, &z, search) {
                Ok(spec) => spec,
                Err(Error::DegenerateData(_)) => KernelSpec::fallback(dim),
                Err(e) => return Err(e),
            },
        };
        let gp = gp_fit(inputs, dim, &z, &spec)?;
        Ok(Regressor {
            dim,
            y_mean,
            y_scale,
            gp: Some(gp),
        })
    }

    pub fn constant(dim: usize, value: f64) -> Self {
        Regressor {
            dim,
            y_mean: value,
            y_scale: 0.0,
            gp: None,
        }
    }

    fn small_sample_kernel(inputs: &[f64], dim: usize, n: usize) -> KernelSpec {
        let lengthscales = (0..dim)
            .map(|d| {
                let col = (0..n).map(|i| inputs[i * dim + d]);
                let (lo, hi) = col.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
                if hi > lo {
                    hi - lo
                } else {
                    1.0
                }
            })
            .collect();
        KernelSpec {
            lengthscales,
            signal_variance: 1.0,
            noise_variance: 1e-6,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_constant(&self) -> bool {
        self.gp.is_none()
    }

    /// Kernel in standardized units, if a GP was fitted.
    pub fn kernel(&self) -> Option<&KernelSpec> {
        self.gp.as_ref().map(GpModel::kernel)
    }

    pub fn gp(&self) -> Option<&GpModel> {
        self.gp.as_ref()
    }

    /// Fitted observation-noise variance in target units.
    pub fn noise_variance(&self) -> f64 {
        self.kernel()
            .map_or(0.0, |k| k.noise_variance * self.y_scale * self.y_scale)
    }

    pub fn target_mean(&self) -> f64 {
        self.y_mean
    }

    pub fn target_scale(&self) -> f64 {
        self.y_scale
    }

    pub fn predict(&self, query: &[f64]) -> Result<(f64, f64)> {
        if query.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: query.len(),
            });
        }
        Ok(self.predict_unchecked(query))
    }

    pub(crate) fn predict_mean_unchecked(&self, query: &[f64]) -> f64 {
        match &self.gp {
            None => self.y_mean,
            Some(gp) => self.y_mean + self.y_scale * gp.predict_mean_unchecked(query),
        }
    }

    /// Posterior mean and latent-function variance in target units.
    pub(crate) fn predict_unchecked(&self, query: &[f64]) -> (f64, f64) {
        match &self.gp {
            None => (self.y_mean, 0.0),
            Some(gp) => {
                let (m, v) = gp.predict_unchecked(query);
                (self.y_mean + self.y_scale * m, v * self.y_scale * self.y_scale)
            }
        }
    }
}
