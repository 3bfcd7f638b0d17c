use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Squared-exponential ARD kernel plus i.i.d. observation noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub lengthscales: Vec<f64>,
    pub signal_variance: f64,
    pub noise_variance: f64,
}

impl KernelSpec {
    pub fn new(lengthscales: Vec<f64>, signal_variance: f64, noise_variance: f64) -> Result<Self> {
        if lengthscales.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(Error::Config(format!("lengthscales must be positive: {lengthscales:?}")));
        }
        if !(signal_variance > 0.0 && signal_variance.is_finite()) {
            return Err(Error::Config(format!("signal variance must be positive: {signal_variance}")));
        }
        if !(noise_variance >= 0.0 && noise_variance.is_finite()) {
            return Err(Error::Config(format!("noise variance must be non-negative: {noise_variance}")));
        }
        Ok(KernelSpec {
            lengthscales,
            signal_variance,
            noise_variance,
        })
    }

    /// Unit lengthscales, unit signal and the `1e-6` noise floor; used when
    /// there is nothing to fit.
    pub fn fallback(dim: usize) -> Self {
        KernelSpec {
            lengthscales: vec![1.0; dim],
            signal_variance: 1.0,
            noise_variance: 1e-6,
        }
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    /// Kernel value without dimension checks; `s` and `t` must have length
    /// `self.dim()`.
    #[inline]
    pub(crate) fn eval_unchecked(&self, s: &[f64], t: &[f64]) -> f64 {
        let mut q = 0.0;
        for ((a, b), l) in s.iter().zip(t).zip(&self.lengthscales) {
            let d = (a - b) / l;
            q += d * d;
        }
        self.signal_variance * (-0.5 * q).exp()
    }
}

/// `σ² exp(-½ Σ_d ((s_d - t_d)/ℓ_d)²)`.
pub fn kernel_eval(spec: &KernelSpec, s: &[f64], t: &[f64]) -> Result<f64> {
    for v in [s, t] {
        if v.len() != spec.dim() {
            return Err(Error::Dimension {
                expected: spec.dim(),
                got: v.len(),
            });
        }
    }
    Ok(spec.eval_unchecked(s, t))
}
