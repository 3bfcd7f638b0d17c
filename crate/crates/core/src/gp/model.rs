use std::f64::consts::PI;

use super::kernel::KernelSpec;
use crate::error::{Error, Result};

const MAX_JITTER_RATIO: f64 = 1e-4;
const MIN_JITTER_RATIO: f64 = 1e-10;

/// Zero-mean GP posterior with a factored training covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct GpModel {
    kernel: KernelSpec,
    dim: usize,
    inputs: Vec<f64>,
    targets: Vec<f64>,
    /// Lower Cholesky factor of `K + (noise + jitter) I`, row-major.
    factor: Vec<f64>,
    alpha: Vec<f64>,
    jitter: f64,
}

/// Fits `K + (σ_n² + jitter) I = L Lᵀ` and `α = (K + σ_n² I)⁻¹ y`.
///
/// `inputs` is row-major with `dim` columns. Jitter starts at
/// `1e-10 σ²` and grows tenfold up to `1e-4 σ²` while factorization fails.
pub fn gp_fit(inputs: &[f64], dim: usize, targets: &[f64], kernel: &KernelSpec) -> Result<GpModel> {
    let n = targets.len();
    if n == 0 {
        return Err(Error::Shape("at least one training row is required".into()));
    }
    if inputs.len() != n * dim {
        return Err(Error::Shape(format!(
            "{} input values for {n} rows of width {dim}",
            inputs.len()
        )));
    }
    if kernel.dim() != dim {
        return Err(Error::Dimension {
            expected: kernel.dim(),
            got: dim,
        });
    }
    if inputs.iter().chain(targets).any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite training data".into()));
    }

    let mut gram = vec![0.0; n * n];
    for i in 0..n {
        let xi = &inputs[i * dim..(i + 1) * dim];
        for j in 0..=i {
            let k = kernel.eval_unchecked(xi, &inputs[j * dim..(j + 1) * dim]);
            gram[i * n + j] = k;
            gram[j * n + i] = k;
        }
    }

    let mut jitter = MIN_JITTER_RATIO * kernel.signal_variance;
    let max_jitter = MAX_JITTER_RATIO * kernel.signal_variance;
    let factor = loop {
        let mut a = gram.clone();
        for i in 0..n {
            a[i * n + i] += kernel.noise_variance + jitter;
        }
        if cholesky_in_place(&mut a, n) {
            break a;
        }
        if jitter >= max_jitter {
            return Err(Error::Numerical(format!(
                "Cholesky factorization failed at jitter {jitter:e}"
            )));
        }
        jitter = (jitter * 10.0).min(max_jitter);
    };

    let mut alpha = targets.to_vec();
    forward_substitute(&factor, n, &mut alpha);
    back_substitute_transposed(&factor, n, &mut alpha);

    Ok(GpModel {
        kernel: kernel.clone(),
        dim,
        inputs: inputs.to_vec(),
        targets: targets.to_vec(),
        factor,
        alpha,
        jitter,
    })
}

impl GpModel {
    /// Model with no training data: the prior.
    pub fn prior(kernel: KernelSpec) -> Self {
        GpModel {
            dim: kernel.dim(),
            kernel,
            inputs: Vec::new(),
            targets: Vec::new(),
            factor: Vec::new(),
            alpha: Vec::new(),
            jitter: 0.0,
        }
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn inputs(&self) -> &[f64] {
        &self.inputs
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn factor(&self) -> &[f64] {
        &self.factor
    }

    pub fn weights(&self) -> &[f64] {
        &self.alpha
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Posterior mean and variance of the latent function at `query`.
    pub fn predict(&self, query: &[f64]) -> Result<(f64, f64)> {
        if query.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: query.len(),
            });
        }
        Ok(self.predict_unchecked(query))
    }

    pub(crate) fn predict_unchecked(&self, query: &[f64]) -> (f64, f64) {
        let n = self.len();
        let prior = self.kernel.signal_variance;
        if n == 0 {
            return (0.0, prior);
        }
        let d = self.dim;
        let mut v: Vec<f64> = (0..n)
            .map(|i| self.kernel.eval_unchecked(query, &self.inputs[i * d..(i + 1) * d]))
            .collect();
        let mean = v.iter().zip(&self.alpha).map(|(k, a)| k * a).sum();
        forward_substitute(&self.factor, n, &mut v);
        let explained: f64 = v.iter().map(|x| x * x).sum();
        (mean, (prior - explained).max(0.0))
    }

    /// Posterior mean only; skips the triangular solve behind the variance.
    pub(crate) fn predict_mean_unchecked(&self, query: &[f64]) -> f64 {
        let d = self.dim;
        self.alpha
            .iter()
            .enumerate()
            .map(|(i, a)| a * self.kernel.eval_unchecked(query, &self.inputs[i * d..(i + 1) * d]))
            .sum()
    }

    /// `-½ yᵀα - Σ log L_ii - (n/2) log 2π`.
    pub fn log_marginal_likelihood(&self) -> f64 {
        let n = self.len();
        let fit: f64 = self.targets.iter().zip(&self.alpha).map(|(y, a)| y * a).sum();
        let log_det: f64 = (0..n).map(|i| self.factor[i * n + i].ln()).sum();
        -0.5 * fit - log_det - 0.5 * n as f64 * (2.0 * PI).ln()
    }
}

fn cholesky_in_place(a: &mut [f64], n: usize) -> bool {
    for j in 0..n {
        let mut diag = a[j * n + j];
        for k in 0..j {
            diag -= a[j * n + k] * a[j * n + k];
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return false;
        }
        let l_jj = diag.sqrt();
        a[j * n + j] = l_jj;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / l_jj;
        }
        for i in 0..j {
            a[i * n + j] = 0.0;
        }
    }
    true
}

/// Solves `L x = b` in place.
fn forward_substitute(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let row = &l[i * n..i * n + i];
        let s: f64 = row.iter().zip(&b[..i]).map(|(a, x)| a * x).sum();
        b[i] = (b[i] - s) / l[i * n + i];
    }
}

/// Solves `Lᵀ x = b` in place.
fn back_substitute_transposed(l: &[f64], n: usize, b: &mut [f64]) {
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}
