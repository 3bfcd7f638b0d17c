use crate::error::{Error, Result};
use crate::gp::{FitPolicy, KernelSpec, Regressor};

/// Location/scale regression of a node on its inputs `(z, a)`.
///
/// The mean is a GP on `x`. The conditional scale `σ_φ(z, a)` comes from a
/// second GP on `log(r² + ε)` where `r` are the training residuals; the log
/// scale is shifted by a constant so that the standardized residuals have
/// unit mean square on the training data. `σ_φ` never drops below
/// `scale_floor`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiModel {
    dim: usize,
    mean: Regressor,
    scale: Option<Regressor>,
    log_scale_offset: f64,
    scale_floor: f64,
}

/// Kernel choices for the two GPs inside a [`PhiModel`].
#[derive(Debug, Clone, PartialEq)]
pub struct PhiPolicy {
    pub mean: FitPolicy,
    pub scale: FitPolicy,
}

fn moments(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var)
}

/// Fits `φ` on row-major inputs of width `dim`.
///
/// Constant targets give [`Error::DegenerateData`]; use
/// [`PhiModel::degenerate`] in that case.
pub fn fit_phi(inputs: &[f64], dim: usize, x: &[f64], policy: &PhiPolicy) -> Result<PhiModel> {
    let n = x.len();
    if n < 3 {
        return Err(Error::Shape(format!("φ needs at least 3 rows, got {n}")));
    }
    if inputs.len() != n * dim {
        return Err(Error::Shape(format!("{} input values for {n} rows of width {dim}", inputs.len())));
    }
    let (_, var) = moments(x);
    if !(var > 0.0) {
        return Err(Error::DegenerateData("φ targets have zero variance".into()));
    }

    let mean = Regressor::fit(inputs, dim, x, &policy.mean)?;
    let residuals: Vec<f64> = (0..n)
        .map(|i| x[i] - mean.predict_mean_unchecked(&inputs[i * dim..(i + 1) * dim]))
        .collect();
    let eps = 1e-8 * var;
    let log_sq: Vec<f64> = residuals.iter().map(|r| (r * r + eps).ln()).collect();
    let scale = Regressor::fit(inputs, dim, &log_sq, &policy.scale)?;

    let ratio = (0..n)
        .map(|i| {
            let m = scale.predict_mean_unchecked(&inputs[i * dim..(i + 1) * dim]);
            residuals[i] * residuals[i] * (-m).exp()
        })
        .sum::<f64>()
        / n as f64;
    let log_scale_offset = if ratio > 0.0 && ratio.is_finite() { ratio.ln() } else { 0.0 };

    Ok(PhiModel {
        dim,
        mean,
        scale: Some(scale),
        log_scale_offset,
        scale_floor: 1e-3 * var.sqrt(),
    })
}

impl PhiModel {
    /// Model for constant targets: mean pinned to `value`, scale at the floor,
    /// so the encoder returns zero on the training data.
    pub fn degenerate(dim: usize, value: f64) -> Self {
        PhiModel {
            dim,
            mean: Regressor::constant(dim, value),
            scale: None,
            log_scale_offset: 0.0,
            scale_floor: 1e-12,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_degenerate(&self) -> bool {
        self.scale.is_none()
    }

    pub fn scale_floor(&self) -> f64 {
        self.scale_floor
    }

    pub fn mean_kernel(&self) -> Option<&KernelSpec> {
        self.mean.kernel()
    }

    pub fn scale_kernel(&self) -> Option<&KernelSpec> {
        self.scale.as_ref().and_then(Regressor::kernel)
    }

    /// `μ_φ(z, a)`.
    pub fn mean_at(&self, input: &[f64]) -> f64 {
        self.mean.predict_mean_unchecked(input)
    }

    /// `σ_φ(z, a)`, floored.
    pub fn scale_at(&self, input: &[f64]) -> f64 {
        match &self.scale {
            None => self.scale_floor,
            Some(s) => {
                let m = s.predict_mean_unchecked(input);
                (0.5 * (m + self.log_scale_offset)).exp().max(self.scale_floor)
            }
        }
    }

    /// Encoder `h`: `(x - μ_φ(z, a)) / σ_φ(z, a)`.
    pub fn encode(&self, input: &[f64], x: f64) -> Result<f64> {
        if input.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: input.len(),
            });
        }
        Ok((x - self.mean_at(input)) / self.scale_at(input))
    }
}
