use super::kernel::KernelSpec;
use super::model::gp_fit;
use crate::error::{Error, Result};
use crate::optim::{latin_hypercube, NelderMead};
use crate::rng;
use rand::seq::SliceRandom;

/// Multi-start maximization of the log marginal likelihood.
///
/// Starts are a Latin hypercube in log-parameter space over
/// `ℓ_d ∈ [1e-2, 1e2]·range_d`, `σ² ∈ [1e-2, 1e2]·var(y)` and
/// `σ_n² ∈ [1e-6, 1]·var(y)`. The best `refine_starts` starts are polished
/// with Nelder-Mead, `refine_evals` evaluations each. Data sets larger than
/// `max_rows` are split at random into near-equal blocks of at most that size,
/// and the objective becomes the sum of the blocks' likelihoods.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperSearch {
    pub starts: usize,
    pub refine_starts: usize,
    pub refine_evals: usize,
    pub max_rows: usize,
    pub seed: u64,
}

impl Default for HyperSearch {
    fn default() -> Self {
        HyperSearch {
            starts: 16,
            refine_starts: 2,
            refine_evals: 150,
            max_rows: 256,
            seed: 0,
        }
    }
}

impl HyperSearch {
    pub fn with_seed(self, seed: u64) -> Self {
        HyperSearch { seed, ..self }
    }

    fn log_bounds(inputs: &[f64], dim: usize, targets: &[f64]) -> Result<Vec<(f64, f64)>> {
        let n = targets.len();
        if n < 3 {
            return Err(Error::Shape(format!("hyperparameter search needs n >= 3, got {n}")));
        }
        if inputs.len() != n * dim {
            return Err(Error::Shape(format!(
                "{} input values for {n} rows of width {dim}",
                inputs.len()
            )));
        }
        let mean = targets.iter().sum::<f64>() / n as f64;
        let var = targets.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n as f64;
        if !(var > 0.0) {
            return Err(Error::DegenerateData("targets have zero variance".into()));
        }
        let mut bounds = Vec::with_capacity(dim + 2);
        for d in 0..dim {
            let (lo, hi) = (0..n)
                .map(|i| inputs[i * dim + d])
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
            let range = if hi > lo { hi - lo } else { 1.0 };
            bounds.push(((1e-2 * range).ln(), (1e2 * range).ln()));
        }
        bounds.push(((1e-2 * var).ln(), (1e2 * var).ln()));
        bounds.push(((1e-6 * var).ln(), var.ln()));
        Ok(bounds)
    }

    fn decode(theta: &[f64]) -> KernelSpec {
        let dim = theta.len() - 2;
        KernelSpec {
            lengthscales: theta[..dim].iter().map(|v| v.exp()).collect(),
            signal_variance: theta[dim].exp(),
            noise_variance: theta[dim + 1].exp(),
        }
    }

    /// The Latin-hypercube starting specs, in draw order.
    pub fn start_points(&self, inputs: &[f64], dim: usize, targets: &[f64]) -> Result<Vec<KernelSpec>> {
        let bounds = Self::log_bounds(inputs, dim, targets)?;
        let mut r = rng::stream(self.seed, &[rng::label("hyper-starts")]);
        Ok(latin_hypercube(self.starts.max(1), &bounds, &mut r)
            .iter()
            .map(|t| Self::decode(t))
            .collect())
    }
}

fn lml(inputs: &[f64], dim: usize, targets: &[f64], spec: &KernelSpec) -> f64 {
    match gp_fit(inputs, dim, targets, spec) {
        Ok(m) => {
            let v = m.log_marginal_likelihood();
            if v.is_finite() {
                v
            } else {
                f64::NEG_INFINITY
            }
        }
        Err(_) => f64::NEG_INFINITY,
    }
}

/// Row-major `(inputs, targets)` blocks covering every row once.
fn blocks(inputs: &[f64], dim: usize, targets: &[f64], search: &HyperSearch) -> Vec<(Vec<f64>, Vec<f64>)> {
    let n = targets.len();
    let cap = search.max_rows.max(3);
    if n <= cap {
        return vec![(inputs.to_vec(), targets.to_vec())];
    }
    let mut r = rng::stream(search.seed, &[rng::label("hyper-blocks")]);
    let mut rows: Vec<usize> = (0..n).collect();
    rows.shuffle(&mut r);
    let k = n.div_ceil(cap);
    (0..k)
        .map(|b| {
            let part = &rows[b * n / k..(b + 1) * n / k];
            let x = part.iter().flat_map(|&i| inputs[i * dim..(i + 1) * dim].iter().copied()).collect();
            let y = part.iter().map(|&i| targets[i]).collect();
            (x, y)
        })
        .collect()
}

/// Selects kernel hyperparameters by maximizing the log marginal likelihood.
///
/// Zero-variance targets yield [`Error::DegenerateData`]; callers then use
/// [`KernelSpec::fallback`].
pub fn optimize_hyperparams(inputs: &[f64], dim: usize, targets: &[f64], search: &HyperSearch) -> Result<KernelSpec> {
    let bounds = HyperSearch::log_bounds(inputs, dim, targets)?;
    let parts = blocks(inputs, dim, targets, search);
    let objective = |t: &[f64]| -> f64 {
        let spec = HyperSearch::decode(t);
        parts.iter().map(|(x, y)| lml(x, dim, y, &spec)).sum()
    };
    let mut r = rng::stream(search.seed, &[rng::label("hyper-starts")]);
    let starts = latin_hypercube(search.starts.max(1), &bounds, &mut r);

    let mut scored: Vec<(Vec<f64>, f64)> = starts
        .into_iter()
        .map(|t| {
            let v = objective(&t);
            (t, v)
        })
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1));

    let nm = NelderMead {
        max_evals: search.refine_evals,
        initial_step: 0.05,
        ftol: 1e-9,
    };
    let mut best = scored[0].clone();
    for (start, _) in scored.iter().take(search.refine_starts) {
        let m = nm.minimize(start, &bounds, |t| -objective(t));
        if -m.value > best.1 {
            best = (m.point, -m.value);
        }
    }
    if !best.1.is_finite() {
        return Err(Error::Numerical("no hyperparameter setting could be factorized".into()));
    }
    Ok(HyperSearch::decode(&best.0))
}
