use std::f64::consts::PI;

use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// One-dimensional Gaussian mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixture {
    weights: Vec<f64>,
    means: Vec<f64>,
    variances: Vec<f64>,
}

impl GaussianMixture {
    pub fn new(weights: Vec<f64>, means: Vec<f64>, variances: Vec<f64>) -> Result<Self> {
        let k = weights.len();
        if k == 0 || means.len() != k || variances.len() != k {
            return Err(Error::Shape("mixture parameter lengths differ or are empty".into()));
        }
        if weights.iter().any(|&w| !(w > 0.0)) || variances.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::Config("mixture weights and variances must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("mixture weights sum to {total}")));
        }
        Ok(GaussianMixture {
            weights,
            means,
            variances,
        })
    }

    pub fn single(mean: f64, variance: f64) -> Self {
        GaussianMixture {
            weights: vec![1.0],
            means: vec![mean],
            variances: vec![variance],
        }
    }

    pub fn components(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn mean(&self) -> f64 {
        self.weights.iter().zip(&self.means).map(|(w, m)| w * m).sum()
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.weights
            .iter()
            .zip(&self.means)
            .zip(&self.variances)
            .map(|((w, m), v)| w * (v + (m - mu).powi(2)))
            .sum()
    }

    pub fn logpdf(&self, v: f64) -> f64 {
        let terms = self
            .weights
            .iter()
            .zip(&self.means)
            .zip(&self.variances)
            .map(|((w, m), var)| w.ln() + normal_logpdf(v, *m, *var));
        log_sum_exp(terms)
    }

    pub fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        let mut pick: f64 = rng.random();
        let mut idx = self.weights.len() - 1;
        for (i, w) in self.weights.iter().enumerate() {
            if pick < *w {
                idx = i;
                break;
            }
            pick -= w;
        }
        let e: f64 = StandardNormal.sample(rng);
        self.means[idx] + self.variances[idx].sqrt() * e
    }
}

fn normal_logpdf(v: f64, mean: f64, var: f64) -> f64 {
    -0.5 * ((2.0 * PI * var).ln() + (v - mean).powi(2) / var)
}

fn log_sum_exp(terms: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = terms.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// EM settings for [`fit_gmm`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmSettings {
    pub components: usize,
    pub restarts: usize,
    pub max_iterations: usize,
    /// Stop once the log-likelihood gain per sample falls below this.
    pub tolerance: f64,
}

impl EmSettings {
    pub fn new(components: usize) -> Self {
        EmSettings {
            components,
            restarts: 8,
            max_iterations: 200,
            tolerance: 1e-8,
        }
    }
}

/// Result of a traced fit: the best model and the log-likelihood after each
/// E-step of every restart.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmFit {
    pub mixture: GaussianMixture,
    pub log_likelihood: f64,
    pub traces: Vec<Vec<f64>>,
}

/// Fits a `k`-component mixture by EM with k-means++ seeding.
///
/// Identical samples give [`Error::DegenerateData`]; [`spike`] builds the
/// fallback model.
pub fn fit_gmm<R: Rng + ?Sized>(samples: &[f64], k: usize, rng: &mut R) -> Result<GaussianMixture> {
    fit_gmm_traced(samples, &EmSettings::new(k), rng).map(|f| f.mixture)
}

/// Single component at `value` with the variance floor of `samples`.
pub fn spike(value: f64, samples: &[f64]) -> GaussianMixture {
    GaussianMixture::single(value, variance_floor(samples))
}

fn variance_floor(samples: &[f64]) -> f64 {
    let n = samples.len().max(1) as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (1e-6 * var).max(1e-12)
}

pub fn fit_gmm_traced<R: Rng + ?Sized>(samples: &[f64], settings: &EmSettings, rng: &mut R) -> Result<GmmFit> {
    let n = samples.len();
    let k = settings.components;
    if k == 0 {
        return Err(Error::Config("mixture needs at least one component".into()));
    }
    if n < (2 * k).max(8) {
        return Err(Error::Shape(format!("{n} samples are too few for {k} components")));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite sample".into()));
    }
    if samples.iter().all(|&v| v == samples[0]) {
        return Err(Error::DegenerateData("all samples identical".into()));
    }

    let floor = variance_floor(samples);
    let master: u64 = rng.random();
    let runs: Vec<(GaussianMixture, f64, Vec<f64>)> = (0..settings.restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let mut stream = rng::stream(master, &[r as u64]);
            let init = kmeans_pp_init(samples, k, floor, &mut stream);
            run_em(samples, init, floor, settings)
        })
        .collect();

    let traces = runs.iter().map(|r| r.2.clone()).collect();
    let (mixture, log_likelihood, _) = runs
        .into_iter()
        .reduce(|best, next| if next.1 > best.1 { next } else { best })
        .expect("at least one restart");
    Ok(GmmFit {
        mixture,
        log_likelihood,
        traces,
    })
}

fn kmeans_pp_init<R: Rng + ?Sized>(samples: &[f64], k: usize, floor: f64, rng: &mut R) -> GaussianMixture {
    let n = samples.len();
    let mut centers = vec![samples[rng.random_range(0..n)]];
    let mut dist: Vec<f64> = samples.iter().map(|v| (v - centers[0]).powi(2)).collect();
    while centers.len() < k {
        let total: f64 = dist.iter().sum();
        let next = if total > 0.0 {
            let mut pick = rng.random::<f64>() * total;
            let mut idx = n - 1;
            for (i, d) in dist.iter().enumerate() {
                if pick < *d {
                    idx = i;
                    break;
                }
                pick -= d;
            }
            samples[idx]
        } else {
            samples[rng.random_range(0..n)]
        };
        centers.push(next);
        for (d, v) in dist.iter_mut().zip(samples) {
            *d = d.min((v - next).powi(2));
        }
    }

    // Hard assignment to the nearest center gives starting variances.
    let mut counts = vec![0usize; k];
    let mut sq = vec![0.0; k];
    for v in samples {
        let c = (0..k)
            .min_by(|&a, &b| (v - centers[a]).abs().total_cmp(&(v - centers[b]).abs()))
            .unwrap_or(0);
        counts[c] += 1;
        sq[c] += (v - centers[c]).powi(2);
    }
    let overall = {
        let mean = samples.iter().sum::<f64>() / n as f64;
        samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64
    };
    let variances = (0..k)
        .map(|c| {
            if counts[c] > 1 {
                (sq[c] / counts[c] as f64).max(floor)
            } else {
                overall.max(floor)
            }
        })
        .collect();
    GaussianMixture {
        weights: vec![1.0 / k as f64; k],
        means: centers,
        variances,
    }
}

fn run_em(samples: &[f64], mut model: GaussianMixture, floor: f64, settings: &EmSettings) -> (GaussianMixture, f64, Vec<f64>) {
    let n = samples.len();
    let k = model.components();
    let mut resp = vec![0.0; n * k];
    let mut trace = Vec::new();
    let mut best_ll = f64::NEG_INFINITY;

    for _ in 0..settings.max_iterations {
        // E-step
        let mut ll = 0.0;
        let log_w: Vec<f64> = model.weights.iter().map(|w| w.ln()).collect();
        for (i, v) in samples.iter().enumerate() {
            let row = &mut resp[i * k..(i + 1) * k];
            for c in 0..k {
                row[c] = log_w[c] + normal_logpdf(*v, model.means[c], model.variances[c]);
            }
            let lse = log_sum_exp(row.iter().copied());
            ll += lse;
            for r in row.iter_mut() {
                *r = (*r - lse).exp();
            }
        }
        trace.push(ll);
        let gain = ll - best_ll;
        best_ll = ll;
        if gain.is_finite() && gain < settings.tolerance * n as f64 {
            break;
        }

        // M-step
        let mut next = model.clone();
        for c in 0..k {
            let nk: f64 = (0..n).map(|i| resp[i * k + c]).sum();
            if nk < 1e-12 {
                // Empty component: keep parameters, give it negligible weight.
                next.weights[c] = 1e-12;
                continue;
            }
            let mean = (0..n).map(|i| resp[i * k + c] * samples[i]).sum::<f64>() / nk;
            let var = (0..n)
                .map(|i| resp[i * k + c] * (samples[i] - mean).powi(2))
                .sum::<f64>()
                / nk;
            next.weights[c] = nk / n as f64;
            next.means[c] = mean;
            next.variances[c] = var.max(floor);
        }
        let total: f64 = next.weights.iter().sum();
        next.weights.iter_mut().for_each(|w| *w /= total);
        model = next;
    }
    (model, best_ll, trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn standard_normal_logpdf_at_zero() {
        let m = GaussianMixture::single(0.0, 1.0);
        assert!((m.logpdf(0.0) + 0.5 * (2.0 * PI).ln()).abs() < 1e-15);
        assert!((m.logpdf(0.0) + 0.91894).abs() < 1e-5);
    }

    #[test]
    fn identical_samples_are_degenerate() {
        let s = [1.5; 20];
        let mut r = rng::stream(0, &[]);
        assert!(matches!(fit_gmm(&s, 2, &mut r), Err(Error::DegenerateData(_))));
        let m = spike(1.5, &s);
        assert_eq!(m.components(), 1);
        assert_eq!(m.means()[0], 1.5);
        assert!(m.variances()[0] > 0.0);
    }

    #[test]
    fn too_few_samples() {
        let mut r = rng::stream(0, &[]);
        let s: Vec<f64> = (0..7).map(|i| i as f64).collect();
        assert!(matches!(fit_gmm(&s, 2, &mut r), Err(Error::Shape(_))));
    }

    #[test]
    fn validation() {
        assert!(GaussianMixture::new(vec![0.5, 0.4], vec![0.0, 1.0], vec![1.0, 1.0]).is_err());
        assert!(GaussianMixture::new(vec![0.5, 0.5], vec![0.0, 1.0], vec![1.0, 0.0]).is_err());
        assert!(GaussianMixture::new(vec![0.5, 0.5], vec![0.0, 1.0], vec![1.0, 2.0]).is_ok());
    }

    #[test]
    fn moments_of_two_components() {
        let m = GaussianMixture::new(vec![0.25, 0.75], vec![-1.0, 1.0], vec![0.5, 2.0]).unwrap();
        assert!((m.mean() - 0.5).abs() < 1e-15);
        // Σ w (v + m²) - μ²
        let second = 0.25 * (0.5 + 1.0) + 0.75 * (2.0 + 1.0);
        assert!((m.variance() - (second - 0.25)).abs() < 1e-15);
    }

    #[test]
    fn fit_is_deterministic_in_seed() {
        let mut r = rng::stream(5, &[]);
        let s: Vec<f64> = (0..200).map(|_| GaussianMixture::single(0.0, 1.0).sample(&mut r)).collect();
        let a = fit_gmm(&s, 2, &mut rng::stream(1, &[])).unwrap();
        let b = fit_gmm(&s, 2, &mut rng::stream(1, &[])).unwrap();
        assert_eq!(a, b);
    }
}
