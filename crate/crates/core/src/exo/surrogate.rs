use rayon::prelude::*;

use super::gmm::{fit_gmm, spike, GaussianMixture};
use super::phi::{fit_phi, PhiModel, PhiPolicy};
use crate::error::{Error, Result};
use crate::gp::{FitPolicy, HyperSearch, KernelSpec, Regressor};
use crate::rng;
use crate::scm::{NodeRecords, ObservationSet};

/// Per-node bundle: `φ`, decoder `g`, the density of the recovered exogenous
/// values and the values themselves.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSurrogate {
    pub phi: PhiModel,
    pub decoder: Regressor,
    pub exo_density: GaussianMixture,
    pub recovered: Vec<f64>,
}

/// Kernels kept between hyperparameter refits, in standardized units.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NodeKernels {
    pub phi_mean: Option<KernelSpec>,
    pub phi_scale: Option<KernelSpec>,
    pub decoder: Option<KernelSpec>,
}

impl NodeKernels {
    pub fn of(s: &NodeSurrogate) -> Self {
        NodeKernels {
            phi_mean: s.phi.mean_kernel().cloned(),
            phi_scale: s.phi.scale_kernel().cloned(),
            decoder: s.decoder.kernel().cloned(),
        }
    }
}

fn policy(kernel: Option<&KernelSpec>, search: HyperSearch) -> FitPolicy {
    match kernel {
        Some(k) => FitPolicy::Reuse(k.clone()),
        None => FitPolicy::Optimize(search),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurrogateSettings {
    pub components: usize,
    pub search: HyperSearch,
}

impl Default for SurrogateSettings {
    fn default() -> Self {
        SurrogateSettings {
            components: 2,
            search: HyperSearch::default(),
        }
    }
}

/// `φ` for one node, falling back to the degenerate model on constant data.
fn phi_for(records: &NodeRecords, inputs: &[f64], policy: &PhiPolicy) -> Result<PhiModel> {
    let dim = records.z_width + records.a_width;
    match fit_phi(inputs, dim, &records.x, policy) {
        Err(Error::DegenerateData(_)) => Ok(PhiModel::degenerate(dim, records.x[0])),
        other => other,
    }
}

/// Encoder outputs for every node and round.
pub fn recover_all(obs: &ObservationSet, search: &HyperSearch) -> Result<Vec<Vec<f64>>> {
    if obs.rounds() < 3 {
        return Err(Error::Shape(format!("recovery needs at least 3 rounds, got {}", obs.rounds())));
    }
    let g = obs.graph();
    (0..g.node_count())
        .into_par_iter()
        .map(|i| {
            let rec = obs.node(i);
            let inputs = rec.inputs();
            let search = search.with_seed(rng::derive_seed(search.seed, &[i as u64]));
            let phi = phi_for(
                rec,
                &inputs,
                &PhiPolicy {
                    mean: FitPolicy::Optimize(search),
                    scale: FitPolicy::Optimize(search),
                },
            )?;
            encode_rows(&phi, rec, &inputs)
        })
        .collect()
}

fn encode_rows(phi: &PhiModel, rec: &NodeRecords, inputs: &[f64]) -> Result<Vec<f64>> {
    let dim = phi.dim();
    (0..rec.len())
        .map(|r| phi.encode(&inputs[r * dim..(r + 1) * dim], rec.x[r]))
        .collect()
}

/// Appends the recovered value as the last column of each `(z, a)` row.
pub fn augment(inputs: &[f64], dim: usize, u: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(u.len() * (dim + 1));
    for (r, &v) in u.iter().enumerate() {
        out.extend_from_slice(&inputs[r * dim..(r + 1) * dim]);
        out.push(v);
    }
    out
}

/// Decoder `g` over `(z, a, û)`.
pub fn fit_decoder(inputs: &[f64], dim: usize, u: &[f64], x: &[f64], policy: &FitPolicy) -> Result<Regressor> {
    if u.len() != x.len() || inputs.len() != x.len() * dim {
        return Err(Error::Shape(format!(
            "decoder rows disagree: {} inputs of width {dim}, {} recovered values, {} targets",
            inputs.len(),
            u.len(),
            x.len()
        )));
    }
    Regressor::fit(&augment(inputs, dim, u), dim + 1, x, policy)
}

/// Mixture density of recovered values. Identical values give a spike; too
/// few values for EM give a moment-matched single Gaussian.
pub fn exo_density(u: &[f64], components: usize, seed: u64) -> GaussianMixture {
    let n = u.len().max(1) as f64;
    let mean = u.iter().sum::<f64>() / n;
    let var = u.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let mut r = rng::stream(seed, &[rng::label("exo-density")]);
    match fit_gmm(u, components, &mut r) {
        Ok(m) => m,
        Err(Error::DegenerateData(_)) => spike(u[0], u),
        Err(_) if var > 0.0 => GaussianMixture::single(mean, var),
        Err(_) => spike(mean, u),
    }
}

/// Fits every node's surrogate. `previous` supplies kernels to reuse when
/// hyperparameters are not being refit.
pub fn fit_surrogates(
    obs: &ObservationSet,
    previous: Option<&[NodeKernels]>,
    settings: &SurrogateSettings,
) -> Result<Vec<NodeSurrogate>> {
    let g = obs.graph();
    (0..g.node_count())
        .into_par_iter()
        .map(|i| {
            let kernels = previous.map(|p| &p[i]);
            let search = settings
                .search
                .with_seed(rng::derive_seed(settings.search.seed, &[i as u64]));
            fit_node(obs.node(i), kernels, settings.components, search)
        })
        .collect()
}

pub fn fit_node(
    rec: &NodeRecords,
    kernels: Option<&NodeKernels>,
    components: usize,
    search: HyperSearch,
) -> Result<NodeSurrogate> {
    if rec.len() < 3 {
        return Err(Error::Shape(format!("node surrogate needs at least 3 rows, got {}", rec.len())));
    }
    let dim = rec.z_width + rec.a_width;
    let inputs = rec.inputs();
    let phi_policy = PhiPolicy {
        mean: policy(kernels.and_then(|k| k.phi_mean.as_ref()), search),
        scale: policy(
            kernels.and_then(|k| k.phi_scale.as_ref()),
            search.with_seed(rng::derive_seed(search.seed, &[rng::label("scale")])),
        ),
    };
    let phi = phi_for(rec, &inputs, &phi_policy)?;
    let recovered = encode_rows(&phi, rec, &inputs)?;
    let decoder = fit_decoder(
        &inputs,
        dim,
        &recovered,
        &rec.x,
        &policy(
            kernels.and_then(|k| k.decoder.as_ref()),
            search.with_seed(rng::derive_seed(search.seed, &[rng::label("decoder")])),
        ),
    )?;
    let exo_density = exo_density(&recovered, components, search.seed);
    Ok(NodeSurrogate {
        phi,
        decoder,
        exo_density,
        recovered,
    })
}
