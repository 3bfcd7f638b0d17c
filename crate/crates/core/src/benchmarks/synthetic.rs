use std::sync::Arc;

use super::noise::MixtureNoiseSpec;
use crate::error::Result;
use crate::scm::{ActionSpace, CausalGraph, GaussianNoise, GroundTruthScm, NodeSpec, NoiseModel};

const DROPWAVE_GAIN: f64 = 10.24;
const DROPWAVE_SHIFT: f64 = 5.12;

/// Rosenbrock sum divided by this lands in roughly `[0, 1]` on the action box.
pub const ROSENBROCK_SCALE: f64 = 1.0 / 2000.0;

pub fn dropwave_x(a0: f64, a1: f64) -> f64 {
    ((DROPWAVE_GAIN * a0 - DROPWAVE_SHIFT).powi(2) + (DROPWAVE_GAIN * a1 - DROPWAVE_SHIFT).powi(2)).sqrt()
}

pub fn dropwave_y(x: f64) -> f64 {
    (1.0 + (12.0 * x).cos()) / (2.0 + 0.5 * x * x)
}

/// `X → Y` with both actions on `X`; noise is added to both nodes.
pub fn dropwave_scm(noise: &MixtureNoiseSpec) -> Result<GroundTruthScm> {
    let u: Arc<dyn NoiseModel> = Arc::new(*noise);
    let graph = CausalGraph::new(2, &[(0, 1)], vec![2, 0])?;
    GroundTruthScm::new(
        graph,
        ActionSpace::uniform(2, 0.0, 1.0)?,
        vec![
            NodeSpec::new(|_, a, u| dropwave_x(a[0], a[1]) + u, u.clone()),
            NodeSpec::new(|z, _, u| dropwave_y(z[0]) + u, u),
        ],
    )
}

/// `Σ_k 100 (x_{k+1} − x_k²)² + (1 − x_k)²`.
pub fn rosenbrock_sum(x: &[f64]) -> f64 {
    x.windows(2)
        .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
        .sum()
}

/// Reconstruction: chain `X0 → X1 → X2` feeding `Y`, one action in `[0, 1]` per
/// `X` node, `X0 = a0 + u`, `Xk = X(k−1) + ak + u`, and
/// `Y = −scale · rosenbrock(X0, X1, X2) + u`.
pub fn rosenbrock_scm(noise: &MixtureNoiseSpec) -> Result<GroundTruthScm> {
    let u: Arc<dyn NoiseModel> = Arc::new(*noise);
    // The reward reads every X node: the sum couples neighbouring pairs.
    let graph = CausalGraph::new(4, &[(0, 1), (1, 2), (0, 3), (1, 3), (2, 3)], vec![1, 1, 1, 0])?;
    GroundTruthScm::new(
        graph,
        ActionSpace::uniform(3, 0.0, 1.0)?,
        vec![
            NodeSpec::new(|_, a, u| a[0] + u, u.clone()),
            NodeSpec::new(|z, a, u| z[0] + a[0] + u, u.clone()),
            NodeSpec::new(|z, a, u| z[0] + a[0] + u, u.clone()),
            NodeSpec::new(|z, _, u| -ROSENBROCK_SCALE * rosenbrock_sum(z) + u, u),
        ],
    )
}

pub fn alpine_factor(x: f64) -> f64 {
    x.max(0.0).sqrt() * x.sin()
}

/// Reconstruction: chain of five `X` nodes and the reward, actions in
/// `[0, 10]`; `X0 = a0 + u`, `Xk = factor(X(k−1)) + ak + u`, and
/// `Y = factor(X4) + u` with `factor(x) = √max(x, 0) · sin x`.
pub fn alpine2_scm(noise: &MixtureNoiseSpec) -> Result<GroundTruthScm> {
    let u: Arc<dyn NoiseModel> = Arc::new(*noise);
    let edges: Vec<(usize, usize)> = (0..5).map(|k| (k, k + 1)).collect();
    let graph = CausalGraph::new(6, &edges, vec![1, 1, 1, 1, 1, 0])?;
    let mut nodes = vec![NodeSpec::new(|_, a, u| a[0] + u, u.clone())];
    for _ in 1..5 {
        nodes.push(NodeSpec::new(|z, a, u| alpine_factor(z[0]) + a[0] + u, u.clone()));
    }
    nodes.push(NodeSpec::new(|z, _, u| alpine_factor(z[0]) + u, u));
    GroundTruthScm::new(graph, ActionSpace::uniform(5, 0.0, 10.0)?, nodes)
}

/// Noise scale of the heteroscedastic node as a function of the second
/// action; smallest at `a1 = 0.7`.
pub fn multiplicative_scale(a1: f64) -> f64 {
    0.15 + 2.0 * (a1 - 0.7).powi(2)
}

/// `X = 3 (a0 − 0.4) + scale(a1) · u`, `Y = exp(−X²) + ε` with
/// `ε ~ N(0, 0.01²)`. The best action both centres `X` and shrinks its
/// spread, which an additive-noise surrogate cannot see.
pub fn multiplicative_scm(noise: &MixtureNoiseSpec) -> Result<GroundTruthScm> {
    let u: Arc<dyn NoiseModel> = Arc::new(*noise);
    let graph = CausalGraph::new(2, &[(0, 1)], vec![2, 0])?;
    GroundTruthScm::new(
        graph,
        ActionSpace::uniform(2, 0.0, 1.0)?,
        vec![
            NodeSpec::new(|_, a, u| 3.0 * (a[0] - 0.4) + multiplicative_scale(a[1]) * u, u),
            NodeSpec::new(
                |z, _, e| (-z[0] * z[0]).exp() + e,
                Arc::new(GaussianNoise { mean: 0.0, std: 0.01 }),
            ),
        ],
    )
}
