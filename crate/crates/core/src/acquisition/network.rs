use std::sync::Arc;

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use super::config::{BetaSchedule, PropagationMode};
use crate::error::{Error, Result};
use crate::exo::NodeSurrogate;
use crate::gp::Regressor;
use crate::scm::CausalGraph;

/// Surrogate of one node's mechanism.
#[derive(Debug, Clone, PartialEq)]
pub enum NodeModel {
    /// Decoder over `(z, a, û)` with a learned density for `û`.
    Exogenous(NodeSurrogate),
    /// `x = f(z, a) + u` with `u` Gaussian at the regressor's fitted noise
    /// level.
    Additive(Regressor),
}

impl NodeModel {
    fn draw_exogenous(&self, rng: &mut dyn RngCore) -> f64 {
        match self {
            NodeModel::Exogenous(s) => s.exo_density.sample(rng),
            NodeModel::Additive(_) => StandardNormal.sample(rng),
        }
    }

    fn input_width(&self) -> usize {
        match self {
            NodeModel::Exogenous(s) => s.decoder.dim(),
            NodeModel::Additive(r) => r.dim() + 1,
        }
    }

    /// Posterior mean and std of the latent function, plus the additive
    /// exogenous contribution. `input` ends with the exogenous value.
    fn predict(&self, input: &[f64]) -> (f64, f64, f64) {
        match self {
            NodeModel::Exogenous(s) => {
                let (m, v) = s.decoder.predict_unchecked(input);
                (m, v.sqrt(), 0.0)
            }
            NodeModel::Additive(r) => {
                let (head, u) = input.split_at(input.len() - 1);
                let (m, v) = r.predict_unchecked(head);
                (m, v.sqrt(), r.noise_variance().sqrt() * u[0])
            }
        }
    }
}

/// Frozen exogenous draws and propagation noises, `paths × nodes`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct AcquisitionContext {
    pub paths: usize,
    pub nodes: usize,
    pub exogenous: Vec<f64>,
    pub normals: Vec<f64>,
}

/// Plausible-model network over a causal graph.
#[derive(Debug, Clone)]
pub struct SurrogateNetwork {
    graph: Arc<CausalGraph>,
    nodes: Vec<NodeModel>,
    pub beta: BetaSchedule,
    pub mc_paths: usize,
    pub mode: PropagationMode,
}

impl SurrogateNetwork {
    pub fn new(graph: Arc<CausalGraph>, nodes: Vec<NodeModel>, beta: BetaSchedule, mc_paths: usize, mode: PropagationMode) -> Result<Self> {
        if nodes.len() != graph.node_count() {
            return Err(Error::Shape(format!(
                "{} node models for {} nodes",
                nodes.len(),
                graph.node_count()
            )));
        }
        for (i, m) in nodes.iter().enumerate() {
            let want = graph.input_width(i) + 1;
            if m.input_width() != want {
                return Err(Error::Dimension {
                    expected: want,
                    got: m.input_width(),
                });
            }
        }
        if mc_paths == 0 {
            return Err(Error::Config("at least one Monte-Carlo path is required".into()));
        }
        Ok(SurrogateNetwork {
            graph,
            nodes,
            beta,
            mc_paths,
            mode,
        })
    }

    pub fn graph(&self) -> &Arc<CausalGraph> {
        &self.graph
    }

    pub fn node(&self, i: usize) -> &NodeModel {
        &self.nodes[i]
    }

    /// Draws a fresh context: per path, nodes in topological order, the
    /// exogenous value followed by the propagation normal.
    pub fn draw_context(&self, rng: &mut dyn RngCore) -> AcquisitionContext {
        let d = self.nodes.len();
        let mut exogenous = vec![0.0; self.mc_paths * d];
        let mut normals = vec![0.0; self.mc_paths * d];
        for s in 0..self.mc_paths {
            for &i in self.graph.topological_order() {
                exogenous[s * d + i] = self.nodes[i].draw_exogenous(rng);
                normals[s * d + i] = StandardNormal.sample(rng);
            }
        }
        AcquisitionContext {
            paths: self.mc_paths,
            nodes: d,
            exogenous,
            normals,
        }
    }

    /// Path-averaged reward-node posterior mean and std at `action`.
    pub fn propagate(&self, action: &[f64], ctx: &AcquisitionContext) -> Result<(f64, f64)> {
        if action.len() != self.graph.action_dim() {
            return Err(Error::Dimension {
                expected: self.graph.action_dim(),
                got: action.len(),
            });
        }
        if ctx.nodes != self.nodes.len() || ctx.paths == 0 || ctx.exogenous.len() != ctx.paths * ctx.nodes {
            return Err(Error::Shape(format!(
                "context is {}×{}, network has {} nodes",
                ctx.paths,
                ctx.nodes,
                self.nodes.len()
            )));
        }
        Ok(self.propagate_unchecked(action, ctx))
    }

    pub(crate) fn propagate_unchecked(&self, action: &[f64], ctx: &AcquisitionContext) -> (f64, f64) {
        let d = self.nodes.len();
        let reward = self.graph.reward_node();
        let mut values = vec![0.0; d];
        let mut input = Vec::new();
        let (mut mu, mut sigma) = (0.0, 0.0);
        for s in 0..ctx.paths {
            for &i in self.graph.topological_order() {
                input.clear();
                input.extend(self.graph.parents(i).iter().map(|&p| values[p]));
                input.extend_from_slice(&action[self.graph.action_slots(i)]);
                input.push(ctx.exogenous[s * d + i]);
                let (m, sd, additive) = self.nodes[i].predict(&input);
                if i == reward {
                    // Additive exogenous terms have zero mean at the reward.
                    mu += m;
                    sigma += sd;
                    values[i] = m;
                } else {
                    values[i] = match self.mode {
                        PropagationMode::Mean => m,
                        PropagationMode::Sampled => m + sd * ctx.normals[s * d + i],
                    } + additive;
                }
            }
        }
        let n = ctx.paths as f64;
        (mu / n, sigma / n)
    }

    /// `μ(a) + β_t σ(a)`.
    pub fn ucb_value(&self, action: &[f64], ctx: &AcquisitionContext, t: usize) -> Result<f64> {
        let (mu, sigma) = self.propagate(action, ctx)?;
        Ok(mu + self.beta.at(t) * sigma)
    }

    pub(crate) fn ucb_unchecked(&self, action: &[f64], ctx: &AcquisitionContext, t: usize) -> f64 {
        let (mu, sigma) = self.propagate_unchecked(action, ctx);
        mu + self.beta.at(t) * sigma
    }
}
