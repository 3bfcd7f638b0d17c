//! Causal graphs, soft-intervention action spaces, observation storage and
//! the ground-truth simulator interface.
//!
//! Node ids are dense integers `0..=d`; the reward node is always `d`, the
//! last node. Action slots are laid out node by node in ascending id order,
//! and within a node in action-index order.

use std::collections::BinaryHeap;
use std::cmp::Reverse;
use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type NodeId = usize;

/// Kahn's algorithm with a min-heap, so ties resolve to the smallest id.
pub fn topological_order(node_count: usize, edges: &[(NodeId, NodeId)]) -> Result<Vec<NodeId>> {
    let mut indegree = vec![0usize; node_count];
    let mut children = vec![Vec::new(); node_count];
    for &(from, to) in edges {
        if from >= node_count || to >= node_count {
            return Err(Error::Graph(format!(
                "edge {from}->{to} references a node outside 0..{node_count}"
            )));
        }
        children[from].push(to);
        indegree[to] += 1;
    }

    let mut ready: BinaryHeap<Reverse<NodeId>> = (0..node_count)
        .filter(|&i| indegree[i] == 0)
        .map(Reverse)
        .collect();
    let mut order = Vec::with_capacity(node_count);
    while let Some(Reverse(node)) = ready.pop() {
        order.push(node);
        for &child in &children[node] {
            indegree[child] -= 1;
            if indegree[child] == 0 {
                ready.push(Reverse(child));
            }
        }
    }

    if order.len() < node_count {
        let node = (0..node_count).find(|&i| indegree[i] > 0).unwrap_or(0);
        return Err(Error::Cycle { node });
    }
    Ok(order)
}

/// A DAG over endogenous nodes with action inputs attached per node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphDocument", into = "GraphDocument")]
pub struct CausalGraph {
    parents: Vec<Vec<NodeId>>,
    action_arity: Vec<usize>,
    action_offsets: Vec<usize>,
    order: Vec<NodeId>,
    edges: Vec<(NodeId, NodeId)>,
}

impl CausalGraph {
    /// Builds a graph whose reward node is `node_count - 1`.
    pub fn new(node_count: usize, edges: &[(NodeId, NodeId)], action_arity: Vec<usize>) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::Graph("graph needs at least one node".into()));
        }
        if action_arity.len() != node_count {
            return Err(Error::Graph(format!(
                "action_arity has {} entries for {node_count} nodes",
                action_arity.len()
            )));
        }
        if action_arity[node_count - 1] != 0 {
            return Err(Error::Graph("the reward node cannot carry actions".into()));
        }
        let order = topological_order(node_count, edges)?;

        let mut edges: Vec<_> = edges.to_vec();
        edges.sort_unstable();
        edges.dedup();
        let mut parents = vec![Vec::new(); node_count];
        for &(from, to) in &edges {
            parents[to].push(from);
        }

        let mut action_offsets = Vec::with_capacity(node_count + 1);
        let mut offset = 0;
        for &arity in &action_arity {
            action_offsets.push(offset);
            offset += arity;
        }
        action_offsets.push(offset);

        Ok(CausalGraph {
            parents,
            action_arity,
            action_offsets,
            order,
            edges,
        })
    }

    pub fn node_count(&self) -> usize {
        self.parents.len()
    }

    pub fn reward_node(&self) -> NodeId {
        self.parents.len() - 1
    }

    /// Parents of `node` in ascending id order; this is the layout of `z_i`.
    pub fn parents(&self, node: NodeId) -> &[NodeId] {
        &self.parents[node]
    }

    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn action_arity(&self, node: NodeId) -> usize {
        self.action_arity[node]
    }

    /// Slots of the flat action vector that belong to `node`.
    pub fn action_slots(&self, node: NodeId) -> Range<usize> {
        self.action_offsets[node]..self.action_offsets[node + 1]
    }

    /// Total number of action slots.
    pub fn action_dim(&self) -> usize {
        *self.action_offsets.last().unwrap_or(&0)
    }

    pub fn topological_order(&self) -> &[NodeId] {
        &self.order
    }

    /// Width of the per-node regression input `(z_i, a_i)`.
    pub fn input_width(&self, node: NodeId) -> usize {
        self.parents[node].len() + self.action_arity[node]
    }
}

/// Serialized form of a graph. `bounds` is optional here and consumed by
/// [`ActionSpace`] when present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphDocument {
    pub nodes: usize,
    #[serde(default)]
    pub edges: Vec<(NodeId, NodeId)>,
    pub action_arity: Vec<usize>,
    pub reward_node: NodeId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Vec<(f64, f64)>>,
}

impl TryFrom<GraphDocument> for CausalGraph {
    type Error = Error;

    fn try_from(doc: GraphDocument) -> Result<Self> {
        if doc.nodes == 0 || doc.reward_node != doc.nodes - 1 {
            return Err(Error::Graph(format!(
                "reward_node must be the last node ({}), got {}",
                doc.nodes.saturating_sub(1),
                doc.reward_node
            )));
        }
        CausalGraph::new(doc.nodes, &doc.edges, doc.action_arity)
    }
}

impl From<CausalGraph> for GraphDocument {
    fn from(g: CausalGraph) -> Self {
        GraphDocument {
            nodes: g.node_count(),
            reward_node: g.reward_node(),
            edges: g.edges,
            action_arity: g.action_arity,
            bounds: None,
        }
    }
}

/// A point in the action space, one value per slot in canonical order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionVector(pub Vec<f64>);

impl ActionVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for ActionVector {
    fn from(v: Vec<f64>) -> Self {
        ActionVector(v)
    }
}

/// Closed box of admissible actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionSpace {
    bounds: Vec<(f64, f64)>,
}

impl ActionSpace {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        for (slot, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::Config(format!("slot {slot}: invalid bounds [{lo}, {hi}]")));
            }
        }
        Ok(ActionSpace { bounds })
    }

    pub fn uniform(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![(lo, hi); dim])
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn check(&self, action: &[f64]) -> Result<()> {
        if action.len() != self.bounds.len() {
            return Err(Error::Dimension {
                expected: self.bounds.len(),
                got: action.len(),
            });
        }
        for (slot, (&value, &(lo, hi))) in action.iter().zip(&self.bounds).enumerate() {
            if !(value >= lo && value <= hi) {
                return Err(Error::Bounds { slot, value, lo, hi });
            }
        }
        Ok(())
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.bounds
            .iter()
            .map(|&(lo, hi)| if hi > lo { rng.random_range(lo..=hi) } else { lo })
            .collect()
    }

    pub fn project(&self, action: &mut [f64]) {
        for (v, &(lo, hi)) in action.iter_mut().zip(&self.bounds) {
            *v = v.clamp(lo, hi);
        }
    }

    pub fn center(&self) -> Vec<f64> {
        self.bounds.iter().map(|&(lo, hi)| 0.5 * (lo + hi)).collect()
    }
}

/// Per-node records: parent tuples, action tuples and outcomes, row-major.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NodeRecords {
    pub z_width: usize,
    pub a_width: usize,
    pub z: Vec<f64>,
    pub a: Vec<f64>,
    pub x: Vec<f64>,
}

impl NodeRecords {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Row-major `(z, a)` regression inputs.
    pub fn inputs(&self) -> Vec<f64> {
        let width = self.z_width + self.a_width;
        let mut out = Vec::with_capacity(width * self.len());
        for row in 0..self.len() {
            out.extend_from_slice(&self.z[row * self.z_width..(row + 1) * self.z_width]);
            out.extend_from_slice(&self.a[row * self.a_width..(row + 1) * self.a_width]);
        }
        out
    }
}

/// Growing data set `D_t`: per-node records plus the full action vectors and
/// rewards of every round.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    graph: Arc<CausalGraph>,
    nodes: Vec<NodeRecords>,
    actions: Vec<Vec<f64>>,
}

impl ObservationSet {
    pub fn new(graph: Arc<CausalGraph>) -> Self {
        let nodes = (0..graph.node_count())
            .map(|i| NodeRecords {
                z_width: graph.parents(i).len(),
                a_width: graph.action_arity(i),
                ..NodeRecords::default()
            })
            .collect();
        ObservationSet {
            graph,
            nodes,
            actions: Vec::new(),
        }
    }

    pub fn graph(&self) -> &Arc<CausalGraph> {
        &self.graph
    }

    /// Number of rounds `t`.
    pub fn rounds(&self) -> usize {
        self.actions.len()
    }

    pub fn node(&self, node: NodeId) -> &NodeRecords {
        &self.nodes[node]
    }

    pub fn actions(&self) -> &[Vec<f64>] {
        &self.actions
    }

    pub fn rewards(&self) -> &[f64] {
        &self.nodes[self.graph.reward_node()].x
    }

    /// Records one round from a full node-value vector and the action played.
    pub fn append_round(&mut self, node_values: &[f64], action: &[f64]) -> Result<()> {
        let g = &self.graph;
        if node_values.len() != g.node_count() {
            return Err(Error::Shape(format!(
                "{} node values for {} nodes",
                node_values.len(),
                g.node_count()
            )));
        }
        if action.len() != g.action_dim() {
            return Err(Error::Shape(format!(
                "action has {} slots, graph has {}",
                action.len(),
                g.action_dim()
            )));
        }
        let records: Vec<_> = (0..g.node_count())
            .map(|i| {
                let z: Vec<f64> = g.parents(i).iter().map(|&p| node_values[p]).collect();
                (z, action[g.action_slots(i)].to_vec(), node_values[i])
            })
            .collect();
        self.append_records(&records, action)
    }

    /// Records one round from explicit per-node `(z, a, x)` tuples.
    pub fn append_records(&mut self, records: &[(Vec<f64>, Vec<f64>, f64)], action: &[f64]) -> Result<()> {
        if records.len() != self.nodes.len() {
            return Err(Error::Shape(format!(
                "{} node records for {} nodes",
                records.len(),
                self.nodes.len()
            )));
        }
        for (i, (z, a, _)) in records.iter().enumerate() {
            let node = &self.nodes[i];
            if z.len() != node.z_width {
                return Err(Error::Shape(format!(
                    "node {i}: parent tuple width {} != {}",
                    z.len(),
                    node.z_width
                )));
            }
            if a.len() != node.a_width {
                return Err(Error::Shape(format!(
                    "node {i}: action tuple width {} != {}",
                    a.len(),
                    node.a_width
                )));
            }
        }
        for (node, (z, a, x)) in self.nodes.iter_mut().zip(records) {
            node.z.extend_from_slice(z);
            node.a.extend_from_slice(a);
            node.x.push(*x);
        }
        self.actions.push(action.to_vec());
        Ok(())
    }
}

/// A sampleable exogenous distribution.
pub trait NoiseModel: Send + Sync + fmt::Debug {
    fn sample(&self, rng: &mut dyn RngCore) -> f64;
    fn mean(&self) -> f64;
    fn variance(&self) -> f64;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroNoise;

impl NoiseModel for ZeroNoise {
    fn sample(&self, _rng: &mut dyn RngCore) -> f64 {
        0.0
    }
    fn mean(&self) -> f64 {
        0.0
    }
    fn variance(&self) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GaussianNoise {
    pub mean: f64,
    pub std: f64,
}

impl NoiseModel for GaussianNoise {
    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        let e: f64 = StandardNormal.sample(rng);
        self.mean + self.std * e
    }
    fn mean(&self) -> f64 {
        self.mean
    }
    fn variance(&self) -> f64 {
        self.std * self.std
    }
}

/// Where the exogenous draw of a node enters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseEntry {
    /// `x = f(z, a, u)`; children see `x`.
    #[default]
    Structural,
    /// The mechanism evaluates a latent state `s = f(z, a, 0)`; the node is
    /// observed as `s + u` while the latent state propagates.
    Observation,
}

/// Which value of its parents a mechanism reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParentView {
    #[default]
    Observed,
    Latent,
}

pub type Mechanism = dyn Fn(&[f64], &[f64], f64) -> f64 + Send + Sync;

#[derive(Clone)]
pub struct NodeSpec {
    pub mechanism: Arc<Mechanism>,
    pub noise: Arc<dyn NoiseModel>,
    pub entry: NoiseEntry,
    pub view: ParentView,
}

impl NodeSpec {
    pub fn new<F>(mechanism: F, noise: Arc<dyn NoiseModel>) -> Self
    where
        F: Fn(&[f64], &[f64], f64) -> f64 + Send + Sync + 'static,
    {
        NodeSpec {
            mechanism: Arc::new(mechanism),
            noise,
            entry: NoiseEntry::Structural,
            view: ParentView::Observed,
        }
    }

    pub fn with_entry(mut self, entry: NoiseEntry) -> Self {
        self.entry = entry;
        self
    }

    pub fn with_view(mut self, view: ParentView) -> Self {
        self.view = view;
        self
    }
}

impl fmt::Debug for NodeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NodeSpec")
            .field("noise", &self.noise)
            .field("entry", &self.entry)
            .field("view", &self.view)
            .finish_non_exhaustive()
    }
}

/// Ground-truth structural causal model with soft interventions.
#[derive(Debug, Clone)]
pub struct GroundTruthScm {
    graph: Arc<CausalGraph>,
    space: ActionSpace,
    nodes: Vec<NodeSpec>,
}

impl GroundTruthScm {
    pub fn new(graph: CausalGraph, space: ActionSpace, nodes: Vec<NodeSpec>) -> Result<Self> {
        if nodes.len() != graph.node_count() {
            return Err(Error::Graph(format!(
                "{} mechanisms for {} nodes",
                nodes.len(),
                graph.node_count()
            )));
        }
        if space.dim() != graph.action_dim() {
            return Err(Error::Graph(format!(
                "action space has {} slots, graph needs {}",
                space.dim(),
                graph.action_dim()
            )));
        }
        Ok(GroundTruthScm {
            graph: Arc::new(graph),
            space,
            nodes,
        })
    }

    pub fn graph(&self) -> &Arc<CausalGraph> {
        &self.graph
    }

    pub fn action_space(&self) -> &ActionSpace {
        &self.space
    }

    pub fn node_spec(&self, node: NodeId) -> &NodeSpec {
        &self.nodes[node]
    }

    /// Same mechanisms with every exogenous draw suppressed to zero.
    pub fn noiseless(&self) -> Self {
        let zero: Arc<dyn NoiseModel> = Arc::new(ZeroNoise);
        GroundTruthScm {
            graph: Arc::clone(&self.graph),
            space: self.space.clone(),
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeSpec {
                    noise: Arc::clone(&zero),
                    ..n.clone()
                })
                .collect(),
        }
    }

    /// Replaces the mechanism of one node; used to build fault-injection
    /// variants of a benchmark.
    pub fn with_mechanism<F>(mut self, node: NodeId, mechanism: F) -> Self
    where
        F: Fn(&[f64], &[f64], f64) -> f64 + Send + Sync + 'static,
    {
        self.nodes[node].mechanism = Arc::new(mechanism);
        self
    }

    /// Draws one fresh exogenous value per node (topological order) and
    /// evaluates the model. Returns observed values of all nodes.
    pub fn sample<R: RngCore>(&self, action: &[f64], rng: &mut R) -> Result<Vec<f64>> {
        self.space.check(action)?;
        let mut exo = vec![0.0; self.nodes.len()];
        for &node in self.graph.topological_order() {
            exo[node] = self.nodes[node].noise.sample(rng);
        }
        self.evaluate(action, &exo)
    }

    /// Deterministic evaluation with explicit exogenous values.
    pub fn evaluate(&self, action: &[f64], exo: &[f64]) -> Result<Vec<f64>> {
        self.space.check(action)?;
        if exo.len() != self.nodes.len() {
            return Err(Error::Dimension {
                expected: self.nodes.len(),
                got: exo.len(),
            });
        }
        let n = self.nodes.len();
        let mut observed = vec![0.0; n];
        let mut latent = vec![0.0; n];
        let mut inputs = Vec::new();
        for &node in self.graph.topological_order() {
            let spec = &self.nodes[node];
            let source = match spec.view {
                ParentView::Observed => &observed,
                ParentView::Latent => &latent,
            };
            inputs.clear();
            inputs.extend(self.graph.parents(node).iter().map(|&p| source[p]));
            let a = &action[self.graph.action_slots(node)];
            let (state, obs) = match spec.entry {
                NoiseEntry::Structural => {
                    let v = (spec.mechanism)(&inputs, a, exo[node]);
                    (v, v)
                }
                NoiseEntry::Observation => {
                    let s = (spec.mechanism)(&inputs, a, 0.0);
                    (s, s + exo[node])
                }
            };
            for v in [state, obs] {
                if !v.is_finite() {
                    return Err(Error::NonFinite { node, value: v });
                }
            }
            latent[node] = state;
            observed[node] = obs;
        }
        Ok(observed)
    }
}
