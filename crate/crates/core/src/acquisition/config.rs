use serde::{Deserialize, Serialize};

use crate::gp::HyperSearch;

/// Exploration weight `β_t` as a function of the round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BetaSchedule {
    Constant { beta: f64 },
    /// `β₀ √(log(t + 1))`.
    SqrtLog { beta0: f64 },
}

impl Default for BetaSchedule {
    fn default() -> Self {
        BetaSchedule::Constant { beta: 2.0 }
    }
}

impl BetaSchedule {
    pub fn at(&self, t: usize) -> f64 {
        match *self {
            BetaSchedule::Constant { beta } => beta,
            BetaSchedule::SqrtLog { beta0 } => beta0 * ((t as f64 + 1.0).ln()).sqrt(),
        }
    }
}

/// How node values are pushed through the surrogate network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropagationMode {
    /// Posterior means only.
    Mean,
    /// `μ + σ ε` with a frozen standard normal `ε` per path and node.
    #[default]
    Sampled,
}

/// Random search plus Nelder-Mead polishing of the best candidates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcqOptimizer {
    pub budget: usize,
    pub refine: usize,
    pub refine_evals: usize,
}

impl Default for AcqOptimizer {
    fn default() -> Self {
        AcqOptimizer {
            budget: 256,
            refine: 3,
            refine_evals: 200,
        }
    }
}

/// Settings shared by the optimization loops.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopConfig {
    pub rounds: usize,
    pub initial_samples: usize,
    pub mc_paths: usize,
    pub beta: BetaSchedule,
    pub mode: PropagationMode,
    pub optimizer: AcqOptimizer,
    /// Mixture components for the exogenous densities.
    pub components: usize,
    /// Hyperparameters are re-optimized every this many rounds; posteriors
    /// are refit every round.
    pub refit_period: usize,
    pub search: HyperSearch,
    pub seed: u64,
}

impl Default for LoopConfig {
    fn default() -> Self {
        LoopConfig {
            rounds: 60,
            initial_samples: 10,
            mc_paths: 32,
            beta: BetaSchedule::default(),
            mode: PropagationMode::default(),
            optimizer: AcqOptimizer::default(),
            components: 2,
            refit_period: 5,
            search: HyperSearch::default(),
            seed: 0,
        }
    }
}
