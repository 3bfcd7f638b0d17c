use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::config::LoopConfig;
use super::network::{NodeModel, SurrogateNetwork};
use super::optimize::{maximize_acquisition, optimize_acquisition};
use crate::error::{Error, Result};
use crate::exo::{fit_surrogates, NodeKernels, SurrogateSettings};
use crate::gp::{FitPolicy, KernelSpec, Regressor};
use crate::rng::{self, StreamRng};
use crate::scm::{GroundTruthScm, ObservationSet};

pub const EXCBO: &str = "excbo";
pub const UCB: &str = "ucb";
pub const ANM: &str = "anm";

/// One observed round. Initial-design rows carry round 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub round: usize,
    pub action: Vec<f64>,
    pub reward: f64,
    pub best_so_far: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub algorithm: String,
    pub seed: u64,
    pub rows: Vec<TraceRow>,
    pub elapsed: Duration,
}

impl RunTrace {
    pub fn final_best(&self) -> f64 {
        self.rows.last().map_or(f64::NEG_INFINITY, |r| r.best_so_far)
    }
}

/// Shared loop: initial design from the seed's environment stream, then one
/// proposal per round. Observation noise in round `t` comes from a stream
/// that depends only on the seed, so algorithms see common random numbers.
fn run_loop<P>(algorithm: &str, scm: &GroundTruthScm, cfg: &LoopConfig, mut propose: P) -> Result<RunTrace>
where
    P: FnMut(&ObservationSet, usize, &[f64], &mut StreamRng) -> Result<Vec<f64>>,
{
    let start = Instant::now();
    let space = scm.action_space();
    let mut obs = ObservationSet::new(scm.graph().clone());
    let mut rows = Vec::with_capacity(cfg.initial_samples + cfg.rounds);
    let mut best = f64::NEG_INFINITY;
    let mut incumbent: Vec<f64> = space.center();

    let mut record = |obs: &mut ObservationSet, round: usize, action: Vec<f64>, values: Vec<f64>, best: &mut f64, incumbent: &mut Vec<f64>| -> Result<()> {
        obs.append_round(&values, &action)?;
        let reward = values[scm.graph().reward_node()];
        if reward > *best {
            *best = reward;
            *incumbent = action.clone();
        }
        rows.push(TraceRow {
            round,
            action,
            reward,
            best_so_far: *best,
        });
        Ok(())
    };

    let mut design = rng::stream(cfg.seed, &[rng::label("initial-design")]);
    for _ in 0..cfg.initial_samples {
        let a = space.sample_uniform(&mut design);
        let x = scm.sample(&a, &mut design)?;
        record(&mut obs, 0, a, x, &mut best, &mut incumbent)?;
    }

    let mut observe = rng::stream(cfg.seed, &[rng::label("observation")]);
    let mut own = rng::stream(cfg.seed, &[rng::label("algorithm"), rng::label(algorithm)]);
    for t in 1..=cfg.rounds {
        let mut a = propose(&obs, t, &incumbent, &mut own)?;
        space.project(&mut a);
        let x = scm.sample(&a, &mut observe)?;
        record(&mut obs, t, a, x, &mut best, &mut incumbent)?;
    }

    Ok(RunTrace {
        algorithm: algorithm.to_string(),
        seed: cfg.seed,
        rows,
        elapsed: start.elapsed(),
    })
}

fn refit_due(cfg: &LoopConfig, t: usize) -> bool {
    cfg.refit_period <= 1 || (t - 1).is_multiple_of(cfg.refit_period)
}

fn check(cfg: &LoopConfig) -> Result<()> {
    if cfg.initial_samples < 3 {
        return Err(Error::Config(format!(
            "at least 3 initial samples are needed, got {}",
            cfg.initial_samples
        )));
    }
    Ok(())
}

/// EXCBO: per-node encoder/decoder surrogates with learned exogenous
/// densities, propagated through the graph inside a UCB acquisition.
pub fn excbo_run(scm: &GroundTruthScm, cfg: &LoopConfig) -> Result<RunTrace> {
    check(cfg)?;
    let mut kernels: Option<Vec<NodeKernels>> = None;
    run_loop(EXCBO, scm, cfg, |obs, t, incumbent, own| {
        let settings = SurrogateSettings {
            components: cfg.components,
            search: cfg.search.with_seed(rng::derive_seed(cfg.seed, &[rng::label(EXCBO), t as u64])),
        };
        let previous = if refit_due(cfg, t) { None } else { kernels.as_deref() };
        let nodes = fit_surrogates(obs, previous, &settings)?;
        kernels = Some(nodes.iter().map(NodeKernels::of).collect());
        let net = SurrogateNetwork::new(
            scm.graph().clone(),
            nodes.into_iter().map(NodeModel::Exogenous).collect(),
            cfg.beta,
            cfg.mc_paths,
            cfg.mode,
        )?;
        let ctx = net.draw_context(own);
        Ok(optimize_acquisition(&net, scm.action_space(), &ctx, t, &cfg.optimizer, Some(incumbent), own))
    })
}

fn fit_policy(kernel: Option<&KernelSpec>, cfg: &LoopConfig, labels: &[u64]) -> FitPolicy {
    match kernel {
        Some(k) => FitPolicy::Reuse(k.clone()),
        None => FitPolicy::Optimize(cfg.search.with_seed(rng::derive_seed(cfg.seed, labels))),
    }
}

/// Standard GP-UCB on the map from the full action vector to the reward.
pub fn baseline_ucb_run(scm: &GroundTruthScm, cfg: &LoopConfig) -> Result<RunTrace> {
    check(cfg)?;
    let dim = scm.action_space().dim();
    let mut kernel: Option<KernelSpec> = None;
    run_loop(UCB, scm, cfg, |obs, t, incumbent, own| {
        let inputs: Vec<f64> = obs.actions().concat();
        let reuse = if refit_due(cfg, t) { None } else { kernel.as_ref() };
        let policy = fit_policy(reuse, cfg, &[rng::label(UCB), t as u64]);
        let gp = Regressor::fit(&inputs, dim, obs.rewards(), &policy)?;
        kernel = gp.kernel().cloned();
        let beta = cfg.beta.at(t);
        let (a, _) = maximize_acquisition(
            |a| {
                let (m, v) = gp.predict_unchecked(a);
                m + beta * v.sqrt()
            },
            scm.action_space(),
            Some(incumbent),
            &cfg.optimizer,
            own,
        );
        Ok(a)
    })
}

/// Ablation: per-node GPs on `(z, a)` with additive Gaussian exogenous noise,
/// propagated like EXCBO but without encoder or mixture.
pub fn baseline_anm_network_run(scm: &GroundTruthScm, cfg: &LoopConfig) -> Result<RunTrace> {
    check(cfg)?;
    let graph = scm.graph().clone();
    let mut kernels: Vec<Option<KernelSpec>> = vec![None; graph.node_count()];
    run_loop(ANM, scm, cfg, |obs, t, incumbent, own| {
        let refit = refit_due(cfg, t);
        let models = (0..graph.node_count())
            .map(|i| {
                let rec = obs.node(i);
                let reuse = if refit { None } else { kernels[i].as_ref() };
                let policy = fit_policy(reuse, cfg, &[rng::label(ANM), t as u64, i as u64]);
                Regressor::fit(&rec.inputs(), graph.input_width(i), &rec.x, &policy)
            })
            .collect::<Result<Vec<_>>>()?;
        for (k, m) in kernels.iter_mut().zip(&models) {
            *k = m.kernel().cloned();
        }
        let net = SurrogateNetwork::new(
            graph.clone(),
            models.into_iter().map(NodeModel::Additive).collect(),
            cfg.beta,
            cfg.mc_paths,
            cfg.mode,
        )?;
        let ctx = net.draw_context(own);
        Ok(optimize_acquisition(&net, scm.action_space(), &ctx, t, &cfg.optimizer, Some(incumbent), own))
    })
}

/// Runs the named algorithm.
pub fn run_algorithm(name: &str, scm: &GroundTruthScm, cfg: &LoopConfig) -> Result<RunTrace> {
    match name {
        EXCBO => excbo_run(scm, cfg),
        UCB => baseline_ucb_run(scm, cfg),
        ANM => baseline_anm_network_run(scm, cfg),
        other => Err(Error::Config(format!("unknown algorithm {other:?}"))),
    }
}
