use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::noise::MixtureNoiseSpec;
use crate::error::{Error, Result};
use crate::rng;
use crate::scm::{ActionSpace, CausalGraph, GroundTruthScm, NodeSpec, NoiseEntry, NoiseModel, ParentView, ZeroNoise};

/// One period of the multi-group infection update
/// `I'_i = I_i (1 − γ) + (1 − I_i) Σ_j β_ij I_j`, clamped to `[0, 1]`.
/// `betas` is row-major `G × G`. Returns the next state and whether any
/// entry was clamped.
pub fn epidemic_step(infected: &[f64], betas: &[f64], gamma: f64) -> (Vec<f64>, bool) {
    let g = infected.len();
    let mut clamped = false;
    let next = (0..g)
        .map(|i| {
            let pressure: f64 = (0..g).map(|j| betas[i * g + j] * infected[j]).sum();
            let v = infected[i] * (1.0 - gamma) + (1.0 - infected[i]) * pressure;
            let c = v.clamp(0.0, 1.0);
            clamped |= c != v;
            c
        })
        .collect();
    (next, clamped)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EpidemicConfig {
    pub groups: usize,
    pub horizon: usize,
    pub gamma: f64,
    /// `horizon` matrices of `groups × groups` contact rates, row-major.
    pub true_betas: Vec<Vec<f64>>,
    pub initial_infectious: Vec<f64>,
    pub beta_bounds: (f64, f64),
}

impl Default for EpidemicConfig {
    fn default() -> Self {
        EpidemicConfig {
            groups: 2,
            horizon: 3,
            gamma: 0.3,
            true_betas: vec![
                vec![0.30, 0.10, 0.15, 0.25],
                vec![0.25, 0.12, 0.10, 0.30],
                vec![0.20, 0.15, 0.12, 0.35],
            ],
            initial_infectious: vec![0.1, 0.2],
            beta_bounds: (0.0, 0.5),
        }
    }
}

impl EpidemicConfig {
    pub fn validate(&self) -> Result<()> {
        let g = self.groups;
        if g == 0 || self.horizon == 0 {
            return Err(Error::Config("epidemic needs at least one group and one period".into()));
        }
        if self.initial_infectious.len() != g {
            return Err(Error::Config(format!(
                "initial_infectious has {} entries for {g} groups",
                self.initial_infectious.len()
            )));
        }
        if self.true_betas.len() != self.horizon || self.true_betas.iter().any(|b| b.len() != g * g) {
            return Err(Error::Config(format!(
                "true_betas must hold {} matrices of {g}×{g} entries",
                self.horizon
            )));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::Config(format!("gamma must lie in (0, 1), got {}", self.gamma)));
        }
        if self.initial_infectious.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Config("initial_infectious entries must lie in [0, 1]".into()));
        }
        let (lo, hi) = self.beta_bounds;
        if !(lo < hi) {
            return Err(Error::Config(format!("empty beta bounds [{lo}, {hi}]")));
        }
        Ok(())
    }

    /// Latent trajectory for a flat action vector laid out by node:
    /// for period `t` and group `i`, the row `β_{i,·,t}`.
    pub fn trajectory(&self, action: &[f64]) -> (Vec<f64>, usize) {
        let g = self.groups;
        let mut state = self.initial_infectious.clone();
        let mut out = Vec::with_capacity(g * self.horizon);
        let mut clamps = 0;
        for t in 0..self.horizon {
            let (next, c) = epidemic_step(&state, &action[t * g * g..(t + 1) * g * g], self.gamma);
            clamps += usize::from(c);
            out.extend_from_slice(&next);
            state = next;
        }
        (out, clamps)
    }

    pub fn true_action(&self) -> Vec<f64> {
        self.true_betas.concat()
    }
}

/// Calibration SCM plus its frozen reference trajectory.
#[derive(Debug, Clone)]
pub struct EpidemicScm {
    pub scm: GroundTruthScm,
    /// Observed reference: latent trajectory under the true rates plus one
    /// frozen noise draw per node.
    pub reference: Vec<f64>,
    clamps: Arc<AtomicU64>,
}

impl EpidemicScm {
    /// Number of clamped updates seen by the simulator so far.
    pub fn clamp_count(&self) -> u64 {
        self.clamps.load(Ordering::Relaxed)
    }
}

/// Nodes `I_{i,t}` (index `(t−1)·G + i`) followed by the reward. Each
/// trajectory node reads the latent states of the previous period and is
/// observed with additive noise; the reward is the negative mean squared
/// error between the observed trajectory and the reference.
pub fn epidemic_calibration_scm(cfg: &EpidemicConfig, noise: &MixtureNoiseSpec, seed: u64) -> Result<EpidemicScm> {
    cfg.validate()?;
    let g = cfg.groups;
    let h = cfg.horizon;
    let n_traj = g * h;
    let reward = n_traj;

    let mut edges = Vec::new();
    for t in 1..h {
        for i in 0..g {
            for j in 0..g {
                edges.push(((t - 1) * g + j, t * g + i));
            }
        }
    }
    for k in 0..n_traj {
        edges.push((k, reward));
    }
    let mut arity = vec![g; n_traj];
    arity.push(0);
    let graph = CausalGraph::new(n_traj + 1, &edges, arity)?;

    let (latent, _) = cfg.trajectory(&cfg.true_action());
    let mut r = rng::stream(seed, &[rng::label("epidemic-reference")]);
    let reference: Vec<f64> = latent.iter().map(|v| v + noise.sample(&mut r)).collect();

    let clamps = Arc::new(AtomicU64::new(0));
    let u: Arc<dyn NoiseModel> = Arc::new(*noise);
    let mut nodes = Vec::with_capacity(n_traj + 1);
    for t in 0..h {
        for i in 0..g {
            let gamma = cfg.gamma;
            let clamps = Arc::clone(&clamps);
            let start = if t == 0 { Some(cfg.initial_infectious.clone()) } else { None };
            let mechanism = move |z: &[f64], a: &[f64], _u: f64| {
                let prev: &[f64] = start.as_deref().unwrap_or(z);
                let pressure: f64 = a.iter().zip(prev).map(|(b, v)| b * v).sum();
                let v = prev[i] * (1.0 - gamma) + (1.0 - prev[i]) * pressure;
                let c = v.clamp(0.0, 1.0);
                if c != v {
                    clamps.fetch_add(1, Ordering::Relaxed);
                }
                c
            };
            nodes.push(
                NodeSpec::new(mechanism, u.clone())
                    .with_entry(NoiseEntry::Observation)
                    .with_view(ParentView::Latent),
            );
        }
    }
    let target = reference.clone();
    nodes.push(NodeSpec::new(
        move |z, _, _| -z.iter().zip(&target).map(|(x, r)| (x - r).powi(2)).sum::<f64>() / z.len() as f64,
        Arc::new(ZeroNoise),
    ));

    let (lo, hi) = cfg.beta_bounds;
    let scm = GroundTruthScm::new(graph, ActionSpace::uniform(g * g * h, lo, hi)?, nodes)?;
    Ok(EpidemicScm { scm, reference, clamps })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_example() {
        let (next, clamped) = epidemic_step(&[0.1, 0.2], &[0.2, 0.1, 0.1, 0.2], 0.1);
        assert!(!clamped);
        assert!((next[0] - 0.126).abs() < 1e-15);
        assert!((next[1] - 0.22).abs() < 1e-15);
    }

    #[test]
    fn disease_free_fixed_point() {
        assert_eq!(epidemic_step(&[0.0, 0.0], &[0.3, 0.2, 0.1, 0.4], 0.3).0, vec![0.0, 0.0]);
    }

    #[test]
    fn single_group_recovery() {
        let (next, _) = epidemic_step(&[0.1], &[0.0], 0.5);
        assert!((next[0] - 0.05).abs() < 1e-15);
    }

    #[test]
    fn clamping_is_flagged() {
        let (next, clamped) = epidemic_step(&[0.9], &[5.0], 0.1);
        assert!(clamped);
        assert_eq!(next, vec![1.0]);
    }

    #[test]
    fn graph_shape() {
        let e = epidemic_calibration_scm(&EpidemicConfig::default(), &MixtureNoiseSpec::with_sigma(0.0), 0).unwrap();
        assert_eq!(e.scm.graph().node_count(), 7);
        assert_eq!(e.scm.action_space().dim(), 12);
    }

    #[test]
    fn true_rates_match_reference_without_noise() {
        let cfg = EpidemicConfig::default();
        let e = epidemic_calibration_scm(&cfg, &MixtureNoiseSpec::with_sigma(0.0), 3).unwrap();
        let v = e.scm.evaluate(&cfg.true_action(), &[0.0; 7]).unwrap();
        assert_eq!(v[6], 0.0);
    }

    #[test]
    fn dimension_mismatch_is_a_config_error() {
        let cfg = EpidemicConfig {
            initial_infectious: vec![0.1],
            ..EpidemicConfig::default()
        };
        let r = epidemic_calibration_scm(&cfg, &MixtureNoiseSpec::with_sigma(0.1), 0);
        assert!(matches!(r, Err(Error::Config(_))));
    }
}
