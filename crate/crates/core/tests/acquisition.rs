use std::sync::Arc;

use excbo::acquisition::*;
use excbo::gp::{FitPolicy, HyperSearch, KernelSpec, Regressor};
use excbo::rng;
use excbo::scm::{ActionSpace, CausalGraph, GaussianNoise, GroundTruthScm, NodeSpec, NoiseModel, ZeroNoise};
use rand::Rng;

fn fitted(dim: usize, n: usize, seed: u64, f: impl Fn(&[f64]) -> f64) -> Regressor {
    let mut r = rng::stream(seed, &[]);
    let x: Vec<f64> = (0..n * dim).map(|_| r.random_range(0.0..1.0)).collect();
    let y: Vec<f64> = x.chunks(dim).map(|row| f(row) + 0.05 * r.random_range(-1.0..1.0)).collect();
    Regressor::fit(&x, dim, &y, &FitPolicy::Optimize(HyperSearch::default())).unwrap()
}

/// `X0(a0) → Y`, additive surrogates on both nodes.
fn chain(mode: PropagationMode, paths: usize, beta: f64) -> (SurrogateNetwork, Regressor, Regressor) {
    let graph = Arc::new(CausalGraph::new(2, &[(0, 1)], vec![1, 0]).unwrap());
    let r0 = fitted(1, 25, 1, |a| 2.0 * a[0] - 0.5);
    let r1 = fitted(1, 25, 2, |z| (3.0 * z[0]).sin());
    let net = SurrogateNetwork::new(
        graph,
        vec![NodeModel::Additive(r0.clone()), NodeModel::Additive(r1.clone())],
        BetaSchedule::Constant { beta },
        paths,
        mode,
    )
    .unwrap();
    (net, r0, r1)
}

#[test]
fn reward_posterior_is_averaged_over_paths() {
    let (net, r0, r1) = chain(PropagationMode::Mean, 12, 2.0);
    let ctx = net.draw_context(&mut rng::stream(0, &[]));
    for a in [0.1, 0.5, 0.95] {
        let (mut m, mut s) = (0.0, 0.0);
        for p in 0..12 {
            let x0 = r0.predict(&[a]).unwrap().0 + r0.noise_variance().sqrt() * ctx.exogenous[2 * p];
            let (pm, pv) = r1.predict(&[x0]).unwrap();
            m += pm / 12.0;
            s += pv.sqrt() / 12.0;
        }
        let (nm, ns) = net.propagate(&[a], &ctx).unwrap();
        assert!((nm - m).abs() < 1e-12 && (ns - s).abs() < 1e-12);
    }
}

#[test]
fn one_mean_path_is_composition_of_posterior_means() {
    let (net, r0, r1) = chain(PropagationMode::Mean, 1, 2.0);
    let ctx = net.draw_context(&mut rng::stream(4, &[]));
    let a = [0.3];
    let x0 = r0.predict(&a).unwrap().0 + r0.noise_variance().sqrt() * ctx.exogenous[0];
    let (m, v) = r1.predict(&[x0]).unwrap();
    let (pm, ps) = net.propagate(&a, &ctx).unwrap();
    assert!((pm - m).abs() < 1e-12);
    assert!((ps - v.sqrt()).abs() < 1e-12);
}

#[test]
fn monte_carlo_estimate_converges() {
    let (net, _, _) = chain(PropagationMode::Sampled, 20_000, 2.0);
    let a = [0.6];
    let e1 = net.propagate(&a, &net.draw_context(&mut rng::stream(10, &[]))).unwrap();
    let e2 = net.propagate(&a, &net.draw_context(&mut rng::stream(11, &[]))).unwrap();
    assert!((e1.0 - e2.0).abs() < 0.02, "{e1:?} vs {e2:?}");
    assert!((e1.1 - e2.1).abs() < 0.02, "{e1:?} vs {e2:?}");
}

#[test]
fn ucb_grows_with_beta() {
    let ctx = chain(PropagationMode::Sampled, 16, 0.0).0.draw_context(&mut rng::stream(5, &[]));
    let mut last = f64::NEG_INFINITY;
    for beta in [0.0, 0.5, 1.0, 2.0, 4.0] {
        let (net, _, _) = chain(PropagationMode::Sampled, 16, beta);
        let v = net.ucb_value(&[0.4], &ctx, 1).unwrap();
        assert!(v >= last);
        last = v;
    }
}

#[test]
fn sqrt_log_schedule_is_nondecreasing() {
    let b = BetaSchedule::SqrtLog { beta0: 1.5 };
    for t in 1..100 {
        assert!(b.at(t + 1) >= b.at(t));
    }
}

#[test]
fn context_shape_mismatch_is_rejected() {
    let (net, _, _) = chain(PropagationMode::Sampled, 4, 2.0);
    let mut ctx = net.draw_context(&mut rng::stream(6, &[]));
    ctx.nodes = 3;
    assert!(net.propagate(&[0.5], &ctx).is_err());
    assert!(net.propagate(&[0.5, 0.5], &net.draw_context(&mut rng::stream(6, &[]))).is_err());
}

#[test]
fn zero_paths_are_a_config_error() {
    let graph = Arc::new(CausalGraph::new(2, &[(0, 1)], vec![1, 0]).unwrap());
    let r = Regressor::fit(&[0.0, 0.5, 1.0], 1, &[0.0, 1.0, 0.0], &FitPolicy::Reuse(KernelSpec::fallback(1))).unwrap();
    let nodes = vec![NodeModel::Additive(r.clone()), NodeModel::Additive(r)];
    let net = SurrogateNetwork::new(graph, nodes, BetaSchedule::default(), 0, PropagationMode::Mean);
    assert!(matches!(net, Err(excbo::Error::Config(_))));
}

/// Concave system `X = a`, `y = 1 − 4 (X − 0.3)² + ε`.
fn concave() -> GroundTruthScm {
    let noise: Arc<dyn NoiseModel> = Arc::new(GaussianNoise { mean: 0.0, std: 0.01 });
    GroundTruthScm::new(
        CausalGraph::new(2, &[(0, 1)], vec![1, 0]).unwrap(),
        ActionSpace::uniform(1, 0.0, 1.0).unwrap(),
        vec![
            NodeSpec::new(|_, a, _| a[0], Arc::new(ZeroNoise)),
            NodeSpec::new(|z, _, u| 1.0 - 4.0 * (z[0] - 0.3).powi(2) + u, noise),
        ],
    )
    .unwrap()
}

fn quick(rounds: usize, seed: u64) -> LoopConfig {
    LoopConfig {
        rounds,
        initial_samples: 5,
        mc_paths: 8,
        optimizer: AcqOptimizer {
            budget: 64,
            refine: 2,
            refine_evals: 60,
        },
        seed,
        ..LoopConfig::default()
    }
}

#[test]
fn ucb_baseline_finds_concave_peak() {
    let trace = baseline_ucb_run(&concave(), &quick(15, 0)).unwrap();
    let best = trace
        .rows
        .iter()
        .map(|r| 1.0 - 4.0 * (r.action[0] - 0.3).powi(2))
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(best > 0.99, "best expected reward {best}");
}

#[test]
fn zero_rounds_return_the_initial_design() {
    for alg in [EXCBO, UCB, ANM] {
        let trace = run_algorithm(alg, &concave(), &quick(0, 3)).unwrap();
        assert_eq!(trace.rows.len(), 5);
        assert!(trace.rows.iter().all(|r| r.round == 0));
    }
}

#[test]
fn runs_are_deterministic_and_share_the_initial_design() {
    let scm = two_node();
    let cfg = quick(4, 9);
    let a = excbo_run(&scm, &cfg).unwrap();
    let b = excbo_run(&scm, &cfg).unwrap();
    assert_eq!(a.rows, b.rows);
    let u = baseline_ucb_run(&scm, &cfg).unwrap();
    assert_eq!(a.rows[..5], u.rows[..5]);
}

fn two_node() -> GroundTruthScm {
    let noise: Arc<dyn NoiseModel> = Arc::new(GaussianNoise { mean: 0.0, std: 0.05 });
    GroundTruthScm::new(
        CausalGraph::new(2, &[(0, 1)], vec![1, 0]).unwrap(),
        ActionSpace::uniform(1, 0.0, 1.0).unwrap(),
        vec![
            NodeSpec::new(|_, a, u| 2.0 * a[0] + u, noise.clone()),
            NodeSpec::new(|z, _, u| -(z[0] - 1.0).powi(2) + u, noise),
        ],
    )
    .unwrap()
}

#[test]
fn trace_rows_are_well_formed() {
    let trace = excbo_run(&two_node(), &quick(6, 2)).unwrap();
    assert_eq!(trace.rows.len(), 11);
    let mut best = f64::NEG_INFINITY;
    for (i, r) in trace.rows.iter().enumerate() {
        assert_eq!(r.round, i.saturating_sub(4));
        best = best.max(r.reward);
        assert_eq!(r.best_so_far, best);
        assert!((0.0..=1.0).contains(&r.action[0]));
    }
    assert_eq!(trace.final_best(), best);
}

#[test]
fn too_few_initial_samples_is_a_config_error() {
    let cfg = LoopConfig {
        initial_samples: 2,
        ..quick(1, 0)
    };
    assert!(matches!(excbo_run(&two_node(), &cfg), Err(excbo::Error::Config(_))));
    assert!(matches!(run_algorithm("random", &two_node(), &quick(1, 0)), Err(excbo::Error::Config(_))));
}

#[test]
fn noiseless_system_still_runs() {
    let scm = GroundTruthScm::new(
        CausalGraph::new(2, &[(0, 1)], vec![1, 0]).unwrap(),
        ActionSpace::uniform(1, 0.0, 1.0).unwrap(),
        vec![
            NodeSpec::new(|_, a, _| a[0], Arc::new(ZeroNoise)),
            NodeSpec::new(|z, _, _| -(z[0] - 0.5).powi(2), Arc::new(ZeroNoise)),
        ],
    )
    .unwrap();
    let trace = excbo_run(&scm, &quick(3, 1)).unwrap();
    assert_eq!(trace.rows.len(), 8);
}

#[test]
fn trace_row_schema() {
    let row = TraceRow {
        round: 3,
        action: vec![0.25, 0.5],
        reward: -1.0,
        best_so_far: 0.5,
    };
    let v = serde_json::to_value(&row).unwrap();
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys.len(), 4);
    for k in ["round", "action", "reward", "best_so_far"] {
        assert!(keys.contains(&k));
    }
    let back: TraceRow = serde_json::from_value(v).unwrap();
    assert_eq!(back, row);
}
