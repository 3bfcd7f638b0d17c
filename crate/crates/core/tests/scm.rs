use std::sync::Arc;

use excbo::rng;
use excbo::scm::{topological_order, ActionSpace, CausalGraph, GaussianNoise, GroundTruthScm, NodeSpec, NoiseModel};
use proptest::prelude::*;

/// Random DAG on `n` nodes: edges only from lower to higher index, so node
/// `n − 1` can be made the unique sink by linking every other sink to it.
fn dag(n: usize, mask: &[bool]) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    let mut k = 0;
    for j in 1..n {
        for i in 0..j {
            if mask[k % mask.len()] {
                edges.push((i, j));
            }
            k += 1;
        }
    }
    for i in 0..n - 1 {
        if !edges.iter().any(|&(a, _)| a == i) {
            edges.push((i, n - 1));
        }
    }
    edges
}

fn mechanism(node: usize) -> impl Fn(&[f64], &[f64], f64) -> f64 + Send + Sync {
    move |z, a, u| {
        let c = 0.3 + 0.1 * node as f64;
        z.iter().map(|v| (c * v).sin()).sum::<f64>() + a.iter().sum::<f64>() * c + u * (1.0 + 0.1 * z.len() as f64)
    }
}

fn build(n: usize, edges: &[(usize, usize)]) -> GroundTruthScm {
    let mut arity = vec![1; n];
    arity[n - 1] = 0;
    let graph = CausalGraph::new(n, edges, arity).unwrap();
    let noise: Arc<dyn NoiseModel> = Arc::new(GaussianNoise { mean: 0.0, std: 0.3 });
    let nodes = (0..n).map(|i| NodeSpec::new(mechanism(i), noise.clone())).collect();
    GroundTruthScm::new(graph, ActionSpace::uniform(n - 1, -1.0, 1.0).unwrap(), nodes).unwrap()
}

/// Independent recursive evaluation by memoized depth-first search.
fn recursive(node: usize, edges: &[(usize, usize)], action: &[f64], exo: &[f64], n: usize, memo: &mut Vec<Option<f64>>) -> f64 {
    if let Some(v) = memo[node] {
        return v;
    }
    let mut parents: Vec<usize> = edges.iter().filter(|e| e.1 == node).map(|e| e.0).collect();
    parents.sort_unstable();
    parents.dedup();
    let z: Vec<f64> = parents.iter().map(|&p| recursive(p, edges, action, exo, n, memo)).collect();
    let a: &[f64] = if node == n - 1 { &[] } else { &action[node..node + 1] };
    let v = mechanism(node)(&z, a, exo[node]);
    memo[node] = Some(v);
    v
}

proptest! {
    #[test]
    fn evaluation_matches_recursive_definition(
        n in 2usize..=6,
        mask in prop::collection::vec(any::<bool>(), 15),
        action in prop::collection::vec(-1.0f64..1.0, 5),
        exo in prop::collection::vec(-2.0f64..2.0, 6),
    ) {
        let edges = dag(n, &mask);
        let scm = build(n, &edges);
        let got = scm.evaluate(&action[..n - 1], &exo[..n]).unwrap();
        let mut memo = vec![None; n];
        for i in 0..n {
            let want = recursive(i, &edges, &action[..n - 1], &exo[..n], n, &mut memo);
            prop_assert!((got[i] - want).abs() <= 1e-12 * want.abs().max(1.0));
        }
    }

    #[test]
    fn sampling_is_pure_given_the_stream(
        n in 2usize..=6,
        mask in prop::collection::vec(any::<bool>(), 15),
        seed in any::<u64>(),
    ) {
        let edges = dag(n, &mask);
        let scm = build(n, &edges);
        let action = vec![0.25; n - 1];
        let a = scm.sample(&action, &mut rng::stream(seed, &[])).unwrap();
        let b = scm.sample(&action, &mut rng::stream(seed, &[])).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn topological_order_respects_edges(n in 2usize..=6, mask in prop::collection::vec(any::<bool>(), 15)) {
        let edges = dag(n, &mask);
        let order = topological_order(n, &edges).unwrap();
        let pos = |v: usize| order.iter().position(|&x| x == v).unwrap();
        for (a, b) in edges {
            prop_assert!(pos(a) < pos(b));
        }
    }
}

#[test]
fn cycles_are_rejected() {
    assert!(topological_order(3, &[(0, 1), (1, 2), (2, 0)]).is_err());
}

#[test]
fn actions_outside_bounds_are_rejected() {
    let scm = build(2, &[(0, 1)]);
    assert!(scm.evaluate(&[1.5], &[0.0, 0.0]).is_err());
}
