use excbo::benchmarks::Benchmark;
use excbo::optim::NelderMead;
use excbo::rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Result, RunnerError};

/// Relative slack allowed between an evaluated reward and the oracle.
pub const ORACLE_TOLERANCE: f64 = 1e-9;

fn score(bench: &Benchmark, a: &[f64]) -> f64 {
    match bench.expected_reward(a) {
        Ok(v) if v.is_finite() => v,
        _ => f64::NEG_INFINITY,
    }
}

/// Brute-force estimate of `max_a E[y | a]`: `budget` uniform actions, then
/// `budget` more drawn around the current leaders at shrinking scales, then
/// 100 Nelder-Mead evaluations from each of the best 5.
pub fn estimate_oracle_optimum(bench: &Benchmark, budget: usize, seed: u64) -> f64 {
    let space = bench.scm.action_space();
    let bounds = space.bounds();
    let mut r = rng::stream(seed, &[rng::label("oracle"), rng::label(&bench.key)]);
    let mut candidates: Vec<Vec<f64>> = (0..budget.max(1)).map(|_| space.sample_uniform(&mut r)).collect();
    let mut values: Vec<f64> = candidates.par_iter().map(|a| score(bench, a)).collect();

    let leaders = |values: &[f64], k: usize| {
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&i, &j| values[j].total_cmp(&values[i]).then(i.cmp(&j)));
        order.truncate(k);
        order
    };
    let per_scale = budget.max(4) / 4;
    for scale in [0.1, 0.03, 0.01, 0.003] {
        let top = leaders(&values, 5);
        let local: Vec<Vec<f64>> = (0..per_scale)
            .map(|k| {
                let centre = &candidates[top[k % top.len()]];
                centre
                    .iter()
                    .zip(bounds)
                    .map(|(c, &(lo, hi))| {
                        let e: f64 = StandardNormal.sample(&mut r);
                        (c + scale * (hi - lo) * e).clamp(lo, hi)
                    })
                    .collect()
            })
            .collect();
        values.extend(local.par_iter().map(|a| score(bench, a)).collect::<Vec<_>>());
        candidates.extend(local);
    }

    let nm = NelderMead {
        max_evals: 100,
        initial_step: 0.05,
        ftol: 1e-14,
    };
    let top = leaders(&values, 5);
    let refined: Vec<f64> = top
        .par_iter()
        .map(|&i| -nm.minimize(&candidates[i], bounds, |a| -score(bench, a)).value)
        .collect();
    refined.into_iter().fold(values[top[0]], f64::max)
}

/// Cumulative regret `R_t = Σ_{s ≤ t} (y* − ȳ_s)` over optimization rounds,
/// where `ȳ_s` are expected rewards of the played actions.
pub fn compute_regret(expected: &[f64], y_star: f64) -> Result<Vec<f64>> {
    let tol = ORACLE_TOLERANCE * y_star.abs().max(1.0);
    let mut total = 0.0;
    expected
        .iter()
        .enumerate()
        .map(|(t, &v)| {
            if v > y_star + tol {
                return Err(RunnerError::Oracle {
                    round: t + 1,
                    observed: v,
                    y_star,
                });
            }
            total += y_star - v;
            Ok(total)
        })
        .collect()
}
