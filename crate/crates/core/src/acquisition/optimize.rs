use rand::Rng;
use rayon::prelude::*;

use super::config::AcqOptimizer;
use super::network::{AcquisitionContext, SurrogateNetwork};
use crate::optim::NelderMead;
use crate::scm::ActionSpace;

/// Maximizes `f` over `space`: `budget` uniform candidates plus the
/// incumbent, then Nelder-Mead from the best `refine` of them. Returns the
/// best point seen and its value. NaN counts as −∞.
pub fn maximize_acquisition<F, R>(
    f: F,
    space: &ActionSpace,
    incumbent: Option<&[f64]>,
    opt: &AcqOptimizer,
    rng: &mut R,
) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64 + Sync,
    R: Rng + ?Sized,
{
    let score = |a: &[f64]| {
        let v = f(a);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };
    let mut candidates: Vec<Vec<f64>> = (0..opt.budget).map(|_| space.sample_uniform(rng)).collect();
    if let Some(inc) = incumbent {
        candidates.push(inc.to_vec());
    }
    if candidates.is_empty() {
        candidates.push(space.center());
    }
    let values: Vec<f64> = candidates.par_iter().map(|a| score(a)).collect();

    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]).then(i.cmp(&j)));
    let mut best = (candidates[order[0]].clone(), values[order[0]]);

    let nm = NelderMead {
        max_evals: opt.refine_evals,
        initial_step: 0.05,
        ftol: 1e-10,
    };
    let refined: Vec<(Vec<f64>, f64)> = order
        .iter()
        .take(opt.refine.min(candidates.len()))
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&&i| {
            let m = nm.minimize(&candidates[i], space.bounds(), |a| -score(a));
            (m.point, -m.value)
        })
        .collect();
    for (point, value) in refined {
        if value > best.1 {
            best = (point, value);
        }
    }
    best
}

/// `argmax_a UCB(a)` under a frozen context.
pub fn optimize_acquisition<R: Rng + ?Sized>(
    net: &SurrogateNetwork,
    space: &ActionSpace,
    ctx: &AcquisitionContext,
    t: usize,
    opt: &AcqOptimizer,
    incumbent: Option<&[f64]>,
    rng: &mut R,
) -> Vec<f64> {
    maximize_acquisition(|a| net.ucb_unchecked(a, ctx, t), space, incumbent, opt, rng).0
}
