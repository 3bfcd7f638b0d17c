//! Derivative-free search used by hyperparameter fitting, acquisition
//! optimization and oracle estimation.

use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub point: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

/// Nelder-Mead simplex minimization inside a box.
///
/// Every trial point is clamped to `bounds` before evaluation, so the
/// objective is never queried outside the box. The search stops after
/// `max_evals` objective evaluations or once the simplex values span less
/// than `ftol`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMead {
    pub max_evals: usize,
    /// Initial simplex edge as a fraction of each bound width.
    pub initial_step: f64,
    pub ftol: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        NelderMead {
            max_evals: 200,
            initial_step: 0.1,
            ftol: 1e-12,
        }
    }
}

impl NelderMead {
    pub fn minimize<F>(&self, start: &[f64], bounds: &[(f64, f64)], mut f: F) -> Minimum
    where
        F: FnMut(&[f64]) -> f64,
    {
        let n = start.len();
        let clamp = |p: &mut Vec<f64>| {
            for (v, &(lo, hi)) in p.iter_mut().zip(bounds) {
                *v = v.clamp(lo, hi);
            }
        };
        let mut evals = 0usize;
        let mut eval = |p: &[f64], evals: &mut usize| {
            *evals += 1;
            let v = f(p);
            if v.is_nan() {
                f64::INFINITY
            } else {
                v
            }
        };

        let mut x0 = start.to_vec();
        clamp(&mut x0);
        let f0 = eval(&x0, &mut evals);
        if n == 0 || self.max_evals <= 1 {
            return Minimum {
                point: x0,
                value: f0,
                evaluations: evals,
            };
        }

        let mut simplex = vec![(x0.clone(), f0)];
        for i in 0..n {
            let (lo, hi) = bounds[i];
            let step = self.initial_step * (hi - lo).max(f64::MIN_POSITIVE);
            let mut v = x0.clone();
            // Step away from whichever bound is closer.
            v[i] = if x0[i] + step <= hi { x0[i] + step } else { x0[i] - step };
            clamp(&mut v);
            let fv = eval(&v, &mut evals);
            simplex.push((v, fv));
        }

        let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
        let mut centroid = vec![0.0; n];
        while evals < self.max_evals {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let best = simplex[0].1;
            let worst = simplex[n].1;
            if (worst - best).abs() <= self.ftol {
                break;
            }

            centroid.iter_mut().for_each(|c| *c = 0.0);
            for (p, _) in &simplex[..n] {
                for (c, v) in centroid.iter_mut().zip(p) {
                    *c += v / n as f64;
                }
            }
            let along = |t: f64, from: &[f64]| -> Vec<f64> {
                let mut p: Vec<f64> = centroid.iter().zip(from).map(|(c, w)| c + t * (c - w)).collect();
                clamp(&mut p);
                p
            };

            let worst_point = simplex[n].0.clone();
            let reflected = along(alpha, &worst_point);
            let fr = eval(&reflected, &mut evals);
            if fr < simplex[n - 1].1 && fr >= best {
                simplex[n] = (reflected, fr);
                continue;
            }
            if fr < best {
                let expanded = along(gamma, &worst_point);
                let fe = eval(&expanded, &mut evals);
                simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
                continue;
            }
            let contracted = along(-rho, &worst_point);
            let fc = eval(&contracted, &mut evals);
            if fc < worst {
                simplex[n] = (contracted, fc);
                continue;
            }
            let best_point = simplex[0].0.clone();
            for (p, fp) in simplex.iter_mut().skip(1) {
                for (v, b) in p.iter_mut().zip(&best_point) {
                    *v = b + sigma * (*v - b);
                }
                *fp = eval(p, &mut evals);
                if evals >= self.max_evals {
                    break;
                }
            }
        }

        let (point, value) = simplex
            .into_iter()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("simplex is non-empty");
        Minimum {
            point,
            value,
            evaluations: evals,
        }
    }
}

/// Latin hypercube design of `count` points in `bounds`: every axis is cut
/// into `count` equal strata and each stratum holds exactly one point.
pub fn latin_hypercube<R: Rng + ?Sized>(count: usize, bounds: &[(f64, f64)], rng: &mut R) -> Vec<Vec<f64>> {
    let mut points = vec![vec![0.0; bounds.len()]; count];
    for (d, &(lo, hi)) in bounds.iter().enumerate() {
        let mut strata: Vec<usize> = (0..count).collect();
        // Fisher-Yates
        for i in (1..count).rev() {
            let j = rng.random_range(0..=i);
            strata.swap(i, j);
        }
        for (p, &s) in points.iter_mut().zip(&strata) {
            let u: f64 = rng.random();
            p[d] = lo + (hi - lo) * (s as f64 + u) / count as f64;
        }
    }
    points
}
