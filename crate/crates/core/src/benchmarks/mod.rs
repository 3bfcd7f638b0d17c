//! Ground-truth systems used in experiments, addressable by name.

mod epidemic;
mod noise;
mod synthetic;

pub use epidemic::{epidemic_calibration_scm, epidemic_step, EpidemicConfig, EpidemicScm};
pub use noise::{MixtureNoiseSpec, ScaleMeaning};
pub use synthetic::{
    alpine2_scm, alpine_factor, dropwave_scm, dropwave_x, dropwave_y, multiplicative_scale, multiplicative_scm,
    rosenbrock_scm, rosenbrock_sum, ROSENBROCK_SCALE,
};

use crate::error::{Error, Result};
use crate::rng;
use crate::scm::GroundTruthScm;

pub const NAMES: [&str; 5] = ["dropwave", "rosenbrock", "alpine2", "epidemic", "multiplicative"];

/// How the expected reward `E[y | a]` of an action is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Evaluation {
    /// Every exogenous value set to zero.
    Noiseless,
    /// Average over a fixed set of exogenous draws (common to all actions).
    Averaged { draws: usize },
}

pub const EVALUATION_DRAWS: usize = 64;

/// A named ground truth with its reward evaluator.
#[derive(Debug, Clone)]
pub struct Benchmark {
    pub name: String,
    pub scm: GroundTruthScm,
    pub evaluation: Evaluation,
    /// Identifies everything the reward surface depends on; used to cache
    /// oracle estimates.
    pub key: String,
    eval_exo: Vec<Vec<f64>>,
}

impl Benchmark {
    pub fn new(name: &str, scm: GroundTruthScm, evaluation: Evaluation, key: String) -> Self {
        let d = scm.graph().node_count();
        let eval_exo = match evaluation {
            Evaluation::Noiseless => vec![vec![0.0; d]],
            Evaluation::Averaged { draws } => {
                let mut r = rng::stream(0, &[rng::label("evaluation"), rng::label(&key)]);
                (0..draws.max(1))
                    .map(|_| {
                        let mut exo = vec![0.0; d];
                        for &i in scm.graph().topological_order() {
                            exo[i] = scm.node_spec(i).noise.sample(&mut r);
                        }
                        exo
                    })
                    .collect()
            }
        };
        Benchmark {
            name: name.to_string(),
            scm,
            evaluation,
            key,
            eval_exo,
        }
    }

    /// Expected reward of `action` under the benchmark's evaluator.
    pub fn expected_reward(&self, action: &[f64]) -> Result<f64> {
        let reward = self.scm.graph().reward_node();
        let mut total = 0.0;
        for exo in &self.eval_exo {
            total += self.scm.evaluate(action, exo)?[reward];
        }
        Ok(total / self.eval_exo.len() as f64)
    }
}

/// Builds the named benchmark. `seed` matters only for systems whose reward
/// surface is drawn per seed (the epidemic reference trajectory).
pub fn build(name: &str, noise: &MixtureNoiseSpec, epidemic: &EpidemicConfig, seed: u64) -> Result<Benchmark> {
    noise.validate()?;
    let noise_key = format!(
        "w={},{};mu={},{};c={},{};sigma={};{:?}",
        noise.w1, noise.w2, noise.mu1, noise.mu2, noise.c1, noise.c2, noise.sigma, noise.scale
    );
    let key = format!("{name}|{noise_key}");
    let averaged = Evaluation::Averaged {
        draws: EVALUATION_DRAWS,
    };
    Ok(match name {
        "dropwave" => Benchmark::new(name, dropwave_scm(noise)?, Evaluation::Noiseless, key),
        "rosenbrock" => Benchmark::new(name, rosenbrock_scm(noise)?, Evaluation::Noiseless, key),
        "alpine2" => Benchmark::new(name, alpine2_scm(noise)?, Evaluation::Noiseless, key),
        "multiplicative" => Benchmark::new(name, multiplicative_scm(noise)?, averaged, key),
        "epidemic" => {
            let e = epidemic_calibration_scm(epidemic, noise, seed)?;
            let key = format!("{key}|{epidemic:?}|seed={seed}");
            Benchmark::new(name, e.scm, averaged, key)
        }
        other => {
            return Err(Error::Config(format!(
                "unknown benchmark {other:?}; expected one of {}",
                NAMES.join(", ")
            )))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_names() {
        let noise = MixtureNoiseSpec::with_sigma(0.1);
        for name in NAMES {
            let b = build(name, &noise, &EpidemicConfig::default(), 0).unwrap();
            assert_eq!(b.name, name);
        }
        assert!(build("branin", &noise, &EpidemicConfig::default(), 0).is_err());
    }

    #[test]
    fn dropwave_expected_reward_is_noiseless() {
        let b = build("dropwave", &MixtureNoiseSpec::with_sigma(0.05), &EpidemicConfig::default(), 0).unwrap();
        assert_eq!(b.expected_reward(&[0.5, 0.5]).unwrap(), 1.0);
    }

    #[test]
    fn averaged_reward_is_deterministic() {
        let noise = MixtureNoiseSpec::with_sigma(0.2);
        let b = build("epidemic", &noise, &EpidemicConfig::default(), 1).unwrap();
        let a = EpidemicConfig::default().true_action();
        assert_eq!(b.expected_reward(&a).unwrap(), b.expected_reward(&a).unwrap());
    }
}
