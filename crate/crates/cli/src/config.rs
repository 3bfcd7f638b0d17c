use std::collections::BTreeSet;
use std::path::PathBuf;

use excbo::acquisition::{AcqOptimizer, BetaSchedule, LoopConfig, PropagationMode, ANM, EXCBO, UCB};
use excbo::benchmarks::{EpidemicConfig, MixtureNoiseSpec, ScaleMeaning, NAMES};
use excbo::rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, RunnerError};

pub const ALGORITHMS: [&str; 3] = [EXCBO, UCB, ANM];
pub const MIN_ORACLE_BUDGET: usize = 10_000;

/// Noise level plus optional overrides of the default mixture shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    pub sigma: f64,
    pub w1: Option<f64>,
    pub w2: Option<f64>,
    pub mu1: Option<f64>,
    pub mu2: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub scale: ScaleMeaning,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            sigma: 0.05,
            w1: None,
            w2: None,
            mu1: None,
            mu2: None,
            c1: None,
            c2: None,
            scale: ScaleMeaning::Std,
        }
    }
}

impl NoiseConfig {
    pub fn spec(&self) -> MixtureNoiseSpec {
        let d = MixtureNoiseSpec::with_sigma(self.sigma);
        MixtureNoiseSpec {
            w1: self.w1.unwrap_or(d.w1),
            w2: self.w2.unwrap_or(d.w2),
            mu1: self.mu1.unwrap_or(d.mu1),
            mu2: self.mu2.unwrap_or(d.mu2),
            c1: self.c1.unwrap_or(d.c1),
            c2: self.c2.unwrap_or(d.c2),
            sigma: self.sigma,
            scale: self.scale,
        }
    }
}

fn default_algorithms() -> Vec<String> {
    vec![EXCBO.to_string(), UCB.to_string()]
}

fn d_rounds() -> usize {
    60
}
fn d_initial() -> usize {
    10
}
fn d_paths() -> usize {
    32
}
fn d_components() -> usize {
    2
}
fn d_budget() -> usize {
    256
}
fn d_refit() -> usize {
    5
}
fn d_oracle() -> usize {
    MIN_ORACLE_BUDGET
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub benchmark: String,
    pub seeds: Vec<u64>,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<String>,
    #[serde(default = "d_rounds")]
    pub rounds: usize,
    #[serde(default = "d_initial")]
    pub initial_samples: usize,
    /// Permits `initial_samples` outside `[5, 20]` (at least 3).
    #[serde(default)]
    pub allow_any_initial_samples: bool,
    #[serde(default = "d_paths")]
    pub mc_paths: usize,
    #[serde(default = "d_components")]
    pub components: usize,
    #[serde(default = "d_budget")]
    pub acquisition_budget: usize,
    #[serde(default)]
    pub propagation: PropagationMode,
    #[serde(default = "d_refit")]
    pub refit_period: usize,
    #[serde(default)]
    pub beta: BetaSchedule,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "d_oracle")]
    pub oracle_budget: usize,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub epidemic: EpidemicConfig,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

/// Parses a TOML document, applies `key=value` overrides (dotted keys reach
/// into tables) and validates the result.
pub fn parse_config(document: &str, overrides: &[String]) -> Result<ExperimentConfig> {
    let mut table: toml::Table = document.parse().map_err(|e: toml::de::Error| RunnerError::Parse(e.to_string()))?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let cfg: ExperimentConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| RunnerError::Parse(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

fn apply_override(table: &mut toml::Table, item: &str) -> Result<()> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| RunnerError::Parse(format!("override {item:?} is not key=value")))?;
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let parts: Vec<&str> = key.trim().split('.').collect();
    let mut cursor = table;
    for p in &parts[..parts.len() - 1] {
        cursor = cursor
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| RunnerError::Parse(format!("override key {key:?}: {p:?} is not a table")))?;
    }
    cursor.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(RunnerError::Validation(m));
        if !NAMES.contains(&self.benchmark.as_str()) {
            return bad(format!(
                "unknown benchmark {:?}; expected one of {}",
                self.benchmark,
                NAMES.join(", ")
            ));
        }
        if self.seeds.is_empty() {
            return bad("seeds must not be empty".into());
        }
        if self.seeds.iter().collect::<BTreeSet<_>>().len() != self.seeds.len() {
            return bad("seeds must be distinct".into());
        }
        if self.algorithms.is_empty() {
            return bad("algorithms must not be empty".into());
        }
        for a in &self.algorithms {
            if !ALGORITHMS.contains(&a.as_str()) {
                return bad(format!("unknown algorithm {a:?}; expected one of {}", ALGORITHMS.join(", ")));
            }
        }
        if self.algorithms.iter().collect::<BTreeSet<_>>().len() != self.algorithms.len() {
            return bad("algorithms must be distinct".into());
        }
        if self.allow_any_initial_samples {
            if self.initial_samples < 3 {
                return bad(format!("initial_samples must be at least 3, got {}", self.initial_samples));
            }
        } else if !(5..=20).contains(&self.initial_samples) {
            return bad(format!(
                "initial_samples = {} is outside the range [5, 20]; set allow_any_initial_samples to override",
                self.initial_samples
            ));
        }
        for (name, v) in [
            ("mc_paths", self.mc_paths),
            ("components", self.components),
            ("acquisition_budget", self.acquisition_budget),
            ("refit_period", self.refit_period),
        ] {
            if v == 0 {
                return bad(format!("{name} must be positive"));
            }
        }
        if self.oracle_budget < MIN_ORACLE_BUDGET {
            return bad(format!(
                "oracle_budget must be at least {MIN_ORACLE_BUDGET}, got {}",
                self.oracle_budget
            ));
        }
        let beta_ok = match self.beta {
            BetaSchedule::Constant { beta } => beta.is_finite() && beta >= 0.0,
            BetaSchedule::SqrtLog { beta0 } => beta0.is_finite() && beta0 >= 0.0,
        };
        if !beta_ok {
            return bad("beta must be finite and non-negative".into());
        }
        self.noise.spec().validate().map_err(|e| RunnerError::Validation(e.to_string()))?;
        if self.benchmark == "epidemic" {
            self.epidemic.validate().map_err(|e| RunnerError::Validation(e.to_string()))?;
        }
        Ok(())
    }

    /// Loop settings for one seed. The per-run seed mixes the master seed
    /// and the seed id; algorithms add their own label inside the loop.
    pub fn loop_config(&self, seed: u64) -> LoopConfig {
        LoopConfig {
            rounds: self.rounds,
            initial_samples: self.initial_samples,
            mc_paths: self.mc_paths,
            beta: self.beta,
            mode: self.propagation,
            optimizer: AcqOptimizer {
                budget: self.acquisition_budget,
                ..AcqOptimizer::default()
            },
            components: self.components,
            refit_period: self.refit_period,
            seed: rng::derive_seed(self.master_seed, &[seed]),
            ..LoopConfig::default()
        }
    }

    /// SHA-256 of the canonical JSON rendering.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config("benchmark = \"dropwave\"\nseeds = [0]\n", &[]).unwrap();
        assert_eq!(c.rounds, 60);
        assert_eq!(c.initial_samples, 10);
        assert_eq!(c.mc_paths, 32);
        assert_eq!(c.components, 2);
        assert_eq!(c.beta, BetaSchedule::Constant { beta: 2.0 });
    }

    #[test]
    fn unknown_key_is_named() {
        let e = parse_config("benchmark = \"dropwave\"\nseeds = [0]\nfoo = 1\n", &[]).unwrap_err();
        assert!(matches!(e, RunnerError::Parse(ref m) if m.contains("foo")), "{e}");
    }

    #[test]
    fn small_initial_design_needs_override() {
        let doc = "benchmark = \"dropwave\"\nseeds = [0]\ninitial_samples = 3\n";
        let e = parse_config(doc, &[]).unwrap_err();
        assert!(matches!(e, RunnerError::Validation(ref m) if m.contains("[5, 20]")), "{e}");
        assert!(parse_config(doc, &["allow_any_initial_samples=true".into()]).is_ok());
    }

    #[test]
    fn overrides_reach_nested_tables() {
        let c = parse_config(
            "benchmark = \"dropwave\"\nseeds = [0]\n",
            &["noise.sigma=0.2".into(), "rounds=5".into(), "benchmark=epidemic".into()],
        )
        .unwrap();
        assert_eq!(c.noise.sigma, 0.2);
        assert_eq!(c.rounds, 5);
        assert_eq!(c.benchmark, "epidemic");
    }

    #[test]
    fn empty_algorithm_set_is_rejected() {
        let e = parse_config("benchmark = \"dropwave\"\nseeds = [0]\nalgorithms = []\n", &[]).unwrap_err();
        assert!(matches!(e, RunnerError::Validation(_)));
    }
}
