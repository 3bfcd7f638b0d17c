use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scm::NoiseModel;

/// Whether `c·σ` is a component's standard deviation or its variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleMeaning {
    #[default]
    Std,
    Variance,
}

/// Two-component Gaussian mixture `w1 N(mu1, ·) + w2 N(mu2, ·)` whose
/// component spreads are `c1 σ` and `c2 σ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureNoiseSpec {
    pub w1: f64,
    pub w2: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub c1: f64,
    pub c2: f64,
    pub sigma: f64,
    #[serde(default)]
    pub scale: ScaleMeaning,
}

impl MixtureNoiseSpec {
    /// Default shape at level `σ`: equal weights, means `∓σ/2`, spreads `σ`
    /// and `2σ`.
    pub fn with_sigma(sigma: f64) -> Self {
        MixtureNoiseSpec {
            w1: 0.5,
            w2: 0.5,
            mu1: -0.5 * sigma,
            mu2: 0.5 * sigma,
            c1: 1.0,
            c2: 2.0,
            sigma,
            scale: ScaleMeaning::Std,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.w1, self.w2, self.mu1, self.mu2, self.c1, self.c2, self.sigma]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Config("noise parameters must be finite".into()));
        }
        if !(self.w1 > 0.0 && self.w2 > 0.0) || (self.w1 + self.w2 - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "noise weights must be positive and sum to 1, got {} and {}",
                self.w1, self.w2
            )));
        }
        if !(self.c1 > 0.0 && self.c2 > 0.0) {
            return Err(Error::Config("noise scale multipliers must be positive".into()));
        }
        if self.sigma < 0.0 {
            return Err(Error::Config(format!("noise level must be non-negative, got {}", self.sigma)));
        }
        Ok(())
    }

    /// Standard deviations of the two components.
    pub fn component_std(&self) -> (f64, f64) {
        match self.scale {
            ScaleMeaning::Std => (self.c1 * self.sigma, self.c2 * self.sigma),
            ScaleMeaning::Variance => ((self.c1 * self.sigma).sqrt(), (self.c2 * self.sigma).sqrt()),
        }
    }
}

impl NoiseModel for MixtureNoiseSpec {
    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        let pick: f64 = rng.random();
        let e: f64 = StandardNormal.sample(rng);
        let (s1, s2) = self.component_std();
        if pick < self.w1 {
            self.mu1 + s1 * e
        } else {
            self.mu2 + s2 * e
        }
    }

    fn mean(&self) -> f64 {
        self.w1 * self.mu1 + self.w2 * self.mu2
    }

    fn variance(&self) -> f64 {
        let (s1, s2) = self.component_std();
        self.w1 * s1 * s1 + self.w2 * s2 * s2 + self.w1 * self.w2 * (self.mu1 - self.mu2).powi(2)
    }
}
