//! Exponentiated-gradient selection over a finite grid of exploration
//! parameters.
//!
//! Each candidate ε is an arm. After every query the pulled arm's weight is
//! boosted by `exp(τ(r + β)/p_d)`, every other arm by `exp(τβ/p_k)`, and the
//! sampling distribution is the normalised weights mixed with a uniform floor:
//! `p_k = (1 − κ)·w_k/Σw + κ/T`.
//!
//! Weights are kept relative to their maximum (the update runs in log space
//! and divides by the largest weight), which leaves `p` unchanged and keeps
//! long runs finite.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgConfig {
    pub candidates: Vec<f64>,
    pub tau: f64,
    pub beta: f64,
    pub kappa: f64,
    pub iterations: usize,
    /// Use `p_k ∝ (1 − κ)(w_k/Σw + κ/T)` renormalised, instead of the
    /// default mixture. For side-by-side comparison only.
    pub literal_smoothing: bool,
}

impl Default for EgConfig {
    fn default() -> Self {
        EgConfig {
            candidates: (0..=10).map(|i| i as f64 / 10.0).collect(),
            tau: 0.1,
            beta: 0.01,
            kappa: 0.1,
            iterations: 2000,
            literal_smoothing: false,
        }
    }
}

impl EgConfig {
    pub fn arms(&self) -> usize {
        self.candidates.len()
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.candidates.len();
        if t < 2 {
            return Err(Error::Config(format!("eg.candidates needs at least 2 values, got {t}")));
        }
        if let Some(c) = self.candidates.iter().find(|c| !(0.0..=1.0).contains(*c)) {
            return Err(Error::Config(format!("eg candidate {c} outside [0, 1]")));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Config(format!("eg.tau must be positive, got {}", self.tau)));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::Config(format!("eg.beta must be non-negative, got {}", self.beta)));
        }
        if !(0.0..1.0).contains(&self.kappa) {
            return Err(Error::Config(format!("eg.kappa must lie in [0, 1), got {}", self.kappa)));
        }
        if self.iterations == 0 {
            return Err(Error::Config("eg.iterations must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgState {
    weights: Vec<f64>,
    probs: Vec<f64>,
    t: usize,
    arm_pulls: Vec<usize>,
}

/// Uniform weights and probabilities over the candidate grid.
pub fn init_eg(config: &EgConfig) -> Result<EgState> {
    config.validate()?;
    let t = config.arms();
    let weights = vec![1.0; t];
    Ok(EgState {
        probs: probabilities_from_weights(&weights, config.kappa, config.literal_smoothing),
        weights,
        t: 0,
        arm_pulls: vec![0; t],
    })
}

/// Sampling distribution for a weight vector. Depends on the weights only
/// through their ratios.
pub fn probabilities_from_weights(weights: &[f64], kappa: f64, literal_smoothing: bool) -> Vec<f64> {
    let t = weights.len() as f64;
    let total: f64 = weights.iter().sum();
    if literal_smoothing {
        let raw: Vec<f64> = weights
            .iter()
            .map(|w| (1.0 - kappa) * (w / total + kappa / t))
            .collect();
        let z: f64 = raw.iter().sum();
        raw.into_iter().map(|q| q / z).collect()
    } else {
        weights
            .iter()
            .map(|w| (1.0 - kappa) * (w / total) + kappa / t)
            .collect()
    }
}

impl EgState {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn arm_pulls(&self) -> &[usize] {
        &self.arm_pulls
    }

    /// Inverse-CDF draw over `p` in candidate order.
    pub fn sample_arm<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        sample_categorical(&self.probs, rng.random::<f64>())
    }

    /// One exponentiated-gradient update after arm `d` earned reward `r`.
    /// All multiplicative factors use the probabilities from before the update.
    pub fn update(&mut self, d: usize, r: f64, config: &EgConfig) -> Result<()> {
        let t = self.weights.len();
        if d >= t {
            return Err(Error::Validation(format!("arm {d} out of range for {t} arms")));
        }
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::Validation(format!("reward {r} outside [0, 1]")));
        }
        let mut logs: Vec<f64> = self
            .weights
            .iter()
            .zip(&self.probs)
            .enumerate()
            .map(|(k, (w, p))| {
                let hit = if k == d { r } else { 0.0 };
                w.ln() + config.tau * (hit + config.beta) / p
            })
            .collect();
        if logs.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericOverflow("eg weight update"));
        }
        let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for v in logs.iter_mut() {
            *v = (*v - max).exp().max(f64::MIN_POSITIVE);
        }
        self.weights = logs;
        self.probs = probabilities_from_weights(&self.weights, config.kappa, config.literal_smoothing);
        if self.probs.iter().any(|p| !p.is_finite()) {
            return Err(Error::NumericOverflow("eg probability update"));
        }
        self.t += 1;
        self.arm_pulls[d] += 1;
        Ok(())
    }
}

/// Free-function form of [`EgState::update`].
pub fn update_eg(state: &EgState, d: usize, r: f64, config: &EgConfig) -> Result<EgState> {
    let mut next = state.clone();
    next.update(d, r, config)?;
    Ok(next)
}

pub(crate) fn sample_categorical(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (k, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    probs.len() - 1
}
