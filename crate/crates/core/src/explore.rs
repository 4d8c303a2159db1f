//! Randomised exploration around a base query strategy.
//!
//! An [`ActiveSession`] owns one run's pool, oracle, current hypothesis and
//! random generator. [`ActiveSession::epsilon_active_step`] draws
//! `q ~ U[0, 1)` and consults the base strategy when `q < ε`, otherwise it
//! picks uniformly from the unlabeled pool. Either way the chosen example is
//! labelled, the model retrained, and the hypothesis-change reward returned.
//!
//! Generator order within a step: `q` first, then any draw the selector
//! makes. Committee bootstraps do not touch the generator; their seeds are
//! derived from the run seed and the step index, so the base strategy sees
//! the same randomness with or without the wrapper.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data_pool::{query_oracle, Dataset, Oracle, PoolState};
use crate::error::{Error, Result};
use crate::model::{train, Hypothesis, TrainConfig};
use crate::par::Execution;
use crate::reward::{reward_for_step, RewardPopulation, RewardSample};
use crate::seeds::{derive_seed, stream};
use crate::strategies::{select_density_weighted, select_qbc, select_random, select_uncertainty, StrategyKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub chosen_id: usize,
    pub used_base_strategy: bool,
    /// `None` for steps that run the base strategy directly.
    pub epsilon_used: Option<f64>,
    pub q: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub outcome: StepOutcome,
    pub reward: RewardSample,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionConfig {
    pub strategy: StrategyKind,
    pub train: TrainConfig,
    pub reward_population: RewardPopulation,
    pub seed: u64,
    pub execution: Execution,
}

impl SessionConfig {
    pub fn new(strategy: StrategyKind, seed: u64) -> Self {
        SessionConfig {
            strategy,
            train: TrainConfig::default(),
            reward_population: RewardPopulation::default(),
            seed,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ActiveSession<'a> {
    dataset: &'a Dataset,
    pool: PoolState,
    oracle: Oracle,
    hypothesis: Hypothesis,
    config: SessionConfig,
    rng: ChaCha8Rng,
    steps: usize,
}

impl<'a> ActiveSession<'a> {
    /// Trains the initial hypothesis on the pool's labeled set.
    pub fn new(dataset: &'a Dataset, pool: PoolState, oracle: Oracle, config: SessionConfig) -> Result<Self> {
        config.strategy.validate()?;
        config.train.validate()?;
        let hypothesis = train(dataset, &pool.labeled_ids(), &config.train)?;
        Ok(ActiveSession {
            dataset,
            pool,
            oracle,
            hypothesis,
            config,
            rng: ChaCha8Rng::seed_from_u64(derive_seed(config.seed, stream::RUN, 0)),
            steps: 0,
        })
    }

    pub fn dataset(&self) -> &'a Dataset {
        self.dataset
    }

    pub fn pool(&self) -> &PoolState {
        &self.pool
    }

    pub fn oracle(&self) -> &Oracle {
        &self.oracle
    }

    pub fn hypothesis(&self) -> &Hypothesis {
        &self.hypothesis
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// Asks the base strategy for the next query without committing it.
    pub fn select_with_strategy(&mut self) -> Result<usize> {
        let unlabeled = self.pool.unlabeled_ids();
        let ds = self.dataset;
        match self.config.strategy {
            StrategyKind::Uncertainty => select_uncertainty(&self.hypothesis, ds, &unlabeled),
            StrategyKind::Committee { committee_size } => select_qbc(
                ds,
                &self.pool.labeled_ids(),
                &unlabeled,
                committee_size,
                derive_seed(self.config.seed, stream::QBC_STEP, self.steps as u64),
                &self.config.train,
                self.config.execution,
            ),
            StrategyKind::DensityWeighted { exponent } => {
                select_density_weighted(&self.hypothesis, ds, &unlabeled, exponent)
            }
            StrategyKind::Random => select_random(&unlabeled, &mut self.rng),
        }
    }

    /// Labels `id`, retrains and scores the change in hypothesis.
    fn commit(&mut self, id: usize) -> Result<RewardSample> {
        query_oracle(&mut self.pool, &mut self.oracle, id)?;
        self.steps += 1;
        let next = train(self.dataset, &self.pool.labeled_ids(), &self.config.train)?;
        let population = match self.config.reward_population {
            RewardPopulation::Pool => self.pool.pool_ids(),
            RewardPopulation::Unlabeled => self.pool.unlabeled_ids(),
        };
        let reward = if population.is_empty() {
            RewardSample {
                iteration: self.steps,
                d_value: 1.0,
                r_value: 0.0,
                degenerate: true,
            }
        } else {
            reward_for_step(&self.hypothesis, &next, self.dataset, &population, self.steps)?
        };
        self.hypothesis = next;
        Ok(reward)
    }

    fn ensure_can_query(&self) -> Result<()> {
        if self.pool.unlabeled().is_empty() {
            return Err(Error::EmptyPool);
        }
        if let Some(budget) = self.oracle.budget() {
            if self.oracle.query_count() >= budget {
                return Err(Error::BudgetExhausted { budget });
            }
        }
        Ok(())
    }

    /// One ε-Active step: base strategy when `q < ε`, uniform otherwise.
    pub fn epsilon_active_step(&mut self, epsilon: f64) -> Result<StepReport> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::Validation(format!("epsilon {epsilon} outside [0, 1]")));
        }
        self.ensure_can_query()?;
        let q: f64 = self.rng.random();
        let used_base_strategy = q < epsilon;
        let chosen_id = if used_base_strategy {
            self.select_with_strategy()?
        } else {
            select_random(&self.pool.unlabeled_ids(), &mut self.rng)?
        };
        let reward = self.commit(chosen_id)?;
        Ok(StepReport {
            outcome: StepOutcome {
                chosen_id,
                used_base_strategy,
                epsilon_used: Some(epsilon),
                q: Some(q),
            },
            reward,
        })
    }

    /// One step of the bare base strategy, no exploration draw.
    pub fn base_step(&mut self) -> Result<StepReport> {
        self.ensure_can_query()?;
        let chosen_id = self.select_with_strategy()?;
        let reward = self.commit(chosen_id)?;
        Ok(StepReport {
            outcome: StepOutcome {
                chosen_id,
                used_base_strategy: true,
                epsilon_used: None,
                q: None,
            },
            reward,
        })
    }
}

/// Exploitation probability for a group labelled by its exploration
/// probability: a "0.3-US" run explores with probability 0.3, so ε = 0.7.
pub fn epsilon_for_exploration_rate(rate: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::Config(format!("exploration rate {rate} outside [0, 1]")));
    }
    Ok(1.0 - rate)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OsugiConfig {
    pub lambda: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub p_init: f64,
}

impl Default for OsugiConfig {
    fn default() -> Self {
        OsugiConfig {
            lambda: 2.0,
            p_min: 0.01,
            p_max: 0.99,
            p_init: 0.5,
        }
    }
}

impl OsugiConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!("osugi.lambda must be positive, got {}", self.lambda)));
        }
        if !(0.0 < self.p_min && self.p_min <= self.p_max && self.p_max < 1.0) {
            return Err(Error::Config(format!(
                "osugi bounds need 0 < p_min ≤ p_max < 1, got [{}, {}]",
                self.p_min, self.p_max
            )));
        }
        if !(0.0..=1.0).contains(&self.p_init) {
            return Err(Error::Config(format!("osugi.p_init {} outside [0, 1]", self.p_init)));
        }
        Ok(())
    }
}

/// Adaptive exploration probability for the Osugi-style comparator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveP {
    pub p_explore: f64,
    pub config: OsugiConfig,
}

impl AdaptiveP {
    pub fn new(config: OsugiConfig) -> Result<Self> {
        config.validate()?;
        Ok(AdaptiveP {
            p_explore: config.p_init.clamp(config.p_min, config.p_max),
            config,
        })
    }

    /// Exploitation probability ε for the next ε-Active step.
    pub fn epsilon(&self) -> f64 {
        1.0 - self.p_explore
    }
}

/// `p ← clamp(p · λ^(2r − 1), p_min, p_max)`.
pub fn osugi_adaptive_step(state: AdaptiveP, r: f64) -> AdaptiveP {
    let c = state.config;
    AdaptiveP {
        p_explore: (state.p_explore * c.lambda.powf(2.0 * r - 1.0)).clamp(c.p_min, c.p_max),
        config: c,
    }
}
