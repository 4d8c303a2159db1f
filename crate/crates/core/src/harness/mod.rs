//! Experiment protocol: budgeted runs of one comparison group, regret
//! checkpoints, replicate aggregation and result files.

mod config;
mod emit;
mod report;

use std::fmt;
use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub use config::{
    apply_override, curve_from_label, parse_kv, resolved_lines, resolved_text, synthetic_from_map, ConfigMap, SuiteConfig,
    KNOWN_KEYS,
};
pub use emit::{emit_results, format_sig12, read_curve_csv, round_sig12};
pub use report::{factor, mean_sd, run_comparison, Comparison, ComparisonReport, CurvePoint, CurveSummary};

use crate::data_pool::{load_dataset, make_synthetic, split_pool, Dataset, SplitConfig, SyntheticSpec};
use crate::eg_meta::{init_eg, EgConfig, EgState};
use crate::error::{Error, Result};
use crate::explore::{osugi_adaptive_step, ActiveSession, AdaptiveP, OsugiConfig, SessionConfig, StepReport};
use crate::model::{evaluate, train, TrainConfig};
use crate::par::{self, Execution};
use crate::reward::RewardPopulation;
use crate::seeds::{derive_seed, stream};
use crate::strategies::StrategyKind;

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    Csv(PathBuf),
    Synthetic(SyntheticSpec),
}

impl DatasetSource {
    pub fn load(&self) -> Result<Dataset> {
        match self {
            DatasetSource::Csv(path) => load_dataset(path),
            DatasetSource::Synthetic(spec) => make_synthetic(spec),
        }
    }
}

/// Comparison group.
#[derive(Debug, Clone, PartialEq)]
pub enum Group {
    /// The base strategy alone (with `Random` this is the baseline).
    Pure,
    /// ε-Active with a constant exploitation probability ε.
    FixedEpsilon { epsilon: f64 },
    /// ε-Active with an exploration probability adapted from rewards.
    Osugi(OsugiConfig),
    /// ε-Active with ε chosen per step by exponentiated gradient.
    Eg(EgConfig),
}

impl Group {
    pub fn name(&self) -> &'static str {
        match self {
            Group::Pure => "pure",
            Group::FixedEpsilon { .. } => "fixed_eps",
            Group::Osugi(_) => "osugi",
            Group::Eg(_) => "eg",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Metric {
    /// Test error minus the full-label skyline's test error.
    #[default]
    Regret,
    /// Raw test error.
    Error,
}

/// A group applied to a base strategy: one curve of a comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSpec {
    pub group: Group,
    pub strategy: StrategyKind,
}

impl CurveSpec {
    pub fn is_baseline(&self) -> bool {
        self.group == Group::Pure && self.strategy == StrategyKind::Random
    }

    /// Filesystem-safe lowercase form of the label.
    pub fn slug(&self) -> String {
        let mut s = String::new();
        for ch in self.to_string().to_ascii_lowercase().chars() {
            if ch.is_ascii_alphanumeric() {
                s.push(ch);
            } else if !s.ends_with('_') {
                s.push('_');
            }
        }
        s.trim_matches('_').to_string()
    }
}

impl fmt::Display for CurveSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.group {
            Group::Pure => write!(f, "{}", self.strategy),
            Group::FixedEpsilon { epsilon } => {
                write!(f, "{}-{}", format_sig12(1.0 - epsilon), self.strategy)
            }
            Group::Osugi(_) => write!(f, "P-{}", self.strategy),
            Group::Eg(_) => write!(f, "EG-Active({})", self.strategy),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    pub curve: CurveSpec,
    pub budget: usize,
    pub checkpoint_every: usize,
    pub replicates: usize,
    pub base_seed: u64,
    pub init_labeled_per_class: usize,
    pub test_fraction: f64,
    pub train: TrainConfig,
    pub reward_population: RewardPopulation,
    pub metric: Metric,
    pub execution: Execution,
}

impl ExperimentConfig {
    pub fn new(dataset: DatasetSource, curve: CurveSpec) -> Self {
        ExperimentConfig {
            dataset,
            curve,
            budget: 2000,
            checkpoint_every: 100,
            replicates: 1,
            base_seed: 0,
            init_labeled_per_class: 1,
            test_fraction: 0.2,
            train: TrainConfig::default(),
            reward_population: RewardPopulation::default(),
            metric: Metric::default(),
            execution: Execution::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.checkpoint_every == 0 {
            return Err(Error::Config("checkpoint_every must be positive".into()));
        }
        if self.budget < self.checkpoint_every {
            return Err(Error::Config(format!(
                "budget {} is smaller than checkpoint_every {}",
                self.budget, self.checkpoint_every
            )));
        }
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be at least 1".into()));
        }
        self.train.validate()?;
        self.curve.strategy.validate()?;
        match &self.curve.group {
            Group::Pure => {}
            _ if self.curve.strategy == StrategyKind::Random => {
                return Err(Error::Config(format!(
                    "group {} needs a non-random base strategy",
                    self.curve.group.name()
                )))
            }
            Group::FixedEpsilon { epsilon } => {
                if !(0.0..=1.0).contains(epsilon) {
                    return Err(Error::Config(format!("explore.epsilon {epsilon} outside [0, 1]")));
                }
            }
            Group::Osugi(c) => c.validate()?,
            Group::Eg(c) => {
                c.validate()?;
                if c.iterations != self.budget {
                    return Err(Error::Config(format!(
                        "eg.iterations {} differs from budget {}",
                        c.iterations, self.budget
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn split_config(&self, replicate: usize) -> SplitConfig {
        SplitConfig {
            seed: self.replicate_seed(replicate),
            init_labeled_per_class: self.init_labeled_per_class,
            test_fraction: self.test_fraction,
        }
    }

    pub fn replicate_seed(&self, replicate: usize) -> u64 {
        self.base_seed.wrapping_add(replicate as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Checkpoint {
    pub iteration: usize,
    pub test_error: f64,
    pub regret: f64,
    pub mean_reward_since_last: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_snapshot: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretTrace {
    pub label: String,
    pub replicate: usize,
    pub seed: u64,
    pub skyline_error: f64,
    pub checkpoints: Vec<Checkpoint>,
    /// Queries actually made.
    pub steps: usize,
    /// Set when the pool ran dry before the budget.
    pub truncated: bool,
}

impl RegretTrace {
    /// Mean regret over checkpoints.
    pub fn average_regret(&self) -> f64 {
        if self.checkpoints.is_empty() {
            return 0.0;
        }
        self.checkpoints.iter().map(|c| c.regret).sum::<f64>() / self.checkpoints.len() as f64
    }

    pub fn final_regret(&self) -> Option<f64> {
        self.checkpoints.last().map(|c| c.regret)
    }
}

/// One line of a run's JSON-lines event log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepEvent {
    pub iteration: usize,
    pub chosen_id: usize,
    pub d: f64,
    pub r: f64,
    pub degenerate: bool,
    pub epsilon: Option<f64>,
    pub arm: Option<usize>,
    pub explored: Option<bool>,
    pub q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateRun {
    pub trace: RegretTrace,
    pub events: Vec<StepEvent>,
    /// Final meta-optimizer state for EG runs.
    pub eg_state: Option<EgState>,
}

enum Policy {
    Pure,
    Fixed(f64),
    Osugi(AdaptiveP),
    Eg {
        state: EgState,
        config: EgConfig,
        arm_rng: Box<ChaCha8Rng>,
    },
}

impl Policy {
    fn new(group: &Group, seed: u64) -> Result<Self> {
        Ok(match group {
            Group::Pure => Policy::Pure,
            Group::FixedEpsilon { epsilon } => Policy::Fixed(*epsilon),
            Group::Osugi(c) => Policy::Osugi(AdaptiveP::new(*c)?),
            Group::Eg(c) => Policy::Eg {
                state: init_eg(c)?,
                config: c.clone(),
                arm_rng: Box::new(ChaCha8Rng::seed_from_u64(derive_seed(seed, stream::EG_ARMS, 0))),
            },
        })
    }

    /// Runs one step; returns the report and the EG arm pulled, if any.
    fn step(&mut self, session: &mut ActiveSession<'_>) -> Result<(StepReport, Option<usize>)> {
        match self {
            Policy::Pure => Ok((session.base_step()?, None)),
            Policy::Fixed(eps) => Ok((session.epsilon_active_step(*eps)?, None)),
            Policy::Osugi(p) => {
                let rep = session.epsilon_active_step(p.epsilon())?;
                if !rep.outcome.used_base_strategy {
                    *p = osugi_adaptive_step(*p, rep.reward.r_value);
                }
                Ok((rep, None))
            }
            Policy::Eg { state, config, arm_rng } => {
                let d = state.sample_arm(arm_rng.as_mut());
                let rep = session.epsilon_active_step(config.candidates[d])?;
                state.update(d, rep.reward.r_value, config)?;
                Ok((rep, Some(d)))
            }
        }
    }

    fn snapshot(&self) -> Option<Vec<f64>> {
        match self {
            Policy::Eg { state, .. } => Some(state.probs().iter().map(|&p| round_sig12(p)).collect()),
            _ => None,
        }
    }
}

/// Drives one session through `budget` queries under `group`, evaluating on
/// `test_ids` every `checkpoint_every` queries.
#[allow(clippy::too_many_arguments)]
pub fn run_group(
    session: &mut ActiveSession<'_>,
    group: &Group,
    budget: usize,
    checkpoint_every: usize,
    test_ids: &[usize],
    skyline_error: f64,
    metric: Metric,
    label: &str,
    replicate: usize,
) -> Result<ReplicateRun> {
    let seed = session.config().seed;
    let mut policy = Policy::new(group, seed)?;
    let mut events = Vec::with_capacity(budget);
    let mut checkpoints = Vec::new();
    let mut reward_sum = 0.0;
    let mut since_last = 0usize;
    let mut truncated = false;
    let dataset = session.dataset();

    let checkpoint = |session: &ActiveSession<'_>, iteration, reward_sum: f64, count: usize, p| -> Result<Checkpoint> {
        let test_error = evaluate(session.hypothesis(), dataset, test_ids)?;
        let regret = match metric {
            Metric::Regret => test_error - skyline_error,
            Metric::Error => test_error,
        };
        Ok(Checkpoint {
            iteration,
            test_error,
            regret,
            mean_reward_since_last: if count == 0 { 0.0 } else { reward_sum / count as f64 },
            p_snapshot: p,
        })
    };

    for iteration in 1..=budget {
        let (rep, arm) = match policy.step(session) {
            Ok(x) => x,
            Err(Error::EmptyPool) => {
                truncated = true;
                break;
            }
            Err(e) => return Err(e),
        };
        reward_sum += rep.reward.r_value;
        since_last += 1;
        let at_checkpoint = iteration % checkpoint_every == 0;
        let p = if at_checkpoint { policy.snapshot() } else { None };
        events.push(StepEvent {
            iteration,
            chosen_id: rep.outcome.chosen_id,
            d: round_sig12(rep.reward.d_value),
            r: round_sig12(rep.reward.r_value),
            degenerate: rep.reward.degenerate,
            epsilon: rep.outcome.epsilon_used.map(round_sig12),
            arm,
            explored: rep.outcome.q.map(|_| !rep.outcome.used_base_strategy),
            q: rep.outcome.q.map(round_sig12),
            p: p.clone(),
        });
        if at_checkpoint {
            checkpoints.push(checkpoint(session, iteration, reward_sum, since_last, p)?);
            reward_sum = 0.0;
            since_last = 0;
        }
    }
    let steps = session.steps();
    if steps > 0 && !steps.is_multiple_of(checkpoint_every) {
        let p = policy.snapshot();
        checkpoints.push(checkpoint(session, steps, reward_sum, since_last, p)?);
    }
    let eg_state = match policy {
        Policy::Eg { state, .. } => Some(state),
        _ => None,
    };
    Ok(ReplicateRun {
        trace: RegretTrace {
            label: label.to_string(),
            replicate,
            seed,
            skyline_error,
            checkpoints,
            steps,
            truncated,
        },
        events,
        eg_state,
    })
}

/// Runs replicate `replicate` of `config` on an already loaded dataset.
pub fn run_replicate(config: &ExperimentConfig, dataset: &Dataset, replicate: usize) -> Result<ReplicateRun> {
    let seed = config.replicate_seed(replicate);
    let (pool, test_ids, oracle) = split_pool(dataset, &config.split_config(replicate), Some(config.budget))?;
    if test_ids.is_empty() {
        return Err(Error::Validation("test split is empty".into()));
    }
    let skyline = train(dataset, &pool.pool_ids(), &config.train)?;
    let skyline_error = evaluate(&skyline, dataset, &test_ids)?;
    let session_cfg = SessionConfig {
        strategy: config.curve.strategy,
        train: config.train,
        reward_population: config.reward_population,
        seed,
        execution: if config.replicates > 1 {
            Execution::Sequential
        } else {
            config.execution
        },
    };
    let mut session = ActiveSession::new(dataset, pool, oracle, session_cfg)?;
    run_group(
        &mut session,
        &config.curve.group,
        config.budget,
        config.checkpoint_every,
        &test_ids,
        skyline_error,
        config.metric,
        &config.curve.to_string(),
        replicate,
    )
}

/// Runs every replicate of `config`; replicate `r` uses seed `base_seed + r`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ReplicateRun>> {
    config.validate()?;
    let dataset = config.dataset.load()?;
    run_experiment_on(config, &dataset)
}

pub fn run_experiment_on(config: &ExperimentConfig, dataset: &Dataset) -> Result<Vec<ReplicateRun>> {
    config.validate()?;
    par::try_map_indices(config.execution, config.replicates, |r| run_replicate(config, dataset, r))
}
