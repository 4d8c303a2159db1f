//! Exploitation-side query strategies.
//!
//! Every selector returns an id from the unlabeled candidates it is given.
//! Score ties always resolve to the lowest id, so the result does not depend
//! on the order the candidates arrive in.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data_pool::Dataset;
use crate::error::{Error, Result};
use crate::model::{argmax_lowest, class_probabilities, train, Hypothesis, TrainConfig};
use crate::par::{self, Execution};
use crate::seeds::{derive_seed, stream};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StrategyKind {
    /// Maximum predictive entropy.
    Uncertainty,
    /// Maximum vote entropy of a bootstrap committee.
    Committee { committee_size: usize },
    /// Entropy times mean cosine similarity to the pool, raised to `exponent`.
    DensityWeighted { exponent: f64 },
    /// Uniform over the unlabeled pool.
    Random,
}

impl StrategyKind {
    pub const DEFAULT_COMMITTEE_SIZE: usize = 5;
    pub const DEFAULT_DENSITY_EXPONENT: f64 = 1.0;

    pub fn committee() -> Self {
        StrategyKind::Committee {
            committee_size: Self::DEFAULT_COMMITTEE_SIZE,
        }
    }

    pub fn density_weighted() -> Self {
        StrategyKind::DensityWeighted {
            exponent: Self::DEFAULT_DENSITY_EXPONENT,
        }
    }

    /// Parses `us`, `qbc`, `wd` or `random` (case-insensitive).
    pub fn parse(name: &str, committee_size: usize, exponent: f64) -> Result<Self> {
        let kind = match name.trim().to_ascii_lowercase().as_str() {
            "us" | "uncertainty" => StrategyKind::Uncertainty,
            "qbc" | "committee" => StrategyKind::Committee { committee_size },
            "wd" | "density" => StrategyKind::DensityWeighted { exponent },
            "random" => StrategyKind::Random,
            other => return Err(Error::Config(format!("unknown strategy {other:?}"))),
        };
        kind.validate()?;
        Ok(kind)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            StrategyKind::Committee { committee_size } if committee_size < 2 => Err(Error::Config(
                format!("qbc.committee_size must be at least 2, got {committee_size}"),
            )),
            StrategyKind::DensityWeighted { exponent } if !(exponent >= 0.0 && exponent.is_finite()) => {
                Err(Error::Config(format!("wd.exponent must be non-negative, got {exponent}")))
            }
            _ => Ok(()),
        }
    }

    /// Short config name.
    pub fn name(&self) -> &'static str {
        match self {
            StrategyKind::Uncertainty => "us",
            StrategyKind::Committee { .. } => "qbc",
            StrategyKind::DensityWeighted { .. } => "wd",
            StrategyKind::Random => "random",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            StrategyKind::Uncertainty => "US",
            StrategyKind::Committee { .. } => "QBC",
            StrategyKind::DensityWeighted { .. } => "WD",
            StrategyKind::Random => "random",
        };
        f.write_str(s)
    }
}

/// Shannon entropy in nats; zero entries contribute nothing.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>()
}

/// Highest score wins; equal scores go to the lower id.
pub(crate) fn argmax_id(ids: &[usize], scores: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..ids.len() {
        if scores[i] > scores[best] || (scores[i] == scores[best] && ids[i] < ids[best]) {
            best = i;
        }
    }
    ids[best]
}

fn entropies(h: &Hypothesis, dataset: &Dataset, unlabeled: &[usize]) -> Result<Vec<f64>> {
    let probs = class_probabilities(h, dataset, unlabeled)?;
    Ok(probs.rows().map(entropy).collect())
}

pub fn select_uncertainty(h: &Hypothesis, dataset: &Dataset, unlabeled: &[usize]) -> Result<usize> {
    if unlabeled.is_empty() {
        return Err(Error::EmptyPool);
    }
    let scores = entropies(h, dataset, unlabeled)?;
    Ok(argmax_id(unlabeled, &scores))
}

/// Bootstrap indices (into `labeled`) for committee member `member`.
pub fn bootstrap_sample(labeled: &[usize], seed: u64, member: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, stream::QBC_MEMBER, member as u64));
    (0..labeled.len())
        .map(|_| labeled[rng.random_range(0..labeled.len())])
        .collect()
}

/// `−Σ_c (V_c/K) ln(V_c/K)` for vote counts `V` over `K` members.
pub fn vote_entropy(votes: &[usize]) -> f64 {
    let k: usize = votes.iter().sum();
    if k == 0 {
        return 0.0;
    }
    let fractions: Vec<f64> = votes.iter().map(|&v| v as f64 / k as f64).collect();
    entropy(&fractions)
}

/// Query-by-committee with `committee_size` models, each trained on a
/// bootstrap resample of the labeled set. Members train independently and
/// may run in parallel.
pub fn select_qbc(
    dataset: &Dataset,
    labeled: &[usize],
    unlabeled: &[usize],
    committee_size: usize,
    seed: u64,
    train_cfg: &TrainConfig,
    exec: Execution,
) -> Result<usize> {
    if unlabeled.is_empty() {
        return Err(Error::EmptyPool);
    }
    if labeled.len() < 2 {
        return Err(Error::InsufficientLabels {
            have: labeled.len(),
            need: 2,
        });
    }
    if committee_size < 2 {
        return Err(Error::Config(format!(
            "committee_size must be at least 2, got {committee_size}"
        )));
    }
    for &id in unlabeled {
        dataset.check_id(id)?;
    }
    let committee = par::try_map_indices(exec, committee_size, |m| {
        train(dataset, &bootstrap_sample(labeled, seed, m), train_cfg)
    })?;
    let k = dataset.num_classes();
    let mut votes = vec![0usize; k];
    let mut scores_buf = vec![0.0; k];
    let scores: Vec<f64> = unlabeled
        .iter()
        .map(|&id| {
            votes.fill(0);
            for member in &committee {
                member.scores_into(dataset.row(id), &mut scores_buf);
                votes[argmax_lowest(&scores_buf)] += 1;
            }
            vote_entropy(&votes)
        })
        .collect();
    Ok(argmax_id(unlabeled, &scores))
}

/// Mean cosine similarity of each candidate to all of `unlabeled`
/// (itself included). Zero-norm vectors have similarity 0 with everything.
pub fn mean_cosine_density(dataset: &Dataset, unlabeled: &[usize]) -> Result<Vec<f64>> {
    let dim = dataset.dim();
    let mut normalized = Vec::with_capacity(unlabeled.len() * dim);
    for &id in unlabeled {
        dataset.check_id(id)?;
        let x = dataset.row(id);
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            normalized.extend(x.iter().map(|v| v / norm));
        } else {
            normalized.extend(std::iter::repeat_n(0.0, dim));
        }
    }
    // accumulate in id order
    let mut order: Vec<usize> = (0..unlabeled.len()).collect();
    order.sort_unstable_by_key(|&i| unlabeled[i]);
    let mut total = vec![0.0; dim];
    for i in order {
        for (t, v) in total.iter_mut().zip(&normalized[i * dim..(i + 1) * dim]) {
            *t += v;
        }
    }
    let n = unlabeled.len() as f64;
    Ok(normalized
        .chunks_exact(dim)
        .map(|row| row.iter().zip(&total).map(|(a, b)| a * b).sum::<f64>() / n)
        .collect())
}

/// Information-density selection. Negative mean similarity counts as zero
/// density; with `exponent = 0` every weight is 1 and this reduces to
/// uncertainty sampling.
pub fn select_density_weighted(
    h: &Hypothesis,
    dataset: &Dataset,
    unlabeled: &[usize],
    exponent: f64,
) -> Result<usize> {
    if unlabeled.is_empty() {
        return Err(Error::EmptyPool);
    }
    let ent = entropies(h, dataset, unlabeled)?;
    let density = mean_cosine_density(dataset, unlabeled)?;
    let scores: Vec<f64> = ent
        .iter()
        .zip(&density)
        .map(|(e, d)| e * d.max(0.0).powf(exponent))
        .collect();
    Ok(argmax_id(unlabeled, &scores))
}

pub fn select_random<R: Rng + ?Sized>(unlabeled: &[usize], rng: &mut R) -> Result<usize> {
    if unlabeled.is_empty() {
        return Err(Error::EmptyPool);
    }
    Ok(unlabeled[rng.random_range(0..unlabeled.len())])
}
