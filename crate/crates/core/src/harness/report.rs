//! Multi-curve comparisons under common random numbers.

use std::collections::BTreeMap;

use super::{run_replicate, ExperimentConfig, ReplicateRun};
use crate::error::{Error, Result};
use crate::par;

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub iteration: usize,
    pub mean: f64,
    pub sd: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveSummary {
    pub label: String,
    pub slug: String,
    pub group: String,
    pub strategy: String,
    pub points: Vec<CurvePoint>,
    /// Mean across replicates of each trace's average regret.
    pub average_regret_mean: f64,
    pub average_regret_sd: f64,
    pub final_regret_mean: f64,
    /// Baseline average regret over this curve's; absent without a baseline.
    pub factor_vs_baseline: Option<f64>,
    pub n: usize,
    pub truncated_runs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub curves: Vec<CurveSummary>,
    /// Index of the pure-random curve, if the suite has one.
    pub baseline: Option<usize>,
}

impl ComparisonReport {
    pub fn curve(&self, label: &str) -> Option<&CurveSummary> {
        self.curves.iter().find(|c| c.label == label)
    }

    /// Builds the report from finished runs, one run list per curve.
    pub fn from_runs(configs: &[ExperimentConfig], runs: &[Vec<ReplicateRun>]) -> Self {
        let baseline = configs.iter().position(|c| c.curve.is_baseline());
        let mut curves: Vec<CurveSummary> = configs
            .iter()
            .zip(runs)
            .map(|(cfg, rs)| summarize(cfg, rs))
            .collect();
        if let Some(b) = baseline {
            let base = curves[b].average_regret_mean;
            for (i, c) in curves.iter_mut().enumerate() {
                c.factor_vs_baseline = Some(if i == b { 1.0 } else { factor(base, c.average_regret_mean) });
            }
        }
        ComparisonReport { curves, baseline }
    }
}

/// `baseline / candidate`, with 0/0 read as no difference.
pub fn factor(baseline: f64, candidate: f64) -> f64 {
    if candidate == 0.0 {
        if baseline == 0.0 {
            1.0
        } else {
            f64::INFINITY.copysign(baseline)
        }
    } else {
        baseline / candidate
    }
}

/// Mean and sample standard deviation (0 for fewer than two values).
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn summarize(cfg: &ExperimentConfig, runs: &[ReplicateRun]) -> CurveSummary {
    let mut by_iteration: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for run in runs {
        for c in &run.trace.checkpoints {
            by_iteration.entry(c.iteration).or_default().push(c.regret);
        }
    }
    let points = by_iteration
        .into_iter()
        .map(|(iteration, vals)| {
            let (mean, sd) = mean_sd(&vals);
            CurvePoint {
                iteration,
                mean,
                sd,
                n: vals.len(),
            }
        })
        .collect();
    let averages: Vec<f64> = runs.iter().map(|r| r.trace.average_regret()).collect();
    let finals: Vec<f64> = runs.iter().filter_map(|r| r.trace.final_regret()).collect();
    let (average_regret_mean, average_regret_sd) = mean_sd(&averages);
    CurveSummary {
        label: cfg.curve.to_string(),
        slug: cfg.curve.slug(),
        group: cfg.curve.group.name().to_string(),
        strategy: cfg.curve.strategy.name().to_string(),
        points,
        average_regret_mean,
        average_regret_sd,
        final_regret_mean: mean_sd(&finals).0,
        factor_vs_baseline: None,
        n: runs.len(),
        truncated_runs: runs.iter().filter(|r| r.trace.truncated).count(),
    }
}

/// A finished comparison: the aggregate report plus every run, indexed
/// `runs[curve][replicate]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub report: ComparisonReport,
    pub runs: Vec<Vec<ReplicateRun>>,
}

fn check_shared(configs: &[ExperimentConfig]) -> Result<()> {
    let first = configs
        .first()
        .ok_or_else(|| Error::Validation("comparison suite is empty".into()))?;
    for c in configs {
        c.validate()?;
        let mismatch = |what: &str| {
            Err(Error::Validation(format!(
                "curve {} differs from {} in {what}",
                c.curve, first.curve
            )))
        };
        if c.dataset != first.dataset {
            return mismatch("dataset");
        }
        if c.budget != first.budget || c.checkpoint_every != first.checkpoint_every {
            return mismatch("budget or checkpoints");
        }
        if c.replicates != first.replicates || c.base_seed != first.base_seed {
            return mismatch("replicates or seed");
        }
        if c.init_labeled_per_class != first.init_labeled_per_class || c.test_fraction != first.test_fraction {
            return mismatch("split");
        }
        if c.train != first.train || c.metric != first.metric {
            return mismatch("model or metric");
        }
    }
    let mut labels: Vec<String> = configs.iter().map(|c| c.curve.slug()).collect();
    labels.sort();
    labels.dedup();
    if labels.len() != configs.len() {
        return Err(Error::Validation("comparison suite repeats a curve".into()));
    }
    Ok(())
}

/// Runs every curve of a suite. Replicate `r` of every curve sees the same
/// split, initial model and run seed.
pub fn run_comparison(configs: &[ExperimentConfig]) -> Result<Comparison> {
    check_shared(configs)?;
    let first = &configs[0];
    let dataset = first.dataset.load()?;
    let reps = first.replicates;
    let tasks = configs.len() * reps;
    let mut flat = par::try_map_indices(first.execution, tasks, |t| {
        let cfg = &configs[t / reps];
        let mut cfg_one = cfg.clone();
        if tasks > 1 {
            cfg_one.execution = par::Execution::Sequential;
        }
        run_replicate(&cfg_one, &dataset, t % reps)
    })?
    .into_iter();
    let runs: Vec<Vec<ReplicateRun>> = (0..configs.len())
        .map(|_| flat.by_ref().take(reps).collect())
        .collect();
    let report = ComparisonReport::from_runs(configs, &runs);
    Ok(Comparison { report, runs })
}
