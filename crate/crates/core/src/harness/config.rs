//! Flat `key = value` configuration files.
//!
//! Keys are dotted (`model.epochs`, `eg.tau`). Lines starting with `#` are
//! comments. Lists are comma separated, optionally in brackets.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use super::{CurveSpec, DatasetSource, ExperimentConfig, Group, Metric};
use crate::data_pool::SyntheticSpec;
use crate::eg_meta::EgConfig;
use crate::error::{Error, Result};
use crate::explore::{epsilon_for_exploration_rate, OsugiConfig};
use crate::model::TrainConfig;
use crate::par::Execution;
use crate::reward::RewardPopulation;
use crate::strategies::StrategyKind;

pub type ConfigMap = BTreeMap<String, String>;

pub const KNOWN_KEYS: &[&str] = &[
    "budget",
    "checkpoint_every",
    "curves",
    "dataset",
    "eg.beta",
    "eg.candidates",
    "eg.iterations",
    "eg.kappa",
    "eg.literal_smoothing",
    "eg.tau",
    "explore.epsilon",
    "explore.osugi.lambda",
    "explore.osugi.p_init",
    "explore.osugi.p_max",
    "explore.osugi.p_min",
    "group",
    "metric",
    "model.epochs",
    "model.l2",
    "model.step",
    "parallel",
    "qbc.committee_size",
    "replicates",
    "reward.population",
    "seed",
    "split.init_labeled_per_class",
    "split.test_fraction",
    "strategy",
    "synth.centers",
    "synth.classes",
    "synth.clusters",
    "synth.dim",
    "synth.per_cluster",
    "synth.seed",
    "synth.spread",
    "wd.exponent",
];

pub fn parse_kv(text: &str) -> Result<ConfigMap> {
    let mut map = ConfigMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: i + 1,
            message: format!("expected `key = value`, got {line:?}"),
        })?;
        let key = key.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("unknown key {key:?}"),
            });
        }
        let value = value.trim().trim_matches('"').to_string();
        if map.insert(key.clone(), value).is_some() {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("duplicate key {key:?}"),
            });
        }
    }
    Ok(map)
}

/// Applies `key=value` overrides.
pub fn apply_override(map: &mut ConfigMap, assignment: &str) -> Result<()> {
    let (k, v) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {assignment:?} is not key=value")))?;
    let k = k.trim();
    if !KNOWN_KEYS.contains(&k) {
        return Err(Error::Config(format!("unknown key {k:?}")));
    }
    map.insert(k.to_string(), v.trim().to_string());
    Ok(())
}

struct Reader<'m> {
    map: &'m ConfigMap,
}

impl Reader<'_> {
    fn raw(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::Config(format!("{key} = {v:?} is not a valid value"))),
        }
    }

    fn list(&self, key: &str) -> Option<Vec<String>> {
        self.raw(key).map(split_list)
    }

    fn float_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.list(key)
            .map(|items| {
                items
                    .iter()
                    .map(|s| {
                        s.parse()
                            .map_err(|_| Error::Config(format!("{key}: {s:?} is not a number")))
                    })
                    .collect()
            })
            .transpose()
    }
}

fn split_list(v: &str) -> Vec<String> {
    v.trim()
        .trim_start_matches('[')
        .trim_end_matches(']')
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!("{key} = {v:?} is not a boolean"))),
    }
}

/// Synthetic dataset spec from `synth.*` keys. `synth.centers` takes
/// semicolon-separated points (`0,0; 4,0`); without it the cluster count
/// picks one of the built-in layouts.
pub fn synthetic_from_map(map: &ConfigMap) -> Result<SyntheticSpec> {
    let r = Reader { map };
    let seed: u64 = r.parse("synth.seed", 0)?;
    let per_cluster: usize = r.parse("synth.per_cluster", 300)?;
    let centers = match r.raw("synth.centers") {
        Some(text) => Some(
            text.split(';')
                .map(|pt| {
                    split_list(pt)
                        .iter()
                        .map(|s| {
                            s.parse::<f64>()
                                .map_err(|_| Error::Config(format!("synth.centers: {s:?} is not a number")))
                        })
                        .collect::<Result<Vec<f64>>>()
                })
                .collect::<Result<Vec<Vec<f64>>>>()?,
        ),
        None => None,
    };
    let mut spec = match centers {
        Some(centers) => {
            let dim = centers.first().map_or(0, Vec::len);
            let k = centers.len();
            SyntheticSpec {
                per_cluster,
                dim: r.parse("synth.dim", dim)?,
                centers,
                class_of_cluster: (0..k).map(|i| i % 2).collect(),
                spread: 0.5,
                seed,
            }
        }
        None => {
            let k: usize = r.parse("synth.clusters", 3)?;
            let dim: usize = r.parse("synth.dim", 2)?;
            SyntheticSpec::with_clusters(k, per_cluster, dim, seed)
        }
    };
    if let Some(classes) = r.list("synth.classes") {
        spec.class_of_cluster = classes
            .iter()
            .map(|s| s.parse().map_err(|_| Error::Config(format!("synth.classes: {s:?} is not a class index"))))
            .collect::<Result<_>>()?;
    }
    spec.spread = r.parse("synth.spread", spec.spread)?;
    Ok(spec)
}

fn dataset_from_map(map: &ConfigMap) -> Result<DatasetSource> {
    match map.get("dataset").map(String::as_str) {
        None | Some("") => Err(Error::Config("no dataset given".into())),
        Some("synthetic") => Ok(DatasetSource::Synthetic(synthetic_from_map(map)?)),
        Some(path) => Ok(DatasetSource::Csv(PathBuf::from(path))),
    }
}

fn strategy_from_map(map: &ConfigMap, name: &str) -> Result<StrategyKind> {
    let r = Reader { map };
    StrategyKind::parse(
        name,
        r.parse("qbc.committee_size", StrategyKind::DEFAULT_COMMITTEE_SIZE)?,
        r.parse("wd.exponent", StrategyKind::DEFAULT_DENSITY_EXPONENT)?,
    )
}

fn osugi_from_map(map: &ConfigMap) -> Result<OsugiConfig> {
    let r = Reader { map };
    let d = OsugiConfig::default();
    Ok(OsugiConfig {
        lambda: r.parse("explore.osugi.lambda", d.lambda)?,
        p_min: r.parse("explore.osugi.p_min", d.p_min)?,
        p_max: r.parse("explore.osugi.p_max", d.p_max)?,
        p_init: r.parse("explore.osugi.p_init", d.p_init)?,
    })
}

fn eg_from_map(map: &ConfigMap, budget: usize) -> Result<EgConfig> {
    let r = Reader { map };
    let d = EgConfig::default();
    Ok(EgConfig {
        candidates: r.float_list("eg.candidates")?.unwrap_or(d.candidates),
        tau: r.parse("eg.tau", d.tau)?,
        beta: r.parse("eg.beta", d.beta)?,
        kappa: r.parse("eg.kappa", d.kappa)?,
        iterations: r.parse("eg.iterations", budget)?,
        literal_smoothing: match r.raw("eg.literal_smoothing") {
            Some(v) => parse_bool("eg.literal_smoothing", v)?,
            None => false,
        },
    })
}

fn group_from_map(map: &ConfigMap, name: &str, budget: usize) -> Result<Group> {
    let r = Reader { map };
    match name.to_ascii_lowercase().as_str() {
        "pure" => Ok(Group::Pure),
        "fixed_eps" | "fixed" => Ok(Group::FixedEpsilon {
            epsilon: r.parse("explore.epsilon", 0.5)?,
        }),
        "osugi" => Ok(Group::Osugi(osugi_from_map(map)?)),
        "eg" => Ok(Group::Eg(eg_from_map(map, budget)?)),
        other => Err(Error::Config(format!("unknown group {other:?}"))),
    }
}

/// Parses a curve label: `random`, `us`, `0.5-qbc`, `p-wd`, `eg-us` or
/// `EG-Active(US)`. A numeric prefix is the exploration probability.
pub fn curve_from_label(map: &ConfigMap, label: &str, budget: usize) -> Result<CurveSpec> {
    let l = label.trim().to_ascii_lowercase();
    let strategy_of = |name: &str| strategy_from_map(map, name);
    if l == "random" {
        return Ok(CurveSpec {
            group: Group::Pure,
            strategy: StrategyKind::Random,
        });
    }
    if let Some(inner) = l.strip_prefix("eg-active(").and_then(|s| s.strip_suffix(')')) {
        return Ok(CurveSpec {
            group: Group::Eg(eg_from_map(map, budget)?),
            strategy: strategy_of(inner)?,
        });
    }
    match l.split_once('-') {
        None => Ok(CurveSpec {
            group: Group::Pure,
            strategy: strategy_of(&l)?,
        }),
        Some(("eg", s)) => Ok(CurveSpec {
            group: Group::Eg(eg_from_map(map, budget)?),
            strategy: strategy_of(s)?,
        }),
        Some(("p", s)) => Ok(CurveSpec {
            group: Group::Osugi(osugi_from_map(map)?),
            strategy: strategy_of(s)?,
        }),
        Some((rate, s)) => {
            let rate: f64 = rate
                .parse()
                .map_err(|_| Error::Config(format!("unrecognised curve label {label:?}")))?;
            Ok(CurveSpec {
                group: Group::FixedEpsilon {
                    epsilon: epsilon_for_exploration_rate(rate)?,
                },
                strategy: strategy_of(s)?,
            })
        }
    }
}

fn experiment_from_map(map: &ConfigMap, curve: Option<CurveSpec>) -> Result<ExperimentConfig> {
    let r = Reader { map };
    let budget: usize = r.parse("budget", 2000)?;
    let curve = match curve {
        Some(c) => c,
        None => CurveSpec {
            group: group_from_map(map, r.raw("group").unwrap_or("pure"), budget)?,
            strategy: strategy_from_map(map, r.raw("strategy").unwrap_or("us"))?,
        },
    };
    let d = TrainConfig::default();
    let mut cfg = ExperimentConfig::new(dataset_from_map(map)?, curve);
    cfg.budget = budget;
    cfg.checkpoint_every = r.parse("checkpoint_every", 100)?;
    cfg.replicates = r.parse("replicates", 1)?;
    cfg.base_seed = r.parse("seed", 0)?;
    cfg.init_labeled_per_class = r.parse("split.init_labeled_per_class", 1)?;
    cfg.test_fraction = r.parse("split.test_fraction", 0.2)?;
    cfg.train = TrainConfig {
        epochs: r.parse("model.epochs", d.epochs)?,
        step: r.parse("model.step", d.step)?,
        l2: r.parse("model.l2", d.l2)?,
        seed: cfg.base_seed,
    };
    cfg.reward_population = match r.raw("reward.population").unwrap_or("pool") {
        "pool" => RewardPopulation::Pool,
        "unlabeled" => RewardPopulation::Unlabeled,
        v => return Err(Error::Config(format!("reward.population = {v:?}; expected pool or unlabeled"))),
    };
    cfg.metric = match r.raw("metric").unwrap_or("regret") {
        "regret" => Metric::Regret,
        "error" => Metric::Error,
        v => return Err(Error::Config(format!("metric = {v:?}; expected regret or error"))),
    };
    cfg.execution = match r.raw("parallel") {
        Some(v) if !parse_bool("parallel", v)? => Execution::Sequential,
        _ => Execution::Parallel,
    };
    cfg.validate()?;
    Ok(cfg)
}

impl ExperimentConfig {
    pub fn from_map(map: &ConfigMap) -> Result<Self> {
        experiment_from_map(map, None)
    }
}

/// A comparison suite: shared settings plus a `curves` list.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub map: ConfigMap,
    pub experiments: Vec<ExperimentConfig>,
}

impl SuiteConfig {
    pub fn from_map(map: ConfigMap) -> Result<Self> {
        let labels = Reader { map: &map }
            .list("curves")
            .ok_or_else(|| Error::Config("suite has no `curves` list".into()))?;
        if labels.is_empty() {
            return Err(Error::Config("suite `curves` list is empty".into()));
        }
        let budget: usize = Reader { map: &map }.parse("budget", 2000)?;
        let experiments = labels
            .iter()
            .map(|l| experiment_from_map(&map, Some(curve_from_label(&map, l, budget)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(SuiteConfig { map, experiments })
    }
}

/// Fully resolved settings of `cfg` as sorted `key = value` lines.
pub fn resolved_lines(cfg: &ExperimentConfig) -> ConfigMap {
    let mut m = ConfigMap::new();
    let mut put = |k: &str, v: String| {
        m.insert(k.to_string(), v);
    };
    match &cfg.dataset {
        DatasetSource::Csv(p) => put("dataset", p.display().to_string()),
        DatasetSource::Synthetic(s) => {
            put("dataset", "synthetic".into());
            put("synth.per_cluster", s.per_cluster.to_string());
            put("synth.dim", s.dim.to_string());
            put("synth.spread", s.spread.to_string());
            put("synth.seed", s.seed.to_string());
            put(
                "synth.centers",
                s.centers
                    .iter()
                    .map(|c| c.iter().map(f64::to_string).collect::<Vec<_>>().join(","))
                    .collect::<Vec<_>>()
                    .join("; "),
            );
            put(
                "synth.classes",
                s.class_of_cluster.iter().map(usize::to_string).collect::<Vec<_>>().join(","),
            );
        }
    }
    put("budget", cfg.budget.to_string());
    put("checkpoint_every", cfg.checkpoint_every.to_string());
    put("replicates", cfg.replicates.to_string());
    put("seed", cfg.base_seed.to_string());
    put("split.init_labeled_per_class", cfg.init_labeled_per_class.to_string());
    put("split.test_fraction", cfg.test_fraction.to_string());
    put("model.epochs", cfg.train.epochs.to_string());
    put("model.step", cfg.train.step.to_string());
    put("model.l2", cfg.train.l2.to_string());
    put(
        "reward.population",
        match cfg.reward_population {
            RewardPopulation::Pool => "pool",
            RewardPopulation::Unlabeled => "unlabeled",
        }
        .into(),
    );
    put(
        "metric",
        match cfg.metric {
            Metric::Regret => "regret",
            Metric::Error => "error",
        }
        .into(),
    );
    put("parallel", (cfg.execution == Execution::Parallel).to_string());
    put("group", cfg.curve.group.name().into());
    put("strategy", cfg.curve.strategy.name().into());
    match cfg.curve.strategy {
        StrategyKind::Committee { committee_size } => put("qbc.committee_size", committee_size.to_string()),
        StrategyKind::DensityWeighted { exponent } => put("wd.exponent", exponent.to_string()),
        _ => {}
    }
    match &cfg.curve.group {
        Group::Pure => {}
        Group::FixedEpsilon { epsilon } => put("explore.epsilon", epsilon.to_string()),
        Group::Osugi(o) => {
            put("explore.osugi.lambda", o.lambda.to_string());
            put("explore.osugi.p_min", o.p_min.to_string());
            put("explore.osugi.p_max", o.p_max.to_string());
            put("explore.osugi.p_init", o.p_init.to_string());
        }
        Group::Eg(e) => {
            put(
                "eg.candidates",
                e.candidates.iter().map(f64::to_string).collect::<Vec<_>>().join(", "),
            );
            put("eg.tau", e.tau.to_string());
            put("eg.beta", e.beta.to_string());
            put("eg.kappa", e.kappa.to_string());
            put("eg.iterations", e.iterations.to_string());
            put("eg.literal_smoothing", e.literal_smoothing.to_string());
        }
    }
    m
}

/// Resolved config text for a set of curves: one `[label]` block each.
pub fn resolved_text(experiments: &[ExperimentConfig]) -> String {
    let mut out = String::new();
    for (i, cfg) in experiments.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "# curve: {}", cfg.curve);
        for (k, v) in resolved_lines(cfg) {
            let _ = writeln!(out, "{k} = {v}");
        }
    }
    out
}
