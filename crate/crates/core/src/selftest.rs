//! Quick built-in checks behind the `selftest` subcommand.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data_pool::{make_synthetic, split_pool, SplitConfig, SyntheticSpec};
use crate::eg_meta::{init_eg, update_eg, EgConfig};
use crate::error::{Error, Result};
use crate::explore::{ActiveSession, SessionConfig};
use crate::harness::{format_sig12, round_sig12};
use crate::model::TrainConfig;
use crate::reward::{hypothesis_change_reward, Alignment};
use crate::strategies::StrategyKind;

type Check = fn() -> Result<usize>;

pub struct CheckResult {
    pub name: &'static str,
    pub invariants: usize,
    pub outcome: Result<()>,
}

fn ensure(cond: bool, what: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Validation(what()))
    }
}

fn reward_examples() -> Result<usize> {
    let cases = [(1.0, 0.0), (0.0, 1.0), (0.5f64.sqrt(), 0.5), (-1.0, 1.0)];
    for (d, want) in cases {
        let r = hypothesis_change_reward(Alignment::Cosine(d))?;
        ensure((r - want).abs() < 1e-9, || format!("r({d}) = {r}, want {want}"))?;
    }
    Ok(cases.len())
}

fn eg_hand_oracle() -> Result<usize> {
    let cfg = EgConfig {
        candidates: vec![0.0, 1.0],
        beta: 0.0,
        kappa: 0.0,
        ..EgConfig::default()
    };
    let s = update_eg(&init_eg(&cfg)?, 0, 1.0, &cfg)?;
    let want = 0.2f64.exp() / (1.0 + 0.2f64.exp());
    ensure((s.probs()[0] - want).abs() < 1e-9, || format!("p0 = {}", s.probs()[0]))?;
    Ok(1)
}

fn simplex_invariants() -> Result<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut n = 0;
    for _ in 0..200 {
        let t = rng.random_range(2..=11);
        let cfg = EgConfig {
            candidates: (0..t).map(|i| i as f64 / (t - 1) as f64).collect(),
            tau: rng.random_range(0.01..=1.0),
            beta: rng.random_range(0.0..=0.1),
            kappa: rng.random_range(0.0..=0.5),
            ..EgConfig::default()
        };
        let mut s = init_eg(&cfg)?;
        for _ in 0..10 {
            s = update_eg(&s, rng.random_range(0..t), rng.random(), &cfg)?;
            let sum: f64 = s.probs().iter().sum();
            let min = s.probs().iter().copied().fold(f64::INFINITY, f64::min);
            ensure((sum - 1.0).abs() <= 1e-9, || format!("sum p = {sum}"))?;
            ensure(min >= cfg.kappa / t as f64 - 1e-9, || format!("min p = {min}"))?;
            ensure(s.weights().iter().all(|w| w.is_finite()), || "non-finite weight".into())?;
            n += 3;
        }
    }
    Ok(n)
}

fn wrapper_endpoint() -> Result<usize> {
    let ds = make_synthetic(&SyntheticSpec::hidden_cluster(30, 3))?;
    let mut n = 0;
    for strategy in [StrategyKind::Uncertainty, StrategyKind::density_weighted()] {
        let (pool, _, oracle) = split_pool(&ds, &SplitConfig::default(), None)?;
        let mut cfg = SessionConfig::new(strategy, 11);
        cfg.train = TrainConfig {
            epochs: 20,
            ..TrainConfig::default()
        };
        let mut a = ActiveSession::new(&ds, pool.clone(), oracle.clone(), cfg)?;
        let mut b = ActiveSession::new(&ds, pool, oracle, cfg)?;
        for _ in 0..20 {
            let x = a.epsilon_active_step(1.0)?;
            let y = b.base_step()?;
            ensure(
                x.outcome.chosen_id == y.outcome.chosen_id && x.reward.r_value == y.reward.r_value,
                || format!("{strategy} diverged at step {}", a.steps()),
            )?;
            n += 1;
        }
    }
    Ok(n)
}

fn number_format() -> Result<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let v: f64 = rng.random_range(-1.0..1.0);
        let back: f64 = format_sig12(v).parse().map_err(|_| Error::Validation("unparsable".into()))?;
        ensure(back == round_sig12(v), || format!("{v} did not round-trip"))?;
    }
    Ok(100)
}

/// Runs every check in a fixed order.
pub fn run_all() -> Vec<CheckResult> {
    let checks: [(&'static str, Check); 5] = [
        ("reward examples", reward_examples),
        ("eg hand oracle", eg_hand_oracle),
        ("simplex invariants", simplex_invariants),
        ("wrapper endpoint", wrapper_endpoint),
        ("number format", number_format),
    ];
    checks
        .into_iter()
        .map(|(name, f)| match f() {
            Ok(invariants) => CheckResult {
                name,
                invariants,
                outcome: Ok(()),
            },
            Err(e) => CheckResult {
                name,
                invariants: 0,
                outcome: Err(e),
            },
        })
        .collect()
}
