//! Acceptance gate. Runs every criterion at its stated tolerance and prints
//! one PASS/FAIL line each; exits nonzero if any fails.

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use eg_active::cli::cli_main;
use eg_active::data_pool::{make_synthetic, split_pool, SplitConfig, SyntheticSpec};
use eg_active::eg_meta::{init_eg, update_eg, EgConfig};
use eg_active::explore::{ActiveSession, SessionConfig, StepReport};
use eg_active::harness::{
    run_comparison, run_experiment, CurveSpec, DatasetSource, ExperimentConfig, Group,
};
use eg_active::model::{evaluate, Layout, PredictionVector, TrainConfig};
use eg_active::reward::{cosine_alignment, hypothesis_change_reward, Alignment};
use eg_active::strategies::StrategyKind;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn pv(values: &[f64]) -> PredictionVector {
    PredictionVector {
        values: values.to_vec(),
        layout: Layout::BinaryScore,
        over_ids: (0..values.len()).collect(),
    }
}

fn reward_unit_suite() -> Outcome {
    let cases: [(&[f64], &[f64], f64, f64); 4] = [
        (&[0.3, -1.2, 2.0], &[0.3, -1.2, 2.0], 1.0, 0.0),
        (&[1.0, 0.0], &[0.0, 1.0], 0.0, 1.0),
        (&[1.0, 0.0], &[1.0, 1.0], std::f64::consts::FRAC_1_SQRT_2, 0.5),
        (&[1.0, -2.0], &[-1.0, 2.0], -1.0, 1.0),
    ];
    for (a, b, want_d, want_r) in cases {
        let d = match cosine_alignment(&pv(a), &pv(b)).map_err(|e| e.to_string())? {
            Alignment::Cosine(d) => d,
            Alignment::Degenerate => return Err(format!("{a:?}/{b:?} degenerate")),
        };
        check((d - want_d).abs() <= 1e-9, || format!("d({a:?}, {b:?}) = {d}, want {want_d}"))?;
        let r = hypothesis_change_reward(Alignment::Cosine(d)).map_err(|e| e.to_string())?;
        check((r - want_r).abs() <= 1e-9, || format!("r({d}) = {r}, want {want_r}"))?;
    }
    for (d, want) in [(1.0, 0.0), (0.0, 1.0), (std::f64::consts::FRAC_1_SQRT_2, 0.5), (-1.0, 1.0)] {
        let r = hypothesis_change_reward(Alignment::Cosine(d)).map_err(|e| e.to_string())?;
        check((r - want).abs() <= 1e-9, || format!("r({d}) = {r}, want {want}"))?;
    }
    Ok("8 alignment/reward pairs within 1e-9".into())
}

fn eg_hand_oracle() -> Outcome {
    // e^0.2 / (1 + e^0.2), worked by hand
    const P0: f64 = 0.549_833_997_312_478;
    const P1: f64 = 0.450_166_002_687_522;
    let cfg = EgConfig {
        candidates: vec![0.0, 1.0],
        tau: 0.1,
        beta: 0.0,
        kappa: 0.0,
        ..EgConfig::default()
    };
    let s = update_eg(&init_eg(&cfg).map_err(|e| e.to_string())?, 0, 1.0, &cfg).map_err(|e| e.to_string())?;
    let p = s.probs();
    check((p[0] - P0).abs() <= 1e-6 && (p[1] - P1).abs() <= 1e-6, || format!("p = {p:?}"))?;
    Ok(format!("p = ({:.6}, {:.6})", p[0], p[1]))
}

fn simplex_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20240611);
    let mut calls = 0;
    let mut worst_sum = 0.0f64;
    while calls < 10_000 {
        let t: usize = rng.random_range(2..=11);
        let cfg = EgConfig {
            candidates: (0..t).map(|i| i as f64 / (t - 1) as f64).collect(),
            tau: rng.random_range(0.01..=1.0),
            beta: rng.random_range(0.0..=0.1),
            kappa: rng.random_range(0.0..=0.5),
            ..EgConfig::default()
        };
        let mut s = init_eg(&cfg).map_err(|e| e.to_string())?;
        for _ in 0..rng.random_range(1..=200usize) {
            let d = rng.random_range(0..t);
            let r: f64 = rng.random();
            s = update_eg(&s, d, r, &cfg).map_err(|e| format!("call {calls}: {e}"))?;
            calls += 1;
            let sum: f64 = s.probs().iter().sum();
            let min = s.probs().iter().copied().fold(f64::INFINITY, f64::min);
            worst_sum = worst_sum.max((sum - 1.0).abs());
            check((sum - 1.0).abs() <= 1e-9, || format!("call {calls}: sum p = {sum}"))?;
            check(min >= cfg.kappa / t as f64 - 1e-9, || format!("call {calls}: min p = {min}"))?;
            check(s.weights().iter().all(|w| w.is_finite()), || format!("call {calls}: weights {:?}", s.weights()))?;
        }
    }
    Ok(format!("{calls} updates, max |sum p - 1| = {worst_sum:.1e}"))
}

fn bandit_convergence() -> Outcome {
    let cfg = EgConfig {
        candidates: vec![0.0, 1.0],
        ..EgConfig::default()
    };
    let means = [0.9, 0.1];
    let mut wins = 0;
    let mut lowest = 1.0f64;
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = init_eg(&cfg).map_err(|e| e.to_string())?;
        for _ in 0..2000 {
            let d = s.sample_arm(&mut rng);
            let r = if rng.random::<f64>() < means[d] { 1.0 } else { 0.0 };
            s.update(d, r, &cfg).map_err(|e| e.to_string())?;
        }
        let p = s.probs()[0];
        lowest = lowest.min(p);
        if p > 0.6 {
            wins += 1;
        }
    }
    check(wins >= 45, || format!("best arm p > 0.6 in {wins}/50 seeds"))?;
    Ok(format!("best arm p > 0.6 in {wins}/50 seeds (lowest {lowest:.4})"))
}

fn trajectory(reports: &[StepReport], errors: &[f64]) -> Vec<(usize, u64, u64, u64)> {
    reports
        .iter()
        .zip(errors)
        .map(|(r, e)| {
            (
                r.outcome.chosen_id,
                r.reward.r_value.to_bits(),
                r.reward.d_value.to_bits(),
                e.to_bits(),
            )
        })
        .collect()
}

fn wrapper_endpoint() -> Outcome {
    let ds = make_synthetic(&SyntheticSpec::hidden_cluster(250, 17)).map_err(|e| e.to_string())?;
    let mut details = Vec::new();
    for strategy in [
        StrategyKind::Uncertainty,
        StrategyKind::committee(),
        StrategyKind::density_weighted(),
    ] {
        let split = SplitConfig {
            seed: 5,
            ..SplitConfig::default()
        };
        let (pool, test, oracle) = split_pool(&ds, &split, None).map_err(|e| e.to_string())?;
        let cfg = SessionConfig::new(strategy, 5);
        let run = |wrapped: bool| -> Result<Vec<(usize, u64, u64, u64)>, String> {
            let mut s = ActiveSession::new(&ds, pool.clone(), oracle.clone(), cfg).map_err(|e| e.to_string())?;
            let mut reports = Vec::new();
            let mut errors = Vec::new();
            for _ in 0..500 {
                let rep = if wrapped { s.epsilon_active_step(1.0) } else { s.base_step() };
                reports.push(rep.map_err(|e| e.to_string())?);
                errors.push(evaluate(s.hypothesis(), &ds, &test).map_err(|e| e.to_string())?);
            }
            Ok(trajectory(&reports, &errors))
        };
        let a = run(true)?;
        let b = run(false)?;
        check(a.len() == 500, || format!("{strategy}: {} steps", a.len()))?;
        if let Some(i) = a.iter().zip(&b).position(|(x, y)| x != y) {
            return Err(format!("{strategy}: trajectories differ at step {}", i + 1));
        }
        details.push(format!("{strategy} ok"));
    }
    Ok(format!("500 steps bit-identical: {}", details.join(", ")))
}

fn exploration_frequency() -> Outcome {
    let ds = make_synthetic(&SyntheticSpec::two_gaussian(6500, 23)).map_err(|e| e.to_string())?;
    let (pool, _, oracle) = split_pool(&ds, &SplitConfig::default(), None).map_err(|e| e.to_string())?;
    let mut cfg = SessionConfig::new(StrategyKind::Uncertainty, 29);
    cfg.train = TrainConfig {
        epochs: 1,
        ..TrainConfig::default()
    };
    let mut s = ActiveSession::new(&ds, pool, oracle, cfg).map_err(|e| e.to_string())?;
    let mut base = 0usize;
    for _ in 0..10_000 {
        if s.epsilon_active_step(0.5).map_err(|e| e.to_string())?.outcome.used_base_strategy {
            base += 1;
        }
    }
    let frac = base as f64 / 10_000.0;
    check((0.48..=0.52).contains(&frac), || format!("base fraction {frac}"))?;
    Ok(format!("base fraction {frac:.4} over 10000 steps"))
}

fn directional_claim() -> Outcome {
    let dataset = DatasetSource::Synthetic(SyntheticSpec::hidden_cluster(300, 0));
    let curve = |group, strategy| CurveSpec { group, strategy };
    let configs: Vec<ExperimentConfig> = [
        curve(Group::Pure, StrategyKind::Random),
        curve(Group::Pure, StrategyKind::Uncertainty),
        curve(
            Group::Eg(EgConfig {
                iterations: 500,
                ..EgConfig::default()
            }),
            StrategyKind::Uncertainty,
        ),
    ]
    .into_iter()
    .map(|c| {
        let mut cfg = ExperimentConfig::new(dataset.clone(), c);
        cfg.budget = 500;
        cfg.checkpoint_every = 100;
        cfg.replicates = 30;
        cfg
    })
    .collect();
    let cmp = run_comparison(&configs).map_err(|e| e.to_string())?;
    let avg: Vec<f64> = cmp.report.curves.iter().map(|c| c.average_regret_mean).collect();
    let mut random_worst = 0;
    for r in 0..30 {
        let finals: Vec<f64> = cmp
            .runs
            .iter()
            .map(|runs| runs[r].trace.final_regret().unwrap_or(f64::NAN))
            .collect();
        if finals[0] >= finals[1] && finals[0] >= finals[2] {
            random_worst += 1;
        }
    }
    let summary = format!(
        "avg regret random {:.5}, US {:.5}, EG-Active(US) {:.5}; random worst-or-equal at final in {random_worst}/30",
        avg[0], avg[1], avg[2]
    );
    check(avg[2] <= avg[1], || format!("EG-Active(US) above US: {summary}"))?;
    check(random_worst >= 20, || format!("random not worst often enough: {summary}"))?;
    Ok(summary)
}

fn protocol_fidelity() -> Outcome {
    let mut cfg = ExperimentConfig::new(
        DatasetSource::Synthetic(SyntheticSpec::hidden_cluster(1000, 3)),
        CurveSpec {
            group: Group::Eg(EgConfig::default()),
            strategy: StrategyKind::Uncertainty,
        },
    );
    cfg.budget = 2000;
    cfg.checkpoint_every = 100;
    let runs = run_experiment(&cfg).map_err(|e| e.to_string())?;
    let t = &runs[0].trace;
    let its: Vec<usize> = t.checkpoints.iter().map(|c| c.iteration).collect();
    let want: Vec<usize> = (1..=20).map(|k| k * 100).collect();
    check(its == want, || format!("checkpoints at {its:?}"))?;
    check(!t.truncated && t.steps == 2000, || format!("steps {} truncated {}", t.steps, t.truncated))?;
    check(runs[0].events.len() == 2000, || format!("{} events", runs[0].events.len()))?;
    check(
        t.checkpoints.iter().all(|c| c.p_snapshot.is_some()),
        || "eg checkpoint without p snapshot".into(),
    )?;
    Ok("20 checkpoints at 100..2000 over 2000 queries".into())
}

fn read_tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).expect("readable output dir") {
            let path = entry.expect("dir entry").path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().display().to_string();
                out.push((rel, fs::read(&path).expect("readable file")));
            }
        }
    }
    out.sort();
    out
}

fn reproducibility() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let suite = tmp.path().join("suite.txt");
    fs::write(
        &suite,
        "dataset = synthetic\nsynth.clusters = 3\nsynth.per_cluster = 120\nsynth.seed = 9\n\
         budget = 150\ncheckpoint_every = 50\nreplicates = 3\nseed = 41\nmodel.epochs = 60\n\
         curves = random, us, 0.5-qbc, p-wd, eg-us\n",
    )
    .map_err(|e| e.to_string())?;
    let mut trees = Vec::new();
    for name in ["a", "b"] {
        let out = tmp.path().join(name);
        let code = cli_main([
            "eg-active",
            "compare",
            "--suite",
            suite.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        check(code == 0, || format!("compare exited {code}"))?;
        trees.push(read_tree(&out));
    }
    let (a, b) = (&trees[0], &trees[1]);
    check(a.len() == b.len(), || format!("{} vs {} files", a.len(), b.len()))?;
    for ((na, ba), (nb, bb)) in a.iter().zip(b) {
        check(na == nb && ba == bb, || format!("{na} differs from {nb}"))?;
    }
    check(a.len() == 5 * 3 + 5 + 2, || format!("{} files", a.len()))?;
    Ok(format!("{} files identical across reruns", a.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("reward unit suite", reward_unit_suite),
        ("EG update hand oracle", eg_hand_oracle),
        ("simplex invariants", simplex_invariants),
        ("bandit convergence", bandit_convergence),
        ("wrapper endpoint equivalence", wrapper_endpoint),
        ("exploration frequency", exploration_frequency),
        ("directional AL claim", directional_claim),
        ("protocol fidelity", protocol_fidelity),
        ("reproducibility", reproducibility),
    ];
    let limits = [1, 0, 10, 30, 120, 0, 600, 0, 0];
    let total = criteria.len();
    let mut failed = 0;
    for ((name, f), limit) in criteria.into_iter().zip(limits) {
        let start = Instant::now();
        let outcome = f();
        let took = start.elapsed();
        let over = limit > 0 && took > Duration::from_secs(limit);
        match outcome {
            Ok(detail) if !over => println!("PASS  {name:<30} {:>8.2}s  {detail}", took.as_secs_f64()),
            Ok(detail) => {
                failed += 1;
                println!("FAIL  {name:<30} {:>8.2}s  over the {limit}s limit; {detail}", took.as_secs_f64());
            }
            Err(why) => {
                failed += 1;
                println!("FAIL  {name:<30} {:>8.2}s  {why}", took.as_secs_f64());
            }
        }
    }
    if failed == 0 {
        println!("acceptance: all {} criteria passed", total);
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} of {} criteria failed", total);
        ExitCode::FAILURE
    }
}
