use std::fs;

use eg_active::cli::cli_main;

#[test]
fn synth_then_run_produces_traces() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    let out = dir.path().join("out");
    let code = cli_main(["eg-active", "synth", "--clusters", "3", "--per-cluster", "60", "--out", data.to_str().unwrap()]);
    assert_eq!(code, 0);
    let code = cli_main([
        "eg-active",
        "run",
        "--dataset",
        data.to_str().unwrap(),
        "--strategy",
        "us",
        "--group",
        "eg",
        "--budget",
        "40",
        "--checkpoint-every",
        "20",
        "--set",
        "model.epochs=30",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let curve = fs::read_to_string(out.join("curve_eg_active_us.csv")).unwrap();
    assert_eq!(curve.lines().next(), Some("iteration,mean_regret,sd_regret,n"));
    assert_eq!(curve.lines().count(), 3);
    let events = fs::read_to_string(out.join("events").join("eg_active_us_rep0.jsonl")).unwrap();
    assert_eq!(events.lines().count(), 40);
    let config = fs::read_to_string(out.join("config.txt")).unwrap();
    assert!(config.contains("eg.iterations = 40"));
    assert!(config.contains("budget = 40"));
}

#[test]
fn config_file_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        "# small run\ndataset = synthetic\nsynth.per_cluster = 50\ngroup = fixed_eps\nexplore.epsilon = 0.7\n\
         strategy = wd\nbudget = 500\ncheckpoint_every = 100\nmodel.epochs = 20\n",
    )
    .unwrap();
    let out = dir.path().join("o");
    let code = cli_main([
        "eg-active", "run", "--config", cfg.to_str().unwrap(), "--budget", "30", "--checkpoint-every", "10",
        "--seed", "3", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let config = fs::read_to_string(out.join("config.txt")).unwrap();
    assert!(config.contains("# curve: 0.3-WD"));
    assert!(config.contains("seed = 3"));
    assert_eq!(fs::read_to_string(out.join("curve_0_3_wd.csv")).unwrap().lines().count(), 4);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(cli_main(["eg-active", "run", "--strategy", "us"]), 2);
    assert_eq!(cli_main(["eg-active", "frobnicate"]), 2);
    assert_eq!(cli_main(["eg-active", "run", "--no-such-flag"]), 2);
    assert_eq!(cli_main(["eg-active"]), 2);
}

#[test]
fn runtime_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.csv");
    assert_eq!(cli_main(["eg-active", "run", "--dataset", missing.to_str().unwrap()]), 1);
    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "dataset = synthetic\nnot_a_key = 1\n").unwrap();
    assert_eq!(cli_main(["eg-active", "run", "--config", bad.to_str().unwrap()]), 1);
    assert_eq!(
        cli_main(["eg-active", "run", "--dataset", "synthetic", "--group", "eg", "--strategy", "random"]),
        1
    );
}

#[test]
fn selftest_passes() {
    assert_eq!(cli_main(["eg-active", "selftest"]), 0);
}
