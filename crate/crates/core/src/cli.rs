//! Command-line interface.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::data_pool::make_synthetic;
use crate::error::{Error, Result};
use crate::harness::{
    apply_override, emit_results, format_sig12, parse_kv, resolved_text, run_comparison, synthetic_from_map,
    ComparisonReport, ConfigMap, ExperimentConfig, SuiteConfig,
};
use crate::selftest;

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "EG_ACTIVE_OUT";

#[derive(Debug, Parser)]
#[command(name = "eg-active", version, about = "Active learning with tuned random exploration")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one group/strategy combination.
    Run(RunArgs),
    /// Run a suite of curves with common random numbers.
    Compare(CompareArgs),
    /// Write a synthetic dataset as CSV.
    Synth(SynthArgs),
    /// Run built-in checks.
    Selftest,
}

#[derive(Debug, Args)]
struct Overrides {
    /// Random seed for replicate 0.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (defaults to $EG_ACTIVE_OUT, then ./results).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    checkpoint_every: Option<usize>,
    #[arg(long)]
    replicates: Option<usize>,
    /// Dataset CSV, or `synthetic` to use the `synth.*` keys.
    #[arg(long)]
    dataset: Option<String>,
    /// Any config key, as key=value. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Config file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// pure, fixed_eps, osugi or eg.
    #[arg(long)]
    group: Option<String>,
    /// us, qbc, wd or random.
    #[arg(long)]
    strategy: Option<String>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// Suite file: shared keys plus a `curves` list.
    #[arg(long)]
    suite: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 3)]
    clusters: usize,
    #[arg(long, default_value_t = 300)]
    per_cluster: usize,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long)]
    spread: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

/// Runs the CLI on `argv` (program name first) and returns the exit code:
/// 0 on success, 2 for usage errors, 1 for anything else.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let outcome = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Synth(a) => cmd_synth(a).map_err(Failure::from),
        Command::Selftest => cmd_selftest(),
    };
    match outcome {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nUsage: eg-active <run|compare|synth|selftest> [OPTIONS]\nTry 'eg-active --help' for more information.");
            2
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn read_map(path: &Path) -> Result<ConfigMap> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_kv(&text).map_err(|e| match e {
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    })
}

fn apply_overrides(map: &mut ConfigMap, o: &Overrides) -> Result<()> {
    for kv in &o.set {
        apply_override(map, kv)?;
    }
    let mut put = |k: &str, v: Option<String>| {
        if let Some(v) = v {
            map.insert(k.to_string(), v);
        }
    };
    put("seed", o.seed.map(|v| v.to_string()));
    put("budget", o.budget.map(|v| v.to_string()));
    put("checkpoint_every", o.checkpoint_every.map(|v| v.to_string()));
    put("replicates", o.replicates.map(|v| v.to_string()));
    put("dataset", o.dataset.clone());
    Ok(())
}

fn out_dir(o: &Overrides) -> PathBuf {
    o.out
        .clone()
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("results"))
}

fn require_dataset(map: &ConfigMap) -> std::result::Result<(), Failure> {
    match map.get("dataset") {
        Some(d) if !d.is_empty() => Ok(()),
        _ => Err(Failure::Usage("no dataset given (use --dataset or a `dataset` key)".into())),
    }
}

fn execute(configs: &[ExperimentConfig], out: &Path) -> Result<ComparisonReport> {
    let comparison = run_comparison(configs)?;
    let written = emit_results(&comparison.report, &comparison.runs, &resolved_text(configs), out)?;
    print_report(&comparison.report);
    println!("wrote {} files to {}", written.len(), out.display());
    Ok(comparison.report)
}

fn print_report(report: &ComparisonReport) {
    println!("{:<20} {:>16} {:>16} {:>10} {:>4}", "curve", "avg_regret", "sd", "factor", "n");
    for c in &report.curves {
        println!(
            "{:<20} {:>16} {:>16} {:>10} {:>4}",
            c.label,
            format_sig12(c.average_regret_mean),
            format_sig12(c.average_regret_sd),
            c.factor_vs_baseline.map(format_sig12).unwrap_or_else(|| "-".into()),
            c.n
        );
    }
}

fn cmd_run(a: RunArgs) -> std::result::Result<(), Failure> {
    let mut map = match &a.config {
        Some(p) => read_map(p)?,
        None => ConfigMap::new(),
    };
    apply_overrides(&mut map, &a.overrides)?;
    if let Some(g) = &a.group {
        map.insert("group".into(), g.clone());
    }
    if let Some(s) = &a.strategy {
        map.insert("strategy".into(), s.clone());
    }
    if map.contains_key("curves") {
        return Err(Failure::Usage("`curves` belongs in a suite file; use `compare`".into()));
    }
    require_dataset(&map)?;
    let cfg = ExperimentConfig::from_map(&map)?;
    execute(std::slice::from_ref(&cfg), &out_dir(&a.overrides))?;
    Ok(())
}

fn cmd_compare(a: CompareArgs) -> std::result::Result<(), Failure> {
    let mut map = read_map(&a.suite)?;
    apply_overrides(&mut map, &a.overrides)?;
    require_dataset(&map)?;
    let suite = SuiteConfig::from_map(map)?;
    execute(&suite.experiments, &out_dir(&a.overrides))?;
    Ok(())
}

fn cmd_synth(a: SynthArgs) -> Result<()> {
    let mut map = ConfigMap::new();
    map.insert("synth.clusters".into(), a.clusters.to_string());
    map.insert("synth.per_cluster".into(), a.per_cluster.to_string());
    map.insert("synth.dim".into(), a.dim.to_string());
    map.insert("synth.seed".into(), a.seed.to_string());
    if let Some(s) = a.spread {
        map.insert("synth.spread".into(), s.to_string());
    }
    let ds = make_synthetic(&synthetic_from_map(&map)?)?;
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    ds.save_csv(&a.out)?;
    println!("wrote {} examples ({} classes) to {}", ds.len(), ds.num_classes(), a.out.display());
    Ok(())
}

fn cmd_selftest() -> std::result::Result<(), Failure> {
    let mut total = 0;
    let mut failed = 0;
    for c in selftest::run_all() {
        match &c.outcome {
            Ok(()) => println!("ok    {:<20} {} invariants", c.name, c.invariants),
            Err(e) => {
                failed += 1;
                println!("FAIL  {:<20} {e}", c.name);
            }
        }
        total += c.invariants;
    }
    println!("{total} invariants checked");
    if failed > 0 {
        return Err(Failure::Run(Error::Validation(format!("{failed} self-checks failed"))));
    }
    Ok(())
}
