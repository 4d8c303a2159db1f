//! Result files. Every float is written with 12 significant digits so that
//! reruns produce identical bytes.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{ComparisonReport, CurvePoint, ReplicateRun};
use crate::error::{Error, Result};

/// Formats like C's `%.12g`.
pub fn format_sig12(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..12).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (11 - exp).max(0) as usize;
    trim_zeros(&format!("{v:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Rounds to the value [`format_sig12`] would print.
pub fn round_sig12(v: f64) -> f64 {
    if !v.is_finite() {
        return v;
    }
    format_sig12(v).parse().unwrap_or(v)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        other => Error::Validation(format!("{}: {other:?}", path.display())),
    }
}

/// Writes event logs, per-curve CSVs, the summary CSV and the resolved
/// config under `out_dir`. Returns the paths written, in order.
pub fn emit_results(
    report: &ComparisonReport,
    runs: &[Vec<ReplicateRun>],
    resolved_config: &str,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    if runs.len() != report.curves.len() {
        return Err(Error::Validation(format!(
            "{} curves but {} run sets",
            report.curves.len(),
            runs.len()
        )));
    }
    let events_dir = out_dir.join("events");
    fs::create_dir_all(&events_dir).map_err(|e| Error::io(&events_dir, e))?;
    let mut written = Vec::new();

    for (curve, curve_runs) in report.curves.iter().zip(runs) {
        for run in curve_runs {
            let path = events_dir.join(format!("{}_rep{}.jsonl", curve.slug, run.trace.replicate));
            let mut w = create(&path)?;
            for ev in &run.events {
                serde_json::to_writer(&mut w, ev)
                    .map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?;
                w.write_all(b"\n").map_err(|e| Error::io(&path, e))?;
            }
            w.flush().map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }

        let path = out_dir.join(format!("curve_{}.csv", curve.slug));
        let mut w = csv::Writer::from_writer(create(&path)?);
        w.write_record(["iteration", "mean_regret", "sd_regret", "n"])
            .map_err(|e| csv_err(&path, e))?;
        for p in &curve.points {
            w.write_record([
                p.iteration.to_string(),
                format_sig12(p.mean),
                format_sig12(p.sd),
                p.n.to_string(),
            ])
            .map_err(|e| csv_err(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }

    let path = out_dir.join("summary.csv");
    let mut w = csv::Writer::from_writer(create(&path)?);
    w.write_record([
        "label",
        "group",
        "strategy",
        "average_regret_mean",
        "average_regret_sd",
        "final_regret_mean",
        "factor_vs_baseline",
        "n",
        "truncated_runs",
    ])
    .map_err(|e| csv_err(&path, e))?;
    for c in &report.curves {
        w.write_record([
            c.label.clone(),
            c.group.clone(),
            c.strategy.clone(),
            format_sig12(c.average_regret_mean),
            format_sig12(c.average_regret_sd),
            format_sig12(c.final_regret_mean),
            c.factor_vs_baseline.map(format_sig12).unwrap_or_default(),
            c.n.to_string(),
            c.truncated_runs.to_string(),
        ])
        .map_err(|e| csv_err(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    written.push(path);

    let path = out_dir.join("config.txt");
    fs::write(&path, resolved_config).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(written)
}

/// Reads a curve CSV back.
pub fn read_curve_csv(path: &Path) -> Result<Vec<CurvePoint>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut points = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = i + 2;
        if rec.len() != 4 {
            return Err(Error::Schema {
                line,
                expected: 4,
                found: rec.len(),
            });
        }
        let field = |k: usize| -> Result<&str> { Ok(&rec[k]) };
        let bad = |what: &str| Error::Parse {
            line,
            message: format!("bad {what}"),
        };
        points.push(CurvePoint {
            iteration: field(0)?.parse().map_err(|_| bad("iteration"))?,
            mean: field(1)?.parse().map_err(|_| bad("mean_regret"))?,
            sd: field(2)?.parse().map_err(|_| bad("sd_regret"))?,
            n: field(3)?.parse().map_err(|_| bad("n"))?,
        });
    }
    Ok(points)
}
