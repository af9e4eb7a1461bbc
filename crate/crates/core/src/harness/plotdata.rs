//! Turn analyze report JSON into flat CSV tables for plotting.
//!
//! Each report file is an envelope `{"figure": "...", "report": {...}}`;
//! the figure name picks both the expected report schema and the CSV
//! file name written into the output directory.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::analyze::{BiasReport, FilterReport, ProportionReport, ScalingReport};
use crate::{Error, Result};

#[derive(Debug, Deserialize)]
struct Envelope {
    figure: String,
    report: serde_json::Value,
}

fn parse_report<T: serde::de::DeserializeOwned>(
    path: &Path,
    figure: &str,
    report: serde_json::Value,
) -> Result<T> {
    serde_json::from_value(report).map_err(|e| {
        Error::Data(format!(
            "{}: malformed {figure} report: {e}",
            path.display()
        ))
    })
}

/// CSV-quote a field when needed (commas, quotes, newlines).
fn csv_field(value: &str) -> String {
    if value.contains([',', '"', '\n']) {
        format!("\"{}\"", value.replace('"', "\"\""))
    } else {
        value.to_string()
    }
}

fn bias_csv(report: &BiasReport) -> String {
    let mut out = String::from("strategy,hypothesis_id,estimate_mean,exact,deviation\n");
    for strategy in &report.strategies {
        for probe in &strategy.probes {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                csv_field(&strategy.strategy),
                csv_field(&probe.hypothesis),
                probe.estimate_mean,
                probe.exact,
                (probe.estimate_mean - probe.exact).abs(),
            ));
        }
    }
    out
}

fn filter_csv(report: &FilterReport) -> String {
    let mut out = String::from(
        "proxy_id,proxy_samples,retained_exact_mean,oracle_overlap,rank_correlation,wall_ms\n",
    );
    for row in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            csv_field(&row.proxy_id),
            row.proxy_samples,
            row.retained_exact_mean,
            row.oracle_overlap,
            row.rank_correlation,
            row.wall_ms,
        ));
    }
    out
}

fn proportions_csv(report: &ProportionReport) -> String {
    let mut out = String::from("strategy,bin_low,bin_high,count\n");
    let width = 1.0 / report.bins as f64;
    for strategy in &report.per_strategy {
        for (bin, count) in strategy.counts.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                csv_field(&strategy.strategy),
                bin as f64 * width,
                (bin + 1) as f64 * width,
                count,
            ));
        }
    }
    out
}

fn scaling_csv(report: &ScalingReport) -> String {
    let mut out = String::from("n,s,mean_exact,std_exact,utility_calls\n");
    for cell in &report.cells {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            cell.n, cell.s, cell.mean_exact, cell.std_exact, cell.utility_calls,
        ));
    }
    out
}

/// Convert each report file into `<figure>.csv` under `out_dir`. Returns the
/// paths written. An empty report (e.g. a sweep with no cells) still yields
/// its header row.
pub fn emit_plot_data(reports: &[PathBuf], out_dir: &Path) -> Result<Vec<PathBuf>> {
    if reports.is_empty() {
        return Err(Error::Config("plotdata needs at least one report file".into()));
    }
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for path in reports {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Data(format!("cannot read report {}: {e}", path.display()))
        })?;
        let envelope: Envelope = serde_json::from_str(&text).map_err(|e| {
            Error::Data(format!("{}: not a report envelope: {e}", path.display()))
        })?;
        let csv = match envelope.figure.as_str() {
            "bias" => bias_csv(&parse_report(path, "bias", envelope.report)?),
            "filter" => filter_csv(&parse_report(path, "filter", envelope.report)?),
            "proportions" => {
                proportions_csv(&parse_report(path, "proportions", envelope.report)?)
            }
            "scaling" => scaling_csv(&parse_report(path, "scaling", envelope.report)?),
            other => {
                return Err(Error::Data(format!(
                    "{}: unknown figure {other:?}",
                    path.display()
                )))
            }
        };
        let out_path = out_dir.join(format!("{}.csv", envelope.figure));
        std::fs::write(&out_path, csv)?;
        written.push(out_path);
    }
    Ok(written)
}
