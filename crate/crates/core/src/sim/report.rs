//! Delimited output tables.
//!
//! Every table starts with a `schema_version` column. New columns are only
//! ever appended, so readers keyed by column name keep working.
//!
//! * `replications.csv`: one row per policy × replication × metric
//!   (`row = replication`), then one row per policy × metric with the mean and
//!   95% half-width (`row = aggregate`).
//! * `relative.csv`: one row per policy with conservation and
//!   throughput-per-watt gain against the baseline, plus headline means.
//! * `timeline.csv`: per policy and time bin, replication means of power,
//!   throughput per watt and delay.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::experiment::{ExperimentReport, Metric};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
struct ReplicationRow<'a> {
    schema_version: u32,
    policy: &'a str,
    row: &'a str,
    replication: Option<u32>,
    seed: u64,
    metric: &'a str,
    value: f64,
    half_width: Option<f64>,
}

#[derive(Serialize)]
struct RelativeRow<'a> {
    schema_version: u32,
    policy: &'a str,
    conservation: f64,
    conservation_half_width: f64,
    throughput_per_watt_gain: f64,
    throughput_per_watt_gain_half_width: f64,
    average_power: f64,
    operational_power: f64,
    throughput: f64,
    throughput_per_watt: f64,
    average_delay: f64,
    blocking_rate: f64,
}

#[derive(Serialize)]
struct TimelineRow<'a> {
    schema_version: u32,
    policy: &'a str,
    bin_start: f64,
    bin_end: f64,
    power: f64,
    throughput_per_watt: f64,
    average_delay: f64,
    completions: f64,
}

pub fn write_replications<W: Write>(report: &ExperimentReport, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let seed = report.options.seed;
    for p in &report.policies {
        for m in &p.runs {
            for metric in Metric::ALL {
                w.serialize(ReplicationRow {
                    schema_version: SCHEMA_VERSION,
                    policy: p.name(),
                    row: "replication",
                    replication: Some(m.replication),
                    seed,
                    metric: metric.name(),
                    value: metric.of(m),
                    half_width: None,
                })?;
            }
        }
    }
    for s in &report.summaries {
        for metric in Metric::ALL {
            let v = s.get(metric);
            w.serialize(ReplicationRow {
                schema_version: SCHEMA_VERSION,
                policy: s.policy,
                row: "aggregate",
                replication: None,
                seed,
                metric: metric.name(),
                value: v.mean,
                half_width: Some(v.half_width),
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_relative<W: Write>(report: &ExperimentReport, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for rel in report.relative.iter().flatten() {
        let s = report.summary(rel.policy).expect("summary per policy");
        w.serialize(RelativeRow {
            schema_version: SCHEMA_VERSION,
            policy: rel.policy,
            conservation: rel.conservation,
            conservation_half_width: rel.conservation_half_width,
            throughput_per_watt_gain: rel.throughput_per_watt_gain,
            throughput_per_watt_gain_half_width: rel.throughput_per_watt_gain_half_width,
            average_power: s.get(Metric::AveragePower).mean,
            operational_power: s.get(Metric::OperationalPower).mean,
            throughput: s.get(Metric::Throughput).mean,
            throughput_per_watt: s.get(Metric::ThroughputPerWatt).mean,
            average_delay: s.get(Metric::AverageDelay).mean,
            blocking_rate: s.get(Metric::BlockingRate).mean,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_timeline<W: Write>(report: &ExperimentReport, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in &report.policies {
        let Some(first) = p.runs.first() else {
            continue;
        };
        let n = p.runs.len() as f64;
        for b in 0..first.timeline.len() {
            let mean = |f: &dyn Fn(&super::metrics::TimelineBin) -> f64| {
                p.runs.iter().map(|m| f(&m.timeline[b])).sum::<f64>() / n
            };
            w.serialize(TimelineRow {
                schema_version: SCHEMA_VERSION,
                policy: p.name(),
                bin_start: first.timeline[b].start,
                bin_end: first.timeline[b].end,
                power: mean(&|t| t.power()),
                throughput_per_watt: mean(&|t| t.throughput_per_watt()),
                average_delay: mean(&|t| t.average_delay()),
                completions: mean(&|t| t.completions as f64),
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes every non-empty table into `dir`; returns the paths written.
pub fn write_report(report: &ExperimentReport, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut emit = |name: &str, f: &dyn Fn(File) -> csv::Result<()>| -> std::io::Result<()> {
        let path = dir.join(name);
        f(File::create(&path)?).map_err(std::io::Error::other)?;
        written.push(path);
        Ok(())
    };
    emit("replications.csv", &|f| write_replications(report, f))?;
    if report.relative.is_some() {
        emit("relative.csv", &|f| write_relative(report, f))?;
    }
    if report.options.timeline_bin.is_some() {
        emit("timeline.csv", &|f| write_timeline(report, f))?;
    }
    Ok(written)
}
