//! Replicated runs of several policies and their comparison.

use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use super::arrivals::RateSchedule;
use super::engine::{run_replication, RunOptions, SimError};
use super::lifespan::LifespanFamily;
use super::metrics::MetricsAccumulator;
use crate::model::NetworkConfig;
use crate::policies::PolicySpec;

pub const BASELINE: &str = "nrm-vne";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExperimentError {
    #[error("need at least 2 replications, got {0}")]
    Replications(u32),
    #[error("no policies to run")]
    NoPolicies,
    #[error("relative metrics need the {BASELINE} baseline in the policy list")]
    MissingBaseline,
    #[error("policy {policy}, replication {replication}: {source}")]
    Run {
        policy: &'static str,
        replication: u32,
        source: SimError,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOptions {
    pub replications: u32,
    pub horizon: f64,
    pub warm_up: f64,
    pub seed: u64,
    pub lifespan: LifespanFamily,
    pub schedule: Option<RateSchedule>,
    pub timeline_bin: Option<f64>,
    pub check_invariants: bool,
    pub require_baseline: bool,
}

impl ExperimentOptions {
    pub fn new(replications: u32, horizon: f64, seed: u64) -> Self {
        Self {
            replications,
            horizon,
            warm_up: 0.1 * horizon,
            seed,
            lifespan: LifespanFamily::Exponential,
            schedule: None,
            timeline_bin: None,
            check_invariants: false,
            require_baseline: false,
        }
    }

    fn run_options(&self, replication: u32) -> RunOptions {
        RunOptions {
            horizon: self.horizon,
            warm_up: self.warm_up,
            seed: self.seed,
            replication,
            lifespan: self.lifespan,
            schedule: self.schedule.clone(),
            check_invariants: self.check_invariants,
            record_trace: false,
            timeline_bin: self.timeline_bin,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Metric {
    AveragePower,
    OperationalPower,
    Throughput,
    ThroughputPerWatt,
    AverageDelay,
    BlockingRate,
}

impl Metric {
    pub const ALL: [Metric; 6] = [
        Metric::AveragePower,
        Metric::OperationalPower,
        Metric::Throughput,
        Metric::ThroughputPerWatt,
        Metric::AverageDelay,
        Metric::BlockingRate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::AveragePower => "average_power",
            Metric::OperationalPower => "operational_power",
            Metric::Throughput => "throughput",
            Metric::ThroughputPerWatt => "throughput_per_watt",
            Metric::AverageDelay => "average_delay",
            Metric::BlockingRate => "blocking_rate",
        }
    }

    pub fn of(self, m: &MetricsAccumulator) -> f64 {
        match self {
            Metric::AveragePower => m.average_power(),
            Metric::OperationalPower => m.operational_power(),
            Metric::Throughput => m.throughput(),
            Metric::ThroughputPerWatt => m.throughput_per_watt(),
            Metric::AverageDelay => m.average_delay(),
            Metric::BlockingRate => m.blocking_rate(),
        }
    }
}

/// Sample mean and Student-t 95% half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub half_width: f64,
    pub n: usize,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let half_width = if n < 2 {
            f64::NAN
        } else {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
                .expect("n >= 2")
                .inverse_cdf(0.975);
            t * (var / n as f64).sqrt()
        };
        Self {
            mean,
            half_width,
            n,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PolicyRuns {
    pub spec: PolicySpec,
    pub runs: Vec<MetricsAccumulator>,
}

impl PolicyRuns {
    pub fn name(&self) -> &'static str {
        self.spec.name()
    }

    pub fn values(&self, metric: Metric) -> Vec<f64> {
        self.runs.iter().map(|m| metric.of(m)).collect()
    }

    pub fn summary(&self) -> PolicySummary {
        PolicySummary {
            policy: self.name(),
            stats: Metric::ALL.map(|m| Summary::of(&self.values(m))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicySummary {
    pub policy: &'static str,
    stats: [Summary; 6],
}

impl PolicySummary {
    pub fn get(&self, metric: Metric) -> Summary {
        self.stats[metric as usize]
    }
}

/// One policy against the baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct RelativeMetrics {
    pub policy: &'static str,
    /// (P_base − P) / P_base on mean operational power.
    pub conservation: f64,
    /// Half-width of the per-replication paired conservation values.
    pub conservation_half_width: f64,
    /// (T − T_base) / T_base on mean throughput per watt.
    pub throughput_per_watt_gain: f64,
    pub throughput_per_watt_gain_half_width: f64,
}

/// (base − x) / base.
pub fn relative_conservation(base: f64, x: f64) -> f64 {
    (base - x) / base
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub options: ExperimentOptions,
    pub policies: Vec<PolicyRuns>,
    pub summaries: Vec<PolicySummary>,
    pub relative: Option<Vec<RelativeMetrics>>,
}

impl ExperimentReport {
    pub fn policy(&self, name: &str) -> Option<&PolicyRuns> {
        self.policies.iter().find(|p| p.name() == name)
    }

    pub fn summary(&self, name: &str) -> Option<&PolicySummary> {
        self.summaries.iter().find(|p| p.policy == name)
    }

    pub fn relative(&self, name: &str) -> Option<&RelativeMetrics> {
        self.relative.as_ref()?.iter().find(|r| r.policy == name)
    }
}

fn relative_to(base: &PolicyRuns, other: &PolicyRuns) -> RelativeMetrics {
    let bp = base.values(Metric::OperationalPower);
    let op = other.values(Metric::OperationalPower);
    let bt = base.values(Metric::ThroughputPerWatt);
    let ot = other.values(Metric::ThroughputPerWatt);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let paired_cons: Vec<f64> = bp
        .iter()
        .zip(&op)
        .map(|(b, x)| relative_conservation(*b, *x))
        .collect();
    let paired_gain: Vec<f64> = bt.iter().zip(&ot).map(|(b, x)| (x - b) / b).collect();
    RelativeMetrics {
        policy: other.name(),
        conservation: relative_conservation(mean(&bp), mean(&op)),
        conservation_half_width: Summary::of(&paired_cons).half_width,
        throughput_per_watt_gain: (mean(&ot) - mean(&bt)) / mean(&bt),
        throughput_per_watt_gain_half_width: Summary::of(&paired_gain).half_width,
    }
}

pub fn run_experiment(
    config: &NetworkConfig,
    policies: &[PolicySpec],
    opts: &ExperimentOptions,
) -> Result<ExperimentReport, ExperimentError> {
    if opts.replications < 2 {
        return Err(ExperimentError::Replications(opts.replications));
    }
    if policies.is_empty() {
        return Err(ExperimentError::NoPolicies);
    }
    let has_base = policies.iter().any(|p| p.name() == BASELINE);
    if opts.require_baseline && !has_base {
        return Err(ExperimentError::MissingBaseline);
    }
    let jobs: Vec<(usize, u32)> = (0..policies.len())
        .flat_map(|p| (0..opts.replications).map(move |r| (p, r)))
        .collect();
    let results: Vec<Result<MetricsAccumulator, ExperimentError>> = jobs
        .par_iter()
        .map(|&(p, r)| {
            run_replication(config, &policies[p], &opts.run_options(r))
                .map(|run| run.metrics)
                .map_err(|source| ExperimentError::Run {
                    policy: policies[p].name(),
                    replication: r,
                    source,
                })
        })
        .collect();
    let mut grouped: Vec<PolicyRuns> = policies
        .iter()
        .map(|spec| PolicyRuns {
            spec: spec.clone(),
            runs: Vec::new(),
        })
        .collect();
    for ((p, _), res) in jobs.iter().zip(results) {
        grouped[*p].runs.push(res?);
    }
    let summaries = grouped.iter().map(PolicyRuns::summary).collect();
    let relative = has_base.then(|| {
        let base = grouped
            .iter()
            .find(|p| p.name() == BASELINE)
            .expect("checked above");
        grouped.iter().map(|p| relative_to(base, p)).collect()
    });
    Ok(ExperimentReport {
        options: opts.clone(),
        policies: grouped,
        summaries,
        relative,
    })
}
