//! Discrete-event simulation of the offloading system and the
//! replication/experiment driver on top of it.

pub mod arrivals;
pub mod engine;
pub mod event;
pub mod experiment;
pub mod lifespan;
pub mod metrics;
pub mod report;
pub mod rng;

pub use arrivals::{load_trace, parse_trace, RateSchedule, TraceError};
pub use engine::{
    run_replication, run_with_policy, ReplicationRun, RunOptions, SimError, TraceRecord,
};
pub use experiment::{
    run_experiment, ExperimentError, ExperimentOptions, ExperimentReport, Metric, PolicyRuns,
    PolicySummary, RelativeMetrics, Summary, BASELINE,
};
pub use lifespan::{sample_lifespan, LifespanError, LifespanFamily, LifespanModel};
pub use metrics::{MetricsAccumulator, TimelineBin};
pub use report::{
    write_relative, write_replications, write_report, write_timeline, SCHEMA_VERSION,
};
