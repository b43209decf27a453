//! The event loop of one replication.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use thiserror::Error;

use super::arrivals::RateSchedule;
use super::event::{EventKind, EventQueue};
use super::lifespan::LifespanFamily;
use super::metrics::MetricsAccumulator;
use super::rng::{stream, Purpose};
use crate::bandit::CapacityCoefficients;
use crate::model::{available_tuples, NetworkConfig, ResourceTuple, StateError, SystemState};
use crate::policies::{Policy, PolicyDecision, PolicyError, PolicySpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("horizon {horizon} and warm-up {warm_up} need horizon > warm-up >= 0")]
    Window { horizon: f64, warm_up: f64 },
    #[error("timeline bin width {0} must be positive")]
    Bin(f64),
    #[error("trace covers {trace} classes but the network has {network}")]
    TraceClasses { trace: usize, network: usize },
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(
        "policy {policy} admitted class {class} onto an unavailable tuple at t={time}: {source}"
    )]
    IllegalAdmit {
        policy: &'static str,
        class: usize,
        time: f64,
        source: StateError,
    },
    #[error("policy {policy} blocked class {class} at t={time} while {free} tuples were free")]
    IllegalBlock {
        policy: &'static str,
        class: usize,
        time: f64,
        free: usize,
    },
    #[error("state invariant broken at t={time}: {source}")]
    Invariant { time: f64, source: StateError },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub horizon: f64,
    pub warm_up: f64,
    pub seed: u64,
    pub replication: u32,
    pub lifespan: LifespanFamily,
    pub schedule: Option<RateSchedule>,
    /// Recheck every load against capacity after each event.
    pub check_invariants: bool,
    pub record_trace: bool,
    pub timeline_bin: Option<f64>,
}

impl RunOptions {
    /// Exponential lifespans, stationary arrivals, 10% warm-up.
    pub fn new(horizon: f64, seed: u64) -> Self {
        Self {
            horizon,
            warm_up: 0.1 * horizon,
            seed,
            replication: 0,
            lifespan: LifespanFamily::Exponential,
            schedule: None,
            check_invariants: false,
            record_trace: false,
            timeline_bin: None,
        }
    }
}

/// One processed event, for determinism checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TraceRecord {
    Arrival {
        time: f64,
        class: usize,
        decision: PolicyDecision,
    },
    Departure {
        time: f64,
        class: usize,
        tuple: ResourceTuple,
    },
}

#[derive(Debug, Clone)]
pub struct ReplicationRun {
    pub metrics: MetricsAccumulator,
    pub trace: Option<Vec<TraceRecord>>,
    pub final_state: SystemState,
    pub final_coefficients: Option<CapacityCoefficients>,
}

struct ArrivalStream {
    rate: f64,
    max_rate: f64,
    rng: ChaCha8Rng,
}

pub fn run_replication(
    config: &NetworkConfig,
    spec: &PolicySpec,
    opts: &RunOptions,
) -> Result<ReplicationRun, SimError> {
    let mut policy = spec.build(config)?;
    run_with_policy(config, policy.as_mut(), opts)
}

pub fn run_with_policy(
    config: &NetworkConfig,
    policy: &mut dyn Policy,
    opts: &RunOptions,
) -> Result<ReplicationRun, SimError> {
    let (horizon, warm_up) = (opts.horizon, opts.warm_up);
    if !(horizon.is_finite() && warm_up >= 0.0 && horizon > warm_up) {
        return Err(SimError::Window { horizon, warm_up });
    }
    if let Some(w) = opts.timeline_bin {
        if !(w.is_finite() && w > 0.0) {
            return Err(SimError::Bin(w));
        }
    }
    let classes = config.num_classes();
    if let Some(s) = &opts.schedule {
        if s.num_classes() != classes {
            return Err(SimError::TraceClasses {
                trace: s.num_classes(),
                network: classes,
            });
        }
    }
    let multiplier = |j: usize, t: f64| opts.schedule.as_ref().map_or(1.0, |s| s.multiplier(j, t));

    let mut arrivals: Vec<ArrivalStream> = (0..classes)
        .map(|j| {
            let rate = config.arrival_rate(j);
            let peak = opts.schedule.as_ref().map_or(1.0, |s| s.max_multiplier(j));
            ArrivalStream {
                rate,
                max_rate: rate * peak,
                rng: stream(opts.seed, opts.replication, j, Purpose::Arrivals),
            }
        })
        .collect();
    let mut lifespans: Vec<ChaCha8Rng> = (0..classes)
        .map(|j| stream(opts.seed, opts.replication, j, Purpose::Lifespans))
        .collect();

    // thinning against the class's peak rate; no uniform is drawn when the
    // current rate is the peak, so an all-ones schedule is the stationary run
    let next_arrival = |s: &mut ArrivalStream, j: usize, now: f64| -> Option<f64> {
        if s.max_rate <= 0.0 {
            return None;
        }
        let mut t = now;
        loop {
            let gap: f64 = Exp1.sample(&mut s.rng);
            t += gap / s.max_rate;
            if t > horizon {
                return None;
            }
            let rate = s.rate * multiplier(j, t);
            if rate >= s.max_rate || s.rng.gen::<f64>() * s.max_rate < rate {
                return Some(t);
            }
        }
    };

    let mut metrics = MetricsAccumulator::new(
        classes,
        horizon,
        warm_up,
        opts.replication,
        opts.seed,
        opts.timeline_bin,
    );
    let mut trace = opts.record_trace.then(Vec::new);
    let mut state = SystemState::empty(config);
    let mut queue = EventQueue::new();
    let static_power = config.total_static_power();

    for (j, s) in arrivals.iter_mut().enumerate() {
        if let Some(t) = next_arrival(s, j, 0.0) {
            queue.push(t, EventKind::Arrival { class: j });
        }
    }

    let mut now = 0.0;
    while let Some(event) = queue.pop() {
        if event.time > horizon {
            break;
        }
        metrics.integrate(
            now,
            event.time,
            state.operational_power(config),
            static_power,
        );
        now = event.time;
        state.clock = now;
        metrics.events += 1;
        match event.kind {
            EventKind::Departure {
                class,
                tuple,
                duration,
            } => {
                state
                    .release(config, class, &tuple)
                    .map_err(|source| SimError::Invariant { time: now, source })?;
                metrics.record_completion(now, duration);
                if let Some(tr) = trace.as_mut() {
                    tr.push(TraceRecord::Departure {
                        time: now,
                        class,
                        tuple,
                    });
                }
            }
            EventKind::Arrival { class } => {
                metrics.record_arrival(now, class);
                let decision = policy.decide(class, &state, config);
                match decision {
                    PolicyDecision::Admit(tuple) => {
                        state.admit(config, class, &tuple).map_err(|source| {
                            SimError::IllegalAdmit {
                                policy: policy.name(),
                                class: class + 1,
                                time: now,
                                source,
                            }
                        })?;
                        metrics.record_admission(now, class, tuple);
                        let mean = 1.0 / config.service_rate(class, &tuple);
                        let duration = mean * opts.lifespan.unit_variate(&mut lifespans[class]);
                        queue.push(
                            now + duration,
                            EventKind::Departure {
                                class,
                                tuple,
                                duration,
                            },
                        );
                    }
                    PolicyDecision::Block => {
                        let free = available_tuples(&state, class, config).len();
                        if free > 0 {
                            return Err(SimError::IllegalBlock {
                                policy: policy.name(),
                                class: class + 1,
                                time: now,
                                free,
                            });
                        }
                        metrics.record_block(now, class);
                    }
                }
                if let Some(tr) = trace.as_mut() {
                    tr.push(TraceRecord::Arrival {
                        time: now,
                        class,
                        decision,
                    });
                }
                if let Some(t) = next_arrival(&mut arrivals[class], class, now) {
                    queue.push(t, EventKind::Arrival { class });
                }
            }
        }
        if opts.check_invariants {
            state
                .verify(config)
                .map_err(|source| SimError::Invariant { time: now, source })?;
        }
    }
    metrics.integrate(now, horizon, state.operational_power(config), static_power);
    metrics.in_flight_at_end = state.in_flight();

    Ok(ReplicationRun {
        metrics,
        trace,
        final_state: state,
        final_coefficients: policy.coefficients().cloned(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ClassSpec, NetworkSpec, Occupancy, ServiceBlock};

    /// M/M/c/c: one class, one edge tuple, `c` servers.
    fn erlang_spec(lambda: f64, u: f64, c: u32) -> NetworkConfig {
        NetworkConfig::from_spec(&NetworkSpec {
            num_areas: 1,
            cloud_backhaul_delay: 0.0,
            sc_capacity: vec![c],
            edge_operational_power: vec![1.0],
            edge_static_power: vec![0.5],
            area_map: vec![1],
            channel_capacity: vec![c + 5, c + 5],
            classes: vec![ClassSpec {
                arrival_rate: lambda,
                occupancy: vec![Occupancy::Units(1)],
                cloud_occupancy: 1,
                cloud_energy_rate: 1.0,
                service: vec![ServiceBlock {
                    start: vec![1],
                    end: vec![2],
                    edge_groups: vec![1],
                    cloud: false,
                    rate: u,
                }],
            }],
        })
        .unwrap()
    }

    #[test]
    fn no_arrivals_means_static_power_only() {
        let cfg = erlang_spec(0.0, 1.0, 1);
        let run =
            run_replication(&cfg, &PolicySpec::HeeAccZero, &RunOptions::new(100.0, 1)).unwrap();
        assert_eq!(run.metrics.energy, 0.5 * 90.0);
        assert_eq!(run.metrics.completions, 0);
        assert_eq!(run.metrics.events, 0);
    }

    #[test]
    fn same_seed_same_run() {
        let cfg = erlang_spec(2.0, 1.0, 3);
        let mut opts = RunOptions::new(500.0, 9);
        opts.record_trace = true;
        let a = run_replication(&cfg, &PolicySpec::HeeAccZero, &opts).unwrap();
        let b = run_replication(&cfg, &PolicySpec::HeeAccZero, &opts).unwrap();
        assert_eq!(a.metrics, b.metrics);
        assert_eq!(a.trace, b.trace);
        opts.seed = 10;
        let c = run_replication(&cfg, &PolicySpec::HeeAccZero, &opts).unwrap();
        assert_ne!(a.trace, c.trace);
    }

    #[test]
    fn flow_balances() {
        let cfg = erlang_spec(3.0, 1.0, 2);
        let mut opts = RunOptions::new(300.0, 4);
        opts.check_invariants = true;
        let run = run_replication(&cfg, &PolicySpec::Mrr, &opts).unwrap();
        assert!(run.metrics.flow_balanced());
        assert!(run.metrics.total_blocks > 0);
    }

    #[test]
    fn rejects_bad_window() {
        let cfg = erlang_spec(1.0, 1.0, 1);
        let mut opts = RunOptions::new(10.0, 1);
        opts.warm_up = 10.0;
        assert!(matches!(
            run_replication(&cfg, &PolicySpec::Mrr, &opts),
            Err(SimError::Window { .. })
        ));
        opts.horizon = 0.0;
        opts.warm_up = 0.0;
        assert!(run_replication(&cfg, &PolicySpec::Mrr, &opts).is_err());
    }

    #[test]
    fn unit_schedule_matches_stationary() {
        let cfg = erlang_spec(2.0, 1.0, 3);
        let mut opts = RunOptions::new(200.0, 3);
        opts.record_trace = true;
        let plain = run_replication(&cfg, &PolicySpec::HeeAccZero, &opts).unwrap();
        opts.schedule = Some(RateSchedule::new(vec![0.0, 50.0], vec![vec![1.0, 1.0]]).unwrap());
        let traced = run_replication(&cfg, &PolicySpec::HeeAccZero, &opts).unwrap();
        assert_eq!(plain.trace, traced.trace);
        assert_eq!(plain.metrics, traced.metrics);
    }

    struct AlwaysBlock;

    impl Policy for AlwaysBlock {
        fn name(&self) -> &'static str {
            "always-block"
        }
        fn decide(&mut self, _: usize, _: &SystemState, _: &NetworkConfig) -> PolicyDecision {
            PolicyDecision::Block
        }
    }

    struct Greedy;

    impl Policy for Greedy {
        fn name(&self) -> &'static str {
            "greedy"
        }
        fn decide(
            &mut self,
            class: usize,
            _: &SystemState,
            config: &NetworkConfig,
        ) -> PolicyDecision {
            PolicyDecision::Admit(config.eligible(class)[0])
        }
    }

    #[test]
    fn engine_catches_illegal_decisions() {
        let cfg = erlang_spec(5.0, 0.1, 1);
        let opts = RunOptions::new(100.0, 2);
        assert!(matches!(
            run_with_policy(&cfg, &mut AlwaysBlock, &opts),
            Err(SimError::IllegalBlock { .. })
        ));
        assert!(matches!(
            run_with_policy(&cfg, &mut Greedy, &opts),
            Err(SimError::IllegalAdmit { .. })
        ));
    }
}
