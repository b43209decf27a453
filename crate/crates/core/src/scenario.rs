//! Scenario files: a network, the policies to compare, and the run
//! controls, stored as TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ClassSpec, ConfigError, NetworkConfig, NetworkSpec, Occupancy, ServiceBlock};
use crate::policies::{LearnerParams, PolicySpec};
use crate::sim::{load_trace, ExperimentOptions, LifespanFamily, RateSchedule};

pub const SCENARIO_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("invalid network: {0}")]
    Network(#[from] ConfigError),
}

fn invalid(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid(msg.into())
}

/// Run controls. Exactly one of `rho` and `rho_per_class` is set; together
/// with `scale` they record how the network was generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    /// Simulated seconds per replication.
    pub horizon: f64,
    /// Defaults to 10% of the horizon.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warm_up: Option<f64>,
    pub replications: u32,
    pub seed: u64,
    #[serde(default)]
    pub lifespan: LifespanFamily,
    #[serde(default = "one")]
    pub scale: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_per_class: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timeline_bin: Option<f64>,
}

fn one() -> u32 {
    1
}

impl ExperimentSpec {
    pub fn warm_up(&self) -> f64 {
        self.warm_up.unwrap_or(0.1 * self.horizon)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.scale < 1 {
            return Err(invalid("scale h must be at least 1"));
        }
        match (&self.rho, &self.rho_per_class) {
            (Some(_), Some(_)) => {
                return Err(invalid("give either rho or rho_per_class, not both"))
            }
            (None, None) => return Err(invalid("one of rho or rho_per_class is required")),
            (Some(r), None) if !(r.is_finite() && *r > 0.0) => {
                return Err(invalid(format!("rho must be positive, got {r}")))
            }
            (None, Some(v)) if v.iter().any(|r| !(r.is_finite() && *r > 0.0)) => {
                return Err(invalid("every rho_per_class entry must be positive"))
            }
            _ => {}
        }
        let (h, w) = (self.horizon, self.warm_up());
        if !(h.is_finite() && w >= 0.0 && h > w) {
            return Err(invalid(format!(
                "need horizon > warm_up >= 0, got horizon {h}, warm_up {w}"
            )));
        }
        if self.replications < 2 {
            return Err(invalid("replications must be at least 2"));
        }
        if let Some(b) = self.timeline_bin {
            if !(b.is_finite() && b > 0.0) {
                return Err(invalid("timeline_bin must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub schema_version: u32,
    /// Arrival-rate trace; relative paths resolve against the scenario file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub experiment: ExperimentSpec,
    pub policies: Vec<PolicySpec>,
    pub network: NetworkSpec,
}

/// Everything a run needs, resolved and checked.
#[derive(Debug, Clone)]
pub struct ValidatedScenario {
    pub config: NetworkConfig,
    pub policies: Vec<PolicySpec>,
    pub schedule: Option<RateSchedule>,
    pub options: ExperimentOptions,
}

impl ScenarioSpec {
    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_toml(&text)
    }

    /// Checks every invariant without running anything. `base` anchors a
    /// relative trace path.
    pub fn validate(&self, base: Option<&Path>) -> Result<ValidatedScenario, ScenarioError> {
        if self.schema_version != SCENARIO_SCHEMA_VERSION {
            return Err(invalid(format!(
                "schema_version {} is not supported (expected {SCENARIO_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        self.experiment.validate()?;
        let config = NetworkConfig::from_spec(&self.network)?;
        if let Some(r) = &self.experiment.rho_per_class {
            if r.len() != config.num_classes() {
                return Err(invalid(format!(
                    "rho_per_class has {} entries for {} classes",
                    r.len(),
                    config.num_classes()
                )));
            }
        }
        if self.policies.is_empty() {
            return Err(invalid("no policies listed"));
        }
        for p in &self.policies {
            p.build(&config)
                .map_err(|e| invalid(format!("policy {}: {e}", p.name())))?;
        }
        let schedule = match &self.trace {
            Some(path) => {
                let full = match base {
                    Some(dir) if path.is_relative() => dir.join(path),
                    _ => path.clone(),
                };
                let s = load_trace(&full).map_err(|e| invalid(e.to_string()))?;
                if s.num_classes() != config.num_classes() {
                    return Err(invalid(format!(
                        "trace covers {} classes, network has {}",
                        s.num_classes(),
                        config.num_classes()
                    )));
                }
                Some(s)
            }
            None => None,
        };
        let e = &self.experiment;
        let options = ExperimentOptions {
            replications: e.replications,
            horizon: e.horizon,
            warm_up: e.warm_up(),
            seed: e.seed,
            lifespan: e.lifespan,
            schedule: schedule.clone(),
            timeline_bin: e.timeline_bin,
            check_invariants: false,
            require_baseline: false,
        };
        Ok(ValidatedScenario {
            config,
            policies: self.policies.clone(),
            schedule,
            options,
        })
    }
}

/// Constants of the reference scenario, before scaling by h.
pub mod reference {
    /// N̄ for the 20 base channel slots.
    pub const CHANNEL_CAPACITY: [u32; 20] =
        [8, 5, 5, 7, 6, 5, 5, 6, 5, 7, 9, 6, 6, 5, 5, 9, 9, 9, 5, 7];
    pub const SC_CAPACITY: [u32; 3] = [5, 5, 8];
    pub const OPERATIONAL_POWER: [f64; 3] = [3.362, 3.996, 8.979];
    pub const ARRIVAL_RATE: [f64; 4] = [1.097, 1.026, 1.456, 1.383];
    /// w_{j,k}; `None` marks a forbidden class/group pair.
    pub const OCCUPANCY: [[Option<u32>; 3]; 4] = [
        [Some(3), None, Some(3)],
        [Some(4), Some(4), Some(4)],
        [None, None, Some(2)],
        [None, None, Some(1)],
    ];
    /// Cloud watts per unit of ρ/λ: ε̄_j = CLOUD_POWER · ρ_j / λ_j.
    pub const CLOUD_POWER: f64 = 20.1;
    pub const START_SLOTS: [&[usize]; 4] = [
        &[3, 5, 6, 7, 10, 12, 13, 14, 20],
        &[2, 9, 17, 19],
        &[2, 9, 17, 19],
        &[1, 4, 6, 17, 18],
    ];
    pub const END_SLOTS: [&[usize]; 4] = [
        &[3, 5, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16],
        &[2, 7, 8, 9, 10, 11, 12, 16, 19],
        &[2, 8, 9, 11, 19],
        &[1, 4, 17, 18, 19],
    ];
    /// Heterogeneous per-class traffic intensities.
    pub const RHO_PER_CLASS: [f64; 4] = [3.876, 9.115, 7.042, 8.150];
    pub const AREAS: usize = 20;
}

/// Offered traffic for the reference scenario.
#[derive(Debug, Clone, PartialEq)]
pub enum Traffic {
    Uniform(f64),
    PerClass(Vec<f64>),
}

/// Channels (zero-based) standing for base slot `s` (one-based) at scale `h`.
fn expand(slots: &[usize], h: usize) -> Vec<usize> {
    slots
        .iter()
        .flat_map(|&s| ((s - 1) * h + 1)..=(s * h))
        .collect()
}

/// The reference network at scale `h`.
pub fn reference_network(h: u32, traffic: &Traffic) -> Result<NetworkSpec, ScenarioError> {
    use reference::*;
    if h < 1 {
        return Err(invalid("scale h must be at least 1"));
    }
    let rho: Vec<f64> = match traffic {
        Traffic::Uniform(r) => vec![*r; 4],
        Traffic::PerClass(v) => {
            if v.len() != 4 {
                return Err(invalid(format!(
                    "need 4 per-class intensities, got {}",
                    v.len()
                )));
            }
            v.clone()
        }
    };
    if rho.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(invalid("traffic intensities must be positive"));
    }
    let hf = h as f64;
    let hu = h as usize;
    let groups = SC_CAPACITY.len();
    let classes = (0..4)
        .map(|j| {
            let lambda = ARRIVAL_RATE[j] * hf;
            let occupancy: Vec<Occupancy> = OCCUPANCY[j]
                .iter()
                .map(|w| w.map_or(Occupancy::Forbidden, Occupancy::Units))
                .collect();
            let edge_groups: Vec<usize> = (1..=groups)
                .filter(|k| OCCUPANCY[j][k - 1].is_some())
                .collect();
            // w of the cheapest permitted group
            let cloud_occupancy = edge_groups
                .iter()
                .min_by(|a, b| OPERATIONAL_POWER[**a - 1].total_cmp(&OPERATIONAL_POWER[**b - 1]))
                .and_then(|k| OCCUPANCY[j][k - 1])
                .unwrap_or(1);
            ClassSpec {
                arrival_rate: lambda,
                occupancy,
                cloud_occupancy,
                cloud_energy_rate: CLOUD_POWER * rho[j] / lambda,
                service: vec![ServiceBlock {
                    start: expand(START_SLOTS[j], hu),
                    end: expand(END_SLOTS[j], hu),
                    edge_groups,
                    cloud: true,
                    rate: lambda / rho[j],
                }],
            }
        })
        .collect();
    Ok(NetworkSpec {
        num_areas: AREAS,
        cloud_backhaul_delay: 0.0,
        sc_capacity: SC_CAPACITY.iter().map(|c| c * h).collect(),
        edge_operational_power: OPERATIONAL_POWER.to_vec(),
        edge_static_power: vec![0.0; groups],
        area_map: (1..=groups).collect(),
        channel_capacity: (0..20 * hu).map(|i| CHANNEL_CAPACITY[i / hu]).collect(),
        classes,
    })
}

/// All five policies with their default parameters.
pub fn default_policies() -> Vec<PolicySpec> {
    PolicySpec::NAMES
        .iter()
        .map(|n| PolicySpec::from_name(n).expect("known name"))
        .collect()
}

/// The reference scenario with default run controls: 20 replications of
/// 2·10⁴ s, exponential lifespans, all five policies.
pub fn reference_scenario(h: u32, traffic: Traffic) -> Result<ScenarioSpec, ScenarioError> {
    let network = reference_network(h, &traffic)?;
    let (rho, rho_per_class) = match traffic {
        Traffic::Uniform(r) => (Some(r), None),
        Traffic::PerClass(v) => (None, Some(v)),
    };
    let horizon = 2.0e4;
    Ok(ScenarioSpec {
        schema_version: SCENARIO_SCHEMA_VERSION,
        trace: None,
        output: None,
        experiment: ExperimentSpec {
            horizon,
            warm_up: Some(0.1 * horizon),
            replications: 20,
            seed: 1,
            lifespan: LifespanFamily::Exponential,
            scale: h,
            rho,
            rho_per_class,
            timeline_bin: Some(horizon / 50.0),
        },
        policies: default_policies(),
        network,
    })
}

/// Default learner parameters of the reference scenario.
pub fn reference_learner() -> LearnerParams {
    LearnerParams::uniform(2.0, 100)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bandit::energy_efficiency_ratio;
    use crate::model::ResourceTuple;

    #[test]
    fn reference_constants() {
        use reference::*;
        assert_eq!(&CHANNEL_CAPACITY[..10], &[8, 5, 5, 7, 6, 5, 5, 6, 5, 7]);
        assert_eq!(&CHANNEL_CAPACITY[10..], &[9, 6, 6, 5, 5, 9, 9, 9, 5, 7]);
        assert_eq!(SC_CAPACITY, [5, 5, 8]);
        assert_eq!(OPERATIONAL_POWER, [3.362, 3.996, 8.979]);
        assert_eq!(ARRIVAL_RATE, [1.097, 1.026, 1.456, 1.383]);
        assert_eq!(RHO_PER_CLASS, [3.876, 9.115, 7.042, 8.150]);
        let forbidden: Vec<(usize, usize)> = (0..4)
            .flat_map(|j| (0..3).map(move |k| (j, k)))
            .filter(|&(j, k)| OCCUPANCY[j][k].is_none())
            .map(|(j, k)| (j + 1, k + 1))
            .collect();
        assert_eq!(forbidden, vec![(1, 2), (3, 1), (3, 2), (4, 1), (4, 2)]);
        assert_eq!(OCCUPANCY[0][0], Some(3));
        assert_eq!(OCCUPANCY[1][2], Some(4));
        assert_eq!(reference_learner(), LearnerParams::default());
    }

    #[test]
    fn scale_one() {
        let spec = reference_network(1, &Traffic::Uniform(7.5)).unwrap();
        let cfg = NetworkConfig::from_spec(&spec).unwrap();
        assert_eq!(spec.sc_capacity, vec![5, 5, 8]);
        assert_eq!(cfg.num_channels(), 20);
        assert_eq!(cfg.channel_capacity(0), 8);
        assert_eq!(cfg.arrival_rate(0), 1.097);
        assert_eq!(
            spec.classes
                .iter()
                .map(|c| c.cloud_occupancy)
                .collect::<Vec<_>>(),
            vec![3, 4, 2, 1]
        );
        // class 1: 9 × 12 channel pairs on groups 1 and 3 plus the cloud
        assert_eq!(cfg.eligible(0).len(), 9 * 12 * 3);
    }

    #[test]
    fn scale_two() {
        let spec = reference_network(2, &Traffic::Uniform(7.5)).unwrap();
        let cfg = NetworkConfig::from_spec(&spec).unwrap();
        assert_eq!(spec.sc_capacity, vec![10, 10, 16]);
        assert_eq!(cfg.num_channels(), 40);
        assert!((cfg.arrival_rate(0) - 2.194).abs() < 1e-12);
        assert_eq!(cfg.channel_capacity(0), 8);
        assert_eq!(cfg.channel_capacity(1), 8);
        assert_eq!(cfg.channel_capacity(2), 5);
        // base slot 3 becomes channels 5 and 6 (one-based)
        assert!(spec.classes[0].service[0].start.starts_with(&[5, 6, 9, 10]));
        assert_eq!(cfg.eligible(0).len(), 18 * 24 * 3);
    }

    #[test]
    fn per_class_rates() {
        let r = reference::RHO_PER_CLASS.to_vec();
        let spec = reference_network(1, &Traffic::PerClass(r.clone())).unwrap();
        let cfg = NetworkConfig::from_spec(&spec).unwrap();
        for (j, rho) in r.iter().enumerate() {
            let t = cfg.eligible(j)[0];
            let u = cfg.service_rate(j, &t);
            assert!((u - reference::ARRIVAL_RATE[j] / rho).abs() < 1e-15);
            let cloud = cfg.eligible(j).iter().find(|t| t.group.is_cloud()).unwrap();
            let ratio = energy_efficiency_ratio(&cfg, j, cloud).unwrap();
            assert!((ratio - 20.1 * rho).abs() < 1e-9);
        }
    }

    #[test]
    fn reference_ratios() {
        let cfg = NetworkConfig::from_spec(&reference_network(1, &Traffic::Uniform(7.5)).unwrap())
            .unwrap();
        // class 1, slot 3 → slot 3, group 1
        let t = ResourceTuple::edge(2, 2, 0);
        assert!((energy_efficiency_ratio(&cfg, 0, &t).unwrap() - 75.645).abs() < 1e-9);
        let c = ResourceTuple::cloud(2, 2);
        assert!((energy_efficiency_ratio(&cfg, 0, &c).unwrap() - 150.75).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(reference_network(0, &Traffic::Uniform(1.0)).is_err());
        assert!(reference_network(1, &Traffic::Uniform(0.0)).is_err());
        assert!(reference_network(1, &Traffic::PerClass(vec![1.0; 3])).is_err());
    }

    #[test]
    fn toml_round_trip_and_validate() {
        let s = reference_scenario(1, Traffic::Uniform(7.5)).unwrap();
        let text = s.to_toml();
        let back = ScenarioSpec::from_toml(&text).unwrap();
        assert_eq!(back, s);
        let v = back.validate(None).unwrap();
        assert_eq!(v.policies.len(), 5);
        assert_eq!(v.options.replications, 20);
    }

    #[test]
    fn exactly_one_traffic_form() {
        let mut s = reference_scenario(1, Traffic::Uniform(7.5)).unwrap();
        s.experiment.rho_per_class = Some(vec![1.0; 4]);
        assert!(s.validate(None).is_err());
        s.experiment.rho = None;
        s.experiment.rho_per_class = None;
        assert!(s.validate(None).is_err());
    }

    #[test]
    fn oversized_occupancy_is_named() {
        let mut s = reference_scenario(1, Traffic::Uniform(7.5)).unwrap();
        s.network.classes[0].occupancy[0] = Occupancy::Units(6);
        let err = s.validate(None).unwrap_err().to_string();
        assert!(err.contains("w_{1,1}"), "{err}");
    }
}
