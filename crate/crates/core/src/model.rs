//! Static network description, occupancy state and power accounting.
//!
//! Indices are zero-based inside the library. Scenario files and reports use
//! one-based channel, group and class numbers; the conversion happens in
//! [`NetworkSpec`] compilation and in the `Display` impls.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Linear SNR below which a channel cannot carry a task (20 dB).
pub const SNR_THRESHOLD: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("network must have at least one {0}")]
    Empty(&'static str),
    #[error("{what} has length {got}, expected {expected}")]
    Length {
        what: String,
        got: usize,
        expected: usize,
    },
    #[error("capacity C_{group} must be at least 1")]
    ZeroScCapacity { group: usize },
    #[error("capacity N_{channel} must be at least 1")]
    ZeroChannelCapacity { channel: usize },
    #[error("occupancy w_{{{class},{group}}} = {units} violates 1 <= w <= C_{group} = {capacity}")]
    Occupancy {
        class: usize,
        group: usize,
        units: u32,
        capacity: u32,
    },
    #[error("{what} = {value} must be finite and non-negative")]
    NonNegative { what: String, value: f64 },
    #[error("class {class}: {message}")]
    Service { class: usize, message: String },
    #[error("group {group} mapped to area {area}, but only {areas} areas exist")]
    AreaMap {
        group: usize,
        area: usize,
        areas: usize,
    },
    #[error("invalid occupancy marker {0:?}; expected a positive integer or \"forbidden\"")]
    OccupancyMarker(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PhysicsError {
    #[error("bandwidth must be positive, got {0}")]
    Bandwidth(f64),
    #[error("noise power must be positive, got {0}")]
    Noise(f64),
    #[error("transmission rate must be positive, got {0}")]
    ZeroRate(f64),
}

/// Radio parameters of one (channel, class) pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelPhysics {
    pub bandwidth: f64,
    pub transmit_power: f64,
    pub channel_gain: f64,
    pub noise_power: f64,
}

impl ChannelPhysics {
    pub fn snr(&self) -> f64 {
        self.transmit_power * self.channel_gain / self.noise_power
    }
}

/// Achievable rate of a sub-channel; zero when the SNR is below 20 dB.
pub fn transmission_rate(phys: &ChannelPhysics) -> Result<f64, PhysicsError> {
    if !(phys.bandwidth.is_finite() && phys.bandwidth > 0.0) {
        return Err(PhysicsError::Bandwidth(phys.bandwidth));
    }
    if !(phys.noise_power.is_finite() && phys.noise_power > 0.0) {
        return Err(PhysicsError::Noise(phys.noise_power));
    }
    let snr = phys.snr();
    if snr >= SNR_THRESHOLD {
        Ok(phys.bandwidth * (1.0 + snr).log2())
    } else {
        Ok(0.0)
    }
}

/// Expected duration of a cloud-served task: radio transfer plus backhaul.
pub fn cloud_duration(rate: f64, config: &NetworkConfig) -> Result<f64, PhysicsError> {
    if !(rate.is_finite() && rate > 0.0) {
        return Err(PhysicsError::ZeroRate(rate));
    }
    Ok(1.0 / rate + config.cloud_backhaul_delay())
}

/// SC group of a tuple. `Cloud` is the unbounded group K+1 and sorts last.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScGroup {
    Edge(usize),
    Cloud,
}

impl ScGroup {
    pub fn edge(self) -> Option<usize> {
        match self {
            ScGroup::Edge(k) => Some(k),
            ScGroup::Cloud => None,
        }
    }

    pub fn is_cloud(self) -> bool {
        matches!(self, ScGroup::Cloud)
    }
}

/// Starting channel, ending channel and SC group reserved by one task.
///
/// The derived ordering is lexicographic on `(group, start, end)`, which is
/// the deterministic tuple order used for every tie break.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ResourceTuple {
    pub group: ScGroup,
    pub start: usize,
    pub end: usize,
}

impl ResourceTuple {
    pub fn edge(start: usize, end: usize, group: usize) -> Self {
        Self {
            group: ScGroup::Edge(group),
            start,
            end,
        }
    }

    pub fn cloud(start: usize, end: usize) -> Self {
        Self {
            group: ScGroup::Cloud,
            start,
            end,
        }
    }
}

impl fmt::Display for ResourceTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.group {
            ScGroup::Edge(k) => write!(f, "({},{},{})", self.start + 1, self.end + 1, k + 1),
            ScGroup::Cloud => write!(f, "({},{},cloud)", self.start + 1, self.end + 1),
        }
    }
}

/// SC units a class occupies on an edge group.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Occupancy {
    Units(u32),
    Forbidden,
}

impl Occupancy {
    pub fn units(self) -> Option<u32> {
        match self {
            Occupancy::Units(w) => Some(w),
            Occupancy::Forbidden => None,
        }
    }
}

const FORBIDDEN: &str = "forbidden";

impl Serialize for Occupancy {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Occupancy::Units(w) => s.serialize_u32(*w),
            Occupancy::Forbidden => s.serialize_str(FORBIDDEN),
        }
    }
}

impl<'de> Deserialize<'de> for Occupancy {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Units(u32),
            Marker(String),
        }
        match Repr::deserialize(d)? {
            Repr::Units(w) => Ok(Occupancy::Units(w)),
            Repr::Marker(m) if m == FORBIDDEN => Ok(Occupancy::Forbidden),
            Repr::Marker(m) => Err(serde::de::Error::custom(ConfigError::OccupancyMarker(m))),
        }
    }
}

/// A rectangle of eligible tuples sharing one service rate.
///
/// Channels and groups are one-based. Every `start × end × edge_groups`
/// combination (plus the cloud when `cloud` is set) gets `rate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceBlock {
    pub start: Vec<usize>,
    pub end: Vec<usize>,
    #[serde(default)]
    pub edge_groups: Vec<usize>,
    #[serde(default)]
    pub cloud: bool,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSpec {
    /// λ_j, tasks per second.
    pub arrival_rate: f64,
    /// w_{j,k} for each edge group.
    pub occupancy: Vec<Occupancy>,
    /// Nominal w_{j,K+1}; only read by the MRR baseline.
    pub cloud_occupancy: u32,
    /// ε̄_j, energy per cloud-completed task.
    pub cloud_energy_rate: f64,
    pub service: Vec<ServiceBlock>,
}

/// File-level network description. Compile it with [`NetworkConfig::from_spec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub num_areas: usize,
    /// Seconds between the edge and the cloud.
    pub cloud_backhaul_delay: f64,
    pub sc_capacity: Vec<u32>,
    pub edge_operational_power: Vec<f64>,
    pub edge_static_power: Vec<f64>,
    /// Destination area (one-based) of each edge group.
    pub area_map: Vec<usize>,
    pub channel_capacity: Vec<u32>,
    pub classes: Vec<ClassSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassParams {
    pub arrival_rate: f64,
    pub occupancy: Vec<Occupancy>,
    pub cloud_occupancy: u32,
    pub cloud_energy_rate: f64,
}

/// Validated, immutable network. Safe to share across replications.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    num_areas: usize,
    cloud_backhaul_delay: f64,
    sc_capacity: Vec<u32>,
    operational_power: Vec<f64>,
    static_power: Vec<f64>,
    area_map: Vec<usize>,
    channel_capacity: Vec<u32>,
    classes: Vec<ClassParams>,
    // u_j(i,i',k), dense over class × start × end × (K+1) groups
    rates: Vec<f64>,
    eligible: Vec<Vec<ResourceTuple>>,
}

fn check_len(what: &str, got: usize, expected: usize) -> Result<(), ConfigError> {
    if got != expected {
        return Err(ConfigError::Length {
            what: what.to_string(),
            got,
            expected,
        });
    }
    Ok(())
}

fn check_non_negative(what: impl Into<String>, value: f64) -> Result<(), ConfigError> {
    if !(value.is_finite() && value >= 0.0) {
        return Err(ConfigError::NonNegative {
            what: what.into(),
            value,
        });
    }
    Ok(())
}

impl NetworkConfig {
    pub fn from_spec(spec: &NetworkSpec) -> Result<Self, ConfigError> {
        let groups = spec.sc_capacity.len();
        let channels = spec.channel_capacity.len();
        if groups == 0 {
            return Err(ConfigError::Empty("SC group"));
        }
        if channels == 0 {
            return Err(ConfigError::Empty("channel"));
        }
        if spec.classes.is_empty() {
            return Err(ConfigError::Empty("task class"));
        }
        if spec.num_areas == 0 {
            return Err(ConfigError::Empty("destination area"));
        }
        check_len(
            "edge_operational_power",
            spec.edge_operational_power.len(),
            groups,
        )?;
        check_len("edge_static_power", spec.edge_static_power.len(), groups)?;
        check_len("area_map", spec.area_map.len(), groups)?;
        for (k, &c) in spec.sc_capacity.iter().enumerate() {
            if c == 0 {
                return Err(ConfigError::ZeroScCapacity { group: k + 1 });
            }
        }
        for (i, &n) in spec.channel_capacity.iter().enumerate() {
            if n == 0 {
                return Err(ConfigError::ZeroChannelCapacity { channel: i + 1 });
            }
        }
        for (k, (&op, &st)) in spec
            .edge_operational_power
            .iter()
            .zip(&spec.edge_static_power)
            .enumerate()
        {
            check_non_negative(format!("edge_operational_power[{}]", k + 1), op)?;
            check_non_negative(format!("edge_static_power[{}]", k + 1), st)?;
        }
        for (k, &area) in spec.area_map.iter().enumerate() {
            if area == 0 || area > spec.num_areas {
                return Err(ConfigError::AreaMap {
                    group: k + 1,
                    area,
                    areas: spec.num_areas,
                });
            }
        }
        check_non_negative("cloud_backhaul_delay", spec.cloud_backhaul_delay)?;

        let num_classes = spec.classes.len();
        let mut rates = vec![0.0; num_classes * channels * channels * (groups + 1)];
        let mut eligible = Vec::with_capacity(num_classes);
        let mut classes = Vec::with_capacity(num_classes);
        for (j, class) in spec.classes.iter().enumerate() {
            let label = j + 1;
            check_non_negative(format!("arrival_rate of class {label}"), class.arrival_rate)?;
            check_non_negative(
                format!("cloud_energy_rate of class {label}"),
                class.cloud_energy_rate,
            )?;
            check_len(
                &format!("occupancy of class {label}"),
                class.occupancy.len(),
                groups,
            )?;
            for (k, occ) in class.occupancy.iter().enumerate() {
                if let Occupancy::Units(w) = *occ {
                    if w == 0 || w > spec.sc_capacity[k] {
                        return Err(ConfigError::Occupancy {
                            class: label,
                            group: k + 1,
                            units: w,
                            capacity: spec.sc_capacity[k],
                        });
                    }
                }
            }
            let service_err = |message: String| ConfigError::Service {
                class: label,
                message,
            };
            let mut tuples = Vec::new();
            for block in &class.service {
                if !(block.rate.is_finite() && block.rate > 0.0) {
                    return Err(service_err(format!(
                        "service rate {} must be positive and finite",
                        block.rate
                    )));
                }
                let mut targets: Vec<ScGroup> = Vec::new();
                for &g in &block.edge_groups {
                    if g == 0 || g > groups {
                        return Err(service_err(format!(
                            "SC group {g} out of range 1..={groups}"
                        )));
                    }
                    if class.occupancy[g - 1] == Occupancy::Forbidden {
                        return Err(service_err(format!(
                            "positive service rate on forbidden group {g}"
                        )));
                    }
                    targets.push(ScGroup::Edge(g - 1));
                }
                if block.cloud {
                    targets.push(ScGroup::Cloud);
                }
                for &s in &block.start {
                    for &e in &block.end {
                        for &ch in [s, e].iter() {
                            if ch == 0 || ch > channels {
                                return Err(service_err(format!(
                                    "channel {ch} out of range 1..={channels}"
                                )));
                            }
                        }
                        for &group in &targets {
                            let tuple = ResourceTuple {
                                group,
                                start: s - 1,
                                end: e - 1,
                            };
                            let idx = flat_index(channels, groups, j, &tuple);
                            if rates[idx] > 0.0 {
                                return Err(service_err(format!(
                                    "duplicate service rate for tuple {tuple}"
                                )));
                            }
                            rates[idx] = block.rate;
                            tuples.push(tuple);
                        }
                    }
                }
            }
            tuples.sort();
            eligible.push(tuples);
            classes.push(ClassParams {
                arrival_rate: class.arrival_rate,
                occupancy: class.occupancy.clone(),
                cloud_occupancy: class.cloud_occupancy,
                cloud_energy_rate: class.cloud_energy_rate,
            });
        }

        Ok(Self {
            num_areas: spec.num_areas,
            cloud_backhaul_delay: spec.cloud_backhaul_delay,
            sc_capacity: spec.sc_capacity.clone(),
            operational_power: spec.edge_operational_power.clone(),
            static_power: spec.edge_static_power.clone(),
            area_map: spec.area_map.iter().map(|a| a - 1).collect(),
            channel_capacity: spec.channel_capacity.clone(),
            classes,
            rates,
            eligible,
        })
    }

    pub fn num_groups(&self) -> usize {
        self.sc_capacity.len()
    }

    pub fn num_channels(&self) -> usize {
        self.channel_capacity.len()
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn num_areas(&self) -> usize {
        self.num_areas
    }

    pub fn class(&self, j: usize) -> &ClassParams {
        &self.classes[j]
    }

    pub fn arrival_rate(&self, j: usize) -> f64 {
        self.classes[j].arrival_rate
    }

    pub fn sc_capacity(&self, k: usize) -> u32 {
        self.sc_capacity[k]
    }

    pub fn channel_capacity(&self, i: usize) -> u32 {
        self.channel_capacity[i]
    }

    pub fn operational_power(&self, k: usize) -> f64 {
        self.operational_power[k]
    }

    pub fn static_power(&self, k: usize) -> f64 {
        self.static_power[k]
    }

    pub fn total_static_power(&self) -> f64 {
        self.static_power.iter().sum()
    }

    pub fn cloud_energy_rate(&self, j: usize) -> f64 {
        self.classes[j].cloud_energy_rate
    }

    pub fn cloud_backhaul_delay(&self) -> f64 {
        self.cloud_backhaul_delay
    }

    /// Zero-based destination area of edge group `k`.
    pub fn area_of(&self, k: usize) -> usize {
        self.area_map[k]
    }

    /// w_{j,k}; `None` for forbidden pairs.
    pub fn occupancy(&self, j: usize, k: usize) -> Option<u32> {
        self.classes[j].occupancy[k].units()
    }

    /// u_j(i,i',k); zero for ineligible tuples.
    pub fn service_rate(&self, j: usize, tuple: &ResourceTuple) -> f64 {
        if tuple.start >= self.num_channels() || tuple.end >= self.num_channels() {
            return 0.0;
        }
        if let ScGroup::Edge(k) = tuple.group {
            if k >= self.num_groups() {
                return 0.0;
            }
        }
        self.rates[self.flat(j, tuple)]
    }

    /// Tuples with u_j > 0, in deterministic tuple order.
    pub fn eligible(&self, j: usize) -> &[ResourceTuple] {
        &self.eligible[j]
    }

    /// Largest occupancy state min(⌊C_k/w⌋, N_i, N_i') of one sub-problem chain.
    pub fn chain_cap(&self, j: usize, tuple: &ResourceTuple) -> usize {
        let channels = self
            .channel_capacity(tuple.start)
            .min(self.channel_capacity(tuple.end));
        let cap = match tuple.group {
            ScGroup::Edge(k) => {
                let w = self.occupancy(j, k).unwrap_or(u32::MAX);
                channels.min(self.sc_capacity(k) / w)
            }
            ScGroup::Cloud => channels,
        };
        cap as usize
    }

    pub(crate) fn flat(&self, j: usize, tuple: &ResourceTuple) -> usize {
        flat_index(self.num_channels(), self.num_groups(), j, tuple)
    }

    pub(crate) fn flat_len(&self) -> usize {
        self.rates.len()
    }
}

fn flat_index(channels: usize, groups: usize, j: usize, tuple: &ResourceTuple) -> usize {
    let k = match tuple.group {
        ScGroup::Edge(k) => k,
        ScGroup::Cloud => groups,
    };
    ((j * channels + tuple.start) * channels + tuple.end) * (groups + 1) + k
}

/// Which capacity tests a tuple passes for one more task.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CapacityCheck {
    /// SC headroom on the edge group; always true for the cloud.
    pub sc: bool,
    pub start: bool,
    pub end: bool,
}

impl CapacityCheck {
    pub fn is_available(&self) -> bool {
        self.sc && self.start && self.end
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StateError {
    #[error("tuple {tuple} is not eligible for class {class}")]
    Ineligible { class: usize, tuple: ResourceTuple },
    #[error("admitting class {class} on {tuple} would exceed capacity ({check:?})")]
    Capacity {
        class: usize,
        tuple: ResourceTuple,
        check: CapacityCheck,
    },
    #[error("no class {class} task in flight on {tuple}")]
    Empty { class: usize, tuple: ResourceTuple },
    #[error("SC group {group} load {load} exceeds capacity {capacity}")]
    ScOverload {
        group: usize,
        load: u64,
        capacity: u32,
    },
    #[error("channel {channel} load {load} exceeds capacity {capacity}")]
    ChannelOverload {
        channel: usize,
        load: u64,
        capacity: u32,
    },
    #[error("cached {what} disagrees with recomputation")]
    StaleLoad { what: &'static str },
}

/// Occupancy counts X_{i,i',j,k} with derived SC and channel loads.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    counts: Vec<u32>,
    sc_load: Vec<u32>,
    channel_load: Vec<u32>,
    cloud_tasks: u64,
    // Σ ε̄_j u_j X over cloud tuples, maintained incrementally
    cloud_power: f64,
    pub clock: f64,
}

impl SystemState {
    pub fn empty(config: &NetworkConfig) -> Self {
        Self {
            counts: vec![0; config.flat_len()],
            sc_load: vec![0; config.num_groups()],
            channel_load: vec![0; config.num_channels()],
            cloud_tasks: 0,
            cloud_power: 0.0,
            clock: 0.0,
        }
    }

    pub fn count(&self, config: &NetworkConfig, j: usize, tuple: &ResourceTuple) -> u32 {
        self.counts[config.flat(j, tuple)]
    }

    /// Σ w_{j,k} X over everything on edge group `k`.
    pub fn sc_load(&self, k: usize) -> u32 {
        self.sc_load[k]
    }

    /// Sub-channels of channel `i` in use; a task with i = i' counts twice.
    pub fn channel_load(&self, i: usize) -> u32 {
        self.channel_load[i]
    }

    pub fn in_flight(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    pub fn check(&self, config: &NetworkConfig, j: usize, tuple: &ResourceTuple) -> CapacityCheck {
        let sc = match tuple.group {
            ScGroup::Edge(k) => match config.occupancy(j, k) {
                Some(w) => self.sc_load[k] + w <= config.sc_capacity(k),
                None => false,
            },
            ScGroup::Cloud => true,
        };
        if tuple.start == tuple.end {
            let ok = self.channel_load[tuple.start] + 2 <= config.channel_capacity(tuple.start);
            CapacityCheck {
                sc,
                start: ok,
                end: ok,
            }
        } else {
            CapacityCheck {
                sc,
                start: self.channel_load[tuple.start] < config.channel_capacity(tuple.start),
                end: self.channel_load[tuple.end] < config.channel_capacity(tuple.end),
            }
        }
    }

    pub fn is_available(&self, config: &NetworkConfig, j: usize, tuple: &ResourceTuple) -> bool {
        config.service_rate(j, tuple) > 0.0 && self.check(config, j, tuple).is_available()
    }

    pub fn admit(
        &mut self,
        config: &NetworkConfig,
        j: usize,
        tuple: &ResourceTuple,
    ) -> Result<(), StateError> {
        let rate = config.service_rate(j, tuple);
        if rate <= 0.0 {
            return Err(StateError::Ineligible {
                class: j,
                tuple: *tuple,
            });
        }
        let check = self.check(config, j, tuple);
        if !check.is_available() {
            return Err(StateError::Capacity {
                class: j,
                tuple: *tuple,
                check,
            });
        }
        self.counts[config.flat(j, tuple)] += 1;
        match tuple.group {
            ScGroup::Edge(k) => self.sc_load[k] += config.occupancy(j, k).unwrap_or(0),
            ScGroup::Cloud => {
                self.cloud_tasks += 1;
                self.cloud_power += config.cloud_energy_rate(j) * rate;
            }
        }
        self.channel_load[tuple.start] += 1;
        self.channel_load[tuple.end] += 1;
        Ok(())
    }

    pub fn release(
        &mut self,
        config: &NetworkConfig,
        j: usize,
        tuple: &ResourceTuple,
    ) -> Result<(), StateError> {
        let idx = config.flat(j, tuple);
        if self.counts[idx] == 0 {
            return Err(StateError::Empty {
                class: j,
                tuple: *tuple,
            });
        }
        self.counts[idx] -= 1;
        match tuple.group {
            ScGroup::Edge(k) => self.sc_load[k] -= config.occupancy(j, k).unwrap_or(0),
            ScGroup::Cloud => {
                self.cloud_tasks -= 1;
                if self.cloud_tasks == 0 {
                    self.cloud_power = 0.0;
                } else {
                    self.cloud_power -= config.cloud_energy_rate(j) * config.service_rate(j, tuple);
                }
            }
        }
        self.channel_load[tuple.start] -= 1;
        self.channel_load[tuple.end] -= 1;
        Ok(())
    }

    /// Edge operational power plus cloud power, without the static term.
    pub fn operational_power(&self, config: &NetworkConfig) -> f64 {
        let edge: f64 = self
            .sc_load
            .iter()
            .enumerate()
            .map(|(k, &load)| config.operational_power(k) * load as f64)
            .sum();
        edge + self.cloud_power
    }

    /// Recomputes both load vectors from the raw counts and checks them
    /// against the cached values and against the capacities.
    pub fn verify(&self, config: &NetworkConfig) -> Result<(), StateError> {
        let mut sc = vec![0u64; config.num_groups()];
        let mut ch = vec![0u64; config.num_channels()];
        for j in 0..config.num_classes() {
            for tuple in config.eligible(j) {
                let x = self.counts[config.flat(j, tuple)] as u64;
                if x == 0 {
                    continue;
                }
                if let ScGroup::Edge(k) = tuple.group {
                    sc[k] += config.occupancy(j, k).unwrap_or(0) as u64 * x;
                }
                ch[tuple.start] += x;
                ch[tuple.end] += x;
            }
        }
        for (k, &load) in sc.iter().enumerate() {
            if load > config.sc_capacity(k) as u64 {
                return Err(StateError::ScOverload {
                    group: k + 1,
                    load,
                    capacity: config.sc_capacity(k),
                });
            }
            if load != self.sc_load[k] as u64 {
                return Err(StateError::StaleLoad { what: "SC load" });
            }
        }
        for (i, &load) in ch.iter().enumerate() {
            if load > config.channel_capacity(i) as u64 {
                return Err(StateError::ChannelOverload {
                    channel: i + 1,
                    load,
                    capacity: config.channel_capacity(i),
                });
            }
            if load != self.channel_load[i] as u64 {
                return Err(StateError::StaleLoad {
                    what: "channel load",
                });
            }
        }
        Ok(())
    }
}

/// The set 𝒯_j(x) of tuples that can take one more class-`j` task.
pub fn available_tuples(
    state: &SystemState,
    j: usize,
    config: &NetworkConfig,
) -> Vec<ResourceTuple> {
    config
        .eligible(j)
        .iter()
        .copied()
        .filter(|t| state.check(config, j, t).is_available())
        .collect()
}

/// Instantaneous power recomputed from the raw occupancy counts: edge
/// operational power, static power of every edge group, and cloud power.
pub fn instantaneous_power(state: &SystemState, config: &NetworkConfig) -> f64 {
    let mut edge = 0.0;
    let mut cloud = 0.0;
    for j in 0..config.num_classes() {
        for tuple in config.eligible(j) {
            let x = state.count(config, j, tuple) as f64;
            if x == 0.0 {
                continue;
            }
            match tuple.group {
                ScGroup::Edge(k) => {
                    edge +=
                        config.operational_power(k) * config.occupancy(j, k).unwrap_or(0) as f64 * x
                }
                ScGroup::Cloud => {
                    cloud += config.cloud_energy_rate(j) * config.service_rate(j, tuple) * x
                }
            }
        }
    }
    edge + config.total_static_power() + cloud
}
