//! Admission policies: given a class-j arrival and the current state, pick
//! one available tuple or block.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bandit::{
    greedy_dual, index_unchecked, rank_cmp, subgradient_eta, subgradient_gamma, BanditError,
    CapacityCoefficients, DualMode, DualPoint, IndexCache, IndexEntry, IndexTable,
};
use crate::model::{NetworkConfig, ResourceTuple, ScGroup, SystemState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyDecision {
    Admit(ResourceTuple),
    Block,
}

pub trait Policy: Send {
    fn name(&self) -> &'static str;

    fn decide(
        &mut self,
        class: usize,
        state: &SystemState,
        config: &NetworkConfig,
    ) -> PolicyDecision;

    /// Current capacity coefficients, for index policies.
    fn coefficients(&self) -> Option<&CapacityCoefficients> {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolicyError {
    #[error(transparent)]
    Coefficients(#[from] BanditError),
    #[error("learner threshold must be at least 1")]
    Threshold,
    #[error("learner step {name} = {value} must be finite and non-negative")]
    Step { name: &'static str, value: f64 },
    #[error("cloud capacity factor {0} must be positive")]
    CloudFactor(f64),
}

fn first_available(
    table: &IndexTable,
    class: usize,
    state: &SystemState,
    config: &NetworkConfig,
) -> PolicyDecision {
    table
        .entries()
        .iter()
        .find(|e| state.check(config, class, &e.tuple).is_available())
        .map_or(PolicyDecision::Block, |e| PolicyDecision::Admit(e.tuple))
}

/// HEE-ACC(γ, η): the available tuple with the lowest index.
pub fn hee_acc_decide(
    class: usize,
    state: &SystemState,
    coeffs: &CapacityCoefficients,
    config: &NetworkConfig,
) -> PolicyDecision {
    first_available(
        &IndexTable::build(config, class, coeffs),
        class,
        state,
        config,
    )
}

/// HEE-ACC with all capacity coefficients at zero.
pub fn hee_acc_zero_decide(
    class: usize,
    state: &SystemState,
    config: &NetworkConfig,
) -> PolicyDecision {
    hee_acc_decide(class, state, &CapacityCoefficients::zeros(config), config)
}

/// Index policy with fixed coefficients and cached tables.
#[derive(Debug, Clone)]
pub struct HeeAcc {
    coeffs: CapacityCoefficients,
    cache: IndexCache,
    zero: bool,
}

impl HeeAcc {
    pub fn new(config: &NetworkConfig, coeffs: CapacityCoefficients) -> Result<Self, PolicyError> {
        coeffs.validate(config)?;
        Ok(Self {
            coeffs,
            cache: IndexCache::new(config),
            zero: false,
        })
    }

    pub fn zero(config: &NetworkConfig) -> Self {
        Self {
            coeffs: CapacityCoefficients::zeros(config),
            cache: IndexCache::new(config),
            zero: true,
        }
    }
}

impl Policy for HeeAcc {
    fn name(&self) -> &'static str {
        if self.zero {
            "hee-acc-zero"
        } else {
            "hee-acc"
        }
    }

    fn decide(
        &mut self,
        class: usize,
        state: &SystemState,
        config: &NetworkConfig,
    ) -> PolicyDecision {
        let table = self.cache.table(config, class, &self.coeffs, 0);
        first_available(table, class, state, config)
    }

    fn coefficients(&self) -> Option<&CapacityCoefficients> {
        Some(&self.coeffs)
    }
}

/// Which relaxed policy the learner evaluates sub-gradients at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubgradientMode {
    /// The minimizer of the Lagrangian at ν*(γ, η): every class sits on its
    /// lowest-index tuple with all actions on, capacities unenforced.
    #[default]
    Lagrangian,
    /// The capacitated greedy assignment of [`crate::bandit::compute_nu_star`].
    Capacitated,
}

/// Step sizes and trigger threshold of the learning policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerParams {
    #[serde(default = "default_step")]
    pub decrement_gamma: f64,
    #[serde(default = "default_step")]
    pub decrement_eta: f64,
    #[serde(default = "default_step")]
    pub increment_gamma: f64,
    #[serde(default = "default_step")]
    pub increment_eta: f64,
    #[serde(default = "default_threshold")]
    pub threshold: u32,
    #[serde(default)]
    pub subgradient: SubgradientMode,
}

fn default_step() -> f64 {
    2.0
}

fn default_threshold() -> u32 {
    100
}

impl Default for LearnerParams {
    fn default() -> Self {
        Self {
            decrement_gamma: default_step(),
            decrement_eta: default_step(),
            increment_gamma: default_step(),
            increment_eta: default_step(),
            threshold: default_threshold(),
            subgradient: SubgradientMode::default(),
        }
    }
}

impl LearnerParams {
    /// All four steps set to `step`.
    pub fn uniform(step: f64, threshold: u32) -> Self {
        Self {
            decrement_gamma: step,
            decrement_eta: step,
            increment_gamma: step,
            increment_eta: step,
            threshold,
            subgradient: SubgradientMode::default(),
        }
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        for (name, value) in [
            ("decrement_gamma", self.decrement_gamma),
            ("decrement_eta", self.decrement_eta),
            ("increment_gamma", self.increment_gamma),
            ("increment_eta", self.increment_eta),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(PolicyError::Step { name, value });
            }
        }
        if self.threshold == 0 {
            return Err(PolicyError::Threshold);
        }
        Ok(())
    }
}

/// Sub-gradient must exceed this before an increment fires.
const INCREMENT_TOL: f64 = 1e-9;

/// Mutable state of the learning policy.
#[derive(Debug, Clone)]
pub struct LearnerState {
    pub coefficients: CapacityCoefficients,
    /// K group counters followed by I channel counters.
    pub counters: Vec<u32>,
    pub params: LearnerParams,
    version: u64,
    dual: Option<(u64, DualPoint)>,
    increments: u64,
}

impl LearnerState {
    pub fn new(
        config: &NetworkConfig,
        initial: CapacityCoefficients,
        params: LearnerParams,
    ) -> Result<Self, PolicyError> {
        initial.validate(config)?;
        params.validate()?;
        Ok(Self {
            coefficients: initial,
            counters: vec![0; config.num_groups() + config.num_channels()],
            params,
            version: 0,
            dual: None,
            increments: 0,
        })
    }

    /// Bumped every time a coefficient value actually changes.
    pub fn version(&self) -> u64 {
        self.version
    }

    /// Number of increment adjustments applied so far.
    pub fn increments(&self) -> u64 {
        self.increments
    }

    fn set(&mut self, slot: Slot, value: f64) {
        let cur = match slot {
            Slot::Gamma(k) => &mut self.coefficients.gamma[k],
            Slot::Eta(i) => &mut self.coefficients.eta[i],
        };
        if *cur != value {
            *cur = value;
            self.version += 1;
        }
    }

    fn decrement(&mut self, tuple: &ResourceTuple) {
        if let ScGroup::Edge(k) = tuple.group {
            let v = (self.coefficients.gamma[k] - self.params.decrement_gamma).max(0.0);
            self.set(Slot::Gamma(k), v);
        }
        for i in [tuple.start, tuple.end] {
            let v = (self.coefficients.eta[i] - self.params.decrement_eta).max(0.0);
            self.set(Slot::Eta(i), v);
        }
    }

    fn dual(&mut self, config: &NetworkConfig) -> &DualPoint {
        let fresh = matches!(&self.dual, Some((v, _)) if *v == self.version);
        if !fresh {
            let mode = match self.params.subgradient {
                SubgradientMode::Lagrangian => DualMode::ActionOnly,
                SubgradientMode::Capacitated => DualMode::Capacitated,
            };
            let dual = greedy_dual(config, &self.coefficients, mode)
                .expect("coefficients validated and every class has a tuple");
            self.dual = Some((self.version, dual));
        }
        &self.dual.as_ref().expect("filled above").1
    }

    /// Counter `n` reached the threshold: reset it and raise the matching
    /// coefficient if its sub-gradient is positive.
    fn trigger(&mut self, n: usize, config: &NetworkConfig) {
        self.counters[n] = 0;
        let groups = config.num_groups();
        let (slot, step) = if n < groups {
            (Slot::Gamma(n), self.params.increment_gamma)
        } else {
            (Slot::Eta(n - groups), self.params.increment_eta)
        };
        if step == 0.0 {
            return;
        }
        let slope = {
            let policy = &self.dual(config).policy;
            match slot {
                Slot::Gamma(k) => subgradient_gamma(k, policy, config),
                Slot::Eta(i) => subgradient_eta(i, policy, config),
            }
        };
        if slope > INCREMENT_TOL {
            let v = match slot {
                Slot::Gamma(k) => self.coefficients.gamma[k] + step,
                Slot::Eta(i) => self.coefficients.eta[i] + step,
            };
            self.set(slot, v);
            self.increments += 1;
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Slot {
    Gamma(usize),
    Eta(usize),
}

/// One arrival under the learning policy, without a table cache.
pub fn hee_alrn_decide(
    class: usize,
    state: &SystemState,
    learner: &mut LearnerState,
    config: &NetworkConfig,
) -> PolicyDecision {
    let entries = index_entries(config, class, &learner.coefficients);
    alrn_step(&entries, class, state, learner, config)
}

fn index_entries(
    config: &NetworkConfig,
    class: usize,
    coeffs: &CapacityCoefficients,
) -> Vec<IndexEntry> {
    config
        .eligible(class)
        .iter()
        .map(|t| {
            let rate = config.service_rate(class, t);
            IndexEntry {
                tuple: *t,
                psi: index_unchecked(config, class, t, rate, coeffs),
                rate,
            }
        })
        .collect()
}

/// Same outcome as popping the sorted table: the pick is the minimum
/// available entry, and the popped entries are the unavailable ones ranked
/// before it. Only those are sorted, since triggers fire in pop order and
/// each may move the dual point seen by the next.
fn alrn_step(
    entries: &[IndexEntry],
    class: usize,
    state: &SystemState,
    learner: &mut LearnerState,
    config: &NetworkConfig,
) -> PolicyDecision {
    let mut chosen: Option<&IndexEntry> = None;
    let mut blocked = Vec::new();
    for e in entries {
        let check = state.check(config, class, &e.tuple);
        if check.is_available() {
            if chosen.is_none_or(|c| rank_cmp(e, c) == Ordering::Less) {
                chosen = Some(e);
            }
        } else {
            blocked.push((e, check));
        }
    }
    if let Some(c) = chosen {
        blocked.retain(|(e, _)| rank_cmp(e, c) == Ordering::Less);
    }
    blocked.sort_by(|a, b| rank_cmp(a.0, b.0));
    let groups = config.num_groups();
    let threshold = learner.params.threshold;
    let mut hit = Vec::new();
    for (e, check) in blocked {
        let t = e.tuple;
        let mut bump = |n: usize| {
            learner.counters[n] += 1;
            if learner.counters[n] >= threshold {
                hit.push(n);
            }
        };
        if let (false, ScGroup::Edge(k)) = (check.sc, t.group) {
            bump(k);
        }
        if !check.start {
            bump(groups + t.start);
        }
        if !check.end && t.end != t.start {
            bump(groups + t.end);
        }
    }
    let chosen = chosen.map(|c| c.tuple);
    if let Some(t) = chosen {
        learner.decrement(&t);
    }
    for n in hit {
        if learner.counters[n] >= threshold {
            learner.trigger(n, config);
        }
    }
    chosen.map_or(PolicyDecision::Block, PolicyDecision::Admit)
}

/// HEE-ALRN: index policy whose coefficients learn from blocked pops.
#[derive(Debug, Clone)]
pub struct HeeAlrn {
    pub learner: LearnerState,
    // unsorted index entries per class, tagged with the coefficient version
    entries: Vec<Option<(u64, Vec<IndexEntry>)>>,
}

impl HeeAlrn {
    pub fn new(
        config: &NetworkConfig,
        initial: CapacityCoefficients,
        params: LearnerParams,
    ) -> Result<Self, PolicyError> {
        Ok(Self {
            learner: LearnerState::new(config, initial, params)?,
            entries: vec![None; config.num_classes()],
        })
    }
}

impl Policy for HeeAlrn {
    fn name(&self) -> &'static str {
        "hee-alrn"
    }

    fn decide(
        &mut self,
        class: usize,
        state: &SystemState,
        config: &NetworkConfig,
    ) -> PolicyDecision {
        let version = self.learner.version;
        let slot = &mut self.entries[class];
        if !matches!(slot, Some((v, _)) if *v == version) {
            *slot = Some((
                version,
                index_entries(config, class, &self.learner.coefficients),
            ));
        }
        let entries = &slot.as_ref().expect("filled above").1;
        alrn_step(entries, class, state, &mut self.learner, config)
    }

    fn coefficients(&self) -> Option<&CapacityCoefficients> {
        Some(&self.learner.coefficients)
    }
}

/// Arg-max of `score` over available tuples; ties to larger u, then tuple order.
fn best_available(
    class: usize,
    state: &SystemState,
    config: &NetworkConfig,
    score: impl Fn(&ResourceTuple, f64) -> f64,
) -> PolicyDecision {
    let mut best: Option<(f64, f64, ResourceTuple)> = None;
    for t in config.eligible(class) {
        if !state.check(config, class, t).is_available() {
            continue;
        }
        let u = config.service_rate(class, t);
        let s = score(t, u);
        let better = match best {
            None => true,
            Some((bs, bu, _)) => s > bs || (s == bs && u > bu),
        };
        if better {
            best = Some((s, u, *t));
        }
    }
    best.map_or(PolicyDecision::Block, |(_, _, t)| PolicyDecision::Admit(t))
}

/// Expected revenue rate per unit requirement; revenue is negative power.
pub fn mrr_value(config: &NetworkConfig, class: usize, tuple: &ResourceTuple) -> f64 {
    let lambda = config.arrival_rate(class);
    let u = config.service_rate(class, tuple);
    let params = config.class(class);
    match tuple.group {
        ScGroup::Edge(k) => {
            let w = config.occupancy(class, k).unwrap_or(0) as f64;
            -lambda * w * config.operational_power(k) / ((lambda + u) * (w + 2.0))
        }
        ScGroup::Cloud => {
            let w = params.cloud_occupancy as f64;
            -lambda * u * params.cloud_energy_rate / ((lambda + u) * (w + 2.0))
        }
    }
}

pub fn mrr_decide(class: usize, state: &SystemState, config: &NetworkConfig) -> PolicyDecision {
    best_available(class, state, config, |t, _| mrr_value(config, class, t))
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Mrr;

impl Policy for Mrr {
    fn name(&self) -> &'static str {
        "mrr"
    }

    fn decide(
        &mut self,
        class: usize,
        state: &SystemState,
        config: &NetworkConfig,
    ) -> PolicyDecision {
        mrr_decide(class, state, config)
    }
}

/// Default cloud SC factor: one more than the largest edge capacity.
pub fn default_cloud_factor(config: &NetworkConfig) -> f64 {
    (0..config.num_groups())
        .map(|k| config.sc_capacity(k))
        .max()
        .unwrap_or(0) as f64
        + 1.0
}

pub fn nrm_vne_score(
    config: &NetworkConfig,
    state: &SystemState,
    tuple: &ResourceTuple,
    cloud_factor: f64,
) -> f64 {
    let sc = match tuple.group {
        ScGroup::Edge(k) => (config.sc_capacity(k) - state.sc_load(k)) as f64,
        ScGroup::Cloud => cloud_factor,
    };
    let free = |i: usize| (config.channel_capacity(i) - state.channel_load(i)) as f64;
    sc * free(tuple.start) * free(tuple.end)
}

pub fn nrm_vne_decide(
    class: usize,
    state: &SystemState,
    config: &NetworkConfig,
    cloud_factor: f64,
) -> PolicyDecision {
    best_available(class, state, config, |t, _| {
        nrm_vne_score(config, state, t, cloud_factor)
    })
}

#[derive(Debug, Clone, Copy)]
pub struct NrmVne {
    pub cloud_factor: f64,
}

impl NrmVne {
    pub fn new(config: &NetworkConfig, cloud_factor: Option<f64>) -> Result<Self, PolicyError> {
        let cloud_factor = cloud_factor.unwrap_or_else(|| default_cloud_factor(config));
        if !(cloud_factor.is_finite() && cloud_factor > 0.0) {
            return Err(PolicyError::CloudFactor(cloud_factor));
        }
        Ok(Self { cloud_factor })
    }
}

impl Policy for NrmVne {
    fn name(&self) -> &'static str {
        "nrm-vne"
    }

    fn decide(
        &mut self,
        class: usize,
        state: &SystemState,
        config: &NetworkConfig,
    ) -> PolicyDecision {
        nrm_vne_decide(class, state, config, self.cloud_factor)
    }
}

/// Initial γ and η for a scenario file. Missing vectors mean zeros.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialCoefficients {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<Vec<f64>>,
}

impl InitialCoefficients {
    pub fn resolve(&self, config: &NetworkConfig) -> Result<CapacityCoefficients, PolicyError> {
        let zeros = CapacityCoefficients::zeros(config);
        let coeffs = CapacityCoefficients {
            gamma: self.gamma.clone().unwrap_or(zeros.gamma),
            eta: self.eta.clone().unwrap_or(zeros.eta),
        };
        coeffs.validate(config)?;
        Ok(coeffs)
    }
}

/// A policy with its parameters, as named in scenario files and on the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PolicySpec {
    HeeAcc {
        #[serde(default)]
        initial: InitialCoefficients,
    },
    HeeAccZero,
    HeeAlrn {
        #[serde(default)]
        initial: InitialCoefficients,
        #[serde(default)]
        learner: LearnerParams,
    },
    Mrr,
    NrmVne {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cloud_capacity_factor: Option<f64>,
    },
}

impl PolicySpec {
    pub const NAMES: [&'static str; 5] = ["hee-acc", "hee-acc-zero", "hee-alrn", "mrr", "nrm-vne"];

    /// The policy with default parameters, by CLI name.
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "hee-acc" => Self::HeeAcc {
                initial: InitialCoefficients::default(),
            },
            "hee-acc-zero" => Self::HeeAccZero,
            "hee-alrn" => Self::HeeAlrn {
                initial: InitialCoefficients::default(),
                learner: LearnerParams::default(),
            },
            "mrr" => Self::Mrr,
            "nrm-vne" => Self::NrmVne {
                cloud_capacity_factor: None,
            },
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::HeeAcc { .. } => "hee-acc",
            Self::HeeAccZero => "hee-acc-zero",
            Self::HeeAlrn { .. } => "hee-alrn",
            Self::Mrr => "mrr",
            Self::NrmVne { .. } => "nrm-vne",
        }
    }

    pub fn build(&self, config: &NetworkConfig) -> Result<Box<dyn Policy>, PolicyError> {
        Ok(match self {
            Self::HeeAcc { initial } => Box::new(HeeAcc::new(config, initial.resolve(config)?)?),
            Self::HeeAccZero => Box::new(HeeAcc::zero(config)),
            Self::HeeAlrn { initial, learner } => {
                Box::new(HeeAlrn::new(config, initial.resolve(config)?, *learner)?)
            }
            Self::Mrr => Box::new(Mrr),
            Self::NrmVne {
                cloud_capacity_factor,
            } => Box::new(NrmVne::new(config, *cloud_capacity_factor)?),
        })
    }
}
