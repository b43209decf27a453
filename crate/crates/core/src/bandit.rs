//! Restless-bandit machinery behind the index policies.
//!
//! Every eligible `(class, tuple)` pair is an independent birth–death chain
//! once the coupling constraints are relaxed with multipliers. This module
//! computes the per-tuple index ψ, the stationary law of a sub-problem chain
//! under randomized action variables, the greedy ν* search over the index
//! ranking, and the dual sub-gradients used by the learning policy.

use std::cmp::Ordering;

use thiserror::Error;

use crate::model::{NetworkConfig, ResourceTuple, ScGroup};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BanditError {
    #[error("tuple {tuple} is not eligible for class {class}")]
    Ineligible { class: usize, tuple: ResourceTuple },
    #[error("class {class} has no eligible tuple")]
    NoEligibleTuple { class: usize },
    #[error("invalid chain: {0}")]
    Chain(String),
    #[error("capacity coefficients must have {groups} gamma and {channels} eta entries")]
    CoefficientShape { groups: usize, channels: usize },
    #[error("capacity coefficient {0} is negative or not finite")]
    NegativeCoefficient(f64),
}

/// Lagrange multipliers γ (per edge group) and η (per channel).
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityCoefficients {
    pub gamma: Vec<f64>,
    pub eta: Vec<f64>,
}

impl CapacityCoefficients {
    pub fn zeros(config: &NetworkConfig) -> Self {
        Self {
            gamma: vec![0.0; config.num_groups()],
            eta: vec![0.0; config.num_channels()],
        }
    }

    pub fn validate(&self, config: &NetworkConfig) -> Result<(), BanditError> {
        if self.gamma.len() != config.num_groups() || self.eta.len() != config.num_channels() {
            return Err(BanditError::CoefficientShape {
                groups: config.num_groups(),
                channels: config.num_channels(),
            });
        }
        for &v in self.gamma.iter().chain(&self.eta) {
            if !(v.is_finite() && v >= 0.0) {
                return Err(BanditError::NegativeCoefficient(v));
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.gamma.iter().chain(&self.eta).all(|&v| v == 0.0)
    }
}

fn eligible_rate(
    config: &NetworkConfig,
    j: usize,
    tuple: &ResourceTuple,
) -> Result<f64, BanditError> {
    let u = config.service_rate(j, tuple);
    if u > 0.0 {
        Ok(u)
    } else {
        Err(BanditError::Ineligible {
            class: j,
            tuple: *tuple,
        })
    }
}

/// Expected power per unit service rate of serving class `j` on `tuple`.
pub fn energy_efficiency_ratio(
    config: &NetworkConfig,
    j: usize,
    tuple: &ResourceTuple,
) -> Result<f64, BanditError> {
    let u = eligible_rate(config, j, tuple)?;
    Ok(ratio_unchecked(config, j, tuple, u))
}

fn ratio_unchecked(config: &NetworkConfig, j: usize, tuple: &ResourceTuple, u: f64) -> f64 {
    let lambda = config.arrival_rate(j);
    match tuple.group {
        ScGroup::Edge(k) => {
            let w = config.occupancy(j, k).unwrap_or(0) as f64;
            lambda / u * config.operational_power(k) * w
        }
        ScGroup::Cloud => lambda * config.cloud_energy_rate(j),
    }
}

/// Index ψ_j(i,i',k): the energy-efficiency ratio plus the capacity
/// penalty `(1 + λ/u)(w γ_k + η_i + η_i')`; the cloud carries no γ term.
pub fn index(
    config: &NetworkConfig,
    j: usize,
    tuple: &ResourceTuple,
    coeffs: &CapacityCoefficients,
) -> Result<f64, BanditError> {
    let u = eligible_rate(config, j, tuple)?;
    Ok(index_unchecked(config, j, tuple, u, coeffs))
}

pub(crate) fn index_unchecked(
    config: &NetworkConfig,
    j: usize,
    tuple: &ResourceTuple,
    u: f64,
    coeffs: &CapacityCoefficients,
) -> f64 {
    let lambda = config.arrival_rate(j);
    let sc_penalty = match tuple.group {
        ScGroup::Edge(k) => config.occupancy(j, k).unwrap_or(0) as f64 * coeffs.gamma[k],
        ScGroup::Cloud => 0.0,
    };
    let penalty = sc_penalty + coeffs.eta[tuple.start] + coeffs.eta[tuple.end];
    ratio_unchecked(config, j, tuple, u) + (1.0 + lambda / u) * penalty
}

/// One tuple of a class, keyed for the ascending-ψ walk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexEntry {
    pub tuple: ResourceTuple,
    pub psi: f64,
    pub rate: f64,
}

/// Ascending ψ, then shorter expected lifespan (larger u), then tuple order.
pub(crate) fn rank_cmp(a: &IndexEntry, b: &IndexEntry) -> Ordering {
    a.psi
        .total_cmp(&b.psi)
        .then_with(|| b.rate.total_cmp(&a.rate))
        .then_with(|| a.tuple.cmp(&b.tuple))
}

/// The eligible tuples of one class in pop order.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexTable {
    pub class: usize,
    entries: Vec<IndexEntry>,
}

impl IndexTable {
    pub fn build(config: &NetworkConfig, j: usize, coeffs: &CapacityCoefficients) -> Self {
        let entries = config
            .eligible(j)
            .iter()
            .map(|t| {
                let rate = config.service_rate(j, t);
                IndexEntry {
                    tuple: *t,
                    psi: index_unchecked(config, j, t, rate, coeffs),
                    rate,
                }
            })
            .collect();
        Self::from_entries(j, entries)
    }

    pub fn from_entries(class: usize, mut entries: Vec<IndexEntry>) -> Self {
        entries.sort_by(rank_cmp);
        Self { class, entries }
    }

    pub fn entries(&self) -> &[IndexEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Per-class index tables keyed by a coefficient version number.
///
/// Owners bump the version whenever the coefficients change; a table is
/// rebuilt lazily on the next lookup for its class.
#[derive(Debug, Clone, Default)]
pub struct IndexCache {
    tables: Vec<Option<(u64, IndexTable)>>,
}

impl IndexCache {
    pub fn new(config: &NetworkConfig) -> Self {
        Self {
            tables: vec![None; config.num_classes()],
        }
    }

    pub fn table(
        &mut self,
        config: &NetworkConfig,
        j: usize,
        coeffs: &CapacityCoefficients,
        version: u64,
    ) -> &IndexTable {
        let slot = &mut self.tables[j];
        let fresh = matches!(slot, Some((v, _)) if *v == version);
        if !fresh {
            *slot = Some((version, IndexTable::build(config, j, coeffs)));
        }
        &slot.as_ref().expect("filled above").1
    }
}

/// Stationary law of the birth–death chain on `{0..=cap}` with birth rate
/// `lambda * alpha[x]` and death rate `x * u`, via detailed balance.
///
/// `alpha` holds one action variable per state; `alpha[cap]` does not move
/// the chain but still counts toward acceptance.
pub fn stationary_distribution(
    alpha: &[f64],
    lambda: f64,
    u: f64,
    cap: usize,
) -> Result<Vec<f64>, BanditError> {
    if alpha.len() != cap + 1 {
        return Err(BanditError::Chain(format!(
            "expected {} action variables, got {}",
            cap + 1,
            alpha.len()
        )));
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(BanditError::Chain(format!("arrival rate {lambda}")));
    }
    if !(u.is_finite() && u > 0.0) {
        return Err(BanditError::Chain(format!("service rate {u}")));
    }
    if let Some(a) = alpha.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(BanditError::Chain(format!(
            "action variable {a} outside [0,1]"
        )));
    }
    let mut pi = Vec::with_capacity(cap + 1);
    pi.push(1.0);
    for x in 0..cap {
        let next = pi[x] * lambda * alpha[x] / ((x + 1) as f64 * u);
        pi.push(next);
        if next > 1e250 {
            pi.iter_mut().for_each(|p| *p *= 1e-250);
        }
    }
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|p| *p /= total);
    Ok(pi)
}

fn chain_moments(alpha: &[f64], lambda: f64, u: f64) -> (f64, f64) {
    let pi = stationary_distribution(alpha, lambda, u, alpha.len() - 1)
        .expect("chain parameters validated by caller");
    let accept = pi.iter().zip(alpha).map(|(p, a)| p * a).sum();
    let occupancy = pi.iter().enumerate().map(|(x, p)| x as f64 * p).sum();
    (accept, occupancy)
}

/// Randomized action variables of one sub-problem chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainPolicy {
    pub class: usize,
    pub tuple: ResourceTuple,
    pub alpha: Vec<f64>,
}

impl ChainPolicy {
    /// (Σ π(x) α(x), Σ π(x) x) under this chain's stationary law.
    pub fn moments(&self, config: &NetworkConfig) -> (f64, f64) {
        let u = config.service_rate(self.class, &self.tuple);
        chain_moments(&self.alpha, config.arrival_rate(self.class), u)
    }
}

/// Action variables for every chain that received positive mass; chains
/// not listed have α ≡ 0 and sit at state 0.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SubProblemPolicy {
    pub chains: Vec<ChainPolicy>,
}

impl SubProblemPolicy {
    pub fn chain(&self, class: usize, tuple: &ResourceTuple) -> Option<&ChainPolicy> {
        self.chains
            .iter()
            .find(|c| c.class == class && c.tuple == *tuple)
    }

    /// Left-hand side of the relaxed action constraint for `class`.
    pub fn acceptance(&self, config: &NetworkConfig, class: usize) -> f64 {
        self.chains
            .iter()
            .filter(|c| c.class == class)
            .map(|c| c.moments(config).0)
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Saturation {
    /// The relaxed action constraint never reached equality.
    Open,
    Saturated,
}

/// ν*, the coefficients it was computed for, and the greedy assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPoint {
    pub nu: Vec<f64>,
    pub coefficients: CapacityCoefficients,
    pub flags: Vec<Saturation>,
    pub policy: SubProblemPolicy,
}

/// Which relaxed constraints may stop the greedy raise in [`greedy_dual`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DualMode {
    /// Action, SC-capacity and channel-capacity constraints all bind.
    Capacitated,
    /// Only the per-class action constraint binds: the Lagrangian minimizer
    /// at ν*(γ, η), which may overrun capacities.
    ActionOnly,
}

const SATURATION_TOL: f64 = 1e-9;
const BISECTION_TOL: f64 = 1e-13;

/// Smallest `a` in [0,1] with `f(a) >= target`, or 1 if the target is out
/// of reach. Each left-hand side is a ratio of functions linear in `a`, so
/// it is monotone and checking both ends suffices. `inner` picks the bracket
/// end on the `f < target` side, which keeps capacity limits feasible.
fn min_reaching(target: f64, inner: bool, f: impl Fn(f64) -> f64) -> f64 {
    if f(0.0) >= target {
        return 0.0;
    }
    if f(1.0) < target {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if f(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    if inner {
        lo
    } else {
        hi
    }
}

struct Greedy<'a> {
    config: &'a NetworkConfig,
    mode: DualMode,
    nu: Vec<f64>,
    flags: Vec<Saturation>,
    accept: Vec<f64>,
    group_load: Vec<f64>,
    channel_load: Vec<f64>,
    chains: Vec<ChainPolicy>,
}

impl Greedy<'_> {
    fn saturated(&self, j: usize) -> bool {
        self.flags[j] == Saturation::Saturated
    }

    /// Raises the action variables of one chain state by state.
    fn visit(&mut self, j: usize, entry: &IndexEntry) {
        let config = self.config;
        let tuple = entry.tuple;
        let lambda = config.arrival_rate(j);
        let u = entry.rate;
        let cap = config.chain_cap(j, &tuple);
        let units = tuple
            .group
            .edge()
            .map(|k| config.occupancy(j, k).unwrap_or(0) as f64);
        let mut alpha = vec![0.0; cap + 1];
        let accepted = self.accept[j];
        let (group_load, channel_load) = (&self.group_load, &self.channel_load);

        for x in 0..=cap {
            let eval = |a: f64| {
                let mut trial = alpha.clone();
                trial[x] = a;
                chain_moments(&trial, lambda, u)
            };
            let a_action = min_reaching(1.0, false, |a| accepted + eval(a).0);
            let (a_sc, a_channel) = match self.mode {
                DualMode::ActionOnly => (1.0, 1.0),
                DualMode::Capacitated => {
                    let a_sc = match (tuple.group, units) {
                        (ScGroup::Edge(k), Some(w)) => {
                            let c = config.sc_capacity(k) as f64;
                            min_reaching(c, true, |a| group_load[k] + w * eval(a).1)
                        }
                        _ => 1.0,
                    };
                    let a_channel = if tuple.start == tuple.end {
                        let n = config.channel_capacity(tuple.start) as f64;
                        min_reaching(n, true, |a| channel_load[tuple.start] + 2.0 * eval(a).1)
                    } else {
                        let ns = config.channel_capacity(tuple.start) as f64;
                        let ne = config.channel_capacity(tuple.end) as f64;
                        min_reaching(ns, true, |a| channel_load[tuple.start] + eval(a).1).min(
                            min_reaching(ne, true, |a| channel_load[tuple.end] + eval(a).1),
                        )
                    };
                    (a_sc, a_channel)
                }
            };
            let a = a_action.min(a_sc).min(a_channel);
            alpha[x] = a;
            let (acc, _) = chain_moments(&alpha, lambda, u);
            if accepted + acc >= 1.0 - SATURATION_TOL {
                self.flags[j] = Saturation::Saturated;
                self.nu[j] = entry.psi;
                break;
            }
            if a < 1.0 {
                break;
            }
        }

        let (acc, occ) = chain_moments(&alpha, lambda, u);
        self.accept[j] += acc;
        if let (ScGroup::Edge(k), Some(w)) = (tuple.group, units) {
            self.group_load[k] += w * occ;
        }
        self.channel_load[tuple.start] += occ;
        self.channel_load[tuple.end] += occ;
        if alpha.iter().any(|&a| a > 0.0) {
            self.chains.push(ChainPolicy {
                class: j,
                tuple,
                alpha,
            });
        }
    }
}

/// ν* search over the global ψ ranking.
///
/// Tuples of all classes are visited in ascending ψ (ties: larger u, then
/// class, then tuple order). Within a tuple the action variable of each
/// state, from 0 upward, is raised to the largest value that keeps the
/// relaxed action constraint of its class and (in capacitated mode) the
/// relaxed SC and channel constraints feasible. When the action constraint
/// reaches equality the class saturates, ν*_j becomes the current ψ, and the
/// class receives no further mass. When a capacity constraint binds the walk
/// leaves the tuple and continues with the next one.
pub fn greedy_dual(
    config: &NetworkConfig,
    coeffs: &CapacityCoefficients,
    mode: DualMode,
) -> Result<DualPoint, BanditError> {
    coeffs.validate(config)?;
    let classes = config.num_classes();
    for j in 0..classes {
        if config.eligible(j).is_empty() {
            return Err(BanditError::NoEligibleTuple { class: j + 1 });
        }
    }
    let entries = |j: usize| -> Vec<IndexEntry> {
        config
            .eligible(j)
            .iter()
            .map(|t| {
                let rate = config.service_rate(j, t);
                IndexEntry {
                    tuple: *t,
                    psi: index_unchecked(config, j, t, rate, coeffs),
                    rate,
                }
            })
            .collect()
    };

    let mut g = Greedy {
        config,
        mode,
        nu: vec![0.0; classes],
        flags: vec![Saturation::Open; classes],
        accept: vec![0.0; classes],
        group_load: vec![0.0; config.num_groups()],
        channel_load: vec![0.0; config.num_channels()],
        chains: Vec::new(),
    };

    match mode {
        DualMode::Capacitated => {
            let mut ranked: Vec<(usize, IndexEntry)> = (0..classes)
                .flat_map(|j| entries(j).into_iter().map(move |e| (j, e)))
                .collect();
            ranked.sort_by(|(ja, a), (jb, b)| {
                a.psi
                    .total_cmp(&b.psi)
                    .then_with(|| b.rate.total_cmp(&a.rate))
                    .then_with(|| ja.cmp(jb))
                    .then_with(|| a.tuple.cmp(&b.tuple))
            });
            for (j, entry) in &ranked {
                if g.flags.iter().all(|f| *f == Saturation::Saturated) {
                    break;
                }
                if !g.saturated(*j) {
                    g.visit(*j, entry);
                }
            }
        }
        // classes do not interact, so each walks its own ranking, which
        // almost always ends at its first tuple
        DualMode::ActionOnly => {
            for j in 0..classes {
                let mut es = entries(j);
                let first = (0..es.len())
                    .min_by(|&a, &b| rank_cmp(&es[a], &es[b]))
                    .expect("non-empty");
                es.swap(0, first);
                g.visit(j, &es[0]);
                if !g.saturated(j) {
                    es[1..].sort_by(rank_cmp);
                    for e in &es[1..] {
                        g.visit(j, e);
                        if g.saturated(j) {
                            break;
                        }
                    }
                }
            }
        }
    }

    Ok(DualPoint {
        nu: g.nu,
        coefficients: coeffs.clone(),
        flags: g.flags,
        policy: SubProblemPolicy { chains: g.chains },
    })
}

/// ν*(γ, η) and the greedy action assignment with all three relaxed
/// constraints active.
pub fn compute_nu_star(
    config: &NetworkConfig,
    coeffs: &CapacityCoefficients,
) -> Result<DualPoint, BanditError> {
    greedy_dual(config, coeffs, DualMode::Capacitated)
}

/// Sub-gradient of the dual in γ_k: relaxed SC load minus C_k.
pub fn subgradient_gamma(k: usize, policy: &SubProblemPolicy, config: &NetworkConfig) -> f64 {
    let load: f64 = policy
        .chains
        .iter()
        .filter(|c| c.tuple.group == ScGroup::Edge(k))
        .map(|c| config.occupancy(c.class, k).unwrap_or(0) as f64 * c.moments(config).1)
        .sum();
    load - config.sc_capacity(k) as f64
}

/// Sub-gradient of the dual in η_i: relaxed use of channel `i` as starting
/// or ending channel (a same-channel tuple counts twice) minus N_i.
pub fn subgradient_eta(i: usize, policy: &SubProblemPolicy, config: &NetworkConfig) -> f64 {
    let load: f64 = policy
        .chains
        .iter()
        .map(|c| {
            let hits = (c.tuple.start == i) as u8 + (c.tuple.end == i) as u8;
            if hits == 0 {
                0.0
            } else {
                hits as f64 * c.moments(config).1
            }
        })
        .sum();
    load - config.channel_capacity(i) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ClassSpec, NetworkSpec, Occupancy, ServiceBlock};

    fn one_tuple_spec(lambda: f64, u: f64, capacity: u32, channels: u32) -> NetworkSpec {
        NetworkSpec {
            num_areas: 1,
            cloud_backhaul_delay: 0.0,
            sc_capacity: vec![capacity],
            edge_operational_power: vec![1.0],
            edge_static_power: vec![0.0],
            area_map: vec![1],
            channel_capacity: vec![channels, channels],
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
        }
    }

    #[test]
    fn three_state_chain() {
        let pi = stationary_distribution(&[1.0, 1.0, 1.0], 1.0, 1.0, 2).unwrap();
        let expect = [0.4, 0.4, 0.2];
        for (p, e) in pi.iter().zip(expect) {
            assert!((p - e).abs() < 1e-15);
        }
    }

    #[test]
    fn no_births_stays_at_zero() {
        let pi = stationary_distribution(&[0.0; 5], 3.0, 1.0, 4).unwrap();
        assert_eq!(pi, vec![1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn truncated_poisson_weights() {
        let (lambda, u, cap) = (2.5, 0.5, 12);
        let pi = stationary_distribution(&vec![1.0; cap + 1], lambda, u, cap).unwrap();
        let load: f64 = lambda / u;
        let mut weights = Vec::new();
        let mut fact = 1.0;
        for x in 0..=cap {
            if x > 0 {
                fact *= x as f64;
            }
            weights.push(load.powi(x as i32) / fact);
        }
        let total: f64 = weights.iter().sum();
        for (p, w) in pi.iter().zip(&weights) {
            assert!((p - w / total).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_chains() {
        assert!(stationary_distribution(&[1.0, 1.0], 1.0, 1.0, 2).is_err());
        assert!(stationary_distribution(&[1.0, 1.5], 1.0, 1.0, 1).is_err());
        assert!(stationary_distribution(&[1.0, 1.0], 1.0, 0.0, 1).is_err());
    }

    #[test]
    fn single_tuple_saturates_at_its_own_index() {
        let cfg = NetworkConfig::from_spec(&one_tuple_spec(1.0, 1.0, 3, 50)).unwrap();
        let coeffs = CapacityCoefficients::zeros(&cfg);
        let dual = compute_nu_star(&cfg, &coeffs).unwrap();
        assert_eq!(dual.flags, vec![Saturation::Saturated]);
        let t = cfg.eligible(0)[0];
        assert_eq!(dual.nu[0], index(&cfg, 0, &t, &coeffs).unwrap());
        let chain = dual.policy.chain(0, &t).unwrap();
        assert!(chain.alpha.iter().all(|&a| a == 1.0));
        assert!((dual.policy.acceptance(&cfg, 0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sc_capacity_stops_the_raise() {
        // two classes with λ/u = 4 share a group of capacity 2; the first
        // alone puts E[X] = 20/13 on it
        let mut spec = one_tuple_spec(4.0, 1.0, 2, 10);
        spec.classes[0].service[0].cloud = true;
        spec.classes.push(spec.classes[0].clone());
        let cfg = NetworkConfig::from_spec(&spec).unwrap();
        let dual = compute_nu_star(&cfg, &CapacityCoefficients::zeros(&cfg)).unwrap();
        let edge = cfg.eligible(0)[0];
        let g = subgradient_gamma(0, &dual.policy, &cfg);
        assert!(g <= 1e-9, "relaxed SC load must stay within C: {g}");
        assert!(g > -1e-6, "SC constraint should bind: {g}");
        let first = dual.policy.chain(0, &edge).unwrap();
        assert!(first.alpha.iter().all(|&a| a == 1.0));
        let second = dual.policy.chain(1, &edge).unwrap();
        assert!(second.alpha[0] < 1.0);
        // the cloud picks up the remainder and saturates both classes
        assert_eq!(dual.flags, vec![Saturation::Saturated; 2]);
        for j in 0..2 {
            assert!((dual.policy.acceptance(&cfg, j) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn action_only_mode_ignores_capacity() {
        let mut spec = one_tuple_spec(4.0, 1.0, 1, 5);
        spec.classes[0].service[0].cloud = true;
        let cfg = NetworkConfig::from_spec(&spec).unwrap();
        let dual = greedy_dual(
            &cfg,
            &CapacityCoefficients::zeros(&cfg),
            DualMode::ActionOnly,
        )
        .unwrap();
        let edge = cfg.eligible(0)[0];
        let chain = dual.policy.chain(0, &edge).unwrap();
        assert_eq!(chain.alpha, vec![1.0, 1.0]);
        // E[X] = 4/5 on a single-unit group, still below C = 1
        let g = subgradient_gamma(0, &dual.policy, &cfg);
        assert!((g - (0.8 - 1.0)).abs() < 1e-12);
        assert_eq!(dual.policy.chains.len(), 1);
    }

    #[test]
    fn subgradients_of_idle_policy() {
        let cfg = NetworkConfig::from_spec(&one_tuple_spec(1.0, 1.0, 3, 4)).unwrap();
        let idle = SubProblemPolicy::default();
        assert_eq!(subgradient_gamma(0, &idle, &cfg), -3.0);
        assert_eq!(subgradient_eta(1, &idle, &cfg), -4.0);
    }

    #[test]
    fn subgradients_of_three_state_chain() {
        // E[X] = 0.8 for α ≡ 1, λ = u, cap 2.
        let cfg = NetworkConfig::from_spec(&one_tuple_spec(1.0, 1.0, 1, 1)).unwrap();
        let t = cfg.eligible(0)[0];
        let policy = SubProblemPolicy {
            chains: vec![ChainPolicy {
                class: 0,
                tuple: t,
                alpha: vec![1.0, 1.0, 1.0],
            }],
        };
        assert!((subgradient_gamma(0, &policy, &cfg) + 0.2).abs() < 1e-12);
        assert!((subgradient_eta(0, &policy, &cfg) + 0.2).abs() < 1e-12);
        assert!((subgradient_eta(1, &policy, &cfg) + 0.2).abs() < 1e-12);
    }

    #[test]
    fn same_channel_tuple_counts_twice_in_eta() {
        let mut spec = one_tuple_spec(1.0, 1.0, 4, 4);
        spec.classes[0].service[0].end = vec![1];
        let cfg = NetworkConfig::from_spec(&spec).unwrap();
        let t = cfg.eligible(0)[0];
        assert_eq!(t.start, t.end);
        let policy = SubProblemPolicy {
            chains: vec![ChainPolicy {
                class: 0,
                tuple: t,
                alpha: vec![1.0; cfg.chain_cap(0, &t) + 1],
            }],
        };
        let (_, occ) = policy.chains[0].moments(&cfg);
        assert!((subgradient_eta(0, &policy, &cfg) - (2.0 * occ - 4.0)).abs() < 1e-12);
    }

    #[test]
    fn doubling_units_doubles_sc_term() {
        let cfg1 = NetworkConfig::from_spec(&one_tuple_spec(1.0, 1.0, 4, 2)).unwrap();
        let mut spec = one_tuple_spec(1.0, 1.0, 4, 2);
        spec.classes[0].occupancy[0] = Occupancy::Units(2);
        let cfg2 = NetworkConfig::from_spec(&spec).unwrap();
        let t = cfg1.eligible(0)[0];
        let policy = SubProblemPolicy {
            chains: vec![ChainPolicy {
                class: 0,
                tuple: t,
                alpha: vec![1.0; 3],
            }],
        };
        let g1 = subgradient_gamma(0, &policy, &cfg1) + 4.0;
        let g2 = subgradient_gamma(0, &policy, &cfg2) + 4.0;
        assert!((g2 - 2.0 * g1).abs() < 1e-12);
    }

    #[test]
    fn rejects_class_without_tuples() {
        let mut spec = one_tuple_spec(1.0, 1.0, 4, 2);
        spec.classes.push(ClassSpec {
            service: vec![],
            ..spec.classes[0].clone()
        });
        let cfg = NetworkConfig::from_spec(&spec).unwrap();
        assert!(matches!(
            compute_nu_star(&cfg, &CapacityCoefficients::zeros(&cfg)),
            Err(BanditError::NoEligibleTuple { class: 2 })
        ));
    }

    #[test]
    fn cache_rebuilds_only_on_new_version() {
        let cfg = NetworkConfig::from_spec(&one_tuple_spec(1.0, 1.0, 4, 2)).unwrap();
        let mut cache = IndexCache::new(&cfg);
        let mut coeffs = CapacityCoefficients::zeros(&cfg);
        let psi0 = cache.table(&cfg, 0, &coeffs, 0).entries()[0].psi;
        coeffs.gamma[0] = 3.0;
        // same version: stale table is served
        assert_eq!(cache.table(&cfg, 0, &coeffs, 0).entries()[0].psi, psi0);
        assert!(cache.table(&cfg, 0, &coeffs, 1).entries()[0].psi > psi0);
    }
}
