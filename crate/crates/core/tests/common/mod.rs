#![allow(dead_code)]

use mec_core::model::{
    ClassSpec, NetworkConfig, NetworkSpec, Occupancy, ResourceTuple, ScGroup, ServiceBlock,
};
use mec_core::policies::PolicyDecision;
use mec_core::sim::TraceRecord;
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;

/// A small random network where every class has at least one eligible tuple.
pub fn random_spec<R: Rng>(rng: &mut R) -> NetworkSpec {
    let groups = rng.gen_range(1..=3);
    let channels = rng.gen_range(1..=4);
    let classes = rng.gen_range(1..=3);
    let sc_capacity: Vec<u32> = (0..groups).map(|_| rng.gen_range(1..=6)).collect();
    let channel_capacity: Vec<u32> = (0..channels).map(|_| rng.gen_range(1..=4)).collect();
    let classes = (0..classes)
        .map(|_| {
            let occupancy: Vec<Occupancy> = sc_capacity
                .iter()
                .map(|&c| {
                    if rng.gen_bool(0.25) {
                        Occupancy::Forbidden
                    } else {
                        Occupancy::Units(rng.gen_range(1..=c))
                    }
                })
                .collect();
            let permitted: Vec<usize> = (1..=groups)
                .filter(|k| occupancy[k - 1] != Occupancy::Forbidden)
                .collect();
            let edge_groups: Vec<usize> = permitted
                .iter()
                .copied()
                .filter(|_| rng.gen_bool(0.7))
                .collect();
            let cloud = edge_groups.is_empty() || rng.gen_bool(0.5);
            let pick = |rng: &mut R| {
                let mut all: Vec<usize> = (1..=channels).collect();
                all.shuffle(rng);
                all.truncate(rng.gen_range(1..=channels));
                all.sort();
                all
            };
            let start = pick(rng);
            let end = pick(rng);
            ClassSpec {
                arrival_rate: rng.gen_range(0.2..3.0),
                occupancy,
                cloud_occupancy: 1,
                cloud_energy_rate: rng.gen_range(1.0..20.0),
                service: vec![ServiceBlock {
                    start,
                    end,
                    edge_groups,
                    cloud,
                    rate: rng.gen_range(0.2..3.0),
                }],
            }
        })
        .collect();
    NetworkSpec {
        num_areas: 1,
        cloud_backhaul_delay: 0.0,
        edge_operational_power: (0..groups).map(|_| rng.gen_range(0.5..10.0)).collect(),
        edge_static_power: (0..groups).map(|_| rng.gen_range(0.0..2.0)).collect(),
        area_map: vec![1; groups],
        sc_capacity,
        channel_capacity,
        classes,
    }
}

pub fn random_config<R: Rng>(rng: &mut R) -> NetworkConfig {
    NetworkConfig::from_spec(&random_spec(rng)).expect("generator yields valid networks")
}

/// Stationary law of the birth–death chain from its generator matrix:
/// solves πQ = 0 with the last balance equation replaced by Σπ = 1.
pub fn generator_stationary(alpha: &[f64], lambda: f64, u: f64) -> Vec<f64> {
    let n = alpha.len();
    let mut q = DMatrix::<f64>::zeros(n, n);
    for x in 0..n {
        if x + 1 < n {
            q[(x, x + 1)] = lambda * alpha[x];
        }
        if x > 0 {
            q[(x, x - 1)] = x as f64 * u;
        }
        let out: f64 = (0..n).filter(|&y| y != x).map(|y| q[(x, y)]).sum();
        q[(x, x)] = -out;
    }
    let mut a = q.transpose();
    for c in 0..n {
        a[(n - 1, c)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;
    let pi = a
        .lu()
        .solve(&b)
        .expect("irreducible on its recurrent class");
    pi.iter().copied().collect()
}

/// Resource bookkeeping written from the constraint definitions alone.
pub struct Ledger {
    counts: std::collections::HashMap<(usize, ResourceTuple), u32>,
    sc: Vec<u64>,
    ch: Vec<u64>,
}

impl Ledger {
    pub fn new(config: &NetworkConfig) -> Self {
        Self {
            counts: Default::default(),
            sc: vec![0; config.num_groups()],
            ch: vec![0; config.num_channels()],
        }
    }

    pub fn fits(&self, config: &NetworkConfig, j: usize, t: &ResourceTuple) -> bool {
        if let ScGroup::Edge(k) = t.group {
            let Some(w) = config.occupancy(j, k) else {
                return false;
            };
            if self.sc[k] + w as u64 > config.sc_capacity(k) as u64 {
                return false;
            }
        }
        let mut extra = vec![0u64; config.num_channels()];
        extra[t.start] += 1;
        extra[t.end] += 1;
        (0..config.num_channels())
            .all(|i| self.ch[i] + extra[i] <= config.channel_capacity(i) as u64)
    }

    fn apply(&mut self, config: &NetworkConfig, j: usize, t: &ResourceTuple, sign: i64) {
        if let ScGroup::Edge(k) = t.group {
            let w = config.occupancy(j, k).unwrap() as i64;
            self.sc[k] = (self.sc[k] as i64 + sign * w) as u64;
        }
        self.ch[t.start] = (self.ch[t.start] as i64 + sign) as u64;
        self.ch[t.end] = (self.ch[t.end] as i64 + sign) as u64;
        let c = self.counts.entry((j, *t)).or_default();
        *c = (*c as i64 + sign) as u32;
    }

    /// Replays one trace record; returns a description of any violation.
    pub fn replay(&mut self, config: &NetworkConfig, rec: &TraceRecord) -> Result<(), String> {
        match *rec {
            TraceRecord::Arrival {
                time,
                class,
                decision,
            } => match decision {
                PolicyDecision::Admit(t) => {
                    if config.service_rate(class, &t) <= 0.0 {
                        return Err(format!(
                            "t={time}: class {class} admitted on ineligible {t:?}"
                        ));
                    }
                    if !self.fits(config, class, &t) {
                        return Err(format!(
                            "t={time}: class {class} admitted over capacity on {t:?}"
                        ));
                    }
                    self.apply(config, class, &t, 1);
                }
                PolicyDecision::Block => {
                    if let Some(t) = config
                        .eligible(class)
                        .iter()
                        .find(|t| self.fits(config, class, t))
                    {
                        return Err(format!(
                            "t={time}: class {class} blocked while {t:?} was free"
                        ));
                    }
                }
            },
            TraceRecord::Departure { time, class, tuple } => {
                if self.counts.get(&(class, tuple)).copied().unwrap_or(0) == 0 {
                    return Err(format!("t={time}: departure from empty {tuple:?}"));
                }
                self.apply(config, class, &tuple, -1);
            }
        }
        for k in 0..config.num_groups() {
            if self.sc[k] > config.sc_capacity(k) as u64 {
                return Err(format!("SC group {k} over capacity"));
            }
        }
        for i in 0..config.num_channels() {
            if self.ch[i] > config.channel_capacity(i) as u64 {
                return Err(format!("channel {i} over capacity"));
            }
        }
        Ok(())
    }
}

/// Erlang-B blocking probability for offered load `a` on `c` servers.
pub fn erlang_b(c: u32, a: f64) -> f64 {
    (1..=c).fold(1.0, |b, k| a * b / (k as f64 + a * b))
}
