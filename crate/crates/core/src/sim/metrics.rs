//! Per-replication accumulators.

use std::collections::BTreeMap;

use crate::model::ResourceTuple;

/// Time-binned view of one replication, over the whole run including warm-up.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TimelineBin {
    pub start: f64,
    pub end: f64,
    /// ∫ total power dt over the bin.
    pub energy: f64,
    pub operational_energy: f64,
    pub completions: u64,
    pub delay_sum: f64,
}

impl TimelineBin {
    pub fn power(&self) -> f64 {
        self.energy / (self.end - self.start)
    }

    pub fn throughput_per_watt(&self) -> f64 {
        let op = self.operational_energy;
        if op > 0.0 {
            self.completions as f64 / op
        } else {
            0.0
        }
    }

    pub fn average_delay(&self) -> f64 {
        if self.completions > 0 {
            self.delay_sum / self.completions as f64
        } else {
            0.0
        }
    }
}

/// Everything measured in one replication.
///
/// Windowed fields cover `[warm_up, horizon]`; `total_*` fields cover the
/// whole run and close the flow balance.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsAccumulator {
    pub replication: u32,
    pub seed: u64,
    pub horizon: f64,
    pub warm_up: f64,
    /// ∫ (edge operational + static + cloud) power dt.
    pub energy: f64,
    /// ∫ (edge operational + cloud) power dt.
    pub operational_energy: f64,
    pub static_energy: f64,
    pub arrivals: Vec<u64>,
    pub admissions: Vec<u64>,
    pub blocks: Vec<u64>,
    pub completions: u64,
    /// Summed realized lifespans of completed tasks.
    pub delay_sum: f64,
    pub total_arrivals: u64,
    pub total_admissions: u64,
    pub total_blocks: u64,
    pub total_completions: u64,
    pub in_flight_at_end: u64,
    pub events: u64,
    /// Admissions per (class, tuple) inside the window.
    pub admitted: BTreeMap<(usize, ResourceTuple), u64>,
    pub timeline: Vec<TimelineBin>,
}

impl MetricsAccumulator {
    pub fn new(
        classes: usize,
        horizon: f64,
        warm_up: f64,
        replication: u32,
        seed: u64,
        timeline_bin: Option<f64>,
    ) -> Self {
        let timeline = match timeline_bin {
            Some(w) if w > 0.0 => {
                let n = (horizon / w).ceil() as usize;
                (0..n)
                    .map(|b| TimelineBin {
                        start: b as f64 * w,
                        end: ((b + 1) as f64 * w).min(horizon),
                        ..TimelineBin::default()
                    })
                    .collect()
            }
            _ => Vec::new(),
        };
        Self {
            replication,
            seed,
            horizon,
            warm_up,
            energy: 0.0,
            operational_energy: 0.0,
            static_energy: 0.0,
            arrivals: vec![0; classes],
            admissions: vec![0; classes],
            blocks: vec![0; classes],
            completions: 0,
            delay_sum: 0.0,
            total_arrivals: 0,
            total_admissions: 0,
            total_blocks: 0,
            total_completions: 0,
            in_flight_at_end: 0,
            events: 0,
            admitted: BTreeMap::new(),
            timeline,
        }
    }

    pub fn window(&self) -> f64 {
        self.horizon - self.warm_up
    }

    fn in_window(&self, t: f64) -> bool {
        t >= self.warm_up
    }

    fn bin_of(&self, t: f64) -> Option<usize> {
        let w = self.timeline.first()?.end - self.timeline.first()?.start;
        let b = ((t / w) as usize).min(self.timeline.len() - 1);
        Some(b)
    }

    /// Adds `[from, to)` at constant operational and static power.
    pub fn integrate(&mut self, from: f64, to: f64, operational: f64, static_power: f64) {
        if to <= from {
            return;
        }
        let a = from.max(self.warm_up);
        if to > a {
            let dt = to - a;
            self.operational_energy += operational * dt;
            self.static_energy += static_power * dt;
            self.energy += (operational + static_power) * dt;
        }
        if self.timeline.is_empty() {
            return;
        }
        let first = self.bin_of(from).expect("timeline non-empty");
        for bin in self.timeline[first..].iter_mut() {
            if bin.start >= to {
                break;
            }
            let dt = to.min(bin.end) - from.max(bin.start);
            if dt > 0.0 {
                bin.operational_energy += operational * dt;
                bin.energy += (operational + static_power) * dt;
            }
        }
    }

    pub fn record_arrival(&mut self, t: f64, class: usize) {
        self.total_arrivals += 1;
        if self.in_window(t) {
            self.arrivals[class] += 1;
        }
    }

    pub fn record_admission(&mut self, t: f64, class: usize, tuple: ResourceTuple) {
        self.total_admissions += 1;
        if self.in_window(t) {
            self.admissions[class] += 1;
            *self.admitted.entry((class, tuple)).or_default() += 1;
        }
    }

    pub fn record_block(&mut self, t: f64, class: usize) {
        self.total_blocks += 1;
        if self.in_window(t) {
            self.blocks[class] += 1;
        }
    }

    pub fn record_completion(&mut self, t: f64, duration: f64) {
        self.total_completions += 1;
        if self.in_window(t) {
            self.completions += 1;
            self.delay_sum += duration;
        }
        if let Some(b) = self.bin_of(t) {
            let bin = &mut self.timeline[b];
            bin.completions += 1;
            bin.delay_sum += duration;
        }
    }

    /// Long-run average of total power over the window.
    pub fn average_power(&self) -> f64 {
        self.energy / self.window()
    }

    /// Average of edge operational plus cloud power over the window.
    pub fn operational_power(&self) -> f64 {
        self.operational_energy / self.window()
    }

    /// Completions per second.
    pub fn throughput(&self) -> f64 {
        self.completions as f64 / self.window()
    }

    /// Completions per joule of operational energy.
    pub fn throughput_per_watt(&self) -> f64 {
        let p = self.operational_power();
        if p > 0.0 {
            self.throughput() / p
        } else {
            0.0
        }
    }

    pub fn average_delay(&self) -> f64 {
        if self.completions > 0 {
            self.delay_sum / self.completions as f64
        } else {
            0.0
        }
    }

    pub fn blocking_rate(&self) -> f64 {
        let arrivals: u64 = self.arrivals.iter().sum();
        if arrivals > 0 {
            self.blocks.iter().sum::<u64>() as f64 / arrivals as f64
        } else {
            0.0
        }
    }

    pub fn class_blocking_rate(&self, class: usize) -> f64 {
        if self.arrivals[class] > 0 {
            self.blocks[class] as f64 / self.arrivals[class] as f64
        } else {
            0.0
        }
    }

    /// Whole-run flow balance: arrivals split into admissions and blocks,
    /// admissions into completions and tasks still in flight.
    pub fn flow_balanced(&self) -> bool {
        self.total_arrivals == self.total_admissions + self.total_blocks
            && self.total_admissions == self.total_completions + self.in_flight_at_end
    }
}
