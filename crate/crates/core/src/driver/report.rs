use serde::Serialize;

use super::Scheduler;
use crate::sweep::{AmtStats, AngleScheme, BucketTiming, GrindHistogram};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseTiming {
    pub phase: String,
    pub seconds: f64,
}

impl PhaseTiming {
    pub fn new(phase: &str, seconds: f64) -> Self {
        Self {
            phase: phase.to_string(),
            seconds,
        }
    }
}

/// Number of elements at one t-level of one `(octant, angle)` schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WavefrontRow {
    pub octant: usize,
    pub angle: usize,
    pub t_level: usize,
    pub element_count: usize,
}

/// Task counts summed over every octant sweep of a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct TaskSummary {
    pub sweeps: usize,
    pub tasks: usize,
    pub roots: usize,
    pub steals: u64,
    pub hinted: u64,
    pub seconds: f64,
}

impl TaskSummary {
    pub(crate) fn add(&mut self, stats: &AmtStats) {
        self.sweeps += 1;
        self.tasks += stats.tasks;
        self.roots += stats.roots;
        self.steals += stats.steals;
        self.hinted += stats.hinted;
        self.seconds += stats.seconds;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub scheduler: Scheduler,
    pub angle_scheme: Option<AngleScheme>,
    pub workers: usize,
    pub elements: usize,
    pub groups: usize,
    pub angles_per_octant: usize,
    /// Integrated flux per group after each outer iteration.
    pub outer_flux: Vec<Vec<f64>>,
    pub total_flux: f64,
    /// Wall time per phase; `total` is last and covers all the others.
    pub phases: Vec<PhaseTiming>,
    pub grind_sampling: bool,
    pub grind: GrindHistogram,
    pub barriers: usize,
    pub buckets: Vec<BucketTiming>,
    pub tasks: Option<TaskSummary>,
    pub wavefront: Vec<WavefrontRow>,
}

impl RunReport {
    pub fn phase(&self, name: &str) -> Option<f64> {
        self.phases.iter().find(|p| p.phase == name).map(|p| p.seconds)
    }

    pub fn grind_samples(&self) -> u64 {
        self.grind.samples
    }

    /// Time spent sweeping, summed over octants.
    pub fn sweep_seconds(&self) -> f64 {
        self.phases
            .iter()
            .filter(|p| p.phase.starts_with("sweep_octant_"))
            .map(|p| p.seconds)
            .sum()
    }

    /// Largest per-bucket imbalance, seconds.
    pub fn max_imbalance(&self) -> f64 {
        self.buckets.iter().map(|b| b.imbalance).fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> crate::error::Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
