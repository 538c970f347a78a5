use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::Serialize;

use super::{solve_item, DelayPoint, OctantPlan, Probe, SweepContext};
use crate::error::{Result, SweepError};
use crate::kernel::{AccumulateMode, FluxSlot, FluxState};
use crate::schedule::ScheduleEntry;

/// How the angles of an octant share buckets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AngleScheme {
    /// One angle at a time, each with its own bucket sequence.
    Sequential,
    /// Same-level buckets of every angle merged into one pass.
    #[default]
    Simultaneous,
}

impl FromStr for AngleScheme {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sequential" => Ok(Self::Sequential),
            "simultaneous" => Ok(Self::Simultaneous),
            other => Err(SweepError::Config(format!("unknown angle scheme '{other}'"))),
        }
    }
}

impl fmt::Display for AngleScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Sequential => "sequential",
            Self::Simultaneous => "simultaneous",
        })
    }
}

/// Fork-join executor for bucket loops: `W` static blocks per bucket.
///
/// With the `parallel` feature the blocks run on a dedicated rayon pool of
/// `W` threads; without it they run one after another on the caller.
pub struct BspExecutor {
    workers: usize,
    #[cfg(feature = "parallel")]
    pool: Option<rayon::ThreadPool>,
}

impl BspExecutor {
    pub fn new(workers: usize) -> Result<Self> {
        if workers == 0 {
            return Err(SweepError::Config("BSP needs at least one worker".into()));
        }
        #[cfg(feature = "parallel")]
        let pool = if workers > 1 {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .thread_name(|i| format!("bsp-worker-{i}"))
                .build()
                .map_err(|e| SweepError::Config(format!("cannot start BSP pool: {e}")))?;
            Some(pool)
        } else {
            None
        };
        Ok(Self {
            workers,
            #[cfg(feature = "parallel")]
            pool,
        })
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    /// Runs `block(b)` for every `b < W` and returns once all have finished.
    pub fn run_blocks(&self, block: &(dyn Fn(usize) + Sync)) {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            pool.scope(|s| {
                for b in 0..self.workers {
                    s.spawn(move |_| block(b));
                }
            });
            return;
        }
        for b in 0..self.workers {
            block(b);
        }
    }
}

impl fmt::Debug for BspExecutor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BspExecutor").field("workers", &self.workers).finish()
    }
}

/// Timing of one bucket between its fork and its barrier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BucketTiming {
    pub octant: usize,
    /// `None` for merged buckets.
    pub angle: Option<usize>,
    pub bucket: usize,
    pub items: usize,
    pub seconds: f64,
    /// Latest minus mean block arrival at the barrier, seconds.
    pub imbalance: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct BspStats {
    pub barriers: usize,
    pub items: usize,
    pub buckets: Vec<BucketTiming>,
}

/// Bucket-synchronous sweep of one octant.
///
/// Every bucket's `entries x groups` items, entry-major with groups
/// ascending, are cut into `W` contiguous blocks; the next bucket starts
/// only after every block has finished. The first kernel error stops the
/// sweep at the following barrier.
pub fn sweep_octant_bsp(
    ctx: &SweepContext<'_>,
    plan: &OctantPlan,
    state: &mut FluxState,
    scheme: AngleScheme,
    executor: &BspExecutor,
    probe: &Probe<'_>,
) -> Result<BspStats> {
    state.begin_sweep();
    let state = &*state;
    let mut stats = BspStats::default();
    match scheme {
        AngleScheme::Sequential => {
            for schedule in &plan.schedules {
                let angle = schedule.directions[0].angle;
                for (t, bucket) in schedule.buckets.iter().enumerate() {
                    let timing = run_bucket(ctx, plan.octant, bucket, state, AccumulateMode::Exclusive, executor, probe)?;
                    stats.push(plan.octant, Some(angle), t, timing);
                }
            }
        }
        AngleScheme::Simultaneous => {
            for (t, bucket) in plan.merged.buckets.iter().enumerate() {
                let timing = run_bucket(ctx, plan.octant, bucket, state, AccumulateMode::Atomic, executor, probe)?;
                stats.push(plan.octant, None, t, timing);
            }
        }
    }
    Ok(stats)
}

impl BspStats {
    fn push(&mut self, octant: usize, angle: Option<usize>, bucket: usize, (items, seconds, imbalance): (usize, f64, f64)) {
        self.barriers += 1;
        self.items += items;
        self.buckets.push(BucketTiming {
            octant,
            angle,
            bucket,
            items,
            seconds,
            imbalance,
        });
    }
}

fn run_bucket(
    ctx: &SweepContext<'_>,
    octant: usize,
    entries: &[ScheduleEntry],
    state: &FluxState,
    mode: AccumulateMode,
    executor: &BspExecutor,
    probe: &Probe<'_>,
) -> Result<(usize, f64, f64)> {
    let groups = state.dims().groups;
    let items = entries.len() * groups;
    let workers = executor.workers();
    let arrivals: Vec<AtomicU64> = (0..workers).map(|_| AtomicU64::new(0)).collect();
    let failed = AtomicBool::new(false);
    let error = Mutex::new(None);
    let start = Instant::now();

    executor.run_blocks(&|block| {
        let lo = block * items / workers;
        let hi = (block + 1) * items / workers;
        for item in lo..hi {
            if failed.load(Ordering::Relaxed) {
                break;
            }
            let entry = entries[item / groups];
            let group = item % groups;
            if group == 0 {
                if let Some(d) = probe.delay_for(entry.elem, entry.angle, DelayPoint::BeforeSolve) {
                    d.wait();
                }
            }
            let opened = probe.trace.map(|t| t.open());
            let slot = FluxSlot {
                octant,
                angle: entry.angle,
                group,
                elem: entry.elem,
            };
            if let Err(e) = solve_item(ctx, state, slot, mode, probe) {
                failed.store(true, Ordering::Relaxed);
                error.lock().unwrap_or_else(|p| p.into_inner()).get_or_insert(e);
                break;
            }
            let solved = probe.trace.map(|t| t.mark());
            if group + 1 == groups {
                if let Some(d) = probe.delay_for(entry.elem, entry.angle, DelayPoint::AfterRelease) {
                    d.wait();
                }
            }
            if let (Some(trace), Some(opened), Some(solved)) = (probe.trace, opened, solved) {
                trace.close(entry.elem, entry.angle, Some(group), block, opened, solved);
            }
        }
        arrivals[block].store(start.elapsed().as_nanos() as u64, Ordering::Release);
    });

    let seconds = start.elapsed().as_secs_f64();
    if let Some(e) = error.into_inner().unwrap_or_else(|p| p.into_inner()) {
        return Err(e);
    }
    let arrivals: Vec<f64> = arrivals.iter().map(|a| a.load(Ordering::Acquire) as f64 * 1e-9).collect();
    let max = arrivals.iter().copied().fold(0.0, f64::max);
    let mean = arrivals.iter().sum::<f64>() / workers as f64;
    Ok((items, seconds, max - mean))
}
