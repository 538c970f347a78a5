use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::Serialize;

/// Lower edge of the first grind-time bin, seconds.
pub const GRIND_MIN_S: f64 = 1e-8;
/// Upper edge of the last grind-time bin, seconds.
pub const GRIND_MAX_S: f64 = 1e-2;
pub const GRIND_BINS: usize = 64;

/// Thread-safe log-spaced histogram of per-solve grind times.
///
/// Samples outside `[GRIND_MIN_S, GRIND_MAX_S)` are clamped into the first
/// or last bin so every recorded solve is counted exactly once.
#[derive(Debug)]
pub struct GrindSink {
    counts: Vec<AtomicU64>,
    total_ns: AtomicU64,
}

impl Default for GrindSink {
    fn default() -> Self {
        Self {
            counts: (0..GRIND_BINS).map(|_| AtomicU64::new(0)).collect(),
            total_ns: AtomicU64::new(0),
        }
    }
}

impl GrindSink {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bin_of(seconds: f64) -> usize {
        if !(seconds > GRIND_MIN_S) {
            return 0;
        }
        let span = (GRIND_MAX_S / GRIND_MIN_S).ln();
        let x = (seconds / GRIND_MIN_S).ln() / span * GRIND_BINS as f64;
        (x as usize).min(GRIND_BINS - 1)
    }

    pub fn record(&self, elapsed: Duration) {
        let seconds = elapsed.as_secs_f64();
        self.counts[Self::bin_of(seconds)].fetch_add(1, Ordering::Relaxed);
        self.total_ns.fetch_add(elapsed.as_nanos() as u64, Ordering::Relaxed);
    }

    pub fn samples(&self) -> u64 {
        self.counts.iter().map(|c| c.load(Ordering::Relaxed)).sum()
    }

    pub fn histogram(&self) -> GrindHistogram {
        let counts: Vec<u64> = self.counts.iter().map(|c| c.load(Ordering::Relaxed)).collect();
        GrindHistogram {
            samples: counts.iter().sum(),
            total_seconds: self.total_ns.load(Ordering::Relaxed) as f64 * 1e-9,
            counts,
        }
    }
}

/// Snapshot of a [`GrindSink`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrindHistogram {
    pub counts: Vec<u64>,
    pub samples: u64,
    pub total_seconds: f64,
}

impl Default for GrindHistogram {
    fn default() -> Self {
        Self {
            counts: vec![0; GRIND_BINS],
            samples: 0,
            total_seconds: 0.0,
        }
    }
}

impl GrindHistogram {
    /// `(lower, upper)` edges of bin `k`, seconds.
    pub fn bin_edges(k: usize) -> (f64, f64) {
        let ratio = (GRIND_MAX_S / GRIND_MIN_S).powf(1.0 / GRIND_BINS as f64);
        (GRIND_MIN_S * ratio.powi(k as i32), GRIND_MIN_S * ratio.powi(k as i32 + 1))
    }

    pub fn merge(&mut self, other: &GrindHistogram) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.samples += other.samples;
        self.total_seconds += other.total_seconds;
    }

    pub fn mean_seconds(&self) -> Option<f64> {
        (self.samples > 0).then(|| self.total_seconds / self.samples as f64)
    }
}

/// One executed work item. AMT tasks cover all groups (`group == None`);
/// BSP items are a single group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TaskRecord {
    pub elem: usize,
    pub angle: usize,
    pub group: Option<usize>,
    pub worker: usize,
    /// Seconds since the log was created.
    pub start: f64,
    pub stop: f64,
    /// Positions in the log's global event sequence. `solved_seq` is taken
    /// once the flux is written, before any downwind neighbor is released.
    pub start_seq: u64,
    pub solved_seq: u64,
    pub stop_seq: u64,
}

/// A dependency-counter increment and the value it replaced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Increment {
    pub elem: usize,
    pub angle: usize,
    pub previous: u32,
}

/// Task trace shared by every worker of a sweep.
#[derive(Debug)]
pub struct TraceLog {
    origin: Instant,
    seq: AtomicU64,
    tasks: Mutex<Vec<TaskRecord>>,
    increments: Mutex<Vec<Increment>>,
}

impl Default for TraceLog {
    fn default() -> Self {
        Self::new()
    }
}

impl TraceLog {
    pub fn new() -> Self {
        Self {
            origin: Instant::now(),
            seq: AtomicU64::new(0),
            tasks: Mutex::new(Vec::new()),
            increments: Mutex::new(Vec::new()),
        }
    }

    pub(crate) fn open(&self) -> (f64, u64) {
        (self.origin.elapsed().as_secs_f64(), self.seq.fetch_add(1, Ordering::AcqRel))
    }

    pub(crate) fn mark(&self) -> u64 {
        self.seq.fetch_add(1, Ordering::AcqRel)
    }

    pub(crate) fn close(
        &self,
        elem: usize,
        angle: usize,
        group: Option<usize>,
        worker: usize,
        opened: (f64, u64),
        solved_seq: u64,
    ) {
        let stop_seq = self.seq.fetch_add(1, Ordering::AcqRel);
        let stop = self.origin.elapsed().as_secs_f64();
        let record = TaskRecord {
            elem,
            angle,
            group,
            worker,
            start: opened.0,
            stop,
            start_seq: opened.1,
            solved_seq,
            stop_seq,
        };
        self.tasks.lock().unwrap_or_else(|e| e.into_inner()).push(record);
    }

    pub(crate) fn increment(&self, elem: usize, angle: usize, previous: u32) {
        self.increments
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .push(Increment { elem, angle, previous });
    }

    /// Records ordered by start sequence.
    pub fn tasks(&self) -> Vec<TaskRecord> {
        let mut t = self.tasks.lock().unwrap_or_else(|e| e.into_inner()).clone();
        t.sort_by_key(|r| r.start_seq);
        t
    }

    pub fn increments(&self) -> Vec<Increment> {
        self.increments.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }

    pub fn clear(&mut self) {
        self.tasks.get_mut().unwrap_or_else(|e| e.into_inner()).clear();
        self.increments.get_mut().unwrap_or_else(|e| e.into_inner()).clear();
    }
}

/// Where an injected delay runs inside a work item.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DelayPoint {
    /// Before the first group is assembled.
    BeforeSolve,
    /// After the last group is solved and, for AMT, after dependents have
    /// been released.
    AfterRelease,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InjectedDelay {
    pub duration: Duration,
    pub point: DelayPoint,
}

impl InjectedDelay {
    pub fn before_solve(duration: Duration) -> Self {
        Self {
            duration,
            point: DelayPoint::BeforeSolve,
        }
    }

    pub fn after_release(duration: Duration) -> Self {
        Self {
            duration,
            point: DelayPoint::AfterRelease,
        }
    }

    /// Sleeps for long delays and spins for short ones.
    pub fn wait(&self) {
        if self.duration >= Duration::from_micros(500) {
            std::thread::sleep(self.duration);
        } else {
            let start = Instant::now();
            while start.elapsed() < self.duration {
                std::hint::spin_loop();
            }
        }
    }
}

/// Chooses a delay for `(element, angle)`, or none.
pub type DelayHook<'a> = dyn Fn(usize, usize) -> Option<InjectedDelay> + Sync + 'a;

/// Optional instrumentation threaded through every sweep.
#[derive(Clone, Copy)]
pub struct Probe<'a> {
    pub grind: Option<&'a GrindSink>,
    pub trace: Option<&'a TraceLog>,
    pub delay: Option<&'a DelayHook<'a>>,
    /// Verify before every assembly that each upwind neighbor was solved in
    /// the current sweep.
    pub check_freshness: bool,
}

impl Default for Probe<'_> {
    fn default() -> Self {
        Self {
            grind: None,
            trace: None,
            delay: None,
            check_freshness: cfg!(debug_assertions),
        }
    }
}

impl<'a> Probe<'a> {
    pub fn with_grind(mut self, sink: &'a GrindSink) -> Self {
        self.grind = Some(sink);
        self
    }

    pub fn with_trace(mut self, log: &'a TraceLog) -> Self {
        self.trace = Some(log);
        self
    }

    pub fn with_delay(mut self, hook: &'a DelayHook<'a>) -> Self {
        self.delay = Some(hook);
        self
    }

    pub fn with_freshness(mut self, on: bool) -> Self {
        self.check_freshness = on;
        self
    }

    pub(crate) fn delay_for(&self, elem: usize, angle: usize, point: DelayPoint) -> Option<InjectedDelay> {
        self.delay.and_then(|hook| hook(elem, angle)).filter(|d| d.point == point)
    }
}

impl std::fmt::Debug for Probe<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Probe")
            .field("grind", &self.grind.is_some())
            .field("trace", &self.trace.is_some())
            .field("delay", &self.delay.is_some())
            .field("check_freshness", &self.check_freshness)
            .finish()
    }
}
