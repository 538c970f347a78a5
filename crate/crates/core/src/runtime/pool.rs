use std::any::Any;
use std::marker::PhantomData;
use std::panic::{catch_unwind, resume_unwind, AssertUnwindSafe};
use std::sync::atomic::{fence, AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, Condvar, Mutex, MutexGuard};
use std::thread::JoinHandle;
use std::time::Duration;

use thiserror::Error;

use super::queue::WorkQueue;
use super::steal::{steal_orders, StealPolicy};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PoolError {
    #[error("task spawned on a pool that has been shut down")]
    ShutDown,
}

type Job = Box<dyn FnOnce(&TaskCtx<'static>) + Send + 'static>;

struct Queued {
    job: Job,
}

#[derive(Default)]
struct Control {
    running: bool,
    generation: u64,
    shutdown: bool,
}

struct Shared {
    queues: Vec<WorkQueue<Queued>>,
    steal_order: Vec<Vec<usize>>,
    in_flight: AtomicUsize,
    queued: AtomicUsize,
    shutdown: AtomicBool,
    control: Mutex<Control>,
    start: Condvar,
    done: Condvar,
    sleep_lock: Mutex<()>,
    sleepers: AtomicUsize,
    work: Condvar,
    panic: Mutex<Option<Box<dyn Any + Send>>>,
    spawned: AtomicU64,
    executed: AtomicU64,
    steals: AtomicU64,
    hinted: AtomicU64,
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

/// Cumulative pool counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PoolStats {
    pub spawned: u64,
    pub executed: u64,
    pub steals: u64,
    pub hinted: u64,
}

/// Work-stealing pool of persistent workers with one queue each.
///
/// Workers sleep between runs. Tasks spawned from the driver are queued
/// and execute once [`Scope::run_until_quiescent`] (or the end of
/// [`TaskPool::scope`]) wakes the workers. A run ends when the in-flight
/// count, incremented on spawn and decremented on completion, reaches zero.
/// A task that never terminates hangs the run.
pub struct TaskPool {
    shared: Arc<Shared>,
    threads: Mutex<Vec<JoinHandle<()>>>,
}

impl TaskPool {
    pub fn new(workers: usize) -> Self {
        Self::with_policy(workers, StealPolicy::Ring)
    }

    pub fn with_policy(workers: usize, policy: StealPolicy) -> Self {
        let workers = workers.max(1);
        let shared = Arc::new(Shared {
            queues: (0..workers).map(|_| WorkQueue::default()).collect(),
            steal_order: steal_orders(workers, &policy),
            in_flight: AtomicUsize::new(0),
            queued: AtomicUsize::new(0),
            shutdown: AtomicBool::new(false),
            control: Mutex::new(Control::default()),
            start: Condvar::new(),
            done: Condvar::new(),
            sleep_lock: Mutex::new(()),
            sleepers: AtomicUsize::new(0),
            work: Condvar::new(),
            panic: Mutex::new(None),
            spawned: AtomicU64::new(0),
            executed: AtomicU64::new(0),
            steals: AtomicU64::new(0),
            hinted: AtomicU64::new(0),
        });
        let threads = (0..workers)
            .map(|index| {
                let shared = Arc::clone(&shared);
                std::thread::Builder::new()
                    .name(format!("sweep-worker-{index}"))
                    .spawn(move || worker_main(&shared, index))
                    .expect("failed to start pool worker")
            })
            .collect();
        Self {
            shared,
            threads: Mutex::new(threads),
        }
    }

    pub fn workers(&self) -> usize {
        self.shared.queues.len()
    }

    pub fn steal_order(&self, worker: usize) -> &[usize] {
        &self.shared.steal_order[worker]
    }

    pub fn stats(&self) -> PoolStats {
        let s = &self.shared;
        PoolStats {
            spawned: s.spawned.load(Ordering::Acquire),
            executed: s.executed.load(Ordering::Acquire),
            steals: s.steals.load(Ordering::Acquire),
            hinted: s.hinted.load(Ordering::Acquire),
        }
    }

    pub fn in_flight(&self) -> usize {
        self.shared.in_flight.load(Ordering::Acquire)
    }

    pub fn queued(&self) -> usize {
        self.shared.queues.iter().map(WorkQueue::len).sum()
    }

    pub fn is_shut_down(&self) -> bool {
        self.shared.shutdown.load(Ordering::Acquire)
    }

    /// Runs `f` with a scope whose tasks may borrow from the enclosing
    /// stack. Returns once every task spawned inside has completed. A
    /// panicking task is re-raised here after the pool is quiescent.
    pub fn scope<'env, F, R>(&self, f: F) -> R
    where
        F: for<'scope> FnOnce(&'scope Scope<'scope, 'env>) -> R,
    {
        let scope = Scope {
            shared: &self.shared,
            _scope: PhantomData,
            _env: PhantomData,
        };
        let result = catch_unwind(AssertUnwindSafe(|| f(&scope)));
        scope.run_until_quiescent();
        match result {
            Ok(r) => r,
            Err(p) => resume_unwind(p),
        }
    }

    /// Stops the workers. Later spawns fail with [`PoolError::ShutDown`].
    pub fn shutdown(&self) {
        self.shared.shutdown.store(true, Ordering::Release);
        {
            let mut ctl = lock(&self.shared.control);
            ctl.shutdown = true;
            self.shared.start.notify_all();
        }
        {
            let _g = lock(&self.shared.sleep_lock);
            self.shared.work.notify_all();
        }
        for handle in lock(&self.threads).drain(..) {
            let _ = handle.join();
        }
    }
}

impl Drop for TaskPool {
    fn drop(&mut self) {
        self.shutdown();
    }
}

impl std::fmt::Debug for TaskPool {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TaskPool").field("workers", &self.workers()).finish()
    }
}

/// Spawning handle for the driver side of a [`TaskPool::scope`].
pub struct Scope<'scope, 'env: 'scope> {
    shared: &'scope Shared,
    _scope: PhantomData<&'scope mut &'scope ()>,
    _env: PhantomData<&'env mut &'env ()>,
}

impl<'scope, 'env> Scope<'scope, 'env> {
    /// Queues `task` on the hinted worker, or worker 0 without a hint.
    pub fn spawn<F>(&self, hint: Option<usize>, task: F)
    where
        F: FnOnce(&TaskCtx<'scope>) + Send + 'scope,
    {
        self.try_spawn(hint, task).expect("spawn on a shut-down pool");
    }

    pub fn try_spawn<F>(&self, hint: Option<usize>, task: F) -> Result<(), PoolError>
    where
        F: FnOnce(&TaskCtx<'scope>) + Send + 'scope,
    {
        push(self.shared, None, hint, erase(task))
    }

    pub fn workers(&self) -> usize {
        self.shared.queues.len()
    }

    /// Wakes the workers and blocks until every queued task, and every
    /// task those spawn, has completed.
    pub fn run_until_quiescent(&self) {
        let shared = self.shared;
        if shared.in_flight.load(Ordering::Acquire) != 0 {
            let mut ctl = lock(&shared.control);
            ctl.generation += 1;
            ctl.running = true;
            shared.start.notify_all();
            while shared.in_flight.load(Ordering::Acquire) != 0 {
                ctl = shared.done.wait(ctl).unwrap_or_else(|e| e.into_inner());
            }
            ctl.running = false;
        }
        if let Some(p) = lock(&shared.panic).take() {
            resume_unwind(p);
        }
    }
}

/// Execution context handed to every task.
pub struct TaskCtx<'scope> {
    shared: &'scope Shared,
    worker: usize,
    stolen: bool,
}

impl<'scope> TaskCtx<'scope> {
    /// Index of the worker running this task.
    pub fn worker(&self) -> usize {
        self.worker
    }

    /// Whether this task was taken from another worker's queue.
    pub fn stolen(&self) -> bool {
        self.stolen
    }

    pub fn workers(&self) -> usize {
        self.shared.queues.len()
    }

    /// Queues `task` on the hinted worker, or on this worker without a hint.
    pub fn spawn<F>(&self, hint: Option<usize>, task: F)
    where
        F: FnOnce(&TaskCtx<'scope>) + Send + 'scope,
    {
        self.try_spawn(hint, task).expect("spawn on a shut-down pool");
    }

    pub fn try_spawn<F>(&self, hint: Option<usize>, task: F) -> Result<(), PoolError>
    where
        F: FnOnce(&TaskCtx<'scope>) + Send + 'scope,
    {
        push(self.shared, Some(self.worker), hint, erase(task))
    }
}

fn erase<'scope, F>(task: F) -> Job
where
    F: FnOnce(&TaskCtx<'scope>) + Send + 'scope,
{
    let boxed: Box<dyn FnOnce(&TaskCtx<'scope>) + Send + 'scope> = Box::new(task);
    // SAFETY: only the lifetime is erased. Every job is executed (or the
    // pool is shut down with it unrun only after the owning scope has
    // returned, which cannot happen: scopes wait for quiescence) before
    // the scope that borrows its captures ends.
    unsafe { std::mem::transmute::<Box<dyn FnOnce(&TaskCtx<'scope>) + Send + 'scope>, Job>(boxed) }
}

fn push(shared: &Shared, from: Option<usize>, hint: Option<usize>, job: Job) -> Result<(), PoolError> {
    if shared.shutdown.load(Ordering::Acquire) {
        return Err(PoolError::ShutDown);
    }
    let workers = shared.queues.len();
    let target = match hint {
        Some(h) => {
            shared.hinted.fetch_add(1, Ordering::Relaxed);
            h % workers
        }
        None => from.unwrap_or(0),
    };
    shared.in_flight.fetch_add(1, Ordering::AcqRel);
    shared.spawned.fetch_add(1, Ordering::Relaxed);
    shared.queues[target].push(Queued { job });
    shared.queued.fetch_add(1, Ordering::SeqCst);
    fence(Ordering::SeqCst);
    if shared.sleepers.load(Ordering::SeqCst) > 0 {
        let _g = lock(&shared.sleep_lock);
        shared.work.notify_one();
    }
    Ok(())
}

fn find_work(shared: &Shared, index: usize) -> Option<(Queued, bool)> {
    if let Some(job) = shared.queues[index].pop_local() {
        shared.queued.fetch_sub(1, Ordering::SeqCst);
        return Some((job, false));
    }
    for &victim in &shared.steal_order[index] {
        if let Some(job) = shared.queues[victim].steal() {
            shared.queued.fetch_sub(1, Ordering::SeqCst);
            shared.steals.fetch_add(1, Ordering::Relaxed);
            return Some((job, true));
        }
    }
    None
}

fn worker_main(shared: &Arc<Shared>, index: usize) {
    let mut seen = 0;
    loop {
        {
            let mut ctl = lock(&shared.control);
            loop {
                if ctl.shutdown {
                    return;
                }
                if ctl.running && ctl.generation != seen {
                    seen = ctl.generation;
                    break;
                }
                ctl = shared.start.wait(ctl).unwrap_or_else(|e| e.into_inner());
            }
        }
        run_phase(shared, index);
    }
}

fn run_phase(shared: &Shared, index: usize) {
    let mut idle = 0u32;
    loop {
        if let Some((queued, stolen)) = find_work(shared, index) {
            idle = 0;
            execute(shared, index, queued, stolen);
            continue;
        }
        if shared.in_flight.load(Ordering::Acquire) == 0 || shared.shutdown.load(Ordering::Acquire) {
            return;
        }
        idle += 1;
        if idle < 32 {
            std::hint::spin_loop();
        } else if idle < 64 {
            std::thread::yield_now();
        } else {
            let g = lock(&shared.sleep_lock);
            shared.sleepers.fetch_add(1, Ordering::SeqCst);
            fence(Ordering::SeqCst);
            if shared.queued.load(Ordering::SeqCst) == 0 && shared.in_flight.load(Ordering::SeqCst) != 0 {
                let _ = shared.work.wait_timeout(g, Duration::from_millis(1));
            } else {
                drop(g);
            }
            shared.sleepers.fetch_sub(1, Ordering::SeqCst);
        }
    }
}

fn execute(shared: &Shared, index: usize, queued: Queued, stolen: bool) {
    let ctx = TaskCtx {
        // SAFETY: `Shared` lives in an `Arc` held by this worker thread for
        // its whole lifetime; the fabricated lifetime never leaves the call.
        shared: unsafe { &*(shared as *const Shared) },
        worker: index,
        stolen,
    };
    if let Err(p) = catch_unwind(AssertUnwindSafe(|| (queued.job)(&ctx))) {
        let mut slot = lock(&shared.panic);
        if slot.is_none() {
            *slot = Some(p);
        }
    }
    shared.executed.fetch_add(1, Ordering::Relaxed);
    if shared.in_flight.fetch_sub(1, Ordering::AcqRel) == 1 {
        {
            let _ctl = lock(&shared.control);
            shared.done.notify_all();
        }
        let _g = lock(&shared.sleep_lock);
        shared.work.notify_all();
    }
}

/// Number of hardware threads, falling back to 1.
pub fn hardware_concurrency() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}
