use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::Serialize;

use super::{solve_item, DelayPoint, OctantPlan, Probe, SweepContext};
use crate::error::{Result, SweepError};
use crate::kernel::{AccumulateMode, FluxSlot, FluxState};
use crate::runtime::{TaskCtx, TaskPool};
use crate::schedule::DependencyTable;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct AmtStats {
    pub tasks: usize,
    pub roots: usize,
    pub steals: u64,
    pub hinted: u64,
    pub seconds: f64,
}

struct Env<'a> {
    ctx: &'a SweepContext<'a>,
    octant: usize,
    deps: &'a [DependencyTable],
    state: &'a FluxState,
    probe: &'a Probe<'a>,
    executed: AtomicUsize,
    failed: AtomicBool,
    error: Mutex<Option<SweepError>>,
}

impl Env<'_> {
    fn fail(&self, e: SweepError) {
        self.failed.store(true, Ordering::Release);
        self.error.lock().unwrap_or_else(|p| p.into_inner()).get_or_insert(e);
    }
}

/// Recursive task sweep of one octant.
///
/// One root task is spawned per in-degree-0 element of every angle. A task
/// solves all groups of its `(element, angle)`, then bumps the counter of
/// each downwind neighbor; the increment that completes a neighbor's
/// in-degree spawns that neighbor, hinted toward the worker that solved its
/// largest upwind face. The dependency counters of `plan` must be zero.
pub fn sweep_octant_amt(
    ctx: &SweepContext<'_>,
    plan: &OctantPlan,
    state: &mut FluxState,
    pool: &TaskPool,
    probe: &Probe<'_>,
) -> Result<AmtStats> {
    if plan
        .deps
        .iter()
        .any(|table| (0..table.num_elements()).any(|e| table.counter(e).load(Ordering::Acquire) != 0))
    {
        return Err(SweepError::Config(format!(
            "dependency counters of octant {} were not reset",
            plan.octant
        )));
    }
    state.begin_sweep();
    let env = Env {
        ctx,
        octant: plan.octant,
        deps: &plan.deps,
        state: &*state,
        probe,
        executed: AtomicUsize::new(0),
        failed: AtomicBool::new(false),
        error: Mutex::new(None),
    };
    let before = pool.stats();
    let start = Instant::now();
    let mut roots = 0;
    pool.scope(|s| {
        // reverse order so a single LIFO worker starts with angle 0, lowest root
        for (angle, table) in env.deps.iter().enumerate().rev() {
            for &root in table.roots().iter().rev() {
                roots += 1;
                let env = &env;
                s.spawn(None, move |tc| run_task(tc, env, root, angle));
            }
        }
    });
    let seconds = start.elapsed().as_secs_f64();
    let after = pool.stats();

    if let Some(e) = env.error.into_inner().unwrap_or_else(|p| p.into_inner()) {
        return Err(e);
    }
    let executed = env.executed.into_inner();
    let expected = state.dims().elements * state.dims().angles;
    if executed != expected {
        return Err(SweepError::IncompleteSweep {
            octant: plan.octant,
            executed,
            expected,
        });
    }
    Ok(AmtStats {
        tasks: executed,
        roots,
        steals: after.steals - before.steals,
        hinted: after.hinted - before.hinted,
        seconds,
    })
}

fn run_task<'s>(tc: &TaskCtx<'s>, env: &'s Env<'_>, elem: usize, angle: usize) {
    if env.failed.load(Ordering::Acquire) {
        return;
    }
    env.executed.fetch_add(1, Ordering::Relaxed);
    let probe = env.probe;
    let opened = probe.trace.map(|t| t.open());
    if let Some(d) = probe.delay_for(elem, angle, DelayPoint::BeforeSolve) {
        d.wait();
    }
    for group in 0..env.state.dims().groups {
        let slot = FluxSlot {
            octant: env.octant,
            angle,
            group,
            elem,
        };
        if let Err(e) = solve_item(env.ctx, env.state, slot, AccumulateMode::Atomic, probe) {
            env.fail(e);
            return;
        }
    }

    let solved = probe.trace.map(|t| t.mark());
    let table = &env.deps[angle];
    table.set_last_worker(elem, tc.worker());
    for &next in table.graph().downwind(elem) {
        let previous = table.counter(next).fetch_add(1, Ordering::AcqRel);
        if let Some(trace) = probe.trace {
            trace.increment(next, angle, previous);
        }
        let need = table.in_degree(next);
        let reached = previous + 1;
        if reached == need {
            tc.spawn(affinity(table, next), move |tc| run_task(tc, env, next, angle));
        } else if reached > need {
            env.fail(SweepError::CounterOvershoot {
                elem: next,
                angle,
                observed: reached,
                in_degree: need,
            });
        }
    }

    if let Some(d) = probe.delay_for(elem, angle, DelayPoint::AfterRelease) {
        d.wait();
    }
    if let (Some(trace), Some(opened), Some(solved)) = (probe.trace, opened, solved) {
        trace.close(elem, angle, None, tc.worker(), opened, solved);
    }
}

/// Last solver of the upwind neighbor across the largest inflow face,
/// lowest worker id among equal faces.
fn affinity(table: &DependencyTable, elem: usize) -> Option<usize> {
    let upwind = table.graph().upwind(elem);
    let largest = upwind.iter().map(|u| u.area).fold(0.0, f64::max);
    upwind
        .iter()
        .filter(|u| u.area >= largest * (1.0 - 1e-12))
        .filter_map(|u| table.last_worker(u.elem))
        .min()
}
