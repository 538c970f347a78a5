//! Octant sweeps: the serial reference, the bucket-synchronous scheduler and
//! the recursive task scheduler. All three share [`solve_item`].

mod amt;
mod bsp;
mod probe;
mod serial;

use std::cell::RefCell;
use std::time::Instant;

pub use amt::{sweep_octant_amt, AmtStats};
pub use bsp::{sweep_octant_bsp, AngleScheme, BspExecutor, BspStats, BucketTiming};
pub use probe::{
    DelayHook, DelayPoint, GrindHistogram, GrindSink, Increment, InjectedDelay, Probe, TaskRecord, TraceLog,
    GRIND_BINS, GRIND_MAX_S, GRIND_MIN_S,
};
pub use serial::{serial_sweep, SERIAL_UNKNOWN_LIMIT};

use crate::error::{Result, SweepError};
use crate::kernel::{accumulate_flux, assemble, AccumulateMode, CrossSectionTable, DenseSystem, FluxSlot, FluxState};
use crate::mesh::{ElementGeometry, HexMesh};
use crate::quadrature::QuadratureSet;
use crate::schedule::{compute_buckets, compute_dependency_counts, merge_octant_buckets, DependencyTable, SweepSchedule};

/// Read-only problem data every sweep needs.
#[derive(Debug, Clone, Copy)]
pub struct SweepContext<'a> {
    pub mesh: &'a HexMesh,
    pub geometry: &'a ElementGeometry,
    pub quadrature: &'a QuadratureSet,
    pub xs: &'a CrossSectionTable,
}

/// Precomputed per-angle schedules, the merged schedule and the dependency
/// tables of one octant.
#[derive(Debug)]
pub struct OctantPlan {
    pub octant: usize,
    pub schedules: Vec<SweepSchedule>,
    pub merged: SweepSchedule,
    pub deps: Vec<DependencyTable>,
}

impl OctantPlan {
    pub fn build(mesh: &HexMesh, quadrature: &QuadratureSet, octant: usize) -> Result<Self> {
        let directions = quadrature.octant_directions(octant);
        let schedules = directions
            .iter()
            .map(|&d| compute_buckets(mesh, d))
            .collect::<Result<Vec<_>>>()?;
        let merged = merge_octant_buckets(&schedules);
        let deps = directions.iter().map(|&d| compute_dependency_counts(mesh, d)).collect();
        Ok(Self {
            octant,
            schedules,
            merged,
            deps,
        })
    }
}

struct Scratch {
    system: DenseSystem,
    source: Vec<f64>,
}

thread_local! {
    static SCRATCH: RefCell<Scratch> = RefCell::new(Scratch {
        system: DenseSystem::new(0),
        source: Vec::new(),
    });
}

/// Assembles, solves, stores and accumulates one `(element, angle, group)`.
pub fn solve_item(
    ctx: &SweepContext<'_>,
    state: &FluxState,
    slot: FluxSlot,
    mode: AccumulateMode,
    probe: &Probe<'_>,
) -> Result<()> {
    let basis = ctx.geometry.basis_len();
    let omega = ctx.quadrature.direction(slot.octant, slot.angle).omega;
    let sigma_t = ctx.xs.sigt(ctx.mesh.material[slot.elem], slot.group);
    let view = ctx.geometry.element(slot.elem);
    SCRATCH.with(|cell| {
        let mut scratch = cell.borrow_mut();
        let Scratch { system, source } = &mut *scratch;
        if system.size() != basis {
            *system = DenseSystem::new(basis);
            *source = vec![0.0; basis];
        }
        let started = probe.grind.map(|_| Instant::now());
        state.angular_source(slot, source);
        let mut stale = None;
        assemble(system, ctx.mesh, ctx.geometry, slot.elem, omega, sigma_t, source, |face, trace| {
            let Some(neighbor) = ctx.mesh.elem_neighbors[slot.elem][face] else {
                return false;
            };
            let upwind = FluxSlot { elem: neighbor, ..slot };
            if probe.check_freshness && !state.is_fresh(upwind) {
                stale.get_or_insert(neighbor);
            }
            let base = state.psi_offset(upwind);
            for (t, &idx) in trace.iter_mut().zip(view.trace(face)) {
                *t = state.angular_flux.get(base + idx as usize);
            }
            true
        });
        if let Some(upwind) = stale {
            return Err(SweepError::StaleUpwind {
                elem: slot.elem,
                angle: slot.angle,
                group: slot.group,
                upwind,
            });
        }
        system.solve_in_place()?;
        if let (Some(sink), Some(t0)) = (probe.grind, started) {
            sink.record(t0.elapsed());
        }
        state.write_psi(slot, &system.b);
        accumulate_flux(state, slot, &system.b, state.weight(slot.angle), mode);
        state.mark_solved(slot);
        Ok(())
    })
}
