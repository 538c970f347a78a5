use super::{solve_item, Probe, SweepContext};
use crate::error::{Result, SweepError};
use crate::kernel::{AccumulateMode, FluxSlot, FluxState};
use crate::mesh::{face_orientation, FaceOrientation};

/// Largest `E·G·A·B` angular unknowns per octant the serial sweep accepts.
pub const SERIAL_UNKNOWN_LIMIT: usize = 1 << 26;

/// Reference sweep of one octant on the calling thread.
///
/// Angles run in ascending order. Within an angle the recursion is depth
/// first: after an element is solved its downwind neighbors are visited in
/// ascending id order, descending into each one as soon as its last upwind
/// neighbor is done. Adjacency is derived here from the face orientations
/// alone so the schedule module is not involved.
pub fn serial_sweep(ctx: &SweepContext<'_>, octant: usize, state: &mut FluxState, probe: &Probe<'_>) -> Result<()> {
    let dims = state.dims();
    let unknowns = dims.elements * dims.groups * dims.angles * dims.basis;
    if unknowns > SERIAL_UNKNOWN_LIMIT {
        return Err(SweepError::Config(format!(
            "serial sweep limited to {SERIAL_UNKNOWN_LIMIT} unknowns per octant, got {unknowns}"
        )));
    }
    state.begin_sweep();
    let state = &*state;
    let mesh = ctx.mesh;
    let n = mesh.num_elements();

    for angle in 0..dims.angles {
        let omega = ctx.quadrature.direction(octant, angle).omega;
        let mut downwind = vec![Vec::new(); n];
        let mut remaining = vec![0u32; n];
        for elem in 0..n {
            for face in 0..6 {
                let Some(neighbor) = mesh.elem_neighbors[elem][face] else {
                    continue;
                };
                match face_orientation(mesh, elem, face, omega) {
                    FaceOrientation::Outflow => downwind[elem].push(neighbor),
                    FaceOrientation::Inflow => remaining[elem] += 1,
                    FaceOrientation::Tangent => {}
                }
            }
            downwind[elem].sort_unstable();
        }

        let solve = |elem: usize| -> Result<()> {
            let opened = probe.trace.map(|t| t.open());
            for group in 0..dims.groups {
                let slot = FluxSlot {
                    octant,
                    angle,
                    group,
                    elem,
                };
                solve_item(ctx, state, slot, AccumulateMode::Exclusive, probe)?;
            }
            if let (Some(trace), Some(opened)) = (probe.trace, opened) {
                let solved = trace.mark();
                trace.close(elem, angle, None, 0, opened, solved);
            }
            Ok(())
        };

        let roots: Vec<usize> = (0..n).filter(|&e| remaining[e] == 0).collect();
        let mut solved = 0;
        let mut stack: Vec<(usize, usize)> = Vec::new();
        for root in roots {
            solve(root)?;
            solved += 1;
            stack.push((root, 0));
            while let Some(frame) = stack.last_mut() {
                let (elem, next) = *frame;
                let Some(&child) = downwind[elem].get(next) else {
                    stack.pop();
                    continue;
                };
                frame.1 += 1;
                remaining[child] -= 1;
                if remaining[child] == 0 {
                    solve(child)?;
                    solved += 1;
                    stack.push((child, 0));
                }
            }
        }
        if solved != n {
            return Err(SweepError::IncompleteSweep {
                octant,
                executed: solved,
                expected: n,
            });
        }
    }
    Ok(())
}
