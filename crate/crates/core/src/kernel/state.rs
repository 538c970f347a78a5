use std::sync::atomic::{AtomicU64, Ordering};

use super::moments::{harmonic, MAX_MOMENTS};
use super::shared::{AccumulateMode, SharedBuf};
use crate::error::{Result, SweepError};
use crate::quadrature::{QuadratureSet, NUM_OCTANTS};

/// Problem extents shared by every flux array.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub angles: usize,
    pub groups: usize,
    pub elements: usize,
    pub basis: usize,
    pub moments: usize,
}

impl Dims {
    pub fn angular_unknowns(&self) -> usize {
        NUM_OCTANTS * self.angles * self.groups * self.elements * self.basis
    }
}

/// Identifies one `(octant, angle, group, element)` block of angular flux.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FluxSlot {
    pub octant: usize,
    pub angle: usize,
    pub group: usize,
    pub elem: usize,
}

/// Angular flux, scalar flux and moments, plus the sweep sources.
///
/// Layouts (fastest index last): `ψ[octant][angle][group][element][node]`,
/// `φ[group][element][node]`, `φ_l[moment][group][element][node]`, sources
/// `[moment][group][element][node]`, `ec[moment][octant][angle]`.
#[derive(Debug)]
pub struct FluxState {
    dims: Dims,
    pub angular_flux: SharedBuf,
    pub scalar_flux: SharedBuf,
    pub scalar_flux_moments: SharedBuf,
    ec: Vec<f64>,
    weights: Vec<f64>,
    outer_source: Vec<f64>,
    source: Vec<f64>,
    stamps: Box<[AtomicU64]>,
    epoch: u64,
}

impl FluxState {
    pub fn new(dims: Dims, quadrature: &QuadratureSet) -> Result<Self> {
        if dims.moments == 0 || dims.moments > MAX_MOMENTS {
            return Err(SweepError::Config(format!("moments must be in 1..={MAX_MOMENTS}")));
        }
        if quadrature.angles_per_octant() != dims.angles {
            return Err(SweepError::Config("quadrature does not match the angle count".into()));
        }
        let mut ec = Vec::with_capacity(dims.moments * NUM_OCTANTS * dims.angles);
        for m in 0..dims.moments {
            for o in 0..NUM_OCTANTS {
                for a in 0..dims.angles {
                    ec.push(harmonic(m, quadrature.direction(o, a).omega));
                }
            }
        }
        let scalar = dims.groups * dims.elements * dims.basis;
        let blocks = NUM_OCTANTS * dims.angles * dims.groups * dims.elements;
        Ok(Self {
            dims,
            angular_flux: SharedBuf::zeros(dims.angular_unknowns()),
            scalar_flux: SharedBuf::zeros(scalar),
            scalar_flux_moments: SharedBuf::zeros(dims.moments * scalar),
            ec,
            weights: quadrature.weights().to_vec(),
            outer_source: vec![0.0; dims.moments * scalar],
            source: vec![0.0; dims.moments * scalar],
            stamps: (0..blocks).map(|_| AtomicU64::new(0)).collect(),
            epoch: 0,
        })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn weight(&self, angle: usize) -> f64 {
        self.weights[angle]
    }

    /// Angular-to-moment coefficient of component `moment` for an ordinate.
    pub fn ec(&self, moment: usize, octant: usize, angle: usize) -> f64 {
        self.ec[(moment * NUM_OCTANTS + octant) * self.dims.angles + angle]
    }

    fn block(&self, slot: FluxSlot) -> usize {
        let d = &self.dims;
        ((slot.octant * d.angles + slot.angle) * d.groups + slot.group) * d.elements + slot.elem
    }

    pub fn psi_offset(&self, slot: FluxSlot) -> usize {
        self.block(slot) * self.dims.basis
    }

    pub fn read_psi(&self, slot: FluxSlot, out: &mut [f64]) {
        self.angular_flux.read_into(self.psi_offset(slot), out);
    }

    pub fn psi(&self, slot: FluxSlot) -> Vec<f64> {
        let mut out = vec![0.0; self.dims.basis];
        self.read_psi(slot, &mut out);
        out
    }

    pub fn write_psi(&self, slot: FluxSlot, values: &[f64]) {
        self.angular_flux.write_from(self.psi_offset(slot), values);
    }

    pub fn phi_offset(&self, group: usize, elem: usize) -> usize {
        (group * self.dims.elements + elem) * self.dims.basis
    }

    pub fn moment_offset(&self, moment: usize, group: usize, elem: usize) -> usize {
        ((moment * self.dims.groups + group) * self.dims.elements + elem) * self.dims.basis
    }

    pub fn phi(&self, group: usize, elem: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dims.basis];
        self.scalar_flux.read_into(self.phi_offset(group, elem), &mut out);
        out
    }

    /// Nodal sweep source of one `(moment, group, element)`.
    pub fn source(&self, moment: usize, group: usize, elem: usize) -> &[f64] {
        let start = self.moment_offset(moment, group, elem);
        &self.source[start..start + self.dims.basis]
    }

    pub fn source_all(&self) -> &[f64] {
        &self.source
    }

    pub fn source_all_mut(&mut self) -> &mut [f64] {
        &mut self.source
    }

    pub fn outer_source_all(&self) -> &[f64] {
        &self.outer_source
    }

    pub(crate) fn sources_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.outer_source, &mut self.source)
    }

    /// Writes the angular source `Σ_l ec(l, o, a) source_l` of `slot` into `out`.
    pub fn angular_source(&self, slot: FluxSlot, out: &mut [f64]) {
        out.copy_from_slice(self.source(0, slot.group, slot.elem));
        for m in 1..self.dims.moments {
            let c = self.ec(m, slot.octant, slot.angle);
            for (o, s) in out.iter_mut().zip(self.source(m, slot.group, slot.elem)) {
                *o += c * s;
            }
        }
    }

    /// Zeroes `φ` and `φ_l` ahead of a sweep.
    pub fn zero_scalar_fluxes(&mut self) {
        self.scalar_flux.fill(0.0);
        self.scalar_flux_moments.fill(0.0);
    }

    /// Starts a new octant sweep; stamps written afterwards carry the
    /// returned epoch.
    pub fn begin_sweep(&mut self) -> u64 {
        self.epoch += 1;
        self.epoch
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn mark_solved(&self, slot: FluxSlot) {
        self.stamps[self.block(slot)].store(self.epoch, Ordering::Release);
    }

    /// Whether `slot` was solved during the current sweep epoch.
    pub fn is_fresh(&self, slot: FluxSlot) -> bool {
        self.stamps[self.block(slot)].load(Ordering::Acquire) == self.epoch
    }
}

/// Folds a solved nodal flux into `φ` and every moment of `φ_l`:
/// `φ += w ψ` and `φ_l += ec_l w ψ`.
pub fn accumulate_flux(state: &FluxState, slot: FluxSlot, psi: &[f64], weight: f64, mode: AccumulateMode) {
    let base = state.phi_offset(slot.group, slot.elem);
    for (k, &v) in psi.iter().enumerate() {
        state.scalar_flux.add(base + k, weight * v, mode);
    }
    for m in 0..state.dims.moments {
        let c = state.ec(m, slot.octant, slot.angle) * weight;
        let base = state.moment_offset(m, slot.group, slot.elem);
        for (k, &v) in psi.iter().enumerate() {
            state.scalar_flux_moments.add(base + k, c * v, mode);
        }
    }
}
