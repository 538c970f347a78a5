//! Upwind discontinuous-Galerkin element kernel, flux accumulation and
//! source iteration updates.

mod assemble;
mod dense;
pub mod moments;
mod shared;
mod source;
mod state;
mod xs;

pub use assemble::{assemble, MAX_FACE_NODES};
pub use dense::{solve_dense, DenseSystem};
pub use shared::{AccumulateMode, SharedBuf};
pub use source::{integrated_flux, total_integrated_flux, update_inner_source, update_outer_source};
pub use state::{accumulate_flux, Dims, FluxSlot, FluxState};
pub use xs::CrossSectionTable;
