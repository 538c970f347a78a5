//! Synthetic twisted hexahedral grids and their basis-function integrals.

pub mod basis;
mod grid;
mod integrals;

pub use grid::{
    build_twisted_grid, det_j_samples, DET_J_FLOOR, face_orientation, min_det_j, Axis, FaceOrientation, HexMesh, MeshConfig,
};
pub use integrals::{precompute_basis_integrals, ElementGeometry, ElementView, NO_TRACE};
