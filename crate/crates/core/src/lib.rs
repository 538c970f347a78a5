//! Discrete-ordinates transport sweeps on twisted hexahedral grids.
//!
//! The crate builds a synthetic twisted mesh with upwind discontinuous
//! Galerkin element matrices, sweeps it with one of three schedulers and
//! compares the resulting integrated fluxes:
//!
//! * a serial depth-first reference ([`sweep::serial_sweep`]),
//! * a bucket-synchronous parallel loop over DAG levels
//!   ([`sweep::sweep_octant_bsp`]),
//! * a recursive task sweep driven by atomic dependency counters on a
//!   work-stealing pool ([`sweep::sweep_octant_amt`], [`runtime::TaskPool`]).
//!
//! ```no_run
//! use sn_sweep::driver::{verify, SolverConfig};
//! use sn_sweep::mesh::MeshConfig;
//!
//! let config = SolverConfig {
//!     mesh: MeshConfig::cube(4),
//!     groups: 2,
//!     inner: 1,
//!     outer: 1,
//!     ..SolverConfig::default()
//! };
//! let verdict = verify(&config).unwrap();
//! assert!(verdict.pass, "{verdict}");
//! ```

pub mod driver;
pub mod error;
pub mod kernel;
pub mod mesh;
pub mod quadrature;
pub mod runtime;
pub mod schedule;
pub mod sweep;

pub use error::{Result, SweepError};
