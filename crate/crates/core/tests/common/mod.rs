#![allow(dead_code)]

pub mod oracle;

use sn_sweep::driver::{Problem, SolverConfig};
use sn_sweep::kernel::{assemble, solve_dense, CrossSectionTable, DenseSystem};
use sn_sweep::mesh::{ElementGeometry, HexMesh, MeshConfig};

/// A desk-scale configuration with freshness checks on.
pub fn small_config(n: usize, order: usize, groups: usize, angles: usize, twist: f64) -> SolverConfig {
    SolverConfig {
        mesh: MeshConfig::cube(n).with_twist(twist).with_order(order),
        groups,
        angles_per_octant: angles,
        inner: 1,
        outer: 2,
        workers: 1,
        check_freshness: true,
        ..SolverConfig::default()
    }
}

pub fn problem(config: &SolverConfig) -> Problem {
    Problem::build(config).expect("problem builds")
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 {
        0.0
    } else {
        (a - b).abs() / s
    }
}

/// Solves one element in isolation, every inflow face carrying the constant
/// trace `inflow` (vacuum when `None`).
pub fn solve_element(
    mesh: &HexMesh,
    geometry: &ElementGeometry,
    elem: usize,
    omega: [f64; 3],
    sigma_t: f64,
    source: &[f64],
    inflow: Option<f64>,
) -> Vec<f64> {
    let b = geometry.basis_len();
    let mut system = DenseSystem::new(b);
    assemble(&mut system, mesh, geometry, elem, omega, sigma_t, source, |_, trace| match inflow {
        Some(c) => {
            trace.fill(c);
            true
        }
        None => false,
    });
    solve_dense(system).unwrap()
}

/// Synthetic cross sections plus downscatter `0 -> 1` of a tenth of `σ_t`.
pub fn coupled_xs(p: &Problem) -> CrossSectionTable {
    let mut xs = p.xs.clone();
    let sigma = xs.sigt(0, 0);
    xs.set_sigs(0, 0, 0, 1, 0.1 * sigma);
    xs
}
