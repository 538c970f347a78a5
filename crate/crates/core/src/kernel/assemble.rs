use super::dense::DenseSystem;
use crate::mesh::{face_orientation, ElementGeometry, FaceOrientation, HexMesh};

/// Largest number of face nodes, `(3 + 1)^2`.
pub const MAX_FACE_NODES: usize = 16;

/// Builds the upwind DG system of one element for direction `omega`.
///
/// `A = -(Ω·G)^T + σ_t M + Σ_outflow (Ω·F)` and
/// `b = M q - Σ_inflow (Ω·F) ψ_up`, where `G` holds the `∫ f_i ∂f_j/∂x_k`
/// matrices and `F` the normal-weighted face matrices. `upwind(face, trace)`
/// fills the upwind values for the nodes of an inflow face and returns
/// `false` for vacuum. Tangent faces contribute nothing.
#[allow(clippy::too_many_arguments)]
pub fn assemble<U>(
    system: &mut DenseSystem,
    mesh: &HexMesh,
    geometry: &ElementGeometry,
    elem: usize,
    omega: [f64; 3],
    sigma_t: f64,
    angular_source: &[f64],
    mut upwind: U,
) where
    U: FnMut(usize, &mut [f64]) -> bool,
{
    let b_len = geometry.basis_len();
    debug_assert_eq!(system.size(), b_len);
    let view = geometry.element(elem);
    let [gx, gy, gz] = view.grad;
    let a = &mut system.a;
    for i in 0..b_len {
        let row = i * b_len;
        for j in 0..b_len {
            let t = j * b_len + i;
            a[row + j] = sigma_t * view.mass[row + j] - (omega[0] * gx[t] + omega[1] * gy[t] + omega[2] * gz[t]);
        }
    }
    for i in 0..b_len {
        let row = i * b_len;
        system.b[i] = (0..b_len).map(|j| view.mass[row + j] * angular_source[j]).sum();
    }

    let f_len = geometry.face_len();
    let mut directional = [0.0; MAX_FACE_NODES * MAX_FACE_NODES];
    let mut trace = [0.0; MAX_FACE_NODES];
    for face in 0..6 {
        let orientation = face_orientation(mesh, elem, face, omega);
        if orientation == FaceOrientation::Tangent {
            continue;
        }
        if orientation == FaceOrientation::Inflow && !upwind(face, &mut trace[..f_len]) {
            continue;
        }
        let [fx, fy, fz] = view.face_flux(face);
        for k in 0..f_len * f_len {
            directional[k] = omega[0] * fx[k] + omega[1] * fy[k] + omega[2] * fz[k];
        }
        let nodes = &geometry.face_nodes[face];
        match orientation {
            FaceOrientation::Outflow => {
                for (r, &i) in nodes.iter().enumerate() {
                    for (c, &j) in nodes.iter().enumerate() {
                        system.a[i * b_len + j] += directional[r * f_len + c];
                    }
                }
            }
            FaceOrientation::Inflow => {
                for (r, &i) in nodes.iter().enumerate() {
                    let flux: f64 = (0..f_len).map(|c| directional[r * f_len + c] * trace[c]).sum();
                    system.b[i] -= flux;
                }
            }
            FaceOrientation::Tangent => unreachable!(),
        }
    }
}
