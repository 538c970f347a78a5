use super::basis::{face_area_normal, face_point, gauss_legendre_unit, map_point, norm, TensorBasis};
use super::grid::{det3, HexMesh};
use crate::error::{Result, SweepError};

/// Marks a face-node trace entry on a boundary face.
pub const NO_TRACE: u32 = u32::MAX;

/// Precomputed per-element basis-function integrals.
///
/// Volume matrices are dense `B x B`, row-major, with `B = (p + 1)^3`:
/// `mass[i][j] = ∫ f_i f_j detJ` and `grad_x[i][j] = ∫ f_i ∂f_j/∂x detJ`.
/// Face matrices are `F x F` over the `F = (p + 1)^2` face nodes.
#[derive(Debug, Clone)]
pub struct ElementGeometry {
    order: usize,
    basis_len: usize,
    face_len: usize,
    pub fi_dfj: Vec<f64>,
    pub fi_dfj_dx: Vec<f64>,
    pub fi_dfj_dy: Vec<f64>,
    pub fi_dfj_dz: Vec<f64>,
    /// `∫_face f_i f_j |n| dS` per element per face.
    pub face_mass: Vec<f64>,
    /// `∫_face f_i f_j n_k dS` per element, face and component `k`; the
    /// directional face matrix for `Ω` is `Σ_k Ω_k face_flux[k]`.
    pub face_flux: Vec<f64>,
    /// Basis indices with a nonzero trace on each local face.
    pub face_nodes: [Vec<usize>; 6],
    /// For each element, face and face node: the neighbor's basis index at
    /// the same physical point, or [`NO_TRACE`] on the boundary.
    pub trace_map: Vec<u32>,
}

/// Borrowed integrals of a single element.
#[derive(Debug, Clone, Copy)]
pub struct ElementView<'a> {
    pub mass: &'a [f64],
    pub grad: [&'a [f64]; 3],
    geometry: &'a ElementGeometry,
    elem: usize,
}

impl<'a> ElementView<'a> {
    /// The three directional face matrices of `face`.
    pub fn face_flux(&self, face: usize) -> [&'a [f64]; 3] {
        let f2 = self.geometry.face_len * self.geometry.face_len;
        let base = ((self.elem * 6 + face) * 3) * f2;
        let data = &self.geometry.face_flux;
        [
            &data[base..base + f2],
            &data[base + f2..base + 2 * f2],
            &data[base + 2 * f2..base + 3 * f2],
        ]
    }

    pub fn face_mass(&self, face: usize) -> &'a [f64] {
        let f2 = self.geometry.face_len * self.geometry.face_len;
        let base = (self.elem * 6 + face) * f2;
        &self.geometry.face_mass[base..base + f2]
    }

    /// Neighbor basis indices for the nodes of `face`.
    pub fn trace(&self, face: usize) -> &'a [u32] {
        let f = self.geometry.face_len;
        let base = (self.elem * 6 + face) * f;
        &self.geometry.trace_map[base..base + f]
    }
}

impl ElementGeometry {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn basis_len(&self) -> usize {
        self.basis_len
    }

    pub fn face_len(&self) -> usize {
        self.face_len
    }

    pub fn num_elements(&self) -> usize {
        self.fi_dfj.len() / (self.basis_len * self.basis_len)
    }

    pub fn element(&self, elem: usize) -> ElementView<'_> {
        let b2 = self.basis_len * self.basis_len;
        let r = elem * b2..(elem + 1) * b2;
        ElementView {
            mass: &self.fi_dfj[r.clone()],
            grad: [
                &self.fi_dfj_dx[r.clone()],
                &self.fi_dfj_dy[r.clone()],
                &self.fi_dfj_dz[r],
            ],
            geometry: self,
            elem,
        }
    }
}

struct ElementIntegrals {
    mass: Vec<f64>,
    grad: [Vec<f64>; 3],
    face_mass: Vec<f64>,
    face_flux: Vec<f64>,
}

/// Computes every element's volume and face integrals with tensor-product
/// Gauss-Legendre rules of `(p + 1)` points per axis through the trilinear
/// corner map.
pub fn precompute_basis_integrals(mesh: &HexMesh, order: usize) -> Result<ElementGeometry> {
    if !(1..=3).contains(&order) {
        return Err(SweepError::Config(format!("FEM order must be 1, 2 or 3, got {order}")));
    }
    let basis = TensorBasis::new(order);
    let face_nodes: [Vec<usize>; 6] = std::array::from_fn(|f| basis.face_nodes(f));
    let num_elements = mesh.num_elements();

    let per_element = map_elements(num_elements, |e| element_integrals(mesh, &basis, &face_nodes, e));
    let b = basis.len();
    let f = face_nodes[0].len();
    let mut geometry = ElementGeometry {
        order,
        basis_len: b,
        face_len: f,
        fi_dfj: Vec::with_capacity(num_elements * b * b),
        fi_dfj_dx: Vec::with_capacity(num_elements * b * b),
        fi_dfj_dy: Vec::with_capacity(num_elements * b * b),
        fi_dfj_dz: Vec::with_capacity(num_elements * b * b),
        face_mass: Vec::with_capacity(num_elements * 6 * f * f),
        face_flux: Vec::with_capacity(num_elements * 18 * f * f),
        face_nodes,
        trace_map: Vec::new(),
    };
    for integrals in per_element {
        let integrals = integrals?;
        geometry.fi_dfj.extend_from_slice(&integrals.mass);
        geometry.fi_dfj_dx.extend_from_slice(&integrals.grad[0]);
        geometry.fi_dfj_dy.extend_from_slice(&integrals.grad[1]);
        geometry.fi_dfj_dz.extend_from_slice(&integrals.grad[2]);
        geometry.face_mass.extend_from_slice(&integrals.face_mass);
        geometry.face_flux.extend_from_slice(&integrals.face_flux);
    }
    geometry.trace_map = build_trace_map(mesh, &basis, &geometry.face_nodes)?;
    Ok(geometry)
}

#[cfg(feature = "parallel")]
fn map_elements<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_elements<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    (0..n).map(f).collect()
}

fn element_integrals(
    mesh: &HexMesh,
    basis: &TensorBasis,
    face_nodes: &[Vec<usize>; 6],
    elem: usize,
) -> Result<ElementIntegrals> {
    let corners = mesh.corners(elem);
    let b = basis.len();
    let q = basis.per_axis();
    let (x, w) = gauss_legendre_unit(q);
    let mut values = vec![0.0; b];
    let mut grads = vec![[0.0; 3]; b];
    let mut phys = vec![[0.0; 3]; b];

    let mut mass = vec![0.0; b * b];
    let mut grad = [vec![0.0; b * b], vec![0.0; b * b], vec![0.0; b * b]];
    for (kc, wc) in x.iter().zip(&w) {
        for (kb, wb) in x.iter().zip(&w) {
            for (ka, wa) in x.iter().zip(&w) {
                let xi = [*ka, *kb, *kc];
                let (_, cols) = map_point(&corners, xi);
                let det_j = det3(&cols);
                if det_j <= 0.0 {
                    return Err(SweepError::InvertedElement { elem, det_j });
                }
                let inv_t = inverse_transpose(&cols, det_j);
                basis.eval(xi, &mut values, &mut grads);
                for (g, p) in grads.iter().zip(phys.iter_mut()) {
                    // ∇_x f = J^{-T} ∇_ξ f
                    *p = [
                        inv_t[0][0] * g[0] + inv_t[0][1] * g[1] + inv_t[0][2] * g[2],
                        inv_t[1][0] * g[0] + inv_t[1][1] * g[1] + inv_t[1][2] * g[2],
                        inv_t[2][0] * g[0] + inv_t[2][1] * g[1] + inv_t[2][2] * g[2],
                    ];
                }
                let weight = wa * wb * wc * det_j;
                for i in 0..b {
                    let fi = weight * values[i];
                    let row = i * b;
                    for j in 0..b {
                        mass[row + j] += fi * values[j];
                        grad[0][row + j] += fi * phys[j][0];
                        grad[1][row + j] += fi * phys[j][1];
                        grad[2][row + j] += fi * phys[j][2];
                    }
                }
            }
        }
    }

    let f = face_nodes[0].len();
    let mut face_mass = vec![0.0; 6 * f * f];
    let mut face_flux = vec![0.0; 18 * f * f];
    for (face, nodes) in face_nodes.iter().enumerate() {
        for (t, wt) in x.iter().zip(&w) {
            for (s, ws) in x.iter().zip(&w) {
                let xi = face_point(face, *s, *t);
                let (_, cols) = map_point(&corners, xi);
                let n = face_area_normal(&cols, face);
                let area = norm(n);
                basis.eval(xi, &mut values, &mut grads);
                let weight = ws * wt;
                for (a, &ia) in nodes.iter().enumerate() {
                    for (c, &ic) in nodes.iter().enumerate() {
                        let ff = weight * values[ia] * values[ic];
                        face_mass[(face * f + a) * f + c] += ff * area;
                        for k in 0..3 {
                            face_flux[((face * 3 + k) * f + a) * f + c] += ff * n[k];
                        }
                    }
                }
            }
        }
    }

    Ok(ElementIntegrals {
        mass,
        grad,
        face_mass,
        face_flux,
    })
}

/// Rows of `J^{-T}` where `cols[a]` is column `a` of `J`.
fn inverse_transpose(cols: &[[f64; 3]; 3], det_j: f64) -> [[f64; 3]; 3] {
    use super::basis::cross;
    // Rows of J^{-1} are the cofactor columns divided by det J; J^{-T}
    // therefore has those as columns.
    let r0 = cross(cols[1], cols[2]);
    let r1 = cross(cols[2], cols[0]);
    let r2 = cross(cols[0], cols[1]);
    let s = 1.0 / det_j;
    [
        [r0[0] * s, r1[0] * s, r2[0] * s],
        [r0[1] * s, r1[1] * s, r2[1] * s],
        [r0[2] * s, r1[2] * s, r2[2] * s],
    ]
}

fn build_trace_map(mesh: &HexMesh, basis: &TensorBasis, face_nodes: &[Vec<usize>; 6]) -> Result<Vec<u32>> {
    let f = face_nodes[0].len();
    let mut map = vec![NO_TRACE; mesh.num_elements() * 6 * f];
    let position = |elem: usize, b: usize| map_point(&mesh.corners(elem), basis.node(b)).0;
    for elem in 0..mesh.num_elements() {
        for face in 0..6 {
            let Some(neighbor) = mesh.elem_neighbors[elem][face] else {
                continue;
            };
            let back = mesh.reciprocal_face(elem, face).ok_or_else(|| {
                SweepError::Config(format!("element {elem} face {face}: neighbor {neighbor} is not reciprocal"))
            })?;
            let scale = mesh.face_area(elem, face).sqrt().max(1.0);
            for (a, &local) in face_nodes[face].iter().enumerate() {
                let x = position(elem, local);
                let (best, dist) = face_nodes[back]
                    .iter()
                    .map(|&remote| {
                        let y = position(neighbor, remote);
                        (remote, norm([x[0] - y[0], x[1] - y[1], x[2] - y[2]]))
                    })
                    .min_by(|l, r| l.1.total_cmp(&r.1))
                    .expect("faces have nodes");
                if dist > 1e-9 * scale {
                    return Err(SweepError::Config(format!(
                        "non-conforming face between elements {elem} and {neighbor}"
                    )));
                }
                map[(elem * 6 + face) * f + a] = best as u32;
            }
        }
    }
    Ok(map)
}
