use serde::Serialize;

use super::basis::{dot, face_area_normal, face_point, gauss_legendre_unit, map_point, norm};
use crate::error::{Result, SweepError};

/// Axis the synthetic grid is twisted about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" | "X" => Ok(Axis::X),
            "y" | "Y" => Ok(Axis::Y),
            "z" | "Z" => Ok(Axis::Z),
            other => Err(SweepError::Config(format!("unknown twist axis {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeshConfig {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    /// Rotation in radians applied at the far end of the twist axis.
    pub twist_angle_max: f64,
    pub twist_axis: Axis,
    /// Polynomial order of the FEM basis, 1 to 3.
    pub fem_order: usize,
}

impl MeshConfig {
    pub const DEFAULT_TWIST: f64 = 0.5;

    pub fn new(nx: usize, ny: usize, nz: usize) -> Self {
        Self {
            nx,
            ny,
            nz,
            twist_angle_max: Self::DEFAULT_TWIST,
            twist_axis: Axis::Z,
            fem_order: 1,
        }
    }

    pub fn cube(n: usize) -> Self {
        Self::new(n, n, n)
    }

    pub fn with_twist(mut self, radians: f64) -> Self {
        self.twist_angle_max = radians;
        self
    }

    pub fn with_axis(mut self, axis: Axis) -> Self {
        self.twist_axis = axis;
        self
    }

    pub fn with_order(mut self, order: usize) -> Self {
        self.fem_order = order;
        self
    }

    pub fn num_elements(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn num_nodes(&self) -> usize {
        (self.nx + 1) * (self.ny + 1) * (self.nz + 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 || self.nz == 0 {
            return Err(SweepError::Config(format!(
                "mesh extents must be at least 1, got {}x{}x{}",
                self.nx, self.ny, self.nz
            )));
        }
        if !(1..=3).contains(&self.fem_order) {
            return Err(SweepError::Config(format!(
                "FEM order must be 1, 2 or 3, got {}",
                self.fem_order
            )));
        }
        if !self.twist_angle_max.is_finite() {
            return Err(SweepError::Config("twist angle must be finite".into()));
        }
        Ok(())
    }
}

/// Twisted hexahedral grid: corner nodes, connectivity and face normals.
///
/// Local faces are numbered `0: -x, 1: +x, 2: -y, 3: +y, 4: -z, 5: +z` in the
/// element's reference frame; corners as `c = ci + 2 cj + 4 ck`.
#[derive(Debug, Clone, Serialize)]
pub struct HexMesh {
    pub config: MeshConfig,
    pub node_coords: Vec<[f64; 3]>,
    pub elem_nodes: Vec<[usize; 8]>,
    /// Neighbor across each local face, `None` on the domain boundary.
    pub elem_neighbors: Vec<[Option<usize>; 6]>,
    /// Outward normal times face area, per element per face.
    pub normals: Vec<[[f64; 3]; 6]>,
    pub material: Vec<usize>,
}

/// Upwind classification of a face relative to a sweep direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceOrientation {
    Inflow,
    Outflow,
    Tangent,
}

impl HexMesh {
    pub fn num_elements(&self) -> usize {
        self.elem_nodes.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.node_coords.len()
    }

    pub fn corners(&self, elem: usize) -> [[f64; 3]; 8] {
        let nodes = &self.elem_nodes[elem];
        std::array::from_fn(|c| self.node_coords[nodes[c]])
    }

    /// Structured `(i, j, k)` index of an element.
    pub fn ijk(&self, elem: usize) -> (usize, usize, usize) {
        let MeshConfig { nx, ny, .. } = self.config;
        (elem % nx, (elem / nx) % ny, elem / (nx * ny))
    }

    pub fn elem_id(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.config.nx * (j + self.config.ny * k)
    }

    pub fn face_area(&self, elem: usize, face: usize) -> f64 {
        norm(self.normals[elem][face])
    }

    /// Local face of `neighbor` that points back at `elem`.
    pub fn reciprocal_face(&self, elem: usize, face: usize) -> Option<usize> {
        let neighbor = self.elem_neighbors[elem][face]?;
        (0..6).find(|&f| self.elem_neighbors[neighbor][f] == Some(elem))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Classifies `face` of `elem` as inflow, outflow or tangent for direction
/// `omega`, with tolerance `1e-12 |n|`.
pub fn face_orientation(mesh: &HexMesh, elem: usize, face: usize, omega: [f64; 3]) -> FaceOrientation {
    let n = mesh.normals[elem][face];
    let eps = 1e-12 * norm(n);
    let d = dot(n, omega);
    if d > eps {
        FaceOrientation::Outflow
    } else if d < -eps {
        FaceOrientation::Inflow
    } else {
        FaceOrientation::Tangent
    }
}

/// Jacobian determinants at or below this value count as inverted; the grid
/// has unit spacing, so it is relative to the untwisted element volume.
pub const DET_J_FLOOR: f64 = 1e-12;

/// Builds the orthogonal unit-spaced grid and twists its nodes about the
/// centerline of `config.twist_axis` by an angle growing linearly along it.
pub fn build_twisted_grid(config: &MeshConfig) -> Result<HexMesh> {
    config.validate()?;
    let MeshConfig { nx, ny, nz, .. } = *config;
    let extents = [nx as f64, ny as f64, nz as f64];
    let axis = config.twist_axis.index();
    let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
    let (cu, cv) = (0.5 * extents[u], 0.5 * extents[v]);

    let mut node_coords = Vec::with_capacity(config.num_nodes());
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                let p = [i as f64, j as f64, k as f64];
                let theta = config.twist_angle_max * p[axis] / extents[axis];
                let (s, c) = theta.sin_cos();
                let (du, dv) = (p[u] - cu, p[v] - cv);
                let mut q = p;
                q[u] = cu + c * du - s * dv;
                q[v] = cv + s * du + c * dv;
                node_coords.push(q);
            }
        }
    }

    let node = |i: usize, j: usize, k: usize| i + (nx + 1) * (j + (ny + 1) * k);
    let elem = |i: usize, j: usize, k: usize| i + nx * (j + ny * k);
    let num_elements = config.num_elements();
    let mut elem_nodes = Vec::with_capacity(num_elements);
    let mut elem_neighbors = Vec::with_capacity(num_elements);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                elem_nodes.push(std::array::from_fn(|c| {
                    node(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1))
                }));
                elem_neighbors.push([
                    (i > 0).then(|| elem(i - 1, j, k)),
                    (i + 1 < nx).then(|| elem(i + 1, j, k)),
                    (j > 0).then(|| elem(i, j - 1, k)),
                    (j + 1 < ny).then(|| elem(i, j + 1, k)),
                    (k > 0).then(|| elem(i, j, k - 1)),
                    (k + 1 < nz).then(|| elem(i, j, k + 1)),
                ]);
            }
        }
    }

    let mut mesh = HexMesh {
        config: config.clone(),
        node_coords,
        elem_nodes,
        elem_neighbors,
        normals: Vec::new(),
        material: vec![0; num_elements],
    };

    let q = config.fem_order + 1;
    for e in 0..num_elements {
        let min = min_det_j(&mesh, e, q);
        if min <= DET_J_FLOOR {
            return Err(SweepError::InvertedElement { elem: e, det_j: min });
        }
    }
    mesh.normals = (0..num_elements)
        .map(|e| face_normals(&mesh.corners(e), q))
        .collect();
    Ok(mesh)
}

/// Smallest Jacobian determinant over a `q^3` Gauss-Legendre rule, the
/// eight corners and the centroid of `elem`.
pub fn min_det_j(mesh: &HexMesh, elem: usize, q: usize) -> f64 {
    let corners = mesh.corners(elem);
    let (x, _) = gauss_legendre_unit(q);
    let mut points: Vec<[f64; 3]> = Vec::with_capacity(q * q * q + 9);
    for &c in &x {
        for &b in &x {
            for &a in &x {
                points.push([a, b, c]);
            }
        }
    }
    points.extend((0..8).map(|c| [(c & 1) as f64, ((c >> 1) & 1) as f64, ((c >> 2) & 1) as f64]));
    points.push([0.5; 3]);
    points
        .into_iter()
        .map(|xi| {
            let (_, cols) = map_point(&corners, xi);
            det3(&cols)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Per-element minimum of [`min_det_j`], one sample per element.
pub fn det_j_samples(mesh: &HexMesh) -> Vec<f64> {
    let q = mesh.config.fem_order + 1;
    (0..mesh.num_elements()).map(|e| min_det_j(mesh, e, q)).collect()
}

pub(crate) fn det3(cols: &[[f64; 3]; 3]) -> f64 {
    dot(cols[0], super::basis::cross(cols[1], cols[2]))
}

fn face_normals(corners: &[[f64; 3]; 8], q: usize) -> [[f64; 3]; 6] {
    let (x, w) = gauss_legendre_unit(q);
    std::array::from_fn(|face| {
        let mut sum = [0.0; 3];
        for (t, wt) in x.iter().zip(&w) {
            for (s, ws) in x.iter().zip(&w) {
                let (_, cols) = map_point(corners, face_point(face, *s, *t));
                let n = face_area_normal(&cols, face);
                for k in 0..3 {
                    sum[k] += ws * wt * n[k];
                }
            }
        }
        sum
    })
}
