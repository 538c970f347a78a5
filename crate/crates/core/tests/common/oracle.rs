//! Brute-force references for the integration tests. Nothing here calls the
//! library's schedule builders, dense solver, face classifier or sweeps.

use sn_sweep::kernel::CrossSectionTable;
use sn_sweep::mesh::{ElementGeometry, HexMesh};
use sn_sweep::quadrature::QuadratureSet;

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn len(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

/// Sign of the flux through `face` of `elem`: `+1` outflow, `-1` inflow,
/// `0` tangent.
pub fn face_sign(mesh: &HexMesh, elem: usize, face: usize, omega: [f64; 3]) -> i32 {
    let n = mesh.normals[elem][face];
    let d = dot(n, omega);
    let eps = 1e-12 * len(n);
    if d > eps {
        1
    } else if d < -eps {
        -1
    } else {
        0
    }
}

/// Interior upwind neighbors of every element.
pub fn upwind_lists(mesh: &HexMesh, omega: [f64; 3]) -> Vec<Vec<usize>> {
    (0..mesh.num_elements())
        .map(|e| {
            (0..6)
                .filter_map(|f| mesh.elem_neighbors[e][f].filter(|_| face_sign(mesh, e, f, omega) < 0))
                .collect()
        })
        .collect()
}

/// Longest-path level of every element by relaxation to a fixpoint.
pub fn brute_force_levels(mesh: &HexMesh, omega: [f64; 3]) -> Result<Vec<usize>, String> {
    let up = upwind_lists(mesh, omega);
    let n = mesh.num_elements();
    let mut level = vec![0usize; n];
    for _ in 0..=n {
        let mut changed = false;
        for e in 0..n {
            for &u in &up[e] {
                if level[e] < level[u] + 1 {
                    level[e] = level[u] + 1;
                    changed = true;
                }
            }
        }
        if !changed {
            return Ok(level);
        }
    }
    Err("no fixpoint: the sweep graph has a cycle".into())
}

/// Directed interior edges counted from the outflow side of every face.
pub fn edge_census(mesh: &HexMesh, omega: [f64; 3]) -> usize {
    (0..mesh.num_elements())
        .map(|e| {
            (0..6)
                .filter(|&f| mesh.elem_neighbors[e][f].is_some() && face_sign(mesh, e, f, omega) > 0)
                .count()
        })
        .sum()
}

/// Whether `order` (a sequence of elements) lists every element once, each
/// after all its upwind neighbors.
pub fn is_topological(mesh: &HexMesh, omega: [f64; 3], order: &[usize]) -> bool {
    let n = mesh.num_elements();
    if order.len() != n {
        return false;
    }
    let mut position = vec![usize::MAX; n];
    for (p, &e) in order.iter().enumerate() {
        if e >= n || position[e] != usize::MAX {
            return false;
        }
        position[e] = p;
    }
    let up = upwind_lists(mesh, omega);
    (0..n).all(|e| up[e].iter().all(|&u| position[u] < position[e]))
}

/// Textbook Doolittle factorization `PA = LU` with row pivoting, followed
/// by forward and back substitution.
pub fn lu_solve(n: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut lu = a.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| lu[i * n + k].abs().total_cmp(&lu[j * n + k].abs()))
            .unwrap();
        if p != k {
            for j in 0..n {
                lu.swap(p * n + j, k * n + j);
            }
            perm.swap(p, k);
        }
        let d = lu[k * n + k];
        assert!(d != 0.0, "oracle LU hit a zero pivot");
        for i in k + 1..n {
            lu[i * n + k] /= d;
            let l = lu[i * n + k];
            for j in k + 1..n {
                lu[i * n + j] -= l * lu[k * n + j];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[perm[i]];
        for j in 0..i {
            s -= lu[i * n + j] * y[j];
        }
        y[i] = s;
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for j in i + 1..n {
            s -= lu[i * n + j] * x[j];
        }
        x[i] = s / lu[i * n + i];
    }
    x
}

/// Dense global transport operator, every angle, group and element at once,
/// with isotropic scattering folded in: `(L - M S) ψ = M q`.
///
/// Solved directly, it is the fixed point that inner/outer source iteration
/// converges to. Returns the integrated scalar flux per group.
pub fn global_integrated_flux(
    mesh: &HexMesh,
    geometry: &ElementGeometry,
    quadrature: &QuadratureSet,
    xs: &CrossSectionTable,
    groups: usize,
) -> Vec<f64> {
    let angles = quadrature.angles_per_octant();
    let e_count = mesh.num_elements();
    let b = geometry.basis_len();
    let f = geometry.face_len();
    let n = 8 * angles * groups * e_count * b;
    let idx = |o: usize, a: usize, g: usize, e: usize, i: usize| (((o * angles + a) * groups + g) * e_count + e) * b + i;
    let mut mat = vec![0.0; n * n];
    let mut rhs = vec![0.0; n];
    let b2 = b * b;
    let f2 = f * f;

    for o in 0..8 {
        for a in 0..angles {
            let omega = quadrature.direction(o, a).omega;
            for g in 0..groups {
                for e in 0..e_count {
                    let mass = &geometry.fi_dfj[e * b2..(e + 1) * b2];
                    let gx = &geometry.fi_dfj_dx[e * b2..(e + 1) * b2];
                    let gy = &geometry.fi_dfj_dy[e * b2..(e + 1) * b2];
                    let gz = &geometry.fi_dfj_dz[e * b2..(e + 1) * b2];
                    let sigt = xs.sigt(mesh.material[e], g);
                    let q = xs.qex(0, g, e);
                    for i in 0..b {
                        let row = idx(o, a, g, e, i);
                        for j in 0..b {
                            let stream = omega[0] * gx[j * b + i] + omega[1] * gy[j * b + i] + omega[2] * gz[j * b + i];
                            mat[row * n + idx(o, a, g, e, j)] += sigt * mass[i * b + j] - stream;
                            rhs[row] += mass[i * b + j] * q[j];
                        }
                        for gp in 0..groups {
                            let sigma = xs.sigs(mesh.material[e], 0, gp, g);
                            for op in 0..8 {
                                for ap in 0..angles {
                                    let w = quadrature.weight(ap);
                                    for j in 0..b {
                                        mat[row * n + idx(op, ap, gp, e, j)] -= mass[i * b + j] * sigma * w;
                                    }
                                }
                            }
                        }
                    }
                    for face in 0..6 {
                        let sign = face_sign(mesh, e, face, omega);
                        if sign == 0 {
                            continue;
                        }
                        let base = (e * 6 + face) * 3 * f2;
                        let directional = |r: usize, c: usize| {
                            (0..3)
                                .map(|k| omega[k] * geometry.face_flux[base + k * f2 + r * f + c])
                                .sum::<f64>()
                        };
                        let nodes = &geometry.face_nodes[face];
                        if sign > 0 {
                            for (r, &i) in nodes.iter().enumerate() {
                                for (c, &j) in nodes.iter().enumerate() {
                                    mat[idx(o, a, g, e, i) * n + idx(o, a, g, e, j)] += directional(r, c);
                                }
                            }
                        } else if let Some(nb) = mesh.elem_neighbors[e][face] {
                            let trace = &geometry.trace_map[(e * 6 + face) * f..(e * 6 + face + 1) * f];
                            for (r, &i) in nodes.iter().enumerate() {
                                for c in 0..f {
                                    let col = idx(o, a, g, nb, trace[c] as usize);
                                    mat[idx(o, a, g, e, i) * n + col] += directional(r, c);
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    let psi = lu_solve(n, &mat, &rhs);
    (0..groups)
        .map(|g| {
            let mut total = 0.0;
            for o in 0..8 {
                for a in 0..angles {
                    let w = quadrature.weight(a);
                    for e in 0..e_count {
                        for i in 0..b {
                            total += w * psi[idx(o, a, g, e, i)];
                        }
                    }
                }
            }
            total
        })
        .collect()
}
