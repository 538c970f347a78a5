//! Reference-element machinery: Gauss-Legendre rules, 1D Lagrange
//! polynomials on equispaced nodes and the trilinear corner map.

use std::f64::consts::PI;

/// Gauss-Legendre rule with `n` points mapped to `[0, 1]`; weights sum to 1.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "a Gauss-Legendre rule needs at least one point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        // Chebyshev-like initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // x is the i-th largest root in [-1, 1].
        nodes[n - 1 - i] = 0.5 * (x + 1.0);
        nodes[i] = 0.5 * (1.0 - x);
        weights[n - 1 - i] = 0.5 * w;
        weights[i] = 0.5 * w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Lagrange interpolants on `p + 1` equispaced nodes of `[0, 1]`.
#[derive(Debug, Clone)]
pub struct Lagrange1d {
    nodes: Vec<f64>,
}

impl Lagrange1d {
    pub fn equispaced(order: usize) -> Self {
        let nodes = (0..=order).map(|i| i as f64 / order as f64).collect();
        Self { nodes }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Values and first derivatives of every interpolant at `x`.
    pub fn eval(&self, x: f64, values: &mut [f64], derivs: &mut [f64]) {
        let n = self.nodes.len();
        for i in 0..n {
            let xi = self.nodes[i];
            let mut value = 1.0;
            let mut deriv = 0.0;
            for j in 0..n {
                if j == i {
                    continue;
                }
                let denom = xi - self.nodes[j];
                // product rule: d/dx prod (x - x_j) / (x_i - x_j)
                deriv = deriv * (x - self.nodes[j]) / denom + value / denom;
                value *= (x - self.nodes[j]) / denom;
            }
            values[i] = value;
            derivs[i] = deriv;
        }
    }
}

/// Tensor-product Lagrange basis on the unit reference cube.
///
/// Basis index `b = i + n * (j + n * k)` with `n = p + 1`, `i` running
/// along the first reference axis.
#[derive(Debug, Clone)]
pub struct TensorBasis {
    order: usize,
    line: Lagrange1d,
}

impl TensorBasis {
    pub fn new(order: usize) -> Self {
        Self {
            order,
            line: Lagrange1d::equispaced(order),
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn per_axis(&self) -> usize {
        self.order + 1
    }

    pub fn len(&self) -> usize {
        self.per_axis().pow(3)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        let n = self.per_axis();
        i + n * (j + n * k)
    }

    /// Reference coordinates of basis node `b`.
    pub fn node(&self, b: usize) -> [f64; 3] {
        let n = self.per_axis();
        let nodes = self.line.nodes();
        [nodes[b % n], nodes[(b / n) % n], nodes[b / (n * n)]]
    }

    /// Fills `values[b]` and `grads[b]` (reference gradient) at `xi`.
    pub fn eval(&self, xi: [f64; 3], values: &mut [f64], grads: &mut [[f64; 3]]) {
        let n = self.per_axis();
        let mut v = [[0.0; 4]; 3];
        let mut d = [[0.0; 4]; 3];
        for axis in 0..3 {
            self.line.eval(xi[axis], &mut v[axis][..n], &mut d[axis][..n]);
        }
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    let b = i + n * (j + n * k);
                    values[b] = v[0][i] * v[1][j] * v[2][k];
                    grads[b] = [
                        d[0][i] * v[1][j] * v[2][k],
                        v[0][i] * d[1][j] * v[2][k],
                        v[0][i] * v[1][j] * d[2][k],
                    ];
                }
            }
        }
    }

    /// Basis indices whose trace is nonzero on local face `face`, in
    /// lexicographic order of the two in-face indices.
    pub fn face_nodes(&self, face: usize) -> Vec<usize> {
        let n = self.per_axis();
        let axis = face / 2;
        let fixed = if face % 2 == 0 { 0 } else { self.order };
        let mut out = Vec::with_capacity(n * n);
        for b in 0..n {
            for a in 0..n {
                let idx = match axis {
                    0 => [fixed, a, b],
                    1 => [a, fixed, b],
                    _ => [a, b, fixed],
                };
                out.push(self.index(idx[0], idx[1], idx[2]));
            }
        }
        out
    }
}

/// Trilinear shape functions of the 8 corners (corner `c = ci + 2 cj + 4 ck`)
/// and their reference gradients at `xi`.
pub fn trilinear(xi: [f64; 3]) -> ([f64; 8], [[f64; 3]; 8]) {
    let mut n = [0.0; 8];
    let mut g = [[0.0; 3]; 8];
    for c in 0..8 {
        let s = [(c & 1) as f64, ((c >> 1) & 1) as f64, ((c >> 2) & 1) as f64];
        let f = |axis: usize| {
            if s[axis] == 1.0 {
                xi[axis]
            } else {
                1.0 - xi[axis]
            }
        };
        let df = |axis: usize| if s[axis] == 1.0 { 1.0 } else { -1.0 };
        n[c] = f(0) * f(1) * f(2);
        g[c] = [df(0) * f(1) * f(2), f(0) * df(1) * f(2), f(0) * f(1) * df(2)];
    }
    (n, g)
}

/// Physical position and Jacobian columns `dx/dxi_a` of the trilinear map.
pub fn map_point(corners: &[[f64; 3]; 8], xi: [f64; 3]) -> ([f64; 3], [[f64; 3]; 3]) {
    let (n, g) = trilinear(xi);
    let mut x = [0.0; 3];
    let mut cols = [[0.0; 3]; 3];
    for c in 0..8 {
        for k in 0..3 {
            x[k] += n[c] * corners[c][k];
            for a in 0..3 {
                cols[a][k] += g[c][a] * corners[c][k];
            }
        }
    }
    (x, cols)
}

pub fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

/// Area-weighted outward normal of local face `face` at a point, from the
/// Jacobian columns (one column of the cofactor matrix).
pub fn face_area_normal(cols: &[[f64; 3]; 3], face: usize) -> [f64; 3] {
    let n = match face / 2 {
        0 => cross(cols[1], cols[2]),
        1 => cross(cols[2], cols[0]),
        _ => cross(cols[0], cols[1]),
    };
    if face % 2 == 0 {
        [-n[0], -n[1], -n[2]]
    } else {
        n
    }
}

/// Reference point on face `face` from two in-face coordinates.
pub fn face_point(face: usize, s: f64, t: f64) -> [f64; 3] {
    let fixed = (face % 2) as f64;
    match face / 2 {
        0 => [fixed, s, t],
        1 => [s, fixed, t],
        _ => [s, t, fixed],
    }
}
