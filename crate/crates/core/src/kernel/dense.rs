use crate::error::{Result, SweepError};

/// Square linear system `A x = b`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSystem {
    n: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl DenseSystem {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            a: vec![0.0; n * n],
            b: vec![0.0; n],
        }
    }

    pub fn from_parts(n: usize, a: Vec<f64>, b: Vec<f64>) -> Self {
        assert_eq!(a.len(), n * n);
        assert_eq!(b.len(), n);
        Self { n, a, b }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn clear(&mut self) {
        self.a.fill(0.0);
        self.b.fill(0.0);
    }

    /// `max_i Σ_j |a_ij|`
    pub fn norm_inf(&self) -> f64 {
        self.a
            .chunks_exact(self.n)
            .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Gaussian elimination with partial pivoting. Overwrites `a` with its
    /// factor and `b` with the solution.
    pub fn solve_in_place(&mut self) -> Result<()> {
        let n = self.n;
        let threshold = 1e-14 * self.norm_inf();
        let a = &mut self.a;
        let b = &mut self.b;
        for k in 0..n {
            let (pivot_row, pivot) = (k..n)
                .map(|i| (i, a[i * n + k].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if !(pivot >= threshold) || pivot == 0.0 {
                return Err(SweepError::Singular {
                    column: k,
                    pivot,
                    threshold,
                });
            }
            if pivot_row != k {
                for j in 0..n {
                    a.swap(k * n + j, pivot_row * n + j);
                }
                b.swap(k, pivot_row);
            }
            let (head, tail) = a.split_at_mut((k + 1) * n);
            let pivot_slice = &head[k * n..];
            let inv = 1.0 / pivot_slice[k];
            for (r, row) in tail.chunks_exact_mut(n).enumerate() {
                let factor = row[k] * inv;
                if factor == 0.0 {
                    continue;
                }
                row[k] = 0.0;
                for (x, &p) in row[k + 1..].iter_mut().zip(&pivot_slice[k + 1..n]) {
                    *x -= factor * p;
                }
                b[k + 1 + r] -= factor * b[k];
            }
        }
        for k in (0..n).rev() {
            let row = &a[k * n..(k + 1) * n];
            let s = b[k] - row[k + 1..].iter().zip(&b[k + 1..]).map(|(a, x)| a * x).sum::<f64>();
            b[k] = s / row[k];
        }
        Ok(())
    }
}

/// Solves `system` and returns the solution vector.
pub fn solve_dense(mut system: DenseSystem) -> Result<Vec<f64>> {
    system.solve_in_place()?;
    Ok(system.b)
}
