//! Discrete-ordinates angle sets.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Result, SweepError};
use crate::mesh::basis::gauss_legendre_unit;

/// A single discrete ordinate: octant, index within the octant and unit
/// direction `(μ, η, ξ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    pub octant: usize,
    pub angle: usize,
    pub omega: [f64; 3],
}

impl Direction {
    /// A free-standing direction (angle index 0) in whatever octant its
    /// signs select.
    pub fn from_vector(v: [f64; 3]) -> Self {
        let len = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        let omega = [v[0] / len, v[1] / len, v[2] / len];
        let octant = (omega[0] < 0.0) as usize | ((omega[1] < 0.0) as usize) << 1 | ((omega[2] < 0.0) as usize) << 2;
        Self { octant, angle: 0, omega }
    }

    /// The diagonal direction of `octant`, `(±1, ±1, ±1) / √3`.
    pub fn octant_diagonal(octant: usize) -> Self {
        let s = octant_signs(octant);
        Self::from_vector(s)
    }
}

/// Sign triple of an octant: bit 0 flips μ, bit 1 flips η, bit 2 flips ξ.
pub fn octant_signs(octant: usize) -> [f64; 3] {
    let sign = |bit: usize| if octant >> bit & 1 == 1 { -1.0 } else { 1.0 };
    [sign(0), sign(1), sign(2)]
}

/// Product Gauss-Legendre (polar) x Chebyshev (azimuthal) angle set,
/// mirrored into all eight octants and normalized so the weights sum to 1.
#[derive(Debug, Clone)]
pub struct QuadratureSet {
    angles_per_octant: usize,
    base: Vec<[f64; 3]>,
    weights: Vec<f64>,
    pub octant_signs: [[f64; 3]; 8],
}

pub const NUM_OCTANTS: usize = 8;

impl QuadratureSet {
    pub fn angles_per_octant(&self) -> usize {
        self.angles_per_octant
    }

    pub fn total_angles(&self) -> usize {
        NUM_OCTANTS * self.angles_per_octant
    }

    pub fn direction(&self, octant: usize, angle: usize) -> Direction {
        let s = self.octant_signs[octant];
        let b = self.base[angle];
        Direction {
            octant,
            angle,
            omega: [s[0] * b[0], s[1] * b[1], s[2] * b[2]],
        }
    }

    pub fn weight(&self, angle: usize) -> f64 {
        self.weights[angle]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn octant_directions(&self, octant: usize) -> Vec<Direction> {
        (0..self.angles_per_octant).map(|a| self.direction(octant, a)).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Direction, f64)> + '_ {
        (0..NUM_OCTANTS).flat_map(move |o| (0..self.angles_per_octant).map(move |a| (self.direction(o, a), self.weights[a])))
    }
}

pub fn build_quadrature(angles_per_octant: usize) -> Result<QuadratureSet> {
    let octant_signs = std::array::from_fn(octant_signs);
    if angles_per_octant == 1 {
        let c = 1.0 / 3f64.sqrt();
        return Ok(QuadratureSet {
            angles_per_octant,
            base: vec![[c, c, c]],
            weights: vec![1.0 / NUM_OCTANTS as f64],
            octant_signs,
        });
    }
    let side = (angles_per_octant as f64).sqrt().round() as usize;
    if angles_per_octant == 0 || side * side != angles_per_octant {
        return Err(SweepError::Quadrature(format!(
            "{angles_per_octant} angles per octant: the product rule needs 1 or a perfect square"
        )));
    }
    let (polar, polar_w) = gauss_legendre_unit(side);
    let mut base = Vec::with_capacity(angles_per_octant);
    let mut weights = Vec::with_capacity(angles_per_octant);
    for (xi, wp) in polar.iter().zip(&polar_w) {
        let sin_theta = (1.0 - xi * xi).sqrt();
        for k in 0..side {
            let phi = (k as f64 + 0.5) * FRAC_PI_2 / side as f64;
            let (s, c) = phi.sin_cos();
            base.push([sin_theta * c, sin_theta * s, *xi]);
            weights.push(wp / side as f64 / NUM_OCTANTS as f64);
        }
    }
    Ok(QuadratureSet {
        angles_per_octant,
        base,
        weights,
        octant_signs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_angle_is_the_diagonal() {
        let q = build_quadrature(1).unwrap();
        let c = 1.0 / 3f64.sqrt();
        for o in 0..8 {
            let d = q.direction(o, 0);
            let s = octant_signs(o);
            for k in 0..3 {
                assert!((d.omega[k] - s[k] * c).abs() < 1e-15);
            }
        }
        assert_eq!(q.weight(0), 0.125);
    }

    #[test]
    fn weights_sum_to_one() {
        for a in [1, 4, 9, 16, 36] {
            let q = build_quadrature(a).unwrap();
            let total: f64 = q.iter().map(|(_, w)| w).sum();
            assert!((total - 1.0).abs() < 1e-14, "A={a}");
            assert_eq!(q.iter().count(), 8 * a);
        }
    }

    #[test]
    fn directions_are_unit_and_signed_by_octant() {
        let q = build_quadrature(16).unwrap();
        for (d, w) in q.iter() {
            assert!(w > 0.0);
            let len: f64 = d.omega.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((len - 1.0).abs() < 1e-12);
            for k in 0..3 {
                assert_eq!(d.omega[k].signum(), q.octant_signs[d.octant][k]);
            }
        }
    }

    #[test]
    fn odd_first_moments_cancel() {
        let q = build_quadrature(4).unwrap();
        for k in 0..3 {
            let m: f64 = q.iter().map(|(d, w)| w * d.omega[k]).sum();
            assert!(m.abs() < 1e-15);
        }
    }

    #[test]
    fn non_square_counts_are_rejected() {
        assert!(build_quadrature(0).is_err());
        assert!(build_quadrature(3).is_err());
        assert!(build_quadrature(32).is_err());
    }

    #[test]
    fn octant_mirror_symmetry() {
        let q = build_quadrature(9).unwrap();
        for o in 0..8 {
            for a in 0..9 {
                let d0 = q.direction(0, a).omega;
                let d = q.direction(o, a).omega;
                let s = octant_signs(o);
                for k in 0..3 {
                    assert_eq!(d[k], s[k] * d0[k]);
                }
            }
        }
    }

    #[test]
    fn from_vector_selects_octant() {
        assert_eq!(Direction::from_vector([1.0, -2.0, 3.0]).octant, 2);
        assert_eq!(Direction::octant_diagonal(7).omega[2] < 0.0, true);
    }
}
