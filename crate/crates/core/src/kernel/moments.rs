//! Real spherical harmonics up to degree 2, normalized so that
//! `∫ Y_a Y_b dΩ / 4π = δ_ab`; component 0 is the constant 1.

pub const MAX_MOMENTS: usize = 9;

/// Legendre degree of moment component `component`.
pub fn legendre_degree(component: usize) -> usize {
    match component {
        0 => 0,
        1..=3 => 1,
        4..=8 => 2,
        _ => panic!("moment component {component} exceeds {MAX_MOMENTS}"),
    }
}

/// Number of distinct Legendre degrees needed for `moments` components.
pub fn legendre_orders(moments: usize) -> usize {
    legendre_degree(moments - 1) + 1
}

pub fn harmonic(component: usize, omega: [f64; 3]) -> f64 {
    let [mu, eta, xi] = omega;
    let s3 = 3f64.sqrt();
    let s15 = 15f64.sqrt();
    match component {
        0 => 1.0,
        1 => s3 * mu,
        2 => s3 * eta,
        3 => s3 * xi,
        4 => s15 * mu * eta,
        5 => s15 * eta * xi,
        6 => s15 * mu * xi,
        7 => 0.5 * 5f64.sqrt() * (3.0 * xi * xi - 1.0),
        8 => 0.5 * s15 * (mu * mu - eta * eta),
        _ => panic!("moment component {component} exceeds {MAX_MOMENTS}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::build_quadrature;

    #[test]
    fn harmonics_are_orthonormal_under_a_fine_rule() {
        let q = build_quadrature(144).unwrap();
        for a in 0..MAX_MOMENTS {
            for b in 0..MAX_MOMENTS {
                let s: f64 = q.iter().map(|(d, w)| w * harmonic(a, d.omega) * harmonic(b, d.omega)).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((s - want).abs() < 1e-3, "({a},{b}) -> {s}");
            }
        }
    }

    #[test]
    fn degrees() {
        assert_eq!(legendre_orders(1), 1);
        assert_eq!(legendre_orders(4), 2);
        assert_eq!(legendre_orders(9), 3);
    }
}
