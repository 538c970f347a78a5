use crate::error::{Result, SweepError};
use crate::kernel::moments::{legendre_orders, MAX_MOMENTS};

/// Total and scattering cross sections plus the fixed external source.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossSectionTable {
    materials: usize,
    groups: usize,
    orders: usize,
    moments: usize,
    elements: usize,
    basis: usize,
    /// `[material][group]`
    sigt: Vec<f64>,
    /// `[material][legendre order][from group][to group]`
    sigs: Vec<f64>,
    /// `[moment][group][element][node]`
    qex: Vec<f64>,
}

impl CrossSectionTable {
    /// Constant synthetic data: `σ = 1 + 0.01 g`, isotropic scattering
    /// `σ_s(g → g') = 0.05 / G` damped by `0.5^l` for higher orders, and a
    /// flat unit isotropic source.
    pub fn synthetic(groups: usize, moments: usize, elements: usize, basis: usize) -> Result<Self> {
        if groups == 0 || moments == 0 || moments > MAX_MOMENTS {
            return Err(SweepError::Config(format!(
                "need at least one group and 1..={MAX_MOMENTS} moments, got G={groups} M={moments}"
            )));
        }
        let materials = 1;
        let orders = legendre_orders(moments);
        let sigt = (0..materials * groups).map(|i| 1.0 + 0.01 * (i % groups) as f64).collect();
        let mut sigs = vec![0.0; materials * orders * groups * groups];
        for m in 0..materials {
            for l in 0..orders {
                for from in 0..groups {
                    for to in 0..groups {
                        sigs[((m * orders + l) * groups + from) * groups + to] =
                            0.05 / groups as f64 * 0.5f64.powi(l as i32);
                    }
                }
            }
        }
        let mut qex = vec![0.0; moments * groups * elements * basis];
        qex[..groups * elements * basis].fill(1.0);
        Ok(Self {
            materials,
            groups,
            orders,
            moments,
            elements,
            basis,
            sigt,
            sigs,
            qex,
        })
    }

    pub fn groups(&self) -> usize {
        self.groups
    }

    pub fn moments(&self) -> usize {
        self.moments
    }

    pub fn legendre_orders(&self) -> usize {
        self.orders
    }

    pub fn materials(&self) -> usize {
        self.materials
    }

    pub fn sigt(&self, material: usize, group: usize) -> f64 {
        self.sigt[material * self.groups + group]
    }

    pub fn set_sigt(&mut self, material: usize, group: usize, value: f64) {
        self.sigt[material * self.groups + group] = value;
    }

    /// Scattering from `from` into `to` at Legendre order `order`.
    pub fn sigs(&self, material: usize, order: usize, from: usize, to: usize) -> f64 {
        self.sigs[((material * self.orders + order) * self.groups + from) * self.groups + to]
    }

    pub fn set_sigs(&mut self, material: usize, order: usize, from: usize, to: usize, value: f64) {
        self.sigs[((material * self.orders + order) * self.groups + from) * self.groups + to] = value;
    }

    pub fn zero_scattering(&mut self) {
        self.sigs.fill(0.0);
    }

    /// Nodal external source of one `(moment, group, element)`.
    pub fn qex(&self, moment: usize, group: usize, elem: usize) -> &[f64] {
        let start = ((moment * self.groups + group) * self.elements + elem) * self.basis;
        &self.qex[start..start + self.basis]
    }

    pub fn qex_all(&self) -> &[f64] {
        &self.qex
    }

    pub fn qex_mut(&mut self) -> &mut [f64] {
        &mut self.qex
    }

    pub fn validate(&self) -> Result<()> {
        if self.sigt.iter().any(|&s| !(s > 0.0)) {
            return Err(SweepError::Config("total cross sections must be positive".into()));
        }
        if self.sigs.iter().any(|&s| s < 0.0) {
            return Err(SweepError::Config("scattering cross sections must be non-negative".into()));
        }
        Ok(())
    }

    /// Whether isotropic out-scattering stays below removal in every group.
    pub fn is_diagonally_dominant(&self) -> bool {
        (0..self.materials).all(|m| {
            (0..self.groups).all(|g| {
                let out: f64 = (0..self.groups).map(|to| self.sigs(m, 0, g, to)).sum();
                out < self.sigt(m, g)
            })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_values() {
        let xs = CrossSectionTable::synthetic(4, 1, 2, 8).unwrap();
        assert_eq!(xs.sigt(0, 0), 1.0);
        assert!((xs.sigt(0, 3) - 1.03).abs() < 1e-15);
        assert_eq!(xs.sigs(0, 0, 1, 2), 0.0125);
        assert!(xs.is_diagonally_dominant());
        assert!(xs.qex(0, 3, 1).iter().all(|&q| q == 1.0));
        xs.validate().unwrap();
    }

    #[test]
    fn higher_moments_have_no_external_source() {
        let xs = CrossSectionTable::synthetic(2, 4, 3, 8).unwrap();
        assert_eq!(xs.legendre_orders(), 2);
        assert!(xs.qex(2, 1, 2).iter().all(|&q| q == 0.0));
        assert_eq!(xs.sigs(0, 1, 0, 0), 0.0125);
    }

    #[test]
    fn rejects_empty_tables() {
        assert!(CrossSectionTable::synthetic(0, 1, 1, 8).is_err());
        assert!(CrossSectionTable::synthetic(1, 10, 1, 8).is_err());
    }
}
