use super::moments::legendre_degree;
use super::state::FluxState;
use super::xs::CrossSectionTable;

/// Outer-iteration source: external source plus scattering in from every
/// other group, `s_out = q_ex + Σ_{g'≠g} σ_s(l, g'→g) φ_l(g')`.
pub fn update_outer_source(state: &mut FluxState, xs: &CrossSectionTable, materials: &[usize]) {
    let dims = state.dims();
    let b = dims.basis;
    let moments_flux = state.scalar_flux_moments.to_vec();
    let (outer, _) = state.sources_mut();
    for m in 0..dims.moments {
        let order = legendre_degree(m);
        for g in 0..dims.groups {
            for e in 0..dims.elements {
                let mat = materials[e];
                let dst = ((m * dims.groups + g) * dims.elements + e) * b;
                outer[dst..dst + b].copy_from_slice(xs.qex(m, g, e));
                for from in (0..dims.groups).filter(|&from| from != g) {
                    let sigma = xs.sigs(mat, order, from, g);
                    if sigma == 0.0 {
                        continue;
                    }
                    let src = ((m * dims.groups + from) * dims.elements + e) * b;
                    for k in 0..b {
                        outer[dst + k] += sigma * moments_flux[src + k];
                    }
                }
            }
        }
    }
}

/// Inner-iteration source: `s = s_out + σ_s(l, g→g) φ_l(g)`. Zeroes `φ` and
/// `φ_l` for the sweep that follows.
pub fn update_inner_source(state: &mut FluxState, xs: &CrossSectionTable, materials: &[usize]) {
    let dims = state.dims();
    let b = dims.basis;
    let moments_flux = state.scalar_flux_moments.to_vec();
    let (outer, source) = state.sources_mut();
    for m in 0..dims.moments {
        let order = legendre_degree(m);
        for g in 0..dims.groups {
            for e in 0..dims.elements {
                let sigma = xs.sigs(materials[e], order, g, g);
                let at = ((m * dims.groups + g) * dims.elements + e) * b;
                for k in at..at + b {
                    source[k] = outer[k] + sigma * moments_flux[k];
                }
            }
        }
    }
    state.zero_scalar_fluxes();
}

/// `Σ_{e, node} φ(g, e, node)` per group, summed in fixed order.
pub fn integrated_flux(state: &FluxState) -> Vec<f64> {
    let dims = state.dims();
    let per_group = dims.elements * dims.basis;
    (0..dims.groups)
        .map(|g| {
            let start = g * per_group;
            (start..start + per_group).fold(0.0, |acc, i| acc + state.scalar_flux.get(i))
        })
        .collect()
}

pub fn total_integrated_flux(state: &FluxState) -> f64 {
    integrated_flux(state).iter().sum()
}
