//! Fragment counts from the NASA standard breakup power law,
//! `N(Lc) = 0.1 M^0.75 Lc^-1.71`.

use crate::domain::{PhysicalParams, Species};
use crate::error::{Error, Result};

/// Specific impact energy in J/g: kinetic energy of the lighter body over
/// the mass of the heavier one.
pub fn specific_impact_energy(mass_a_kg: f64, mass_b_kg: f64, v_rel_km_s: f64) -> f64 {
    let (small, large) = if mass_a_kg <= mass_b_kg {
        (mass_a_kg, mass_b_kg)
    } else {
        (mass_b_kg, mass_a_kg)
    };
    let v_m_s = v_rel_km_s * 1e3;
    0.5 * small * v_m_s * v_m_s / (large * 1e3)
}

/// Fragments of size at least `min_size_m` from a collision between two
/// bodies. Catastrophic collisions use the combined mass; otherwise the
/// lighter body's mass times `v_rel^2` (km/s) stands in for it.
pub fn breakup_fragments(
    mass_a_kg: f64,
    mass_b_kg: f64,
    v_rel_km_s: f64,
    catastrophic_threshold: f64,
    min_size_m: f64,
) -> Result<f64> {
    if !(mass_a_kg > 0.0 && mass_b_kg > 0.0) || !mass_a_kg.is_finite() || !mass_b_kg.is_finite() {
        return Err(Error::invalid(format!(
            "breakup masses must be positive, got {mass_a_kg} and {mass_b_kg}"
        )));
    }
    if !(min_size_m > 0.0) {
        return Err(Error::invalid("minimum fragment size must be positive"));
    }
    let energy = specific_impact_energy(mass_a_kg, mass_b_kg, v_rel_km_s);
    let reference_mass = if energy >= catastrophic_threshold {
        mass_a_kg + mass_b_kg
    } else {
        mass_a_kg.min(mass_b_kg) * v_rel_km_s * v_rel_km_s
    };
    Ok(0.1 * reference_mass.powf(0.75) * min_size_m.powf(-1.71))
}

pub fn fragments_per_collision(params: &PhysicalParams, m: Species, n: Species) -> Result<f64> {
    breakup_fragments(
        params.mass_kg[m.index()],
        params.mass_kg[n.index()],
        params.v_rel_km_s,
        params.catastrophic_threshold,
        params.frag_min_size_m,
    )
}

/// Fragment counts for every species pair, computed once per parameter set.
#[derive(Debug, Clone)]
pub struct FragmentTable {
    counts: [[f64; Species::COUNT]; Species::COUNT],
}

impl FragmentTable {
    pub fn new(params: &PhysicalParams) -> Result<Self> {
        let mut counts = [[0.0; Species::COUNT]; Species::COUNT];
        for a in 0..Species::COUNT {
            for b in 0..Species::COUNT {
                let (m, n) = (Species::from_index(a).unwrap(), Species::from_index(b).unwrap());
                counts[a][b] = fragments_per_collision(params, m, n)?;
            }
        }
        Ok(Self { counts })
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.counts[a][b]
    }
}
