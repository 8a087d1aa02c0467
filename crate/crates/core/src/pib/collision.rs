//! Kinetic-gas collision rates within a shell.
//!
//! Each shell is a well-mixed box: two species with populations `N_m`,
//! `N_n` collide at `sigma_mn * v_rel * N_m * N_n / V` per year, with
//! `sigma_mn = pi (r_m + r_n)^2`. A species colliding with itself counts
//! unordered pairs, `N (N - 1) / 2`.

use std::f64::consts::PI;

use ndarray::Array2;

use crate::domain::{OrbitalState, PhysicalParams, ShellGrid, Species, SECONDS_PER_YEAR};
use crate::error::{Error, Result};
use crate::pib::breakup::FragmentTable;

/// Per-shell collision rates for one state.
#[derive(Debug, Clone, PartialEq)]
pub struct CollisionRates {
    /// All species pairs, no avoidance, no adjustment (collisions/year).
    pub unadjusted_total: Vec<f64>,
    /// All species pairs after avoidance and adjustment (collisions/year).
    pub effective_total: Vec<f64>,
    /// Objects of each species removed per year by effective collisions,
    /// species-indexed rows.
    pub effective_by_species: Array2<f64>,
    /// Fragments created per year by effective collisions.
    pub fragments: Vec<f64>,
}

fn check_species_count(value: f64, species: Species, shell: usize) -> Result<()> {
    if !value.is_finite() {
        return Err(Error::NonFinite(format!("{species} population in shell {shell}")));
    }
    if value < 0.0 {
        return Err(Error::invalid(format!(
            "negative {species} population {value} in shell {shell}"
        )));
    }
    Ok(())
}

/// `sigma * v` for a species pair in km^3/year.
fn swept_volume_rate(params: &PhysicalParams, m: Species, n: Species) -> f64 {
    let r_km = (params.radius_m[m.index()] + params.radius_m[n.index()]) * 1e-3;
    PI * r_km * r_km * params.v_rel_km_s * SECONDS_PER_YEAR
}

fn pair_count(nm: f64, nn: f64, same: bool) -> f64 {
    if same {
        // Below one object there is nothing to pair with.
        (nm * (nm - 1.0) / 2.0).max(0.0)
    } else {
        nm * nn
    }
}

/// Collisions per year between species `m` and `n` in shell `j`.
pub fn collision_rate_pair(
    state: &OrbitalState,
    params: &PhysicalParams,
    grid: &ShellGrid,
    j: usize,
    m: Species,
    n: Species,
) -> Result<f64> {
    let volume = grid.volume(j)?;
    if volume <= 0.0 {
        return Err(Error::invalid(format!("shell {j} has zero volume")));
    }
    if j >= state.n_shells() {
        return Err(Error::IndexOutOfRange {
            what: "state shell",
            index: j,
            len: state.n_shells(),
        });
    }
    let (nm, nn) = (state.get(m, j), state.get(n, j));
    check_species_count(nm, m, j)?;
    check_species_count(nn, n, j)?;
    Ok(swept_volume_rate(params, m, n) * pair_count(nm, nn, m == n) / volume)
}

/// Sum of [`collision_rate_pair`] over every unordered species pair in shell
/// `j`, self-pairs included.
pub fn total_unadjusted_collision_rate(
    state: &OrbitalState,
    params: &PhysicalParams,
    grid: &ShellGrid,
    j: usize,
) -> Result<f64> {
    let mut total = 0.0;
    for a in 0..Species::COUNT {
        for b in a..Species::COUNT {
            let (m, n) = (Species::from_index(a).unwrap(), Species::from_index(b).unwrap());
            total += collision_rate_pair(state, params, grid, j, m, n)?;
        }
    }
    Ok(total)
}

/// Multiplier applied to the kinetic-gas rate of a pair.
pub fn pair_adjustment(params: &PhysicalParams, m: Species, n: Species) -> f64 {
    if params.sat_avoidance && (m.is_operator() || n.is_operator()) {
        0.0
    } else if !m.is_operator() && !n.is_operator() {
        params.debris_debris_adjust
    } else {
        1.0
    }
}

pub fn effective_collision_rates(
    state: &OrbitalState,
    params: &PhysicalParams,
    grid: &ShellGrid,
) -> Result<CollisionRates> {
    let volumes = shell_volumes(grid)?;
    let table = FragmentTable::new(params)?;
    rates_with(state, params, &volumes, &table)
}

pub(crate) fn shell_volumes(grid: &ShellGrid) -> Result<Vec<f64>> {
    (0..grid.n_shells())
        .map(|j| {
            let v = grid.volume(j)?;
            if v > 0.0 {
                Ok(v)
            } else {
                Err(Error::invalid(format!("shell {j} has zero volume")))
            }
        })
        .collect()
}

/// Rates with precomputed shell volumes and fragment counts. The pair loop
/// order is fixed so results are reproducible bit for bit.
pub(crate) fn rates_with(
    state: &OrbitalState,
    params: &PhysicalParams,
    volumes: &[f64],
    table: &FragmentTable,
) -> Result<CollisionRates> {
    let n_shells = volumes.len();
    if state.n_shells() != n_shells {
        return Err(Error::DimensionMismatch {
            what: "state shells".into(),
            expected: n_shells,
            found: state.n_shells(),
        });
    }
    let mut swept = [[0.0; Species::COUNT]; Species::COUNT];
    let mut adjust = [[0.0; Species::COUNT]; Species::COUNT];
    for a in 0..Species::COUNT {
        for b in a..Species::COUNT {
            let (m, n) = (Species::from_index(a).unwrap(), Species::from_index(b).unwrap());
            swept[a][b] = swept_volume_rate(params, m, n);
            adjust[a][b] = pair_adjustment(params, m, n);
        }
    }

    let mut out = CollisionRates {
        unadjusted_total: vec![0.0; n_shells],
        effective_total: vec![0.0; n_shells],
        effective_by_species: Array2::zeros((Species::COUNT, n_shells)),
        fragments: vec![0.0; n_shells],
    };
    for (j, &volume) in volumes.iter().enumerate() {
        let pops = state.shell_populations(j);
        for (i, &p) in pops.iter().enumerate() {
            check_species_count(p, Species::from_index(i).unwrap(), j)?;
        }
        for a in 0..Species::COUNT {
            if pops[a] == 0.0 {
                continue;
            }
            for b in a..Species::COUNT {
                let raw = swept[a][b] * pair_count(pops[a], pops[b], a == b) / volume;
                if raw == 0.0 {
                    continue;
                }
                out.unadjusted_total[j] += raw;
                if adjust[a][b] == 0.0 {
                    continue;
                }
                let eff = raw * adjust[a][b];
                out.effective_total[j] += eff;
                out.effective_by_species[[a, j]] += eff;
                out.effective_by_species[[b, j]] += eff;
                out.fragments[j] += table.get(a, b) * eff;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{DebrisType, OperatorType};

    const COF: Species = Species::Debris(DebrisType::Cof);
    const IP: Species = Species::Debris(DebrisType::Ip);

    fn setup() -> (ShellGrid, PhysicalParams, OrbitalState) {
        let grid = ShellGrid::default();
        let params = PhysicalParams::defaults(&grid);
        let state = OrbitalState::zeros(2012, grid.n_shells());
        (grid, params, state)
    }

    #[test]
    fn empty_species_gives_zero() {
        let (g, p, s) = setup();
        assert_eq!(collision_rate_pair(&s, &p, &g, 14, COF, IP).unwrap(), 0.0);
        assert_eq!(total_unadjusted_collision_rate(&s, &p, &g, 14).unwrap(), 0.0);
    }

    #[test]
    fn single_object_cannot_hit_itself() {
        let (g, p, mut s) = setup();
        *s.get_mut(COF, 14) = 1.0;
        assert_eq!(collision_rate_pair(&s, &p, &g, 14, COF, COF).unwrap(), 0.0);
    }

    #[test]
    fn pair_rate_matches_formula() {
        let (g, mut p, mut s) = setup();
        p.radius_m[COF.index()] = 0.05;
        p.radius_m[IP.index()] = 0.05;
        *s.get_mut(COF, 14) = 100.0;
        *s.get_mut(IP, 14) = 50.0;
        let got = collision_rate_pair(&s, &p, &g, 14, COF, IP).unwrap();
        // pi (1e-4 km)^2 * 10 km/s * 31557600 s * 100 * 50 / 32535982437.84 km^3
        let oracle = 1.523_561_252_750_464_4e-6;
        assert!((got - oracle).abs() / oracle < 1e-12, "{got} vs {oracle}");
        // Symmetric in the species order.
        let swapped = collision_rate_pair(&s, &p, &g, 14, IP, COF).unwrap();
        assert_eq!(got, swapped);
    }

    #[test]
    fn single_species_total_is_self_rate() {
        let (g, p, mut s) = setup();
        *s.get_mut(COF, 10) = 250.0;
        let total = total_unadjusted_collision_rate(&s, &p, &g, 10).unwrap();
        let own = collision_rate_pair(&s, &p, &g, 10, COF, COF).unwrap();
        assert_eq!(total, own);
    }

    #[test]
    fn two_species_total_matches_pair_enumeration() {
        let (g, p, mut s) = setup();
        let sat = Species::Operator(OperatorType::Defense);
        *s.get_mut(COF, 10) = 250.0;
        *s.get_mut(sat, 10) = 40.0;
        let total = total_unadjusted_collision_rate(&s, &p, &g, 10).unwrap();
        let v = g.volume(10).unwrap();
        let k = |ra: f64, rb: f64| PI * ((ra + rb) * 1e-3).powi(2) * 10.0 * SECONDS_PER_YEAR / v;
        let (rc, rs) = (p.radius_m[COF.index()], p.radius_m[sat.index()]);
        let oracle = k(rc, rc) * 250.0 * 249.0 / 2.0 + k(rs, rs) * 40.0 * 39.0 / 2.0 + k(rc, rs) * 250.0 * 40.0;
        assert!((total - oracle).abs() / oracle < 1e-12);
    }

    #[test]
    fn negative_population_is_rejected() {
        let (g, p, mut s) = setup();
        *s.get_mut(COF, 3) = -2.0;
        assert!(collision_rate_pair(&s, &p, &g, 3, COF, IP).is_err());
    }

    #[test]
    fn zero_volume_shell_is_rejected() {
        let g = ShellGrid::from_bounds(vec![300.0], vec![300.0], 6371.0).unwrap();
        let p = PhysicalParams::defaults(&g);
        let s = OrbitalState::zeros(2012, 1);
        assert!(collision_rate_pair(&s, &p, &g, 0, COF, COF).is_err());
    }

    #[test]
    fn avoidance_zeroes_operator_rows() {
        let (g, p, mut s) = setup();
        for sp in Species::all() {
            *s.get_mut(sp, 12) = 30.0;
        }
        let r = effective_collision_rates(&s, &p, &g).unwrap();
        for op in OperatorType::ALL {
            assert_eq!(r.effective_by_species[[op.index(), 12]], 0.0);
        }
        assert!(r.effective_total[12] <= r.unadjusted_total[12]);
        assert!(r.effective_total[12] > 0.0);
    }

    #[test]
    fn debris_only_rates_are_scaled_by_adjustment() {
        let (g, p, mut s) = setup();
        *s.get_mut(COF, 14) = 2000.0;
        *s.get_mut(IP, 14) = 300.0;
        let r = effective_collision_rates(&s, &p, &g).unwrap();
        let rel = r.effective_total[14] / r.unadjusted_total[14];
        assert!((rel - 1e-4).abs() < 1e-15);

        let mut zero = p.clone();
        zero.debris_debris_adjust = 0.0;
        let r0 = effective_collision_rates(&s, &zero, &g).unwrap();
        assert!(r0.effective_by_species.iter().all(|&x| x == 0.0));
        assert_eq!(r0.fragments[14], 0.0);
    }

    #[test]
    fn self_pairs_remove_two_objects_each() {
        let (g, mut p, mut s) = setup();
        p.debris_debris_adjust = 1.0;
        *s.get_mut(COF, 14) = 500.0;
        let r = effective_collision_rates(&s, &p, &g).unwrap();
        let pair = collision_rate_pair(&s, &p, &g, 14, COF, COF).unwrap();
        assert!((r.effective_by_species[[COF.index(), 14]] - 2.0 * pair).abs() < 1e-18);
    }
}
