//! Annual propagation of the shell populations.
//!
//! The year is split into `params.substeps` explicit Euler sub-intervals.
//! Within each sub-interval every removal from a (species, shell) cell is
//! scaled down proportionally when the sum would exceed the stock, so no
//! population goes negative and decay transfers stay balanced.

use ndarray::{Array1, Array2};

use crate::domain::{
    DebrisType, LaunchAllocation, OperatorType, OrbitalState, PhysicalParams, ShellGrid, Species,
};
use crate::error::{Error, Result};
use crate::pib::breakup::FragmentTable;
use crate::pib::collision::{rates_with, shell_volumes};

/// Flows accumulated over one annual step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDiagnostics {
    /// Fragments created per shell.
    pub fragments_created: Vec<f64>,
    /// Debris leaving each shell downward (all debris types).
    pub decay_outflow: Vec<f64>,
    /// Debris leaving the bottom shell, per debris type.
    pub reentered: [f64; DebrisType::COUNT],
    /// Satellites reaching end of life, per (operator, shell).
    pub eol: Array2<f64>,
    /// End-of-life satellites moved to the disposal shell, per operator.
    pub pmd_relocated: [f64; OperatorType::COUNT],
    /// Objects removed by collisions, per (species, shell).
    pub collision_removals: Array2<f64>,
}

impl StepDiagnostics {
    fn zeros(n: usize) -> Self {
        Self {
            fragments_created: vec![0.0; n],
            decay_outflow: vec![0.0; n],
            reentered: [0.0; DebrisType::COUNT],
            eol: Array2::zeros((OperatorType::COUNT, n)),
            pmd_relocated: [0.0; OperatorType::COUNT],
            collision_removals: Array2::zeros((Species::COUNT, n)),
        }
    }

    pub fn total_reentered(&self) -> f64 {
        self.reentered.iter().sum()
    }
}

/// Where end-of-life satellites end up as intact inactive payloads.
#[derive(Debug, Clone, PartialEq)]
pub struct PmdPlacement {
    /// New intact payloads per shell.
    pub ip: Array1<f64>,
    /// Satellites moved to the disposal shell, per operator.
    pub relocated: [f64; OperatorType::COUNT],
}

/// Route end-of-life satellites into intact payloads. Above the disposal
/// shell a `pmd_rate` fraction moves down to it and the rest stays put; at
/// or below it everything stays in place.
pub fn apply_pmd(params: &PhysicalParams, eol_counts: &Array2<f64>) -> Result<PmdPlacement> {
    let n = eol_counts.ncols();
    if eol_counts.nrows() != OperatorType::COUNT {
        return Err(Error::DimensionMismatch {
            what: "end-of-life operator rows".into(),
            expected: OperatorType::COUNT,
            found: eol_counts.nrows(),
        });
    }
    let target = params.pmd_target_shell;
    if target >= n {
        return Err(Error::IndexOutOfRange {
            what: "pmd target shell",
            index: target,
            len: n,
        });
    }
    let mut ip = Array1::zeros(n);
    let mut relocated = [0.0; OperatorType::COUNT];
    for op in OperatorType::ALL {
        let rate = params.pmd_rate[op.index()];
        for j in 0..n {
            let eol = eol_counts[[op.index(), j]];
            if eol < 0.0 || !eol.is_finite() {
                return Err(Error::invalid(format!("end-of-life count {eol} for {op} in shell {j}")));
            }
            if j > target {
                let moved = rate * eol;
                ip[target] += moved;
                ip[j] += eol - moved;
                relocated[op.index()] += moved;
            } else {
                ip[j] += eol;
            }
        }
    }
    Ok(PmdPlacement { ip, relocated })
}

/// Advance the state by one year under the given launches.
pub fn step_year(
    state: &OrbitalState,
    launches: &LaunchAllocation,
    params: &PhysicalParams,
    grid: &ShellGrid,
) -> Result<(OrbitalState, StepDiagnostics)> {
    let n = grid.n_shells();
    state.validate(n)?;
    launches.validate(n)?;
    params.validate(grid)?;
    let volumes = shell_volumes(grid)?;
    let table = FragmentTable::new(params)?;

    let dt = 1.0 / params.substeps as f64;
    let mut cur = state.clone();
    let mut diag = StepDiagnostics::zeros(n);

    // Creation terms that depend only on launches are constant over the year.
    let mut rb_source = vec![0.0; n];
    let mut mro_launch_source = vec![0.0; n];
    for op in OperatorType::ALL {
        let i = op.index();
        for j in 0..n {
            let q = launches.q[[i, j]];
            rb_source[j] += params.rb_per_launch[[i, j]] * q;
            mro_launch_source[j] += params.mro_per_launch[[i, j]] * q;
        }
    }

    for _ in 0..params.substeps {
        let rates = rates_with(&cur, params, &volumes, &table)?;
        let mut next = cur.clone();

        // Active satellites: launches in, end of life and collisions out.
        let mut eol = Array2::zeros((OperatorType::COUNT, n));
        let mut mro_sat_source = vec![0.0; n];
        for op in OperatorType::ALL {
            let i = op.index();
            for j in 0..n {
                let stock = cur.satellites[[i, j]];
                let eol_out = dt * params.eol_rate[i] * stock;
                let coll_out = dt * rates.effective_by_species[[i, j]];
                let scale = removal_scale(stock, eol_out + coll_out);
                let (eol_out, coll_out) = (eol_out * scale, coll_out * scale);
                next.satellites[[i, j]] =
                    (stock - eol_out - coll_out).max(0.0) + dt * launches.q[[i, j]];
                eol[[i, j]] = eol_out;
                diag.collision_removals[[i, j]] += coll_out;
                mro_sat_source[j] += params.mro_per_sat[[i, j]] * stock;
            }
        }
        let placement = apply_pmd(params, &eol)?;
        diag.eol += &eol;
        for (acc, r) in diag.pmd_relocated.iter_mut().zip(placement.relocated) {
            *acc += r;
        }

        // Debris: decay one shell down, collisions out, creation terms in.
        for deb in DebrisType::ALL {
            let k = deb.index();
            let species_idx = Species::Debris(deb).index();
            for j in 0..n {
                let stock = cur.debris[[k, j]];
                let decay_out = dt * params.decay_rate[[k, j]] * stock;
                let coll_out = dt * rates.effective_by_species[[species_idx, j]];
                let scale = removal_scale(stock, decay_out + coll_out);
                let (decay_out, coll_out) = (decay_out * scale, coll_out * scale);
                next.debris[[k, j]] -= decay_out + coll_out;
                if j > 0 {
                    next.debris[[k, j - 1]] += decay_out;
                } else {
                    diag.reentered[k] += decay_out;
                }
                diag.decay_outflow[j] += decay_out;
                diag.collision_removals[[species_idx, j]] += coll_out;
            }
        }
        for j in 0..n {
            next.debris[[DebrisType::Ip.index(), j]] += placement.ip[j];
            let frags = dt * rates.fragments[j];
            next.debris[[DebrisType::Cof.index(), j]] += frags;
            diag.fragments_created[j] += frags;
            next.debris[[DebrisType::Rb.index(), j]] += dt * rb_source[j];
            next.debris[[DebrisType::Mro.index(), j]] += dt * (mro_sat_source[j] + mro_launch_source[j]);
        }
        next.debris.mapv_inplace(|v| v.max(0.0));
        check_finite(&next)?;
        cur = next;
    }
    cur.year = state.year + 1;
    Ok((cur, diag))
}

fn removal_scale(stock: f64, removal: f64) -> f64 {
    if removal > stock && removal > 0.0 {
        stock / removal
    } else {
        1.0
    }
}

fn check_finite(state: &OrbitalState) -> Result<()> {
    for species in Species::all() {
        if let Some(j) = state.row(species).iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("{species} population in shell {j}")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (ShellGrid, PhysicalParams) {
        let grid = ShellGrid::default();
        let params = PhysicalParams::defaults(&grid);
        (grid, params)
    }

    #[test]
    fn quiet_configuration_is_a_fixed_point() {
        let (g, mut p) = setup();
        p.debris_debris_adjust = 0.0;
        let mut s = OrbitalState::zeros(2012, 24);
        for (idx, v) in s.satellites.iter_mut().enumerate() {
            *v = (idx % 7) as f64 * 3.5;
        }
        for (idx, v) in s.debris.iter_mut().enumerate() {
            *v = (idx % 5) as f64 * 11.25;
        }
        let (out, _) = step_year(&s, &LaunchAllocation::zeros(24), &p, &g).unwrap();
        assert_eq!(out.satellites, s.satellites);
        assert_eq!(out.debris, s.debris);
        assert_eq!(out.year, 2013);
    }

    #[test]
    fn full_decay_moves_object_down_one_shell() {
        let (g, mut p) = setup();
        p.substeps = 1;
        p.decay_rate[[DebrisType::Ip.index(), 10]] = 1.0;
        let mut s = OrbitalState::zeros(2012, 24);
        s.debris[[DebrisType::Ip.index(), 10]] = 1.0;
        let (out, diag) = step_year(&s, &LaunchAllocation::zeros(24), &p, &g).unwrap();
        assert_eq!(out.debris[[DebrisType::Ip.index(), 10]], 0.0);
        assert_eq!(out.debris[[DebrisType::Ip.index(), 9]], 1.0);
        assert_eq!(diag.decay_outflow[10], 1.0);
    }

    #[test]
    fn bottom_shell_outflow_leaves_the_system() {
        let (g, mut p) = setup();
        p.substeps = 1;
        p.debris_debris_adjust = 0.0;
        p.decay_rate[[DebrisType::Cof.index(), 0]] = 0.5;
        let mut s = OrbitalState::zeros(2012, 24);
        s.debris[[DebrisType::Cof.index(), 0]] = 8.0;
        let (out, diag) = step_year(&s, &LaunchAllocation::zeros(24), &p, &g).unwrap();
        assert_eq!(out.debris[[DebrisType::Cof.index(), 0]], 4.0);
        assert_eq!(diag.reentered[DebrisType::Cof.index()], 4.0);
    }

    #[test]
    fn pmd_full_compliance_relocates_to_target() {
        let (_, mut p) = setup();
        p.pmd_rate = [1.0; 5];
        let mut eol = Array2::zeros((5, 24));
        eol[[0, 12]] = 1.0; // 700-750 km
        let out = apply_pmd(&p, &eol).unwrap();
        assert_eq!(out.ip[8], 1.0);
        assert_eq!(out.ip[12], 0.0);
        assert_eq!(out.relocated[0], 1.0);
    }

    #[test]
    fn pmd_zero_compliance_leaves_in_place() {
        let (_, p) = setup();
        let mut eol = Array2::zeros((5, 24));
        eol[[2, 15]] = 4.0;
        let out = apply_pmd(&p, &eol).unwrap();
        assert_eq!(out.ip[15], 4.0);
        assert_eq!(out.ip.sum(), 4.0);
    }

    #[test]
    fn below_target_is_naturally_compliant() {
        let (_, mut p) = setup();
        for rate in [0.0, 0.3, 1.0] {
            p.pmd_rate = [rate; 5];
            let mut eol = Array2::zeros((5, 24));
            eol[[1, 6]] = 1.0; // 400-450 km
            let out = apply_pmd(&p, &eol).unwrap();
            assert_eq!(out.ip[6], 1.0);
            assert_eq!(out.relocated[1], 0.0);
        }
    }

    #[test]
    fn launches_add_satellites() {
        let (g, p) = setup();
        let s = OrbitalState::zeros(2012, 24);
        let mut q = LaunchAllocation::zeros(24);
        q.q[[0, 8]] = 12.0;
        let (out, _) = step_year(&s, &q, &p, &g).unwrap();
        assert!((out.satellites[[0, 8]] - 12.0).abs() < 1e-12);
    }

    #[test]
    fn eol_becomes_intact_payload() {
        let (g, mut p) = setup();
        p.debris_debris_adjust = 0.0;
        p.eol_rate[1] = 0.1;
        let mut s = OrbitalState::zeros(2012, 24);
        s.satellites[[1, 6]] = 100.0;
        let (out, diag) = step_year(&s, &LaunchAllocation::zeros(24), &p, &g).unwrap();
        let lost = 100.0 - out.satellites[[1, 6]];
        let gained = out.debris[[DebrisType::Ip.index(), 6]];
        assert!((lost - gained).abs() < 1e-12);
        assert!((diag.eol.sum() - lost).abs() < 1e-12);
        // (1 - 0.1/12)^12
        let expected = 100.0 * (1.0 - 0.1 / 12.0_f64).powi(12);
        assert!((out.satellites[[1, 6]] - expected).abs() < 1e-10);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let (g, p) = setup();
        let s = OrbitalState::zeros(2012, 23);
        assert!(step_year(&s, &LaunchAllocation::zeros(24), &p, &g).is_err());
    }
}
