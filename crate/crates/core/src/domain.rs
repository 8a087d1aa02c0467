//! Shared vocabulary: the altitude shell grid, object species, state
//! containers and the physical parameter tables.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const EARTH_RADIUS_KM: f64 = 6371.0;
/// Standard gravitational parameter of the Earth, km^3/s^2.
pub const MU_EARTH: f64 = 398_600.4418;
/// Julian year in seconds.
pub const SECONDS_PER_YEAR: f64 = 365.25 * 86_400.0;

pub const DEFAULT_SHELL_COUNT: usize = 24;
pub const DEFAULT_ALT_MIN_KM: f64 = 100.0;
pub const DEFAULT_SHELL_WIDTH_KM: f64 = 50.0;

/// Contiguous, ascending altitude shells. Shell `j + 1` lies directly above
/// shell `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShellGrid {
    alt_lo: Vec<f64>,
    alt_hi: Vec<f64>,
    earth_radius: f64,
}

impl Default for ShellGrid {
    fn default() -> Self {
        Self::uniform(
            DEFAULT_ALT_MIN_KM,
            DEFAULT_SHELL_WIDTH_KM,
            DEFAULT_SHELL_COUNT,
        )
        .expect("default grid is valid")
    }
}

impl ShellGrid {
    /// `n` shells of equal `width` starting at altitude `start`.
    pub fn uniform(start: f64, width: f64, n: usize) -> Result<Self> {
        let alt_lo: Vec<f64> = (0..n).map(|j| start + width * j as f64).collect();
        let alt_hi: Vec<f64> = (0..n).map(|j| start + width * (j + 1) as f64).collect();
        Self::from_bounds(alt_lo, alt_hi, EARTH_RADIUS_KM)
    }

    pub fn from_bounds(alt_lo: Vec<f64>, alt_hi: Vec<f64>, earth_radius: f64) -> Result<Self> {
        if alt_lo.len() != alt_hi.len() {
            return Err(Error::DimensionMismatch {
                what: "shell upper bounds".into(),
                expected: alt_lo.len(),
                found: alt_hi.len(),
            });
        }
        if alt_lo.is_empty() {
            return Err(Error::invalid("shell grid needs at least one shell"));
        }
        if !(earth_radius.is_finite() && earth_radius > 0.0) {
            return Err(Error::invalid("earth radius must be positive"));
        }
        for j in 0..alt_lo.len() {
            let (lo, hi) = (alt_lo[j], alt_hi[j]);
            if !(lo.is_finite() && hi.is_finite()) || lo < 0.0 || hi < lo {
                return Err(Error::invalid(format!("shell {j} has bounds {lo}..{hi}")));
            }
            if j > 0 && alt_hi[j - 1] != lo {
                return Err(Error::invalid(format!(
                    "shell {j} starts at {lo} km but shell {} ends at {} km",
                    j - 1,
                    alt_hi[j - 1]
                )));
            }
        }
        Ok(Self {
            alt_lo,
            alt_hi,
            earth_radius,
        })
    }

    pub fn n_shells(&self) -> usize {
        self.alt_lo.len()
    }

    pub fn earth_radius(&self) -> f64 {
        self.earth_radius
    }

    pub fn alt_lo(&self, j: usize) -> Result<f64> {
        self.check(j)?;
        Ok(self.alt_lo[j])
    }

    pub fn alt_hi(&self, j: usize) -> Result<f64> {
        self.check(j)?;
        Ok(self.alt_hi[j])
    }

    fn check(&self, j: usize) -> Result<()> {
        if j < self.n_shells() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                what: "shell",
                index: j,
                len: self.n_shells(),
            })
        }
    }

    pub fn midpoint_altitude(&self, j: usize) -> Result<f64> {
        self.check(j)?;
        Ok(0.5 * (self.alt_lo[j] + self.alt_hi[j]))
    }

    /// Volume of the spherical shell in km^3.
    pub fn volume(&self, j: usize) -> Result<f64> {
        self.check(j)?;
        let r_lo = self.earth_radius + self.alt_lo[j];
        let r_hi = self.earth_radius + self.alt_hi[j];
        Ok(4.0 / 3.0 * PI * (r_hi.powi(3) - r_lo.powi(3)))
    }

    /// Shell containing `altitude` (lower bound inclusive).
    pub fn shell_of_altitude(&self, altitude: f64) -> Option<usize> {
        (0..self.n_shells()).find(|&j| altitude >= self.alt_lo[j] && altitude < self.alt_hi[j])
    }

    /// Label of the form `800-850`.
    pub fn label(&self, j: usize) -> String {
        format!("{}-{}", self.alt_lo[j], self.alt_hi[j])
    }
}

macro_rules! name_enum {
    ($ty:ident { $($variant:ident => $name:literal $(| $alias:literal)*),+ $(,)? }) => {
        impl $ty {
            pub fn name(self) -> &'static str {
                match self { $($ty::$variant => $name),+ }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                let key = s.trim().to_ascii_lowercase();
                match key.as_str() {
                    $($name $(| $alias)* => Ok($ty::$variant),)+
                    _ => Err(Error::invalid(format!(
                        concat!("unknown ", stringify!($ty), " '{}'"), s
                    ))),
                }
            }
        }
    };
}

/// Satellite owner classes tracked by the debris model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorType {
    Commercial,
    CivilGovernment,
    Defense,
    Amateur,
    Constellation,
}

name_enum!(OperatorType {
    Commercial => "commercial",
    CivilGovernment => "civil" | "civil_government" | "civilgovernment",
    Defense => "defense" | "defence" | "military",
    Amateur => "amateur",
    Constellation => "constellation" | "large_constellation",
});

impl OperatorType {
    pub const COUNT: usize = 5;
    pub const ALL: [OperatorType; 5] = [
        OperatorType::Commercial,
        OperatorType::CivilGovernment,
        OperatorType::Defense,
        OperatorType::Amateur,
        OperatorType::Constellation,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn group(self) -> OperatorGroup {
        match self {
            OperatorType::Commercial => OperatorGroup::Commercial,
            OperatorType::CivilGovernment => OperatorGroup::Civil,
            OperatorType::Defense => OperatorGroup::Defense,
            OperatorType::Amateur | OperatorType::Constellation => OperatorGroup::Other,
        }
    }
}

/// Grouping used by the demand model: amateur and constellation operators
/// collapse into `Other`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorGroup {
    Commercial,
    Civil,
    Defense,
    Other,
}

name_enum!(OperatorGroup {
    Commercial => "commercial",
    Civil => "civil" | "civil_government" | "civilgovernment",
    Defense => "defense" | "defence" | "military",
    Other => "other",
});

impl OperatorGroup {
    pub const COUNT: usize = 4;
    pub const ALL: [OperatorGroup; 4] = [
        OperatorGroup::Commercial,
        OperatorGroup::Civil,
        OperatorGroup::Defense,
        OperatorGroup::Other,
    ];
    /// Groups with an estimated demand model.
    pub const MODELED: [OperatorGroup; 3] = [
        OperatorGroup::Commercial,
        OperatorGroup::Civil,
        OperatorGroup::Defense,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// The single debris-model operator type of a modeled group.
    pub fn operator(self) -> Option<OperatorType> {
        match self {
            OperatorGroup::Commercial => Some(OperatorType::Commercial),
            OperatorGroup::Civil => Some(OperatorType::CivilGovernment),
            OperatorGroup::Defense => Some(OperatorType::Defense),
            OperatorGroup::Other => None,
        }
    }

    pub fn members(self) -> &'static [OperatorType] {
        match self {
            OperatorGroup::Commercial => &[OperatorType::Commercial],
            OperatorGroup::Civil => &[OperatorType::CivilGovernment],
            OperatorGroup::Defense => &[OperatorType::Defense],
            OperatorGroup::Other => &[OperatorType::Amateur, OperatorType::Constellation],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DebrisType {
    /// Rocket bodies.
    Rb,
    /// Mission-related objects.
    Mro,
    /// Intact inactive payloads.
    Ip,
    /// Fragments and other debris.
    Cof,
}

name_enum!(DebrisType {
    Rb => "rb",
    Mro => "mro",
    Ip => "ip",
    Cof => "cof",
});

impl DebrisType {
    pub const COUNT: usize = 4;
    pub const ALL: [DebrisType; 4] = [DebrisType::Rb, DebrisType::Mro, DebrisType::Ip, DebrisType::Cof];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            DebrisType::Rb => "RB",
            DebrisType::Mro => "MRO",
            DebrisType::Ip => "IP",
            DebrisType::Cof => "COF",
        }
    }
}

/// One of the nine tracked object classes. Operators occupy indices 0..5,
/// debris 5..9.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Species {
    Operator(OperatorType),
    Debris(DebrisType),
}

impl Species {
    pub const COUNT: usize = OperatorType::COUNT + DebrisType::COUNT;

    pub fn all() -> impl Iterator<Item = Species> {
        OperatorType::ALL
            .into_iter()
            .map(Species::Operator)
            .chain(DebrisType::ALL.into_iter().map(Species::Debris))
    }

    pub fn index(self) -> usize {
        match self {
            Species::Operator(op) => op.index(),
            Species::Debris(d) => OperatorType::COUNT + d.index(),
        }
    }

    pub fn from_index(i: usize) -> Option<Species> {
        if i < OperatorType::COUNT {
            Some(Species::Operator(OperatorType::ALL[i]))
        } else {
            DebrisType::ALL
                .get(i - OperatorType::COUNT)
                .copied()
                .map(Species::Debris)
        }
    }

    pub fn is_operator(self) -> bool {
        matches!(self, Species::Operator(_))
    }

    pub fn name(self) -> &'static str {
        match self {
            Species::Operator(op) => op.name(),
            Species::Debris(d) => d.label(),
        }
    }
}

impl fmt::Display for Species {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Species {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if let Ok(d) = s.parse::<DebrisType>() {
            return Ok(Species::Debris(d));
        }
        s.parse::<OperatorType>()
            .map(Species::Operator)
            .map_err(|_| Error::invalid(format!("unknown species '{s}'")))
    }
}

/// Active satellites per (operator, shell) and debris per (debris type, shell).
/// Populations are continuous.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitalState {
    pub year: i32,
    pub satellites: Array2<f64>,
    pub debris: Array2<f64>,
}

impl OrbitalState {
    pub fn zeros(year: i32, n_shells: usize) -> Self {
        Self {
            year,
            satellites: Array2::zeros((OperatorType::COUNT, n_shells)),
            debris: Array2::zeros((DebrisType::COUNT, n_shells)),
        }
    }

    pub fn n_shells(&self) -> usize {
        self.satellites.ncols()
    }

    pub fn get(&self, species: Species, shell: usize) -> f64 {
        match species {
            Species::Operator(op) => self.satellites[[op.index(), shell]],
            Species::Debris(d) => self.debris[[d.index(), shell]],
        }
    }

    pub fn get_mut(&mut self, species: Species, shell: usize) -> &mut f64 {
        match species {
            Species::Operator(op) => &mut self.satellites[[op.index(), shell]],
            Species::Debris(d) => &mut self.debris[[d.index(), shell]],
        }
    }

    pub fn row(&self, species: Species) -> ArrayView1<'_, f64> {
        match species {
            Species::Operator(op) => self.satellites.row(op.index()),
            Species::Debris(d) => self.debris.row(d.index()),
        }
    }

    /// Populations of all nine species in one shell, species-indexed.
    pub fn shell_populations(&self, shell: usize) -> [f64; Species::COUNT] {
        let mut out = [0.0; Species::COUNT];
        for (i, slot) in out.iter_mut().enumerate().take(OperatorType::COUNT) {
            *slot = self.satellites[[i, shell]];
        }
        for k in 0..DebrisType::COUNT {
            out[OperatorType::COUNT + k] = self.debris[[k, shell]];
        }
        out
    }

    pub fn total_satellites(&self) -> f64 {
        self.satellites.sum()
    }

    pub fn total_debris(&self) -> f64 {
        self.debris.sum()
    }

    pub fn total_objects(&self) -> f64 {
        self.total_satellites() + self.total_debris()
    }

    /// Active satellites of a demand-model group in each shell.
    pub fn group_counts(&self, group: OperatorGroup) -> Array1<f64> {
        let mut out = Array1::zeros(self.n_shells());
        for op in group.members() {
            out += &self.satellites.row(op.index());
        }
        out
    }

    pub fn validate(&self, n_shells: usize) -> Result<()> {
        if self.satellites.dim() != (OperatorType::COUNT, n_shells) {
            return Err(Error::DimensionMismatch {
                what: "satellite matrix shells".into(),
                expected: n_shells,
                found: self.satellites.ncols(),
            });
        }
        if self.debris.dim() != (DebrisType::COUNT, n_shells) {
            return Err(Error::DimensionMismatch {
                what: "debris matrix shells".into(),
                expected: n_shells,
                found: self.debris.ncols(),
            });
        }
        for species in Species::all() {
            for (j, &v) in self.row(species).iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFinite(format!("{species} population in shell {j}")));
                }
                if v < 0.0 {
                    return Err(Error::invalid(format!(
                        "negative {species} population {v} in shell {j}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Satellites launched in one year per (operator, shell).
#[derive(Debug, Clone, PartialEq)]
pub struct LaunchAllocation {
    pub q: Array2<f64>,
}

impl LaunchAllocation {
    pub fn zeros(n_shells: usize) -> Self {
        Self {
            q: Array2::zeros((OperatorType::COUNT, n_shells)),
        }
    }

    pub fn n_shells(&self) -> usize {
        self.q.ncols()
    }

    pub fn total(&self) -> f64 {
        self.q.sum()
    }

    pub fn validate(&self, n_shells: usize) -> Result<()> {
        if self.q.dim() != (OperatorType::COUNT, n_shells) {
            return Err(Error::DimensionMismatch {
                what: "launch allocation shells".into(),
                expected: n_shells,
                found: self.q.ncols(),
            });
        }
        if let Some(((i, j), v)) = self
            .q
            .indexed_iter()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::invalid(format!(
                "launch count {v} for {} in shell {j}",
                OperatorType::ALL[i]
            )));
        }
        Ok(())
    }
}

/// Observed launches per year.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LaunchHistory {
    pub by_year: std::collections::BTreeMap<i32, LaunchAllocation>,
}

impl LaunchHistory {
    pub fn add(&mut self, year: i32, op: OperatorType, shell: usize, count: f64, n_shells: usize) -> Result<()> {
        if shell >= n_shells {
            return Err(Error::IndexOutOfRange {
                what: "shell",
                index: shell,
                len: n_shells,
            });
        }
        if !(count.is_finite() && count >= 0.0) {
            return Err(Error::invalid(format!("launch count {count} must be non-negative")));
        }
        let alloc = self
            .by_year
            .entry(year)
            .or_insert_with(|| LaunchAllocation::zeros(n_shells));
        alloc.q[[op.index(), shell]] += count;
        Ok(())
    }

    /// Launches of the given operators in `year`; zero when unrecorded.
    pub fn allocation(&self, year: i32, operators: &[OperatorType], n_shells: usize) -> LaunchAllocation {
        let mut out = LaunchAllocation::zeros(n_shells);
        if let Some(a) = self.by_year.get(&year) {
            for op in operators {
                out.q.row_mut(op.index()).assign(&a.q.row(op.index()));
            }
        }
        out
    }
}

/// Physical coefficients of the debris model.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalParams {
    /// Annual fraction of each debris type leaving shell `j` for `j - 1`.
    /// Active satellites hold station and do not decay.
    pub decay_rate: Array2<f64>,
    /// End-of-life rate per operator type, 1/years.
    pub eol_rate: [f64; OperatorType::COUNT],
    /// Fraction of end-of-life satellites performing post-mission disposal.
    pub pmd_rate: [f64; OperatorType::COUNT],
    /// Rocket bodies left per satellite launched.
    pub rb_per_launch: Array2<f64>,
    /// Mission-related objects released per satellite per year.
    pub mro_per_sat: Array2<f64>,
    /// Mission-related objects released per launch.
    pub mro_per_launch: Array2<f64>,
    pub mass_kg: [f64; Species::COUNT],
    pub radius_m: [f64; Species::COUNT],
    /// Intrinsic collision velocity, km/s.
    pub v_rel_km_s: f64,
    /// Multiplier on debris-debris collision rates.
    pub debris_debris_adjust: f64,
    /// Active satellites avoid every collision.
    pub sat_avoidance: bool,
    /// Disposal shell for compliant end-of-life satellites.
    pub pmd_target_shell: usize,
    /// Specific impact energy (J/g) at which a collision is catastrophic.
    pub catastrophic_threshold: f64,
    /// Smallest tracked fragment size, m.
    pub frag_min_size_m: f64,
    /// Euler sub-intervals per annual step.
    pub substeps: usize,
}

impl PhysicalParams {
    /// Defaults for the given grid: zero decay and zero creation terms,
    /// representative masses and radii, disposal into the 500-550 km shell
    /// (or the lowest shell if the grid does not contain 525 km).
    pub fn defaults(grid: &ShellGrid) -> Self {
        let n = grid.n_shells();
        // commercial, civil, defense, amateur, constellation, RB, MRO, IP, COF
        let mass_kg = [500.0, 1000.0, 1500.0, 5.0, 260.0, 1500.0, 10.0, 800.0, aluminium_sphere_mass(0.05)];
        let radius_m = [1.0, 1.5, 1.5, 0.15, 1.0, 1.5, 0.3, 1.2, 0.05];
        Self {
            decay_rate: Array2::zeros((DebrisType::COUNT, n)),
            eol_rate: [0.0; OperatorType::COUNT],
            pmd_rate: [0.0; OperatorType::COUNT],
            rb_per_launch: Array2::zeros((OperatorType::COUNT, n)),
            mro_per_sat: Array2::zeros((OperatorType::COUNT, n)),
            mro_per_launch: Array2::zeros((OperatorType::COUNT, n)),
            mass_kg,
            radius_m,
            v_rel_km_s: 10.0,
            debris_debris_adjust: 1e-4,
            sat_avoidance: true,
            pmd_target_shell: grid.shell_of_altitude(525.0).unwrap_or(0),
            catastrophic_threshold: 40.0,
            frag_min_size_m: 0.1,
            substeps: 12,
        }
    }

    pub fn decay(&self, debris: DebrisType, shell: usize) -> f64 {
        self.decay_rate[[debris.index(), shell]]
    }

    pub fn validate(&self, grid: &ShellGrid) -> Result<()> {
        let n = grid.n_shells();
        let check_dims = |what: &str, m: &Array2<f64>, rows: usize| -> Result<()> {
            if m.dim() != (rows, n) {
                return Err(Error::DimensionMismatch {
                    what: what.into(),
                    expected: rows * n,
                    found: m.len(),
                });
            }
            if m.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::invalid(format!("{what} must be finite and non-negative")));
            }
            Ok(())
        };
        check_dims("decay_rate", &self.decay_rate, DebrisType::COUNT)?;
        check_dims("rb_per_launch", &self.rb_per_launch, OperatorType::COUNT)?;
        check_dims("mro_per_sat", &self.mro_per_sat, OperatorType::COUNT)?;
        check_dims("mro_per_launch", &self.mro_per_launch, OperatorType::COUNT)?;
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !self.decay_rate.iter().all(|&d| unit(d)) {
            return Err(Error::invalid("decay rates must lie in [0, 1]"));
        }
        for op in OperatorType::ALL {
            let (eol, pmd) = (self.eol_rate[op.index()], self.pmd_rate[op.index()]);
            if !unit(eol) || !unit(pmd) {
                return Err(Error::invalid(format!(
                    "{op}: eol_rate {eol} and pmd_rate {pmd} must lie in [0, 1]"
                )));
            }
        }
        for s in Species::all() {
            let (m, r) = (self.mass_kg[s.index()], self.radius_m[s.index()]);
            if !(m.is_finite() && m > 0.0 && r.is_finite() && r > 0.0) {
                return Err(Error::invalid(format!("{s}: mass {m} and radius {r} must be positive")));
            }
        }
        if !(self.v_rel_km_s.is_finite() && self.v_rel_km_s > 0.0) {
            return Err(Error::invalid("v_rel must be positive"));
        }
        if !unit(self.debris_debris_adjust) {
            return Err(Error::invalid("debris_debris_adjust must lie in [0, 1]"));
        }
        if self.pmd_target_shell >= n {
            return Err(Error::IndexOutOfRange {
                what: "pmd target shell",
                index: self.pmd_target_shell,
                len: n,
            });
        }
        if !(self.catastrophic_threshold.is_finite() && self.catastrophic_threshold > 0.0) {
            return Err(Error::invalid("catastrophic threshold must be positive"));
        }
        if !(self.frag_min_size_m.is_finite() && self.frag_min_size_m > 0.0) {
            return Err(Error::invalid("minimum fragment size must be positive"));
        }
        if self.substeps == 0 {
            return Err(Error::invalid("substeps must be at least 1"));
        }
        Ok(())
    }
}

/// Mass of a solid aluminium sphere of the given radius (m), in kg.
pub fn aluminium_sphere_mass(radius_m: f64) -> f64 {
    2700.0 * 4.0 / 3.0 * PI * radius_m.powi(3)
}

/// Highest shell from which an object reenters within `horizon_years`,
/// accumulating residence times `1/decay` of the shell and every shell below.
pub fn compliant_disposal_shell(decay: ArrayView1<'_, f64>, horizon_years: f64) -> Option<usize> {
    let mut elapsed = 0.0;
    let mut best = None;
    for (j, &d) in decay.iter().enumerate() {
        if d <= 0.0 {
            break;
        }
        elapsed += 1.0 / d;
        if elapsed < horizon_years {
            best = Some(j);
        } else {
            break;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_layout() {
        let g = ShellGrid::default();
        assert_eq!(g.n_shells(), 24);
        assert_eq!(g.alt_lo(0).unwrap(), 100.0);
        assert_eq!(g.alt_hi(23).unwrap(), 1300.0);
        for j in 0..24 {
            assert_eq!(g.alt_hi(j).unwrap() - g.alt_lo(j).unwrap(), 50.0);
        }
    }

    #[test]
    fn midpoints() {
        let g = ShellGrid::default();
        assert_eq!(g.midpoint_altitude(14).unwrap(), 825.0);
        assert_eq!(g.midpoint_altitude(0).unwrap(), 125.0);
        assert_eq!(g.midpoint_altitude(8).unwrap(), 525.0);
        assert!(g.midpoint_altitude(24).is_err());
    }

    #[test]
    fn volume_of_800_850_shell() {
        let g = ShellGrid::default();
        let v = g.volume(14).unwrap();
        // Direct difference of cubes.
        let (r_hi, r_lo) = (6371.0_f64 + 850.0, 6371.0_f64 + 800.0);
        let oracle = 4.0 / 3.0 * PI * (r_hi * r_hi * r_hi - r_lo * r_lo * r_lo);
        assert!((v - oracle).abs() / oracle < 1e-12);
        assert!((v - 32_535_982_437.840_008).abs() / v < 1e-12);
        assert!(g.volume(99).is_err());
    }

    #[test]
    fn degenerate_shell_has_zero_volume() {
        let g = ShellGrid::from_bounds(vec![300.0], vec![300.0], EARTH_RADIUS_KM).unwrap();
        assert_eq!(g.volume(0).unwrap(), 0.0);
    }

    #[test]
    fn volume_increases_with_upper_bound() {
        let mut prev = 0.0;
        for hi in [510.0, 520.0, 550.0, 600.0, 900.0] {
            let g = ShellGrid::from_bounds(vec![500.0], vec![hi], EARTH_RADIUS_KM).unwrap();
            let v = g.volume(0).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn shell_volumes_sum_to_annulus() {
        let g = ShellGrid::default();
        let sum: f64 = (0..24).map(|j| g.volume(j).unwrap()).sum();
        let whole = ShellGrid::from_bounds(vec![100.0], vec![1300.0], EARTH_RADIUS_KM)
            .unwrap()
            .volume(0)
            .unwrap();
        assert!((sum - whole).abs() / whole < 1e-9);
    }

    #[test]
    fn grid_rejects_gaps() {
        assert!(ShellGrid::from_bounds(vec![100.0, 160.0], vec![150.0, 200.0], 6371.0).is_err());
        assert!(ShellGrid::from_bounds(vec![100.0], vec![90.0], 6371.0).is_err());
    }

    #[test]
    fn species_cardinalities_and_indices() {
        assert_eq!(OperatorType::ALL.len(), 5);
        assert_eq!(DebrisType::ALL.len(), 4);
        assert_eq!(Species::all().count(), 9);
        for (i, s) in Species::all().enumerate() {
            assert_eq!(s.index(), i);
            assert_eq!(Species::from_index(i), Some(s));
            assert_eq!(s.name().parse::<Species>().unwrap(), s);
        }
        assert_eq!(Species::from_index(9), None);
    }

    #[test]
    fn other_group_collapses_amateur_and_constellation() {
        assert_eq!(OperatorType::Amateur.group(), OperatorGroup::Other);
        assert_eq!(OperatorType::Constellation.group(), OperatorGroup::Other);
        let mut s = OrbitalState::zeros(2012, 24);
        s.satellites[[OperatorType::Amateur.index(), 3]] = 3.0;
        s.satellites[[OperatorType::Constellation.index(), 3]] = 2.0;
        assert_eq!(s.group_counts(OperatorGroup::Other)[3], 5.0);
    }

    #[test]
    fn state_validation_rejects_bad_entries() {
        let mut s = OrbitalState::zeros(2012, 24);
        assert!(s.validate(24).is_ok());
        s.debris[[2, 5]] = -1.0;
        assert!(s.validate(24).is_err());
        s.debris[[2, 5]] = f64::NAN;
        assert!(matches!(s.validate(24), Err(Error::NonFinite(_))));
        s.debris[[2, 5]] = 0.0;
        assert!(s.validate(23).is_err());
    }

    #[test]
    fn default_params_are_valid() {
        let g = ShellGrid::default();
        let p = PhysicalParams::defaults(&g);
        p.validate(&g).unwrap();
        assert_eq!(p.pmd_target_shell, 8);
        assert_eq!(g.label(8), "500-550");
    }

    #[test]
    fn disposal_shell_from_residence_times() {
        // Residence 2 years per shell: cumulative 2, 4, ..., 24 (j = 11), 26.
        let decay = Array1::from_elem(24, 0.5);
        assert_eq!(compliant_disposal_shell(decay.view(), 25.0), Some(11));
        let none = Array1::from_elem(24, 0.01);
        assert_eq!(compliant_disposal_shell(none.view(), 25.0), None);
    }
}
