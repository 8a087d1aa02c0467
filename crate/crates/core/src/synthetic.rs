//! A seeded synthetic world: stocks, launches, prices, economic series and
//! the choice and count observations they imply, generated by known models.
//! Real stock and revenue data are licensed, so tests and examples run on
//! this instead.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Normal, Poisson};

use crate::choice::{choice_probabilities, price_index, Attribute, ChoiceModelParams, ChoiceOccasion};
use crate::count::{CountModelParams, CountObservation, COUNT_COVARIATES};
use crate::domain::{
    DebrisType, LaunchAllocation, LaunchHistory, OperatorGroup, OperatorType, OrbitalState, PhysicalParams, ShellGrid,
};
use crate::econ::{
    impute_prices_group_mean, project_econ, EconSeries, PriceRecord, PriceTable, ECON_CATEGORIES,
};
use crate::error::{Error, Result};
use crate::io;
use crate::pib::step_year;
use crate::scenario::{build_shell_characteristics, shell_attributes};

/// Coefficients on civil, commercial, defense and other payloads and the
/// collision rate, followed by the access-cost coefficient.
pub fn reference_coefficients(group: OperatorGroup) -> Option<([f64; Attribute::COUNT], f64)> {
    match group {
        OperatorGroup::Commercial => Some(([-0.006, 0.015, -0.021, -0.001, -0.003], -0.017)),
        OperatorGroup::Civil => Some(([0.017, 0.016, 0.003, 0.011, -0.013], -0.019)),
        OperatorGroup::Defense => Some(([0.065, 0.014, 0.011, 0.053, -0.052], -0.022)),
        OperatorGroup::Other => None,
    }
}

/// Years spent in a shell with midpoint `altitude_km` before decaying one
/// shell down.
pub fn residence_time(altitude_km: f64) -> f64 {
    7.7 * ((altitude_km - 525.0) / 70.0).exp()
}

/// Residence-time multipliers by debris type: light fragments and
/// mission-related objects decay faster than intact bodies.
const DECAY_FACTOR: [f64; DebrisType::COUNT] = [1.2, 0.7, 1.0, 0.5];

pub fn synthetic_physical_params(grid: &ShellGrid) -> Result<PhysicalParams> {
    let mut p = PhysicalParams::defaults(grid);
    for d in DebrisType::ALL {
        for j in 0..grid.n_shells() {
            let tau = residence_time(grid.midpoint_altitude(j)?) * DECAY_FACTOR[d.index()];
            p.decay_rate[[d.index(), j]] = (1.0 / tau).min(1.0);
        }
    }
    p.eol_rate = [0.1, 0.1, 0.1, 0.33, 0.2];
    p.pmd_rate = [0.3, 0.2, 0.2, 0.1, 0.9];
    p.rb_per_launch.fill(0.05);
    p.mro_per_launch.fill(0.1);
    p.validate(grid)?;
    Ok(p)
}

#[derive(Debug, Clone)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub first_year: i32,
    pub last_year: i32,
    /// Mean choice occasions per year for commercial, civil and defense.
    pub occasions_per_year: [f64; 3],
    /// Launch events per year for commercial, civil and defense, used for
    /// the price records.
    pub launch_events_per_year: [usize; 3],
    /// Share of launch events with an observed price.
    pub observed_price_share: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            seed: 20_220_101,
            first_year: 2006,
            last_year: 2020,
            occasions_per_year: [41.0, 55.0, 28.0],
            launch_events_per_year: [12, 25, 10],
            observed_price_share: 0.15,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticWorld {
    pub grid: ShellGrid,
    pub physical: PhysicalParams,
    /// End-of-year stocks, first year through last.
    pub states: BTreeMap<i32, OrbitalState>,
    pub launch_history: LaunchHistory,
    pub price_records: Vec<PriceRecord>,
    pub prices: PriceTable,
    pub econ: EconSeries,
    pub occasions: Vec<ChoiceOccasion>,
    pub count_observations: Vec<CountObservation>,
    pub choice_models: BTreeMap<OperatorGroup, ChoiceModelParams>,
    pub count_models: BTreeMap<OperatorGroup, CountModelParams>,
}

/// Altitude profile: Gaussian bumps `(centre km, width km, weight)`.
fn profile(grid: &ShellGrid, bumps: &[(f64, f64, f64)]) -> Result<Vec<f64>> {
    (0..grid.n_shells())
        .map(|j| {
            let h = grid.midpoint_altitude(j)?;
            Ok(bumps
                .iter()
                .map(|(c, w, a)| a * (-((h - c) / w).powi(2)).exp())
                .sum())
        })
        .collect()
}

fn spread(total: f64, weights: &[f64]) -> Vec<f64> {
    let sum: f64 = weights.iter().sum();
    weights.iter().map(|w| (total * w / sum).round()).collect()
}

fn initial_state(grid: &ShellGrid, year: i32) -> Result<OrbitalState> {
    let n = grid.n_shells();
    let mut s = OrbitalState::zeros(year, n);
    let sats: [(f64, &[(f64, f64, f64)]); OperatorType::COUNT] = [
        (180.0, &[(775.0, 60.0, 1.0), (550.0, 60.0, 0.6)]),
        (230.0, &[(675.0, 120.0, 1.0), (850.0, 80.0, 0.5)]),
        (130.0, &[(500.0, 80.0, 1.0), (800.0, 60.0, 0.5)]),
        (40.0, &[(600.0, 80.0, 1.0)]),
        (120.0, &[(775.0, 30.0, 1.0), (825.0, 30.0, 0.5)]),
    ];
    for (op, (total, bumps)) in OperatorType::ALL.iter().zip(sats) {
        let counts = spread(total, &profile(grid, bumps)?);
        s.satellites.row_mut(op.index()).assign(&ndarray::Array1::from(counts));
    }
    let debris: [(f64, &[(f64, f64, f64)]); DebrisType::COUNT] = [
        (800.0, &[(900.0, 200.0, 1.0)]),
        (600.0, &[(800.0, 200.0, 1.0)]),
        (1400.0, &[(800.0, 180.0, 1.0)]),
        (7500.0, &[(850.0, 150.0, 1.0), (600.0, 100.0, 0.2)]),
    ];
    for (d, (total, bumps)) in DebrisType::ALL.iter().zip(debris) {
        let counts = spread(total, &profile(grid, bumps)?);
        s.debris.row_mut(d.index()).assign(&ndarray::Array1::from(counts));
    }
    Ok(s)
}

/// Shell constants of the generating choice models; the most attractive
/// shell is the reference and carries zero.
fn true_choice_model(grid: &ShellGrid, group: OperatorGroup) -> Result<ChoiceModelParams> {
    let (beta, gamma) = reference_coefficients(group).ok_or_else(|| Error::invalid("no model for other"))?;
    let bumps: &[(f64, f64, f64)] = match group {
        OperatorGroup::Commercial => &[(550.0, 90.0, 6.0), (775.0, 60.0, 4.5)],
        OperatorGroup::Civil => &[(625.0, 150.0, 5.5)],
        _ => &[(475.0, 100.0, 5.0), (700.0, 70.0, 2.0)],
    };
    let mut asc = profile(grid, bumps)?;
    let reference = asc
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(j, _)| j)
        .unwrap_or(0);
    let pivot = asc[reference];
    asc.iter_mut().for_each(|a| *a -= pivot);
    let params = ChoiceModelParams {
        asc,
        beta,
        gamma,
        reference_shell: reference,
        asc_penalty: 0.0,
    };
    params.validate()?;
    Ok(params)
}

fn econ_series(cfg: &SyntheticConfig, rng: &mut ChaCha8Rng) -> Result<EconSeries> {
    // (start, end) levels; billion USD.
    let paths: [(f64, f64); 10] = [
        (0.46, 0.98),
        (1.21, 2.61),
        (3.41, 6.82),
        (55.4, 97.8),
        (15.1, 24.97),
        (2.1, 8.02),
        (1.27, 3.69),
        (61.7, 210.9),
        (39.3, 64.7),
        (17.96, 40.93),
    ];
    let noise = Normal::new(0.0, 0.03).expect("valid sd");
    let mut econ = EconSeries::new();
    let observed_last = cfg.last_year - 1;
    let span = f64::from((observed_last - cfg.first_year).max(1));
    for (cat, (a, b)) in ECON_CATEGORIES.iter().zip(paths) {
        for year in cfg.first_year..=observed_last {
            let t = f64::from(year - cfg.first_year) / span;
            let v = a * (b / a).powf(t) * (1.0 + noise.sample(rng));
            econ.insert(cat, year, v)?;
        }
    }
    // The final year is imputed from the previous one at 15% growth.
    project_econ(&econ, None, observed_last, cfg.last_year, 0.15)
}

fn price_path(group: OperatorGroup, year: i32, first: i32, last: i32) -> f64 {
    let t = f64::from(year - first) / f64::from((last - first).max(1));
    match group {
        OperatorGroup::Commercial => 82.0 * (14.0_f64 / 82.0).powf(t),
        OperatorGroup::Civil => 16.0 + 5.0 * (6.0 * t).sin(),
        OperatorGroup::Defense => 17.0 + 4.0 * (4.0 * t + 1.0).sin(),
        OperatorGroup::Other => 10.0,
    }
}

fn price_records(cfg: &SyntheticConfig, rng: &mut ChaCha8Rng) -> Vec<PriceRecord> {
    let vehicles: [&[&str]; 3] = [
        &["Falcon 9", "Soyuz-2", "Electron", "Ariane 5"],
        &["PSLV", "Long March 2D", "Soyuz-2", "H-IIA"],
        &["Atlas V", "Minotaur IV", "Long March 4C"],
    ];
    let noise = Normal::new(0.0, 0.15).expect("valid sd");
    let mut out = Vec::new();
    for year in cfg.first_year..=cfg.last_year {
        for (gi, g) in OperatorGroup::MODELED.iter().enumerate() {
            for k in 0..cfg.launch_events_per_year[gi] {
                let base = price_path(*g, year, cfg.first_year, cfg.last_year);
                let observed = k == 0 || rng.random::<f64>() < cfg.observed_price_share;
                let vehicle = vehicles[gi][rng.random_range(0..vehicles[gi].len())];
                let shock: f64 = noise.sample(rng);
                let price = (base * shock.exp() * 1000.0).round() / 1000.0;
                out.push(PriceRecord {
                    event_id: format!("{year}-{}-{:03}", g.name(), k + 1),
                    year,
                    operator: *g,
                    vehicle: vehicle.to_string(),
                    price_musd: observed.then_some(price),
                });
            }
        }
    }
    out
}

/// Launches of the amateur and constellation operators: steady amateur
/// traffic plus constellation deployment campaigns.
fn other_launches(grid: &ShellGrid, year: i32, rng: &mut ChaCha8Rng) -> Result<LaunchAllocation> {
    let n = grid.n_shells();
    let mut q = LaunchAllocation::zeros(n);
    let amateur = Poisson::new(6.0 + 0.5 * f64::from((year - 2006).max(0))).expect("positive mean");
    let weights = profile(grid, &[(550.0, 60.0, 1.0)])?;
    let pick = WeightedIndex::new(&weights).map_err(|e| Error::invalid(e.to_string()))?;
    for _ in 0..amateur.sample(rng) as usize {
        q.q[[OperatorType::Amateur.index(), pick.sample(rng)]] += 1.0;
    }
    let c = OperatorType::Constellation.index();
    let campaigns: &[(i32, f64, f64)] = &[
        (2008, 775.0, 6.0),
        (2014, 775.0, 11.0),
        (2017, 775.0, 40.0),
        (2018, 775.0, 35.0),
        (2019, 775.0, 10.0),
        (2019, 525.0, 60.0),
        (2020, 525.0, 180.0),
    ];
    for &(y, alt, count) in campaigns {
        if y == year {
            let j = grid.shell_of_altitude(alt).expect("campaign altitude inside the grid");
            q.q[[c, j]] += count;
        }
    }
    Ok(q)
}

fn count_truth(group: OperatorGroup, intercept: f64) -> CountModelParams {
    // insurance, launch, manufacturing, dth, comms, radio, eo, infra, us, non-us, price index, collision
    let slopes: [f64; 12] = match group {
        OperatorGroup::Commercial => [-0.2, 0.05, 0.03, 0.0, 0.0, 0.0, 0.02, 0.0, 0.0, 0.005, 0.005, -0.5],
        OperatorGroup::Civil => [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.01, 0.0005, 0.001, 0.006, 0.005, -0.5],
        _ => [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.004, 0.003, 0.005, -0.5],
    };
    CountModelParams::from_raw(std::iter::once(intercept).chain(slopes).collect(), 0.0)
}

pub fn generate(cfg: &SyntheticConfig) -> Result<SyntheticWorld> {
    if cfg.last_year <= cfg.first_year + 1 {
        return Err(Error::invalid("synthetic world needs at least three years"));
    }
    let grid = ShellGrid::default();
    let n = grid.n_shells();
    let physical = synthetic_physical_params(&grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let econ = econ_series(cfg, &mut rng)?;
    let price_records = price_records(cfg, &mut rng);
    let prices = PriceTable::from_imputed(&impute_prices_group_mean(&price_records)?);

    let mut choice_models = BTreeMap::new();
    for g in OperatorGroup::MODELED {
        choice_models.insert(g, true_choice_model(&grid, g)?);
    }

    let initial = initial_state(&grid, cfg.first_year)?;
    let prices_for = |year: i32| -> Result<BTreeMap<OperatorGroup, Vec<f64>>> {
        OperatorGroup::MODELED
            .iter()
            .map(|g| Ok((*g, vec![prices.price(*g, year)?; n])))
            .collect()
    };

    // Intercepts hit the target occasion counts at average covariates and
    // the initial environment.
    let chars0 = build_shell_characteristics(&initial, &OperatorGroup::MODELED, &prices_for(cfg.first_year + 1)?, &physical, &grid, None)?;
    let (_, rates0) = shell_attributes(&initial, &physical, &grid)?;
    let mean_rate0 = rates0.iter().sum::<f64>() / n as f64;
    let mut count_models = BTreeMap::new();
    for (gi, g) in OperatorGroup::MODELED.iter().enumerate() {
        let slopes = count_truth(*g, 0.0);
        let mut z = Vec::with_capacity(COUNT_COVARIATES.len());
        for cat in ECON_CATEGORIES {
            let s = econ.series(cat).expect("generated category");
            z.push(s.values().sum::<f64>() / s.len() as f64);
        }
        z.push(price_index(&choice_models[g], &chars0[g])?);
        z.push(mean_rate0);
        let eta: f64 = z.iter().zip(&slopes.omega[1..]).map(|(a, b)| a * b).sum();
        count_models.insert(*g, count_truth(*g, cfg.occasions_per_year[gi].ln() - eta));
    }

    let mut states = BTreeMap::new();
    states.insert(cfg.first_year, initial);
    let mut history = LaunchHistory::default();
    let mut occasions = Vec::new();
    let mut count_observations = Vec::new();
    for year in cfg.first_year + 1..=cfg.last_year {
        let prev = &states[&(year - 1)];
        let chars = build_shell_characteristics(prev, &OperatorGroup::MODELED, &prices_for(year)?, &physical, &grid, None)?;
        let (_, rates) = shell_attributes(prev, &physical, &grid)?;
        let mean_rate = rates.iter().sum::<f64>() / n as f64;
        let econ_row = econ.row(year, &ECON_CATEGORIES)?;
        let mut alloc = other_launches(&grid, year, &mut rng)?;
        for g in OperatorGroup::MODELED {
            let cm = &choice_models[&g];
            let table = Arc::new(chars[&g].clone());
            let p = choice_probabilities(cm, &table)?;
            let pi = price_index(cm, &table)?;
            let covariates: Vec<f64> = econ_row.iter().copied().chain([pi, mean_rate]).collect();
            let z: Vec<f64> = std::iter::once(1.0).chain(covariates.iter().copied()).collect();
            let mean = crate::count::poisson_mean(&count_models[&g], &z)?;
            let total = Poisson::new(mean)
                .map_err(|e| Error::invalid(format!("{g} {year}: {e}")))?
                .sample(&mut rng) as usize;
            let pick = WeightedIndex::new(&p).map_err(|e| Error::invalid(e.to_string()))?;
            let op = g.operator().expect("modeled group").index();
            for _ in 0..total {
                let j = pick.sample(&mut rng);
                alloc.q[[op, j]] += 1.0;
                occasions.push(ChoiceOccasion {
                    group: g,
                    year,
                    chosen: j,
                    chars: Arc::clone(&table),
                });
            }
            count_observations.push(CountObservation {
                group: g,
                year,
                launches: total as f64,
                covariates,
            });
        }
        for op in OperatorType::ALL {
            for j in 0..n {
                let v = alloc.q[[op.index(), j]];
                if v > 0.0 {
                    history.add(year, op, j, v, n)?;
                }
            }
        }
        let (next, _) = step_year(prev, &alloc, &physical, &grid)?;
        states.insert(year, next);
    }

    Ok(SyntheticWorld {
        grid,
        physical,
        states,
        launch_history: history,
        price_records,
        prices,
        econ,
        occasions,
        count_observations,
        choice_models,
        count_models,
    })
}

/// Files written by [`write_world`], relative to its output directory.
pub const WORLD_FILES: [&str; 8] = [
    "orbital_state.csv",
    "params_physical.csv",
    "params_operator.csv",
    "choice_occasions.csv",
    "count_observations.csv",
    "econ_series.csv",
    "launch_prices.csv",
    "launch_history.csv",
];

/// Write the observable data plus the generating models under
/// `true_models/`.
pub fn write_world(world: &SyntheticWorld, dir: &Path) -> Result<()> {
    let f = |i: usize| dir.join(WORLD_FILES[i]);
    io::write_orbital_states(&f(0), world.states.values())?;
    io::write_physical_params(&f(1), &world.physical)?;
    io::write_operator_params(&f(2), &world.physical)?;
    io::write_choice_occasions(&f(3), &world.occasions)?;
    io::write_count_observations(&f(4), &world.count_observations)?;
    io::write_econ_series(&f(5), &world.econ)?;
    io::write_launch_prices(&f(6), &world.price_records)?;
    io::write_launch_history(&f(7), &world.launch_history)?;
    let truth = dir.join("true_models");
    for (g, m) in &world.choice_models {
        io::write_choice_model(
            &truth.join(format!("choice_{}.json", g.name())),
            &io::ChoiceModelFile::from_params(*g, m),
        )?;
    }
    for (g, m) in &world.count_models {
        io::write_count_model(
            &truth.join(format!("count_{}.json", g.name())),
            &io::CountModelFile::from_params(*g, m),
        )?;
    }
    Ok(())
}
