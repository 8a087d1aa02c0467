//! The coupled annual loop.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::choice::{access_cost, choice_probabilities, price_index, Attribute, ChoiceModelParams, ShellCharacteristics};
use crate::count::{predict_launch_total, CountModelParams};
use crate::domain::{
    DebrisType, LaunchAllocation, LaunchHistory, OperatorGroup, OperatorType, OrbitalState, PhysicalParams, ShellGrid,
};
use crate::econ::{project_econ, EconSeries, PriceTable, ECON_CATEGORIES, INSURANCE_CATEGORY};
use crate::error::{Error, Result};
use crate::pib::{step_year, total_unadjusted_collision_rate};

use super::spec::{Event, ScenarioSpec};

/// Everything a run needs besides the scenario itself.
#[derive(Debug, Clone)]
pub struct ScenarioInputs {
    pub grid: ShellGrid,
    pub physical: PhysicalParams,
    /// Stocks at the end of the scenario's start year.
    pub initial: OrbitalState,
    pub choice_models: BTreeMap<OperatorGroup, ChoiceModelParams>,
    pub count_models: BTreeMap<OperatorGroup, CountModelParams>,
    pub econ: EconSeries,
    pub prices: PriceTable,
    pub launch_history: LaunchHistory,
    /// Per-shell energy (GJ/t) replacing the circular-orbit proxy.
    pub energy_table: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupOutcome {
    pub group: OperatorGroup,
    pub probabilities: Vec<f64>,
    pub price_index: f64,
    pub mean_collision_rate: f64,
    pub predicted_total: f64,
    /// Launch price before shell-specific shocks, million USD.
    pub launch_price_musd: f64,
    /// Effective launch price to each shell, million USD.
    pub shell_price_musd: Vec<f64>,
    pub access_cost: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct YearOutcome {
    pub year: i32,
    pub launches: LaunchAllocation,
    pub groups: Vec<GroupOutcome>,
    /// Unadjusted collision rate per shell in the state operators observed.
    pub collision_rates: Vec<f64>,
    pub pmd_rate: [f64; OperatorType::COUNT],
}

impl YearOutcome {
    pub fn group(&self, group: OperatorGroup) -> Option<&GroupOutcome> {
        self.groups.iter().find(|g| g.group == group)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub name: String,
    pub seed: u64,
    /// End-of-year stocks from the start year through the end year.
    pub states: Vec<OrbitalState>,
    /// Decisions and launches of every simulated year (start + 1 onwards).
    pub years: Vec<YearOutcome>,
}

impl Trajectory {
    pub fn state(&self, year: i32) -> Option<&OrbitalState> {
        self.states.iter().find(|s| s.year == year)
    }

    pub fn outcome(&self, year: i32) -> Option<&YearOutcome> {
        self.years.iter().find(|y| y.year == year)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.states.first().map_or(0, OrbitalState::n_shells);
        for w in self.states.windows(2) {
            if w[1].year != w[0].year + 1 {
                return Err(Error::invalid(format!("trajectory jumps from {} to {}", w[0].year, w[1].year)));
            }
        }
        for s in &self.states {
            s.validate(n)?;
        }
        for (y, s) in self.years.iter().zip(self.states.iter().skip(1)) {
            if y.year != s.year {
                return Err(Error::invalid(format!("outcome {} is paired with state {}", y.year, s.year)));
            }
            y.launches.validate(n)?;
        }
        Ok(())
    }
}

/// Per-shell payload counts and unadjusted collision rates; shared by every
/// operator group.
pub fn shell_attributes(
    state: &OrbitalState,
    params: &PhysicalParams,
    grid: &ShellGrid,
) -> Result<(Vec<[f64; Attribute::COUNT]>, Vec<f64>)> {
    let n = grid.n_shells();
    state.validate(n)?;
    let counts: Vec<_> = [
        OperatorGroup::Civil,
        OperatorGroup::Commercial,
        OperatorGroup::Defense,
        OperatorGroup::Other,
    ]
    .iter()
    .map(|g| state.group_counts(*g))
    .collect();
    let mut attributes = Vec::with_capacity(n);
    let mut rates = Vec::with_capacity(n);
    for j in 0..n {
        let rate = total_unadjusted_collision_rate(state, params, grid, j)?;
        rates.push(rate);
        attributes.push([counts[0][j], counts[1][j], counts[2][j], counts[3][j], rate]);
    }
    Ok((attributes, rates))
}

/// What each group observes: shared attributes plus its own access costs.
/// `prices` holds the per-shell launch price of every requested group.
pub fn build_shell_characteristics(
    state: &OrbitalState,
    groups: &[OperatorGroup],
    prices: &BTreeMap<OperatorGroup, Vec<f64>>,
    params: &PhysicalParams,
    grid: &ShellGrid,
    energy_table: Option<&[f64]>,
) -> Result<BTreeMap<OperatorGroup, ShellCharacteristics>> {
    let (attributes, _) = shell_attributes(state, params, grid)?;
    let mut out = BTreeMap::new();
    for &g in groups {
        let shell_prices = prices
            .get(&g)
            .ok_or_else(|| Error::invalid(format!("no launch price for {g}")))?;
        if shell_prices.len() != grid.n_shells() {
            return Err(Error::DimensionMismatch {
                what: format!("{g} shell prices"),
                expected: grid.n_shells(),
                found: shell_prices.len(),
            });
        }
        let access = shell_prices
            .iter()
            .enumerate()
            .map(|(j, p)| access_cost(*p, j, grid, energy_table))
            .collect::<Result<Vec<_>>>()?;
        out.insert(
            g,
            ShellCharacteristics {
                attributes: attributes.clone(),
                access_cost: access,
            },
        );
    }
    Ok(out)
}

/// Price index and mean collision rate entering each group's launch-total
/// model in `year`, computed from the stocks at the end of the previous
/// year and the observed launch prices.
pub fn first_stage_covariates(
    prev: &OrbitalState,
    year: i32,
    prices: &PriceTable,
    choice_models: &BTreeMap<OperatorGroup, ChoiceModelParams>,
    params: &PhysicalParams,
    grid: &ShellGrid,
    energy_table: Option<&[f64]>,
) -> Result<BTreeMap<OperatorGroup, (f64, f64)>> {
    let groups: Vec<OperatorGroup> = choice_models.keys().copied().collect();
    let shell_prices = groups
        .iter()
        .map(|g| Ok((*g, vec![prices.price(*g, year)?; grid.n_shells()])))
        .collect::<Result<BTreeMap<_, _>>>()?;
    let chars = build_shell_characteristics(prev, &groups, &shell_prices, params, grid, energy_table)?;
    let (_, rates) = shell_attributes(prev, params, grid)?;
    let mean_rate = rates.iter().sum::<f64>() / rates.len() as f64;
    groups
        .iter()
        .map(|g| Ok((*g, (price_index(&choice_models[g], &chars[g])?, mean_rate))))
        .collect()
}

/// Launch price of a group in a year after trend events.
fn launch_price(inputs: &ScenarioInputs, spec: &ScenarioSpec, group: OperatorGroup, year: i32) -> Result<f64> {
    let mut price = inputs.prices.price(group, year)?;
    for e in &spec.events {
        if let Event::CostTrend { after_year, rate } = e {
            if year > *after_year {
                price *= (1.0 + rate).powi(year - after_year);
            }
        }
    }
    Ok(price)
}

fn shell_prices(spec: &ScenarioSpec, grid: &ShellGrid, group: OperatorGroup, year: i32, base: f64) -> Result<Vec<f64>> {
    let mut out = vec![base; grid.n_shells()];
    for e in &spec.events {
        if let Event::CostShock {
            start_year,
            below_altitude_km,
            multiplier,
            operators,
        } = e
        {
            if year >= *start_year && operators.contains(&group) {
                for (j, p) in out.iter_mut().enumerate() {
                    if grid.alt_hi(j)? <= *below_altitude_km {
                        *p *= multiplier;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Disposal compliance per operator type in `year`.
pub fn pmd_schedule(base: &[f64; OperatorType::COUNT], spec: &ScenarioSpec, year: i32) -> [f64; OperatorType::COUNT] {
    let mut rates = *base;
    for e in &spec.events {
        if let Event::PmdRamp {
            start_year,
            end_year,
            target,
            operators,
        } = e
        {
            for op in operators {
                let from = rates[op.index()];
                rates[op.index()] = if year >= *end_year {
                    *target
                } else if year <= *start_year {
                    from
                } else {
                    from + (target - from) * f64::from(year - start_year) / f64::from(end_year - start_year)
                };
            }
        }
    }
    rates
}

fn projected_econ(inputs: &ScenarioInputs, spec: &ScenarioSpec) -> Result<EconSeries> {
    let Some((growth, include_insurance)) = spec.econ_projection() else {
        return Ok(inputs.econ.clone());
    };
    let mut econ = inputs.econ.clone();
    for cat in ECON_CATEGORIES {
        let Some(last) = econ.last_year(cat) else { continue };
        let rate = if cat == INSURANCE_CATEGORY && !include_insurance {
            0.0
        } else {
            growth
        };
        econ = project_econ(&econ, Some(&[cat]), last, spec.end_year, rate)?;
    }
    Ok(econ)
}

pub fn run_scenario(inputs: &ScenarioInputs, spec: &ScenarioSpec) -> Result<Trajectory> {
    spec.validate()?;
    let grid = &inputs.grid;
    let n = grid.n_shells();
    inputs.physical.validate(grid)?;
    inputs.initial.validate(n)?;
    if inputs.initial.year != spec.start_year {
        return Err(Error::invalid(format!(
            "initial state is dated {} but the scenario starts in {}",
            inputs.initial.year, spec.start_year
        )));
    }
    let groups: Vec<OperatorGroup> = OperatorGroup::MODELED
        .into_iter()
        .filter(|g| inputs.choice_models.contains_key(g) || inputs.count_models.contains_key(g))
        .collect();
    for g in &groups {
        let cm = inputs
            .choice_models
            .get(g)
            .ok_or_else(|| Error::invalid(format!("{g} has a count model but no choice model")))?;
        if !inputs.count_models.contains_key(g) {
            return Err(Error::invalid(format!("{g} has a choice model but no count model")));
        }
        cm.validate()?;
        if cm.n_shells() != n {
            return Err(Error::DimensionMismatch {
                what: format!("{g} choice model shells"),
                expected: n,
                found: cm.n_shells(),
            });
        }
    }
    // Fragment shells are resolved up front so bad altitudes fail early.
    let mut fragments: BTreeMap<i32, Vec<(usize, f64)>> = BTreeMap::new();
    for e in &spec.events {
        if let Event::Fragmentation { year, fragments: adds } = e {
            for a in adds {
                let j = grid.shell_of_altitude(a.altitude_km).ok_or_else(|| {
                    Error::invalid(format!("fragment altitude {} km lies outside the shell grid", a.altitude_km))
                })?;
                fragments.entry(*year).or_default().push((j, a.count));
            }
        }
    }
    let econ = projected_econ(inputs, spec)?;
    let other = spec.other_schedule();
    let energy = inputs.energy_table.as_deref();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut states = vec![inputs.initial.clone()];
    let mut years = Vec::new();
    for year in spec.start_year + 1..=spec.end_year {
        let prev = states.last().expect("initial state present");
        let mut params = inputs.physical.clone();
        params.pmd_rate = pmd_schedule(&inputs.physical.pmd_rate, spec, year);

        let mut base_prices = BTreeMap::new();
        let mut prices = BTreeMap::new();
        for &g in &groups {
            let base = launch_price(inputs, spec, g, year)?;
            base_prices.insert(g, base);
            prices.insert(g, shell_prices(spec, grid, g, year, base)?);
        }
        let chars = build_shell_characteristics(prev, &groups, &prices, &params, grid, energy)?;
        let collision_rates: Vec<f64> = chars
            .values()
            .next()
            .map(|c| c.attributes.iter().map(|a| a[Attribute::COUNT - 1]).collect())
            .unwrap_or_else(|| vec![0.0; n]);
        let mean_rate = collision_rates.iter().sum::<f64>() / n as f64;
        let econ_row = econ.row(year, &ECON_CATEGORIES)?;

        let mut alloc = inputs.launch_history.allocation(
            other.source_year(year),
            &[OperatorType::Amateur, OperatorType::Constellation],
            n,
        );
        let mut outcomes = Vec::with_capacity(groups.len());
        for &g in &groups {
            let c = &chars[&g];
            let cm = &inputs.choice_models[&g];
            let p = choice_probabilities(cm, c)?;
            let pi = price_index(cm, c)?;
            let z: Vec<f64> = std::iter::once(1.0)
                .chain(econ_row.iter().copied())
                .chain([pi, mean_rate])
                .collect();
            let total = predict_launch_total(&inputs.count_models[&g], &z, spec.prediction, &mut rng)
                .map_err(|e| Error::invalid(format!("{g} launch total in {year}: {e}")))?;
            let op = g.operator().expect("modeled groups map to one operator type");
            for (j, pj) in p.iter().enumerate() {
                alloc.q[[op.index(), j]] = total * pj;
            }
            outcomes.push(GroupOutcome {
                group: g,
                probabilities: p,
                price_index: pi,
                mean_collision_rate: mean_rate,
                predicted_total: total,
                launch_price_musd: base_prices[&g],
                shell_price_musd: prices[&g].clone(),
                access_cost: c.access_cost.clone(),
            });
        }

        let (mut next, _) = step_year(prev, &alloc, &params, grid)?;
        if let Some(adds) = fragments.get(&year) {
            for &(j, count) in adds {
                next.debris[[DebrisType::Cof.index(), j]] += count;
            }
        }
        years.push(YearOutcome {
            year,
            launches: alloc,
            groups: outcomes,
            collision_rates,
            pmd_rate: params.pmd_rate,
        });
        states.push(next);
    }
    Ok(Trajectory {
        name: spec.name.clone(),
        seed: spec.seed,
        states,
        years,
    })
}

/// Independent runs spread over the available cores; results keep the
/// order of `specs`.
pub fn run_scenarios(inputs: &ScenarioInputs, specs: &[ScenarioSpec]) -> Vec<Result<Trajectory>> {
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(specs.len().max(1));
    let chunk = specs.len().div_ceil(workers).max(1);
    std::thread::scope(|scope| {
        let handles: Vec<_> = specs
            .chunks(chunk)
            .map(|part| scope.spawn(move || part.iter().map(|s| run_scenario(inputs, s)).collect::<Vec<_>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("scenario worker panicked"))
            .collect()
    })
}
