//! Back-casting: project from an observed state with observed covariates and
//! compare against what actually happened.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::domain::{LaunchHistory, OrbitalState, Species};
use crate::error::{Error, Result};

use super::engine::{run_scenario, ScenarioInputs, Trajectory};
use super::spec::ScenarioSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregateSeries {
    Launches,
    SatelliteStock,
    DebrisStock,
}

impl AggregateSeries {
    pub const ALL: [AggregateSeries; 3] = [Self::Launches, Self::SatelliteStock, Self::DebrisStock];

    pub fn name(self) -> &'static str {
        match self {
            Self::Launches => "launches",
            Self::SatelliteStock => "satellite_stock",
            Self::DebrisStock => "debris_stock",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StockRow {
    pub year: i32,
    pub species: Species,
    pub shell: usize,
    pub projected: f64,
    pub observed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub year: i32,
    pub series: AggregateSeries,
    pub projected: f64,
    pub observed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesMetrics {
    pub series: AggregateSeries,
    pub mean_abs_error: f64,
    pub rmse: f64,
    pub mean_abs_pct_error: f64,
    /// Change from first to last year.
    pub projected_change: f64,
    pub observed_change: f64,
    pub same_direction: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub stocks: Vec<StockRow>,
    pub aggregates: Vec<AggregateRow>,
    pub metrics: Vec<SeriesMetrics>,
}

/// Yearly totals: launches come from the year's allocation, stocks from the
/// end-of-year state. Launch totals start one year after the first state.
pub fn aggregate_series(
    states: &BTreeMap<i32, OrbitalState>,
    launches: &BTreeMap<i32, f64>,
) -> BTreeMap<(AggregateSeries, i32), f64> {
    let mut out = BTreeMap::new();
    for (y, s) in states {
        out.insert((AggregateSeries::SatelliteStock, *y), s.total_satellites());
        out.insert((AggregateSeries::DebrisStock, *y), s.total_debris());
    }
    for (y, n) in launches {
        out.insert((AggregateSeries::Launches, *y), *n);
    }
    out
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Compare two sets of yearly stocks and launch totals over the years they
/// share.
pub fn compare_series(
    projected_states: &BTreeMap<i32, OrbitalState>,
    projected_launches: &BTreeMap<i32, f64>,
    observed_states: &BTreeMap<i32, OrbitalState>,
    observed_launches: &BTreeMap<i32, f64>,
) -> Result<ValidationReport> {
    let mut stocks = Vec::new();
    for (y, p) in projected_states {
        let o = observed_states
            .get(y)
            .ok_or_else(|| Error::invalid(format!("no observed state for {y}")))?;
        if o.n_shells() != p.n_shells() {
            return Err(Error::DimensionMismatch {
                what: format!("observed state {y} shells"),
                expected: p.n_shells(),
                found: o.n_shells(),
            });
        }
        for sp in Species::all() {
            for j in 0..p.n_shells() {
                stocks.push(StockRow {
                    year: *y,
                    species: sp,
                    shell: j,
                    projected: p.get(sp, j),
                    observed: o.get(sp, j),
                });
            }
        }
    }

    let proj = aggregate_series(projected_states, projected_launches);
    let obs = aggregate_series(observed_states, observed_launches);
    let aggregates: Vec<AggregateRow> = proj
        .iter()
        .filter_map(|(key, p)| {
            obs.get(key).map(|o| AggregateRow {
                year: key.1,
                series: key.0,
                projected: *p,
                observed: *o,
            })
        })
        .collect();

    let metrics = AggregateSeries::ALL
        .iter()
        .filter_map(|s| {
            let rows: Vec<_> = aggregates.iter().filter(|r| r.series == *s).collect();
            let (first, last) = (rows.first()?, rows.last()?);
            let n = rows.len() as f64;
            let mae = rows.iter().map(|r| (r.projected - r.observed).abs()).sum::<f64>() / n;
            let rmse = (rows.iter().map(|r| (r.projected - r.observed).powi(2)).sum::<f64>() / n).sqrt();
            let pct: Vec<f64> = rows
                .iter()
                .filter(|r| r.observed != 0.0)
                .map(|r| ((r.projected - r.observed) / r.observed).abs())
                .collect();
            let mape = if pct.is_empty() {
                0.0
            } else {
                pct.iter().sum::<f64>() / pct.len() as f64
            };
            let projected_change = last.projected - first.projected;
            let observed_change = last.observed - first.observed;
            Some(SeriesMetrics {
                series: *s,
                mean_abs_error: mae,
                rmse,
                mean_abs_pct_error: mape,
                projected_change,
                observed_change,
                same_direction: sign(projected_change) == sign(observed_change),
            })
        })
        .collect();

    Ok(ValidationReport {
        stocks,
        aggregates,
        metrics,
    })
}

pub fn trajectory_launch_totals(traj: &Trajectory) -> BTreeMap<i32, f64> {
    traj.years.iter().map(|y| (y.year, y.launches.total())).collect()
}

pub fn history_launch_totals(history: &LaunchHistory, from: i32, to: i32) -> BTreeMap<i32, f64> {
    history
        .by_year
        .range(from..=to)
        .map(|(y, a)| (*y, a.total()))
        .collect()
}

/// Project from the observed state in `spec.start_year` and compare every
/// year through `spec.end_year` with the observations.
pub fn run_validation(
    inputs: &ScenarioInputs,
    spec: &ScenarioSpec,
    observed: &BTreeMap<i32, OrbitalState>,
) -> Result<(Trajectory, ValidationReport)> {
    for y in spec.start_year..=spec.end_year {
        if !observed.contains_key(&y) {
            return Err(Error::invalid(format!("observed stocks missing for {y}")));
        }
    }
    let traj = run_scenario(inputs, spec)?;
    let projected: BTreeMap<i32, OrbitalState> = traj.states.iter().map(|s| (s.year, s.clone())).collect();
    let observed_window: BTreeMap<i32, OrbitalState> = observed
        .range(spec.start_year..=spec.end_year)
        .map(|(y, s)| (*y, s.clone()))
        .collect();
    let report = compare_series(
        &projected,
        &trajectory_launch_totals(&traj),
        &observed_window,
        &history_launch_totals(&inputs.launch_history, spec.start_year + 1, spec.end_year),
    )?;
    Ok((traj, report))
}
