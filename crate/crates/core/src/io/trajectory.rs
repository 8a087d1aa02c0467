use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::domain::{OperatorGroup, OperatorType, OrbitalState, ShellGrid, Species};
use crate::error::{Error, Result};
use crate::scenario::{Trajectory, TrajectoryDelta};

use super::{csv_err, num, reader, write_json, write_orbital_states, writer, Columns};

pub const TRAJECTORY_FILES: [&str; 5] = [
    "trajectory_stocks.csv",
    "trajectory_choice.csv",
    "summary.json",
    "price_log.csv",
    "compliance_log.csv",
];

#[derive(Serialize)]
struct YearSummary {
    year: i32,
    total_satellites: f64,
    total_debris: f64,
    stocks: BTreeMap<&'static str, f64>,
    launches: BTreeMap<&'static str, f64>,
    predicted_totals: BTreeMap<&'static str, f64>,
    price_index: BTreeMap<&'static str, f64>,
    mean_collision_rate: Option<f64>,
}

#[derive(Serialize)]
struct Summary<'a> {
    name: &'a str,
    seed: u64,
    start_year: Option<i32>,
    end_year: Option<i32>,
    years: Vec<YearSummary>,
}

/// Write the stock, choice, price and compliance tables plus the yearly
/// summary into `dir`.
pub fn write_trajectory(traj: &Trajectory, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_orbital_states(&dir.join(TRAJECTORY_FILES[0]), &traj.states)?;

    let path = dir.join(TRAJECTORY_FILES[1]);
    let mut w = writer(&path)?;
    let err = csv_err(&path);
    w.write_record(["year", "operator", "shell_id", "probability", "launches"])
        .map_err(&err)?;
    for y in &traj.years {
        for g in &y.groups {
            let op = g.group.operator().expect("modeled group").index();
            for (j, p) in g.probabilities.iter().enumerate() {
                w.write_record([
                    y.year.to_string(),
                    g.group.name().to_string(),
                    j.to_string(),
                    num(*p),
                    num(y.launches.q[[op, j]]),
                ])
                .map_err(&err)?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let path = dir.join(TRAJECTORY_FILES[3]);
    let mut w = writer(&path)?;
    let err = csv_err(&path);
    w.write_record(["year", "operator", "shell_id", "launch_price_musd", "shell_price_musd", "access_cost"])
        .map_err(&err)?;
    for y in &traj.years {
        for g in &y.groups {
            for (j, (p, ac)) in g.shell_price_musd.iter().zip(&g.access_cost).enumerate() {
                w.write_record([
                    y.year.to_string(),
                    g.group.name().to_string(),
                    j.to_string(),
                    num(g.launch_price_musd),
                    num(*p),
                    num(*ac),
                ])
                .map_err(&err)?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let path = dir.join(TRAJECTORY_FILES[4]);
    let mut w = writer(&path)?;
    let err = csv_err(&path);
    w.write_record(["year", "operator", "pmd_rate"]).map_err(&err)?;
    for y in &traj.years {
        for op in OperatorType::ALL {
            w.write_record([y.year.to_string(), op.name().to_string(), num(y.pmd_rate[op.index()])])
                .map_err(&err)?;
        }
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let years = traj
        .states
        .iter()
        .map(|s| {
            let outcome = traj.outcome(s.year);
            let mut launches = BTreeMap::new();
            let mut predicted_totals = BTreeMap::new();
            let mut price_index = BTreeMap::new();
            if let Some(o) = outcome {
                for g in OperatorGroup::ALL {
                    let total: f64 = g.members().iter().map(|op| o.launches.q.row(op.index()).sum()).sum();
                    launches.insert(g.name(), total);
                }
                for g in &o.groups {
                    predicted_totals.insert(g.group.name(), g.predicted_total);
                    price_index.insert(g.group.name(), g.price_index);
                }
            }
            YearSummary {
                year: s.year,
                total_satellites: s.total_satellites(),
                total_debris: s.total_debris(),
                stocks: Species::all().map(|sp| (sp.name(), s.row(sp).sum())).collect(),
                launches,
                predicted_totals,
                price_index,
                mean_collision_rate: outcome.map(|o| o.collision_rates.iter().sum::<f64>() / o.collision_rates.len() as f64),
            }
        })
        .collect();
    write_json(
        &dir.join(TRAJECTORY_FILES[2]),
        &Summary {
            name: &traj.name,
            seed: traj.seed,
            start_year: traj.states.first().map(|s| s.year),
            end_year: traj.states.last().map(|s| s.year),
            years,
        },
    )
}

pub fn read_trajectory_stocks(path: &Path, grid: &ShellGrid) -> Result<Vec<OrbitalState>> {
    Ok(super::load_orbital_states(path, grid)?.into_values().collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChoiceRow {
    pub year: i32,
    pub group: OperatorGroup,
    pub shell: usize,
    pub probability: f64,
    pub launches: f64,
}

pub fn read_trajectory_choice(path: &Path, n_shells: usize) -> Result<Vec<ChoiceRow>> {
    let mut rdr = reader(path)?;
    let cols = Columns::new(path, &mut rdr, &["year", "operator", "shell_id", "probability", "launches"], &[])?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err(path))?;
        out.push(ChoiceRow {
            year: cols.parse(&rec, "year")?,
            group: cols.parse(&rec, "operator")?,
            shell: cols.shell(&rec, "shell_id", n_shells)?,
            probability: cols.number(&rec, "probability", Some(0.0))?,
            launches: cols.number(&rec, "launches", Some(0.0))?,
        });
    }
    Ok(out)
}

/// Counterfactual-minus-baseline tables.
pub fn write_delta(delta: &TrajectoryDelta, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join("delta_stocks.csv");
    let mut w = writer(&path)?;
    let err = csv_err(&path);
    w.write_record(["year", "species", "shell_id", "delta"]).map_err(&err)?;
    for s in &delta.stocks {
        for (i, row) in s.delta.rows().into_iter().enumerate() {
            let species = Species::from_index(i).expect("species index");
            for (j, v) in row.iter().enumerate() {
                w.write_record([s.year.to_string(), species.name().to_string(), j.to_string(), num(*v)])
                    .map_err(&err)?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let path = dir.join("delta_choice.csv");
    let mut w = writer(&path)?;
    let err = csv_err(&path);
    w.write_record(["year", "operator", "shell_id", "delta_probability", "delta_launches"])
        .map_err(&err)?;
    for c in &delta.choices {
        for (j, (p, l)) in c.probability.iter().zip(&c.launches).enumerate() {
            w.write_record([c.year.to_string(), c.group.name().to_string(), j.to_string(), num(*p), num(*l)])
                .map_err(&err)?;
        }
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let path = dir.join("delta_summary.csv");
    let mut w = writer(&path)?;
    let err = csv_err(&path);
    w.write_record(["year", "operator", "cut_altitude_km", "mass_below", "mass_above"])
        .map_err(&err)?;
    for c in &delta.choices {
        w.write_record([
            c.year.to_string(),
            c.group.name().to_string(),
            num(delta.cut_altitude_km),
            num(c.mass_below),
            num(c.mass_above),
        ])
        .map_err(&err)?;
    }
    w.flush().map_err(|e| Error::io(&path, e))
}
