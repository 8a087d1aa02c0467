use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::Arc;

use crate::choice::{Attribute, ChoiceOccasion, ShellCharacteristics};
use crate::count::{CountObservation, COUNT_COVARIATES};
use crate::domain::{LaunchHistory, OperatorGroup, OperatorType, OrbitalState, ShellGrid, Species};
use crate::econ::{EconSeries, ImputedPrice, PriceRecord};
use crate::error::{Error, Result};

use super::{csv_err, line, num, reader, writer, Columns};

const STATE_COLUMNS: [&str; 4] = ["year", "species", "shell_id", "count"];

/// All years in an `orbital_state.csv` file.
pub fn load_orbital_states(path: &Path, grid: &ShellGrid) -> Result<BTreeMap<i32, OrbitalState>> {
    let n = grid.n_shells();
    let mut rdr = reader(path)?;
    let cols = Columns::new(path, &mut rdr, &STATE_COLUMNS, &[])?;
    let mut states: BTreeMap<i32, OrbitalState> = BTreeMap::new();
    let mut seen: HashMap<(i32, Species, usize), usize> = HashMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err(path))?;
        let year: i32 = cols.parse(&rec, "year")?;
        let species: Species = cols.parse(&rec, "species")?;
        let shell = cols.shell(&rec, "shell_id", n)?;
        let count = cols.number(&rec, "count", Some(0.0))?;
        if let Some(first) = seen.insert((year, species, shell), line(&rec)) {
            return Err(cols.error(
                &rec,
                format!("duplicate {species} row for shell {shell} in {year} (first on line {first})"),
            ));
        }
        let state = states.entry(year).or_insert_with(|| OrbitalState::zeros(year, n));
        *state.get_mut(species, shell) = count;
    }
    Ok(states)
}

/// The stocks of one year; a file without rows for that year gives an empty
/// state.
pub fn load_orbital_state(path: &Path, grid: &ShellGrid, year: i32) -> Result<OrbitalState> {
    let mut states = load_orbital_states(path, grid)?;
    Ok(states
        .remove(&year)
        .unwrap_or_else(|| OrbitalState::zeros(year, grid.n_shells())))
}

pub fn write_orbital_states<'a>(path: &Path, states: impl IntoIterator<Item = &'a OrbitalState>) -> Result<()> {
    let mut w = writer(path)?;
    let err = csv_err(path);
    w.write_record(STATE_COLUMNS).map_err(&err)?;
    for s in states {
        for species in Species::all() {
            for (j, v) in s.row(species).iter().enumerate() {
                w.write_record([s.year.to_string(), species.name().to_string(), j.to_string(), num(*v)])
                    .map_err(&err)?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

const OCCASION_COLUMNS: [&str; 11] = [
    "occasion_id",
    "operator",
    "year",
    "chosen_shell",
    "shell_id",
    "civil_payloads",
    "commercial_payloads",
    "defense_payloads",
    "other_payloads",
    "collision_rate",
    "access_cost",
];

struct PartialOccasion {
    group: OperatorGroup,
    year: i32,
    chosen: usize,
    first_line: usize,
    rows: Vec<Option<([f64; Attribute::COUNT], f64)>>,
}

/// Long-format choice data, one row per occasion and shell. Occasions of
/// the same operator and year with identical shell data share one
/// characteristics table.
pub fn load_choice_occasions(path: &Path, n_shells: usize) -> Result<Vec<ChoiceOccasion>> {
    let mut rdr = reader(path)?;
    let cols = Columns::new(path, &mut rdr, &OCCASION_COLUMNS, &[])?;
    let mut order: Vec<String> = Vec::new();
    let mut partial: HashMap<String, PartialOccasion> = HashMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err(path))?;
        let id = cols.raw(&rec, "occasion_id")?.to_string();
        let group: OperatorGroup = cols.parse(&rec, "operator")?;
        let year: i32 = cols.parse(&rec, "year")?;
        let chosen = cols.shell(&rec, "chosen_shell", n_shells)?;
        let shell = cols.shell(&rec, "shell_id", n_shells)?;
        let mut x = [0.0; Attribute::COUNT];
        for (slot, name) in x.iter_mut().zip(&OCCASION_COLUMNS[5..10]) {
            *slot = cols.number(&rec, name, Some(0.0))?;
        }
        let ac = cols.number(&rec, "access_cost", Some(0.0))?;
        let entry = partial.entry(id.clone()).or_insert_with(|| {
            order.push(id.clone());
            PartialOccasion {
                group,
                year,
                chosen,
                first_line: line(&rec),
                rows: vec![None; n_shells],
            }
        });
        if (entry.group, entry.year, entry.chosen) != (group, year, chosen) {
            return Err(cols.error(&rec, format!("occasion {id} disagrees with its row on line {}", entry.first_line)));
        }
        if entry.rows[shell].replace((x, ac)).is_some() {
            return Err(cols.error(&rec, format!("occasion {id} repeats shell {shell}")));
        }
    }
    let mut shared: HashMap<(OperatorGroup, i32), Vec<Arc<ShellCharacteristics>>> = HashMap::new();
    let mut out = Vec::with_capacity(order.len());
    for id in order {
        let p = partial.remove(&id).expect("recorded id");
        let mut attributes = Vec::with_capacity(n_shells);
        let mut access_cost = Vec::with_capacity(n_shells);
        for (j, row) in p.rows.into_iter().enumerate() {
            let (x, ac) = row.ok_or_else(|| {
                Error::parse(path, p.first_line, format!("occasion {id} has no row for shell {j}"))
            })?;
            attributes.push(x);
            access_cost.push(ac);
        }
        let chars = ShellCharacteristics {
            attributes,
            access_cost,
        };
        let pool = shared.entry((p.group, p.year)).or_default();
        let arc = match pool.iter().find(|c| ***c == chars) {
            Some(c) => Arc::clone(c),
            None => {
                let c = Arc::new(chars);
                pool.push(Arc::clone(&c));
                c
            }
        };
        out.push(ChoiceOccasion {
            group: p.group,
            year: p.year,
            chosen: p.chosen,
            chars: arc,
        });
    }
    Ok(out)
}

pub fn write_choice_occasions(path: &Path, occasions: &[ChoiceOccasion]) -> Result<()> {
    let mut w = writer(path)?;
    let err = csv_err(path);
    w.write_record(OCCASION_COLUMNS).map_err(&err)?;
    for (i, occ) in occasions.iter().enumerate() {
        let id = (i + 1).to_string();
        for (j, (x, ac)) in occ.chars.attributes.iter().zip(&occ.chars.access_cost).enumerate() {
            let mut row = vec![
                id.clone(),
                occ.group.name().to_string(),
                occ.year.to_string(),
                occ.chosen.to_string(),
                j.to_string(),
            ];
            row.extend(x.iter().map(|v| num(*v)));
            row.push(num(*ac));
            w.write_record(&row).map_err(&err)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_count_observations(path: &Path) -> Result<Vec<CountObservation>> {
    let mut rdr = reader(path)?;
    let mut required = vec!["operator", "year", "launches"];
    required.extend(COUNT_COVARIATES);
    let cols = Columns::new(path, &mut rdr, &required, &[])?;
    let mut out = Vec::new();
    let mut seen = HashMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err(path))?;
        let group: OperatorGroup = cols.parse(&rec, "operator")?;
        let year: i32 = cols.parse(&rec, "year")?;
        if seen.insert((group, year), ()).is_some() {
            return Err(cols.error(&rec, format!("duplicate {group} observation for {year}")));
        }
        let launches = cols.number(&rec, "launches", Some(0.0))?;
        let covariates = COUNT_COVARIATES
            .iter()
            .map(|c| cols.number(&rec, c, None))
            .collect::<Result<Vec<_>>>()?;
        out.push(CountObservation {
            group,
            year,
            launches,
            covariates,
        });
    }
    Ok(out)
}

pub fn write_count_observations(path: &Path, observations: &[CountObservation]) -> Result<()> {
    let mut w = writer(path)?;
    let err = csv_err(path);
    let mut header = vec!["operator", "year", "launches"];
    header.extend(COUNT_COVARIATES);
    w.write_record(&header).map_err(&err)?;
    for o in observations {
        if o.covariates.len() != COUNT_COVARIATES.len() {
            return Err(Error::DimensionMismatch {
                what: format!("{} {} covariates", o.group, o.year),
                expected: COUNT_COVARIATES.len(),
                found: o.covariates.len(),
            });
        }
        let mut row = vec![o.group.name().to_string(), o.year.to_string(), num(o.launches)];
        row.extend(o.covariates.iter().map(|v| num(*v)));
        w.write_record(&row).map_err(&err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_econ_series(path: &Path) -> Result<EconSeries> {
    let mut rdr = reader(path)?;
    let cols = Columns::new(path, &mut rdr, &["year", "category", "value"], &[])?;
    let mut series = EconSeries::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err(path))?;
        let year: i32 = cols.parse(&rec, "year")?;
        let category = cols.raw(&rec, "category")?;
        let value = cols.number(&rec, "value", None)?;
        if series.get(category, year).is_some() {
            return Err(cols.error(&rec, format!("duplicate {category} value for {year}")));
        }
        series
            .insert(category, year, value)
            .map_err(|e| cols.error(&rec, e.to_string()))?;
    }
    series.validate().map_err(|e| Error::parse(path, 0, e.to_string()))?;
    Ok(series)
}

pub fn write_econ_series(path: &Path, series: &EconSeries) -> Result<()> {
    let mut w = writer(path)?;
    let err = csv_err(path);
    w.write_record(["year", "category", "value"]).map_err(&err)?;
    let cats: Vec<&str> = series.categories().collect();
    let mut rows: Vec<(i32, &str, f64)> = Vec::new();
    for c in cats {
        for (y, v) in series.series(c).into_iter().flatten() {
            rows.push((*y, c, *v));
        }
    }
    rows.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    for (y, c, v) in rows {
        w.write_record([y.to_string(), c.to_string(), num(v)]).map_err(&err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

const PRICE_COLUMNS: [&str; 5] = ["event_id", "year", "operator", "vehicle", "price_musd"];

pub fn load_launch_prices(path: &Path) -> Result<Vec<PriceRecord>> {
    let mut rdr = reader(path)?;
    let cols = Columns::new(path, &mut rdr, &PRICE_COLUMNS, &["source"])?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err(path))?;
        let price_musd = if cols.raw(&rec, "price_musd")?.is_empty() {
            None
        } else {
            let p = cols.number(&rec, "price_musd", None)?;
            if p <= 0.0 {
                return Err(cols.error(&rec, format!("price {p} must be positive")));
            }
            Some(p)
        };
        out.push(PriceRecord {
            event_id: cols.raw(&rec, "event_id")?.to_string(),
            year: cols.parse(&rec, "year")?,
            operator: cols.parse(&rec, "operator")?,
            vehicle: cols.raw(&rec, "vehicle")?.to_string(),
            price_musd,
        });
    }
    Ok(out)
}

pub fn write_launch_prices(path: &Path, records: &[PriceRecord]) -> Result<()> {
    let mut w = writer(path)?;
    let err = csv_err(path);
    w.write_record(PRICE_COLUMNS).map_err(&err)?;
    for r in records {
        w.write_record([
            r.event_id.clone(),
            r.year.to_string(),
            r.operator.name().to_string(),
            r.vehicle.clone(),
            r.price_musd.map(num).unwrap_or_default(),
        ])
        .map_err(&err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Completed price table with the imputation source of every row.
pub fn write_imputed_prices(path: &Path, records: &[ImputedPrice]) -> Result<()> {
    let mut w = writer(path)?;
    let err = csv_err(path);
    let mut header = PRICE_COLUMNS.to_vec();
    header.push("source");
    w.write_record(&header).map_err(&err)?;
    for r in records {
        w.write_record([
            r.event_id.clone(),
            r.year.to_string(),
            r.operator.name().to_string(),
            r.vehicle.clone(),
            num(r.price_musd),
            r.source.name().to_string(),
        ])
        .map_err(&err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

const HISTORY_COLUMNS: [&str; 4] = ["year", "operator", "shell_id", "count"];

pub fn load_launch_history(path: &Path, n_shells: usize) -> Result<LaunchHistory> {
    let mut rdr = reader(path)?;
    let cols = Columns::new(path, &mut rdr, &HISTORY_COLUMNS, &[])?;
    let mut history = LaunchHistory::default();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err(path))?;
        let year: i32 = cols.parse(&rec, "year")?;
        let op: OperatorType = cols.parse(&rec, "operator")?;
        let shell = cols.shell(&rec, "shell_id", n_shells)?;
        let count = cols.number(&rec, "count", Some(0.0))?;
        history
            .add(year, op, shell, count, n_shells)
            .map_err(|e| cols.error(&rec, e.to_string()))?;
    }
    Ok(history)
}

/// Non-zero entries only.
pub fn write_launch_history(path: &Path, history: &LaunchHistory) -> Result<()> {
    let mut w = writer(path)?;
    let err = csv_err(path);
    w.write_record(HISTORY_COLUMNS).map_err(&err)?;
    for (year, alloc) in &history.by_year {
        for op in OperatorType::ALL {
            for (j, v) in alloc.q.row(op.index()).iter().enumerate() {
                if *v != 0.0 {
                    w.write_record([year.to_string(), op.name().to_string(), j.to_string(), num(*v)])
                        .map_err(&err)?;
                }
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Per-shell orbit energy (GJ/t) with one row per shell.
pub fn load_energy_table(path: &Path, n_shells: usize) -> Result<Vec<f64>> {
    let mut rdr = reader(path)?;
    let cols = Columns::new(path, &mut rdr, &["shell_id", "energy_gj_per_t"], &[])?;
    let mut table = vec![None; n_shells];
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err(path))?;
        let j = cols.shell(&rec, "shell_id", n_shells)?;
        let e = cols.number(&rec, "energy_gj_per_t", None)?;
        if e <= 0.0 {
            return Err(cols.error(&rec, "energy must be positive"));
        }
        if table[j].replace(e).is_some() {
            return Err(cols.error(&rec, format!("duplicate row for shell {j}")));
        }
    }
    table
        .iter()
        .enumerate()
        .map(|(j, e)| e.ok_or_else(|| Error::parse(path, 0, format!("no energy for shell {j}"))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DebrisType;
    use std::fs;

    fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn empty_state_file_gives_zero_state() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "s.csv", "year,species,shell_id,count\n");
        let s = load_orbital_state(&p, &ShellGrid::default(), 2012).unwrap();
        assert_eq!(s.total_objects(), 0.0);
        assert_eq!(s.year, 2012);
    }

    #[test]
    fn negative_count_names_the_row() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "s.csv", "year,species,shell_id,count\n2012,RB,3,4\n2012,COF,3,-1\n");
        match load_orbital_states(&p, &ShellGrid::default()).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn state_rows_are_validated() {
        let dir = tempfile::tempdir().unwrap();
        let g = ShellGrid::default();
        for body in [
            "2012,RB,3,4\n2012,RB,3,5\n",
            "2012,XX,3,4\n",
            "2012,RB,24,4\n",
            "2012,RB,2,NaN\n",
        ] {
            let p = write(&dir, "s.csv", &format!("year,species,shell_id,count\n{body}"));
            assert!(load_orbital_states(&p, &g).is_err(), "{body}");
        }
        let p = write(&dir, "s.csv", "year,species,count\n");
        assert!(load_orbital_states(&p, &g).is_err());
    }

    #[test]
    fn state_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = ShellGrid::default();
        let mut s = OrbitalState::zeros(2013, 24);
        *s.get_mut(Species::Debris(DebrisType::Cof), 14) = 1.0 / 3.0;
        *s.get_mut(Species::Operator(OperatorType::Amateur), 2) = 7.0;
        let p = dir.path().join("out/state.csv");
        write_orbital_states(&p, [&s]).unwrap();
        assert_eq!(load_orbital_state(&p, &g, 2013).unwrap(), s);
    }

    #[test]
    fn occasions_round_trip_and_share_tables() {
        let dir = tempfile::tempdir().unwrap();
        let chars = Arc::new(ShellCharacteristics {
            attributes: vec![[1.0, 2.0, 3.0, 4.0, 0.1], [0.0, 0.5, 0.0, 1.0, 0.2]],
            access_cost: vec![1000.5, 1100.25],
        });
        let occ = |chosen| ChoiceOccasion {
            group: OperatorGroup::Civil,
            year: 2010,
            chosen,
            chars: Arc::clone(&chars),
        };
        let p = dir.path().join("occ.csv");
        write_choice_occasions(&p, &[occ(0), occ(1), occ(1)]).unwrap();
        let back = load_choice_occasions(&p, 2).unwrap();
        assert_eq!(back.len(), 3);
        assert_eq!(*back[0].chars, *chars);
        assert!(Arc::ptr_eq(&back[0].chars, &back[2].chars));
        assert_eq!(back.iter().map(|o| o.chosen).collect::<Vec<_>>(), [0, 1, 1]);
    }

    #[test]
    fn incomplete_occasion_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let header = OCCASION_COLUMNS.join(",");
        let p = write(&dir, "o.csv", &format!("{header}\n1,civil,2010,0,0,1,1,1,1,0,10\n"));
        assert!(load_choice_occasions(&p, 2).is_err());
        let p = write(&dir, "o.csv", &format!("{header}\n"));
        assert!(load_choice_occasions(&p, 2).unwrap().is_empty());
    }

    #[test]
    fn count_observation_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let obs = vec![CountObservation {
            group: OperatorGroup::Defense,
            year: 2011,
            launches: 33.0,
            covariates: (0..12).map(|k| 0.1 * k as f64 + 1e-17).collect(),
        }];
        let p = dir.path().join("c.csv");
        write_count_observations(&p, &obs).unwrap();
        assert_eq!(load_count_observations(&p).unwrap(), obs);
    }

    #[test]
    fn econ_round_trip_and_gap_check() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = EconSeries::new();
        s.insert("infrastructure", 2010, 61.713).unwrap();
        s.insert("infrastructure", 2011, 70.0).unwrap();
        s.insert("satellite_radio", 2010, 2.1).unwrap();
        let p = dir.path().join("e.csv");
        write_econ_series(&p, &s).unwrap();
        assert_eq!(load_econ_series(&p).unwrap(), s);
        let p = write(&dir, "g.csv", "year,category,value\n2010,x,1\n2012,x,1\n");
        assert!(load_econ_series(&p).is_err());
        let p = write(&dir, "n.csv", "year,category,value\n2010,x,0\n");
        assert!(load_econ_series(&p).is_err());
    }

    #[test]
    fn prices_keep_missing_entries() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "p.csv",
            "event_id,year,operator,vehicle,price_musd\nL1,2010,commercial,Falcon 9,62\nL2,2010,civil,PSLV,\n",
        );
        let recs = load_launch_prices(&p).unwrap();
        assert_eq!(recs[0].price_musd, Some(62.0));
        assert_eq!(recs[1].price_musd, None);
        let q = dir.path().join("q.csv");
        write_launch_prices(&q, &recs).unwrap();
        assert_eq!(load_launch_prices(&q).unwrap(), recs);
        let bad = write(&dir, "b.csv", "event_id,year,operator,vehicle,price_musd\nL1,2010,civil,x,-3\n");
        assert!(load_launch_prices(&bad).is_err());
    }

    #[test]
    fn history_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut h = LaunchHistory::default();
        h.add(2015, OperatorType::Amateur, 9, 12.0, 24).unwrap();
        h.add(2016, OperatorType::Commercial, 20, 3.0, 24).unwrap();
        let p = dir.path().join("h.csv");
        write_launch_history(&p, &h).unwrap();
        assert_eq!(load_launch_history(&p, 24).unwrap(), h);
    }

    #[test]
    fn energy_table_needs_every_shell() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "e.csv", "shell_id,energy_gj_per_t\n0,30\n1,31.5\n");
        assert_eq!(load_energy_table(&p, 2).unwrap(), vec![30.0, 31.5]);
        assert!(load_energy_table(&p, 3).is_err());
        let p = write(&dir, "e.csv", "shell_id,energy_gj_per_t\n0,30\n0,31.5\n");
        assert!(load_energy_table(&p, 2).is_err());
    }
}
