use std::collections::HashSet;
use std::path::Path;

use crate::domain::{OperatorType, PhysicalParams, ShellGrid, Species};
use crate::error::{Error, Result};

use super::{csv_err, num, reader, writer, Columns};

const PHYSICAL_COLUMNS: [&str; 5] = ["species", "shell_id", "decay_rate", "mass_kg", "radius_m"];
const OPERATOR_COLUMNS: [&str; 3] = ["operator", "eol_rate", "pmd_rate"];
const OPERATOR_OPTIONAL: [&str; 3] = ["rb_per_launch", "mro_per_launch", "mro_per_sat"];

/// Overlay the parameter files on `base`. Mass and radius must agree across
/// the rows of a species. Decay rates given for satellite species are
/// ignored because active satellites hold station.
pub fn load_physical_params(
    physical: &Path,
    operator: &Path,
    grid: &ShellGrid,
    base: PhysicalParams,
) -> Result<PhysicalParams> {
    let n = grid.n_shells();
    let mut params = base;
    let mut rdr = reader(physical)?;
    let cols = Columns::new(physical, &mut rdr, &PHYSICAL_COLUMNS, &[])?;
    let mut sized: [Option<(f64, f64)>; Species::COUNT] = [None; Species::COUNT];
    let mut seen = HashSet::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err(physical))?;
        let species: Species = cols.parse(&rec, "species")?;
        let shell = cols.shell(&rec, "shell_id", n)?;
        if !seen.insert((species, shell)) {
            return Err(cols.error(&rec, format!("duplicate row for {species} in shell {shell}")));
        }
        let decay = cols.number(&rec, "decay_rate", Some(0.0))?;
        if decay > 1.0 {
            return Err(cols.error(&rec, format!("decay_rate {decay} exceeds 1")));
        }
        let mass = cols.number(&rec, "mass_kg", None)?;
        let radius = cols.number(&rec, "radius_m", None)?;
        if mass <= 0.0 || radius <= 0.0 {
            return Err(cols.error(&rec, "mass_kg and radius_m must be positive"));
        }
        match sized[species.index()] {
            Some(prev) if prev != (mass, radius) => {
                return Err(cols.error(&rec, format!("{species} mass/radius differ from an earlier row")));
            }
            _ => sized[species.index()] = Some((mass, radius)),
        }
        if let Species::Debris(d) = species {
            params.decay_rate[[d.index(), shell]] = decay;
        }
    }
    for (i, s) in sized.iter().enumerate() {
        if let Some((m, r)) = s {
            params.mass_kg[i] = *m;
            params.radius_m[i] = *r;
        }
    }

    let mut rdr = reader(operator)?;
    let cols = Columns::new(operator, &mut rdr, &OPERATOR_COLUMNS, &OPERATOR_OPTIONAL)?;
    let mut seen = HashSet::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err(operator))?;
        let op: OperatorType = cols.parse(&rec, "operator")?;
        if !seen.insert(op) {
            return Err(cols.error(&rec, format!("duplicate row for {op}")));
        }
        let i = op.index();
        for (name, slot) in [("eol_rate", &mut params.eol_rate[i]), ("pmd_rate", &mut params.pmd_rate[i])] {
            let v = cols.number(&rec, name, Some(0.0))?;
            if v > 1.0 {
                return Err(cols.error(&rec, format!("{name} {v} exceeds 1")));
            }
            *slot = v;
        }
        for name in OPERATOR_OPTIONAL {
            if cols.has(name) {
                let v = cols.number(&rec, name, Some(0.0))?;
                let target = match name {
                    "rb_per_launch" => &mut params.rb_per_launch,
                    "mro_per_launch" => &mut params.mro_per_launch,
                    _ => &mut params.mro_per_sat,
                };
                target.row_mut(i).fill(v);
            }
        }
    }
    params
        .validate(grid)
        .map_err(|e| Error::parse(physical, 0, e.to_string()))?;
    Ok(params)
}

/// Decay per species and shell; satellite rows carry zero decay.
pub fn write_physical_params(path: &Path, params: &PhysicalParams) -> Result<()> {
    let mut w = writer(path)?;
    let err = csv_err(path);
    w.write_record(PHYSICAL_COLUMNS).map_err(&err)?;
    let n = params.decay_rate.ncols();
    for s in Species::all() {
        for j in 0..n {
            let decay = match s {
                Species::Debris(d) => params.decay(d, j),
                Species::Operator(_) => 0.0,
            };
            w.write_record([
                s.name().to_string(),
                j.to_string(),
                num(decay),
                num(params.mass_kg[s.index()]),
                num(params.radius_m[s.index()]),
            ])
            .map_err(&err)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Per-operator rates. Launch debris coefficients are written from shell 0
/// and must be uniform across shells.
pub fn write_operator_params(path: &Path, params: &PhysicalParams) -> Result<()> {
    let mut w = writer(path)?;
    let err = csv_err(path);
    let mut header = OPERATOR_COLUMNS.to_vec();
    header.extend(OPERATOR_OPTIONAL);
    w.write_record(&header).map_err(&err)?;
    for op in OperatorType::ALL {
        let i = op.index();
        let mut row = vec![op.name().to_string(), num(params.eol_rate[i]), num(params.pmd_rate[i])];
        for m in [&params.rb_per_launch, &params.mro_per_launch, &params.mro_per_sat] {
            let r = m.row(i);
            if r.iter().any(|v| *v != r[0]) {
                return Err(Error::invalid(format!("{op}: launch debris coefficients vary by shell")));
            }
            row.push(num(r[0]));
        }
        w.write_record(&row).map_err(&err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
