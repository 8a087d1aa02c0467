use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scenario::{SeriesMetrics, ValidationReport};

use super::{csv_err, num, write_json, writer};

pub const VALIDATION_FILES: [&str; 3] = ["validation_stocks.csv", "validation_aggregates.csv", "validation_metrics.json"];

#[derive(Serialize)]
struct Metrics<'a> {
    series: &'a [SeriesMetrics],
    all_same_direction: bool,
}

pub fn write_validation(report: &ValidationReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(VALIDATION_FILES[0]);
    let mut w = writer(&path)?;
    let err = csv_err(&path);
    w.write_record(["year", "species", "shell_id", "projected", "observed"]).map_err(&err)?;
    for r in &report.stocks {
        w.write_record([
            r.year.to_string(),
            r.species.name().to_string(),
            r.shell.to_string(),
            num(r.projected),
            num(r.observed),
        ])
        .map_err(&err)?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let path = dir.join(VALIDATION_FILES[1]);
    let mut w = writer(&path)?;
    let err = csv_err(&path);
    w.write_record(["year", "series", "projected", "observed"]).map_err(&err)?;
    for r in &report.aggregates {
        w.write_record([r.year.to_string(), r.series.name().to_string(), num(r.projected), num(r.observed)])
            .map_err(&err)?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    write_json(
        &dir.join(VALIDATION_FILES[2]),
        &Metrics {
            series: &report.metrics,
            all_same_direction: report.metrics.iter().all(|m| m.same_direction),
        },
    )
}
