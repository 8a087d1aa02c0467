//! File formats. Every CSV is comma-separated UTF-8 with one header row;
//! shells are identified by their zero-based index.

mod data;
mod models;
mod params;
mod trajectory;
mod validation;

pub use data::{
    load_choice_occasions, load_count_observations, load_econ_series, load_energy_table, load_launch_history, load_launch_prices,
    load_orbital_state, load_orbital_states, write_choice_occasions, write_count_observations, write_econ_series,
    write_imputed_prices, write_launch_history, write_launch_prices, write_orbital_states,
};
pub use models::{
    load_choice_model, load_count_model, write_choice_model, write_count_model, ChoiceModelFile, CountModelFile,
};
pub use params::{load_physical_params, write_operator_params, write_physical_params};
pub use validation::{write_validation, VALIDATION_FILES};
pub use trajectory::{
    read_trajectory_choice, read_trajectory_stocks, write_delta, write_trajectory, ChoiceRow, TRAJECTORY_FILES,
};

use std::collections::HashMap;
use std::fs::File;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

pub(crate) fn reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

pub(crate) fn writer(path: &Path) -> Result<csv::Writer<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

pub(crate) fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// Shortest representation that parses back to the same value.
pub(crate) fn num(v: f64) -> String {
    format!("{v}")
}

/// Column lookup by header name.
pub(crate) struct Columns<'a> {
    path: &'a Path,
    index: HashMap<String, usize>,
}

impl<'a> Columns<'a> {
    pub fn new(path: &'a Path, rdr: &mut csv::Reader<File>, required: &[&str], optional: &[&str]) -> Result<Self> {
        let headers = rdr.headers().map_err(csv_err(path))?.clone();
        let mut index = HashMap::new();
        for (i, h) in headers.iter().enumerate() {
            if !required.contains(&h) && !optional.contains(&h) {
                return Err(Error::parse(path, 1, format!("unexpected column '{h}'")));
            }
            if index.insert(h.to_string(), i).is_some() {
                return Err(Error::parse(path, 1, format!("duplicate column '{h}'")));
            }
        }
        if let Some(missing) = required.iter().find(|c| !index.contains_key(**c)) {
            return Err(Error::parse(path, 1, format!("missing column '{missing}'")));
        }
        Ok(Self { path, index })
    }

    pub fn has(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn raw<'r>(&self, rec: &'r csv::StringRecord, name: &str) -> Result<&'r str> {
        let i = self.index[name];
        rec.get(i)
            .ok_or_else(|| Error::parse(self.path, line(rec), format!("missing field '{name}'")))
    }

    pub fn parse<T: FromStr>(&self, rec: &csv::StringRecord, name: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.raw(rec, name)?;
        raw.parse()
            .map_err(|e| Error::parse(self.path, line(rec), format!("{name} '{raw}': {e}")))
    }

    /// A finite value; `min` bounds it from below when given.
    pub fn number(&self, rec: &csv::StringRecord, name: &str, min: Option<f64>) -> Result<f64> {
        let v: f64 = self.parse(rec, name)?;
        if !v.is_finite() {
            return Err(Error::parse(self.path, line(rec), format!("{name} is not finite")));
        }
        if let Some(m) = min {
            if v < m {
                return Err(Error::parse(self.path, line(rec), format!("{name} {v} is below {m}")));
            }
        }
        Ok(v)
    }

    pub fn shell(&self, rec: &csv::StringRecord, name: &str, n_shells: usize) -> Result<usize> {
        let j: usize = self.parse(rec, name)?;
        if j >= n_shells {
            return Err(Error::parse(
                self.path,
                line(rec),
                format!("{name} {j} outside 0..{n_shells}"),
            ));
        }
        Ok(j)
    }

    pub fn error(&self, rec: &csv::StringRecord, msg: impl Into<String>) -> Error {
        Error::parse(self.path, line(rec), msg)
    }
}

/// One-based file line of a record.
pub(crate) fn line(rec: &csv::StringRecord) -> usize {
    rec.position().map_or(0, |p| p.line() as usize)
}

pub(crate) fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}
