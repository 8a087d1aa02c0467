//! Scenario definitions and their TOML file format.
//!
//! ```toml
//! [run]
//! start = 2012
//! end = 2020
//! seed = 7
//!
//! [event.1]
//! kind = "fragmentation"
//! year = 2014
//! fragments = [{ altitude_km = 825, count = 500 }, { altitude_km = 875, count = 125 }]
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::count::PredictionMode;
use crate::domain::{OperatorGroup, OperatorType};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FragmentAddition {
    /// Any altitude inside the receiving shell.
    pub altitude_km: f64,
    pub count: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum OtherSchedule {
    /// Recorded launches of each simulated year.
    Historical,
    /// Recorded launches up to `year`, then that year's pattern repeated.
    RepeatLast { year: i32 },
    /// Recorded launches up to `to`, then the `from..=to` pattern cycled.
    RepeatWindow { from: i32, to: i32 },
}

impl OtherSchedule {
    /// Year of recorded launches to replay in simulated year `year`.
    pub fn source_year(&self, year: i32) -> i32 {
        match *self {
            OtherSchedule::Historical => year,
            OtherSchedule::RepeatLast { year: last } => year.min(last),
            OtherSchedule::RepeatWindow { from, to } => {
                if year <= to {
                    year
                } else {
                    from + (year - to - 1).rem_euclid(to - from + 1)
                }
            }
        }
    }
}

fn modeled_groups() -> Vec<OperatorGroup> {
    OperatorGroup::MODELED.to_vec()
}

fn all_operators() -> Vec<OperatorType> {
    OperatorType::ALL.to_vec()
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Event {
    /// Fragments added at the end of `year`.
    Fragmentation { year: i32, fragments: Vec<FragmentAddition> },
    /// Launch prices to shells lying entirely below `below_altitude_km` are
    /// multiplied by `multiplier` from `start_year` on.
    CostShock {
        start_year: i32,
        below_altitude_km: f64,
        multiplier: f64,
        #[serde(default = "modeled_groups")]
        operators: Vec<OperatorGroup>,
    },
    /// Every launch price is multiplied by `(1 + rate)` for each year after
    /// `after_year`.
    CostTrend { after_year: i32, rate: f64 },
    /// Disposal compliance moves linearly from its value in `start_year` to
    /// `target` in `end_year` and stays there.
    PmdRamp {
        start_year: i32,
        end_year: i32,
        target: f64,
        #[serde(default = "all_operators")]
        operators: Vec<OperatorType>,
    },
    /// Economic covariates beyond the observed data grow at `growth_rate`.
    EconProjection {
        growth_rate: f64,
        #[serde(default = "yes")]
        include_insurance: bool,
    },
    /// Launch pattern of the amateur and constellation operators.
    OtherSchedule(OtherSchedule),
}

impl Event {
    pub fn kind(&self) -> &'static str {
        match self {
            Event::Fragmentation { .. } => "fragmentation",
            Event::CostShock { .. } => "cost_shock",
            Event::CostTrend { .. } => "cost_trend",
            Event::PmdRamp { .. } => "pmd_ramp",
            Event::EconProjection { .. } => "econ_projection",
            Event::OtherSchedule(_) => "other_schedule",
        }
    }

    fn validate(&self) -> Result<()> {
        let positive = |what: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!("{what} {v} must be positive")))
            }
        };
        match self {
            Event::Fragmentation { fragments, .. } => {
                for f in fragments {
                    if !(f.count.is_finite() && f.count >= 0.0) {
                        return Err(Error::invalid(format!("fragment count {} must be non-negative", f.count)));
                    }
                    if !f.altitude_km.is_finite() {
                        return Err(Error::invalid("fragment altitude must be finite"));
                    }
                }
            }
            Event::CostShock {
                multiplier,
                below_altitude_km,
                ..
            } => {
                positive("multiplier", *multiplier)?;
                positive("below_altitude_km", *below_altitude_km)?;
            }
            Event::CostTrend { rate, .. } => positive("1 + rate", 1.0 + rate)?,
            Event::PmdRamp {
                start_year,
                end_year,
                target,
                ..
            } => {
                if !(0.0..=1.0).contains(target) {
                    return Err(Error::invalid(format!("compliance target {target} must lie in [0, 1]")));
                }
                if end_year < start_year {
                    return Err(Error::invalid(format!("ramp ends ({end_year}) before it starts ({start_year})")));
                }
            }
            Event::EconProjection { growth_rate, .. } => positive("1 + growth_rate", 1.0 + growth_rate)?,
            Event::OtherSchedule(OtherSchedule::RepeatWindow { from, to }) if to < from => {
                return Err(Error::invalid(format!("repeat window {from}..{to} is empty")));
            }
            Event::OtherSchedule(_) => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub start_year: i32,
    pub end_year: i32,
    pub seed: u64,
    pub prediction: PredictionMode,
    pub events: Vec<Event>,
}

impl ScenarioSpec {
    pub fn new(start_year: i32, end_year: i32) -> Self {
        Self {
            name: String::new(),
            start_year,
            end_year,
            seed: 0,
            prediction: PredictionMode::Mean,
            events: Vec::new(),
        }
    }

    pub fn with_event(mut self, event: Event) -> Self {
        self.events.push(event);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.start_year >= self.end_year {
            return Err(Error::invalid(format!(
                "scenario start {} must precede end {}",
                self.start_year, self.end_year
            )));
        }
        for (i, e) in self.events.iter().enumerate() {
            e.validate().map_err(|err| Error::invalid(format!("event {} ({}): {err}", i + 1, e.kind())))?;
        }
        for kind in ["econ_projection", "other_schedule"] {
            if self.events.iter().filter(|e| e.kind() == kind).count() > 1 {
                return Err(Error::invalid(format!("at most one {kind} event is allowed")));
            }
        }
        Ok(())
    }

    pub fn other_schedule(&self) -> OtherSchedule {
        self.events
            .iter()
            .find_map(|e| match e {
                Event::OtherSchedule(s) => Some(s.clone()),
                _ => None,
            })
            .unwrap_or(OtherSchedule::Historical)
    }

    pub fn econ_projection(&self) -> Option<(f64, bool)> {
        self.events.iter().find_map(|e| match e {
            Event::EconProjection {
                growth_rate,
                include_insurance,
            } => Some((*growth_rate, *include_insurance)),
            _ => None,
        })
    }

    pub fn from_toml_str(text: &str, path: &Path) -> Result<Self> {
        let raw: RawSpec = toml::from_str(text).map_err(|e| {
            let line = e.span().map_or(0, |s| line_of(text, s.start));
            Error::parse(path, line, e.message().to_string())
        })?;
        let mut keyed = Vec::with_capacity(raw.event.len());
        for (key, event) in raw.event {
            let n: u32 = key.parse().map_err(|_| {
                Error::parse(
                    path,
                    section_line(text, &format!("event.{key}")),
                    format!("event sections are named [event.N]; found [event.{key}]"),
                )
            })?;
            keyed.push((n, key, event));
        }
        keyed.sort_by_key(|(n, _, _)| *n);
        let spec = ScenarioSpec {
            name: raw.run.name.unwrap_or_else(|| {
                path.file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default()
            }),
            start_year: raw.run.start,
            end_year: raw.run.end,
            seed: raw.run.seed,
            prediction: raw.run.prediction,
            events: keyed.iter().map(|(_, _, e)| e.clone()).collect(),
        };
        if spec.start_year >= spec.end_year {
            return Err(Error::parse(
                path,
                section_line(text, "run"),
                format!("start {} must precede end {}", spec.start_year, spec.end_year),
            ));
        }
        for (_, key, e) in &keyed {
            e.validate()
                .map_err(|err| Error::parse(path, section_line(text, &format!("event.{key}")), err.to_string()))?;
        }
        spec.validate().map_err(|err| Error::parse(path, 0, err.to_string()))?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, path)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    start: i32,
    end: i32,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    prediction: PredictionMode,
    name: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    run: RawRun,
    #[serde(default)]
    event: BTreeMap<String, Event>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of a `[name]` header, or 0 when absent.
fn section_line(text: &str, name: &str) -> usize {
    text.lines()
        .position(|l| {
            let t = l.trim();
            t.starts_with('[') && t.trim_start_matches('[').trim_end_matches(']').trim() == name
        })
        .map_or(0, |i| i + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ScenarioSpec> {
        ScenarioSpec::from_toml_str(text, Path::new("test.toml"))
    }

    #[test]
    fn parses_all_event_kinds_in_order() {
        let spec = parse(
            r#"
[run]
start = 2018
end = 2030
seed = 3

[event.2]
kind = "cost_shock"
start_year = 2024
below_altitude_km = 500
multiplier = 0.5

[event.1]
kind = "cost_trend"
after_year = 2020
rate = -0.01

[event.3]
kind = "pmd_ramp"
start_year = 2018
end_year = 2025
target = 1.0

[event.4]
kind = "econ_projection"
growth_rate = 0.15

[event.10]
kind = "other_schedule"
mode = "repeat_window"
from = 2018
to = 2020

[event.5]
kind = "fragmentation"
year = 2019
fragments = [{ altitude_km = 825, count = 500 }]
"#,
        )
        .unwrap();
        let kinds: Vec<&str> = spec.events.iter().map(Event::kind).collect();
        assert_eq!(
            kinds,
            ["cost_trend", "cost_shock", "pmd_ramp", "econ_projection", "fragmentation", "other_schedule"]
        );
        assert_eq!(spec.seed, 3);
        assert_eq!(spec.name, "test");
        assert_eq!(spec.other_schedule(), OtherSchedule::RepeatWindow { from: 2018, to: 2020 });
        assert_eq!(spec.econ_projection(), Some((0.15, true)));
        match &spec.events[1] {
            Event::CostShock { operators, .. } => assert_eq!(operators.len(), 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let err = parse("[run]\nstart = 2012\nend = = 2020\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn invalid_event_points_at_its_section() {
        let text = "[run]\nstart = 2012\nend = 2020\n\n[event.1]\nkind = \"cost_shock\"\nstart_year = 2014\nbelow_altitude_km = 500\nmultiplier = -0.5\n";
        match parse(text).unwrap_err() {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 5);
                assert!(message.contains("multiplier"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_bad_ranges_and_unknown_fields() {
        assert!(parse("[run]\nstart = 2020\nend = 2020\n").is_err());
        assert!(parse("[run]\nstart = 2012\nend = 2020\ncolour = 1\n").is_err());
        assert!(parse("[run]\nstart = 2012\nend = 2020\n[event.x]\nkind = \"cost_trend\"\nafter_year = 1\nrate = 0.1\n").is_err());
        let ramp = "[run]\nstart = 2012\nend = 2020\n[event.1]\nkind = \"pmd_ramp\"\nstart_year = 2013\nend_year = 2015\ntarget = 1.5\n";
        assert!(parse(ramp).is_err());
        let frag = "[run]\nstart = 2012\nend = 2020\n[event.1]\nkind = \"fragmentation\"\nyear = 2014\nfragments = [{ altitude_km = 825, count = -1 }]\n";
        assert!(parse(frag).is_err());
    }

    #[test]
    fn other_schedule_source_years() {
        assert_eq!(OtherSchedule::Historical.source_year(2015), 2015);
        let last = OtherSchedule::RepeatLast { year: 2020 };
        assert_eq!(last.source_year(2019), 2019);
        assert_eq!(last.source_year(2027), 2020);
        let window = OtherSchedule::RepeatWindow { from: 2018, to: 2020 };
        let cycled: Vec<i32> = (2019..=2026).map(|y| window.source_year(y)).collect();
        assert_eq!(cycled, [2019, 2020, 2018, 2019, 2020, 2018, 2019, 2020]);
    }
}
