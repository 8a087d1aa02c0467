//! Economic covariates and launch prices.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::count::COUNT_COVARIATES;
use crate::domain::OperatorGroup;
use crate::error::{Error, Result};

/// The economic categories feeding the launch-count model, in covariate order.
pub const ECON_CATEGORIES: [&str; 10] = [
    COUNT_COVARIATES[0],
    COUNT_COVARIATES[1],
    COUNT_COVARIATES[2],
    COUNT_COVARIATES[3],
    COUNT_COVARIATES[4],
    COUNT_COVARIATES[5],
    COUNT_COVARIATES[6],
    COUNT_COVARIATES[7],
    COUNT_COVARIATES[8],
    COUNT_COVARIATES[9],
];

pub const INSURANCE_CATEGORY: &str = COUNT_COVARIATES[0];

/// Annual values per category. Categories are opaque keys.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EconSeries {
    values: BTreeMap<String, BTreeMap<i32, f64>>,
}

impl EconSeries {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, category: &str, year: i32, value: f64) -> Result<()> {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::invalid(format!("{category} {year}: value {value} must be positive")));
        }
        self.values
            .entry(category.to_string())
            .or_default()
            .insert(year, value);
        Ok(())
    }

    pub fn get(&self, category: &str, year: i32) -> Option<f64> {
        self.values.get(category)?.get(&year).copied()
    }

    pub fn categories(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }

    pub fn series(&self, category: &str) -> Option<&BTreeMap<i32, f64>> {
        self.values.get(category)
    }

    pub fn last_year(&self, category: &str) -> Option<i32> {
        self.values.get(category)?.keys().next_back().copied()
    }

    /// Values of `categories` in `year`, in the given order.
    pub fn row(&self, year: i32, categories: &[&str]) -> Result<Vec<f64>> {
        categories
            .iter()
            .map(|c| {
                self.get(c, year)
                    .ok_or_else(|| Error::invalid(format!("economic series has no {c} value for {year}")))
            })
            .collect()
    }

    /// Values must be present for every year between a category's first and
    /// last entries.
    pub fn validate(&self) -> Result<()> {
        for (cat, series) in &self.values {
            let years: Vec<i32> = series.keys().copied().collect();
            if let Some(w) = years.windows(2).find(|w| w[1] != w[0] + 1) {
                return Err(Error::invalid(format!("{cat}: gap between {} and {}", w[0], w[1])));
            }
        }
        Ok(())
    }
}

/// Extend `categories` (all when `None`) from `from_year` to `to_year`: each
/// missing year compounds the previous year's value by `1 + growth_rate`.
/// Observed values are kept, so re-applying over a projected range changes
/// nothing.
pub fn project_econ(
    series: &EconSeries,
    categories: Option<&[&str]>,
    from_year: i32,
    to_year: i32,
    growth_rate: f64,
) -> Result<EconSeries> {
    if !(growth_rate.is_finite() && growth_rate > -1.0) {
        return Err(Error::invalid(format!("growth rate {growth_rate} must exceed -1")));
    }
    let mut out = series.clone();
    let selected: Vec<String> = match categories {
        Some(list) => list.iter().map(|s| s.to_string()).collect(),
        None => series.values.keys().cloned().collect(),
    };
    for cat in selected {
        let entry = out
            .values
            .get_mut(&cat)
            .ok_or_else(|| Error::invalid(format!("economic series has no category {cat}")))?;
        let mut prev = *entry
            .get(&from_year)
            .ok_or_else(|| Error::invalid(format!("{cat} has no anchor value for {from_year}")))?;
        for year in from_year + 1..=to_year {
            prev = *entry.entry(year).or_insert(prev * (1.0 + growth_rate));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceRecord {
    pub event_id: String,
    pub year: i32,
    pub operator: OperatorGroup,
    pub vehicle: String,
    /// Million USD.
    pub price_musd: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriceSource {
    Observed,
    OperatorYear,
    Operator,
    Global,
}

impl PriceSource {
    pub fn name(self) -> &'static str {
        match self {
            PriceSource::Observed => "observed",
            PriceSource::OperatorYear => "operator_year_mean",
            PriceSource::Operator => "operator_mean",
            PriceSource::Global => "global_mean",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputedPrice {
    pub event_id: String,
    pub year: i32,
    pub operator: OperatorGroup,
    pub vehicle: String,
    pub price_musd: f64,
    pub source: PriceSource,
}

#[derive(Default)]
struct Mean {
    sum: f64,
    n: usize,
}

impl Mean {
    fn add(&mut self, v: f64) {
        self.sum += v;
        self.n += 1;
    }

    fn get(&self) -> Option<f64> {
        (self.n > 0).then(|| self.sum / self.n as f64)
    }
}

/// Fill missing prices with the observed mean of the same operator group and
/// year, falling back to the operator's mean over all years and then the
/// global mean.
pub fn impute_prices_group_mean(records: &[PriceRecord]) -> Result<Vec<ImputedPrice>> {
    let mut by_year: BTreeMap<(OperatorGroup, i32), Mean> = BTreeMap::new();
    let mut by_op: BTreeMap<OperatorGroup, Mean> = BTreeMap::new();
    let mut global = Mean::default();
    for r in records {
        if let Some(p) = r.price_musd {
            if !(p.is_finite() && p > 0.0) {
                return Err(Error::invalid(format!("launch {}: price {p} must be positive", r.event_id)));
            }
            by_year.entry((r.operator, r.year)).or_default().add(p);
            by_op.entry(r.operator).or_default().add(p);
            global.add(p);
        }
    }
    let global_mean = global
        .get()
        .ok_or_else(|| Error::invalid("no observed launch prices to impute from"))?;
    Ok(records
        .iter()
        .map(|r| {
            let (price_musd, source) = match r.price_musd {
                Some(p) => (p, PriceSource::Observed),
                None => by_year
                    .get(&(r.operator, r.year))
                    .and_then(Mean::get)
                    .map(|p| (p, PriceSource::OperatorYear))
                    .or_else(|| by_op.get(&r.operator).and_then(Mean::get).map(|p| (p, PriceSource::Operator)))
                    .unwrap_or((global_mean, PriceSource::Global)),
            };
            ImputedPrice {
                event_id: r.event_id.clone(),
                year: r.year,
                operator: r.operator,
                vehicle: r.vehicle.clone(),
                price_musd,
                source,
            }
        })
        .collect())
}

/// Mean launch price per operator group and year.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PriceTable {
    prices: BTreeMap<OperatorGroup, BTreeMap<i32, f64>>,
}

impl PriceTable {
    pub fn from_imputed(records: &[ImputedPrice]) -> Self {
        let mut means: BTreeMap<(OperatorGroup, i32), Mean> = BTreeMap::new();
        for r in records {
            means.entry((r.operator, r.year)).or_default().add(r.price_musd);
        }
        let mut table = Self::default();
        for ((op, year), m) in means {
            if let Some(p) = m.get() {
                table.prices.entry(op).or_default().insert(year, p);
            }
        }
        table
    }

    pub fn set(&mut self, group: OperatorGroup, year: i32, price_musd: f64) -> Result<()> {
        if !(price_musd.is_finite() && price_musd > 0.0) {
            return Err(Error::invalid(format!("{group} {year}: price {price_musd} must be positive")));
        }
        self.prices.entry(group).or_default().insert(year, price_musd);
        Ok(())
    }

    /// Price in `year`, carrying the latest earlier year forward.
    pub fn price(&self, group: OperatorGroup, year: i32) -> Result<f64> {
        self.prices
            .get(&group)
            .and_then(|s| s.range(..=year).next_back())
            .map(|(_, p)| *p)
            .ok_or_else(|| Error::invalid(format!("no launch price for {group} in or before {year}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(values: &[(i32, f64)]) -> EconSeries {
        let mut s = EconSeries::new();
        for &(y, v) in values {
            s.insert("x", y, v).unwrap();
        }
        s
    }

    #[test]
    fn zero_growth_is_constant() {
        let s = project_econ(&series(&[(2019, 7.0)]), None, 2019, 2023, 0.0).unwrap();
        for y in 2019..=2023 {
            assert_eq!(s.get("x", y), Some(7.0));
        }
    }

    #[test]
    fn fifteen_percent_growth() {
        let s = project_econ(&series(&[(2019, 100.0)]), None, 2019, 2021, 0.15).unwrap();
        assert!((s.get("x", 2020).unwrap() - 115.0).abs() < 1e-12);
        // Two single-year applications compound to the same value.
        let once = project_econ(&series(&[(2019, 100.0)]), None, 2019, 2020, 0.15).unwrap();
        let twice = project_econ(&once, None, 2020, 2021, 0.15).unwrap();
        assert!((s.get("x", 2021).unwrap() - 132.25).abs() < 1e-9);
        assert_eq!(s.get("x", 2021), twice.get("x", 2021));
    }

    #[test]
    fn observed_values_survive_projection() {
        let s = project_econ(&series(&[(2018, 10.0), (2019, 50.0)]), None, 2018, 2020, 0.15).unwrap();
        assert_eq!(s.get("x", 2019), Some(50.0));
        assert!((s.get("x", 2020).unwrap() - 57.5).abs() < 1e-12);
    }

    #[test]
    fn projection_is_idempotent() {
        let once = project_econ(&series(&[(2019, 3.0)]), None, 2019, 2030, 0.15).unwrap();
        let again = project_econ(&once, None, 2019, 2030, 0.15).unwrap();
        assert_eq!(once, again);
    }

    #[test]
    fn projection_errors() {
        assert!(project_econ(&series(&[(2019, 3.0)]), None, 2018, 2020, 0.1).is_err());
        assert!(project_econ(&series(&[(2019, 3.0)]), None, 2019, 2020, -1.0).is_err());
        assert!(project_econ(&series(&[(2019, 3.0)]), Some(&["y"]), 2019, 2020, 0.1).is_err());
    }

    #[test]
    fn gaps_are_rejected() {
        assert!(series(&[(2010, 1.0), (2012, 1.0)]).validate().is_err());
        assert!(series(&[(2010, 1.0), (2011, 1.0)]).validate().is_ok());
        assert!(EconSeries::new().insert("x", 2010, -1.0).is_err());
    }

    fn rec(id: &str, year: i32, op: OperatorGroup, price: Option<f64>) -> PriceRecord {
        PriceRecord {
            event_id: id.into(),
            year,
            operator: op,
            vehicle: "v".into(),
            price_musd: price,
        }
    }

    #[test]
    fn complete_records_pass_through() {
        let records = vec![
            rec("a", 2010, OperatorGroup::Civil, Some(12.0)),
            rec("b", 2011, OperatorGroup::Defense, Some(20.0)),
        ];
        let out = impute_prices_group_mean(&records).unwrap();
        for (r, o) in records.iter().zip(&out) {
            assert_eq!(Some(o.price_musd), r.price_musd);
            assert_eq!(o.source, PriceSource::Observed);
        }
    }

    #[test]
    fn group_mean_fill_and_cascade() {
        let c = OperatorGroup::Commercial;
        let records = vec![
            rec("a", 2010, c, Some(10.0)),
            rec("b", 2010, c, Some(20.0)),
            rec("c", 2010, c, None),
            rec("d", 2011, c, None),
            rec("e", 2011, OperatorGroup::Civil, Some(40.0)),
            rec("f", 2012, OperatorGroup::Defense, None),
        ];
        let out = impute_prices_group_mean(&records).unwrap();
        assert_eq!((out[2].price_musd, out[2].source), (15.0, PriceSource::OperatorYear));
        assert_eq!((out[3].price_musd, out[3].source), (15.0, PriceSource::Operator));
        assert_eq!((out[5].price_musd, out[5].source), (70.0 / 3.0, PriceSource::Global));
    }

    #[test]
    fn imputation_needs_an_observation() {
        assert!(impute_prices_group_mean(&[rec("a", 2010, OperatorGroup::Civil, None)]).is_err());
    }

    #[test]
    fn price_table_carries_forward() {
        let mut t = PriceTable::default();
        t.set(OperatorGroup::Civil, 2015, 16.0).unwrap();
        t.set(OperatorGroup::Civil, 2018, 18.0).unwrap();
        assert_eq!(t.price(OperatorGroup::Civil, 2017).unwrap(), 16.0);
        assert_eq!(t.price(OperatorGroup::Civil, 2030).unwrap(), 18.0);
        assert!(t.price(OperatorGroup::Civil, 2014).is_err());
        assert!(t.price(OperatorGroup::Defense, 2016).is_err());
    }
}
