use ndarray::Array2;

use crate::domain::{OperatorGroup, ShellGrid, Species};
use crate::error::{Error, Result};

use super::engine::Trajectory;

#[derive(Debug, Clone, PartialEq)]
pub struct StockDelta {
    pub year: i32,
    /// Counterfactual minus baseline, species x shell.
    pub delta: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChoiceDelta {
    pub year: i32,
    pub group: OperatorGroup,
    pub probability: Vec<f64>,
    pub launches: Vec<f64>,
    /// Change in probability mass of shells entirely below the cut altitude.
    pub mass_below: f64,
    pub mass_above: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryDelta {
    pub cut_altitude_km: f64,
    pub stocks: Vec<StockDelta>,
    pub choices: Vec<ChoiceDelta>,
}

fn species_matrix(state: &crate::domain::OrbitalState) -> Array2<f64> {
    let n = state.n_shells();
    Array2::from_shape_fn((Species::COUNT, n), |(s, j)| {
        state.get(Species::from_index(s).expect("species index"), j)
    })
}

/// Counterfactual minus baseline for every year and shell.
pub fn compare_trajectories(
    baseline: &Trajectory,
    counterfactual: &Trajectory,
    grid: &ShellGrid,
    cut_altitude_km: f64,
) -> Result<TrajectoryDelta> {
    let years = |t: &Trajectory| t.states.iter().map(|s| s.year).collect::<Vec<_>>();
    if years(baseline) != years(counterfactual) {
        return Err(Error::invalid("trajectories cover different years"));
    }
    let n = grid.n_shells();
    if baseline.states.iter().chain(&counterfactual.states).any(|s| s.n_shells() != n) {
        return Err(Error::invalid("trajectory shells do not match the grid"));
    }
    let below: Vec<bool> = (0..n)
        .map(|j| grid.alt_hi(j).map(|h| h <= cut_altitude_km))
        .collect::<Result<_>>()?;

    let stocks = baseline
        .states
        .iter()
        .zip(&counterfactual.states)
        .map(|(b, c)| StockDelta {
            year: b.year,
            delta: species_matrix(c) - species_matrix(b),
        })
        .collect();

    let mut choices = Vec::new();
    for (b, c) in baseline.years.iter().zip(&counterfactual.years) {
        for bg in &b.groups {
            let cg = c
                .group(bg.group)
                .ok_or_else(|| Error::invalid(format!("{} missing from counterfactual in {}", bg.group, c.year)))?;
            let op = bg.group.operator().expect("modeled group").index();
            let probability: Vec<f64> = cg.probabilities.iter().zip(&bg.probabilities).map(|(x, y)| x - y).collect();
            let launches: Vec<f64> = (0..n).map(|j| c.launches.q[[op, j]] - b.launches.q[[op, j]]).collect();
            let mass_below = probability.iter().zip(&below).filter(|(_, b)| **b).map(|(d, _)| d).sum();
            let mass_above = probability.iter().zip(&below).filter(|(_, b)| !**b).map(|(d, _)| d).sum();
            choices.push(ChoiceDelta {
                year: b.year,
                group: bg.group,
                probability,
                launches,
                mass_below,
                mass_above,
            });
        }
    }
    Ok(TrajectoryDelta {
        cut_altitude_km,
        stocks,
        choices,
    })
}

/// Probability mass of shells lying entirely below `cut_altitude_km`.
pub fn mass_below(probabilities: &[f64], grid: &ShellGrid, cut_altitude_km: f64) -> Result<f64> {
    let mut total = 0.0;
    for (j, p) in probabilities.iter().enumerate() {
        if grid.alt_hi(j)? <= cut_altitude_km {
            total += p;
        }
    }
    Ok(total)
}
