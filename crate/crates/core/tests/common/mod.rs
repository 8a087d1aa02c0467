//! Helpers shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use orbitdemand::count::CountObservation;
use orbitdemand::domain::{OperatorGroup, OrbitalState, PhysicalParams, ShellGrid};
use orbitdemand::econ::{impute_prices_group_mean, PriceTable};
use orbitdemand::io;
use orbitdemand::scenario::ScenarioInputs;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

pub fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn bundled_dir() -> PathBuf {
    repo_root().join("data/synthetic")
}

/// Observed stocks of the bundled dataset.
pub fn bundled_states() -> BTreeMap<i32, OrbitalState> {
    io::load_orbital_states(&bundled_dir().join("orbital_state.csv"), &ShellGrid::default()).unwrap()
}

/// Scenario inputs from the bundled dataset with the models in `models`
/// (relative to the dataset directory).
pub fn bundled_inputs(start_year: i32, models: &str) -> ScenarioInputs {
    let dir = bundled_dir();
    let grid = ShellGrid::default();
    let physical = io::load_physical_params(
        &dir.join("params_physical.csv"),
        &dir.join("params_operator.csv"),
        &grid,
        PhysicalParams::defaults(&grid),
    )
    .unwrap();
    let records = io::load_launch_prices(&dir.join("launch_prices.csv")).unwrap();
    let mut choice_models = BTreeMap::new();
    let mut count_models = BTreeMap::new();
    for g in OperatorGroup::MODELED {
        let c = io::load_choice_model(&dir.join(models).join(format!("choice_{}.json", g.name()))).unwrap();
        choice_models.insert(g, c.params().unwrap());
        let n = io::load_count_model(&dir.join(models).join(format!("count_{}.json", g.name()))).unwrap();
        count_models.insert(g, n.params().unwrap());
    }
    ScenarioInputs {
        initial: bundled_states()[&start_year].clone(),
        physical,
        choice_models,
        count_models,
        econ: io::load_econ_series(&dir.join("econ_series.csv")).unwrap(),
        prices: PriceTable::from_imputed(&impute_prices_group_mean(&records).unwrap()),
        launch_history: io::load_launch_history(&dir.join("launch_history.csv"), grid.n_shells()).unwrap(),
        energy_table: None,
        grid,
    }
}

pub fn simulate_counts(n: usize, p: usize, seed: u64) -> Vec<CountObservation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let truth: Vec<f64> = (0..p).map(|k| 0.3 * (-1.0_f64).powi(k as i32) / (k as f64 + 1.0)).collect();
    (0..n)
        .map(|i| {
            let covariates: Vec<f64> = (0..p - 1)
                .map(|k| 5.0 * k as f64 + (k as f64 + 1.0) * normal.sample(&mut rng))
                .collect();
            let std: Vec<f64> = covariates
                .iter()
                .enumerate()
                .map(|(k, x)| (x - 5.0 * k as f64) / (k as f64 + 1.0))
                .collect();
            let eta = 2.0 + std.iter().zip(&truth[1..]).map(|(a, b)| a * b).sum::<f64>();
            CountObservation {
                group: OperatorGroup::Commercial,
                year: 1900 + i as i32,
                launches: Poisson::new(eta.exp()).unwrap().sample(&mut rng),
                covariates,
            }
        })
        .collect()
}

pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, piv);
        b.swap(c, piv);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// Newton-Raphson (IRLS) on the penalised log-likelihood with the covariates
/// standardised by population moments; returns raw-scale coefficients.
pub fn irls_oracle(data: &[CountObservation], lambda: f64) -> Vec<f64> {
    let n = data.len() as f64;
    let q = data[0].covariates.len();
    let means: Vec<f64> = (0..q).map(|k| data.iter().map(|o| o.covariates[k]).sum::<f64>() / n).collect();
    let sds: Vec<f64> = (0..q)
        .map(|k| (data.iter().map(|o| (o.covariates[k] - means[k]).powi(2)).sum::<f64>() / n).sqrt())
        .collect();
    let rows: Vec<Vec<f64>> = data
        .iter()
        .map(|o| {
            std::iter::once(1.0)
                .chain((0..q).map(|k| (o.covariates[k] - means[k]) / sds[k]))
                .collect()
        })
        .collect();
    let p = q + 1;
    let mut w = vec![0.0; p];
    w[0] = (data.iter().map(|o| o.launches).sum::<f64>() / n).ln();
    for _ in 0..100 {
        let mut grad = vec![0.0; p];
        let mut hess = vec![vec![0.0; p]; p];
        for (z, o) in rows.iter().zip(data) {
            let mu = z.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>().exp();
            for i in 0..p {
                grad[i] += (o.launches - mu) * z[i];
                for j in 0..p {
                    hess[i][j] += mu * z[i] * z[j];
                }
            }
        }
        for k in 1..p {
            grad[k] -= 2.0 * lambda * w[k];
            hess[k][k] += 2.0 * lambda;
        }
        let step = solve(hess, grad);
        w.iter_mut().zip(&step).for_each(|(a, s)| *a += s);
        if step.iter().all(|s| s.abs() < 1e-14) {
            break;
        }
    }
    let mut raw = w.clone();
    for k in 0..q {
        raw[k + 1] = w[k + 1] / sds[k];
        raw[0] -= w[k + 1] * means[k] / sds[k];
    }
    raw
}
