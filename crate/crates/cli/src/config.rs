use std::path::{Path, PathBuf};

use anyhow::Context;
use orbitdemand::choice::ChoiceFitSettings;
use orbitdemand::count::{log_grid, CountFitConfig, FoldScheme, PredictionMode};
use orbitdemand::domain::{PhysicalParams, ShellGrid};
use serde::{Deserialize, Serialize};

use crate::InputError;

/// Input files; relative paths resolve against the config file's directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataPaths {
    pub orbital_state: PathBuf,
    pub params_physical: PathBuf,
    pub params_operator: PathBuf,
    pub choice_occasions: PathBuf,
    pub count_observations: PathBuf,
    pub econ_series: PathBuf,
    pub launch_prices: PathBuf,
    pub launch_history: PathBuf,
    pub energy_table: Option<PathBuf>,
}

impl Default for DataPaths {
    fn default() -> Self {
        Self {
            orbital_state: "orbital_state.csv".into(),
            params_physical: "params_physical.csv".into(),
            params_operator: "params_operator.csv".into(),
            choice_occasions: "choice_occasions.csv".into(),
            count_observations: "count_observations.csv".into(),
            econ_series: "econ_series.csv".into(),
            launch_prices: "launch_prices.csv".into(),
            launch_history: "launch_history.csv".into(),
            energy_table: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelPaths {
    /// Where simulation reads `choice_<group>.json` and `count_<group>.json`.
    pub dir: PathBuf,
    /// Where estimation writes them; defaults to `dir`.
    pub output_dir: Option<PathBuf>,
}

impl Default for ModelPaths {
    fn default() -> Self {
        Self {
            dir: "models".into(),
            output_dir: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub start_km: f64,
    pub width_km: f64,
    pub n_shells: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            start_km: 100.0,
            width_km: 50.0,
            n_shells: 24,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicsOverrides {
    pub v_rel_km_s: Option<f64>,
    pub debris_debris_adjust: Option<f64>,
    pub sat_avoidance: Option<bool>,
    pub pmd_target_shell: Option<usize>,
    pub catastrophic_threshold: Option<f64>,
    pub frag_min_size_m: Option<f64>,
    pub substeps: Option<usize>,
}

impl PhysicsOverrides {
    pub fn apply(&self, p: &mut PhysicalParams) {
        if let Some(v) = self.v_rel_km_s {
            p.v_rel_km_s = v;
        }
        if let Some(v) = self.debris_debris_adjust {
            p.debris_debris_adjust = v;
        }
        if let Some(v) = self.sat_avoidance {
            p.sat_avoidance = v;
        }
        if let Some(v) = self.pmd_target_shell {
            p.pmd_target_shell = v;
        }
        if let Some(v) = self.catastrophic_threshold {
            p.catastrophic_threshold = v;
        }
        if let Some(v) = self.frag_min_size_m {
            p.frag_min_size_m = v;
        }
        if let Some(v) = self.substeps {
            p.substeps = v;
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimationConfig {
    pub asc_penalty: f64,
    pub asc_bound: f64,
    pub choice_max_iter: usize,
    pub choice_grad_tol: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub n_lambda: usize,
    pub k_folds: usize,
    /// Shuffle cross-validation folds with this seed instead of using
    /// contiguous year blocks.
    pub fold_seed: Option<u64>,
    pub count_max_iter: usize,
    pub count_grad_tol: f64,
    /// Rebuild the price-index and collision-rate covariates from the
    /// stocks, prices and fitted choice models instead of reading them from
    /// the observations file.
    pub recompute_first_stage_covariates: bool,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        let c = ChoiceFitSettings::default();
        let k = CountFitConfig::default();
        Self {
            asc_penalty: c.asc_penalty,
            asc_bound: c.asc_bound,
            choice_max_iter: c.max_iter,
            choice_grad_tol: c.grad_tol,
            lambda_min: 1e-4,
            lambda_max: 1e4,
            n_lambda: 50,
            k_folds: k.k_folds,
            fold_seed: None,
            count_max_iter: k.max_iter,
            count_grad_tol: k.grad_tol,
            recompute_first_stage_covariates: true,
        }
    }
}

impl EstimationConfig {
    pub fn choice_settings(&self) -> ChoiceFitSettings {
        ChoiceFitSettings {
            max_iter: self.choice_max_iter,
            grad_tol: self.choice_grad_tol,
            asc_penalty: self.asc_penalty,
            asc_bound: self.asc_bound,
        }
    }

    pub fn count_config(&self) -> CountFitConfig {
        CountFitConfig {
            lambda_grid: log_grid(self.lambda_min, self.lambda_max, self.n_lambda),
            k_folds: self.k_folds,
            max_iter: self.count_max_iter,
            grad_tol: self.count_grad_tol,
            folds: self.fold_seed.map_or(FoldScheme::Blocked, |seed| FoldScheme::Random { seed }),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub from: Option<i32>,
    pub to: Option<i32>,
    pub scenario: Option<PathBuf>,
    pub baseline: Option<PathBuf>,
    pub prediction: Option<PredictionMode>,
    /// Altitude splitting probability mass in scenario deltas.
    pub cut_altitude_km: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataPaths,
    pub models: ModelPaths,
    pub grid: GridConfig,
    pub physics: PhysicsOverrides,
    pub estimation: EstimationConfig,
    pub run: RunSection,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| InputError(format!("{}: {e}", path.display())))?;
        let mut cfg: RunConfig = toml::from_str(&text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start].matches('\n').count() + 1)
                .unwrap_or(0);
            InputError(format!("{}:{line}: {}", path.display(), e.message()))
        })?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    /// Defaults rooted at the working directory.
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            base_dir: dir.to_path_buf(),
            ..Self::default()
        }
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn grid(&self) -> anyhow::Result<ShellGrid> {
        ShellGrid::uniform(self.grid.start_km, self.grid.width_km, self.grid.n_shells)
            .map_err(|e| InputError(format!("[grid]: {e}")).into())
    }

    pub fn models_dir(&self) -> PathBuf {
        self.resolve(&self.models.dir)
    }

    pub fn models_output_dir(&self) -> PathBuf {
        self.resolve(self.models.output_dir.as_ref().unwrap_or(&self.models.dir))
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        toml::to_string(self).context("serialising run configuration")
    }
}
