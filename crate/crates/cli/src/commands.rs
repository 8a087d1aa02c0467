use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use log::{info, warn};
use orbitdemand::choice::{fit_choice_model, ChoiceModelParams, ChoiceOccasion};
use orbitdemand::count::{fit_count_model, CountModelParams, CountObservation};
use orbitdemand::domain::{OperatorGroup, OrbitalState, PhysicalParams, ShellGrid};
use orbitdemand::econ::{impute_prices_group_mean, PriceTable};
use orbitdemand::io;
use orbitdemand::scenario::{
    compare_trajectories, first_stage_covariates, run_scenarios, run_validation, Event, OtherSchedule,
    ScenarioInputs, ScenarioSpec, Trajectory,
};
use orbitdemand::synthetic::{generate, write_world, SyntheticConfig};

use crate::config::{ModelPaths, RunConfig, RunSection};
use crate::report;
use crate::{Cli, InputError};

/// Cut altitude used when neither the config nor the scenario names one.
const DEFAULT_CUT_KM: f64 = 600.0;

pub struct Ctx {
    pub cfg: RunConfig,
    pub cli: Cli,
}

impl Ctx {
    fn out_dir(&self, default: &str) -> PathBuf {
        self.cli
            .out
            .clone()
            .or_else(|| self.cfg.run.out.as_ref().map(|p| self.cfg.resolve(p)))
            .unwrap_or_else(|| PathBuf::from(default))
    }

    fn out_dir_models(&self) -> PathBuf {
        self.cli.out.clone().unwrap_or_else(|| self.cfg.models_output_dir())
    }

    fn data(&self, p: &Path) -> PathBuf {
        self.cfg.resolve(p)
    }

    fn groups(&self) -> Vec<OperatorGroup> {
        self.cli.operator.groups()
    }

    fn physical(&self, grid: &ShellGrid) -> Result<PhysicalParams> {
        let d = &self.cfg.data;
        let mut p = io::load_physical_params(
            &self.data(&d.params_physical),
            &self.data(&d.params_operator),
            grid,
            PhysicalParams::defaults(grid),
        )?;
        self.cfg.physics.apply(&mut p);
        p.validate(grid).map_err(|e| InputError(format!("[physics]: {e}")))?;
        Ok(p)
    }

    fn prices(&self) -> Result<PriceTable> {
        let records = io::load_launch_prices(&self.data(&self.cfg.data.launch_prices))?;
        Ok(PriceTable::from_imputed(&impute_prices_group_mean(&records)?))
    }

    fn choice_models(&self) -> Result<BTreeMap<OperatorGroup, ChoiceModelParams>> {
        let dir = self.cfg.models_dir();
        OperatorGroup::MODELED
            .iter()
            .map(|g| {
                let path = dir.join(format!("choice_{}.json", g.name()));
                let m = io::load_choice_model(&path).with_context(|| format!("loading the {g} choice model"))?;
                Ok((*g, m.params()?))
            })
            .collect()
    }

    fn count_models(&self) -> Result<BTreeMap<OperatorGroup, CountModelParams>> {
        let dir = self.cfg.models_dir();
        OperatorGroup::MODELED
            .iter()
            .map(|g| {
                let path = dir.join(format!("count_{}.json", g.name()));
                let m = io::load_count_model(&path).with_context(|| format!("loading the {g} count model"))?;
                Ok((*g, m.params()?))
            })
            .collect()
    }

    /// Everything but the initial state, which depends on the start year.
    fn scenario_inputs(&self, states: &BTreeMap<i32, OrbitalState>, start: i32) -> Result<ScenarioInputs> {
        let grid = self.cfg.grid()?;
        let d = &self.cfg.data;
        let initial = states
            .get(&start)
            .cloned()
            .ok_or_else(|| InputError(format!("no orbital state for the start year {start}")))?;
        let energy_table = match &d.energy_table {
            Some(p) => Some(io::load_energy_table(&self.data(p), grid.n_shells())?),
            None => None,
        };
        Ok(ScenarioInputs {
            physical: self.physical(&grid)?,
            initial,
            choice_models: self.choice_models()?,
            count_models: self.count_models()?,
            econ: io::load_econ_series(&self.data(&d.econ_series))?,
            prices: self.prices()?,
            launch_history: io::load_launch_history(&self.data(&d.launch_history), grid.n_shells())?,
            energy_table,
            grid,
        })
    }

    fn states(&self) -> Result<BTreeMap<i32, OrbitalState>> {
        let grid = self.cfg.grid()?;
        Ok(io::load_orbital_states(&self.data(&self.cfg.data.orbital_state), &grid)?)
    }

    /// Spec from a file (flag first, then config) or a bare run, with the
    /// command-line overrides applied.
    fn spec(&self, flag: Option<&PathBuf>, configured: Option<&PathBuf>, default_years: (i32, i32)) -> Result<ScenarioSpec> {
        let path = flag.cloned().or_else(|| configured.map(|p| self.cfg.resolve(p)));
        let mut spec = match path {
            Some(p) => ScenarioSpec::load(&p)?,
            None => {
                let from = self.cli.from.or(self.cfg.run.from).unwrap_or(default_years.0);
                let to = self.cli.to.or(self.cfg.run.to).unwrap_or(default_years.1);
                let mut s = ScenarioSpec::new(from, to);
                s.name = "run".into();
                s
            }
        };
        self.override_spec(&mut spec);
        spec.validate()?;
        Ok(spec)
    }

    fn override_spec(&self, spec: &mut ScenarioSpec) {
        if let Some(y) = self.cli.from {
            spec.start_year = y;
        }
        if let Some(y) = self.cli.to {
            spec.end_year = y;
        }
        if let Some(s) = self.cli.seed.or(self.cfg.run.seed) {
            spec.seed = s;
        }
        if let Some(m) = self.cfg.run.prediction {
            spec.prediction = m;
        }
    }
}

fn by_group<T: Clone>(items: &[T], group: impl Fn(&T) -> OperatorGroup, g: OperatorGroup) -> Vec<T> {
    items.iter().filter(|x| group(x) == g).cloned().collect()
}

pub fn estimate_choice(ctx: &Ctx) -> Result<()> {
    let grid = ctx.cfg.grid()?;
    let path = ctx.data(&ctx.cfg.data.choice_occasions);
    let occasions = io::load_choice_occasions(&path, grid.n_shells())?;
    if occasions.is_empty() {
        return Err(InputError(format!("{}: no choice occasions", path.display())).into());
    }
    let out = ctx.out_dir_models();
    let settings = ctx.cfg.estimation.choice_settings();
    let mut fits = Vec::new();
    for g in ctx.groups() {
        let occ: Vec<ChoiceOccasion> = by_group(&occasions, |o| o.group, g);
        if occ.is_empty() {
            return Err(InputError(format!("no {g} choice occasions in {}", path.display())).into());
        }
        let t = Instant::now();
        let fit = fit_choice_model(&occ, &settings).with_context(|| format!("estimating the {g} choice model"))?;
        info!("{g}: {} occasions, {} iterations, {:.2?}", fit.n_obs, fit.iterations, t.elapsed());
        io::write_choice_model(
            &out.join(format!("choice_{}.json", g.name())),
            &io::ChoiceModelFile::from_fit(&fit),
        )?;
        fits.push(fit);
    }
    print!("{}", report::choice_table(&fits));
    println!("models written to {}", out.display());
    Ok(())
}

/// Swap in covariates rebuilt from stocks, prices and the fitted choice
/// models where all of them are available.
fn recompute_covariates(ctx: &Ctx, observations: &mut [CountObservation]) -> Result<()> {
    let grid = ctx.cfg.grid()?;
    let choice = match ctx.choice_models() {
        Ok(m) => m,
        Err(e) => {
            warn!("keeping recorded first-stage covariates: {e:#}");
            return Ok(());
        }
    };
    let states = ctx.states()?;
    let physical = ctx.physical(&grid)?;
    let prices = ctx.prices()?;
    let energy = match &ctx.cfg.data.energy_table {
        Some(p) => Some(io::load_energy_table(&ctx.data(p), grid.n_shells())?),
        None => None,
    };
    let mut cache = BTreeMap::new();
    for o in observations.iter_mut() {
        let Some(prev) = states.get(&(o.year - 1)) else {
            warn!("no stocks for {}; keeping recorded covariates for {} {}", o.year - 1, o.group, o.year);
            continue;
        };
        if !cache.contains_key(&o.year) {
            let cov = first_stage_covariates(prev, o.year, &prices, &choice, &physical, &grid, energy.as_deref())?;
            cache.insert(o.year, cov);
        }
        if let Some((pi, rate)) = cache[&o.year].get(&o.group) {
            let n = o.covariates.len();
            o.covariates[n - 2] = *pi;
            o.covariates[n - 1] = *rate;
        }
    }
    Ok(())
}

pub fn estimate_count(ctx: &Ctx) -> Result<()> {
    let path = ctx.data(&ctx.cfg.data.count_observations);
    let mut observations = io::load_count_observations(&path)?;
    if observations.is_empty() {
        return Err(InputError(format!("{}: no count observations", path.display())).into());
    }
    if ctx.cfg.estimation.recompute_first_stage_covariates {
        recompute_covariates(ctx, &mut observations)?;
    }
    let out = ctx.out_dir_models();
    let config = ctx.cfg.estimation.count_config();
    let mut fits = Vec::new();
    for g in ctx.groups() {
        let obs = by_group(&observations, |o| o.group, g);
        if obs.is_empty() {
            return Err(InputError(format!("no {g} count observations in {}", path.display())).into());
        }
        let fit = fit_count_model(&obs, &config).with_context(|| format!("estimating the {g} count model"))?;
        info!("{g}: lambda {} from {} observations", fit.params.lambda, fit.n_obs);
        io::write_count_model(
            &out.join(format!("count_{}.json", g.name())),
            &io::CountModelFile::from_fit(&fit),
        )?;
        fits.push(fit);
    }
    print!("{}", report::count_table(&fits));
    println!("models written to {}", out.display());
    Ok(())
}

fn print_trajectory(traj: &Trajectory) {
    println!("{:>6} {:>12} {:>12} {:>12}", "year", "satellites", "debris", "launches");
    for s in &traj.states {
        let launches = traj.outcome(s.year).map(|o| o.launches.total());
        println!(
            "{:>6} {:>12.1} {:>12.1} {:>12}",
            s.year,
            s.total_satellites(),
            s.total_debris(),
            launches.map_or_else(|| "-".to_string(), |v| format!("{v:.1}"))
        );
    }
}

pub fn simulate(ctx: &Ctx) -> Result<()> {
    let spec = ctx.spec(ctx.cli.spec.as_ref(), ctx.cfg.run.scenario.as_ref(), (2012, 2020))?;
    let states = ctx.states()?;
    let inputs = ctx.scenario_inputs(&states, spec.start_year)?;
    let t = Instant::now();
    let traj = orbitdemand::scenario::run_scenario(&inputs, &spec)?;
    info!("{} -> {} in {:.2?}", spec.start_year, spec.end_year, t.elapsed());
    let out = ctx.out_dir("out/simulate");
    io::write_trajectory(&traj, &out)?;
    print_trajectory(&traj);
    println!("trajectory written to {}", out.display());
    Ok(())
}

pub fn validate(ctx: &Ctx) -> Result<()> {
    let from = ctx.cli.from.or(ctx.cfg.run.from).unwrap_or(2012);
    let to = ctx.cli.to.or(ctx.cfg.run.to).unwrap_or(2020);
    let mut spec = ScenarioSpec::new(from, to);
    spec.name = "validation".into();
    spec.events.push(Event::OtherSchedule(OtherSchedule::Historical));
    ctx.override_spec(&mut spec);
    spec.validate()?;
    let states = ctx.states()?;
    let inputs = ctx.scenario_inputs(&states, spec.start_year)?;
    let (traj, report) = run_validation(&inputs, &spec, &states)?;
    let out = ctx.out_dir("out/validate");
    io::write_trajectory(&traj, &out)?;
    io::write_validation(&report, &out)?;
    println!(
        "{:<16} {:>12} {:>12} {:>10} {:>12} {:>12} {:>10}",
        "series", "MAE", "RMSE", "MAPE", "proj. change", "obs. change", "direction"
    );
    for m in &report.metrics {
        println!(
            "{:<16} {:>12.2} {:>12.2} {:>9.1}% {:>12.1} {:>12.1} {:>10}",
            m.series.name(),
            m.mean_abs_error,
            m.rmse,
            100.0 * m.mean_abs_pct_error,
            m.projected_change,
            m.observed_change,
            if m.same_direction { "agree" } else { "DISAGREE" }
        );
    }
    println!("validation written to {}", out.display());
    Ok(())
}

/// Without an explicit baseline the counterfactual keeps only its
/// background assumptions: economic projection, cost trend and the other
/// operators' schedule.
fn derived_baseline(spec: &ScenarioSpec) -> ScenarioSpec {
    let mut b = spec.clone();
    b.name = format!("{}-baseline", spec.name);
    b.events.retain(|e| {
        matches!(
            e,
            Event::EconProjection { .. } | Event::CostTrend { .. } | Event::OtherSchedule(_)
        )
    });
    b
}

pub fn scenario(ctx: &Ctx) -> Result<()> {
    let spec_path = ctx
        .cli
        .spec
        .clone()
        .or_else(|| ctx.cfg.run.scenario.as_ref().map(|p| ctx.cfg.resolve(p)))
        .ok_or_else(|| InputError("scenario needs --spec or [run] scenario".into()))?;
    let spec = ctx.spec(Some(&spec_path), None, (0, 0))?;
    let baseline_path = ctx
        .cli
        .baseline
        .clone()
        .or_else(|| ctx.cfg.run.baseline.as_ref().map(|p| ctx.cfg.resolve(p)));
    let baseline = match baseline_path {
        Some(p) => ctx.spec(Some(&p), None, (0, 0))?,
        None => derived_baseline(&spec),
    };
    if (baseline.start_year, baseline.end_year) != (spec.start_year, spec.end_year) {
        return Err(InputError(format!(
            "baseline covers {}-{} but the scenario covers {}-{}",
            baseline.start_year, baseline.end_year, spec.start_year, spec.end_year
        ))
        .into());
    }
    let states = ctx.states()?;
    let inputs = ctx.scenario_inputs(&states, spec.start_year)?;
    let t = Instant::now();
    let mut runs = run_scenarios(&inputs, &[baseline, spec.clone()]).into_iter();
    let base = runs.next().expect("two runs").context("baseline run")?;
    let cf = runs.next().expect("two runs").context("counterfactual run")?;
    info!("two runs in {:.2?}", t.elapsed());

    let cut = ctx.cfg.run.cut_altitude_km.unwrap_or_else(|| {
        spec.events
            .iter()
            .find_map(|e| match e {
                Event::CostShock { below_altitude_km, .. } => Some(*below_altitude_km),
                _ => None,
            })
            .unwrap_or(DEFAULT_CUT_KM)
    });
    let delta = compare_trajectories(&base, &cf, &inputs.grid, cut)?;
    let out = ctx.out_dir("out/scenario");
    io::write_trajectory(&base, &out.join("baseline"))?;
    io::write_trajectory(&cf, &out.join("counterfactual"))?;
    io::write_delta(&delta, &out.join("delta"))?;

    println!("probability mass below {cut} km, counterfactual minus baseline");
    println!("{:>6} {:>12} {:>14} {:>12}", "year", "operator", "mass_below", "launches");
    for c in &delta.choices {
        println!(
            "{:>6} {:>12} {:>14.6} {:>12.3}",
            c.year,
            c.group.name(),
            c.mass_below,
            c.launches.iter().sum::<f64>()
        );
    }
    println!("outputs written to {}", out.display());
    Ok(())
}

pub fn gen_synthetic(ctx: &Ctx) -> Result<()> {
    let mut cfg = SyntheticConfig::default();
    if let Some(s) = ctx.cli.seed.or(ctx.cfg.run.seed) {
        cfg.seed = s;
    }
    if let Some(y) = ctx.cli.from {
        cfg.first_year = y;
    }
    if let Some(y) = ctx.cli.to {
        cfg.last_year = y;
    }
    if cfg.last_year <= cfg.first_year + 1 {
        bail!(InputError(format!("need at least three years, got {}-{}", cfg.first_year, cfg.last_year)));
    }
    let out = ctx.cli.out.clone().unwrap_or_else(|| PathBuf::from("data/synthetic"));
    let world = generate(&cfg)?;
    write_world(&world, &out)?;
    // Simulations read the generating models; estimates go next to them.
    let config = RunConfig {
        models: ModelPaths {
            dir: "true_models".into(),
            output_dir: Some("models".into()),
        },
        run: RunSection {
            seed: Some(cfg.seed),
            ..Default::default()
        },
        ..RunConfig::default()
    };
    std::fs::write(out.join("config.toml"), config.to_toml()?)
        .with_context(|| format!("writing {}", out.join("config.toml").display()))?;
    println!(
        "synthetic world {}-{} (seed {}): {} choice occasions, {} count observations -> {}",
        cfg.first_year,
        cfg.last_year,
        cfg.seed,
        world.occasions.len(),
        world.count_observations.len(),
        out.display()
    );
    Ok(())
}
