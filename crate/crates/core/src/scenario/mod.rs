//! Counterfactual runs of the coupled debris and demand model.

pub mod compare;
pub mod engine;
pub mod spec;
pub mod validation;

pub use compare::{compare_trajectories, mass_below, ChoiceDelta, StockDelta, TrajectoryDelta};
pub use engine::{
    build_shell_characteristics, first_stage_covariates, pmd_schedule, run_scenario, run_scenarios, shell_attributes, GroupOutcome,
    ScenarioInputs, Trajectory, YearOutcome,
};
pub use spec::{Event, FragmentAddition, OtherSchedule, ScenarioSpec};
pub use validation::{
    aggregate_series, compare_series, history_launch_totals, run_validation, trajectory_launch_totals,
    AggregateRow, AggregateSeries, SeriesMetrics, StockRow, ValidationReport,
};
