//! Particle-in-a-box debris environment model.

pub mod breakup;
pub mod collision;
pub mod step;

pub use breakup::{breakup_fragments, fragments_per_collision, specific_impact_energy, FragmentTable};
pub use collision::{
    collision_rate_pair, effective_collision_rates, total_unadjusted_collision_rate, CollisionRates,
};
pub use step::{apply_pmd, step_year, PmdPlacement, StepDiagnostics};
