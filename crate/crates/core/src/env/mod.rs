//! Tasks, contexts, schedules, the reward/noise model and regret accounting.

mod generate;
mod ops;
mod session;
mod types;

pub use generate::{
    generate_context, generate_orthogonal_representations, generate_representation, generate_schedule,
    generate_task, plant_subspace_error, ScheduleParams, DEFAULT_DIVERSITY_NU, MAX_DIVERSITY_ATTEMPTS,
};
pub use ops::{check_diversity, instantaneous_regret, optimal_action, step, subspace_error};
pub use session::TaskSession;
pub use types::{
    ContextSet, NoiseModel, NoiseSource, NormBounds, Representation, Schedule, StepRecord, TaskSlot,
    TaskVector, ORTHONORMAL_TOL,
};
