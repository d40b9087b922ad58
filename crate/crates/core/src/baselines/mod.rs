//! Reference policies: per-task RE and oracle RT for the unit-ball
//! environments; random, tabular-Q and Deep-Q for the card sorting task.

mod etc;
mod mlp;
mod qtable;
mod random;

pub use etc::{oracle_rt_run, per_task_re_run};
pub use mlp::{deep_q_run, DeepQPolicy, Gradients, TinyMLP, HIDDEN, INPUTS, OUTPUTS};
pub use qtable::{state_index, tabular_q_step, QTable, TabularQPolicy};
pub use random::{random_policy_step, RandomPolicy};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselinePolicy {
    PerTaskRe,
    OracleRt,
    Random,
    TabularQ,
    DeepQ,
}

impl BaselinePolicy {
    /// Whether the policy runs on unit-ball schedules (otherwise on the card task).
    pub fn unit_ball(self) -> bool {
        matches!(self, BaselinePolicy::PerTaskRe | BaselinePolicy::OracleRt)
    }
}
