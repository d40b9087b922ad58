//! The Wisconsin Card Sorting Task in its linear encoding.
//!
//! A stimulus card is `A = [e_shape, e_number, e_color] ∈ R^{4x3}`, where
//! `e_i` says the card shares that attribute with table card `i`. A sorting
//! rule is a basis vector `B_σ ∈ R^3` and the correct sort is `A·B_σ`, so each
//! round is a noise-free linear bandit with `θ_t = A_t B_σ`.

mod agent;
mod card;

pub use agent::{wcst_rep_agent_run, RepresentationAgent};
pub use card::{
    encode_card, recover_rule, wcst_as_linear_bandit, wcst_reward, RuleEstimatorState, SortingRule, StimulusCard,
    WcstSchedule, DEFAULT_RULE_PERIOD,
};

use nalgebra::DVector;

use crate::env::StepRecord;

/// A player of the card task. Actions are 1-based table-card indices.
pub trait WcstPolicy {
    fn act(&mut self, card: &StimulusCard) -> usize;
    /// Feeds back the reward; returns true if the policy detected a rule change.
    fn learn(&mut self, card: &StimulusCard, action: usize, reward: f64) -> bool;
}

/// Plays every round of `schedule`. Rounds are tasks (`task_index = t - 1`)
/// and rule blocks are contexts.
pub fn run_policy<P: WcstPolicy + ?Sized>(schedule: &WcstSchedule, policy: &mut P) -> Vec<StepRecord> {
    schedule
        .cards
        .iter()
        .enumerate()
        .map(|(t, card)| {
            let rule = schedule.rule_at(t);
            let action = policy.act(card);
            let reward = wcst_reward(card, rule, action);
            let switch_detected = policy.learn(card, action, reward);
            let mut x = DVector::<f64>::zeros(4);
            if (1..=4).contains(&action) {
                x[action - 1] = 1.0;
            }
            StepRecord {
                round: t + 1,
                task_index: t,
                context_index: t / schedule.rounds_per_rule,
                action: x.iter().cloned().collect(),
                reward,
                inst_regret: 1.0 - reward,
                switch_detected,
            }
        })
        .collect()
}
