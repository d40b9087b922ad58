use super::card::{recover_rule, RuleEstimatorState, SortingRule, StimulusCard, WcstSchedule};
use super::{run_policy, WcstPolicy};
use crate::env::StepRecord;
use crate::error::Error;

/// Learns the sorting rule itself rather than per-card values.
///
/// Before a rule is locked it plays the action predicted by the most rules
/// still consistent with the history (ties to the lowest action) and drops
/// every rule the reward contradicts. A rule is locked when it is the only
/// survivor or when the Gram matrix becomes invertible. Any reward that
/// contradicts the locked rule is read as a rule change: the statistics are
/// cleared and the contradicting round seeds the new estimate.
#[derive(Debug, Clone)]
pub struct RepresentationAgent {
    estimator: RuleEstimatorState,
    survivors: [bool; 3],
    locked: Option<SortingRule>,
    resets: usize,
}

impl Default for RepresentationAgent {
    fn default() -> Self {
        RepresentationAgent {
            estimator: RuleEstimatorState::default(),
            survivors: [true; 3],
            locked: None,
            resets: 0,
        }
    }
}

impl RepresentationAgent {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn estimate(&self) -> Option<SortingRule> {
        self.locked
    }

    pub fn surviving_rules(&self) -> Vec<SortingRule> {
        SortingRule::ALL.into_iter().filter(|r| self.survivors[r.index()]).collect()
    }

    pub fn resets(&self) -> usize {
        self.resets
    }

    pub fn estimator(&self) -> &RuleEstimatorState {
        &self.estimator
    }

    fn clear(&mut self) {
        self.estimator = RuleEstimatorState::default();
        self.survivors = [true; 3];
        self.locked = None;
        self.resets += 1;
    }

    fn absorb(&mut self, card: &StimulusCard, action: usize, reward: f64) -> bool {
        self.estimator.observe(card, action, reward);
        let paid = reward == 1.0;
        for rule in SortingRule::ALL {
            if (card.attribute(rule) == action) != paid {
                self.survivors[rule.index()] = false;
            }
        }
        if self.survivors.iter().all(|s| !s) {
            return false;
        }
        self.locked = match recover_rule(&self.estimator) {
            Ok(Some(rule)) => Some(rule),
            Ok(None) => match self.surviving_rules().as_slice() {
                [only] => Some(*only),
                _ => None,
            },
            Err(Error::InconsistentObservations(_)) => return false,
            Err(e) => unreachable!("rule recovery failed: {e}"),
        };
        true
    }
}

impl WcstPolicy for RepresentationAgent {
    fn act(&mut self, card: &StimulusCard) -> usize {
        if let Some(rule) = self.locked {
            return card.attribute(rule);
        }
        let mut votes = [0usize; 4];
        for rule in self.surviving_rules() {
            votes[card.attribute(rule) - 1] += 1;
        }
        let best = *votes.iter().max().expect("four actions");
        votes.iter().position(|&v| v == best).expect("a maximum exists") + 1
    }

    fn learn(&mut self, card: &StimulusCard, action: usize, reward: f64) -> bool {
        let contradicted = self
            .locked
            .is_some_and(|rule| (card.attribute(rule) == action) != (reward == 1.0));
        if contradicted {
            self.clear();
        }
        if self.absorb(card, action, reward) {
            return contradicted;
        }
        // the history mixes two rules: keep only the latest round
        self.clear();
        let consistent = self.absorb(card, action, reward);
        debug_assert!(consistent);
        true
    }
}

/// Runs the representation agent over a card schedule.
pub fn wcst_rep_agent_run(schedule: &WcstSchedule) -> Vec<StepRecord> {
    run_policy(schedule, &mut RepresentationAgent::new())
}
