use rand::Rng;

use crate::rng::StreamRng;
use crate::wcst::{StimulusCard, WcstPolicy};

/// Uniform over the four sort actions (1-based).
pub fn random_policy_step<R: Rng + ?Sized>(rng: &mut R) -> usize {
    rng.random_range(1..=4)
}

pub struct RandomPolicy {
    rng: StreamRng,
}

impl RandomPolicy {
    pub fn new(rng: StreamRng) -> Self {
        RandomPolicy { rng }
    }
}

impl WcstPolicy for RandomPolicy {
    fn act(&mut self, _card: &StimulusCard) -> usize {
        random_policy_step(&mut self.rng)
    }

    fn learn(&mut self, _card: &StimulusCard, _action: usize, _reward: f64) -> bool {
        false
    }
}
