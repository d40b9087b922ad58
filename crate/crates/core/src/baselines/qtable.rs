use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::StreamRng;
use crate::wcst::{StimulusCard, WcstPolicy};

/// `(shape-1)*16 + (number-1)*4 + (color-1)`.
pub fn state_index(card: &StimulusCard) -> usize {
    let [s, n, c] = card.matches();
    (s as usize - 1) * 16 + (n as usize - 1) * 4 + (c as usize - 1)
}

/// 64 stimulus states x 4 sort actions.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    pub table: [[f64; 4]; 64],
    pub lr: f64,
    pub epsilon: f64,
}

impl QTable {
    pub fn new(lr: f64, epsilon: f64) -> Result<Self> {
        if !(lr > 0.0 && lr <= 1.0) || !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::Config(format!("need lr in (0,1] and epsilon in [0,1], got {lr}, {epsilon}")));
        }
        Ok(QTable {
            table: [[0.0; 4]; 64],
            lr,
            epsilon,
        })
    }

    pub fn value(&self, state: usize, action: usize) -> f64 {
        self.table[state][action - 1]
    }

    /// Epsilon-greedy with uniformly random tie-breaking; 1-based action.
    pub fn select<R: Rng + ?Sized>(&self, state: usize, rng: &mut R) -> usize {
        if rng.random::<f64>() < self.epsilon {
            return rng.random_range(1..=4);
        }
        let row = &self.table[state];
        let best = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let ties: Vec<usize> = (0..4).filter(|&a| row[a] == best).collect();
        ties[rng.random_range(0..ties.len())] + 1
    }
}

/// `Q(s,a) += lr * (reward - Q(s,a))`: the one-step update with zero
/// discount, since the next card does not depend on the action.
pub fn tabular_q_step(q: &mut QTable, state: usize, action: usize, reward: f64) -> Result<()> {
    if state >= 64 || !(1..=4).contains(&action) {
        return Err(Error::OutOfRange(format!("state {state} / action {action}")));
    }
    let v = &mut q.table[state][action - 1];
    *v += q.lr * (reward - *v);
    Ok(())
}

pub struct TabularQPolicy {
    pub q: QTable,
    rng: StreamRng,
}

impl TabularQPolicy {
    pub fn new(q: QTable, rng: StreamRng) -> Self {
        TabularQPolicy { q, rng }
    }
}

impl WcstPolicy for TabularQPolicy {
    fn act(&mut self, card: &StimulusCard) -> usize {
        self.q.select(state_index(card), &mut self.rng)
    }

    fn learn(&mut self, card: &StimulusCard, action: usize, reward: f64) -> bool {
        tabular_q_step(&mut self.q, state_index(card), action, reward).expect("valid state and action");
        false
    }
}
