use nalgebra::{DVector, Matrix3, SMatrix, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::TaskVector;
use crate::error::{Error, Result};
use crate::linalg::MAX_CONDITION;

pub const DEFAULT_RULE_PERIOD: usize = 20;

/// Which table card the stimulus matches in shape, number and color (each 1..=4).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StimulusCard {
    matches: [u8; 3],
}

pub fn encode_card(shape: u8, number: u8, color: u8) -> Result<StimulusCard> {
    let matches = [shape, number, color];
    if matches.iter().any(|m| !(1..=4).contains(m)) {
        return Err(Error::OutOfRange(format!("card attributes must be in 1..=4, got {matches:?}")));
    }
    Ok(StimulusCard { matches })
}

impl StimulusCard {
    pub fn matches(&self) -> [u8; 3] {
        self.matches
    }

    /// `A = [e_shape, e_number, e_color]`.
    pub fn matrix(&self) -> SMatrix<f64, 4, 3> {
        SMatrix::from_fn(|i, j| if self.matches[j] as usize == i + 1 { 1.0 } else { 0.0 })
    }

    /// The correct 1-based sort action under `rule`.
    pub fn attribute(&self, rule: SortingRule) -> usize {
        self.matches[rule.index()] as usize
    }

    /// `Aᵀx` for the action `x = e_action`: which attributes the action matches.
    pub fn feature(&self, action: usize) -> Vector3<f64> {
        Vector3::from_fn(|j, _| if self.matches[j] as usize == action { 1.0 } else { 0.0 })
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StimulusCard {
            matches: [rng.random_range(1..=4), rng.random_range(1..=4), rng.random_range(1..=4)],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SortingRule {
    Shape,
    Number,
    Color,
}

impl SortingRule {
    pub const ALL: [SortingRule; 3] = [SortingRule::Shape, SortingRule::Number, SortingRule::Color];

    pub fn index(self) -> usize {
        self as usize
    }

    /// `B_σ`.
    pub fn basis(self) -> Vector3<f64> {
        let mut b = Vector3::zeros();
        b[self.index()] = 1.0;
        b
    }
}

/// 1 iff `e_action = A·B_σ`.
pub fn wcst_reward(card: &StimulusCard, rule: SortingRule, action: usize) -> f64 {
    if card.attribute(rule) == action {
        1.0
    } else {
        0.0
    }
}

/// `θ_t = A·B_σ` as a unit-ball task over `R^4`.
pub fn wcst_as_linear_bandit(card: &StimulusCard, rule: SortingRule) -> TaskVector {
    let theta = card.matrix() * rule.basis();
    TaskVector::new(DVector::from_column_slice(theta.as_slice()))
}

/// Sufficient statistics for recovering the rule:
/// `G = Σ Aᵀx xᵀA`, `h = Σ Aᵀx y`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RuleEstimatorState {
    pub gram: Matrix3<f64>,
    pub moment: Vector3<f64>,
    pub rounds: usize,
}

impl RuleEstimatorState {
    pub fn observe(&mut self, card: &StimulusCard, action: usize, reward: f64) {
        let f = card.feature(action);
        self.gram += f * f.transpose();
        self.moment += f * reward;
        self.rounds += 1;
    }

    pub fn rank(&self) -> usize {
        self.gram.symmetric_eigenvalues().iter().filter(|&&v| v > 1e-9).count()
    }
}

/// `G⁻¹h` rounded to a rule once `G` is invertible; `Ok(None)` before that.
pub fn recover_rule(state: &RuleEstimatorState) -> Result<Option<SortingRule>> {
    if state.rounds == 0 {
        return Ok(None);
    }
    let eig = state.gram.symmetric_eigenvalues();
    let (min, max) = eig.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !(min > 0.0) || max / min > MAX_CONDITION {
        return Ok(None);
    }
    let chol = state.gram.cholesky().expect("positive definite after the condition check");
    let b = chol.solve(&state.moment);
    SortingRule::ALL
        .into_iter()
        .find(|r| (b - r.basis()).amax() <= 1e-6)
        .map(Some)
        .ok_or(Error::InconsistentObservations([b[0], b[1], b[2]]))
}

/// A card stream with one rule per block of `rounds_per_rule` rounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WcstSchedule {
    pub rules: Vec<SortingRule>,
    pub rounds_per_rule: usize,
    pub cards: Vec<StimulusCard>,
}

impl WcstSchedule {
    pub fn new(rules: Vec<SortingRule>, rounds_per_rule: usize, cards: Vec<StimulusCard>) -> Result<Self> {
        if rounds_per_rule == 0 || cards.is_empty() {
            return Err(Error::Config("need a positive rule period and at least one card".into()));
        }
        if rules.len() != cards.len().div_ceil(rounds_per_rule) {
            return Err(Error::Config(format!(
                "{} cards in blocks of {rounds_per_rule} need {} rules, got {}",
                cards.len(),
                cards.len().div_ceil(rounds_per_rule),
                rules.len()
            )));
        }
        if rules.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("consecutive rules must differ".into()));
        }
        Ok(WcstSchedule {
            rules,
            rounds_per_rule,
            cards,
        })
    }

    /// Uniform cards; the first rule is uniform and each later rule is
    /// uniform over the two rules that differ from its predecessor.
    pub fn generate<R: Rng + ?Sized>(total_rounds: usize, rounds_per_rule: usize, rng: &mut R) -> Result<Self> {
        if rounds_per_rule == 0 || total_rounds == 0 {
            return Err(Error::Config("need positive rounds and rule period".into()));
        }
        let blocks = total_rounds.div_ceil(rounds_per_rule);
        let mut rules = Vec::with_capacity(blocks);
        rules.push(SortingRule::ALL[rng.random_range(0..3)]);
        for _ in 1..blocks {
            let prev = rules[rules.len() - 1].index();
            let next = (prev + rng.random_range(1..3)) % 3;
            rules.push(SortingRule::ALL[next]);
        }
        let cards = (0..total_rounds).map(|_| StimulusCard::random(rng)).collect();
        WcstSchedule::new(rules, rounds_per_rule, cards)
    }

    /// Rule in force at 0-based round `t`.
    pub fn rule_at(&self, t: usize) -> SortingRule {
        self.rules[t / self.rounds_per_rule]
    }

    pub fn total_rounds(&self) -> usize {
        self.cards.len()
    }
}
