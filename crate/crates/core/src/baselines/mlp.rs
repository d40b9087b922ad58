use nalgebra::{SMatrix, SVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::StreamRng;
use crate::wcst::{StimulusCard, WcstPolicy};

pub const INPUTS: usize = 3;
pub const HIDDEN: usize = 12;
pub const OUTPUTS: usize = 4;

type Input = SVector<f64, INPUTS>;
type Hidden = SVector<f64, HIDDEN>;
type Output = SVector<f64, OUTPUTS>;

/// Parameter gradients of `0.5 (q_a(s) - target)²`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w1: SMatrix<f64, HIDDEN, INPUTS>,
    pub b1: Hidden,
    pub w2: SMatrix<f64, OUTPUTS, HIDDEN>,
    pub b2: Output,
}

/// A 3-12-4 network: rectifier hidden layer, linear outputs, plain SGD.
#[derive(Debug, Clone, PartialEq)]
pub struct TinyMLP {
    pub w1: SMatrix<f64, HIDDEN, INPUTS>,
    pub b1: Hidden,
    pub w2: SMatrix<f64, OUTPUTS, HIDDEN>,
    pub b2: Output,
    pub lr: f64,
    pub epsilon: f64,
    /// Replay-buffer capacity; 0 means purely online updates.
    pub replay_capacity: usize,
}

impl TinyMLP {
    /// He-uniform weights, zero biases.
    pub fn new<R: Rng + ?Sized>(lr: f64, epsilon: f64, rng: &mut R) -> Self {
        let mut net = TinyMLP {
            w1: SMatrix::zeros(),
            b1: Hidden::zeros(),
            w2: SMatrix::zeros(),
            b2: Output::zeros(),
            lr,
            epsilon,
            replay_capacity: 0,
        };
        net.reinitialize(rng);
        net
    }

    pub fn reinitialize<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let l1 = (6.0 / INPUTS as f64).sqrt();
        let l2 = (6.0 / HIDDEN as f64).sqrt();
        self.w1 = SMatrix::from_fn(|_, _| rng.random_range(-l1..l1));
        self.w2 = SMatrix::from_fn(|_, _| rng.random_range(-l2..l2));
        self.b1 = Hidden::zeros();
        self.b2 = Output::zeros();
    }

    pub fn encode(card: &StimulusCard) -> [f64; INPUTS] {
        card.matches().map(f64::from)
    }

    fn hidden(&self, x: &Input) -> (Hidden, Hidden) {
        let pre = self.w1 * x + self.b1;
        (pre, pre.map(|v| v.max(0.0)))
    }

    pub fn forward(&self, input: &[f64; INPUTS]) -> [f64; OUTPUTS] {
        let x = Input::from(*input);
        let (_, h) = self.hidden(&x);
        (self.w2 * h + self.b2).into()
    }

    pub fn loss(&self, input: &[f64; INPUTS], action: usize, target: f64) -> f64 {
        let q = self.forward(input);
        0.5 * (q[action] - target).powi(2)
    }

    /// Backpropagated gradients for output `action` (0-based).
    pub fn gradients(&self, input: &[f64; INPUTS], action: usize, target: f64) -> Gradients {
        let x = Input::from(*input);
        let (pre, h) = self.hidden(&x);
        let q = self.w2 * h + self.b2;
        let err = q[action] - target;
        let mut b2 = Output::zeros();
        b2[action] = err;
        let w2 = b2 * h.transpose();
        let dh = self.w2.row(action).transpose() * err;
        let b1 = dh.zip_map(&pre, |g, p| if p > 0.0 { g } else { 0.0 });
        let w1 = b1 * x.transpose();
        Gradients { w1, b1, w2, b2 }
    }

    pub fn sgd_step(&mut self, input: &[f64; INPUTS], action: usize, target: f64) {
        let g = self.gradients(input, action, target);
        self.w1 -= g.w1 * self.lr;
        self.b1 -= g.b1 * self.lr;
        self.w2 -= g.w2 * self.lr;
        self.b2 -= g.b2 * self.lr;
    }

    pub fn is_finite(&self) -> bool {
        self.w1.iter().chain(self.b1.iter()).chain(self.w2.iter()).chain(self.b2.iter()).all(|v| v.is_finite())
    }

    /// All parameters in a fixed order (w1, b1, w2, b2; column-major).
    pub fn params(&self) -> Vec<f64> {
        self.w1.iter().chain(self.b1.iter()).chain(self.w2.iter()).chain(self.b2.iter()).cloned().collect()
    }

    pub fn set_params(&mut self, p: &[f64]) {
        let mut it = p.iter().cloned();
        for v in self.w1.iter_mut().chain(self.b1.iter_mut()).chain(self.w2.iter_mut()).chain(self.b2.iter_mut()) {
            *v = it.next().expect("parameter vector too short");
        }
    }
}

impl Gradients {
    pub fn flatten(&self) -> Vec<f64> {
        self.w1.iter().chain(self.b1.iter()).chain(self.w2.iter()).chain(self.b2.iter()).cloned().collect()
    }
}

/// Deep-Q player for the card task: epsilon-greedy over the four outputs,
/// squared-error update of the taken action's output toward the reward.
pub struct DeepQPolicy {
    pub net: TinyMLP,
    rng: StreamRng,
    replay: Vec<([f64; INPUTS], usize, f64)>,
    /// Times the weights went non-finite and were reinitialized.
    pub divergences: usize,
}

impl DeepQPolicy {
    pub fn new(net: TinyMLP, rng: StreamRng) -> Self {
        DeepQPolicy {
            net,
            rng,
            replay: Vec::new(),
            divergences: 0,
        }
    }
}

impl WcstPolicy for DeepQPolicy {
    fn act(&mut self, card: &StimulusCard) -> usize {
        if self.rng.random::<f64>() < self.net.epsilon {
            return self.rng.random_range(1..=4);
        }
        let q = self.net.forward(&TinyMLP::encode(card));
        let best = q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let ties: Vec<usize> = (0..OUTPUTS).filter(|&a| q[a] == best).collect();
        ties[self.rng.random_range(0..ties.len())] + 1
    }

    fn learn(&mut self, card: &StimulusCard, action: usize, reward: f64) -> bool {
        let x = TinyMLP::encode(card);
        self.net.sgd_step(&x, action - 1, reward);
        if self.net.replay_capacity > 0 {
            if self.replay.len() == self.net.replay_capacity {
                let k = self.rng.random_range(0..self.replay.len());
                self.replay.swap_remove(k);
            }
            self.replay.push((x, action - 1, reward));
            for _ in 0..self.replay.len().min(8) {
                let (s, a, r) = self.replay[self.rng.random_range(0..self.replay.len())];
                self.net.sgd_step(&s, a, r);
            }
        }
        if !self.net.is_finite() {
            self.divergences += 1;
            self.net.reinitialize(&mut self.rng);
            self.replay.clear();
        }
        false
    }
}

/// Runs the Deep-Q baseline on a card schedule.
pub fn deep_q_run(
    schedule: &crate::wcst::WcstSchedule,
    net: TinyMLP,
    rng: StreamRng,
) -> Result<(Vec<crate::env::StepRecord>, usize)> {
    if !net.is_finite() {
        return Err(Error::Config("network weights must be finite".into()));
    }
    let mut policy = DeepQPolicy::new(net, rng);
    let records = crate::wcst::run_policy(schedule, &mut policy);
    Ok((records, policy.divergences))
}
