use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::StreamRng;

/// Tolerance on `BᵀB = I` for a representation.
pub const ORTHONORMAL_TOL: f64 = 1e-10;

/// Reward coefficient of one task.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskVector(DVector<f64>);

impl TaskVector {
    pub fn new(theta: DVector<f64>) -> Self {
        TaskVector(theta)
    }

    pub fn from_slice(theta: &[f64]) -> Self {
        TaskVector(DVector::from_column_slice(theta))
    }

    /// Builds a task and checks `phi_min <= |theta| <= phi_max`.
    pub fn bounded(theta: DVector<f64>, bounds: NormBounds) -> Result<Self> {
        let n = theta.norm();
        // relative slack for the rounding in B * alpha
        let slack = 1e-12 * bounds.phi_max;
        if n < bounds.phi_min - slack || n > bounds.phi_max + slack {
            return Err(Error::InvalidBounds(format!(
                "task norm {n} outside [{}, {}]",
                bounds.phi_min, bounds.phi_max
            )));
        }
        Ok(TaskVector(theta))
    }

    pub fn theta(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }
}

/// Norm bounds `[phi_min, phi_max]` on task coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormBounds {
    pub phi_min: f64,
    pub phi_max: f64,
}

impl NormBounds {
    pub fn new(phi_min: f64, phi_max: f64) -> Result<Self> {
        if !(phi_min > 0.0) || !(phi_max >= phi_min) || !phi_max.is_finite() {
            return Err(Error::InvalidBounds(format!(
                "need 0 < phi_min <= phi_max, got [{phi_min}, {phi_max}]"
            )));
        }
        Ok(NormBounds { phi_min, phi_max })
    }
}

impl Default for NormBounds {
    fn default() -> Self {
        NormBounds {
            phi_min: 0.5,
            phi_max: 1.0,
        }
    }
}

/// A `d x r` matrix with orthonormal columns, `r < d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Representation(DMatrix<f64>);

impl Representation {
    pub fn new(b: DMatrix<f64>) -> Result<Self> {
        let (d, r) = b.shape();
        if r == 0 || r >= d {
            return Err(Error::InvalidDimension(format!("need 1 <= r < d, got d={d}, r={r}")));
        }
        let dev = (b.transpose() * &b - DMatrix::<f64>::identity(r, r)).amax();
        if dev > ORTHONORMAL_TOL {
            return Err(Error::InvalidDimension(format!(
                "columns are not orthonormal (max deviation {dev:e})"
            )));
        }
        Ok(Representation(b))
    }

    /// Representation spanned by standard basis vectors `e_i` for `i` in `axes`.
    pub fn from_axes(d: usize, axes: &[usize]) -> Result<Self> {
        let mut b = DMatrix::zeros(d, axes.len());
        for (j, &i) in axes.iter().enumerate() {
            if i >= d {
                return Err(Error::InvalidDimension(format!("axis {i} out of range for d={d}")));
            }
            b[(i, j)] = 1.0;
        }
        Representation::new(b)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn d(&self) -> usize {
        self.0.nrows()
    }

    pub fn r(&self) -> usize {
        self.0.ncols()
    }

    /// Orthonormal basis of the orthogonal complement, `d x (d - r)`.
    pub fn complement(&self) -> DMatrix<f64> {
        crate::linalg::orthogonal_complement(&self.0)
    }
}

/// The tasks of one context and the representation they share.
#[derive(Debug, Clone)]
pub struct ContextSet {
    pub representation: Representation,
    pub alphas: Vec<DVector<f64>>,
    pub tasks: Vec<TaskVector>,
}

impl ContextSet {
    /// Builds `tasks[i] = B * alphas[i]` and checks the norm bounds.
    pub fn from_alphas(
        representation: Representation,
        alphas: Vec<DVector<f64>>,
        bounds: NormBounds,
    ) -> Result<Self> {
        let tasks = alphas
            .iter()
            .map(|a| {
                if a.len() != representation.r() {
                    return Err(Error::DimensionMismatch(format!(
                        "alpha has length {}, representation has r={}",
                        a.len(),
                        representation.r()
                    )));
                }
                TaskVector::bounded(representation.matrix() * a, bounds)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ContextSet {
            representation,
            alphas,
            tasks,
        })
    }
}

/// Where one task sits in a schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TaskSlot {
    pub task_index: usize,
    pub context_index: usize,
    pub index_in_context: usize,
}

/// Contexts played in order; every task is played for `rounds_per_task` rounds.
#[derive(Debug, Clone)]
pub struct Schedule {
    pub contexts: Vec<ContextSet>,
    pub rounds_per_task: usize,
}

impl Schedule {
    pub fn new(contexts: Vec<ContextSet>, rounds_per_task: usize) -> Result<Self> {
        if rounds_per_task == 0 {
            return Err(Error::Config("rounds per task must be positive".into()));
        }
        if contexts.is_empty() || contexts.iter().any(|c| c.tasks.is_empty()) {
            return Err(Error::Config("every context needs at least one task".into()));
        }
        let d = contexts[0].representation.d();
        if contexts.iter().any(|c| c.representation.d() != d) {
            return Err(Error::DimensionMismatch("contexts disagree on d".into()));
        }
        Ok(Schedule {
            contexts,
            rounds_per_task,
        })
    }

    pub fn d(&self) -> usize {
        self.contexts[0].representation.d()
    }

    pub fn tau(&self) -> Vec<usize> {
        self.contexts.iter().map(|c| c.tasks.len()).collect()
    }

    pub fn total_tasks(&self) -> usize {
        self.contexts.iter().map(|c| c.tasks.len()).sum()
    }

    pub fn total_rounds(&self) -> usize {
        self.total_tasks() * self.rounds_per_task
    }

    /// Task slots in play order.
    pub fn slots(&self) -> impl Iterator<Item = (TaskSlot, &TaskVector)> + '_ {
        self.contexts
            .iter()
            .enumerate()
            .flat_map(|(k, c)| c.tasks.iter().enumerate().map(move |(i, t)| (k, i, t)))
            .enumerate()
            .map(|(j, (k, i, t))| {
                (
                    TaskSlot {
                        task_index: j,
                        context_index: k,
                        index_in_context: i,
                    },
                    t,
                )
            })
    }

    /// The switching signal: the slot active at 1-based round `t`.
    pub fn sigma(&self, t: usize) -> Option<TaskSlot> {
        if t == 0 || t > self.total_rounds() {
            return None;
        }
        let j = (t - 1) / self.rounds_per_task;
        self.slots().nth(j).map(|(s, _)| s)
    }

    /// Index of the first task of each context after the first.
    pub fn switch_tasks(&self) -> Vec<usize> {
        self.contexts
            .iter()
            .scan(0usize, |acc, c| {
                *acc += c.tasks.len();
                Some(*acc)
            })
            .take(self.contexts.len().saturating_sub(1))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseModel {
    /// Standard normal noise, the canonical 1-sub-Gaussian case.
    GaussianUnit,
    None,
}

/// A noise model bound to its RNG stream.
#[derive(Debug, Clone)]
pub struct NoiseSource {
    pub kind: NoiseModel,
    rng: StreamRng,
}

impl NoiseSource {
    pub fn new(kind: NoiseModel, rng: StreamRng) -> Self {
        NoiseSource { kind, rng }
    }

    pub fn noiseless() -> Self {
        use rand::SeedableRng;
        NoiseSource::new(NoiseModel::None, StreamRng::seed_from_u64(0))
    }

    pub fn draw(&mut self) -> f64 {
        match self.kind {
            NoiseModel::GaussianUnit => self.rng.sample(StandardNormal),
            NoiseModel::None => 0.0,
        }
    }
}

/// One interaction row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// 1-based global round.
    pub round: usize,
    pub task_index: usize,
    pub context_index: usize,
    pub action: Vec<f64>,
    pub reward: f64,
    pub inst_regret: f64,
    pub switch_detected: bool,
}
