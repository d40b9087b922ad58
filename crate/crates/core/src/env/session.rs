use nalgebra::DVector;

use super::ops::{instantaneous_regret, step};
use super::types::{NoiseSource, Schedule, StepRecord, TaskSlot, TaskVector};
use crate::error::{Error, Result};

/// The interaction loop for a single task: the agent sees rewards only,
/// while the session keeps the white-box regret bookkeeping.
pub struct TaskSession<'a> {
    task: &'a TaskVector,
    noise: &'a mut NoiseSource,
    slot: TaskSlot,
    horizon: usize,
    round_base: usize,
    records: Vec<StepRecord>,
}

impl<'a> TaskSession<'a> {
    /// `round_base` is the number of rounds already played before this task.
    pub fn new(
        task: &'a TaskVector,
        slot: TaskSlot,
        horizon: usize,
        round_base: usize,
        noise: &'a mut NoiseSource,
    ) -> Self {
        TaskSession {
            task,
            noise,
            slot,
            horizon,
            round_base,
            records: Vec::with_capacity(horizon),
        }
    }

    /// A stand-alone session for task 0 of context 0.
    pub fn single(task: &'a TaskVector, horizon: usize, noise: &'a mut NoiseSource) -> Self {
        let slot = TaskSlot {
            task_index: 0,
            context_index: 0,
            index_in_context: 0,
        };
        TaskSession::new(task, slot, horizon, 0, noise)
    }

    pub fn play(&mut self, x: &DVector<f64>) -> Result<f64> {
        if self.remaining() == 0 {
            return Err(Error::BudgetExhausted {
                played: self.records.len(),
            });
        }
        let reward = step(self.task, x, self.noise)?;
        let inst_regret = instantaneous_regret(self.task, x)?;
        self.records.push(StepRecord {
            round: self.round_base + self.records.len() + 1,
            task_index: self.slot.task_index,
            context_index: self.slot.context_index,
            action: x.iter().cloned().collect(),
            reward,
            inst_regret,
            switch_detected: false,
        });
        Ok(reward)
    }

    pub fn dim(&self) -> usize {
        self.task.dim()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn played(&self) -> usize {
        self.records.len()
    }

    pub fn remaining(&self) -> usize {
        self.horizon - self.records.len()
    }

    pub fn slot(&self) -> TaskSlot {
        self.slot
    }

    pub fn noise_kind(&self) -> super::NoiseModel {
        self.noise.kind
    }

    /// Flags the most recent round as a detected context switch.
    pub fn mark_switch(&mut self) {
        if let Some(last) = self.records.last_mut() {
            last.switch_detected = true;
        }
    }

    pub fn records(&self) -> &[StepRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<StepRecord> {
        self.records
    }
}

impl Schedule {
    /// Drives `agent` over every task in order and concatenates the traces.
    /// Each call must consume the full task budget.
    pub fn play<F>(&self, noise: &mut NoiseSource, mut agent: F) -> Result<Vec<StepRecord>>
    where
        F: FnMut(&mut TaskSession<'_>) -> Result<()>,
    {
        let mut out = Vec::with_capacity(self.total_rounds());
        for (slot, task) in self.slots() {
            let base = slot.task_index * self.rounds_per_task;
            let mut session = TaskSession::new(task, slot, self.rounds_per_task, base, noise);
            agent(&mut session)?;
            if session.remaining() != 0 {
                return Err(Error::Config(format!(
                    "agent left {} rounds of task {} unplayed",
                    session.remaining(),
                    slot.task_index
                )));
            }
            out.extend(session.into_records());
        }
        Ok(out)
    }
}
