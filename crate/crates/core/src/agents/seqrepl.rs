use nalgebra::DMatrix;

use super::{estimate_representation, re_play_task, rt_play_task, EtcOutcome, REConfig, RTConfig};
use crate::env::{NoiseSource, Representation, Schedule, StepRecord, TaskSession};
use crate::error::{Error, Result};

/// Default phase-length multiplier: `L = c1 * r`.
pub const DEFAULT_C1: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// Tasks played with RE; their estimates feed the accumulator.
    Exploration,
    /// Tasks played with RT on the latest representation estimate.
    Transfer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskOutcome {
    pub phase: Phase,
    pub etc: EtcOutcome,
    /// The accumulator was not yet rank `r` at a phase boundary, so one
    /// more exploration task was scheduled.
    pub deferred_transfer: bool,
}

/// Cyclic exploration/transfer: cycle `n` plays `L` RE tasks, re-estimates
/// `B̂` from the top-`r` singular vectors of `P̂ = Σ θ̂θ̂ᵀ`, then plays
/// `n·L` RT tasks.
#[derive(Debug, Clone)]
pub struct SeqRepL {
    r: usize,
    phase_len: usize,
    p_hat: DMatrix<f64>,
    cycle: usize,
    phase: Phase,
    remaining_in_phase: usize,
    b_hat: Option<Representation>,
    explored_tasks: usize,
}

impl SeqRepL {
    pub fn new(d: usize, r: usize, c1: usize) -> Result<Self> {
        SeqRepL::with_accumulator(DMatrix::zeros(d, d), r, c1)
    }

    /// Starts at cycle 1 with a pre-filled accumulator.
    pub fn with_accumulator(p_hat: DMatrix<f64>, r: usize, c1: usize) -> Result<Self> {
        let d = p_hat.nrows();
        if r == 0 || r >= d || p_hat.ncols() != d {
            return Err(Error::InvalidDimension(format!("need 1 <= r < d, got d={d}, r={r}")));
        }
        if c1 == 0 {
            return Err(Error::Config("c1 must be positive".into()));
        }
        Ok(SeqRepL {
            r,
            phase_len: c1 * r,
            p_hat,
            cycle: 1,
            phase: Phase::Exploration,
            remaining_in_phase: c1 * r,
            b_hat: None,
            explored_tasks: 0,
        })
    }

    pub fn d(&self) -> usize {
        self.p_hat.nrows()
    }

    pub fn r(&self) -> usize {
        self.r
    }

    /// `L`.
    pub fn phase_len(&self) -> usize {
        self.phase_len
    }

    pub fn cycle(&self) -> usize {
        self.cycle
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn remaining_in_phase(&self) -> usize {
        self.remaining_in_phase
    }

    pub fn accumulator(&self) -> &DMatrix<f64> {
        &self.p_hat
    }

    pub fn b_hat(&self) -> Option<&Representation> {
        self.b_hat.as_ref()
    }

    /// Number of RE tasks whose estimates entered the accumulator.
    pub fn explored_tasks(&self) -> usize {
        self.explored_tasks
    }

    /// Plays the next task on whatever budget the session has left.
    pub fn next_task(&mut self, session: &mut TaskSession<'_>) -> Result<TaskOutcome> {
        let horizon = session.remaining();
        match self.phase {
            Phase::Exploration => {
                let cfg = REConfig::clamped(horizon, self.d())?;
                let etc = re_play_task(session, &cfg)?;
                self.p_hat.ger(1.0, &etc.theta_hat, &etc.theta_hat, 1.0);
                self.explored_tasks += 1;
                self.remaining_in_phase -= 1;
                let mut deferred_transfer = false;
                if self.remaining_in_phase == 0 {
                    match estimate_representation(&self.p_hat, self.r) {
                        Ok(b) => {
                            self.b_hat = Some(b);
                            self.phase = Phase::Transfer;
                            self.remaining_in_phase = self.cycle * self.phase_len;
                        }
                        Err(Error::RankDeficientAccumulator { .. }) => {
                            self.remaining_in_phase = 1;
                            deferred_transfer = true;
                        }
                        Err(e) => return Err(e),
                    }
                }
                Ok(TaskOutcome {
                    phase: Phase::Exploration,
                    etc,
                    deferred_transfer,
                })
            }
            Phase::Transfer => {
                let b = self.b_hat.clone().expect("transfer phase has an estimate");
                let cfg = RTConfig::new(horizon, b)?;
                let etc = rt_play_task(session, &cfg)?;
                self.remaining_in_phase -= 1;
                if self.remaining_in_phase == 0 {
                    self.cycle += 1;
                    self.phase = Phase::Exploration;
                    self.remaining_in_phase = self.phase_len;
                }
                Ok(TaskOutcome {
                    phase: Phase::Transfer,
                    etc,
                    deferred_transfer: false,
                })
            }
        }
    }
}

/// Runs SeqRepL over a whole schedule without any change detection.
pub fn seqrepl_run(schedule: &Schedule, r: usize, c1: usize, noise: &mut NoiseSource) -> Result<Vec<StepRecord>> {
    let mut agent = SeqRepL::new(schedule.d(), r, c1)?;
    schedule.play(noise, |s| agent.next_task(s).map(|_| ()))
}
