use crate::agents::{re_play_task, rt_play_task, REConfig, RTConfig};
use crate::env::{NoiseSource, Schedule, StepRecord};
use crate::error::Result;

/// RE on every task independently; no representation is ever estimated.
pub fn per_task_re_run(schedule: &Schedule, noise: &mut NoiseSource) -> Result<Vec<StepRecord>> {
    let cfg = REConfig::new(schedule.rounds_per_task, schedule.d())?;
    schedule.play(noise, |s| re_play_task(s, &cfg).map(|_| ()))
}

/// RT with the true representation of each task's context.
pub fn oracle_rt_run(schedule: &Schedule, noise: &mut NoiseSource) -> Result<Vec<StepRecord>> {
    let cfgs = schedule
        .contexts
        .iter()
        .map(|c| RTConfig::new(schedule.rounds_per_task, c.representation.clone()))
        .collect::<Result<Vec<_>>>()?;
    schedule.play(noise, |s| rt_play_task(s, &cfgs[s.slot().context_index]).map(|_| ()))
}
