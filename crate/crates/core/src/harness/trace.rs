use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "experiment_id,algorithm,realization,round,task_index,context_index,reward,inst_regret,cum_regret,switch_detected,failure_code";

/// One CSV row. A failed realization contributes a single row per algorithm
/// with `round = 0`, zero numeric fields and a non-empty `failure_code`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub experiment_id: String,
    pub algorithm: String,
    pub realization: usize,
    pub round: usize,
    pub task_index: usize,
    pub context_index: usize,
    pub reward: f64,
    pub inst_regret: f64,
    pub cum_regret: f64,
    pub switch_detected: bool,
    pub failure_code: String,
}

impl TraceRow {
    pub fn failed(&self) -> bool {
        !self.failure_code.is_empty()
    }
}

/// Pointwise statistics across realizations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// Sample standard deviation; 0 for a single realization.
    pub std: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Stats {
        let n = values.len() as f64;
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        // summation error can push the mean a hair outside the sample range
        let mean = (values.iter().sum::<f64>() / n).clamp(min, max);
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Stats { mean, min, max, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub algorithm: String,
    pub round: usize,
    pub reward: Stats,
    pub cum_regret: Stats,
    /// Fraction of realizations flagging a switch at this round.
    pub switch_rate: f64,
}

/// Per-round statistics per algorithm over the successful realizations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateTrace {
    pub algorithms: Vec<String>,
    pub rounds: usize,
    pub realizations: usize,
    pub rows: Vec<AggregateRow>,
}

impl AggregateTrace {
    /// Rows of one algorithm, ordered by round.
    pub fn series(&self, algorithm: &str) -> Vec<&AggregateRow> {
        self.rows.iter().filter(|r| r.algorithm == algorithm).collect()
    }

    /// Mean cumulative regret at the last round.
    pub fn final_regret(&self, algorithm: &str) -> Option<Stats> {
        self.series(algorithm).last().map(|r| r.cum_regret)
    }

    /// Mean over rounds of the mean per-round reward.
    pub fn mean_reward(&self, algorithm: &str) -> Option<f64> {
        let s = self.series(algorithm);
        (!s.is_empty()).then(|| s.iter().map(|r| r.reward.mean).sum::<f64>() / s.len() as f64)
    }
}

/// Groups rows by algorithm (first-appearance order) and reduces over
/// realizations. Failed rows are skipped, so a trace of failures only gives
/// an empty aggregate. Every successful realization of an algorithm must
/// cover the same rounds.
pub fn aggregate(rows: &[TraceRow]) -> Result<AggregateTrace> {
    if rows.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let ok: Vec<&TraceRow> = rows.iter().filter(|r| !r.failed()).collect();
    let mut algorithms: Vec<String> = Vec::new();
    for r in &ok {
        if !algorithms.contains(&r.algorithm) {
            algorithms.push(r.algorithm.clone());
        }
    }
    let mut out = Vec::new();
    let mut rounds = 0;
    let mut realizations = 0;
    for alg in &algorithms {
        // realization -> its rows in order
        let mut runs: Vec<(usize, Vec<&TraceRow>)> = Vec::new();
        for r in ok.iter().filter(|r| &r.algorithm == alg) {
            match runs.last_mut() {
                Some((id, v)) if *id == r.realization => v.push(r),
                _ => runs.push((r.realization, vec![r])),
            }
        }
        let len = runs[0].1.len();
        if let Some((id, _)) = runs.iter().find(|(_, v)| v.len() != len) {
            return Err(Error::DimensionMismatch(format!(
                "algorithm {alg}: realization {id} has a different round count"
            )));
        }
        rounds = rounds.max(len);
        realizations = realizations.max(runs.len());
        for t in 0..len {
            let reward: Vec<f64> = runs.iter().map(|(_, v)| v[t].reward).collect();
            let cum: Vec<f64> = runs.iter().map(|(_, v)| v[t].cum_regret).collect();
            let flagged = runs.iter().filter(|(_, v)| v[t].switch_detected).count();
            out.push(AggregateRow {
                algorithm: alg.clone(),
                round: runs[0].1[t].round,
                reward: Stats::of(&reward),
                cum_regret: Stats::of(&cum),
                switch_rate: flagged as f64 / runs.len() as f64,
            });
        }
    }
    Ok(AggregateTrace {
        algorithms,
        rounds,
        realizations,
        rows: out,
    })
}

/// Writes the trace CSV: fixed header, shortest round-trip decimal floats,
/// LF line endings.
pub fn write_csv<W: Write>(rows: &[TraceRow], w: W) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let mut wtr = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    wtr.write_record(CSV_HEADER.split(','))?;
    for r in rows {
        wtr.write_record([
            r.experiment_id.clone(),
            r.algorithm.clone(),
            r.realization.to_string(),
            r.round.to_string(),
            r.task_index.to_string(),
            r.context_index.to_string(),
            r.reward.to_string(),
            r.inst_regret.to_string(),
            r.cum_regret.to_string(),
            r.switch_detected.to_string(),
            r.failure_code.clone(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn export_csv(rows: &[TraceRow], path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let f = File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    write_csv(rows, std::io::BufWriter::new(f))
}

pub fn read_csv<R: Read>(r: R) -> Result<Vec<TraceRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header.join(",") != CSV_HEADER {
        return Err(Error::Parse(format!("unexpected header: {}", header.join(","))));
    }
    rdr.deserialize()
        .map(|row| row.map_err(|e| Error::Parse(e.to_string())))
        .collect()
}

pub fn import_csv(path: &Path) -> Result<Vec<TraceRow>> {
    read_csv(File::open(path)?)
}
