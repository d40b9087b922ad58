use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::calibrate::calibrate_od_threshold;
use super::config::{ExperimentConfig, ExperimentKind};
use super::trace::{aggregate, export_csv, AggregateTrace, TraceRow};
use crate::agents::{adarepl_run, od_probe, rt_play_task, seqrepl_run, AdaRepLConfig, Detector, ODConfig, RTConfig};
use crate::baselines::{deep_q_run, oracle_rt_run, per_task_re_run, QTable, RandomPolicy, TabularQPolicy, TinyMLP};
use crate::env::{
    generate_representation, generate_schedule, generate_task, plant_subspace_error, NoiseModel, NoiseSource,
    NormBounds, Schedule, ScheduleParams, StepRecord, TaskSession, TaskVector,
};
use crate::error::{Error, Result};
use crate::rng::{agent_stream, derive_seed, stream, StreamRng, STREAM_ENV, STREAM_NOISE};
use crate::wcst::{run_policy, wcst_rep_agent_run, WcstSchedule};

/// Every algorithm the harness can run. The id selects the agent RNG stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Algorithm {
    PerTaskRe,
    OracleRt,
    /// RT handed a representation at planted subspace error `eps`.
    PlantedRt { eps: f64 },
    SeqRepL,
    AdaRepL,
    Random,
    TabularQ,
    DeepQ,
    RepAgent,
    OdNull,
    OdAlternative,
}

impl Algorithm {
    pub fn label(&self) -> String {
        match self {
            Algorithm::PerTaskRe => "per-task-re".into(),
            Algorithm::OracleRt => "oracle-rt".into(),
            Algorithm::PlantedRt { eps } => format!("rt-eps-{eps}"),
            Algorithm::SeqRepL => "seqrepl".into(),
            Algorithm::AdaRepL => "adarepl".into(),
            Algorithm::Random => "random".into(),
            Algorithm::TabularQ => "tabular-q".into(),
            Algorithm::DeepQ => "deep-q".into(),
            Algorithm::RepAgent => "rep-agent".into(),
            Algorithm::OdNull => "od-null".into(),
            Algorithm::OdAlternative => "od-alternative".into(),
        }
    }

    /// All planted-error runs share one id, so they see the same tilt.
    pub fn id(&self) -> u64 {
        match self {
            Algorithm::PerTaskRe => 0,
            Algorithm::OracleRt => 1,
            Algorithm::PlantedRt { .. } => 2,
            Algorithm::SeqRepL => 3,
            Algorithm::AdaRepL => 4,
            Algorithm::Random => 5,
            Algorithm::TabularQ => 6,
            Algorithm::DeepQ => 7,
            Algorithm::RepAgent => 8,
            Algorithm::OdNull => 9,
            Algorithm::OdAlternative => 10,
        }
    }
}

pub fn algorithms(cfg: &ExperimentConfig) -> Vec<Algorithm> {
    use Algorithm::*;
    match cfg.kind {
        ExperimentKind::ScalingRe => vec![PerTaskRe],
        ExperimentKind::ScalingRt => vec![PerTaskRe, OracleRt],
        ExperimentKind::Theorem1Sweep => cfg.epsilons.iter().map(|&eps| PlantedRt { eps }).collect(),
        ExperimentKind::SeqreplVsBaselines => vec![PerTaskRe, OracleRt, SeqRepL, AdaRepL],
        ExperimentKind::OdCalibration => vec![OdNull, OdAlternative],
        ExperimentKind::WcstComparison => vec![Random, TabularQ, DeepQ, RepAgent],
    }
}

/// Seed stream reserved for threshold calibration.
const STREAM_CALIBRATION: u64 = 2;

/// OD threshold for a run: the configured `xi_od`, else calibrated once from
/// a stream that no realization uses.
pub fn resolve_xi(cfg: &ExperimentConfig) -> Result<Option<f64>> {
    let uses_od = matches!(cfg.kind, ExperimentKind::SeqreplVsBaselines | ExperimentKind::OdCalibration);
    if !uses_od {
        return Ok(None);
    }
    if let Some(xi) = cfg.xi_od {
        return Ok(Some(xi));
    }
    let mut rng = stream(cfg.seed, u64::MAX, STREAM_CALIBRATION);
    calibrate_od_threshold(cfg.n_od(), cfg.od_calibration_trials, cfg.od_quantile, &mut rng).map(Some)
}

fn detector(cfg: &ExperimentConfig, xi: Option<f64>) -> Detector {
    match (cfg.noise, xi) {
        (NoiseModel::None, _) => Detector::Exact,
        (_, Some(xi)) => Detector::Threshold { xi },
        (_, None) => Detector::Exact,
    }
}

/// Output of [`run_experiment`].
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    pub xi_od: Option<f64>,
    /// Every row, ordered by realization, then algorithm, then round.
    pub rows: Vec<TraceRow>,
    pub aggregate: AggregateTrace,
    /// `(realization, failure code)` for each failed realization.
    pub failures: Vec<(usize, String)>,
}

impl ExperimentOutput {
    pub fn failure_rate(&self) -> f64 {
        self.failures.len() as f64 / self.config.realizations as f64
    }

    /// More than 10% of realizations failed.
    pub fn failed(&self) -> bool {
        self.failures.len() * 10 > self.config.realizations
    }

    pub fn rows_of<'a>(&'a self, algorithm: &'a str) -> impl Iterator<Item = &'a TraceRow> + 'a {
        self.rows.iter().filter(move |r| r.algorithm == algorithm)
    }
}

/// Validates, runs every realization (in parallel up to `workers`) and
/// reduces them in realization order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let xi = resolve_xi(cfg)?;
    let run_one = |i: usize| run_realization(cfg, i, xi);
    let per_realization: Vec<Result<Vec<TraceRow>>> = if cfg.workers == 1 {
        (0..cfg.realizations).map(run_one).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| Error::Config(format!("field `workers`: {e}")))?;
        pool.install(|| (0..cfg.realizations).into_par_iter().map(run_one).collect())
    };

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (i, res) in per_realization.into_iter().enumerate() {
        match res {
            Ok(r) => rows.extend(r),
            Err(e) => {
                failures.push((i, e.code().to_string()));
                rows.extend(algorithms(cfg).iter().map(|a| failure_row(cfg, a, i, e.code())));
            }
        }
    }
    let aggregate = aggregate(&rows)?;
    Ok(ExperimentOutput {
        config: cfg.clone(),
        xi_od: xi,
        rows,
        aggregate,
        failures,
    })
}

fn failure_row(cfg: &ExperimentConfig, alg: &Algorithm, realization: usize, code: &str) -> TraceRow {
    TraceRow {
        experiment_id: cfg.experiment_id.clone(),
        algorithm: alg.label(),
        realization,
        round: 0,
        task_index: 0,
        context_index: 0,
        reward: 0.0,
        inst_regret: 0.0,
        cum_regret: 0.0,
        switch_detected: false,
        failure_code: code.to_string(),
    }
}

/// Converts step records to trace rows, accumulating regret.
pub fn to_rows(cfg: &ExperimentConfig, alg: &Algorithm, realization: usize, records: &[StepRecord]) -> Vec<TraceRow> {
    let label = alg.label();
    let mut cum = 0.0;
    records
        .iter()
        .map(|s| {
            cum += s.inst_regret;
            TraceRow {
                experiment_id: cfg.experiment_id.clone(),
                algorithm: label.clone(),
                realization,
                round: s.round,
                task_index: s.task_index,
                context_index: s.context_index,
                reward: s.reward,
                inst_regret: s.inst_regret,
                cum_regret: cum,
                switch_detected: s.switch_detected,
                failure_code: String::new(),
            }
        })
        .collect()
}

fn schedule_params(cfg: &ExperimentConfig) -> Result<ScheduleParams> {
    let mut p = ScheduleParams::new(cfg.d, cfg.r, cfg.tau.clone(), cfg.n);
    p.bounds = NormBounds::new(cfg.phi_min, cfg.phi_max)?;
    p.orthogonal_contexts = cfg.orthogonal_contexts;
    p.diversity_nu = cfg.diversity_nu;
    Ok(p)
}

/// The schedule realization `i` plays.
pub fn realization_schedule(cfg: &ExperimentConfig, i: usize) -> Result<Schedule> {
    generate_schedule(&schedule_params(cfg)?, &mut stream(cfg.seed, i as u64, STREAM_ENV))
}

/// The card schedule realization `i` plays.
pub fn realization_wcst_schedule(cfg: &ExperimentConfig, i: usize) -> Result<WcstSchedule> {
    WcstSchedule::generate(
        cfg.wcst_rounds,
        cfg.rule_period,
        &mut stream(cfg.seed, i as u64, STREAM_ENV),
    )
}

/// Reward noise for realization `i`. Every algorithm gets the same draws.
pub fn realization_noise(cfg: &ExperimentConfig, i: usize) -> NoiseSource {
    NoiseSource::new(cfg.noise, stream(cfg.seed, i as u64, STREAM_NOISE))
}

pub fn realization_agent_rng(cfg: &ExperimentConfig, i: usize, alg: &Algorithm) -> StreamRng {
    agent_stream(cfg.seed, i as u64, alg.id())
}

/// Runs one algorithm on realization `i`. Exposed so a single run can be
/// reproduced outside the harness.
pub fn run_algorithm(cfg: &ExperimentConfig, i: usize, alg: &Algorithm, xi: Option<f64>) -> Result<Vec<StepRecord>> {
    let mut rng = realization_agent_rng(cfg, i, alg);
    if cfg.kind == ExperimentKind::WcstComparison {
        let s = realization_wcst_schedule(cfg, i)?;
        return Ok(match alg {
            Algorithm::Random => run_policy(&s, &mut RandomPolicy::new(rng)),
            Algorithm::TabularQ => run_policy(&s, &mut TabularQPolicy::new(QTable::new(cfg.q_lr, cfg.q_epsilon)?, rng)),
            Algorithm::DeepQ => {
                let mut net = TinyMLP::new(cfg.mlp_lr, cfg.mlp_epsilon, &mut rng);
                net.replay_capacity = cfg.replay_capacity;
                deep_q_run(&s, net, rng)?.0
            }
            Algorithm::RepAgent => wcst_rep_agent_run(&s),
            _ => return Err(Error::Config(format!("{} does not play the card task", alg.label()))),
        });
    }
    if cfg.kind == ExperimentKind::OdCalibration {
        return od_trials(cfg, i, alg, xi, &mut rng);
    }
    let s = realization_schedule(cfg, i)?;
    let mut noise = realization_noise(cfg, i);
    match alg {
        Algorithm::PerTaskRe => per_task_re_run(&s, &mut noise),
        Algorithm::OracleRt => oracle_rt_run(&s, &mut noise),
        Algorithm::PlantedRt { eps } => {
            let cfgs = s
                .contexts
                .iter()
                .map(|c| RTConfig::new(cfg.n, plant_subspace_error(&c.representation, *eps, &mut rng)?))
                .collect::<Result<Vec<_>>>()?;
            s.play(&mut noise, |t| rt_play_task(t, &cfgs[t.slot().context_index]).map(|_| ()))
        }
        Algorithm::SeqRepL => seqrepl_run(&s, cfg.r, cfg.c1, &mut noise),
        Algorithm::AdaRepL => {
            let ada = AdaRepLConfig {
                c1: cfg.c1,
                k_c: cfg.k_c,
                od: ODConfig::new(cfg.n_od(), cfg.delta, detector(cfg, xi))?,
            };
            Ok(adarepl_run(&s, cfg.r, ada, &mut noise, &mut rng)?.records)
        }
        _ => Err(Error::Config(format!("{} does not play unit-ball schedules", alg.label()))),
    }
}

/// `od_trials` probes of a fresh task each. Null tasks lie in `span(B)`;
/// alternatives add a component of norm `od_signal` in the complement. Rows
/// carry the OD statistic in `reward` and the detector output in
/// `switch_detected`.
fn od_trials(
    cfg: &ExperimentConfig,
    i: usize,
    alg: &Algorithm,
    xi: Option<f64>,
    rng: &mut StreamRng,
) -> Result<Vec<StepRecord>> {
    let mut env = stream(cfg.seed, i as u64, STREAM_ENV);
    let b = generate_representation(cfg.d, cfg.r, &mut env)?;
    let bounds = NormBounds::new(cfg.phi_min, cfg.phi_max)?;
    let od = ODConfig::new(cfg.n_od(), cfg.delta, detector(cfg, xi))?;
    let mut noise = realization_noise(cfg, i);
    let complement = b.complement();
    let mut out = Vec::with_capacity(cfg.od_trials);
    for t in 0..cfg.od_trials {
        let inside = generate_task(&b, bounds, &mut env)?;
        let theta = match alg {
            Algorithm::OdNull => inside,
            _ => {
                let u = DVector::from_fn(complement.ncols(), |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
                let off = &complement * u.normalize() * cfg.od_signal;
                TaskVector::new(inside.theta() + off)
            }
        };
        let mut session = TaskSession::single(&theta, od.n_od, &mut noise);
        let res = od_probe(&b, &od, &mut session, rng)?;
        out.push(StepRecord {
            round: t + 1,
            task_index: t,
            context_index: 0,
            action: Vec::new(),
            reward: res.statistic,
            inst_regret: 0.0,
            switch_detected: res.indicator,
        });
    }
    Ok(out)
}

/// All algorithms on realization `i`; any failure fails the realization.
pub fn run_realization(cfg: &ExperimentConfig, i: usize, xi: Option<f64>) -> Result<Vec<TraceRow>> {
    let mut rows = Vec::new();
    for alg in algorithms(cfg) {
        let records = run_algorithm(cfg, i, &alg, xi)?;
        rows.extend(to_rows(cfg, &alg, i, &records));
    }
    Ok(rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct AlgorithmSummary {
    /// Successful realizations.
    pub realizations: usize,
    /// Final cumulative regret across successful realizations; null if none.
    pub mean_cum_regret: Option<f64>,
    pub std_cum_regret: Option<f64>,
    pub mean_reward: Option<f64>,
    pub detections: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub artifact_version: String,
    pub experiment_id: String,
    pub realizations: usize,
    pub failed_realizations: usize,
    pub xi_od: Option<f64>,
    pub algorithms: BTreeMap<String, AlgorithmSummary>,
    pub config: ExperimentConfig,
    pub seed_derivation: String,
}

pub fn summarize(out: &ExperimentOutput) -> Summary {
    let mut algorithms = BTreeMap::new();
    for alg in super::algorithms(&out.config) {
        let label = alg.label();
        let fin = out.aggregate.final_regret(&label);
        let rows: Vec<&TraceRow> = out.rows_of(&label).collect();
        let summary = AlgorithmSummary {
            realizations: out.config.realizations - out.failures.len(),
            mean_cum_regret: fin.map(|s| s.mean),
            std_cum_regret: fin.map(|s| s.std),
            mean_reward: out.aggregate.mean_reward(&label),
            detections: rows.iter().filter(|r| !r.failed() && r.switch_detected).count(),
            failures: rows.iter().filter(|r| r.failed()).count(),
        };
        algorithms.insert(label, summary);
    }
    Summary {
        artifact_version: env!("CARGO_PKG_VERSION").into(),
        experiment_id: out.config.experiment_id.clone(),
        realizations: out.config.realizations,
        failed_realizations: out.failures.len(),
        xi_od: out.xi_od,
        algorithms,
        config: out.config.clone(),
        seed_derivation: format!(
            "ChaCha8Rng::seed_from_u64(mix(seed, realization, stream)); env stream {STREAM_ENV}, noise stream \
             {STREAM_NOISE}, agent streams 16 + algorithm id; example mix({}, 0, 0) = {}",
            out.config.seed,
            derive_seed(out.config.seed, 0, 0)
        ),
    }
}

/// `trace.csv` -> `trace.summary.json`.
pub fn summary_path(csv: &Path) -> PathBuf {
    csv.with_extension("summary.json")
}

/// Writes the trace CSV and the summary JSON beside it.
pub fn write_outputs(out: &ExperimentOutput, csv: &Path) -> Result<PathBuf> {
    export_csv(&out.rows, csv)?;
    let json = serde_json::to_string_pretty(&summarize(out)).map_err(|e| Error::Io(e.to_string()))?;
    let path = summary_path(csv);
    std::fs::write(&path, json + "\n")?;
    Ok(path)
}
