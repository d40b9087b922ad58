//! Python bindings. Vectors are lists of floats; matrices are lists of rows.

use nalgebra::{DMatrix, DVector};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use rand::SeedableRng;

use replearn_core::agents::{self, AdaRepLConfig, Detector, ODConfig};
use replearn_core::baselines;
use replearn_core::env::{self, NoiseModel, NoiseSource, Representation, ScheduleParams, TaskVector};
use replearn_core::harness::{self, ExperimentConfig, ExperimentOutput};
use replearn_core::rng::{self, StreamRng};
use replearn_core::wcst::{self, SortingRule, StimulusCard, WcstPolicy};

fn err(e: replearn_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn matrix(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let n = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("expected a non-empty rectangular list of rows"));
    }
    Ok(DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]))
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().cloned().collect()).collect()
}

fn noise_kind(name: &str) -> PyResult<NoiseModel> {
    match name {
        "gaussian-unit" => Ok(NoiseModel::GaussianUnit),
        "none" => Ok(NoiseModel::None),
        _ => Err(PyValueError::new_err(format!("noise must be 'gaussian-unit' or 'none', got {name:?}"))),
    }
}

fn rule(name: &str) -> PyResult<SortingRule> {
    match name {
        "shape" => Ok(SortingRule::Shape),
        "number" => Ok(SortingRule::Number),
        "color" => Ok(SortingRule::Color),
        _ => Err(PyValueError::new_err(format!("rule must be shape, number or color, got {name:?}"))),
    }
}

fn rule_name(r: SortingRule) -> &'static str {
    match r {
        SortingRule::Shape => "shape",
        SortingRule::Number => "number",
        SortingRule::Color => "color",
    }
}

/// One interaction round.
#[pyclass(name = "StepRecord", frozen, from_py_object)]
#[derive(Clone)]
struct PyStepRecord {
    #[pyo3(get)]
    round: usize,
    #[pyo3(get)]
    task_index: usize,
    #[pyo3(get)]
    context_index: usize,
    #[pyo3(get)]
    action: Vec<f64>,
    #[pyo3(get)]
    reward: f64,
    #[pyo3(get)]
    inst_regret: f64,
    #[pyo3(get)]
    switch_detected: bool,
}

#[pymethods]
impl PyStepRecord {
    fn __repr__(&self) -> String {
        format!(
            "StepRecord(round={}, task_index={}, reward={}, inst_regret={})",
            self.round, self.task_index, self.reward, self.inst_regret
        )
    }
}

fn records(v: Vec<env::StepRecord>) -> Vec<PyStepRecord> {
    v.into_iter()
        .map(|s| PyStepRecord {
            round: s.round,
            task_index: s.task_index,
            context_index: s.context_index,
            action: s.action,
            reward: s.reward,
            inst_regret: s.inst_regret,
            switch_detected: s.switch_detected,
        })
        .collect()
}

/// Contexts of tasks sharing low-rank representations, each task played for
/// `n` rounds.
#[pyclass(name = "Schedule", frozen)]
struct PySchedule {
    inner: env::Schedule,
    r: usize,
}

#[pymethods]
impl PySchedule {
    #[staticmethod]
    #[pyo3(signature = (d, r, tau, n, seed=0, orthogonal_contexts=false))]
    fn generate(d: usize, r: usize, tau: Vec<usize>, n: usize, seed: u64, orthogonal_contexts: bool) -> PyResult<Self> {
        let mut p = ScheduleParams::new(d, r, tau, n);
        p.orthogonal_contexts = orthogonal_contexts;
        let inner = env::generate_schedule(&p, &mut StreamRng::seed_from_u64(seed)).map_err(err)?;
        Ok(PySchedule { inner, r })
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.d()
    }

    #[getter]
    fn r(&self) -> usize {
        self.r
    }

    #[getter]
    fn tau(&self) -> Vec<usize> {
        self.inner.tau()
    }

    #[getter]
    fn rounds_per_task(&self) -> usize {
        self.inner.rounds_per_task
    }

    #[getter]
    fn total_rounds(&self) -> usize {
        self.inner.total_rounds()
    }

    /// `B` of each context, as rows.
    fn representations(&self) -> Vec<Vec<Vec<f64>>> {
        self.inner.contexts.iter().map(|c| rows_of(c.representation.matrix())).collect()
    }

    /// Every task coefficient in play order.
    fn tasks(&self) -> Vec<Vec<f64>> {
        self.inner
            .contexts
            .iter()
            .flat_map(|c| c.tasks.iter().map(|t| t.theta().iter().cloned().collect()))
            .collect()
    }

    /// 0-based task index played at 1-based round `t`.
    fn sigma(&self, t: usize) -> Option<usize> {
        self.inner.sigma(t).map(|s| s.task_index)
    }

    #[pyo3(signature = (noise="gaussian-unit", seed=0))]
    fn run_per_task_re(&self, noise: &str, seed: u64) -> PyResult<Vec<PyStepRecord>> {
        let mut ns = NoiseSource::new(noise_kind(noise)?, StreamRng::seed_from_u64(seed));
        baselines::per_task_re_run(&self.inner, &mut ns).map(records).map_err(err)
    }

    #[pyo3(signature = (noise="gaussian-unit", seed=0))]
    fn run_oracle_rt(&self, noise: &str, seed: u64) -> PyResult<Vec<PyStepRecord>> {
        let mut ns = NoiseSource::new(noise_kind(noise)?, StreamRng::seed_from_u64(seed));
        baselines::oracle_rt_run(&self.inner, &mut ns).map(records).map_err(err)
    }

    #[pyo3(signature = (c1=2, noise="gaussian-unit", seed=0))]
    fn run_seqrepl(&self, c1: usize, noise: &str, seed: u64) -> PyResult<Vec<PyStepRecord>> {
        let mut ns = NoiseSource::new(noise_kind(noise)?, StreamRng::seed_from_u64(seed));
        agents::seqrepl_run(&self.inner, self.r, c1, &mut ns).map(records).map_err(err)
    }

    /// AdaRepL. Without `xi_od` the detector flags any nonzero probe reward,
    /// which only makes sense for noise-free runs.
    #[pyo3(signature = (c1=2, k_c=2, n_od=None, delta=1.0, xi_od=None, noise="gaussian-unit", seed=0))]
    #[allow(clippy::too_many_arguments)]
    fn run_adarepl(
        &self,
        c1: usize,
        k_c: usize,
        n_od: Option<usize>,
        delta: f64,
        xi_od: Option<f64>,
        noise: &str,
        seed: u64,
    ) -> PyResult<Vec<PyStepRecord>> {
        let detector = xi_od.map_or(Detector::Exact, |xi| Detector::Threshold { xi });
        let n_od = n_od.unwrap_or_else(|| 8.min(self.inner.d() - self.r));
        let cfg = AdaRepLConfig {
            c1,
            k_c,
            od: ODConfig::new(n_od, delta, detector).map_err(err)?,
        };
        let mut ns = NoiseSource::new(noise_kind(noise)?, StreamRng::seed_from_u64(seed));
        let mut rng = rng::agent_stream(seed, 0, 4);
        agents::adarepl_run(&self.inner, self.r, cfg, &mut ns, &mut rng)
            .map(|run| records(run.records))
            .map_err(err)
    }
}

/// `θ/|θ|`.
#[pyfunction]
fn optimal_action(theta: Vec<f64>) -> PyResult<Vec<f64>> {
    env::optimal_action(&TaskVector::from_slice(&theta))
        .map(|x| x.iter().cloned().collect())
        .map_err(err)
}

#[pyfunction]
fn instantaneous_regret(theta: Vec<f64>, x: Vec<f64>) -> PyResult<f64> {
    env::instantaneous_regret(&TaskVector::from_slice(&theta), &DVector::from_vec(x)).map_err(err)
}

/// `|B̂ᵀB⊥|_F` for two column-orthonormal `d x r` matrices.
#[pyfunction]
fn subspace_error(b_hat: Vec<Vec<f64>>, b: Vec<Vec<f64>>) -> PyResult<f64> {
    let bh = Representation::new(matrix(&b_hat)?).map_err(err)?;
    let b = Representation::new(matrix(&b)?).map_err(err)?;
    env::subspace_error(&bh, &b).map_err(err)
}

/// Least squares for `y ≈ Xᵀθ`; `actions` holds one action per entry.
#[pyfunction]
fn least_squares(actions: Vec<Vec<f64>>, y: Vec<f64>) -> PyResult<Vec<f64>> {
    let x = matrix(&actions)?.transpose();
    agents::least_squares(&x, &DVector::from_vec(y))
        .map(|t| t.iter().cloned().collect())
        .map_err(err)
}

/// Top-`r` left singular vectors of a symmetric accumulator, as rows.
#[pyfunction]
fn estimate_representation(p_hat: Vec<Vec<f64>>, r: usize) -> PyResult<Vec<Vec<f64>>> {
    agents::estimate_representation(&matrix(&p_hat)?, r)
        .map(|b| rows_of(b.matrix()))
        .map_err(err)
}

#[pyfunction]
#[pyo3(signature = (n_od, trials=100_000, quantile=0.975, seed=0))]
fn calibrate_od_threshold(n_od: usize, trials: usize, quantile: f64, seed: u64) -> PyResult<f64> {
    harness::calibrate_od_threshold(n_od, trials, quantile, &mut StreamRng::seed_from_u64(seed)).map_err(err)
}

#[pyfunction]
fn derive_seed(base: u64, realization: u64, stream: u64) -> u64 {
    rng::derive_seed(base, realization, stream)
}

/// Reward (0 or 1) for sorting the card `(shape, number, color)` onto table card `action` (1..=4).
#[pyfunction]
fn wcst_reward(card: (u8, u8, u8), rule_name: &str, action: usize) -> PyResult<f64> {
    let c = wcst::encode_card(card.0, card.1, card.2).map_err(err)?;
    Ok(wcst::wcst_reward(&c, rule(rule_name)?, action))
}

/// The representation-learning card sorter.
#[pyclass(name = "RepresentationAgent")]
struct PyRepresentationAgent {
    inner: wcst::RepresentationAgent,
}

fn card(c: (u8, u8, u8)) -> PyResult<StimulusCard> {
    wcst::encode_card(c.0, c.1, c.2).map_err(err)
}

#[pymethods]
impl PyRepresentationAgent {
    #[new]
    fn new() -> Self {
        PyRepresentationAgent {
            inner: wcst::RepresentationAgent::new(),
        }
    }

    fn act(&mut self, c: (u8, u8, u8)) -> PyResult<usize> {
        Ok(self.inner.act(&card(c)?))
    }

    /// Returns true when the reward contradicted the current belief.
    fn learn(&mut self, c: (u8, u8, u8), action: usize, reward: f64) -> PyResult<bool> {
        Ok(self.inner.learn(&card(c)?, action, reward))
    }

    /// The locked-in rule, if any.
    fn estimate(&self) -> Option<&'static str> {
        self.inner.estimate().map(rule_name)
    }

    fn surviving_rules(&self) -> Vec<&'static str> {
        self.inner.surviving_rules().into_iter().map(rule_name).collect()
    }

    #[getter]
    fn resets(&self) -> usize {
        self.inner.resets()
    }
}

/// A finished harness run.
#[pyclass(name = "Experiment", frozen)]
struct PyExperiment {
    inner: ExperimentOutput,
}

#[pymethods]
impl PyExperiment {
    #[getter]
    fn algorithms(&self) -> Vec<String> {
        self.inner.aggregate.algorithms.clone()
    }

    #[getter]
    fn xi_od(&self) -> Option<f64> {
        self.inner.xi_od
    }

    #[getter]
    fn failed_realizations(&self) -> usize {
        self.inner.failures.len()
    }

    /// Mean over rounds of the mean per-round reward.
    fn mean_reward(&self, algorithm: &str) -> Option<f64> {
        self.inner.aggregate.mean_reward(algorithm)
    }

    /// (mean, std) of the final cumulative regret across realizations.
    fn final_regret(&self, algorithm: &str) -> Option<(f64, f64)> {
        self.inner.aggregate.final_regret(algorithm).map(|s| (s.mean, s.std))
    }

    /// Per-round (mean, min, max) of the reward.
    fn reward_band(&self, algorithm: &str) -> Vec<(f64, f64, f64)> {
        self.inner
            .aggregate
            .series(algorithm)
            .iter()
            .map(|r| (r.reward.mean, r.reward.min, r.reward.max))
            .collect()
    }

    /// Writes the trace CSV and the summary JSON; returns the JSON path.
    fn write(&self, csv_path: std::path::PathBuf) -> PyResult<String> {
        harness::write_outputs(&self.inner, &csv_path)
            .map(|p| p.display().to_string())
            .map_err(err)
    }

    fn summary_json(&self) -> String {
        serde_json::to_string(&harness::summarize(&self.inner)).expect("summary serializes")
    }
}

/// Runs an experiment from a preset and/or TOML text; TOML keys override the preset.
#[pyfunction]
#[pyo3(signature = (preset=None, config_toml=None))]
fn run_experiment(py: Python<'_>, preset: Option<&str>, config_toml: Option<&str>) -> PyResult<PyExperiment> {
    let base = match preset {
        Some(name) => {
            harness::preset(name).ok_or_else(|| PyValueError::new_err(format!("unknown preset {name:?}")))?
        }
        None => ExperimentConfig::default(),
    };
    let cfg = match config_toml {
        Some(text) => base.merged_with_toml(text).map_err(err)?,
        None => base,
    };
    let inner = py.detach(|| harness::run_experiment(&cfg)).map_err(err)?;
    Ok(PyExperiment { inner })
}

#[pyfunction]
fn presets() -> Vec<String> {
    harness::presets().into_iter().map(|p| p.experiment_id).collect()
}

#[pyfunction]
fn preset_toml(name: &str) -> PyResult<String> {
    harness::preset(name)
        .map(|p| p.to_toml_string())
        .ok_or_else(|| PyValueError::new_err(format!("unknown preset {name:?}")))
}

#[pymodule]
fn replearn(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyStepRecord>()?;
    m.add_class::<PySchedule>()?;
    m.add_class::<PyRepresentationAgent>()?;
    m.add_class::<PyExperiment>()?;
    m.add_function(wrap_pyfunction!(optimal_action, m)?)?;
    m.add_function(wrap_pyfunction!(instantaneous_regret, m)?)?;
    m.add_function(wrap_pyfunction!(subspace_error, m)?)?;
    m.add_function(wrap_pyfunction!(least_squares, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_representation, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate_od_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(derive_seed, m)?)?;
    m.add_function(wrap_pyfunction!(wcst_reward, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(presets, m)?)?;
    m.add_function(wrap_pyfunction!(preset_toml, m)?)?;
    m.add("CSV_HEADER", harness::CSV_HEADER)?;
    Ok(())
}
