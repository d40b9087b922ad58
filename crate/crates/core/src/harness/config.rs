use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::agents::ceil_scaled_sqrt;
use crate::env::{NoiseModel, DEFAULT_DIVERSITY_NU};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// Per-task RE on independent tasks.
    ScalingRe,
    /// Per-task RE against RT with the true representation.
    ScalingRt,
    /// RT with planted subspace errors, one series per entry of `epsilons`.
    Theorem1Sweep,
    /// Per-task RE, oracle RT, SeqRepL and AdaRepL on one schedule.
    SeqreplVsBaselines,
    /// OD statistic under the noise-only null and under a tilted alternative.
    OdCalibration,
    /// Random, tabular-Q, Deep-Q and the representation agent on the card task.
    WcstComparison,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::ScalingRe => "scaling-re",
            ExperimentKind::ScalingRt => "scaling-rt",
            ExperimentKind::Theorem1Sweep => "theorem1-sweep",
            ExperimentKind::SeqreplVsBaselines => "seqrepl-vs-baselines",
            ExperimentKind::OdCalibration => "od-calibration",
            ExperimentKind::WcstComparison => "wcst-comparison",
        }
    }

    pub fn unit_ball(self) -> bool {
        self != ExperimentKind::WcstComparison
    }
}

/// One experiment. Serialized as a flat TOML document; absent keys take the
/// defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment_id: String,
    pub kind: ExperimentKind,
    pub d: usize,
    pub r: usize,
    /// Rounds per task.
    pub n: usize,
    /// Tasks per context; the context count is `tau.len()`.
    pub tau: Vec<usize>,
    pub orthogonal_contexts: bool,
    pub noise: NoiseModel,
    pub phi_min: f64,
    pub phi_max: f64,
    pub diversity_nu: f64,

    pub c1: usize,
    /// Defaults to `min(8, d - r)`.
    pub n_od: Option<usize>,
    pub delta: f64,
    /// Calibrated from `od_quantile` when absent.
    pub xi_od: Option<f64>,
    pub od_quantile: f64,
    pub od_calibration_trials: usize,
    pub k_c: usize,
    /// Norm of the out-of-subspace component in od-calibration alternatives.
    pub od_signal: f64,
    /// Probe trials per realization in od-calibration.
    pub od_trials: usize,

    pub epsilons: Vec<f64>,

    pub wcst_rounds: usize,
    pub rule_period: usize,
    pub q_lr: f64,
    pub q_epsilon: f64,
    pub mlp_lr: f64,
    pub mlp_epsilon: f64,
    pub replay_capacity: usize,

    pub realizations: usize,
    pub seed: u64,
    /// 0 uses every available core.
    pub workers: usize,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment_id: "experiment".into(),
            kind: ExperimentKind::SeqreplVsBaselines,
            d: 20,
            r: 2,
            n: 400,
            tau: vec![60],
            orthogonal_contexts: false,
            noise: NoiseModel::GaussianUnit,
            phi_min: 0.5,
            phi_max: 1.0,
            diversity_nu: DEFAULT_DIVERSITY_NU,
            c1: 2,
            n_od: None,
            delta: 1.0,
            xi_od: None,
            od_quantile: 0.975,
            od_calibration_trials: 100_000,
            k_c: 2,
            od_signal: 0.5,
            od_trials: 10_000,
            epsilons: vec![0.0, 0.05, 0.1, 0.2],
            wcst_rounds: 600,
            rule_period: 20,
            q_lr: 0.1,
            q_epsilon: 0.1,
            mlp_lr: 0.01,
            mlp_epsilon: 0.1,
            replay_capacity: 0,
            realizations: 20,
            seed: 0,
            workers: 1,
            out: None,
        }
    }
}

fn field(name: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("field `{name}`: {msg}"))
}

fn positive(name: &str, v: usize) -> Result<()> {
    if v == 0 {
        return Err(field(name, "must be positive"));
    }
    Ok(())
}

fn probability(name: &str, v: f64, open: bool) -> Result<()> {
    let ok = if open { v > 0.0 && v < 1.0 } else { (0.0..=1.0).contains(&v) };
    if !ok {
        let range = if open { "(0, 1)" } else { "[0, 1]" };
        return Err(field(name, format!("must lie in {range}, got {v}")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Overlays the keys present in `s` on top of `self`.
    pub fn merged_with_toml(&self, s: &str) -> Result<Self> {
        let mut base = toml::Table::try_from(self).map_err(|e| Error::Config(e.to_string()))?;
        let overlay: toml::Table = s.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        for (k, v) in overlay {
            base.insert(k, v);
        }
        base.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))
    }

    pub fn n_od(&self) -> usize {
        self.n_od.unwrap_or_else(|| 8.min(self.d.saturating_sub(self.r)))
    }

    /// RE exploration length `⌈d√N⌉`.
    pub fn n1(&self) -> usize {
        ceil_scaled_sqrt(self.d, self.n)
    }

    /// Checks every field the chosen kind reads. Runs before any computation.
    pub fn validate(&self) -> Result<()> {
        if self.experiment_id.is_empty() || self.experiment_id.contains([',', '\n', '"']) {
            return Err(field("experiment_id", "must be non-empty without commas, quotes or newlines"));
        }
        positive("realizations", self.realizations)?;
        if self.kind == ExperimentKind::WcstComparison {
            positive("wcst_rounds", self.wcst_rounds)?;
            positive("rule_period", self.rule_period)?;
            if self.q_lr <= 0.0 || self.q_lr > 1.0 {
                return Err(field("q_lr", format!("must lie in (0, 1], got {}", self.q_lr)));
            }
            probability("q_epsilon", self.q_epsilon, false)?;
            probability("mlp_epsilon", self.mlp_epsilon, false)?;
            if !(self.mlp_lr > 0.0 && self.mlp_lr.is_finite()) {
                return Err(field("mlp_lr", "must be positive and finite"));
            }
            return Ok(());
        }

        positive("d", self.d)?;
        positive("r", self.r)?;
        positive("n", self.n)?;
        if self.r >= self.d {
            return Err(field("r", format!("must be below d = {}, got {}", self.d, self.r)));
        }
        if !(self.phi_min > 0.0 && self.phi_min <= self.phi_max && self.phi_max.is_finite()) {
            return Err(field(
                "phi_min",
                format!("need 0 < phi_min <= phi_max, got {} and {}", self.phi_min, self.phi_max),
            ));
        }
        if self.kind == ExperimentKind::OdCalibration {
            return self.validate_od();
        }

        if self.tau.is_empty() {
            return Err(field("tau", "needs at least one context"));
        }
        if let Some(i) = self.tau.iter().position(|&t| t == 0) {
            return Err(field("tau", format!("entry {i} must be positive")));
        }
        if self.orthogonal_contexts && self.tau.len() * self.r > self.d {
            return Err(field(
                "orthogonal_contexts",
                format!("{} contexts of rank {} do not fit in dimension {}", self.tau.len(), self.r, self.d),
            ));
        }
        if !(self.diversity_nu >= 0.0) {
            return Err(field("diversity_nu", "must be nonnegative"));
        }
        if self.n1() > self.n {
            return Err(field(
                "n",
                format!("RE needs ceil(d*sqrt(N)) = {} <= N = {}; raise n or lower d", self.n1(), self.n),
            ));
        }
        if ceil_scaled_sqrt(self.r, self.n) > self.n {
            return Err(field("n", "RT exploration ceil(r*sqrt(N)) exceeds N"));
        }
        match self.kind {
            ExperimentKind::Theorem1Sweep => {
                if self.epsilons.is_empty() {
                    return Err(field("epsilons", "needs at least one value"));
                }
                if self.d < 2 * self.r {
                    return Err(field("d", "planting subspace errors needs d >= 2r"));
                }
                let max = (self.r as f64).sqrt();
                if let Some(e) = self.epsilons.iter().find(|e| !(0.0..=max).contains(*e)) {
                    return Err(field("epsilons", format!("{e} outside [0, {max}]")));
                }
            }
            ExperimentKind::SeqreplVsBaselines => {
                positive("c1", self.c1)?;
                positive("k_c", self.k_c)?;
                self.validate_od()?;
            }
            _ => {}
        }
        Ok(())
    }

    fn validate_od(&self) -> Result<()> {
        let n_od = self.n_od();
        if n_od == 0 || n_od > self.d - self.r {
            return Err(field("n_od", format!("must lie in [1, d - r = {}], got {n_od}", self.d - self.r)));
        }
        if n_od > self.n {
            return Err(field("n_od", format!("probes {n_od} exceed the per-task budget {}", self.n)));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(field("delta", format!("must lie in (0, 1], got {}", self.delta)));
        }
        match self.xi_od {
            Some(xi) if !(xi > 0.0 && xi.is_finite()) => {
                return Err(field("xi_od", format!("must be positive, got {xi}")));
            }
            Some(_) => {}
            None => {
                probability("od_quantile", self.od_quantile, true)?;
                if self.od_calibration_trials < 10_000 {
                    return Err(field("od_calibration_trials", "needs at least 10000 trials"));
                }
            }
        }
        if self.kind == ExperimentKind::OdCalibration {
            positive("od_trials", self.od_trials)?;
            if !(self.od_signal >= 0.0 && self.od_signal.is_finite()) {
                return Err(field("od_signal", "must be nonnegative"));
            }
        }
        Ok(())
    }
}

fn base(id: &str, kind: ExperimentKind) -> ExperimentConfig {
    ExperimentConfig {
        experiment_id: id.into(),
        kind,
        ..ExperimentConfig::default()
    }
}

/// Named configurations. Together they run every algorithm at least once.
pub fn presets() -> Vec<ExperimentConfig> {
    vec![
        ExperimentConfig {
            d: 8,
            n: 2500,
            tau: vec![1],
            realizations: 50,
            ..base("scaling-re", ExperimentKind::ScalingRe)
        },
        ExperimentConfig {
            d: 16,
            n: 2500,
            tau: vec![1],
            realizations: 50,
            ..base("scaling-rt", ExperimentKind::ScalingRt)
        },
        ExperimentConfig {
            d: 16,
            n: 2500,
            tau: vec![1],
            realizations: 50,
            ..base("theorem1-sweep", ExperimentKind::Theorem1Sweep)
        },
        ExperimentConfig {
            tau: vec![60],
            ..base("seqrepl-single-context", ExperimentKind::SeqreplVsBaselines)
        },
        ExperimentConfig {
            tau: vec![30, 30],
            orthogonal_contexts: true,
            realizations: 100,
            ..base("adarepl-two-contexts", ExperimentKind::SeqreplVsBaselines)
        },
        ExperimentConfig {
            n_od: Some(16),
            realizations: 1,
            ..base("od-calibration", ExperimentKind::OdCalibration)
        },
        base("wcst-comparison", ExperimentKind::WcstComparison),
    ]
}

pub fn preset(name: &str) -> Option<ExperimentConfig> {
    presets().into_iter().find(|p| p.experiment_id == name)
}
