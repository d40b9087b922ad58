//! Representation exploration/transfer agents and the adaptive wrapper that
//! restarts them on context changes.

mod adarepl;
mod estimate;
mod od;
mod re;
mod rt;
mod seqrepl;

pub use adarepl::{adarepl_run, AdaRepL, AdaRepLConfig, AdaRun, AdaTaskOutcome, OutlierCounter};
pub use estimate::{estimate_representation, least_squares, SVD_TIE_GAP};
pub use od::{od_probe, od_statistic, Detector, ODConfig, OdOutcome, EXACT_DETECTION_TOL};
pub use re::{ceil_scaled_sqrt, re_play_task, REConfig};
pub use rt::{rt_play_task, RTConfig};
pub use seqrepl::{seqrepl_run, Phase, SeqRepL, TaskOutcome, DEFAULT_C1};

use nalgebra::DVector;

/// Commitment action for an estimate: `θ̂/|θ̂|`, or `e_1` when `θ̂ = 0`.
/// The flag reports whether the fallback was used.
pub(crate) fn commit_action(theta_hat: &DVector<f64>) -> (DVector<f64>, bool) {
    let n = theta_hat.norm();
    if n > 0.0 && n.is_finite() {
        (theta_hat / n, false)
    } else {
        let mut e = DVector::zeros(theta_hat.len());
        e[0] = 1.0;
        (e, true)
    }
}

/// The estimate produced by an explore-then-commit task run.
#[derive(Debug, Clone, PartialEq)]
pub struct EtcOutcome {
    pub theta_hat: DVector<f64>,
    /// Exploration rounds actually played.
    pub explored: usize,
    /// The estimate was zero and a fixed unit action was committed to.
    pub fallback: bool,
}
