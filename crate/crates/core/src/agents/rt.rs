use nalgebra::{DMatrix, DVector};

use super::re::ceil_scaled_sqrt;
use super::{commit_action, EtcOutcome};
use crate::env::{Representation, TaskSession};
use crate::error::{Error, Result};
use crate::linalg::solve_spd;

/// Explore-then-commit restricted to `span(B̂)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RTConfig {
    pub horizon: usize,
    pub b_hat: Representation,
    /// Exploration length `⌈r√N⌉`.
    pub n2: usize,
}

impl RTConfig {
    pub fn new(horizon: usize, b_hat: Representation) -> Result<Self> {
        let n2 = ceil_scaled_sqrt(b_hat.r(), horizon);
        if n2 > horizon {
            return Err(Error::Config(format!(
                "RT exploration length {n2} exceeds horizon {horizon}"
            )));
        }
        Ok(RTConfig { horizon, b_hat, n2 })
    }
}

/// Plays one task with RT: cycle the columns of `B̂` for `n2` rounds, fit
/// `α̂ = (B̂ᵀXXᵀB̂)⁻¹B̂ᵀXY`, set `θ̂ = B̂α̂` and commit to `θ̂/|θ̂|`.
pub fn rt_play_task(session: &mut TaskSession<'_>, cfg: &RTConfig) -> Result<EtcOutcome> {
    let b = cfg.b_hat.matrix();
    let (d, r) = b.shape();
    if d != session.dim() {
        return Err(Error::DimensionMismatch(format!("B̂ has d={d} but task d={}", session.dim())));
    }
    if cfg.horizon > session.remaining() {
        return Err(Error::BudgetExhausted {
            played: session.played(),
        });
    }
    let mut x = DMatrix::zeros(d, cfg.n2);
    let mut y = DVector::zeros(cfg.n2);
    for t in 0..cfg.n2 {
        let a = b.column(t % r).into_owned();
        y[t] = session.play(&a)?;
        x.set_column(t, &a);
    }
    let bx = b.transpose() * &x;
    let gram = &bx * bx.transpose();
    let alpha_hat = solve_spd(&gram, &(&bx * &y))?;
    let theta_hat = b * alpha_hat;
    let (action, fallback) = commit_action(&theta_hat);
    for _ in cfg.n2..cfg.horizon {
        session.play(&action)?;
    }
    Ok(EtcOutcome {
        theta_hat,
        explored: cfg.n2,
        fallback,
    })
}
