use nalgebra::{DMatrix, DVector};

use super::{commit_action, least_squares, EtcOutcome};
use crate::env::TaskSession;
use crate::error::{Error, Result};

/// `⌈k·√n⌉`, computed exactly in integers as `⌈√(k²n)⌉`.
pub fn ceil_scaled_sqrt(k: usize, n: usize) -> usize {
    let target = (k as u128) * (k as u128) * (n as u128);
    let mut s = (target as f64).sqrt() as u128;
    while s * s > target {
        s -= 1;
    }
    while s * s < target {
        s += 1;
    }
    s as usize
}

/// Explore-then-commit over all of `R^d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct REConfig {
    pub horizon: usize,
    pub d: usize,
    /// Exploration length `⌈d√N⌉`.
    pub n1: usize,
}

impl REConfig {
    pub fn new(horizon: usize, d: usize) -> Result<Self> {
        let n1 = ceil_scaled_sqrt(d, horizon);
        if d == 0 || n1 > horizon {
            return Err(Error::Config(format!(
                "RE exploration length {n1} exceeds horizon {horizon} (need N >= d^2 = {})",
                d * d
            )));
        }
        Ok(REConfig { horizon, d, n1 })
    }

    /// Like [`REConfig::new`] but caps exploration at the horizon. Used when
    /// probing rounds have eaten into a task's budget.
    pub fn clamped(horizon: usize, d: usize) -> Result<Self> {
        if d == 0 || horizon < d {
            return Err(Error::Config(format!("horizon {horizon} cannot identify d={d} coefficients")));
        }
        Ok(REConfig {
            horizon,
            d,
            n1: ceil_scaled_sqrt(d, horizon).min(horizon),
        })
    }
}

/// Plays one task with RE: cycle the standard basis for `n1` rounds, fit
/// `θ̂` by least squares, then commit to `θ̂/|θ̂|` for the rest of the horizon.
pub fn re_play_task(session: &mut TaskSession<'_>, cfg: &REConfig) -> Result<EtcOutcome> {
    let d = session.dim();
    if cfg.d != d {
        return Err(Error::DimensionMismatch(format!("config d={} but task d={d}", cfg.d)));
    }
    if cfg.horizon > session.remaining() {
        return Err(Error::BudgetExhausted {
            played: session.played(),
        });
    }
    let mut x = DMatrix::zeros(d, cfg.n1);
    let mut y = DVector::zeros(cfg.n1);
    for t in 0..cfg.n1 {
        let mut a = DVector::zeros(d);
        a[t % d] = 1.0;
        y[t] = session.play(&a)?;
        x.set_column(t, &a);
    }
    let theta_hat = least_squares(&x, &y)?;
    let (action, fallback) = commit_action(&theta_hat);
    for _ in cfg.n1..cfg.horizon {
        session.play(&action)?;
    }
    Ok(EtcOutcome {
        theta_hat,
        explored: cfg.n1,
        fallback,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{NoiseSource, TaskVector};

    #[test]
    fn exploration_lengths() {
        assert_eq!(REConfig::new(100, 5).unwrap().n1, 50);
        assert_eq!(REConfig::new(16, 2).unwrap().n1, 8);
        assert_eq!(REConfig::new(400, 20).unwrap().n1, 400);
        assert_eq!(REConfig::new(10, 2).unwrap().n1, 7);
        assert!(REConfig::new(399, 20).is_err());
        assert_eq!(REConfig::clamped(392, 20).unwrap().n1, 392);
        assert_eq!(ceil_scaled_sqrt(3, 2), 5);
    }

    #[test]
    fn noiseless_recovery_commits_optimally() {
        let th = TaskVector::from_slice(&[1.0, 0.0]);
        let mut noise = NoiseSource::noiseless();
        let mut s = TaskSession::single(&th, 16, &mut noise);
        let out = re_play_task(&mut s, &REConfig::new(16, 2).unwrap()).unwrap();
        assert_eq!(out.theta_hat, DVector::from_vec(vec![1.0, 0.0]));
        assert!(!out.fallback);
        let recs = s.records();
        assert_eq!(recs.len(), 16);
        assert!(recs[8..].iter().all(|r| r.inst_regret == 0.0));
        // exploration alternates e1, e2
        assert_eq!(recs[1].action, vec![0.0, 1.0]);
        assert_eq!(recs[1].inst_regret, 1.0);
    }

    #[test]
    fn zero_estimate_falls_back() {
        let (a, fb) = commit_action(&DVector::zeros(3));
        assert!(fb);
        assert_eq!(a[0], 1.0);
    }
}
