use nalgebra::DVector;
use rand::Rng;

use crate::env::{Representation, TaskSession};
use crate::error::{Error, Result};
use crate::linalg::random_orthonormal;

/// Any probe reward above this flags an outlier under the exact detector.
pub const EXACT_DETECTION_TOL: f64 = 1e-8;

/// How probe rewards are turned into an outlier decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Detector {
    /// Outlier iff `| |Y|₂ - √n_od | > xi`. Assumes unit-variance noise.
    Threshold { xi: f64 },
    /// Outlier iff some `|y_t| > EXACT_DETECTION_TOL`. For noise-free play.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ODConfig {
    pub n_od: usize,
    /// Probe scale; probes have norm exactly `delta`.
    pub delta: f64,
    pub detector: Detector,
}

impl ODConfig {
    pub fn new(n_od: usize, delta: f64, detector: Detector) -> Result<Self> {
        if n_od == 0 {
            return Err(Error::Config("n_od must be positive".into()));
        }
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::Config(format!("probe scale delta must lie in (0, 1], got {delta}")));
        }
        if let Detector::Threshold { xi } = detector {
            if !(xi >= 0.0) {
                return Err(Error::Config(format!("xi_od must be nonnegative, got {xi}")));
            }
        }
        Ok(ODConfig { n_od, delta, detector })
    }

    /// `n_od = min(8, d - r)`, `delta = 1`.
    pub fn default_for(d: usize, r: usize, detector: Detector) -> Result<Self> {
        ODConfig::new(8.min(d.saturating_sub(r)), 1.0, detector)
    }
}

/// `| |y|₂ - √n |`.
pub fn od_statistic(y: &[f64]) -> f64 {
    let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    (norm - (y.len() as f64).sqrt()).abs()
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdOutcome {
    pub indicator: bool,
    pub statistic: f64,
    pub rewards: Vec<f64>,
}

/// Probes the orthogonal complement of `span(B̂)` with the columns of
/// `δ·B̂⊥Q`, `Q` a random `(d-r) x n_od` orthonormal matrix, and tests the
/// rewards against the noise-only level.
pub fn od_probe<R: Rng + ?Sized>(
    b_hat: &Representation,
    cfg: &ODConfig,
    session: &mut TaskSession<'_>,
    rng: &mut R,
) -> Result<OdOutcome> {
    let available = b_hat.d() - b_hat.r();
    if cfg.n_od > available {
        return Err(Error::InvalidProbeCount {
            n_od: cfg.n_od,
            available,
        });
    }
    if session.remaining() < cfg.n_od {
        return Err(Error::BudgetExhausted {
            played: session.played(),
        });
    }
    let q = random_orthonormal(available, cfg.n_od, rng);
    let m = b_hat.complement() * q * cfg.delta;
    let rewards = m
        .column_iter()
        .map(|c| session.play(&DVector::from(c)))
        .collect::<Result<Vec<_>>>()?;
    let statistic = od_statistic(&rewards);
    let indicator = match cfg.detector {
        Detector::Threshold { xi } => statistic > xi,
        Detector::Exact => rewards.iter().any(|y| y.abs() > EXACT_DETECTION_TOL),
    };
    Ok(OdOutcome {
        indicator,
        statistic,
        rewards,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{NoiseModel, NoiseSource, TaskVector};
    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn statistic_arithmetic() {
        assert_eq!(od_statistic(&[2.0, 2.0, 2.0, 2.0]), 2.0);
        assert_eq!(od_statistic(&[1.0]), 0.0);
    }

    #[test]
    fn every_probe_rewarding_two_is_flagged() {
        // d=5, r=1: Q is a square 4x4 rotation, so θ = 2·Σ m_t gives y_t = 2
        let b_hat = Representation::from_axes(5, &[0]).unwrap();
        let cfg = ODConfig::new(4, 1.0, Detector::Threshold { xi: 1.0 }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q = random_orthonormal(4, 4, &mut rng.clone());
        let m: DMatrix<f64> = b_hat.complement() * q;
        let theta = TaskVector::new(m.column_sum() * 2.0);
        let mut noise = NoiseSource::noiseless();
        let mut s = TaskSession::single(&theta, 4, &mut noise);
        let out = od_probe(&b_hat, &cfg, &mut s, &mut rng).unwrap();
        for y in &out.rewards {
            assert!((y - 2.0).abs() < 1e-12);
        }
        assert!((out.statistic - 2.0).abs() < 1e-12);
        assert!(out.indicator);
    }

    #[test]
    fn probes_have_norm_delta_and_respect_count() {
        let b_hat = Representation::from_axes(6, &[0, 1]).unwrap();
        let theta = TaskVector::from_slice(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let mut noise = NoiseSource::new(NoiseModel::GaussianUnit, ChaCha8Rng::seed_from_u64(1));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let cfg = ODConfig::new(4, 0.5, Detector::Exact).unwrap();
        let mut s = TaskSession::single(&theta, 10, &mut noise);
        od_probe(&b_hat, &cfg, &mut s, &mut rng).unwrap();
        for r in s.records() {
            assert!((DVector::from_vec(r.action.clone()).norm() - 0.5).abs() < 1e-12);
        }
        let too_many = ODConfig::new(5, 1.0, Detector::Exact).unwrap();
        assert_eq!(
            od_probe(&b_hat, &too_many, &mut s, &mut rng),
            Err(Error::InvalidProbeCount { n_od: 5, available: 4 })
        );
    }

    #[test]
    fn exact_detector_on_noiseless_tasks() {
        let b_hat = Representation::from_axes(6, &[0, 1]).unwrap();
        let cfg = ODConfig::new(4, 1.0, Detector::Exact).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut noise = NoiseSource::noiseless();
        let inside = TaskVector::from_slice(&[0.6, 0.8, 0.0, 0.0, 0.0, 0.0]);
        let mut s = TaskSession::single(&inside, 4, &mut noise);
        assert!(!od_probe(&b_hat, &cfg, &mut s, &mut rng).unwrap().indicator);
        let outside = TaskVector::from_slice(&[0.0, 0.0, 0.0, 0.0, 0.6, 0.0]);
        let mut s = TaskSession::single(&outside, 4, &mut noise);
        assert!(od_probe(&b_hat, &cfg, &mut s, &mut rng).unwrap().indicator);
    }

    #[test]
    fn null_norm_mean_matches_chi_approximation() {
        // θ in span(B̂): Y is i.i.d. standard normal; E|Y| ≈ √n (1 - 1/(4n))
        let b_hat = Representation::from_axes(20, &[0, 1]).unwrap();
        let theta = TaskVector::from_slice(&{
            let mut v = [0.0; 20];
            v[0] = 0.8;
            v
        });
        let cfg = ODConfig::new(16, 1.0, Detector::Threshold { xi: 1.0 }).unwrap();
        let mut noise = NoiseSource::new(NoiseModel::GaussianUnit, ChaCha8Rng::seed_from_u64(10));
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let trials = 20_000;
        let mut total = 0.0;
        for _ in 0..trials {
            let mut s = TaskSession::single(&theta, 16, &mut noise);
            let out = od_probe(&b_hat, &cfg, &mut s, &mut rng).unwrap();
            total += out.rewards.iter().map(|y| y * y).sum::<f64>().sqrt();
        }
        let mean = total / trials as f64;
        let expected = 4.0 * (1.0 - 1.0 / 64.0);
        assert!((mean - expected).abs() / expected < 0.01, "{mean} vs {expected}");
    }
}
