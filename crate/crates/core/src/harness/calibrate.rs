use rand::Rng;
use rand_distr::StandardNormal;

use crate::agents::od_statistic;
use crate::error::{Error, Result};

pub const MIN_CALIBRATION_TRIALS: usize = 10_000;

/// Empirical `quantile` (nearest rank) of `| |Y|₂ - √n_od |` with `Y` a
/// vector of `n_od` standard normals.
pub fn calibrate_od_threshold<R: Rng + ?Sized>(n_od: usize, trials: usize, quantile: f64, rng: &mut R) -> Result<f64> {
    if n_od == 0 {
        return Err(Error::Config("n_od must be positive".into()));
    }
    if trials < MIN_CALIBRATION_TRIALS {
        return Err(Error::Config(format!("need at least {MIN_CALIBRATION_TRIALS} trials, got {trials}")));
    }
    if !(quantile > 0.0 && quantile < 1.0) {
        return Err(Error::Config(format!("quantile must lie in (0, 1), got {quantile}")));
    }
    let mut y = vec![0.0; n_od];
    let mut stats: Vec<f64> = (0..trials)
        .map(|_| {
            for v in y.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            od_statistic(&y)
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    Ok(nearest_rank(&stats, quantile))
}

/// `sorted[⌈q·n⌉ - 1]`.
pub fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    let k = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[k - 1]
}
