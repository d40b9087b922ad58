use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::types::{NoiseSource, Representation, TaskVector};
use crate::error::{Error, Result};

/// Slack on the unit-ball constraint for actions built by floating-point arithmetic.
pub(crate) const ACTION_NORM_SLACK: f64 = 1e-10;

/// The maximizer of `xᵀθ` over the unit ball, `θ / |θ|`.
pub fn optimal_action(theta: &TaskVector) -> Result<DVector<f64>> {
    let n = theta.norm();
    if !(n > 0.0) {
        return Err(Error::DegenerateTask);
    }
    Ok(theta.theta() / n)
}

fn check_action(theta: &TaskVector, x: &DVector<f64>) -> Result<()> {
    if x.len() != theta.dim() {
        return Err(Error::DimensionMismatch(format!(
            "action has length {}, task has d={}",
            x.len(),
            theta.dim()
        )));
    }
    let norm = x.norm();
    if !(norm <= 1.0 + ACTION_NORM_SLACK) {
        return Err(Error::ActionOutsideSet { norm });
    }
    Ok(())
}

/// Plays `x` against `theta`: `xᵀθ + η`.
pub fn step(theta: &TaskVector, x: &DVector<f64>, noise: &mut NoiseSource) -> Result<f64> {
    check_action(theta, x)?;
    Ok(x.dot(theta.theta()) + noise.draw())
}

/// `(x* - x)ᵀθ`, clamped at zero against rounding.
pub fn instantaneous_regret(theta: &TaskVector, x: &DVector<f64>) -> Result<f64> {
    check_action(theta, x)?;
    let best = optimal_action(theta)?;
    Ok((best - x).dot(theta.theta()).max(0.0))
}

/// Whether every contiguous window of `window` tasks has
/// `σ_r(W Wᵀ) >= nu`, where `W` stacks the window's coefficients as columns.
pub fn check_diversity(tasks: &[TaskVector], window: usize, r: usize, nu: f64) -> Result<bool> {
    if window == 0 || window > tasks.len() {
        return Err(Error::InvalidWindow {
            window,
            len: tasks.len(),
        });
    }
    let d = tasks[0].dim();
    if r == 0 || r > d {
        return Err(Error::InvalidDimension(format!("need 1 <= r <= d, got r={r}, d={d}")));
    }
    for w in tasks.windows(window) {
        let mut gram = DMatrix::<f64>::zeros(d, d);
        for t in w {
            gram.ger(1.0, t.theta(), t.theta(), 1.0);
        }
        let mut eig: Vec<f64> = SymmetricEigen::new(gram).eigenvalues.iter().cloned().collect();
        eig.sort_by(|a, b| b.total_cmp(a));
        if eig[r - 1] < nu {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `|B̂ᵀ B⊥|_F`: how much of the estimate leaks out of the true subspace.
pub fn subspace_error(b_hat: &Representation, b: &Representation) -> Result<f64> {
    if b_hat.d() != b.d() || b_hat.r() != b.r() {
        return Err(Error::DimensionMismatch(format!(
            "estimate is {}x{}, truth is {}x{}",
            b_hat.d(),
            b_hat.r(),
            b.d(),
            b.r()
        )));
    }
    Ok((b_hat.matrix().transpose() * b.complement()).norm())
}
