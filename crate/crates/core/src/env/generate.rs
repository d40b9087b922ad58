use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

use super::ops::check_diversity;
use super::types::{ContextSet, NormBounds, Representation, Schedule, TaskVector};
use crate::error::{Error, Result};
use crate::linalg::random_orthonormal;

/// Diversity floor enforced on generated contexts (windows of `2r` tasks).
pub const DEFAULT_DIVERSITY_NU: f64 = 0.05;
pub const MAX_DIVERSITY_ATTEMPTS: usize = 100;

/// Haar-random `d x r` representation.
pub fn generate_representation<R: Rng + ?Sized>(d: usize, r: usize, rng: &mut R) -> Result<Representation> {
    if r == 0 || r >= d {
        return Err(Error::InvalidDimension(format!("need 1 <= r < d, got d={d}, r={r}")));
    }
    Representation::new(random_orthonormal(d, r, rng))
}

/// `m` representations whose spans are mutually orthogonal (`m * r <= d`).
pub fn generate_orthogonal_representations<R: Rng + ?Sized>(
    d: usize,
    r: usize,
    m: usize,
    rng: &mut R,
) -> Result<Vec<Representation>> {
    if r == 0 || m * r > d || r >= d {
        return Err(Error::InvalidDimension(format!(
            "cannot fit {m} orthogonal {r}-dim subspaces in R^{d}"
        )));
    }
    let q = random_orthonormal(d, m * r, rng);
    (0..m)
        .map(|k| Representation::new(q.columns(k * r, r).into_owned()))
        .collect()
}

fn draw_alpha<R: Rng + ?Sized>(r: usize, bounds: NormBounds, rng: &mut R) -> DVector<f64> {
    let dir = loop {
        let g = DVector::from_fn(r, |_, _| rng.sample::<f64, _>(StandardNormal));
        let n = g.norm();
        if n > 1e-12 {
            break g / n;
        }
    };
    let norm = if bounds.phi_max > bounds.phi_min {
        rng.random_range(bounds.phi_min..=bounds.phi_max)
    } else {
        bounds.phi_min
    };
    dir * norm
}

/// A task `θ = Bα` with direction uniform on the sphere of `span(B)` and
/// norm uniform in `[phi_min, phi_max]`.
pub fn generate_task<R: Rng + ?Sized>(b: &Representation, bounds: NormBounds, rng: &mut R) -> Result<TaskVector> {
    let bounds = NormBounds::new(bounds.phi_min, bounds.phi_max)?;
    let alpha = draw_alpha(b.r(), bounds, rng);
    TaskVector::bounded(b.matrix() * alpha, bounds)
}

/// `count` tasks of one context. When `count >= window` the sequence is
/// resampled until every window passes [`check_diversity`].
pub fn generate_context<R: Rng + ?Sized>(
    b: Representation,
    count: usize,
    bounds: NormBounds,
    window: usize,
    nu: f64,
    rng: &mut R,
) -> Result<ContextSet> {
    let bounds = NormBounds::new(bounds.phi_min, bounds.phi_max)?;
    for _ in 0..MAX_DIVERSITY_ATTEMPTS {
        let alphas: Vec<_> = (0..count).map(|_| draw_alpha(b.r(), bounds, rng)).collect();
        let ctx = ContextSet::from_alphas(b.clone(), alphas, bounds)?;
        if count < window || window == 0 || check_diversity(&ctx.tasks, window, b.r(), nu)? {
            return Ok(ctx);
        }
    }
    Err(Error::DiversityNotMet {
        attempts: MAX_DIVERSITY_ATTEMPTS,
    })
}

/// Parameters for [`generate_schedule`].
#[derive(Debug, Clone)]
pub struct ScheduleParams {
    pub d: usize,
    pub r: usize,
    pub tau: Vec<usize>,
    pub rounds_per_task: usize,
    pub bounds: NormBounds,
    /// Draw mutually orthogonal context subspaces instead of independent ones.
    pub orthogonal_contexts: bool,
    pub diversity_window: usize,
    pub diversity_nu: f64,
}

impl ScheduleParams {
    pub fn new(d: usize, r: usize, tau: Vec<usize>, rounds_per_task: usize) -> Self {
        ScheduleParams {
            d,
            r,
            tau,
            rounds_per_task,
            bounds: NormBounds::default(),
            orthogonal_contexts: false,
            diversity_window: 2 * r,
            diversity_nu: DEFAULT_DIVERSITY_NU,
        }
    }
}

pub fn generate_schedule<R: Rng + ?Sized>(params: &ScheduleParams, rng: &mut R) -> Result<Schedule> {
    let m = params.tau.len();
    let reps = if params.orthogonal_contexts {
        generate_orthogonal_representations(params.d, params.r, m, rng)?
    } else {
        (0..m)
            .map(|_| generate_representation(params.d, params.r, rng))
            .collect::<Result<Vec<_>>>()?
    };
    let contexts = reps
        .into_iter()
        .zip(&params.tau)
        .map(|(b, &count)| {
            generate_context(
                b,
                count,
                params.bounds,
                params.diversity_window,
                params.diversity_nu,
                rng,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Schedule::new(contexts, params.rounds_per_task)
}

/// A representation at subspace error exactly `eps` from `b`: every column
/// is tilted by the same angle toward its own direction in the complement.
/// Needs `d >= 2r` and `0 <= eps <= sqrt(r)`.
pub fn plant_subspace_error<R: Rng + ?Sized>(b: &Representation, eps: f64, rng: &mut R) -> Result<Representation> {
    let (d, r) = (b.d(), b.r());
    if d < 2 * r {
        return Err(Error::InvalidDimension(format!("planting needs d >= 2r, got d={d}, r={r}")));
    }
    let max = (r as f64).sqrt();
    if !(0.0..=max).contains(&eps) {
        return Err(Error::InvalidBounds(format!("eps must lie in [0, {max}], got {eps}")));
    }
    let sin = eps / max;
    let cos = (1.0 - sin * sin).max(0.0).sqrt();
    let tilt = b.complement() * random_orthonormal(d - r, r, rng);
    Representation::new(b.matrix() * cos + tilt * sin)
}
