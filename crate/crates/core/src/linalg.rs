//! Dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Largest condition number accepted for a Gram matrix before it is
/// treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// Orthonormal basis of the column space of a full-column-rank matrix.
///
/// Signs are fixed so the triangular factor has a positive diagonal, which
/// makes the map from Gaussian matrices to subspaces Haar-distributed.
pub fn orthonormalize(m: &DMatrix<f64>) -> DMatrix<f64> {
    let qr = m.clone().qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..q.ncols() {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    // Column-major fill order.
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// A random `rows x cols` matrix with orthonormal columns (`cols <= rows`).
pub fn random_orthonormal<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    orthonormalize(&gaussian_matrix(rows, cols, rng))
}

/// Orthonormal basis of the orthogonal complement of `span(b)`, where `b`
/// has orthonormal columns.
///
/// Greedy Gram-Schmidt over the standard basis: at each step the candidate
/// with the largest residual is taken, with one re-orthogonalization pass.
pub fn orthogonal_complement(b: &DMatrix<f64>) -> DMatrix<f64> {
    let d = b.nrows();
    let k = d - b.ncols();
    let mut basis: Vec<DVector<f64>> = b.column_iter().map(|c| c.into_owned()).collect();
    let mut out = Vec::with_capacity(k);
    let mut used = vec![false; d];
    for _ in 0..k {
        let mut best: Option<(usize, DVector<f64>, f64)> = None;
        for i in (0..d).filter(|&i| !used[i]) {
            let mut v = DVector::zeros(d);
            v[i] = 1.0;
            for _ in 0..2 {
                for q in &basis {
                    let p = q.dot(&v);
                    v.axpy(-p, q, 1.0);
                }
            }
            let n = v.norm();
            if best.as_ref().is_none_or(|(_, _, bn)| n > *bn) {
                best = Some((i, v, n));
            }
        }
        let (i, v, n) = best.expect("complement candidate");
        used[i] = true;
        let v = v / n;
        basis.push(v.clone());
        out.push(v);
    }
    if out.is_empty() {
        DMatrix::zeros(d, 0)
    } else {
        DMatrix::from_columns(&out)
    }
}

/// Condition number of a symmetric nonnegative-definite matrix.
pub fn sym_condition(g: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(g.clone());
    let max = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Solves `g z = rhs` for a well-conditioned symmetric positive-definite `g`.
pub fn solve_spd(g: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let cond = sym_condition(g);
    if !(cond <= MAX_CONDITION) {
        return Err(Error::RankDeficient(format!("condition number {cond:e}")));
    }
    let chol = g
        .clone()
        .cholesky()
        .ok_or_else(|| Error::RankDeficient("Gram matrix is not positive definite".into()))?;
    Ok(chol.solve(rhs))
}

/// `max |a_ij - b_ij|`.
pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax()
}
