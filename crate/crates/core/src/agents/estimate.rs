use nalgebra::{DMatrix, DVector};

use crate::env::Representation;
use crate::error::{Error, Result};
use crate::linalg::solve_spd;

/// Singular values closer than this are treated as tied when ordering vectors.
pub const SVD_TIE_GAP: f64 = 1e-9;

/// Normal-equation solution `(X Xᵀ)⁻¹ X Y` with actions as the columns of `x`.
pub fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    if x.ncols() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} actions but {} rewards",
            x.ncols(),
            y.len()
        )));
    }
    let gram = x * x.transpose();
    solve_spd(&gram, &(x * y))
}

fn argmax_abs(v: &DVector<f64>) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &x)| if x.abs() > bv { (i, x.abs()) } else { (bi, bv) })
        .0
}

/// The `r` leading left singular vectors of the accumulator `p_hat`.
///
/// Each vector's largest-magnitude entry is made positive; vectors whose
/// singular values differ by less than [`SVD_TIE_GAP`] are ordered by the
/// index of that entry.
pub fn estimate_representation(p_hat: &DMatrix<f64>, r: usize) -> Result<Representation> {
    let d = p_hat.nrows();
    if p_hat.ncols() != d {
        return Err(Error::DimensionMismatch("accumulator must be square".into()));
    }
    if r == 0 || r >= d {
        return Err(Error::InvalidDimension(format!("need 1 <= r < d, got d={d}, r={r}")));
    }
    let scale = p_hat.amax().max(1.0);
    if (p_hat - p_hat.transpose()).amax() > 1e-10 * scale {
        return Err(Error::InvalidBounds("accumulator is not symmetric".into()));
    }
    let svd = p_hat.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let mut triplets: Vec<(f64, DVector<f64>, usize)> = svd
        .singular_values
        .iter()
        .zip(u.column_iter())
        .map(|(&s, col)| {
            let mut v = col.into_owned();
            let k = argmax_abs(&v);
            if v[k] < 0.0 {
                v.neg_mut();
            }
            (s, v, k)
        })
        .collect();
    triplets.sort_by(|a, b| b.0.total_cmp(&a.0));
    // reorder runs of near-tied values by pivot index
    let mut start = 0;
    while start < triplets.len() {
        let mut end = start + 1;
        while end < triplets.len() && triplets[end - 1].0 - triplets[end].0 < SVD_TIE_GAP {
            end += 1;
        }
        triplets[start..end].sort_by_key(|t| t.2);
        start = end;
    }
    let sigma_r = triplets[r - 1].0;
    if !(sigma_r > 1e-12 * triplets[0].0.max(f64::MIN_POSITIVE)) {
        return Err(Error::RankDeficientAccumulator { sigma_r });
    }
    let cols: Vec<_> = triplets.into_iter().take(r).map(|t| t.1).collect();
    Representation::new(DMatrix::from_columns(&cols))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{generate_representation, generate_task, subspace_error, NormBounds};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_design() {
        let x = DMatrix::<f64>::identity(3, 3);
        let y = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert_eq!(least_squares(&x, &y).unwrap(), y);
    }

    #[test]
    fn duplicated_basis_design() {
        let x = DMatrix::from_fn(3, 6, |i, j| if j % 3 == i { 1.0 } else { 0.0 });
        let y = DVector::from_vec(vec![1.0, -2.0, 0.5, 1.0, -2.0, 0.5]);
        let th = least_squares(&x, &y).unwrap();
        assert!((th - DVector::from_vec(vec![1.0, -2.0, 0.5])).amax() < 1e-15);
    }

    #[test]
    fn rank_deficient_design() {
        let x = DMatrix::from_row_slice(2, 3, &[1.0, 1.0, 1.0, 0.0, 0.0, 0.0]);
        let y = DVector::from_vec(vec![1.0, 1.0, 1.0]);
        assert!(matches!(least_squares(&x, &y), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn leading_vectors_of_simple_accumulators() {
        let mut p = DMatrix::zeros(3, 3);
        p[(0, 0)] = 1.0;
        let b = estimate_representation(&p, 1).unwrap();
        assert_eq!(b.matrix().column(0).into_owned(), DVector::from_vec(vec![1.0, 0.0, 0.0]));
        p[(0, 0)] = 2.0;
        p[(1, 1)] = 1.0;
        let b = estimate_representation(&p, 1).unwrap();
        assert!((b.matrix()[(0, 0)] - 1.0).abs() < 1e-14);
        // σ_2 = 0 when only e₁ has been seen
        let mut q = DMatrix::zeros(3, 3);
        q[(0, 0)] = 1.0;
        assert!(matches!(
            estimate_representation(&q, 2),
            Err(Error::RankDeficientAccumulator { .. })
        ));
    }

    #[test]
    fn tie_breaking_is_by_pivot_index() {
        let mut p = DMatrix::zeros(4, 4);
        p[(2, 2)] = 1.0;
        p[(1, 1)] = 1.0;
        let b = estimate_representation(&p, 2).unwrap();
        assert_eq!(b.matrix()[(1, 0)], 1.0);
        assert_eq!(b.matrix()[(2, 1)], 1.0);
    }

    #[test]
    fn noiseless_tasks_recover_the_subspace() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let b = generate_representation(8, 2, &mut rng).unwrap();
        let mut p = DMatrix::zeros(8, 8);
        for _ in 0..6 {
            let t = generate_task(&b, NormBounds::default(), &mut rng).unwrap();
            p.ger(1.0, t.theta(), t.theta(), 1.0);
        }
        let b_hat = estimate_representation(&p, 2).unwrap();
        assert!(subspace_error(&b_hat, &b).unwrap() <= 1e-8);
        // full eigendecomposition oracle: projector onto the top-2 eigenspace
        let eig = nalgebra::SymmetricEigen::new(p.clone());
        let mut idx: Vec<usize> = (0..8).collect();
        idx.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
        let top = DMatrix::from_columns(&[eig.eigenvectors.column(idx[0]), eig.eigenvectors.column(idx[1])]);
        let proj_oracle = &top * top.transpose();
        let proj = b_hat.matrix() * b_hat.matrix().transpose();
        assert!((proj - proj_oracle).amax() < 1e-8);
    }
}
