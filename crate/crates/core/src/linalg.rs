//! Small dense linear-algebra helpers shared across the crate.
//!
//! Everything here is a thin wrapper over nalgebra factorizations with the
//! conventions fixed once: QR with nonnegative diagonal, singular values in
//! decreasing order, symmetric-eigen based complements for projector-grade
//! accuracy.

use nalgebra::{DMatrix, DVector};

/// Operator (spectral) norm: the largest singular value.
pub fn opnorm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.singular_values()[0]
}

/// Smallest singular value of `m` seen as a map from its column space,
/// i.e. the minimum of `‖m c‖` over unit `c`. Zero for a matrix with more
/// columns than rows.
pub fn sigma_min_as_map(m: &DMatrix<f64>) -> f64 {
    if m.ncols() == 0 {
        return 0.0;
    }
    if m.ncols() > m.nrows() {
        return 0.0;
    }
    let sv = m.singular_values();
    sv[sv.len() - 1]
}

/// Largest and smallest singular value of `m` as a map from `ℝ^{ncols}`.
pub fn sigma_extremes(m: &DMatrix<f64>) -> (f64, f64) {
    (opnorm(m), sigma_min_as_map(m))
}

/// Thin QR with the R diagonal normalized to be nonnegative.
///
/// Columns of Q whose R pivot is negative are flipped, which makes the
/// factorization unique for full-rank input and keeps log|r_jj| well defined.
pub fn qr_positive(m: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let qr = m.clone().qr();
    let mut q = qr.q();
    let mut r = qr.r();
    let k = r.nrows().min(r.ncols());
    for j in 0..k {
        if r[(j, j)] < 0.0 {
            for i in 0..q.nrows() {
                q[(i, j)] = -q[(i, j)];
            }
            for c in j..r.ncols() {
                r[(j, c)] = -r[(j, c)];
            }
        }
    }
    (q, r)
}

/// Orthonormal basis of the orthogonal complement of the span of `frame`
/// (columns assumed orthonormal). Computed through the eigen decomposition of
/// the projector `I - F Fᵀ`, whose 0/1 spectrum keeps the split perfectly
/// conditioned.
pub fn orthonormal_complement(frame: &DMatrix<f64>) -> DMatrix<f64> {
    let d = frame.nrows();
    let k = frame.ncols();
    if k == 0 {
        return DMatrix::identity(d, d);
    }
    if k == d {
        return DMatrix::zeros(d, 0);
    }
    let proj = DMatrix::identity(d, d) - frame * frame.transpose();
    let eig = nalgebra::SymmetricEigen::new(proj);
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(d - k);
    for j in 0..d {
        if eig.eigenvalues[j] > 0.5 {
            cols.push(eig.eigenvectors.column(j).into_owned());
        }
    }
    debug_assert_eq!(cols.len(), d - k);
    DMatrix::from_columns(&cols)
}

/// Largest absolute entry, used as a cheap overflow sentinel (squaring-free,
/// so it stays finite as long as the entries do).
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.amax()
}

/// Re-orthonormalizes the columns of `m` in place via positive-diagonal QR,
/// returning the Q factor. The caller guarantees full column rank.
pub fn orthonormalize_columns(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (q, _) = qr_positive(m);
    q.columns(0, m.ncols()).into_owned()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qr_positive_diagonal() {
        let m = DMatrix::from_row_slice(3, 3, &[0.0, -2.0, 1.0, 1.0, 0.5, -1.0, -3.0, 0.2, 0.7]);
        let (q, r) = qr_positive(&m);
        for j in 0..3 {
            assert!(r[(j, j)] >= 0.0);
        }
        assert!(((&q * &r) - &m).norm() < 1e-12);
        assert!((q.transpose() * &q - DMatrix::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn singular_values_are_sorted_descending() {
        // The cascade logic relies on this nalgebra convention.
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 4.0, 0.0, 0.0, 2.0, 8.0, 1.0, 0.0, 3.0]);
        let sv = m.singular_values();
        for i in 1..sv.len() {
            assert!(sv[i - 1] >= sv[i]);
        }
    }

    #[test]
    fn complement_is_orthogonal() {
        let frame = orthonormalize_columns(&DMatrix::from_row_slice(
            4,
            2,
            &[1.0, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 1.0],
        ));
        let comp = orthonormal_complement(&frame);
        assert_eq!(comp.ncols(), 2);
        assert!((frame.transpose() * &comp).norm() < 1e-12);
        assert!((comp.transpose() * &comp - DMatrix::identity(2, 2)).norm() < 1e-12);
    }
}
