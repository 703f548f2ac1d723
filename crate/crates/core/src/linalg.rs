//! Shared dense linear-algebra helpers: SVD nullspaces and nilpotent exp/log.
//!
//! Every subspace computation in this crate goes through [`nullspace`] so
//! that rank decisions live in one audited code path.

use nalgebra::{DMatrix, DVector};

/// Relative singular-value threshold used for all rank decisions.
pub const RANK_REL_TOL: f64 = 1e-10;

/// Orthonormal basis of the (right) nullspace of `m`, via SVD.
///
/// Singular values below `RANK_REL_TOL * sigma_max` count as zero. The
/// returned vectors are rows of V^T, hence orthonormal.
pub fn nullspace(m: &DMatrix<f64>) -> Vec<DVector<f64>> {
    let ncols = m.ncols();
    if ncols == 0 {
        return Vec::new();
    }
    // Pad with zero rows so the thin SVD carries a full ncols x ncols V^T.
    let work = if m.nrows() < ncols {
        let mut padded = DMatrix::zeros(ncols, ncols);
        padded.view_mut((0, 0), (m.nrows(), ncols)).copy_from(m);
        padded
    } else {
        m.clone()
    };
    let svd = work.svd(false, true);
    let v_t = svd.v_t.expect("SVD requested V^T");
    let sigma = &svd.singular_values;
    let sigma_max = sigma.max();
    // absolute floor: a constraint matrix that is zero up to rounding
    // noise must yield the full space, not an empty one
    let tol = (RANK_REL_TOL * sigma_max).max(1e-13);
    let mut basis = Vec::new();
    for (idx, &s) in sigma.iter().enumerate() {
        if s <= tol {
            basis.push(v_t.row(idx).transpose());
        }
    }
    basis
}

/// Frobenius inner product of two matrices.
pub fn frobenius_inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Residual of projecting `m` onto the span of a Frobenius-orthonormal basis.
pub fn projection_residual(m: &DMatrix<f64>, basis: &[DMatrix<f64>]) -> f64 {
    let mut rem = m.clone();
    for e in basis {
        let c = frobenius_inner(m, e);
        rem -= e * c;
    }
    rem.norm()
}

/// Column-major vectorization.
pub fn vec_of(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

/// Inverse of [`vec_of`] for an n x n matrix.
pub fn mat_of(v: &DVector<f64>, n: usize) -> DMatrix<f64> {
    DMatrix::from_column_slice(n, n, v.as_slice())
}

/// Exponential of a nilpotent matrix by its terminating power series.
///
/// Returns `None` if the series has not terminated after `dim` terms,
/// i.e. the matrix is not nilpotent.
pub fn exp_nilpotent(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    let mut result = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for k in 1..=n {
        term = (&term * a) / k as f64;
        if term.amax() == 0.0 {
            return Some(result);
        }
        result += &term;
    }
    if (a.clone_owned().pow(n as u32)).amax() == 0.0 {
        Some(result)
    } else {
        None
    }
}

/// Logarithm of a unipotent matrix (I + N with N nilpotent) by the
/// terminating Mercator series.
pub fn log_unipotent(g: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = g.nrows();
    let nil = g - DMatrix::identity(n, n);
    if nil.clone_owned().pow(n as u32).amax() != 0.0 {
        return None;
    }
    let mut result = DMatrix::zeros(n, n);
    let mut power = DMatrix::identity(n, n);
    for k in 1..=n {
        power = &power * &nil;
        if power.amax() == 0.0 {
            break;
        }
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        result += &power * (sign / k as f64);
    }
    Some(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nullspace_of_zero_map_is_everything() {
        let m = DMatrix::zeros(3, 4);
        assert_eq!(nullspace(&m).len(), 4);
    }

    #[test]
    fn nullspace_of_full_rank_is_empty() {
        let m = DMatrix::<f64>::identity(4, 4);
        assert!(nullspace(&m).is_empty());
    }

    #[test]
    fn nullspace_vectors_annihilate() {
        // rank-1 map on R^3
        let m = DMatrix::from_row_slice(1, 3, &[1.0, 2.0, -1.0]);
        let ns = nullspace(&m);
        assert_eq!(ns.len(), 2);
        for v in &ns {
            assert!((&m * v).amax() < 1e-12);
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn nilpotent_exp_log_roundtrip() {
        let a = DMatrix::from_row_slice(3, 3, &[0.0, 1.3, 0.7, 0.0, 0.0, -2.1, 0.0, 0.0, 0.0]);
        let g = exp_nilpotent(&a).unwrap();
        let back = log_unipotent(&g).unwrap();
        assert!((back - a).amax() < 1e-14);
    }

    #[test]
    fn exp_rejects_non_nilpotent() {
        let a = DMatrix::<f64>::identity(2, 2);
        assert!(exp_nilpotent(&a).is_none());
    }
}
