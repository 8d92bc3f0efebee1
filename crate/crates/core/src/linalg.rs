//! Dense complex linear algebra on orthonormal coordinates.
//!
//! Matrices here act on coordinates in the orthonormal basis `e_k/√μ_k` of a
//! weighted grid, so the Euclidean structure of `ℂⁿ` is the Hilbert
//! structure of `L²(grid)`.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

/// Largest singular value.
pub fn op_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.iter().fold(0.0f64, |a, &s| a.max(s))
}

/// Orthonormal basis of the null space of `m` (singular values `≤ tol`).
pub fn null_space(m: &CMatrix, tol: f64) -> CMatrix {
    let cols = m.ncols();
    if cols == 0 {
        return CMatrix::zeros(0, 0);
    }
    if m.nrows() == 0 {
        return CMatrix::identity(cols, cols);
    }
    // Pad to at least square so the SVD returns a full right basis.
    let rows = m.nrows().max(cols);
    let mut padded = CMatrix::zeros(rows, cols);
    padded.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let keep: Vec<usize> = (0..cols).filter(|&i| svd.singular_values[i] <= tol).collect();
    let mut out = CMatrix::zeros(cols, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        for r in 0..cols {
            out[(r, c)] = v_t[(i, r)].conj();
        }
    }
    out
}

/// Orthonormal basis of the column span of `m`, dropping directions with
/// singular value `≤ tol`.
pub fn range_basis(m: &CMatrix, tol: f64) -> CMatrix {
    let rows = m.nrows();
    if m.ncols() == 0 || rows == 0 {
        return CMatrix::zeros(rows, 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let keep: Vec<usize> = (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] > tol).collect();
    let mut out = CMatrix::zeros(rows, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        out.set_column(c, &u.column(i));
    }
    out
}

/// Orthonormal basis of the orthogonal complement of an orthonormal basis.
pub fn complement(basis: &CMatrix) -> CMatrix {
    let n = basis.nrows();
    let proj = CMatrix::identity(n, n) - basis * basis.adjoint();
    range_basis(&proj, 0.5)
}

/// Principal angles (ascending) between the spans of two orthonormal bases.
///
/// Uses the sines `σ((I − AA*)B)` so that tiny angles are resolved to
/// roughly machine precision instead of `√ε`.
pub fn principal_angles(a: &CMatrix, b: &CMatrix) -> Vec<f64> {
    let k = a.ncols().min(b.ncols());
    if k == 0 {
        return Vec::new();
    }
    let (small, big) = if a.ncols() <= b.ncols() { (a, b) } else { (b, a) };
    let resid = small - big * (big.adjoint() * small);
    let mut sines: Vec<f64> = resid.svd(false, false).singular_values.iter().map(|s| s.clamp(0.0, 1.0)).collect();
    sines.resize(k, 0.0);
    let mut angles: Vec<f64> = sines.into_iter().map(f64::asin).collect();
    angles.sort_by(f64::total_cmp);
    angles
}

/// Largest principal angle; `π/2` when the dimensions differ.
pub fn max_principal_angle(a: &CMatrix, b: &CMatrix) -> f64 {
    if a.ncols() != b.ncols() {
        return std::f64::consts::FRAC_PI_2;
    }
    principal_angles(a, b).into_iter().fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn null_space_of_wide_and_tall() {
        let m = CMatrix::from_row_slice(1, 3, &[c(1.0), c(0.0), c(0.0)]);
        let n = null_space(&m, 1e-12);
        assert_eq!(n.ncols(), 2);
        assert!((&m * &n).norm() < 1e-14);

        let tall = CMatrix::identity(4, 2);
        assert_eq!(null_space(&tall, 1e-12).ncols(), 0);
        assert_eq!(null_space(&CMatrix::zeros(0, 3), 1e-12).ncols(), 3);
    }

    #[test]
    fn principal_angles_of_rotated_lines() {
        let th = 0.3f64;
        let a = CMatrix::from_column_slice(2, 1, &[c(1.0), c(0.0)]);
        let b = CMatrix::from_column_slice(2, 1, &[c(th.cos()), c(th.sin())]);
        let ang = principal_angles(&a, &b);
        assert!((ang[0] - th).abs() < 1e-14);
        assert_eq!(max_principal_angle(&a, &CMatrix::identity(2, 2)), std::f64::consts::FRAC_PI_2);
    }

    #[test]
    fn complement_is_orthogonal() {
        let q = random::unitary(6, &mut random::rng(9, 0));
        let b = q.columns(0, 2).into_owned();
        let comp = complement(&b);
        assert_eq!(comp.ncols(), 4);
        assert!((b.adjoint() * &comp).norm() < 1e-13);
        assert!(max_principal_angle(&comp, &q.columns(2, 4).into_owned()) < 1e-7);
    }
}
