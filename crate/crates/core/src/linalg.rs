//! Small dense helpers shared by the projection modules.

use nalgebra::{DMatrix, SymmetricEigen};

/// Relative singular-value cutoff used to decide numerical rank.
pub const RANK_TOL: f64 = 1e-10;

/// Orthonormal bases of the column space of `g` and of its Euclidean
/// orthogonal complement, together with the numerical rank.
pub fn range_and_complement(g: &DMatrix<f64>, tol: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = g.nrows();
    if g.ncols() == 0 {
        return (DMatrix::zeros(n, 0), DMatrix::identity(n, n));
    }
    let svd = g.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let smax = svd.singular_values.max();
    let mut keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| smax > 0.0 && svd.singular_values[i] > tol * smax)
        .collect();
    keep.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]).then(a.cmp(&b)));
    let range = u.select_columns(&keep);
    let proj = DMatrix::identity(n, n) - &range * range.transpose();
    let eig = SymmetricEigen::new(proj);
    let mut comp: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > 0.5).collect();
    comp.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let complement = eig.eigenvectors.select_columns(&comp);
    (range, complement)
}

/// 2-norm condition number.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let s = m.clone().singular_values();
    let min = s.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        s.max() / min
    }
}
