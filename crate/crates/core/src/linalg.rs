//! Dense spectral quantities on `nalgebra` matrices.

use nalgebra::{DMatrix, DVector};

/// Largest singular value. Symmetric square input goes through the
/// symmetric eigensolver; everything else through the SVD.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    if m.nrows() == 1 || m.ncols() == 1 {
        return m.norm();
    }
    if m.is_square() && is_symmetric(m, 0.0) {
        return m
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .fold(0.0f64, |acc, v| acc.max(v.abs()));
    }
    m.singular_values().max()
}

/// Sum of singular values.
pub fn trace_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    if m.nrows() == 1 || m.ncols() == 1 {
        return m.norm();
    }
    m.singular_values().sum()
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.clone().symmetric_eigenvalues().min()
}

pub fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    m.is_square() && (0..m.nrows()).all(|i| (0..i).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= tol))
}

/// Top singular triple `(sigma, u, v)` with `u^T M v = sigma`.
pub fn top_singular_pair(m: &DMatrix<f64>) -> (f64, DVector<f64>, DVector<f64>) {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return (0.0, DVector::zeros(r), DVector::zeros(c));
    }
    if c == 1 {
        let col = m.column(0).into_owned();
        let sigma = col.norm();
        let u = if sigma > 0.0 { col / sigma } else { unit(r) };
        return (sigma, u, DVector::from_element(1, 1.0));
    }
    if r == 1 {
        let row = m.row(0).transpose();
        let sigma = row.norm();
        let v = if sigma > 0.0 { row / sigma } else { unit(c) };
        return (sigma, DVector::from_element(1, 1.0), v);
    }
    let svd = m.clone().svd(true, true);
    let (idx, sigma) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &s)| if s > best.1 { (i, s) } else { best });
    let u = svd.u.expect("requested").column(idx).into_owned();
    let v = svd.v_t.expect("requested").row(idx).transpose();
    (sigma, u, v)
}

fn unit(n: usize) -> DVector<f64> {
    let mut v = DVector::zeros(n);
    v[0] = 1.0;
    v
}
