//! Small dense helpers shared by the index and flow code.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub(crate) fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// Thin orthonormal basis of the column span (columns assumed independent).
pub(crate) fn orthonormalize(f: &DMatrix<f64>) -> DMatrix<f64> {
    let qr = f.clone().qr();
    let mut q = qr.q();
    // fix the sign gauge so that results are reproducible
    let r = qr.r();
    for j in 0..q.ncols() {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// `X + iY` for a frame with blocks `[X; Y]`.
pub(crate) fn to_unitary(f: &DMatrix<f64>) -> DMatrix<Complex64> {
    let n = f.ncols();
    DMatrix::from_fn(n, n, |i, j| Complex64::new(f[(i, j)], f[(i + n, j)]))
}

pub(crate) fn from_unitary(u: &DMatrix<Complex64>) -> DMatrix<f64> {
    let n = u.ncols();
    DMatrix::from_fn(2 * n, n, |i, j| {
        if i < n {
            u[(i, j)].re
        } else {
            u[(i - n, j)].im
        }
    })
}

pub(crate) fn polar_unitary(u: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let svd = u.clone().svd(true, true);
    svd.u.unwrap() * svd.v_t.unwrap()
}

pub(crate) fn polar_orthogonal(m: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = m.clone().svd(true, true);
    svd.u.unwrap() * svd.v_t.unwrap()
}

/// Orthonormal Lagrangian frame nearest to `f` (polar projection of `X + iY`).
pub(crate) fn lagrangian_projection(f: &DMatrix<f64>) -> DMatrix<f64> {
    from_unitary(&polar_unitary(&to_unitary(f)))
}

pub(crate) fn complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Largest principal angle between the spans of two orthonormal frames.
pub(crate) fn max_principal_angle(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let m = a.transpose() * b;
    let sv = m.singular_values();
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    smin.clamp(-1.0, 1.0).acos()
}

/// Eigenvalues of a real symmetric matrix in ascending order.
pub(crate) fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let s = (m + m.transpose()) * 0.5;
    let mut ev: Vec<f64> = s.symmetric_eigenvalues().iter().cloned().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

/// Eigenvalues of a normal complex matrix (diagonal of its Schur form).
pub(crate) fn normal_eigenvalues(m: &DMatrix<Complex64>) -> Vec<Complex64> {
    let (_, t) = nalgebra::linalg::Schur::new(m.clone()).unpack();
    (0..t.nrows()).map(|i| t[(i, i)]).collect()
}
