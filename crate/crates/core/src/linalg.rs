//! Small dense-matrix helpers on top of `ndarray`.

use ndarray::Array2;
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Conjugate transpose.
pub fn adjoint(m: &Array2<C64>) -> Array2<C64> {
    m.t().mapv(|z| z.conj())
}

/// [A, B] = AB - BA.
pub fn commutator(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    a.dot(b) - b.dot(a)
}

/// {A, B} = AB + BA.
pub fn anticommutator(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    a.dot(b) + b.dot(a)
}

/// Largest absolute entry.
pub fn max_abs(m: &Array2<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Max deviation of `m` from its own conjugate transpose.
pub fn hermiticity_deviation(m: &Array2<C64>) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[[i, j]] - m[[j, i]].conj()).norm());
        }
    }
    dev
}

/// Eigendecomposition of a hermitian matrix: real eigenvalues (ascending) and
/// the unitary of column eigenvectors.
///
/// LAPACK reads the row-major buffer as its transpose, which for complex
/// hermitian input silently yields the eigensystem of the conjugate matrix.
/// The residual check below catches that and conjugates the vectors back.
pub fn eigh(m: &Array2<C64>) -> Result<(Vec<f64>, Array2<C64>)> {
    let (vals, mut vecs) = m
        .eigh(UPLO::Lower)
        .map_err(|e| Error::Linalg(e.to_string()))?;
    let vals = vals.to_vec();
    let tol = 1e-8 * (max_abs(m) + 1.0) * m.nrows() as f64;
    if eig_residual(m, &vals, &vecs) > tol {
        vecs.mapv_inplace(|z| z.conj());
        let res = eig_residual(m, &vals, &vecs);
        if res > tol {
            return Err(Error::Linalg(format!(
                "eigendecomposition residual {res:.3e} exceeds tolerance {tol:.3e}"
            )));
        }
    }
    Ok((vals, vecs))
}

/// Max-abs entry of H·V − V·Λ.
fn eig_residual(m: &Array2<C64>, vals: &[f64], vecs: &Array2<C64>) -> f64 {
    let mut resid = m.dot(vecs);
    for (j, lam) in vals.iter().enumerate() {
        let mut col = resid.column_mut(j);
        let lam = C64::new(*lam, 0.0);
        col.zip_mut_with(&vecs.column(j), |r, v| *r -= v * lam);
    }
    max_abs(&resid)
}

/// Operator 2-norm (largest singular value), via the hermitian
/// eigendecomposition of m†m.
pub fn op_norm(m: &Array2<C64>) -> f64 {
    let gram = adjoint(m).dot(m);
    match eigh(&gram) {
        Ok((vals, _)) => vals.last().copied().unwrap_or(0.0).max(0.0).sqrt(),
        Err(_) => max_abs(m) * (m.nrows() as f64),
    }
}

/// Deviation of `u` from unitarity: max-abs entry of u†u − 1.
pub fn unitarity_deviation(u: &Array2<C64>) -> f64 {
    let mut g = adjoint(u).dot(u);
    for i in 0..g.nrows() {
        g[[i, i]] -= C64::new(1.0, 0.0);
    }
    max_abs(&g)
}

/// Identity matrix of size n.
pub fn eye(n: usize) -> Array2<C64> {
    Array2::from_diag_elem(n, C64::new(1.0, 0.0))
}
