//! Symmetric positive-definite matrices under the Log-Euclidean and
//! Log-Cholesky metrics.
//!
//! Both metrics are pulled back from a flat chart:
//!
//! * Log-Euclidean: `A -> log(A)` (symmetric matrix logarithm), Frobenius norm.
//! * Log-Cholesky: `A = L L^T -> (strict lower part of L, log diag(L))`,
//!   Frobenius norm of that lower-triangular matrix.
//!
//! Geodesics are straight lines in the chart, so both spaces are isometric to
//! a Euclidean space and the comparison inequality holds with equality.

use nalgebra::{Cholesky, DMatrix};

use crate::error::{Error, Result};

/// Smallest eigenvalue accepted for a matrix to count as positive definite.
pub const EIGENVALUE_FLOOR: f64 = 1e-12;

/// Entrywise tolerance on `|A - A^T|` (scaled by the largest entry when it exceeds 1).
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

pub fn validate(a: &DMatrix<f64>, size: usize) -> Result<()> {
    if a.nrows() != size || a.ncols() != size {
        return Err(Error::input(format!(
            "expected a {size}x{size} matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::point("matrix entries must be finite"));
    }
    let scale = a.amax().max(1.0);
    for i in 0..size {
        for j in 0..i {
            if (a[(i, j)] - a[(j, i)]).abs() > SYMMETRY_TOLERANCE * scale {
                return Err(Error::point(format!("matrix is not symmetric at ({i},{j})")));
            }
        }
    }
    let min = a.clone().symmetric_eigenvalues().min();
    if min <= EIGENVALUE_FLOOR {
        return Err(Error::point(format!(
            "matrix is not positive definite (smallest eigenvalue {min:e})"
        )));
    }
    Ok(())
}

fn symmetrize(mut m: DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Applies `f` to the spectrum of a symmetric matrix. With `floor` set, fails
/// when an eigenvalue is not above it.
fn spectral_map(a: &DMatrix<f64>, f: impl Fn(f64) -> f64, floor: Option<f64>) -> Result<DMatrix<f64>> {
    let eig = symmetrize(a.clone()).symmetric_eigen();
    if let Some(floor) = floor {
        let min = eig.eigenvalues.min();
        if min <= floor {
            return Err(Error::point(format!(
                "matrix logarithm needs positive eigenvalues (smallest {min:e})"
            )));
        }
    }
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (j, lambda) in eig.eigenvalues.iter().enumerate() {
        scaled.column_mut(j).scale_mut(f(*lambda));
    }
    Ok(symmetrize(scaled * v.transpose()))
}

/// Matrix logarithm of a symmetric positive-definite matrix.
pub fn log(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    spectral_map(a, f64::ln, Some(EIGENVALUE_FLOOR))
}

/// Matrix exponential of a symmetric matrix.
pub fn exp(s: &DMatrix<f64>) -> DMatrix<f64> {
    spectral_map(s, f64::exp, None).expect("no floor check for exp")
}

/// Row-major flattening of `log(A)`; its l2 norm is the Frobenius norm.
pub fn log_euclidean_chart(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    let l = log(a)?;
    Ok(row_major(&l))
}

pub fn log_euclidean_chart_inverse(v: &[f64], size: usize) -> Result<DMatrix<f64>> {
    if v.len() != size * size {
        return Err(Error::input(format!(
            "Log-Euclidean chart vector must have {} entries",
            size * size
        )));
    }
    let s = DMatrix::from_row_slice(size, size, v);
    Ok(exp(&symmetrize(s)))
}

pub fn log_euclidean_distance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    Ok((log(a)? - log(b)?).norm())
}

pub fn log_euclidean_geodesic(a: &DMatrix<f64>, b: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    let (la, lb) = (log(a)?, log(b)?);
    Ok(exp(&(la.scale(1.0 - t) + lb.scale(t))))
}

fn cholesky_factor(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Cholesky::new(symmetrize(a.clone()))
        .map(|c| c.l())
        .ok_or_else(|| Error::point("Cholesky factorization failed: matrix is not positive definite"))
}

/// Cholesky factor with its diagonal replaced by the diagonal's logarithm.
fn log_cholesky_matrix(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mut l = cholesky_factor(a)?;
    for i in 0..l.nrows() {
        let d = l[(i, i)];
        if d <= 0.0 {
            return Err(Error::point("Cholesky factor has a non-positive diagonal"));
        }
        l[(i, i)] = d.ln();
    }
    Ok(l)
}

/// Lower triangle (diagonal included) of the Log-Cholesky chart matrix, row-major.
pub fn log_cholesky_chart(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    let l = log_cholesky_matrix(a)?;
    let n = l.nrows();
    let mut v = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in 0..=i {
            v.push(l[(i, j)]);
        }
    }
    Ok(v)
}

pub fn log_cholesky_chart_inverse(v: &[f64], size: usize) -> Result<DMatrix<f64>> {
    if v.len() != size * (size + 1) / 2 {
        return Err(Error::input(format!(
            "Log-Cholesky chart vector must have {} entries",
            size * (size + 1) / 2
        )));
    }
    let mut l = DMatrix::zeros(size, size);
    let mut k = 0;
    for i in 0..size {
        for j in 0..=i {
            l[(i, j)] = if i == j { v[k].exp() } else { v[k] };
            k += 1;
        }
    }
    Ok(symmetrize(&l * l.transpose()))
}

pub fn log_cholesky_distance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    Ok((log_cholesky_matrix(a)? - log_cholesky_matrix(b)?).norm())
}

pub fn log_cholesky_geodesic(a: &DMatrix<f64>, b: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    let ca = log_cholesky_chart(a)?;
    let cb = log_cholesky_chart(b)?;
    let mid: Vec<f64> = ca.iter().zip(&cb).map(|(x, y)| x + t * (y - x)).collect();
    log_cholesky_chart_inverse(&mid, a.nrows())
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let mut v = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            v.push(m[(i, j)]);
        }
    }
    v
}
