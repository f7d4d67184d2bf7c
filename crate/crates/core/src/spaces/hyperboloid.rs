//! Hyperbolic space `H^d` in the hyperboloid (Lorentz) model.
//!
//! Points live on the upper sheet `{x in R^{d+1} : <x,x>_M = -1, x_0 > 0}` where
//! `<x,y>_M = -x_0 y_0 + sum_{i>=1} x_i y_i` is the Minkowski bilinear form.
//! The distance is `arccosh(-<x,y>_M)`; for nearby points the equivalent form
//! `2 asinh(|x - y|_M / 2)` is used because `arccosh` loses half of the
//! available digits close to 1.

use crate::error::{Error, Result};

/// Tolerance on `<x,x>_M + 1` accepted by [`validate`].
pub const SHEET_TOLERANCE: f64 = 1e-9;

pub fn minkowski_dot(x: &[f64], y: &[f64]) -> f64 {
    let spatial: f64 = x[1..].iter().zip(&y[1..]).map(|(a, b)| a * b).sum();
    spatial - x[0] * y[0]
}

pub fn validate(x: &[f64]) -> Result<()> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::point("hyperboloid coordinates must be finite"));
    }
    if x[0] <= 0.0 {
        return Err(Error::point(format!(
            "hyperboloid point must lie on the upper sheet (x0 = {})",
            x[0]
        )));
    }
    let norm = minkowski_dot(x, x);
    if (norm + 1.0).abs() > SHEET_TOLERANCE * x[0] * x[0].max(1.0) {
        return Err(Error::point(format!("Minkowski norm {norm} differs from -1")));
    }
    Ok(())
}

/// The base point `(1, 0, ..., 0)`.
pub fn origin(dim: usize) -> Vec<f64> {
    let mut x = vec![0.0; dim + 1];
    x[0] = 1.0;
    x
}

/// Lifts spatial coordinates `(x_1, .., x_d)` onto the sheet.
pub fn lift(spatial: &[f64]) -> Vec<f64> {
    let sq: f64 = spatial.iter().map(|v| v * v).sum();
    let mut x = Vec::with_capacity(spatial.len() + 1);
    x.push((1.0 + sq).sqrt());
    x.extend_from_slice(spatial);
    x
}

/// Rescales a timelike vector with positive time component back onto the sheet.
pub fn project(x: &mut [f64]) {
    let norm = (-minkowski_dot(x, x)).sqrt();
    for v in x.iter_mut() {
        *v /= norm;
    }
}

pub fn distance(x: &[f64], y: &[f64]) -> f64 {
    let cosh_d = -minkowski_dot(x, y);
    if cosh_d > 2.0 {
        return cosh_d.acosh();
    }
    let spatial: f64 = x[1..].iter().zip(&y[1..]).map(|(a, b)| (a - b) * (a - b)).sum();
    let dt = x[0] - y[0];
    let chord = (spatial - dt * dt).max(0.0).sqrt();
    2.0 * (0.5 * chord).asinh()
}

/// Unit-speed-proportional geodesic `gamma(t) = (sinh((1-t)D) x + sinh(tD) y) / sinh(D)`.
///
/// This is the same curve as `cosh(tD) x + sinh(tD) u` with
/// `u = (y - cosh(D) x) / sinh(D)`, written so it stays well conditioned as
/// `D -> 0`. The result is re-projected onto the sheet.
pub fn geodesic(x: &[f64], y: &[f64], t: f64) -> Vec<f64> {
    if t == 0.0 || x == y {
        return x.to_vec();
    }
    if t == 1.0 {
        return y.to_vec();
    }
    let d = distance(x, y);
    let (a, b) = if d < 1e-6 {
        // sinh(s D) / sinh(D) = s (1 + (s^2 - 1) D^2 / 6) + O(D^4)
        let c = d * d / 6.0;
        let s = 1.0 - t;
        (s * (1.0 + (s * s - 1.0) * c), t * (1.0 + (t * t - 1.0) * c))
    } else {
        let sh = d.sinh();
        (((1.0 - t) * d).sinh() / sh, (t * d).sinh() / sh)
    };
    let mut p: Vec<f64> = x.iter().zip(y).map(|(u, v)| a * u + b * v).collect();
    project(&mut p);
    p
}

/// Exponential map at `base` applied to a tangent vector `v` (`<base, v>_M = 0`).
pub fn exp_map(base: &[f64], v: &[f64]) -> Vec<f64> {
    let norm = minkowski_dot(v, v).max(0.0).sqrt();
    if norm == 0.0 {
        return base.to_vec();
    }
    let (c, s) = (norm.cosh(), norm.sinh() / norm);
    let mut p: Vec<f64> = base.iter().zip(v).map(|(b, w)| c * b + s * w).collect();
    project(&mut p);
    p
}
