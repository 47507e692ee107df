//! Dense vector arithmetic over `&[f64]`.
//!
//! All iterates live in `R^d` with a fixed `d >= 1`; accepted iterates must
//! have finite entries.

use crate::{Error, Result};

/// Standard inner product.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean norm.
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `a - b` as a new vector.
pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `x + alpha * y` as a new vector.
pub fn add_scaled(x: &[f64], alpha: f64, y: &[f64]) -> Vec<f64> {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a + alpha * b).collect()
}

/// `alpha * a` as a new vector.
pub fn scale(alpha: f64, a: &[f64]) -> Vec<f64> {
    a.iter().map(|x| alpha * x).collect()
}

/// `i`-th unit vector of length `d`.
pub fn unit(d: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; d];
    e[i] = 1.0;
    e
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|x| x.is_finite())
}

/// Checks that `a` has length `expected`.
pub fn check_dim(a: &[f64], expected: usize) -> Result<()> {
    if a.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: a.len(),
        });
    }
    Ok(())
}

pub fn check_finite(a: &[f64], context: &str) -> Result<()> {
    if !all_finite(a) {
        return Err(Error::NonFinite(context.to_string()));
    }
    Ok(())
}
