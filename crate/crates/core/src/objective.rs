//! Objective oracles and smoothness metadata.
//!
//! An [`Objective`] exposes exact value, gradient, and per-coordinate partial
//! oracles plus its certified smoothness constants. Evaluation is pure:
//! the same input yields a bit-identical output, which is what makes traces
//! reproducible.

use serde::{Deserialize, Serialize};

use crate::vector;
use crate::{Error, Result};

/// Certified constants of the generalized smoothness assumptions.
///
/// `l0`/`l1` are the full-vector constants: for `‖y − x‖ ≤ 1/l1`,
/// `‖∇f(y) − ∇f(x)‖ ≤ (l0 + l1‖∇f(x)‖)‖y − x‖`. The optional per-coordinate
/// vectors bound partial-derivative changes along single coordinates the
/// same way. `mu = 0` means merely convex.
///
/// Constants here are certified upper bounds, not claimed minimal.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SmoothnessSpec {
    pub l0: f64,
    pub l1: f64,
    #[serde(default)]
    pub coord_l0: Option<Vec<f64>>,
    #[serde(default)]
    pub coord_l1: Option<Vec<f64>>,
    #[serde(default)]
    pub mu: f64,
}

impl SmoothnessSpec {
    pub fn new(l0: f64, l1: f64) -> Self {
        Self {
            l0,
            l1,
            coord_l0: None,
            coord_l1: None,
            mu: 0.0,
        }
    }

    pub fn with_coords(mut self, coord_l0: Vec<f64>, coord_l1: Vec<f64>) -> Self {
        self.coord_l0 = Some(coord_l0);
        self.coord_l1 = Some(coord_l1);
        self
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = mu;
        self
    }

    /// Aggregate constants used by the coordinate-descent step rule:
    /// the maxima of the per-coordinate constants.
    pub fn rcd_max_constants(&self) -> Result<(f64, f64)> {
        let l0 = self
            .coord_l0
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig("coordinate L0 constants missing".into()))?;
        let l1 = self
            .coord_l1
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig("coordinate L1 constants missing".into()))?;
        let m0 = l0.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let m1 = l1.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Ok((m0, m1))
    }

    /// Gradient-norm threshold `l0 / l1` separating the two convergence
    /// phases; `+inf` when `l1 = 0` (the classical smooth regime, where the
    /// whole run is phase 2).
    pub fn phase_threshold(&self) -> f64 {
        if self.l1 == 0.0 {
            f64::INFINITY
        } else {
            self.l0 / self.l1
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(self.l0 >= 0.0 && self.l1 >= 0.0 && self.mu >= 0.0) {
            return Err(Error::InvalidParameter(
                "smoothness constants must be nonnegative".into(),
            ));
        }
        match (&self.coord_l0, &self.coord_l1) {
            (None, None) => {}
            (Some(c0), Some(c1)) => {
                if c0.len() != dim || c1.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: c0.len().min(c1.len()),
                    });
                }
                if c0.iter().chain(c1.iter()).any(|&v| v < 0.0) {
                    return Err(Error::InvalidParameter(
                        "per-coordinate constants must be nonnegative".into(),
                    ));
                }
                // The aggregates used by the RCD step rule are the coord maxima.
                let (m0, m1) = self.rcd_max_constants()?;
                if (m0 - self.l0).abs() > 1e-12 * m0.max(1.0)
                    || (m1 - self.l1).abs() > 1e-12 * m1.max(1.0)
                {
                    return Err(Error::InvalidParameter(format!(
                        "aggregate constants ({}, {}) do not equal coordinate maxima ({m0}, {m1})",
                        self.l0, self.l1
                    )));
                }
            }
            _ => {
                return Err(Error::InvalidParameter(
                    "coordinate constants must be given for both L0 and L1 or neither".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Known optimum of a problem, when one exists.
///
/// `x_star` is absent for objectives that only attain an infimum
/// (e.g. the logistic curve); `f_star` may still be known in that case.
/// `numeric` marks optima obtained from a high-budget reference solve
/// rather than a closed form.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
pub struct OptimumInfo {
    pub x_star: Option<Vec<f64>>,
    pub f_star: Option<f64>,
    #[serde(default)]
    pub numeric: bool,
}

/// A minimization problem with exact oracles.
pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    fn partial(&self, i: usize, x: &[f64]) -> f64;
    fn smoothness(&self) -> &SmoothnessSpec;
    fn optimum(&self) -> &OptimumInfo;
}

/// Comparison (order) oracle: the sign of `f(y) - f(x)`.
///
/// Returns `+1` when `f(y) > f(x)`, `-1` when `f(y) < f(x)`, and `0` on an
/// exact float tie. The tie branch is deterministic by design.
pub fn compare(f: &dyn Objective, x: &[f64], y: &[f64]) -> Result<i8> {
    vector::check_dim(x, f.dim())?;
    vector::check_dim(y, f.dim())?;
    vector::check_finite(x, "compare: x")?;
    vector::check_finite(y, "compare: y")?;
    let fx = f.value(x);
    let fy = f.value(y);
    if !fx.is_finite() || !fy.is_finite() {
        return Err(Error::NonFinite("compare: objective value".into()));
    }
    Ok(if fy > fx {
        1
    } else if fy < fx {
        -1
    } else {
        0
    })
}

/// Central-difference gradient, the independent oracle used to verify the
/// analytic gradients of the problem suite.
pub fn finite_diff_gradient(f: &dyn Objective, x: &[f64], h: f64) -> Result<Vec<f64>> {
    if !(h > 0.0) {
        return Err(Error::InvalidParameter("finite_diff_gradient: h must be > 0".into()));
    }
    vector::check_dim(x, f.dim())?;
    let mut g = Vec::with_capacity(f.dim());
    let mut probe = x.to_vec();
    for i in 0..f.dim() {
        let xi = x[i];
        probe[i] = xi + h;
        let fp = f.value(&probe);
        probe[i] = xi - h;
        let fm = f.value(&probe);
        probe[i] = xi;
        if !fp.is_finite() || !fm.is_finite() {
            return Err(Error::NonFinite("finite_diff_gradient: objective value".into()));
        }
        g.push((fp - fm) / (2.0 * h));
    }
    Ok(g)
}
