//! Step-size formulas and the clipping operator.
//!
//! Each method's admissible step is stated as an upper bound in the theory;
//! the rules here take those bounds with equality (the largest admissible
//! step), since the guarantees hold at the boundary.

use serde::{Deserialize, Serialize};

use crate::vector;
use crate::{Error, Result};

/// Which denominator the clipped-GD step uses.
///
/// The rate analysis states the step as `1/(L0 + L1·min{‖∇f‖, c})`, while
/// the gradient-norm monotonicity lemma for clipped GD is proved for
/// `1/(L0 + L1·max{‖∇f‖, c})`. Both are exposed; `Min` is the default used
/// by the rate audits, `Max` is what the monotonicity audit requires.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ClipDenominator {
    #[default]
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    GdAdaptive,
    NgdFixed,
    ClipAdaptive,
    RcdAdaptive,
}

/// Step-rule selection plus its parameters.
///
/// `c` is the clipping radius for `clip_adaptive` and the gradient-norm
/// floor for `ngd_fixed`. When `eta_fixed` is absent for NGD, the largest
/// admissible constant step `c/(L0 + L1 c)` is used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRule {
    pub kind: StepKind,
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default)]
    pub eta_fixed: Option<f64>,
    #[serde(default)]
    pub clip_denominator: ClipDenominator,
}

impl StepRule {
    pub fn gd() -> Self {
        Self {
            kind: StepKind::GdAdaptive,
            c: None,
            eta_fixed: None,
            clip_denominator: ClipDenominator::Min,
        }
    }

    pub fn ngd(c: f64) -> Self {
        Self {
            kind: StepKind::NgdFixed,
            c: Some(c),
            eta_fixed: None,
            clip_denominator: ClipDenominator::Min,
        }
    }

    pub fn clip(c: f64) -> Self {
        Self {
            kind: StepKind::ClipAdaptive,
            c: Some(c),
            eta_fixed: None,
            clip_denominator: ClipDenominator::Min,
        }
    }

    pub fn clip_max(c: f64) -> Self {
        Self {
            clip_denominator: ClipDenominator::Max,
            ..Self::clip(c)
        }
    }

    pub fn rcd() -> Self {
        Self {
            kind: StepKind::RcdAdaptive,
            c: None,
            eta_fixed: None,
            clip_denominator: ClipDenominator::Min,
        }
    }

    /// Validates the rule against the smoothness constants it will run with.
    pub fn validate(&self, l0: f64, l1: f64) -> Result<()> {
        match self.kind {
            StepKind::NgdFixed => {
                let c = self
                    .c
                    .ok_or_else(|| Error::InvalidConfig("ngd_fixed requires c".into()))?;
                if !(c > 0.0) {
                    return Err(Error::InvalidParameter("ngd_fixed requires c > 0".into()));
                }
                if let Some(eta) = self.eta_fixed {
                    let max_eta = ngd_step_size(l0, l1, c)?;
                    if eta > max_eta * (1.0 + 1e-12) {
                        return Err(Error::InvalidConfig(format!(
                            "eta_fixed {eta} exceeds the admissible c/(L0 + L1 c) = {max_eta}"
                        )));
                    }
                    if !(eta > 0.0) {
                        return Err(Error::InvalidParameter("eta_fixed must be > 0".into()));
                    }
                }
            }
            StepKind::ClipAdaptive => {
                let c = self
                    .c
                    .ok_or_else(|| Error::InvalidConfig("clip_adaptive requires c".into()))?;
                if !(c > 0.0) {
                    return Err(Error::InvalidParameter("clip radius must be > 0".into()));
                }
            }
            StepKind::GdAdaptive | StepKind::RcdAdaptive => {}
        }
        Ok(())
    }
}

/// `1 / (L0 + L1 ‖∇f(x)‖)`, the adaptive GD step.
pub fn gd_step_size(l0: f64, l1: f64, grad_norm: f64) -> Result<f64> {
    if grad_norm < 0.0 {
        return Err(Error::InvalidParameter("grad_norm must be >= 0".into()));
    }
    let denom = l0 + l1 * grad_norm;
    if !(denom > 0.0) {
        return Err(Error::DegenerateStep(format!(
            "L0 + L1*grad_norm = {denom} (L0={l0}, L1={l1}, grad_norm={grad_norm})"
        )));
    }
    Ok(1.0 / denom)
}

/// `c / (L0 + L1 c)`, the largest admissible constant NGD step for a
/// gradient-norm floor `c`.
pub fn ngd_step_size(l0: f64, l1: f64, c: f64) -> Result<f64> {
    if !(c > 0.0) {
        return Err(Error::InvalidParameter("ngd_step_size requires c > 0".into()));
    }
    let denom = l0 + l1 * c;
    if !(denom > 0.0) {
        return Err(Error::DegenerateStep(format!(
            "L0 + L1*c = {denom} (L0={l0}, L1={l1}, c={c})"
        )));
    }
    Ok(c / denom)
}

/// Clipping operator: `min{1, c/‖g‖}·g`. The zero vector maps to itself
/// (the scale factor is defined as 1 there).
pub fn clip(g: &[f64], c: f64) -> Result<Vec<f64>> {
    if !(c > 0.0) {
        return Err(Error::InvalidParameter("clip radius must be > 0".into()));
    }
    vector::check_finite(g, "clip: g")?;
    Ok(vector::scale(clip_factor(g, c), g))
}

/// The scale `λ = min{1, c/‖g‖}` applied by [`clip`].
pub fn clip_factor(g: &[f64], c: f64) -> f64 {
    let n = vector::norm(g);
    if n <= c {
        1.0
    } else {
        c / n
    }
}

/// Clipped-GD step: `1 / (L0 + L1·min{‖∇f‖, c})` (or the `max` variant).
pub fn clip_gd_step_size(
    l0: f64,
    l1: f64,
    grad_norm: f64,
    c: f64,
    denominator: ClipDenominator,
) -> Result<f64> {
    if !(c > 0.0) {
        return Err(Error::InvalidParameter("clip radius must be > 0".into()));
    }
    if grad_norm < 0.0 {
        return Err(Error::InvalidParameter("grad_norm must be >= 0".into()));
    }
    let m = match denominator {
        ClipDenominator::Min => grad_norm.min(c),
        ClipDenominator::Max => grad_norm.max(c),
    };
    let denom = l0 + l1 * m;
    if !(denom > 0.0) {
        return Err(Error::DegenerateStep(format!(
            "L0 + L1*min/max{{grad_norm, c}} = {denom}"
        )));
    }
    Ok(1.0 / denom)
}

/// Coordinate-descent step: `1 / (L0_max + L1_max·|∇_i f(x)|)` where the
/// constants are the maxima of the per-coordinate constants.
pub fn rcd_step_size(l0_max: f64, l1_max: f64, partial_abs: f64) -> Result<f64> {
    if partial_abs < 0.0 {
        return Err(Error::InvalidParameter("partial_abs must be >= 0".into()));
    }
    let denom = l0_max + l1_max * partial_abs;
    if !(denom > 0.0) {
        return Err(Error::DegenerateStep(format!(
            "L0_max + L1_max*|partial| = {denom}"
        )));
    }
    Ok(1.0 / denom)
}
