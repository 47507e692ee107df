//! Columnar plot data: gap, log-gap, gradient norm, step size, and the
//! phase tag per iteration. A semilog plot of the gap column shows the
//! linear-then-sublinear knee at the phase-transition index.

use std::fmt::Write as _;

use anyhow::Context;

use gdaudit_core::analysis::{detect_phase_t, PhaseReport};
use gdaudit_core::objective::Objective;
use gdaudit_core::optimizers::{Algorithm, Trace};

use crate::audits::build_problem;

pub const PLOT_CSV_HEADER: &str = "k,gap,log10_gap,grad_norm,eta,phase";

/// Renders the plot columns. Gaps that are absent or non-positive print
/// the `NA` sentinel in the log column.
pub fn emit_plot_data(trace: &Trace, phase: &PhaseReport) -> String {
    let mut out = String::with_capacity(trace.records.len() * 48);
    out.push_str(PLOT_CSV_HEADER);
    out.push('\n');
    for r in &trace.records {
        let gap_str = r.gap.map(|g| g.to_string()).unwrap_or_else(|| "NA".into());
        let log_gap = match r.gap {
            Some(g) if g > 0.0 => g.log10().to_string(),
            _ => "NA".into(),
        };
        let tag = match phase.t {
            Some(t) if r.k >= t => 2,
            Some(_) => 1,
            None => 1,
        };
        let _ = writeln!(out, "{},{},{},{},{},{}", r.k, gap_str, log_gap, r.grad_norm, r.eta, tag);
    }
    out
}

/// Phase threshold the trace's own method implies: `min{c, L0/L1}` for
/// clipped GD, `L0/L1` otherwise.
pub fn phase_for_trace(trace: &Trace) -> anyhow::Result<PhaseReport> {
    let problem = build_problem(trace)?;
    let mut threshold = problem.smoothness().phase_threshold();
    if trace.config.algorithm == Algorithm::ClipGd {
        let c = trace
            .config
            .step_rule
            .c
            .context("clip trace without a radius")?;
        threshold = threshold.min(c);
    }
    Ok(detect_phase_t(trace, threshold))
}
