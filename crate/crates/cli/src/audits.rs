//! Maps audit selector names onto the core audit functions, pulling the
//! needed constants (radius, clipping threshold, step size, surrogate
//! target) from each trace's own config.

use anyhow::Context;

use gdaudit_core::analysis::{
    audit_clip_gd, audit_gd_convex, audit_gradnorm_monotonicity, audit_ngd, audit_rcd,
    audit_strong_growth, audit_strongly_convex, AuditReport,
};
use gdaudit_core::optimizers::Trace;
use gdaudit_core::problems::{logistic_surrogate_target, make_problem, Problem};

pub fn build_problem(trace: &Trace) -> anyhow::Result<Problem> {
    make_problem(trace.config.problem.clone()).context("rebuilding problem from trace meta")
}

/// Audits one trace against one theorem.
pub fn audit_single(theorem: &str, trace: &Trace, eps: Option<f64>) -> anyhow::Result<AuditReport> {
    let problem = build_problem(trace)?;
    let r = problem.known_r();
    match theorem {
        "gd_convex" => Ok(audit_gd_convex(trace, &problem, r)),
        "ngd" => {
            let c = trace
                .config
                .step_rule
                .c
                .context("NGD audit needs c in the trace's step rule")?;
            let eta = trace
                .records
                .first()
                .context("empty trace")?
                .eta;
            Ok(audit_ngd(trace, &problem, r, c, eta))
        }
        "clip_gd" => {
            let c = trace
                .config
                .step_rule
                .c
                .context("clip audit needs c in the trace's step rule")?;
            Ok(audit_clip_gd(trace, &problem, r, c))
        }
        "strongly_convex" => Ok(audit_strongly_convex(trace, &problem, r)?),
        "strong_growth" => {
            let eps = eps.context("strong_growth audit requires --eps")?;
            let x0 = *trace
                .config
                .problem
                .x0
                .first()
                .context("strong_growth expects a one-dimensional problem")?;
            let (_s, r_s) = logistic_surrogate_target(eps, x0)?;
            Ok(audit_strong_growth(trace, &problem, eps, r_s)?)
        }
        "monotonicity" => Ok(audit_gradnorm_monotonicity(trace, &problem)?),
        "rcd_mean" => anyhow::bail!("rcd_mean aggregates traces; use audit_aggregate"),
        other => anyhow::bail!("unknown theorem '{other}'"),
    }
}

/// Aggregated expectation-bound audit over a seed family.
pub fn audit_aggregate(theorem: &str, traces: &[Trace]) -> anyhow::Result<AuditReport> {
    match theorem {
        "rcd_mean" => {
            let first = traces.first().context("rcd_mean needs at least one trace")?;
            let problem = build_problem(first)?;
            let r = problem.known_r();
            Ok(audit_rcd(traces, &problem, r)?)
        }
        other => anyhow::bail!("'{other}' is not an aggregated audit"),
    }
}

/// Whether this theorem consumes the whole trace family at once.
pub fn is_aggregate(theorem: &str) -> bool {
    theorem == "rcd_mean"
}
