//! The five iteration loops, each producing a per-iteration [`Trace`].
//!
//! All runs are single-threaded, own their RNG, and are bit-reproducible
//! from the `RunConfig` (including the seed). Record `k` describes the
//! iterate `x^k` *before* the `k`-th step together with the step quantities
//! computed at it; the final record holds the returned iterate.
//!
//! `oracle_calls` counts what the algorithm actually consumes: gradient
//! evaluations (GD, NGD, Clip-GD), partial-derivative evaluations (RCD), or
//! comparison-oracle invocations (OrderRCD). For the coordinate methods the
//! count on record `k` is what was spent *reaching* `x^k`; the work that
//! decides step `k` (stored on record `k`) is charged to record `k+1`.
//! Values and gradient norms recorded for non-first-order methods are trace
//! instrumentation, not oracle traffic.

use serde::{Deserialize, Serialize};

use crate::linesearch::{bracket_minimum, golden_ratio_min};
use crate::objective::{compare, Objective};
use crate::problems::{make_problem, Problem, ProblemSpec};
use crate::rng::Rng;
use crate::steprules::{
    clip_factor, clip_gd_step_size, gd_step_size, ngd_step_size, rcd_step_size, StepKind, StepRule,
};
use crate::vector;
use crate::{Error, Result};

/// Divergence guard: convex theory forbids the objective rising this far
/// above its start; hitting the guard signals a wrong constant or a bug.
const DIVERGENCE_MARGIN: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Gd,
    Ngd,
    ClipGd,
    Rcd,
    OrderRcd,
}

/// Full description of one run. Identical configs (seed included) yield
/// bit-identical traces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub algorithm: Algorithm,
    pub step_rule: StepRule,
    pub budget_n: usize,
    pub seed: u64,
    /// GRM value tolerance `eps`; the interval tolerance becomes
    /// `eps_hat = 2 eps / L0` when `L0 > 0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grm_eps_value: Option<f64>,
    /// Direct interval tolerance, used when `L0 = 0` makes the conversion
    /// above undefined (or when no value tolerance is given).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grm_eps_hat: Option<f64>,
    /// Half-width of the initial line bracket.
    #[serde(default = "default_grm_eta0")]
    pub grm_eta0: f64,
    /// Optional early stop once the gradient norm falls below this; off by
    /// default so audits see the full budget.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_grad_norm: Option<f64>,
    /// Store `x` every this many records (0 = never).
    #[serde(default)]
    pub snapshot_stride: usize,
}

fn default_grm_eta0() -> f64 {
    1.0
}

impl RunConfig {
    pub fn new(problem: ProblemSpec, algorithm: Algorithm, step_rule: StepRule, budget_n: usize, seed: u64) -> Self {
        Self {
            problem,
            algorithm,
            step_rule,
            budget_n,
            seed,
            grm_eps_value: None,
            grm_eps_hat: None,
            grm_eta0: default_grm_eta0(),
            stop_grad_norm: None,
            snapshot_stride: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget_n < 1 {
            return Err(Error::InvalidConfig("budget_n must be >= 1".into()));
        }
        let want = match self.algorithm {
            Algorithm::Gd => StepKind::GdAdaptive,
            Algorithm::Ngd => StepKind::NgdFixed,
            Algorithm::ClipGd => StepKind::ClipAdaptive,
            Algorithm::Rcd | Algorithm::OrderRcd => StepKind::RcdAdaptive,
        };
        if self.step_rule.kind != want {
            return Err(Error::InvalidConfig(format!(
                "algorithm {:?} requires step rule {:?}, got {:?}",
                self.algorithm, want, self.step_rule.kind
            )));
        }
        let has_grm = self.grm_eps_value.is_some() || self.grm_eps_hat.is_some();
        match self.algorithm {
            Algorithm::OrderRcd => {
                if !has_grm {
                    return Err(Error::InvalidConfig(
                        "order_rcd requires grm_eps_value or grm_eps_hat".into(),
                    ));
                }
                if !(self.grm_eta0 > 0.0) {
                    return Err(Error::InvalidConfig("grm_eta0 must be > 0".into()));
                }
                for eps in [self.grm_eps_value, self.grm_eps_hat].into_iter().flatten() {
                    if !(eps > 0.0) {
                        return Err(Error::InvalidConfig("GRM tolerances must be > 0".into()));
                    }
                }
            }
            _ => {
                if has_grm {
                    return Err(Error::InvalidConfig(
                        "GRM tolerances are only meaningful for order_rcd".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Per-iterate line-search accounting (OrderRCD only).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSearchStats {
    pub bracket_lo: f64,
    pub bracket_hi: f64,
    pub bracket_calls: u64,
    pub grm_calls: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub k: usize,
    pub f_val: f64,
    /// `f - f*` when the optimal value is known.
    pub gap: Option<f64>,
    pub grad_norm: f64,
    /// Step size computed at this iterate; 0 for records with no step
    /// formula (coordinate methods' final record, OrderRCD throughout).
    pub eta: f64,
    /// Clipping factor; 1 for non-clipped methods.
    pub lambda: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coord: Option<usize>,
    /// Partial derivative along `coord` at this iterate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coord_partial: Option<f64>,
    pub oracle_calls: u64,
    /// Set on NGD records where `‖∇f(x^k)‖ < c`: the linear-rate theorem's
    /// precondition no longer holds from here on, so audits must exclude
    /// (not hide) these iterations.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub precondition_violated: bool,
    /// Accepted line displacement (OrderRCD).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line_search: Option<LineSearchStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_snapshot: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbortInfo {
    pub k: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub config: RunConfig,
    pub records: Vec<IterRecord>,
    /// Present when the run hit the divergence or non-finite guard; the
    /// records up to the abort are kept.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abort: Option<AbortInfo>,
}

impl Trace {
    /// Number of completed steps.
    pub fn steps(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn final_record(&self) -> &IterRecord {
        self.records.last().expect("trace has at least the initial record")
    }

    /// Gap sequence, when `f*` was known to the run.
    pub fn gaps(&self) -> Option<Vec<f64>> {
        self.records.iter().map(|r| r.gap).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Trace> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Builds the problem from the config and runs the selected algorithm.
pub fn run(cfg: &RunConfig) -> Result<Trace> {
    let problem = make_problem(cfg.problem.clone())?;
    run_on(&problem, cfg)
}

/// Runs on an already-constructed problem (avoids re-solving numeric
/// optima when many runs share one instance).
pub fn run_on(problem: &Problem, cfg: &RunConfig) -> Result<Trace> {
    cfg.validate()?;
    match cfg.algorithm {
        Algorithm::Gd => run_gd(problem, cfg),
        Algorithm::Ngd => run_ngd(problem, cfg),
        Algorithm::ClipGd => run_clip_gd(problem, cfg),
        Algorithm::Rcd => run_rcd(problem, cfg),
        Algorithm::OrderRcd => run_order_rcd(problem, cfg),
    }
}

struct Recorder<'a> {
    cfg: &'a RunConfig,
    f_star: Option<f64>,
    f0: Option<f64>,
    records: Vec<IterRecord>,
    abort: Option<AbortInfo>,
}

impl<'a> Recorder<'a> {
    fn new(problem: &'a Problem, cfg: &'a RunConfig) -> Self {
        Self {
            cfg,
            f_star: problem.optimum().f_star,
            f0: None,
            records: Vec::with_capacity(cfg.budget_n + 1),
            abort: None,
        }
    }

    /// Runs the guards and pushes a record. Returns `false` when the run
    /// must stop (abort or early stop).
    fn push(&mut self, k: usize, x: &[f64], mut rec: IterRecord) -> bool {
        if !vector::all_finite(x) || !rec.f_val.is_finite() || !rec.grad_norm.is_finite() {
            self.abort = Some(AbortInfo {
                k,
                reason: "non-finite iterate or oracle value".into(),
            });
            return false;
        }
        let f0 = *self.f0.get_or_insert(rec.f_val);
        if rec.f_val > f0 + DIVERGENCE_MARGIN {
            self.abort = Some(AbortInfo {
                k,
                reason: format!("divergence guard: f = {} exceeds f0 + 1e12", rec.f_val),
            });
            return false;
        }
        rec.gap = self.f_star.map(|fs| rec.f_val - fs);
        if self.cfg.snapshot_stride > 0 && k.is_multiple_of(self.cfg.snapshot_stride) {
            rec.x_snapshot = Some(x.to_vec());
        }
        let grad_norm = rec.grad_norm;
        self.records.push(rec);
        if let Some(thresh) = self.cfg.stop_grad_norm {
            if grad_norm < thresh {
                return false;
            }
        }
        true
    }

    fn finish(self) -> Trace {
        Trace {
            config: self.cfg.clone(),
            records: self.records,
            abort: self.abort,
        }
    }
}

fn base_record(k: usize, f_val: f64, grad_norm: f64, oracle_calls: u64) -> IterRecord {
    IterRecord {
        k,
        f_val,
        gap: None,
        grad_norm,
        eta: 0.0,
        lambda: 1.0,
        coord: None,
        coord_partial: None,
        oracle_calls,
        precondition_violated: false,
        zeta: None,
        line_search: None,
        x_snapshot: None,
    }
}

/// Adaptive-step gradient descent: `x <- x - ∇f(x) / (L0 + L1‖∇f(x)‖)`.
pub fn run_gd(problem: &Problem, cfg: &RunConfig) -> Result<Trace> {
    let s = problem.smoothness();
    let mut rec = Recorder::new(problem, cfg);
    let mut x = problem.x0().to_vec();
    let mut calls = 0u64;
    for k in 0..=cfg.budget_n {
        let f = problem.value(&x);
        let g = problem.gradient(&x);
        calls += 1;
        let gn = vector::norm(&g);
        let eta = match gd_step_size(s.l0, s.l1, gn) {
            Ok(e) => e,
            Err(e) => {
                rec.abort = Some(AbortInfo {
                    k,
                    reason: e.to_string(),
                });
                break;
            }
        };
        let mut r = base_record(k, f, gn, calls);
        r.eta = eta;
        if !rec.push(k, &x, r) || k == cfg.budget_n {
            break;
        }
        x = vector::add_scaled(&x, -eta, &g);
    }
    Ok(rec.finish())
}

/// Normalized gradient descent with a constant step length; returns early
/// at a zero gradient.
pub fn run_ngd(problem: &Problem, cfg: &RunConfig) -> Result<Trace> {
    let s = problem.smoothness();
    cfg.step_rule.validate(s.l0, s.l1)?;
    let c = cfg.step_rule.c.expect("validated");
    let eta = match cfg.step_rule.eta_fixed {
        Some(e) => e,
        None => ngd_step_size(s.l0, s.l1, c)?,
    };
    let mut rec = Recorder::new(problem, cfg);
    let mut x = problem.x0().to_vec();
    let mut calls = 0u64;
    for k in 0..=cfg.budget_n {
        let f = problem.value(&x);
        let g = problem.gradient(&x);
        calls += 1;
        let gn = vector::norm(&g);
        let mut r = base_record(k, f, gn, calls);
        r.eta = eta;
        r.precondition_violated = gn < c;
        if !rec.push(k, &x, r) || k == cfg.budget_n {
            break;
        }
        if gn == 0.0 {
            // Zero-gradient guard: return the current iterate.
            break;
        }
        x = vector::add_scaled(&x, -eta / gn, &g);
    }
    Ok(rec.finish())
}

/// Clipped gradient descent: `x <- x - eta_k * clip_c(∇f(x))`.
pub fn run_clip_gd(problem: &Problem, cfg: &RunConfig) -> Result<Trace> {
    let s = problem.smoothness();
    cfg.step_rule.validate(s.l0, s.l1)?;
    let c = cfg.step_rule.c.expect("validated");
    let denom = cfg.step_rule.clip_denominator;
    let mut rec = Recorder::new(problem, cfg);
    let mut x = problem.x0().to_vec();
    let mut calls = 0u64;
    for k in 0..=cfg.budget_n {
        let f = problem.value(&x);
        let g = problem.gradient(&x);
        calls += 1;
        let gn = vector::norm(&g);
        let lambda = clip_factor(&g, c);
        let eta = match clip_gd_step_size(s.l0, s.l1, gn, c, denom) {
            Ok(e) => e,
            Err(e) => {
                rec.abort = Some(AbortInfo {
                    k,
                    reason: e.to_string(),
                });
                break;
            }
        };
        let mut r = base_record(k, f, gn, calls);
        r.eta = eta;
        r.lambda = lambda;
        if !rec.push(k, &x, r) || k == cfg.budget_n {
            break;
        }
        x = vector::add_scaled(&x, -eta * lambda, &g);
    }
    Ok(rec.finish())
}

/// Random coordinate descent: one uniformly sampled coordinate moves per
/// iteration, with the per-coordinate adaptive step on the max constants.
pub fn run_rcd(problem: &Problem, cfg: &RunConfig) -> Result<Trace> {
    let (l0_max, l1_max) = problem.smoothness().rcd_max_constants()?;
    let d = problem.dim();
    let mut rng = Rng::from_seed(cfg.seed);
    let mut rec = Recorder::new(problem, cfg);
    let mut x = problem.x0().to_vec();
    for k in 0..=cfg.budget_n {
        let f = problem.value(&x);
        let gn = vector::norm(&problem.gradient(&x));
        // One partial evaluation per completed step, charged to the
        // iterate it produced.
        let mut r = base_record(k, f, gn, k as u64);
        if k == cfg.budget_n {
            rec.push(k, &x, r);
            break;
        }
        let i = rng.uniform_index(d);
        let partial = problem.partial(i, &x);
        let eta = match rcd_step_size(l0_max, l1_max, partial.abs()) {
            Ok(e) => e,
            Err(e) => {
                rec.abort = Some(AbortInfo {
                    k,
                    reason: e.to_string(),
                });
                break;
            }
        };
        r.eta = eta;
        r.coord = Some(i);
        r.coord_partial = Some(partial);
        if !rec.push(k, &x, r) {
            break;
        }
        x[i] -= eta * partial;
    }
    Ok(rec.finish())
}

/// Coordinate descent driven purely by the comparison oracle: the sampled
/// coordinate is moved to the golden-section minimizer of the line.
///
/// Consumes the seed stream exactly like [`run_rcd`] (one index draw per
/// iteration), so equal seeds visit the same coordinate sequence.
pub fn run_order_rcd(problem: &Problem, cfg: &RunConfig) -> Result<Trace> {
    let (l0_max, _) = problem.smoothness().rcd_max_constants()?;
    let eps_hat = match (cfg.grm_eps_value, cfg.grm_eps_hat) {
        (Some(eps), _) if l0_max > 0.0 => 2.0 * eps / l0_max,
        (_, Some(eh)) => eh,
        (Some(_), None) => {
            return Err(Error::InvalidConfig(
                "grm_eps_value needs L0 > 0 to convert; give grm_eps_hat instead".into(),
            ))
        }
        (None, None) => unreachable!("validated"),
    };
    let d = problem.dim();
    let mut rng = Rng::from_seed(cfg.seed);
    let mut rec = Recorder::new(problem, cfg);
    let mut x = problem.x0().to_vec();
    let mut calls = 0u64;
    for k in 0..=cfg.budget_n {
        let f = problem.value(&x);
        let gn = vector::norm(&problem.gradient(&x));
        let mut r = base_record(k, f, gn, calls);
        if k == cfg.budget_n {
            rec.push(k, &x, r);
            break;
        }
        let i = rng.uniform_index(d);
        r.coord = Some(i);
        r.coord_partial = Some(problem.partial(i, &x));

        // Line comparison along coordinate i: sign(f(x + u e_i) - f(x + v e_i)).
        let base = x.clone();
        let mut line_calls = 0u64;
        let mut cmp = |u: f64, v: f64| -> Result<i8> {
            line_calls += 1;
            let mut xu = base.clone();
            xu[i] += u;
            let mut xv = base.clone();
            xv[i] += v;
            compare(problem, &xv, &xu)
        };

        let bracket = match bracket_minimum(&mut cmp, cfg.grm_eta0) {
            Ok(b) => b,
            Err(e) => {
                rec.abort = Some(AbortInfo {
                    k,
                    reason: e.to_string(),
                });
                break;
            }
        };
        let grm = golden_ratio_min(&mut cmp, bracket.lo, bracket.hi, eps_hat)?;
        // Accept only non-increasing moves; the exact line argmin never
        // loses to staying put, so an increasing probe means the tolerance
        // ate the step.
        let zeta = if cmp(grm.point, 0.0)? <= 0 { grm.point } else { 0.0 };

        r.zeta = Some(zeta);
        r.line_search = Some(LineSearchStats {
            bracket_lo: bracket.lo,
            bracket_hi: bracket.hi,
            bracket_calls: bracket.comparisons,
            grm_calls: grm.comparisons,
        });
        if !rec.push(k, &x, r) {
            break;
        }
        // Comparisons spent deciding step k are charged to reaching x^{k+1}.
        calls += line_calls;
        x[i] += zeta;
    }
    Ok(rec.finish())
}
