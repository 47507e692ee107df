//! Sampled certification of the smoothness assumptions, co-coercivity, the
//! descent inequalities, and gradient-norm monotonicity.
//!
//! Each check draws pairs from a box region, honors the `‖y - x‖ <= 1/L1`
//! restriction the inequalities come with, and records the slack
//! `rhs - lhs` per pair. A pair counts as a violation only when its
//! *relative* slack falls below `-rel_tol`; binary64 cancellation near
//! `x = y` otherwise produces spurious hits.

use serde::{Deserialize, Serialize};

use crate::objective::Objective;
use crate::optimizers::Trace;
use crate::rng::Rng;
use crate::vector;
use crate::Result;

/// Sampler and tolerance knobs.
///
/// The default box half-width 5 makes gradients span both sides of `L0/L1`
/// on the suite problems, so both convergence phases are exercised.
#[derive(Debug, Clone, Copy)]
pub struct CertOptions {
    pub region_halfwidth: f64,
    pub rel_tol: f64,
}

impl Default for CertOptions {
    fn default() -> Self {
        Self {
            region_halfwidth: 5.0,
            rel_tol: 1e-10,
        }
    }
}

/// Worst offending pair, kept for reproduction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertReport {
    pub samples: u64,
    pub violations: u64,
    /// Most negative relative slack observed (positive means every sampled
    /// pair satisfied the inequality with margin).
    pub worst_margin: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

impl CertReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

struct Accumulator {
    opts: CertOptions,
    samples: u64,
    violations: u64,
    worst_margin: f64,
    witness: Option<Witness>,
}

impl Accumulator {
    fn new(opts: CertOptions) -> Self {
        Self {
            opts,
            samples: 0,
            violations: 0,
            worst_margin: f64::INFINITY,
            witness: None,
        }
    }

    /// Records one pair with `slack = rhs - lhs`, scaled by the magnitude
    /// of the sides.
    fn record(&mut self, slack: f64, scale: f64, x: &[f64], y: &[f64]) {
        self.samples += 1;
        let rel = slack / scale.max(1.0);
        if rel < self.worst_margin {
            self.worst_margin = rel;
            self.witness = Some(Witness {
                x: x.to_vec(),
                y: y.to_vec(),
            });
        }
        if rel < -self.opts.rel_tol {
            self.violations += 1;
        }
    }

    fn finish(self) -> CertReport {
        CertReport {
            samples: self.samples,
            violations: self.violations,
            worst_margin: if self.samples == 0 { 0.0 } else { self.worst_margin },
            witness: self.witness,
        }
    }
}

fn sample_box(rng: &mut Rng, d: usize, b: f64) -> Vec<f64> {
    (0..d).map(|_| rng.uniform_in(-b, b)).collect()
}

/// Step radius respecting the `‖y - x‖ <= 1/L1` restriction; unbounded
/// cases are capped at the box diameter.
fn max_radius(l1: f64, d: usize, b: f64) -> f64 {
    let cap = 2.0 * b * (d as f64).sqrt();
    if l1 > 0.0 {
        (1.0 / l1).min(cap)
    } else {
        cap
    }
}

/// Assumption check: `‖∇f(y) - ∇f(x)‖ <= (L0 + L1‖∇f(x)‖)‖y - x‖`
/// for `‖y - x‖ <= 1/L1`.
pub fn certify_smoothness(
    f: &dyn Objective,
    l0: f64,
    l1: f64,
    n_pairs: u64,
    rng: &mut Rng,
    opts: CertOptions,
) -> CertReport {
    let d = f.dim();
    let rmax = max_radius(l1, d, opts.region_halfwidth);
    let mut acc = Accumulator::new(opts);
    for _ in 0..n_pairs {
        let x = sample_box(rng, d, opts.region_halfwidth);
        let u = rng.unit_vector(d);
        let r = rng.uniform_in(0.0, rmax);
        let y = vector::add_scaled(&x, r, &u);
        let gx = f.gradient(&x);
        let gy = f.gradient(&y);
        let lhs = vector::norm(&vector::sub(&gy, &gx));
        let rhs = (l0 + l1 * vector::norm(&gx)) * vector::norm(&vector::sub(&y, &x));
        acc.record(rhs - lhs, lhs.abs().max(rhs.abs()), &x, &y);
    }
    acc.finish()
}

/// Per-coordinate assumption check:
/// `|∇_i f(x + h e_i) - ∇_i f(x)| <= (L0_i + L1_i|∇_i f(x)|)|h|`
/// for `|h| <= 1/max_i L1_i`.
pub fn certify_coordinate_smoothness(
    f: &dyn Objective,
    coord_l0: &[f64],
    coord_l1: &[f64],
    n_pairs: u64,
    rng: &mut Rng,
    opts: CertOptions,
) -> CertReport {
    let d = f.dim();
    let l1_max = coord_l1.iter().cloned().fold(0.0, f64::max);
    let hmax = max_radius(l1_max, 1, opts.region_halfwidth);
    let mut acc = Accumulator::new(opts);
    for _ in 0..n_pairs {
        let x = sample_box(rng, d, opts.region_halfwidth);
        let i = rng.uniform_index(d);
        let h = rng.uniform_in(-hmax, hmax);
        let mut y = x.clone();
        y[i] += h;
        let pi_x = f.partial(i, &x);
        let pi_y = f.partial(i, &y);
        let lhs = (pi_y - pi_x).abs();
        let rhs = (coord_l0[i] + coord_l1[i] * pi_x.abs()) * h.abs();
        acc.record(rhs - lhs, lhs.abs().max(rhs.abs()), &x, &y);
    }
    acc.finish()
}

/// Co-coercivity check:
/// `‖∇f(y) - ∇f(x)‖^2 / (2(L0 + L1‖∇f(x)‖)) <= f(x) - f(y) - <∇f(y), x - y>`
/// for `‖y - x‖ <= 1/L1`.
pub fn check_cocoercivity(
    f: &dyn Objective,
    l0: f64,
    l1: f64,
    n_pairs: u64,
    rng: &mut Rng,
    opts: CertOptions,
) -> CertReport {
    let d = f.dim();
    let rmax = max_radius(l1, d, opts.region_halfwidth);
    let mut acc = Accumulator::new(opts);
    for _ in 0..n_pairs {
        let x = sample_box(rng, d, opts.region_halfwidth);
        let u = rng.unit_vector(d);
        let r = rng.uniform_in(0.0, rmax);
        let y = vector::add_scaled(&x, r, &u);
        acc.record_cocoercivity_pair(f, l0, l1, &x, &y);
    }
    acc.finish()
}

impl Accumulator {
    fn record_cocoercivity_pair(
        &mut self,
        f: &dyn Objective,
        l0: f64,
        l1: f64,
        x: &[f64],
        y: &[f64],
    ) {
        let gx = f.gradient(x);
        let gy = f.gradient(y);
        let diff = vector::sub(&gy, &gx);
        let lhs = vector::dot(&diff, &diff) / (2.0 * (l0 + l1 * vector::norm(&gx)));
        let rhs = f.value(x) - f.value(y) - vector::dot(&gy, &vector::sub(x, y));
        self.record(rhs - lhs, lhs.abs().max(rhs.abs()), x, y);
    }
}

/// Single-pair co-coercivity slack, exposed for the known tight cases.
pub fn cocoercivity_slack(f: &dyn Objective, l0: f64, l1: f64, x: &[f64], y: &[f64]) -> f64 {
    let gx = f.gradient(x);
    let gy = f.gradient(y);
    let diff = vector::sub(&gy, &gx);
    let lhs = vector::dot(&diff, &diff) / (2.0 * (l0 + l1 * vector::norm(&gx)));
    let rhs = f.value(x) - f.value(y) - vector::dot(&gy, &vector::sub(x, y));
    rhs - lhs
}

/// Descent-form check:
/// `f(y) - f(x) <= <∇f(x), y - x> + (L0 + L1‖∇f(x)‖)/2 ‖y - x‖^2`
/// for `‖y - x‖ <= 1/L1`.
pub fn check_descent_inequality(
    f: &dyn Objective,
    l0: f64,
    l1: f64,
    n_pairs: u64,
    rng: &mut Rng,
    opts: CertOptions,
) -> CertReport {
    let d = f.dim();
    let rmax = max_radius(l1, d, opts.region_halfwidth);
    let mut acc = Accumulator::new(opts);
    for _ in 0..n_pairs {
        let x = sample_box(rng, d, opts.region_halfwidth);
        let u = rng.unit_vector(d);
        let r = rng.uniform_in(0.0, rmax);
        let y = vector::add_scaled(&x, r, &u);
        let gx = f.gradient(&x);
        let step = vector::sub(&y, &x);
        let lhs = f.value(&y) - f.value(&x);
        let rhs = vector::dot(&gx, &step)
            + 0.5 * (l0 + l1 * vector::norm(&gx)) * vector::dot(&step, &step);
        acc.record(rhs - lhs, lhs.abs().max(rhs.abs()), &x, &y);
    }
    acc.finish()
}

/// Coordinate descent-form check:
/// `f(x + h e_i) <= f(x) + h ∇_i f(x) + (L0_i + L1_i|∇_i f(x)|) h^2 / 2`
/// for `|h| <= 1/L1_i`.
pub fn check_coord_descent_inequality(
    f: &dyn Objective,
    coord_l0: &[f64],
    coord_l1: &[f64],
    n_pairs: u64,
    rng: &mut Rng,
    opts: CertOptions,
) -> CertReport {
    let d = f.dim();
    let mut acc = Accumulator::new(opts);
    for _ in 0..n_pairs {
        let x = sample_box(rng, d, opts.region_halfwidth);
        let i = rng.uniform_index(d);
        let hmax = max_radius(coord_l1[i], 1, opts.region_halfwidth);
        let h = rng.uniform_in(-hmax, hmax);
        let mut y = x.clone();
        y[i] += h;
        let pi = f.partial(i, &x);
        let lhs = f.value(&y) - f.value(&x);
        let rhs = h * pi + 0.5 * (coord_l0[i] + coord_l1[i] * pi.abs()) * h * h;
        acc.record(rhs - lhs, lhs.abs().max(rhs.abs()), &x, &y);
    }
    acc.finish()
}

/// Strong-convexity check:
/// `f(y) >= f(x) + <∇f(x), y - x> + (mu/2)‖y - x‖^2` (no radius
/// restriction).
pub fn certify_strong_convexity(
    f: &dyn Objective,
    mu: f64,
    n_pairs: u64,
    rng: &mut Rng,
    opts: CertOptions,
) -> CertReport {
    let d = f.dim();
    let mut acc = Accumulator::new(opts);
    for _ in 0..n_pairs {
        let x = sample_box(rng, d, opts.region_halfwidth);
        let y = sample_box(rng, d, opts.region_halfwidth);
        let gx = f.gradient(&x);
        let step = vector::sub(&y, &x);
        let lhs = f.value(&x) + vector::dot(&gx, &step) + 0.5 * mu * vector::dot(&step, &step);
        let rhs = f.value(&y);
        acc.record(rhs - lhs, lhs.abs().max(rhs.abs()), &x, &y);
    }
    acc.finish()
}

/// Gradient-norm monotonicity over the index range where the relevant
/// lemma's precondition held. The witness (if any) carries
/// `x = [k, grad_k]`, `y = [k+1, grad_{k+1}]` of the worst step.
pub fn check_gradnorm_monotone(
    trace: &Trace,
    valid_range: std::ops::Range<usize>,
    rel_tol: f64,
) -> CertReport {
    let mut acc = Accumulator::new(CertOptions {
        rel_tol,
        ..CertOptions::default()
    });
    let end = valid_range.end.min(trace.records.len());
    for k in valid_range.start..end.saturating_sub(1) {
        let g0 = trace.records[k].grad_norm;
        let g1 = trace.records[k + 1].grad_norm;
        acc.record(g0 - g1, g0.abs(), &[k as f64, g0], &[(k + 1) as f64, g1]);
    }
    acc.finish()
}
