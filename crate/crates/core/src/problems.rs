//! Test-objective suite with certified smoothness constants and known
//! optima.
//!
//! Every shipped `(L0, L1)` pair is a *certified upper bound*: it passes the
//! sampled finite-difference certification in [`crate::verify`] with zero
//! violations. Pointwise Hessian bounds are not enough for that — e.g. for
//! the hyperbolic-pair objective the Hessian satisfies
//! `|f''| <= 2 + |f'|`, but `|2 sinh(1) - 0| = 2.35 > 2`, so the shipped
//! constants carry the inflation the finite-difference form requires.

use serde::{Deserialize, Serialize};

use crate::objective::{Objective, OptimumInfo, SmoothnessSpec};
use crate::vector;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    /// `f(x) = 0.5 * sum_i a_i x_i^2`, minimizer at the origin.
    Quadratic,
    /// `f(x) = sum_i (e^{x_i} + e^{-x_i})`, the canonical two-phase test:
    /// the gradient norm crosses `L0/L1` during descent.
    CoshPair,
    /// `f(x) = sum_i e^{x_i}`, strong-growth instance (`L0 = 0`), no
    /// minimizer, infimum 0.
    ExpCoordSum,
    /// `f(x) = log(1 + e^{-x})` in one dimension; strictly decreasing,
    /// infimum 0, never attained.
    #[serde(rename = "logistic_1d")]
    Logistic1d,
    /// `f(x) = sum_j log(1 + exp(-b_j <a_j, x>))`.
    LogisticData,
    /// Logistic-data loss plus `(lambda/2)‖x‖^2`; `mu = lambda`, optimum
    /// solved once by a high-budget reference run and cached.
    StronglyConvexReg,
}

/// One labeled example `(a_j, b_j)` of a logistic loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataRow {
    pub a: Vec<f64>,
    pub b: f64,
}

/// Declarative description of a problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    pub dim: usize,
    /// Quadratic diagonal; required for `quadratic`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diag: Option<Vec<f64>>,
    /// Data rows; required for `logistic_data` and `strongly_convex_reg`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<Vec<DataRow>>,
    /// Regularizer; required for `strongly_convex_reg`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    pub x0: Vec<f64>,
}

impl ProblemSpec {
    pub fn quadratic(diag: Vec<f64>, x0: Vec<f64>) -> Self {
        Self {
            kind: ProblemKind::Quadratic,
            dim: diag.len(),
            diag: Some(diag),
            data: None,
            lambda: None,
            x0,
        }
    }

    pub fn cosh_pair(x0: Vec<f64>) -> Self {
        Self {
            kind: ProblemKind::CoshPair,
            dim: x0.len(),
            diag: None,
            data: None,
            lambda: None,
            x0,
        }
    }

    pub fn exp_coord_sum(x0: Vec<f64>) -> Self {
        Self {
            kind: ProblemKind::ExpCoordSum,
            dim: x0.len(),
            diag: None,
            data: None,
            lambda: None,
            x0,
        }
    }

    pub fn logistic_1d(x0: f64) -> Self {
        Self {
            kind: ProblemKind::Logistic1d,
            dim: 1,
            diag: None,
            data: None,
            lambda: None,
            x0: vec![x0],
        }
    }

    pub fn logistic_data(data: Vec<DataRow>, x0: Vec<f64>) -> Self {
        Self {
            kind: ProblemKind::LogisticData,
            dim: x0.len(),
            diag: None,
            data: Some(data),
            lambda: None,
            x0,
        }
    }

    pub fn strongly_convex_reg(data: Vec<DataRow>, lambda: f64, x0: Vec<f64>) -> Self {
        Self {
            kind: ProblemKind::StronglyConvexReg,
            dim: x0.len(),
            diag: None,
            data: Some(data),
            lambda: Some(lambda),
            x0,
        }
    }
}

#[derive(Debug, Clone)]
enum Kernel {
    Quadratic { diag: Vec<f64> },
    CoshPair,
    ExpCoordSum,
    Logistic1d,
    Logistic { rows: Vec<DataRow>, lambda: f64 },
}

/// A constructed problem: spec, oracles, certified constants, optimum.
#[derive(Debug, Clone)]
pub struct Problem {
    spec: ProblemSpec,
    kernel: Kernel,
    smoothness: SmoothnessSpec,
    optimum: OptimumInfo,
}

/// Numerically stable `log(1 + e^t)`.
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// Numerically stable logistic sigmoid `1 / (1 + e^{-t})`.
fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

impl Kernel {
    fn value(&self, x: &[f64]) -> f64 {
        match self {
            Kernel::Quadratic { diag } => {
                0.5 * diag.iter().zip(x).map(|(a, v)| a * v * v).sum::<f64>()
            }
            Kernel::CoshPair => x.iter().map(|&v| v.exp() + (-v).exp()).sum(),
            Kernel::ExpCoordSum => x.iter().map(|&v| v.exp()).sum(),
            Kernel::Logistic1d => softplus(-x[0]),
            Kernel::Logistic { rows, lambda } => {
                let loss: f64 = rows
                    .iter()
                    .map(|r| softplus(-r.b * vector::dot(&r.a, x)))
                    .sum();
                loss + 0.5 * lambda * vector::dot(x, x)
            }
        }
    }

    fn partial(&self, i: usize, x: &[f64]) -> f64 {
        match self {
            Kernel::Quadratic { diag } => diag[i] * x[i],
            Kernel::CoshPair => x[i].exp() - (-x[i]).exp(),
            Kernel::ExpCoordSum => x[i].exp(),
            Kernel::Logistic1d => -sigmoid(-x[0]),
            Kernel::Logistic { rows, lambda } => {
                let mut g = lambda * x[i];
                for r in rows {
                    g -= r.b * r.a[i] * sigmoid(-r.b * vector::dot(&r.a, x));
                }
                g
            }
        }
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match self {
            // The logistic kernels share the per-row sigmoid across
            // coordinates; everything else is separable anyway.
            Kernel::Logistic { rows, lambda } => {
                let mut g = vector::scale(*lambda, x);
                for r in rows {
                    let s = sigmoid(-r.b * vector::dot(&r.a, x));
                    for (gi, ai) in g.iter_mut().zip(&r.a) {
                        *gi -= r.b * ai * s;
                    }
                }
                g
            }
            _ => (0..x.len()).map(|i| self.partial(i, x)).collect(),
        }
    }
}

impl Objective for Problem {
    fn dim(&self) -> usize {
        self.spec.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.kernel.value(x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.kernel.gradient(x)
    }

    fn partial(&self, i: usize, x: &[f64]) -> f64 {
        self.kernel.partial(i, x)
    }

    fn smoothness(&self) -> &SmoothnessSpec {
        &self.smoothness
    }

    fn optimum(&self) -> &OptimumInfo {
        &self.optimum
    }
}

impl Problem {
    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn x0(&self) -> &[f64] {
        &self.spec.x0
    }

    /// `‖x0 - x*‖`, available when the minimizer is known.
    pub fn known_r(&self) -> Option<f64> {
        self.optimum
            .x_star
            .as_ref()
            .map(|xs| vector::norm(&vector::sub(&self.spec.x0, xs)))
    }

    /// Serializes the full problem (spec, certified constants, optimum) to
    /// JSON. Floats round-trip bit-exactly.
    pub fn to_manifest_json(&self) -> Result<String> {
        let m = Manifest {
            spec: self.spec.clone(),
            smoothness: self.smoothness.clone(),
            optimum: self.optimum.clone(),
        };
        Ok(serde_json::to_string_pretty(&m)?)
    }

    /// Restores a problem from a manifest without re-deriving constants or
    /// re-solving numeric optima.
    pub fn from_manifest_json(s: &str) -> Result<Problem> {
        let m: Manifest = serde_json::from_str(s)?;
        let kernel = build_kernel(&m.spec)?;
        m.smoothness.validate(m.spec.dim)?;
        Ok(Problem {
            spec: m.spec,
            kernel,
            smoothness: m.smoothness,
            optimum: m.optimum,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    spec: ProblemSpec,
    smoothness: SmoothnessSpec,
    optimum: OptimumInfo,
}

fn build_kernel(spec: &ProblemSpec) -> Result<Kernel> {
    if spec.dim == 0 {
        return Err(Error::InvalidParameter("dim must be >= 1".into()));
    }
    vector::check_dim(&spec.x0, spec.dim)?;
    vector::check_finite(&spec.x0, "problem x0")?;
    match spec.kind {
        ProblemKind::Quadratic => {
            let diag = spec
                .diag
                .clone()
                .ok_or_else(|| Error::InvalidParameter("quadratic requires diag".into()))?;
            vector::check_dim(&diag, spec.dim)?;
            if diag.iter().any(|&a| !(a > 0.0)) {
                return Err(Error::InvalidParameter(
                    "quadratic diagonal must be strictly positive".into(),
                ));
            }
            Ok(Kernel::Quadratic { diag })
        }
        ProblemKind::CoshPair => Ok(Kernel::CoshPair),
        ProblemKind::ExpCoordSum => Ok(Kernel::ExpCoordSum),
        ProblemKind::Logistic1d => {
            if spec.dim != 1 {
                return Err(Error::InvalidParameter("logistic_1d requires dim = 1".into()));
            }
            Ok(Kernel::Logistic1d)
        }
        ProblemKind::LogisticData | ProblemKind::StronglyConvexReg => {
            let rows = spec
                .data
                .clone()
                .ok_or_else(|| Error::InvalidParameter("logistic kinds require data rows".into()))?;
            if rows.is_empty() {
                return Err(Error::InvalidParameter("data rows must be non-empty".into()));
            }
            for r in &rows {
                vector::check_dim(&r.a, spec.dim)?;
                vector::check_finite(&r.a, "data row")?;
                if !r.b.is_finite() || r.b == 0.0 {
                    return Err(Error::InvalidParameter("labels must be finite and nonzero".into()));
                }
            }
            let lambda = match spec.kind {
                ProblemKind::StronglyConvexReg => {
                    let l = spec.lambda.ok_or_else(|| {
                        Error::InvalidParameter("strongly_convex_reg requires lambda".into())
                    })?;
                    if !(l > 0.0) {
                        return Err(Error::InvalidParameter("lambda must be > 0".into()));
                    }
                    l
                }
                _ => 0.0,
            };
            Ok(Kernel::Logistic { rows, lambda })
        }
    }
}

// Certified per-coordinate constants for the separable exponential kernels.
//
// For g(t) = 2 sinh(t) (hyperbolic pair): |g(x+h) - g(x)| <= (3 + 2|g(x)|)|h|
// on |h| <= 1/2, because 2 sinh h <= 3h and e^h - 1 <= 2h hold there.
// For g(t) = e^t: |g(x+h) - g(x)| <= 1.5 |g(x)| |h| on |h| <= 2/3, because
// e^h - 1 <= 1.5 h holds there (and 1 - e^{-h} <= h).
const COSH_L0: f64 = 3.0;
const COSH_L1: f64 = 2.0;
const EXP_L1: f64 = 1.5;

/// Builds the objective, populating certified constants and the optimum
/// where a closed form exists.
pub fn make_problem(spec: ProblemSpec) -> Result<Problem> {
    let kernel = build_kernel(&spec)?;
    let d = spec.dim;

    let (smoothness, optimum) = match (&spec.kind, &kernel) {
        (ProblemKind::Quadratic, Kernel::Quadratic { diag }) => {
            let l0 = diag.iter().cloned().fold(0.0, f64::max);
            let mu = diag.iter().cloned().fold(f64::INFINITY, f64::min);
            let s = SmoothnessSpec::new(l0, 0.0)
                .with_coords(diag.clone(), vec![0.0; d])
                .with_mu(mu);
            let o = OptimumInfo {
                x_star: Some(vec![0.0; d]),
                f_star: Some(0.0),
                numeric: false,
            };
            (s, o)
        }
        (ProblemKind::CoshPair, _) => {
            let s = SmoothnessSpec::new(COSH_L0, COSH_L1)
                .with_coords(vec![COSH_L0; d], vec![COSH_L1; d])
                .with_mu(2.0);
            let o = OptimumInfo {
                x_star: Some(vec![0.0; d]),
                f_star: Some(2.0 * d as f64),
                numeric: false,
            };
            (s, o)
        }
        (ProblemKind::ExpCoordSum, _) => {
            let s = SmoothnessSpec::new(0.0, EXP_L1)
                .with_coords(vec![0.0; d], vec![EXP_L1; d]);
            let o = OptimumInfo {
                x_star: None,
                f_star: Some(0.0),
                numeric: false,
            };
            (s, o)
        }
        (ProblemKind::Logistic1d, _) => {
            let s = SmoothnessSpec::new(0.0, EXP_L1)
                .with_coords(vec![0.0], vec![EXP_L1]);
            let o = OptimumInfo {
                x_star: None,
                f_star: Some(0.0),
                numeric: false,
            };
            (s, o)
        }
        (ProblemKind::LogisticData, Kernel::Logistic { rows, .. }) => {
            let (l0, l1) = logistic_bounds(rows, 0.0);
            let s = SmoothnessSpec::new(l0, l1).with_coords(vec![l0; d], vec![l1; d]);
            (s, OptimumInfo::default())
        }
        (ProblemKind::StronglyConvexReg, Kernel::Logistic { rows, lambda }) => {
            let (l0, l1) = logistic_bounds(rows, *lambda);
            let s = SmoothnessSpec::new(l0, l1)
                .with_coords(vec![l0; d], vec![l1; d])
                .with_mu(*lambda);
            let mut p = Problem {
                spec: spec.clone(),
                kernel: kernel.clone(),
                smoothness: s,
                optimum: OptimumInfo::default(),
            };
            p.optimum = reference_optimum(&p)?;
            return Ok(p);
        }
        _ => unreachable!("kernel/kind mismatch"),
    };

    smoothness.validate(d)?;
    Ok(Problem {
        spec,
        kernel,
        smoothness,
        optimum,
    })
}

/// Conservative certified pair for logistic losses: the loss is globally
/// `L`-smooth with `L = sum_j ‖a_j‖^2 / 4 (+ lambda)`, so that constant
/// alone bounds the gradient change and any `L1 >= 0` is admissible.
/// `L1 = max_j ‖a_j‖` is kept so the phase threshold stays finite.
fn logistic_bounds(rows: &[DataRow], lambda: f64) -> (f64, f64) {
    let l0 = 0.25 * rows.iter().map(|r| vector::dot(&r.a, &r.a)).sum::<f64>() + lambda;
    let l1 = rows
        .iter()
        .map(|r| vector::norm(&r.a))
        .fold(0.0, f64::max);
    (l0, l1)
}

/// High-budget reference solve used to cache numeric optima: adaptive-step
/// descent to gradient norm 1e-12.
fn reference_optimum(p: &Problem) -> Result<OptimumInfo> {
    const GRAD_TOL: f64 = 1e-12;
    const MAX_ITERS: usize = 500_000;
    let s = p.smoothness();
    let mut x = p.x0().to_vec();
    for _ in 0..MAX_ITERS {
        let g = p.gradient(&x);
        let gn = vector::norm(&g);
        if gn <= GRAD_TOL {
            break;
        }
        let eta = 1.0 / (s.l0 + s.l1 * gn);
        x = vector::add_scaled(&x, -eta, &g);
        if !vector::all_finite(&x) {
            return Err(Error::NonFinite("reference optimum solve".into()));
        }
    }
    let gn = vector::norm(&p.gradient(&x));
    if gn > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "reference solve stalled at gradient norm {gn}"
        )));
    }
    Ok(OptimumInfo {
        f_star: Some(p.value(&x)),
        x_star: Some(x),
        numeric: true,
    })
}

/// Surrogate target for objectives with an infimum but no minimizer:
/// the point `s` with `log(1 + e^{-s}) = eps`, i.e. `s = -log(e^eps - 1)`,
/// and the radius `R_s = |x0 - s|`.
pub fn logistic_surrogate_target(eps: f64, x0: f64) -> Result<(f64, f64)> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter("eps must be > 0".into()));
    }
    let s = -(eps.exp_m1()).ln();
    Ok((s, (x0 - s).abs()))
}

/// Named preset instances used by the CLI and the audit suite.
pub fn suite() -> Vec<(&'static str, ProblemSpec)> {
    vec![
        ("quad1", ProblemSpec::quadratic(vec![1.0], vec![2.0])),
        ("quad2", ProblemSpec::quadratic(vec![1.0, 4.0], vec![1.0, 1.0])),
        (
            "quad4",
            ProblemSpec::quadratic(vec![0.5, 1.0, 2.0, 4.0], vec![1.0, 1.0, 1.0, 1.0]),
        ),
        ("cosh1", ProblemSpec::cosh_pair(vec![3.0])),
        ("cosh4", ProblemSpec::cosh_pair(vec![1.0; 4])),
        ("cosh10", ProblemSpec::cosh_pair(vec![2.0; 10])),
        ("exp2", ProblemSpec::exp_coord_sum(vec![0.0, 1.0])),
        ("logistic1d", ProblemSpec::logistic_1d(0.0)),
        (
            "logdata2",
            ProblemSpec::logistic_data(
                vec![
                    DataRow {
                        a: vec![1.0, 0.5],
                        b: 1.0,
                    },
                    DataRow {
                        a: vec![-0.3, 0.8],
                        b: -1.0,
                    },
                    DataRow {
                        a: vec![0.6, -0.4],
                        b: 1.0,
                    },
                ],
                vec![0.3, -0.7],
            ),
        ),
        (
            "screg2",
            ProblemSpec::strongly_convex_reg(
                vec![DataRow {
                    a: vec![2.0, 0.0],
                    b: 1.0,
                }],
                0.5,
                vec![6.0, 0.0],
            ),
        ),
    ]
}

/// Looks up a preset by name.
pub fn suite_problem(name: &str) -> Result<ProblemSpec> {
    suite()
        .into_iter()
        .find(|(n, _)| *n == name)
        .map(|(_, s)| s)
        .ok_or_else(|| Error::InvalidParameter(format!("unknown suite problem '{name}'")))
}
