//! Cross-module invariants: oracle agreement between analytic gradients and
//! central differences, order-oracle antisymmetry, clipping geometry, and
//! the per-step descent inequalities each method's theory guarantees.

use gdaudit_core::objective::{compare, finite_diff_gradient, Objective};
use gdaudit_core::optimizers::{run, Algorithm, RunConfig};
use gdaudit_core::problems::{make_problem, suite, suite_problem};
use gdaudit_core::rng::Rng;
use gdaudit_core::steprules::{clip, gd_step_size, StepRule};
use gdaudit_core::vector;

use proptest::prelude::*;

#[test]
fn finite_differences_match_analytic_gradients_across_suite() {
    let mut rng = Rng::from_seed(2024);
    for (name, spec) in suite() {
        let p = make_problem(spec).unwrap();
        for _ in 0..100 {
            let x: Vec<f64> = (0..p.dim()).map(|_| rng.uniform_in(-3.0, 3.0)).collect();
            let g = p.gradient(&x);
            let fd = finite_diff_gradient(&p, &x, 1e-6).unwrap();
            let err = vector::norm(&vector::sub(&fd, &g));
            let scale = vector::norm(&g).max(1.0);
            assert!(
                err <= 1e-6 * scale,
                "{name}: finite-diff mismatch {err:.3e} at {x:?}"
            );
        }
    }
}

#[test]
fn logistic_data_gradient_matches_at_spec_point() {
    let p = make_problem(suite_problem("logdata2").unwrap()).unwrap();
    let x = [0.3, -0.7];
    let g = p.gradient(&x);
    let fd = finite_diff_gradient(&p, &x, 1e-6).unwrap();
    for i in 0..2 {
        assert!((g[i] - fd[i]).abs() <= 1e-6 * g[i].abs().max(1.0));
    }
}

#[test]
fn compare_is_antisymmetric_on_sampled_pairs() {
    let mut rng = Rng::from_seed(77);
    for (_, spec) in suite() {
        let p = make_problem(spec).unwrap();
        for _ in 0..200 {
            let x: Vec<f64> = (0..p.dim()).map(|_| rng.uniform_in(-4.0, 4.0)).collect();
            let y: Vec<f64> = (0..p.dim()).map(|_| rng.uniform_in(-4.0, 4.0)).collect();
            let xy = compare(&p, &x, &y).unwrap();
            let yx = compare(&p, &y, &x).unwrap();
            assert_eq!(xy, -yx);
        }
    }
}

#[test]
fn objective_evaluation_is_pure() {
    for (_, spec) in suite() {
        let p = make_problem(spec).unwrap();
        let x: Vec<f64> = (0..p.dim()).map(|i| 0.7 - 0.2 * i as f64).collect();
        assert_eq!(p.value(&x).to_bits(), p.value(&x).to_bits());
        let g1 = p.gradient(&x);
        let g2 = p.gradient(&x);
        assert!(g1.iter().zip(&g2).all(|(a, b)| a.to_bits() == b.to_bits()));
    }
}

#[test]
fn gradient_vanishes_at_known_optima() {
    for (_, spec) in suite() {
        let p = make_problem(spec).unwrap();
        if let Some(xs) = p.optimum().x_star.clone() {
            assert!(vector::norm(&p.gradient(&xs)) <= 1e-9);
        }
    }
}

proptest! {
    #[test]
    fn gd_step_times_denominator_is_one(
        l0 in 0.0f64..100.0,
        l1 in 0.0f64..100.0,
        gn in 0.0f64..1e6,
    ) {
        prop_assume!(l0 + l1 * gn > 1e-300);
        let eta = gd_step_size(l0, l1, gn).unwrap();
        let product = eta * (l0 + l1 * gn);
        // IEEE division: the product is within one ulp of 1.
        prop_assert!((product - 1.0).abs() <= f64::EPSILON);
    }

    #[test]
    fn clip_never_exceeds_radius(
        g in prop::collection::vec(-1e6f64..1e6, 1..6),
        c in 1e-6f64..1e3,
    ) {
        let clipped = clip(&g, c).unwrap();
        prop_assert!(vector::norm(&clipped) <= c + 1e-12 + c * 1e-12);
        if vector::norm(&g) <= c {
            prop_assert_eq!(&clipped, &g);
        }
    }

    #[test]
    fn clip_is_positively_homogeneous(
        g in prop::collection::vec(-100.0f64..100.0, 1..5),
        c in 0.01f64..10.0,
        alpha in 0.01f64..100.0,
    ) {
        let scaled = clip(&vector::scale(alpha, &g), alpha * c).unwrap();
        let reference = vector::scale(alpha, &clip(&g, c).unwrap());
        for (a, b) in scaled.iter().zip(&reference) {
            prop_assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
        }
    }
}

/// GD: f(x^{k+1}) <= f(x^k) - (eta_k/2)‖∇f(x^k)‖^2.
#[test]
fn gd_per_step_descent_inequality() {
    for name in ["cosh1", "cosh10", "quad4", "logistic1d", "screg2"] {
        let p = make_problem(suite_problem(name).unwrap()).unwrap();
        let cfg = RunConfig::new(p.spec().clone(), Algorithm::Gd, StepRule::gd(), 80, 0);
        let t = run(&cfg).unwrap();
        for w in t.records.windows(2) {
            let bound = w[0].f_val - 0.5 * w[0].eta * w[0].grad_norm * w[0].grad_norm;
            assert!(
                w[1].f_val <= bound + 1e-10 * w[0].f_val.abs().max(1.0),
                "{name}: descent violated at k={}",
                w[0].k
            );
        }
    }
}

/// NGD: f(x^{k+1}) <= f(x^k) - (eta/2)‖∇f(x^k)‖ while the floor holds.
#[test]
fn ngd_per_step_descent_inequality() {
    let p = make_problem(suite_problem("cosh1").unwrap()).unwrap();
    let cfg = RunConfig::new(p.spec().clone(), Algorithm::Ngd, StepRule::ngd(1.5), 80, 0);
    let t = run(&cfg).unwrap();
    for w in t.records.windows(2) {
        if w[0].precondition_violated {
            break;
        }
        let bound = w[0].f_val - 0.5 * w[0].eta * w[0].grad_norm;
        assert!(w[1].f_val <= bound + 1e-10 * w[0].f_val.abs().max(1.0));
    }
}

/// RCD: f(x^{k+1}) <= f(x^k) - (eta_k/2)(∇_{i_k} f(x^k))^2.
#[test]
fn rcd_per_step_descent_inequality() {
    let p = make_problem(suite_problem("cosh4").unwrap()).unwrap();
    for seed in 0..20u64 {
        let cfg = RunConfig::new(p.spec().clone(), Algorithm::Rcd, StepRule::rcd(), 100, seed);
        let t = run(&cfg).unwrap();
        for w in t.records.windows(2) {
            let partial = w[0].coord_partial.unwrap();
            let bound = w[0].f_val - 0.5 * w[0].eta * partial * partial;
            assert!(w[1].f_val <= bound + 1e-10 * w[0].f_val.abs().max(1.0));
        }
    }
}

/// Clip-GD's step direction equals NGD's whenever the gradient norm
/// exceeds the radius: the displacement has length eta * c.
#[test]
fn clip_step_is_normalized_above_radius() {
    let p = make_problem(suite_problem("cosh1").unwrap()).unwrap();
    let c = 1.0;
    let cfg = RunConfig {
        snapshot_stride: 1,
        ..RunConfig::new(p.spec().clone(), Algorithm::ClipGd, StepRule::clip(c), 30, 0)
    };
    let t = run(&cfg).unwrap();
    for w in t.records.windows(2) {
        if w[0].grad_norm <= c {
            break;
        }
        let a = w[0].x_snapshot.as_ref().unwrap();
        let b = w[1].x_snapshot.as_ref().unwrap();
        let step = vector::norm(&vector::sub(b, a));
        assert!((step - w[0].eta * c).abs() <= 1e-12 * step.max(1.0));
    }
}
