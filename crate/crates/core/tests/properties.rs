use std::sync::Arc;

use klprox::analysis::{
    check_h1, check_h2, estimate_q_order, fit_constants, predicted_order, SyntheticKLProblem,
};
use klprox::harness::{
    format_libsvm, gen_least_squares_data, gen_logistic_data, parse_libsvm, LabelMode,
};
use klprox::linalg::DenseVector;
use klprox::models::{
    least_squares_l0_objective, prox_l0, prox_l1, LeastSquaresModel, LogisticModel, SmoothModel,
};
use klprox::solver::{run, SolverConfig};
use klprox::subproblem::{self, model_smooth_gradient, model_value, pg_step, SubproblemSpec};
use klprox::trace::{RunConfig, Trace};
use proptest::prelude::*;

/// Smallest per-coordinate prox objective over a grid on [−2|z|, 2|z|] plus {0, z}.
fn grid_best(z: f64, t: f64, g: impl Fn(f64) -> f64) -> f64 {
    let obj = |u: f64| 0.5 * (u - z).powi(2) + t * g(u);
    let span = 2.0 * z.abs();
    let mut best = obj(0.0).min(obj(z));
    for i in 0..1001 {
        let u = -span + 2.0 * span * i as f64 / 1000.0;
        best = best.min(obj(u));
    }
    best
}

fn vector(dim: usize) -> impl Strategy<Value = DenseVector> {
    prop::collection::vec(-3.0..3.0f64, dim).prop_map(|v| DenseVector::new(v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn prox_l0_beats_grid(t in 0.01..3.0f64, lambda in 0.01..1.0f64, z in vector(4)) {
        let p = prox_l0(t, lambda, &z);
        for i in 0..z.dim() {
            let g = |u: f64| if u == 0.0 { 0.0 } else { lambda };
            let at = 0.5 * (p[i] - z[i]).powi(2) + t * g(p[i]);
            prop_assert!(at <= grid_best(z[i], t, g) + 1e-12);
        }
    }

    #[test]
    fn prox_l1_beats_grid(t in 0.01..3.0f64, lambda in 0.01..1.0f64, z in vector(4)) {
        let p = prox_l1(t, lambda, &z);
        for i in 0..z.dim() {
            let g = |u: f64| lambda * u.abs();
            let at = 0.5 * (p[i] - z[i]).powi(2) + t * g(p[i]);
            prop_assert!(at <= grid_best(z[i], t, g) + 1e-12);
        }
    }

    #[test]
    fn hess_vec_is_symmetric(seed in 0u64..1000, x in vector(6), u in vector(6), v in vector(6)) {
        let d = gen_logistic_data(30, 6, seed, 3).unwrap();
        let labels = d.labels();
        let logistic = LogisticModel::new(d.features, labels, 1e-3).unwrap();
        let ls_data = gen_least_squares_data(30, 6, seed, 0.1, 3).unwrap();
        let ls = LeastSquaresModel::new(ls_data.features, ls_data.targets).unwrap();
        let models: [&dyn SmoothModel; 2] = [&logistic, &ls];
        for m in models {
            let lhs = m.hess_vec(&x, &u).dot(&v);
            let rhs = m.hess_vec(&x, &v).dot(&u);
            prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + u.norm() * v.norm()));
        }
    }

    #[test]
    fn logistic_value_dominates_ridge(seed in 0u64..1000, mu in 1e-4..1.0f64, x in vector(5)) {
        let d = gen_logistic_data(20, 5, seed, 2).unwrap();
        let labels = d.labels();
        let m = LogisticModel::new(d.features, labels, mu).unwrap();
        prop_assert!(m.value(&x) >= 0.5 * mu * x.dot(&x));
    }

    #[test]
    fn fitted_constants_round_trip(
        drops in prop::collection::vec(0.0..2.0f64, 1..30),
        steps in prop::collection::vec(1e-3..2.0f64, 30),
        certs in prop::collection::vec(0.0..5.0f64, 30),
        p in 0.5..3.0f64,
    ) {
        let mut values = vec![10.0];
        for d in &drops {
            values.push(values.last().unwrap() - d);
        }
        let n = drops.len();
        let config = RunConfig::Synthetic { problem: SyntheticKLProblem::new(2.0, p).unwrap(), a: 1.0, b: 1.0 };
        let trace = Trace::from_scalars(&values, &steps[..n], &certs[..n], config);
        let report = fit_constants(&trace, p).unwrap();
        prop_assert!(report.a_fit >= 0.0 && report.b_fit >= 0.0);
        prop_assert!(check_h1(&trace, report.a_fit, p).0);
        prop_assert!(check_h2(&trace, report.b_fit, p).0);
        // monotone in a: anything below the fitted value also passes
        prop_assert!(check_h1(&trace, 0.5 * report.a_fit, p).0);
    }

    #[test]
    fn q_order_is_scale_invariant(
        factors in prop::collection::vec(0.05..0.8f64, 4..20),
        c in 1e-3..1e3f64,
    ) {
        let mut e = vec![1.0];
        for f in &factors {
            e.push(e.last().unwrap() * f);
        }
        let scaled: Vec<f64> = e.iter().map(|v| c * v).collect();
        let a = estimate_q_order(&e).unwrap();
        let b = estimate_q_order(&scaled).unwrap();
        prop_assert_eq!(a.q_orders.len(), b.q_orders.len());
        for (x, y) in a.q_orders.iter().zip(&b.q_orders) {
            prop_assert!((x - y).abs() <= 1e-12, "{} vs {}", x, y);
        }
        prop_assert!(a.q_order_tail >= 0.0);
        prop_assert!((0.0..=1.0).contains(&a.r_squared));
    }

    #[test]
    fn predicted_order_monotone(p in 0.1..5.0f64, s1 in 0.01..0.99f64, s2 in 0.01..0.99f64, dp in 0.01..2.0f64) {
        let bound = p / (p + 1.0);
        let (lo, hi) = (s1.min(s2) * bound, s1.max(s2) * bound);
        prop_assert!(predicted_order(p, lo).unwrap() >= predicted_order(p, hi).unwrap());
        // θ stays admissible when p grows
        prop_assert!(predicted_order(p + dp, lo).unwrap() >= predicted_order(p, lo).unwrap());
    }

    #[test]
    fn libsvm_round_trip(seed in 0u64..500, n in 1usize..15, dim in 1usize..8) {
        let d = gen_least_squares_data(n, dim, seed, 0.5, dim.min(2)).unwrap();
        let back = parse_libsvm(&format_libsvm(&d, LabelMode::Real), LabelMode::Real, Some(dim)).unwrap();
        prop_assert_eq!(back.features, d.features);
        prop_assert_eq!(back.targets, d.targets);
    }
}

fn small_ls_l0(seed: u64, dim: usize) -> klprox::models::CompositeObjective {
    let d = gen_least_squares_data(3 * dim, dim, seed, 0.05, 2).unwrap();
    least_squares_l0_objective(d.features, d.targets, 0.05).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn subproblem_results_are_certified(seed in 0u64..1000, weight in 1e-2..10.0f64, q in 2.0..3.0f64, x in vector(5)) {
        let objective = small_ls_l0(seed, 5);
        let grad = objective.smooth.gradient(&x);
        let spec = SubproblemSpec {
            objective: &objective,
            center: &x,
            grad_at_center: &grad,
            weight,
            order: q,
            tolerance: 1.0,
            curvature: subproblem::curvature_estimate(objective.smooth.as_ref(), &x, 5),
        };
        if let Ok(r) = subproblem::solve(&spec, 20_000, &Default::default(), None) {
            let d = r.point.distance(&x);
            prop_assert!(r.certificate_norm <= weight * d.powf(q - 1.0) + 1e-12);
            prop_assert!(model_value(&spec, &r.point) <= model_value(&spec, &x) + 1e-12);
            prop_assert!((r.certificate.norm() - r.certificate_norm).abs() <= 1e-12 * (1.0 + r.certificate_norm));
        }
    }

    #[test]
    fn pg_step_certificate_matches_prox_optimality(seed in 0u64..1000, t in 1e-3..1.0f64, x in vector(5)) {
        let objective = small_ls_l0(seed, 5);
        let grad = objective.smooth.gradient(&x);
        let center = DenseVector::zeros(5);
        let spec = SubproblemSpec {
            objective: &objective,
            center: &center,
            grad_at_center: &grad,
            weight: 1.0,
            order: 3.0,
            tolerance: 1.0,
            curvature: 1.0,
        };
        let (next, w) = pg_step(&spec, &x, t);
        // v = (z − next)/t is the prox multiplier; it vanishes on the kept support
        let z = x.axpy(-t, &model_smooth_gradient(&spec, &x));
        let v = (&z - &next).scale(1.0 / t);
        for i in 0..5 {
            if next[i] != 0.0 {
                prop_assert!(v[i].abs() <= 1e-10 * (1.0 + z[i].abs() / t));
            }
        }
        let rebuilt = v.axpy(1.0, &model_smooth_gradient(&spec, &next));
        prop_assert!(rebuilt.distance(&w) <= 1e-10 * (1.0 + w.norm()));
    }

    #[test]
    fn prox_newton_traces_satisfy_h1(seed in 0u64..1000, q in 2.0..3.0f64) {
        let objective = small_ls_l0(seed, 6);
        let x0 = klprox::harness::gen_normal_vector(6, seed + 1);
        let config = SolverConfig { q, ..Default::default() };
        let trace = run(&objective, &x0, &config).unwrap();
        prop_assert_eq!(trace.records[0].k, 0);
        prop_assert!(check_h1(&trace, config.decrease_constant(), q - 1.0).0);
        for w in trace.records.windows(2) {
            prop_assert!(w[1].f_value <= w[0].f_value + 1e-12 * (1.0 + w[0].f_value.abs()));
            prop_assert!(w[1].l_k >= config.l_min);
            prop_assert!(w[1].l_k <= config.tau.powi(w[1].j_k as i32) * config.l_max);
            prop_assert!(w[1].j_k <= config.max_j);
        }
    }
}

#[test]
fn dense_vector_rejects_non_finite() {
    assert!(DenseVector::new(vec![1.0, f64::INFINITY]).is_err());
    let a = DenseVector::new(vec![1.0, 2.0]).unwrap();
    let b = &a + &a;
    assert_eq!(b.dim(), 2);
    let _ = Arc::new(a);
}
