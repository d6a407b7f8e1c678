use bqp_numerics::{solve_qp, QpModel, QpSettings, QpStatus};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

/// Accelerated projected gradient on the unit box.
fn box_oracle(p: &DMatrix<f64>, q: &DVector<f64>) -> f64 {
    let n = q.len();
    let lip = bqp_numerics::spectral_norm(p).unwrap().max(1e-12);
    let project = |v: DVector<f64>| v.map(|t| t.clamp(0.0, 1.0));
    let f = |x: &DVector<f64>| 0.5 * x.dot(&(p * x)) + q.dot(x);
    let mut x = DVector::from_element(n, 0.5);
    let mut z = x.clone();
    let mut t = 1.0_f64;
    for _ in 0..20_000 {
        let grad = p * &z + q;
        let next = project(&z - grad / lip);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        z = &next + (&next - &x) * ((t - 1.0) / t_next);
        x = next;
        t = t_next;
    }
    f(&x)
}

fn random_model() -> impl Strategy<Value = (usize, Vec<f64>, Vec<f64>)> {
    (1usize..=6).prop_flat_map(|n| {
        (
            Just(n),
            prop::collection::vec(-3.0..3.0f64, n * n),
            prop::collection::vec(-5.0..5.0f64, n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn box_qp_matches_projected_gradient((n, b, q) in random_model()) {
        let b = DMatrix::from_row_slice(n, n, &b);
        let p = b.transpose() * &b;
        let q = DVector::from_vec(q);
        let mut model = QpModel::new(n);
        model.hessian = p.clone();
        model.linear = q.clone();
        for j in 0..n {
            model.set_bounds(j, 0.0, 1.0);
        }
        let sol = solve_qp(&model, &QpSettings::default()).unwrap();
        prop_assert_eq!(sol.status, QpStatus::Optimal);
        let oracle = box_oracle(&p, &q);
        let tol = 1e-6 * (1.0 + sol.value.abs());
        prop_assert!(sol.value >= oracle - tol, "solver {} below oracle {}", sol.value, oracle);
        prop_assert!(sol.value <= oracle + tol, "solver {} above oracle {}", sol.value, oracle);
    }

    #[test]
    fn optimal_solutions_satisfy_kkt((n, b, q) in random_model(), rhs in 0.5..3.0f64) {
        let b = DMatrix::from_row_slice(n, n, &b);
        let mut model = QpModel::new(n);
        model.hessian = b.transpose() * &b;
        model.linear = DVector::from_vec(q);
        for j in 0..n {
            model.set_bounds(j, 0.0, 1.0);
        }
        model.add_inequality((0..n).map(|j| (j, 1.0)).collect(), rhs);
        if n >= 2 {
            model.add_equality(vec![(0, 1.0), (1, -1.0)], 0.0);
        }
        let sol = solve_qp(&model, &QpSettings::default()).unwrap();
        prop_assert_eq!(sol.status, QpStatus::Optimal);
        let h_norm = rhs.max(1.0);
        prop_assert!(sol.primal_residual <= 1e-7 * (1.0 + h_norm));
        prop_assert!(sol.gap.abs() <= 1e-7 * (1.0 + sol.value.abs()));
        prop_assert!(sol.dual_residual <= 1e-6 * (1.0 + model.linear.amax()));
        for d in sol.ineq_duals.iter().chain(&sol.lower_duals).chain(&sol.upper_duals) {
            prop_assert!(*d >= -1e-9);
        }
    }
}

#[test]
fn deterministic_for_fixed_input() {
    let mut model = QpModel::new(3);
    model.hessian = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0]);
    model.linear = DVector::from_vec(vec![-1.0, 0.5, -2.0]);
    for j in 0..3 {
        model.set_bounds(j, 0.0, 1.0);
    }
    let a = solve_qp(&model, &QpSettings::default()).unwrap();
    let b = solve_qp(&model, &QpSettings::default()).unwrap();
    assert_eq!(a.point, b.point);
    assert_eq!(a.value.to_bits(), b.value.to_bits());
}
