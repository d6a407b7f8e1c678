use approx::assert_abs_diff_eq;
use bqpref::reformulate::{ConstraintRole, ReformConstraint};
use bqpref::*;
use nalgebra::DMatrix;

fn e1() -> BqpInstance {
    BqpInstance::from_upper(2, &[(0, 1, 4.0)], &[-3.0, -3.0]).unwrap()
}

fn e1_qnr() -> ReformulatedProblem {
    let z = DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 2.0, 0.0]);
    build_qnr(&e1(), &ReformParams::manual(vec![2.0, 2.0], z, Vec::new())).unwrap()
}

fn prepared(n: usize, seed: u64, method: BnbMethod) -> (BqpInstance, ReformulatedProblem) {
    let inst = generate_pardalos(n, 0.8, seed)
        .unwrap()
        .normalize_diagonal();
    let p = prepare(&inst, method, &PipelineOptions::default()).unwrap();
    (p.instance, p.reform)
}

/// All fixings of the first `depth` variables, as partial assignments.
fn partial_fixings(depth: usize) -> Vec<Vec<(usize, u8)>> {
    (0..=depth)
        .flat_map(|k| binary_points(k).into_iter())
        .map(|bits| bits.into_iter().enumerate().collect())
        .collect()
}

fn best_completion(inst: &BqpInstance, fixed: &[(usize, u8)]) -> f64 {
    binary_points(inst.n())
        .into_iter()
        .filter(|x| fixed.iter().all(|&(i, b)| x[i] == b))
        .map(|x| inst.objective_binary(&x))
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn full_envelope_keeps_four_rows_per_product() {
    let opts = McCormickOptions {
        same_sign_reduction: false,
        ..McCormickOptions::default()
    };
    let m = build_relaxation(&e1_qnr(), &Fixings::new(), &opts).unwrap();
    assert_eq!(m.envelope_rows, 4);
    let b = bound_with(&e1_qnr(), &Fixings::new(), &opts).unwrap();
    assert_abs_diff_eq!(b.value, -4.0, epsilon = 1e-7);
    assert_eq!(b.x.len(), 2);
}

#[test]
fn bounds_never_exceed_the_best_completion() {
    for (seed, method) in [
        (1, BnbMethod::Qcr),
        (2, BnbMethod::Qcre),
        (3, BnbMethod::Qnr),
        (4, BnbMethod::QnrTri),
    ] {
        let (inst, reform) = prepared(6, seed, method);
        for fixed in partial_fixings(3) {
            let fix = Fixings::from_pairs(&fixed).unwrap();
            let b = bound(&reform, &fix).unwrap();
            let best = best_completion(&inst, &fixed);
            assert!(
                b <= best + 1e-6 * (1.0 + best.abs()),
                "{method} {fixed:?}: {b} > {best}"
            );
        }
    }
}

#[test]
fn fixing_more_variables_never_lowers_the_bound() {
    for seed in 10..14u64 {
        let (_, reform) = prepared(6, seed, BnbMethod::QnrTri);
        for fixed in partial_fixings(2) {
            let fix = Fixings::from_pairs(&fixed).unwrap();
            let parent = bound(&reform, &fix).unwrap();
            for v in 0..2u8 {
                let child = bound(&reform, &fix.with(5, v).unwrap()).unwrap();
                assert!(
                    child >= parent - 1e-6 * (1.0 + parent.abs()),
                    "{fixed:?}+x5={v}: {child} < {parent}"
                );
            }
        }
    }
}

#[test]
fn keeping_fixed_columns_gives_the_same_bound() {
    let (_, reform) = prepared(6, 21, BnbMethod::Qnr);
    let kept = McCormickOptions {
        eliminate_fixed: false,
        ..McCormickOptions::default()
    };
    for fixed in [
        vec![(0, 1)],
        vec![(1, 0), (4, 1)],
        vec![(0, 0), (2, 1), (3, 1)],
    ] {
        let fix = Fixings::from_pairs(&fixed).unwrap();
        let a = bound(&reform, &fix).unwrap();
        let b = bound_with(&reform, &fix, &kept).unwrap().value;
        assert_abs_diff_eq!(a, b, epsilon = 1e-6 * (1.0 + a.abs()));
        let m = build_relaxation(&reform, &fix, &kept).unwrap();
        assert!(m.columns.iter().filter(|v| matches!(v, Var::X(_))).count() == 6);
    }
}

#[test]
fn squared_terms_get_a_lifted_diagonal_column() {
    // min -w  s.t.  w - x0² <= 0: the relaxation should reach w = x0 = 1
    let mut objective = QuadForm::new();
    objective.add_linear(Var::W, -1.0);
    let mut form = QuadForm::new();
    form.add_linear(Var::W, 1.0);
    form.add_product(Var::X(0), Var::X(0), -1.0);
    let reform = ReformulatedProblem {
        method: Method::Qnr,
        n: 1,
        objective,
        constraints: vec![ReformConstraint {
            form,
            sense: ConstraintSense::Le,
            convexity: Convexity::Nonconvex,
            role: ConstraintRole::Epigraph,
        }],
        aux: vec![Var::W],
        params: ReformParams::diagonal(vec![0.0]),
    };
    let m = build_relaxation(&reform, &Fixings::new(), &McCormickOptions::default()).unwrap();
    assert_eq!(m.linearized, vec![(0, 0)]);
    assert!(m.columns.contains(&Var::Lifted(0, 0)));
    assert_abs_diff_eq!(
        bound(&reform, &Fixings::new()).unwrap(),
        -1.0,
        epsilon = 1e-7
    );
    let zero = Fixings::from_pairs(&[(0, 0)]).unwrap();
    assert_abs_diff_eq!(bound(&reform, &zero).unwrap(), 0.0, epsilon = 1e-7);
}

#[test]
fn fixings_outside_the_instance_are_rejected() {
    let fix = Fixings::from_pairs(&[(2, 1)]).unwrap();
    assert!(bound(&e1_qnr(), &fix).is_err());
    assert!(Fixings::from_pairs(&[(0, 1), (0, 0)]).is_err());
}
