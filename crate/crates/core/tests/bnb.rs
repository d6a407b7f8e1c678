use std::time::Duration;

use bqpref::*;
use proptest::prelude::*;

fn hard_case() -> (BqpInstance, Prepared) {
    let inst = generate_pardalos(14, 0.9, 5).unwrap();
    let p = prepare(&inst, BnbMethod::Qcr, &PipelineOptions::default()).unwrap();
    (inst, p)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn heuristic_returns_a_local_minimum(
        n in 1usize..9,
        seed in any::<u64>(),
        frac in prop::collection::vec(0.0f64..1.0, 8),
    ) {
        let inst = generate_pardalos(n, 0.7, seed).unwrap();
        let (x, v) = incumbent_heuristic(&frac[..n], &inst);
        prop_assert_eq!(inst.objective_binary(&x), v);
        for i in 0..n {
            let mut y = x.clone();
            y[i] ^= 1;
            prop_assert!(inst.objective_binary(&y) >= v);
        }
    }

    #[test]
    fn branching_picks_the_most_fractional_entry(frac in prop::collection::vec(0.0f64..1.0, 1..10)) {
        match branch_select(&frac) {
            Ok(k) => {
                let d = (frac[k] - 0.5).abs();
                prop_assert!(frac.iter().all(|v| (v - 0.5).abs() >= d));
                prop_assert!(frac[..k].iter().all(|v| (v - 0.5).abs() > d || v.min(1.0 - v) <= 1e-6));
            }
            Err(_) => prop_assert!(frac.iter().all(|v| v.min(1.0 - v) <= 1e-6)),
        }
    }
}

#[test]
fn every_method_finds_the_enumerated_optimum() {
    for seed in 0..5u64 {
        let inst = generate_pardalos(10, 0.5 + 0.1 * seed as f64, 100 + seed).unwrap();
        let v_star = brute_force(&inst).unwrap().value;
        for method in BnbMethod::ALL {
            let r = solve_bnb(&inst, method, &BnbOptions::default()).unwrap();
            assert_eq!(r.status, BnbStatus::Optimal);
            assert_eq!(r.value, v_star, "{method} seed {seed}");
            assert_eq!(inst.objective_binary(&r.solution), r.value);
            assert!(r.root_bound <= v_star + 1e-6 * (1.0 + v_star.abs()));
            assert!(r.node_count >= 1);
        }
    }
}

#[test]
fn root_bound_is_the_reformulation_bound() {
    let (_, p) = hard_case();
    let r = branch_and_bound(&p.instance, &p.reform, &BnbOptions::default()).unwrap();
    let b = bound(&p.reform, &Fixings::new()).unwrap();
    assert_eq!(r.root_bound, b);
}

#[test]
fn search_is_deterministic() {
    let (_, p) = hard_case();
    let a = branch_and_bound(&p.instance, &p.reform, &BnbOptions::default()).unwrap();
    let b = branch_and_bound(&p.instance, &p.reform, &BnbOptions::default()).unwrap();
    assert_eq!(
        (a.value, a.solution, a.node_count, a.root_bound),
        (b.value, b.solution, b.node_count, b.root_bound)
    );
}

#[test]
fn limits_stop_the_search() {
    let (_, p) = hard_case();
    let full = branch_and_bound(&p.instance, &p.reform, &BnbOptions::default()).unwrap();
    assert!(full.node_count > 3, "instance should need branching");

    let capped = BnbOptions {
        node_limit: Some(3),
        ..BnbOptions::default()
    };
    let r = branch_and_bound(&p.instance, &p.reform, &capped).unwrap();
    assert_eq!(r.status, BnbStatus::NodeLimit);
    assert!(r.status.hit_limit());
    assert!(r.node_count <= 3);
    assert!(r.lower_bound <= full.value && full.value <= r.value);
    assert!(r.final_rel_gap > 0.0);

    let timed = BnbOptions {
        time_limit: Some(Duration::ZERO),
        ..BnbOptions::default()
    };
    let r = branch_and_bound(&p.instance, &p.reform, &timed).unwrap();
    assert_eq!(r.status, BnbStatus::TimeLimit);
    assert_eq!(r.node_count, 1);

    let loose = BnbOptions {
        gap_limit: Some(0.5),
        ..BnbOptions::default()
    };
    let r = branch_and_bound(&p.instance, &p.reform, &loose).unwrap();
    assert!(matches!(r.status, BnbStatus::GapLimit | BnbStatus::Optimal));
    assert!(r.final_rel_gap <= 0.5);
    assert!(r.node_count <= full.node_count);
}

#[test]
fn maximization_input_is_solved_as_minimization() {
    let text = "3 3\n1 2 5\n2 3 -4\n1 3 2\n";
    let inst = parse_instance(text, Sense::Max).unwrap();
    let r = solve_bnb(&inst, BnbMethod::QnrTri, &BnbOptions::default()).unwrap();
    // dropping x3 avoids the negative product: 5 beats 5 - 4 + 2
    assert_eq!(-r.value, 5.0);
    assert_eq!(r.solution, vec![1, 1, 0]);
}

#[test]
fn mismatched_reformulation_is_rejected() {
    let (_, p) = hard_case();
    let other = generate_pardalos(5, 0.5, 1).unwrap();
    assert!(matches!(
        branch_and_bound(&other, &p.reform, &BnbOptions::default()),
        Err(Error::Input(_))
    ));
}
