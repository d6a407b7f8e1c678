use approx::assert_abs_diff_eq;
use bqpref::numerics::SdpSettings;
use bqpref::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn e1() -> BqpInstance {
    BqpInstance::from_upper(2, &[(0, 1, 4.0)], &[-3.0, -3.0]).unwrap()
}

fn lifted(x: &[u8]) -> (Vec<f64>, DMatrix<f64>) {
    let xf: Vec<f64> = x.iter().map(|&b| f64::from(b)).collect();
    let v = DVector::from_column_slice(&xf);
    (xf, &v * v.transpose())
}

proptest! {
    #[test]
    fn cuts_hold_at_lifted_binary_points(
        n in 3usize..9,
        bits in prop::collection::vec(0u8..2, 8),
        pick in prop::collection::vec(any::<prop::sample::Index>(), 3),
    ) {
        let x = &bits[..n];
        let (xf, xx) = lifted(x);
        let mut ids: Vec<usize> = pick.iter().map(|p| p.index(n)).collect();
        ids.sort_unstable();
        ids.dedup();
        prop_assume!(ids.len() == 3);
        let cuts = mccormick_family(ids[0], ids[1])
            .unwrap()
            .into_iter()
            .chain(triangle_family(ids[0], ids[1], ids[2]).unwrap());
        for cut in cuts {
            prop_assert!(cut.eval_binary(x) <= 1e-12);
            prop_assert!((cut.violation(&xf, &xx) - cut.eval_binary(x)).abs() <= 1e-12);
        }
    }

    #[test]
    fn separation_is_sorted_and_capped(
        vals in prop::collection::vec(0.0f64..1.0, 15),
        cap in 1usize..20,
    ) {
        let n = 5;
        let x = vals[..n].to_vec();
        let mut xx = DMatrix::zeros(n, n);
        let mut k = n;
        for i in 0..n {
            xx[(i, i)] = x[i];
            for j in (i + 1)..n {
                xx[(i, j)] = vals[k % vals.len()];
                xx[(j, i)] = xx[(i, j)];
                k += 1;
            }
        }
        let found = separate(&[CutFamily::McCormick, CutFamily::Triangle], &x, &xx, 1e-6, cap);
        prop_assert!(found.len() <= cap);
        for w in found.windows(2) {
            prop_assert!(w[0].violation(&x, &xx) >= w[1].violation(&x, &xx));
        }
        for c in &found {
            prop_assert!(c.violation(&x, &xx) > 1e-6);
        }
    }
}

#[test]
fn cut_families_have_four_members() {
    assert_eq!(all_cuts(CutFamily::McCormick, 4).len(), 4 * 6);
    assert_eq!(all_cuts(CutFamily::Triangle, 4).len(), 4 * 4);
    assert!(triangle_family(2, 1, 0).is_err());
}

#[test]
fn pool_deduplicates_and_round_trips() {
    let mut pool = CutPool::new();
    for c in mccormick_family(0, 1).unwrap() {
        assert!(pool.insert(c));
    }
    assert!(!pool.insert(mccormick_family(0, 1).unwrap()[0].clone()));
    assert_eq!(pool.len(), 4);
    let json = serde_json::to_string(&pool).unwrap();
    let back: CutPool = serde_json::from_str(&json).unwrap();
    assert_eq!(back.len(), 4);
    assert!(!back
        .clone()
        .insert(mccormick_family(0, 1).unwrap()[2].clone()));
}

#[test]
fn base_relaxation_examples() {
    let settings = SdpSettings::default();
    // value and dual of the one-variable problem
    let one = BqpInstance::from_upper(1, &[], &[-1.0]).unwrap();
    let (sol, cert) = build_base_sdp(&one).unwrap().solve(&settings).unwrap();
    assert_abs_diff_eq!(sol.value, -1.0, epsilon = 1e-7);
    assert_abs_diff_eq!(cert.sigma, -1.0, epsilon = 1e-7);
    assert_abs_diff_eq!(qcr_params(&cert).unwrap().lambda[0], 1.0, epsilon = 1e-3);

    // nonnegative objective: bound attained at zero
    let pos = BqpInstance::new(DMatrix::identity(2, 2) * 2.0, DVector::zeros(2))
        .unwrap()
        .normalize_diagonal();
    let (sol, _) = build_base_sdp(&pos).unwrap().solve(&settings).unwrap();
    assert_abs_diff_eq!(sol.value, 0.0, epsilon = 1e-7);
    assert!(sol.x.iter().all(|v| v.abs() < 1e-4));

    // E1: SDP alone gives -3.125 (checked against an external conic solver)
    let (sol, _) = build_base_sdp(&e1()).unwrap().solve(&settings).unwrap();
    assert_abs_diff_eq!(sol.value, -3.125, epsilon = 1e-6);
}

#[test]
fn cutting_plane_examples() {
    let opts = RelaxOptions::default();
    let base = cutting_plane(&e1(), &[CutFamily::McCormick], 0, &opts).unwrap();
    assert_eq!(base.history.len(), 1);
    let direct = build_base_sdp(&e1()).unwrap().solve(&opts.sdp).unwrap().0;
    assert_eq!(base.solution.value, direct.value);

    let run = cutting_plane(&e1(), &[CutFamily::McCormick], 2, &opts).unwrap();
    assert_abs_diff_eq!(run.solution.value, -3.0, epsilon = 1e-6);
    let p = qcre_params(&run.certificate).unwrap();
    let b = bound(&build_qnr(&e1(), &p).unwrap(), &Fixings::new()).unwrap();
    assert_abs_diff_eq!(b, -3.0, epsilon = 1e-6);
}

#[test]
fn unnormalized_instances_are_rejected() {
    let inst = BqpInstance::new(DMatrix::identity(2, 2), DVector::zeros(2)).unwrap();
    assert!(matches!(build_base_sdp(&inst), Err(Error::Input(_))));
}

fn check_certificate(inst: &BqpInstance, run: &CuttingPlaneRun) {
    let cert = &run.certificate;
    let sol = &run.solution;
    let n = inst.n();
    let qnorm = inst.spectral_norm();
    assert!((cert.sigma - sol.value).abs() <= 1e-6 * (1.0 + sol.value.abs()));
    assert!(cert.bordered_min_eig() >= -1e-6 * (1.0 + qnorm));
    for mat in [&cert.m, &cert.n, &cert.r, &cert.s] {
        for i in 0..n {
            assert_eq!(mat[(i, i)], 0.0);
            for j in 0..n {
                assert!(mat[(i, j)] >= 0.0);
            }
        }
    }
    let z = cert.z();
    for i in 0..n {
        assert_eq!(z[(i, i)], 0.0);
    }
    for (cut, mult) in &cert.multipliers {
        assert!(*mult >= 0.0);
        let slack = -cut.violation(&sol.x, &sol.xx);
        assert!(mult * slack.max(0.0) <= 1e-5, "{cut}: {mult} x {slack}");
    }
    assert!(cert
        .gamma
        .iter()
        .all(|(c, g)| *g >= 0.0 && run.pool.contains(&c.key)));
    for w in run.history.windows(2) {
        assert!(w[1] >= w[0] - 1e-7 * (1.0 + w[0].abs()));
    }
}

#[test]
fn certificates_and_bound_chain_on_random_instances() {
    for seed in 0..6u64 {
        let n = 5 + seed as usize;
        let inst = generate_pardalos(n, 0.6, seed)
            .unwrap()
            .normalize_diagonal();
        let v_star = brute_force(&inst).unwrap().value;
        let slack = 1e-5 * (1.0 + v_star.abs());
        let opts = RelaxOptions::default();
        let sdp = cutting_plane(&inst, &[], 0, &opts).unwrap();
        let rlt = cutting_plane(&inst, &[CutFamily::McCormick], 2, &opts).unwrap();
        let tri = cutting_plane_from(
            SdpRelaxation::with_pool(&inst, rlt.pool.clone()).unwrap(),
            &[CutFamily::McCormick, CutFamily::Triangle],
            9,
            &opts,
        )
        .unwrap();
        for run in [&sdp, &rlt, &tri] {
            check_certificate(&inst, run);
        }
        let (a, b, c) = (sdp.solution.value, rlt.solution.value, tri.solution.value);
        assert!(
            a <= b + slack && b <= c + slack && c <= v_star + slack,
            "{a} {b} {c} {v_star}"
        );
    }
}

#[test]
fn pair_closure_adds_envelopes_for_triangle_pairs() {
    let inst = generate_pardalos(4, 1.0, 3).unwrap().normalize_diagonal();
    let mut relax = SdpRelaxation::base(&inst).unwrap();
    let added = relax.add_cut(triangle_family(0, 1, 2).unwrap()[0].clone(), true);
    assert_eq!(added, 1 + 3 * 4);
    assert_eq!(relax.pool().count(CutFamily::McCormick), 12);
}
