use approx::assert_abs_diff_eq;
use bqpref::*;
use nalgebra::{DMatrix, DVector};

const E1_FILE: &str = "2 3\n1 1 -3\n2 2 -3\n1 2 4\n";

fn config_in(dir: &std::path::Path, body: &str) -> BenchConfig {
    let path = dir.join("bench.toml");
    std::fs::write(&path, body).unwrap();
    BenchConfig::load(&path).unwrap()
}

#[test]
fn untimed_reports_are_byte_identical() {
    let text = r#"
methods = ["qcr", "qnr-tri"]
timing = false

[[instances]]
generate = { n = 8, density = 0.6, seed = 3 }

[[instances]]
generate = { n = 9, density = 1.0, seed = 4 }
"#;
    let cfg = BenchConfig::from_toml(text).unwrap();
    let a = write_csv(&run_bench(&cfg).unwrap()).unwrap();
    let b = write_csv(&run_bench(&cfg).unwrap()).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 5);
    let rows = read_csv(&a).unwrap();
    assert!(rows
        .iter()
        .all(|r| r.time_total_s == 0.0 && r.status == "optimal"));
}

#[test]
fn file_instances_resolve_relative_to_the_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("e1.txt"), E1_FILE).unwrap();
    let cfg = config_in(
        dir.path(),
        r#"
methods = ["qcr", "qcre", "qnr", "qnr-tri"]
timing = false

[[instances]]
file = "e1.txt"
"#,
    );
    let rows = run_bench(&cfg).unwrap();
    assert_eq!(rows.len(), 4);
    for r in &rows {
        assert_eq!(r.instance, "e1");
        assert_eq!(r.value, Some(-3.0));
        assert_eq!(r.status, "optimal");
        let rg = r.rg.unwrap();
        assert!(
            (-1e-6..=1.0 / 24.0 + 1e-6).contains(&rg),
            "{}: {rg}",
            r.method
        );
    }
    // the McCormick-tightened methods close the root gap
    for r in &rows[1..] {
        assert!(r.rg.unwrap() <= 1e-6, "{}", r.method);
    }
    let tables = render_tables(&rows);
    for m in BnbMethod::ALL {
        assert!(tables.contains(m.name()));
    }
}

#[test]
fn configuration_errors_are_reported() {
    for text in [
        "methods = [\"qcr\"]\ninstances = []\n",
        "methods = [\"qcr\"]\nbogus = 1\n[[instances]]\ngenerate = { n = 3, density = 0.5, seed = 0 }\n",
        "methods = [\"qcr\"]\n[tolerances]\nrel_tol = -1.0\n[[instances]]\ngenerate = { n = 3, density = 0.5, seed = 0 }\n",
        "not toml at all [",
    ] {
        assert!(matches!(BenchConfig::from_toml(text), Err(Error::Config(_))), "{text:?}");
    }
}

#[test]
fn node_limited_rows_keep_their_status() {
    let text = r#"
methods = ["qcr"]
timing = false

[limits]
node_limit = 1

[[instances]]
generate = { n = 14, density = 0.9, seed = 5 }
"#;
    let rows = run_bench(&BenchConfig::from_toml(text).unwrap()).unwrap();
    assert_eq!(rows[0].status, "node-limit");
    assert_eq!(rows[0].nodes, Some(1));
    assert!(rows[0].final_gap.unwrap() > 0.0);
}

#[test]
fn gaps_of_a_trivial_instance_are_zero() {
    let inst =
        BqpInstance::new(DMatrix::zeros(3, 3), DVector::from_vec(vec![1.0, 0.0, 2.0])).unwrap();
    let rep = report_gaps(&inst, None, GapBudgets::default(), &RelaxOptions::default()).unwrap();
    assert_eq!(rep.v_star, 0.0);
    for g in [rep.rg_sdp, rep.rg_rlt, rep.rg_tri] {
        assert_abs_diff_eq!(g, 0.0, epsilon = 1e-6);
    }
}

#[test]
fn gaps_on_the_two_variable_example() {
    let inst = parse_instance(E1_FILE, Sense::Min).unwrap();
    let rep = report_gaps(&inst, None, GapBudgets::default(), &RelaxOptions::default()).unwrap();
    assert_eq!(rep.v_star, -3.0);
    assert_abs_diff_eq!(rep.sdp, -3.125, epsilon = 1e-6);
    assert_abs_diff_eq!(rep.rg_sdp, 0.125 / 3.0, epsilon = 1e-6);
    assert_abs_diff_eq!(rep.rg_rlt, 0.0, epsilon = 1e-6);
    assert_abs_diff_eq!(rep.rg_tri, 0.0, epsilon = 1e-6);
}

#[test]
fn gap_chain_is_nested() {
    for seed in 0..4u64 {
        let inst = generate_pardalos(9, 0.8, 60 + seed).unwrap();
        let rep =
            report_gaps(&inst, None, GapBudgets::default(), &RelaxOptions::default()).unwrap();
        let slack = 1e-6 * (1.0 + rep.v_star.abs());
        assert!(
            rep.sdp <= rep.rlt + slack
                && rep.rlt <= rep.tri + slack
                && rep.tri <= rep.v_star + slack
        );
        assert!(
            rep.rg_sdp + 1e-6 >= rep.rg_rlt
                && rep.rg_rlt + 1e-6 >= rep.rg_tri
                && rep.rg_tri >= -1e-6
        );
    }
}
