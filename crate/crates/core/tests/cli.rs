use std::path::Path;
use std::process::{Command, Output};

const E1_FILE: &str = "2 3\n1 1 -3\n2 2 -3\n1 2 4\n";

fn bqpref(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bqpref"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn field<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(key).filter(|rest| rest.starts_with(' ')))
        .unwrap_or_else(|| panic!("no {key:?} in\n{text}"))
        .trim()
}

fn workdir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("e1.txt"), E1_FILE).unwrap();
    dir
}

#[test]
fn parse_prints_a_summary() {
    let dir = workdir();
    let out = bqpref(&["parse", "e1.txt"], dir.path());
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(field(&text, "n"), "2");
    assert_eq!(field(&text, "sense"), "min");
    assert_eq!(field(&text, "optimum"), "-3");
    assert_eq!(field(&text, "argopt"), "01");
}

#[test]
fn sparse_files_default_to_maximization() {
    let dir = workdir();
    std::fs::write(dir.path().join("e1.sparse"), E1_FILE).unwrap();
    let text = stdout(&bqpref(&["parse", "e1.sparse"], dir.path()));
    assert_eq!(field(&text, "sense"), "max");
    // max -3x1 - 3x2 + 4x1x2 is attained at zero
    assert_eq!(field(&text, "optimum"), "0");
    let text = stdout(&bqpref(
        &["parse", "e1.sparse", "--sense", "min"],
        dir.path(),
    ));
    assert_eq!(field(&text, "sense"), "min");
}

#[test]
fn generate_then_solve() {
    let dir = workdir();
    let out = bqpref(
        &[
            "gen",
            "--n",
            "10",
            "--density",
            "0.7",
            "--seed",
            "3",
            "-o",
            "g.txt",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let summary = stdout(&bqpref(&["parse", "g.txt"], dir.path()));
    let optimum = field(&summary, "optimum").to_string();
    for method in ["qcr", "qcre", "qnr", "qnr-tri"] {
        let out = bqpref(&["solve", "g.txt", "--method", method], dir.path());
        assert!(out.status.success(), "{method}");
        let text = stdout(&out);
        assert_eq!(field(&text, "status"), "optimal");
        assert_eq!(field(&text, "value"), optimum, "{method}");
    }
}

#[test]
fn bound_reports_each_round() {
    let dir = workdir();
    let text = stdout(&bqpref(&["bound", "e1.txt"], dir.path()));
    let b: f64 = field(&text, "bound").parse().unwrap();
    assert!((b + 3.125).abs() < 1e-6);
    let text = stdout(&bqpref(
        &["bound", "e1.txt", "--relax", "sdprlt"],
        dir.path(),
    ));
    let b: f64 = field(&text, "bound").parse().unwrap();
    assert!((b + 3.0).abs() < 1e-6);
    assert!(text.contains("round 0"));
}

#[test]
fn reform_writes_json() {
    let dir = workdir();
    let out = bqpref(
        &["reform", "e1.txt", "--method", "qnr", "-o", "r.json"],
        dir.path(),
    );
    assert!(out.status.success());
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(json["n"], 2);
    assert!(json["constraints"]
        .as_array()
        .is_some_and(|c| !c.is_empty()));
}

#[test]
fn bench_and_tables() {
    let dir = workdir();
    std::fs::write(
        dir.path().join("run.toml"),
        "methods = [\"qcr\", \"qnr-tri\"]\ntiming = false\noutput = \"out.csv\"\n\n[[instances]]\nfile = \"e1.txt\"\n",
    )
    .unwrap();
    let out = bqpref(&["bench", "--config", "run.toml"], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.path().join("out.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    let out = bqpref(&["tables", "out.csv"], dir.path());
    assert!(out.status.success());
    assert!(stdout(&out).contains("qnr-tri"));
}

#[test]
fn exit_codes() {
    let dir = workdir();
    std::fs::write(dir.path().join("bad.txt"), "2 1\n1 3 1\n").unwrap();
    assert_eq!(
        bqpref(&["parse", "bad.txt"], dir.path()).status.code(),
        Some(2)
    );
    assert_eq!(
        bqpref(&["parse", "missing.txt"], dir.path()).status.code(),
        Some(2)
    );
    assert_eq!(
        bqpref(&["solve", "e1.txt", "--method", "qp"], dir.path())
            .status
            .code(),
        Some(2)
    );
    std::fs::write(dir.path().join("bad.toml"), "methods = []\n").unwrap();
    assert_eq!(
        bqpref(&["bench", "--config", "bad.toml"], dir.path())
            .status
            .code(),
        Some(2)
    );

    bqpref(
        &[
            "gen",
            "--n",
            "14",
            "--density",
            "0.9",
            "--seed",
            "5",
            "-o",
            "h.txt",
        ],
        dir.path(),
    );
    let out = bqpref(
        &["solve", "h.txt", "--method", "qcr", "--node-limit", "1"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(field(&stdout(&out), "status"), "node-limit");
}
