use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
}

fn ckdist(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ckdist"))
        .args(args)
        .env_remove("CKDIST_NODE_BUDGET")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_exit_codes() {
    let ok = ckdist(&["validate", path(&data("onegin.json"))]);
    assert_eq!(ok.status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"labels":["a","b"],"states":[{"name":"x","label":"a"},{"name":"y","label":"b"}],
            "initial":[1,0],"transitions":[[0.5,0.4],[0,1]]}"#,
    )
    .unwrap();
    let o = ckdist(&["validate", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("NonStochasticRow"));

    let o = ckdist(&[
        "validate",
        dir.path().join("missing.json").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));

    let garbled = dir.path().join("garbled.json");
    std::fs::write(&garbled, "{ not json").unwrap();
    assert_eq!(
        ckdist(&["validate", garbled.to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn ck_reports() {
    let (a, b) = (data("onegin.json"), data("onegin_biased_0.1.json"));
    let o = ckdist(&["ck", path(&a), path(&a), "--horizon", "15"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("s_k: 0\n"), "{out}");
    assert!(out.contains("error_bound: 3.0517578125e-5\n"), "{out}");

    let o = ckdist(&["ck", path(&a), path(&b), "--precision", "3.1e-5"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("horizon: 15\n"));

    let o = ckdist(&[
        "ck",
        path(&a),
        path(&data("three_labels.json")),
        "--horizon",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("AlphabetMismatch"));

    // Exactly one of --horizon / --precision.
    let o = ckdist(&["ck", path(&a), path(&b)]);
    assert_eq!(o.status.code(), Some(2));
    let o = ckdist(&[
        "ck",
        path(&a),
        path(&b),
        "--horizon",
        "3",
        "--precision",
        "0.1",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn node_budget_guard() {
    let (a, b) = (data("onegin.json"), data("onegin_biased_0.1.json"));
    let o = ckdist(&["ck", path(&a), path(&b), "--horizon", "25"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("NodeBudgetExceeded"));

    let o = Command::new(env!("CARGO_BIN_EXE_ckdist"))
        .args(["ck", path(&a), path(&b), "--horizon", "8"])
        .env("CKDIST_NODE_BUDGET", "64")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn tv_reports() {
    let (a, b) = (data("onegin.json"), data("onegin_biased_0.1.json"));
    let out = stdout(&ckdist(&["tv", path(&a), path(&a), "--horizon", "4"]));
    assert!(out.contains("tv: 0\n"));
    let out = stdout(&ckdist(&["tv", path(&a), path(&b), "--horizon", "2"]));
    assert!(out.contains("tv: 0.1\n"), "{out}");
    assert!(out.contains("tv_half_sum: 0.1\n"), "{out}");
}

#[test]
fn bound_examples() {
    let o = ckdist(&["bound", "--delta", "0.5", "--m", "2"]);
    assert_eq!(stdout(&o), "ck_upper_bound: 0.666666666667\n");
    let o = ckdist(&["bound", "--d-lower", "1", "--m", "2"]);
    assert_eq!(stdout(&o), "bisim_impossibility_threshold: 1\n");
    let o = ckdist(&["bound", "--d-upper", "0.001", "--eps", "0.1", "--m", "2"]);
    assert_eq!(stdout(&o), "max_safe_horizon: 7\n");
    let o = ckdist(&["bound", "--delta", "1.5", "--m", "2"]);
    assert_eq!(o.status.code(), Some(2));
    let o = ckdist(&["bound", "--delta", "0.5", "--m", "2", "--digits", "4"]);
    assert_eq!(stdout(&o), "ck_upper_bound: 0.6667\n");
}

#[test]
fn bisim_verdicts() {
    let (a, b, rel) = (
        data("onegin.json"),
        data("onegin_biased_0.01.json"),
        data("identity_relation.json"),
    );
    let o = ckdist(&["bisim", path(&a), path(&b), path(&rel), "--epsilon", "0.01"]);
    assert!(stdout(&o).starts_with("verdict: accept\n"));
    let o = ckdist(&[
        "bisim",
        path(&a),
        path(&b),
        path(&rel),
        "--epsilon",
        "0.005",
    ]);
    let out = stdout(&o);
    assert!(out.starts_with("verdict: reject\n"));
    assert!(out.contains("witness_gap: 0.01\n"), "{out}");
    let o = ckdist(&["bisim", path(&a), path(&a), path(&rel)]);
    assert!(stdout(&o).starts_with("minimal_epsilon: 0\n"));
}

#[test]
fn encode_product_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.json");
    let o = ckdist(&[
        "encode-product",
        "--params",
        "0.5,0.5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        ckdist(&["validate", out.to_str().unwrap()]).status.code(),
        Some(0)
    );
    let o = ckdist(&[
        "tv",
        out.to_str().unwrap(),
        out.to_str().unwrap(),
        "--horizon",
        "2",
    ]);
    assert!(stdout(&o).contains("tv: 0\n"));

    let o = ckdist(&[
        "encode-product",
        "--params",
        "0.5,x",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweeps_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for fig in ["2", "3"] {
        let (p1, p2) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
        let o1 = ckdist(&["sweep", "--figure", fig, "--out", p1.to_str().unwrap()]);
        let o2 = ckdist(&["sweep", "--figure", fig, "--out", p2.to_str().unwrap()]);
        assert_eq!(o1.status.code(), Some(0));
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
        assert_eq!(o1.stdout.len(), o2.stdout.len());
    }
    let csv = std::fs::read_to_string(dir.path().join("a.csv")).unwrap();
    assert!(csv.starts_with("epsilon,k,s_k,bound\n"));
    assert_eq!(csv.lines().count(), 61);

    let o = ckdist(&["sweep", "--figure", "4", "--out", "x.csv"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn figure_two_is_monotone_in_delta() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("f2.csv");
    ckdist(&["sweep", "--figure", "2", "--out", p.to_str().unwrap()]);
    let csv = std::fs::read_to_string(p).unwrap();
    let rows: Vec<(u32, f64, f64)> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (
                f[0].parse().unwrap(),
                f[1].parse().unwrap(),
                f[2].parse().unwrap(),
            )
        })
        .collect();
    assert_eq!(rows.len(), 9 * 200);
    for w in rows.windows(2) {
        if w[0].0 == w[1].0 {
            assert!(w[1].1 > w[0].1 && w[1].2 > w[0].2);
        }
    }
}
