use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_quadboost"))
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn verify_passes_on_a_fresh_build() {
    let o = run(&["verify"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().filter(|l| l.starts_with("PASS")).count(), 10);
    assert!(out.contains("margin"));
}

#[test]
fn mutated_rule_fails_and_names_the_invariant() {
    let o = run(&["verify", "--mutate", "vanilla-shrink"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("exact-decrease"), "{}", stderr(&o));
    assert!(stdout(&o).contains("FAIL exact-decrease"));
}

#[test]
fn lemma1_prints_per_draw_equality() {
    let o = run(&["verify", "--lemma1", "--p", "2", "--n", "4", "--draws", "4"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 4);
    for line in out.lines() {
        assert!(line.contains("lhs") && line.contains("rhs") && line.ends_with("equal"), "{line}");
    }
}

#[test]
fn train_then_predict_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    let history = dir.path().join("history.csv");
    let pool = dir.path().join("pool.json");
    let iris = data("iris.csv");
    let o = run(&[
        "train", "--data", iris.to_str().unwrap(), "--algo", "quadboost-vanilla", "--rounds", "20",
        "--out", model.to_str().unwrap(), "--history", history.to_str().unwrap(),
        "--pool", pool.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));

    let m = read_json(&model);
    assert_eq!(m["schema_version"], 1);
    assert_eq!(m["algorithm"], "quadboost-vanilla");
    let rounds = m["metrics"]["rounds"].as_u64().unwrap() as usize;
    let csv = std::fs::read_to_string(&history).unwrap();
    assert_eq!(csv.lines().count(), rounds + 1);
    assert!(csv.starts_with("round,voter,edge,eta,step,weight,quadratic_risk"));
    let p = read_json(&pool);
    assert_eq!(p["stumps"].as_array().unwrap().len(), 4 * 10 * 2);

    let preds = dir.path().join("preds.json");
    let o = run(&[
        "predict", "--model", model.to_str().unwrap(), "--data", iris.to_str().unwrap(),
        "--out", preds.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let p = read_json(&preds);
    assert_eq!(p["predictions"].as_array().unwrap().len(), 100);
    assert!(p["error"].as_f64().unwrap() < 0.5);

    let unlabeled = dir.path().join("rows.csv");
    std::fs::write(&unlabeled, "0,0,0,0\n7,3,6,2\n").unwrap();
    let o = run(&[
        "predict", "--model", model.to_str().unwrap(), "--data", unlabeled.to_str().unwrap(), "--unlabeled",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let lines: Vec<String> = stdout(&o).lines().map(str::to_owned).collect();
    assert_eq!(lines.len(), 2);
    assert!(lines.iter().all(|l| l == "1" || l == "-1"));
}

#[test]
fn train_requires_the_algorithms_hyperparameters() {
    let o = run(&["train", "--data", data("iris.csv").to_str().unwrap(), "--algo", "quadboost-l1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--lambda"));
    let o = run(&["train", "--data", data("iris.csv").to_str().unwrap(), "--algo", "nope", "--rounds", "3"]);
    assert!(stderr(&o).contains("unknown algorithm"));
}

#[test]
fn cv_report_is_deterministic_and_selects_the_argmin() {
    let dir = tempfile::tempdir().unwrap();
    let wine = data("wine.csv");
    let mut reports = Vec::new();
    for i in 0..2 {
        let out = dir.path().join(format!("r{i}.json"));
        let o = run(&[
            "cv", "--data", wine.to_str().unwrap(), "--algo", "quadboost-l2", "--seed", "3",
            "--grid", "lambda=1:100:3", "--grid", "rounds=1:100:3", "--folds", "4",
            "--out", out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        let mut r = read_json(&out);
        assert!(r["timing"]["train_seconds"].as_f64().unwrap() >= 0.0);
        r.as_object_mut().unwrap().remove("timing");
        reports.push(r);
    }
    assert_eq!(reports[0], reports[1]);
    let r = &reports[0];
    assert_eq!(r["schema_version"], 1);
    let cells = r["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 9);
    let means: Vec<f64> = cells.iter().map(|c| c["mean_risk"].as_f64().unwrap()).collect();
    let best = means.iter().cloned().fold(f64::INFINITY, f64::min);
    let idx = r["selected_index"].as_u64().unwrap() as usize;
    assert_eq!(idx, means.iter().position(|m| *m == best).unwrap());
    assert_eq!(r["selected"], cells[idx]["params"]);
    assert!(cells.iter().all(|c| c["fold_risks"].as_array().unwrap().len() == 4));
}

#[test]
fn cv_rejects_bad_grids_and_tiny_data() {
    let o = run(&["cv", "--data", data("iris.csv").to_str().unwrap(), "--grid", "rounds=1:10"]);
    assert_eq!(o.status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let tiny = dir.path().join("tiny.csv");
    std::fs::write(&tiny, "0.1,1\n0.2,0\n0.3,1\n0.4,0\n").unwrap();
    let o = run(&["cv", "--data", tiny.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("folds"), "{}", stderr(&o));
}

#[test]
fn bench_prints_a_table_and_records_failures() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench.json");
    let missing = dir.path().join("missing.csv");
    let o = run(&[
        "bench", "--data", data("iris.csv").to_str().unwrap(), "--data", missing.to_str().unwrap(),
        "--algo", "quadboost-vanilla", "--algo", "adaboost", "--grid", "rounds=1:100:3",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.lines().next().unwrap().contains("quadboost-vanilla"));
    assert!(text.contains("mean time"));
    assert!(text.contains('*'));
    assert!(stderr(&o).contains("missing"));
    let t = read_json(&out);
    assert_eq!(t["rows"].as_array().unwrap().len(), 2);
    assert!(t["rows"][1]["errors"][0].is_string());
}

#[test]
fn bound_reports_four_named_terms() {
    let o = run(&["bound", "--p", "1", "--m", "100", "--rademacher", "0.1", "--dim", "1", "--norm", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let terms = r["terms"].as_object().unwrap();
    let names: Vec<&str> = terms.keys().map(String::as_str).collect();
    assert_eq!(names, ["complexity", "confidence", "empirical_risk", "norm_term"]);
    let sum: f64 = terms.values().map(|v| v.as_f64().unwrap()).sum();
    assert!((sum - r["total"].as_f64().unwrap()).abs() < 1e-12);
    assert!((r["terms"]["complexity"].as_f64().unwrap() - 0.8).abs() < 1e-12);

    let o = run(&["bound", "--m", "100", "--rademacher", "0.1", "--dim", "1", "--norm", "0.4"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("log"));
}

#[test]
fn bound_from_a_model() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    let breast = data("breast.csv");
    let o = run(&[
        "train", "--data", breast.to_str().unwrap(), "--algo", "quadboost-vanilla", "--rounds", "200",
        "--out", model.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = run(&[
        "bound", "--model", model.to_str().unwrap(), "--data", breast.to_str().unwrap(), "--p", "1",
        "--draws", "50",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r["inputs"]["m"], 569);
    assert_eq!(r["inputs"]["empirical_rademacher"], true);
    assert!(r["total"].as_f64().unwrap() >= r["terms"]["empirical_risk"].as_f64().unwrap());
    assert!(r["details"]["lambda_l1"].as_f64().unwrap() > 0.0);
}
