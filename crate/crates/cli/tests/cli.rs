use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn cesurv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cesurv"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_then_select_and_fit() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("sim.csv");
    let summary = json(&cesurv(&[
        "simulate",
        "--seed",
        "3",
        "--n",
        "300",
        "--out",
        path(&data),
    ]));
    assert_eq!(summary["n_rows"], 300);
    assert_eq!(summary["simulation"]["seed"], 3);

    let report = json(&cesurv(&["select", "--data", path(&data), "--top", "2"]));
    let entries = report["ranking"]["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 5);
    assert_eq!(report["selected"].as_array().unwrap().len(), 2);
    assert_eq!(report["selected"][0], entries[0]["name"]);

    let fit = dir.path().join("fit.json");
    let out = cesurv(&[
        "fit",
        "--data",
        path(&data),
        "--covariates",
        "x1,x2",
        "--out",
        path(&fit),
    ]);
    assert!(out.status.success());
    let model: Value = serde_json::from_slice(&std::fs::read(&fit).unwrap()).unwrap();
    assert_eq!(model["model"]["included"], serde_json::json!(["x1", "x2"]));
    assert_eq!(model["model"]["converged"], true);

    let eval = json(&cesurv(&[
        "evaluate",
        "--data",
        path(&data),
        "--model",
        path(&fit),
    ]));
    let c = eval["evaluation"]["c_index"].as_f64().unwrap();
    assert!(c > 0.5 && c <= 1.0);
}

#[test]
fn select_without_policy_prints_full_ranking() {
    let report = json(&cesurv(&["select", "--data", "bundled:veteran"]));
    assert_eq!(report["ranking"]["entries"].as_array().unwrap().len(), 6);
    assert!(report.get("selected").is_none());
    assert_eq!(report["data"]["categories"]["celltype"][0], "squamous");
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"simulation": {"n_subjects": 200}, "estimator": {"k": 5, "norm": "euclidean"}}"#,
    )
    .unwrap();
    let report = json(&cesurv(&[
        "select",
        "--config",
        path(&cfg),
        "--k",
        "4",
        "--seed",
        "9",
    ]));
    assert_eq!(report["estimator"]["k"], 4);
    assert_eq!(report["estimator"]["norm"], "euclidean");
    assert_eq!(report["data"]["simulation"]["seed"], 9);
    assert_eq!(report["data"]["n_rows"], 200);
}

#[test]
fn run_experiment_writes_plot_data_matching_report() {
    let dir = tempfile::tempdir().unwrap();
    let plots = dir.path().join("plots");
    let out = cesurv(&[
        "run-experiment",
        "--data",
        "bundled:cancer",
        "--top",
        "4",
        "--plot-data",
        path(&plots),
    ]);
    let body = String::from_utf8(out.stdout.clone()).unwrap();
    let report = json(&out);
    assert_eq!(report["data"]["n_rows"], 167);
    for name in [
        "cancer_ranking.tsv",
        "cancer_metrics.tsv",
        "cancer_coefficients.tsv",
    ] {
        let table = std::fs::read_to_string(plots.join(name)).unwrap();
        for cell in table.lines().skip(1).flat_map(|l| l.split('\t')) {
            assert!(body.contains(cell), "{name}: {cell}");
        }
    }
}

#[test]
fn reproduce_paper_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let pa = dir.path().join("pa");
    let pb = dir.path().join("pb");
    for (out, plots) in [(&a, &pa), (&b, &pb)] {
        let o = cesurv(&[
            "reproduce-paper",
            "--seed",
            "0",
            "--out",
            path(out),
            "--plot-data",
            path(plots),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let mut names: Vec<_> = std::fs::read_dir(&pa)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 10);
    for n in names {
        assert_eq!(
            std::fs::read(pa.join(&n)).unwrap(),
            std::fs::read(pb.join(&n)).unwrap()
        );
    }
}

#[test]
fn invalid_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.csv");
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "time,status,x\n0,1,1\n2,1,3\n").unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["select", "--data", path(&missing)],
        vec!["select", "--data", path(&bad)],
        vec!["select", "--data", "bundled:nope"],
        vec!["select", "--data", "bundled:cancer", "--seed", "1"],
        vec!["run-experiment", "--data", "bundled:veteran"],
        vec!["run-experiment", "--data", "bundled:veteran", "--top", "7"],
        vec!["select", "--data", "bundled:veteran", "--k", "0"],
        vec!["select", "--bogus"],
        vec![
            "select",
            "--data",
            "bundled:veteran",
            "--top",
            "2",
            "--threshold",
            "0",
        ],
    ];
    for args in cases {
        let out = cesurv(&args);
        assert_eq!(
            out.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn numerical_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("censored.csv");
    std::fs::write(&data, "time,status,x\n1,0,1\n2,0,3\n3,0,2\n").unwrap();
    let out = cesurv(&["fit", "--data", path(&data)]);
    assert_eq!(out.status.code(), Some(3));
    let model = dir.path().join("m.json");
    std::fs::write(
        &model,
        r#"{"intercept": 1, "coefficients": [0.5], "log_scale": 0, "included": ["x"],
           "converged": true, "iterations": 1, "final_gradient_norm": 0, "log_likelihood": -1}"#,
    )
    .unwrap();
    let out = cesurv(&["evaluate", "--data", path(&data), "--model", path(&model)]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}
