use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const TWO_PI: &str = "6.283185307179586";

struct Run {
    out: PathBuf,
    output: Output,
    _dir: TempDir,
}

impl Run {
    fn code(&self) -> i32 {
        self.output.status.code().expect("exited normally")
    }

    fn stderr(&self) -> String {
        String::from_utf8_lossy(&self.output.stderr).into_owned()
    }

    fn json(&self, name: &str) -> Value {
        serde_json::from_str(&self.text(name)).unwrap()
    }

    fn text(&self, name: &str) -> String {
        fs::read_to_string(self.out.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
    }
}

fn carnot(command: &str, config: &str) -> Run {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("config.json");
    fs::write(&cfg, config).unwrap();
    let out = dir.path().join("out");
    let output = Command::new(env!("CARGO_BIN_EXE_carnot"))
        .args([command, "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .env("CARNOT_LOG", "off")
        .output()
        .unwrap();
    Run { out, output, _dir: dir }
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut reader = csv::Reader::from_path(path).unwrap();
    let header = reader.headers().unwrap().iter().map(String::from).collect();
    let rows = reader
        .records()
        .map(|r| r.unwrap().iter().map(|x| x.parse::<f64>().unwrap()).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

fn heisenberg() -> String {
    format!(r#"{{"k": 2, "body": {{"type": "ellipsoid", "A": [[1, 0], [0, 1]]}}, "h_ij": {{"1,2": 1}},
               "h0": [1, 0], "t1": {TWO_PI}, "samples": 1000}}"#)
}

#[test]
fn integrate_heisenberg() {
    let run = carnot("integrate", &heisenberg());
    assert_eq!(run.code(), 0, "{}", run.stderr());
    let (header, rows) = csv_rows(&run.out.join("trajectory.csv"));
    assert_eq!(header, ["t", "h_1", "h_2", "u_1", "u_2", "x_1", "x_2", "x_12", "H_drift"]);
    assert_eq!(rows.len(), 1001);
    let drift = column(&header, "H_drift");
    assert!(rows.iter().all(|r| r[drift].abs() <= 1e-8));
    let last = rows.last().unwrap();
    assert!((last[column(&header, "x_12")] - std::f64::consts::PI).abs() < 1e-9);
    let summary = run.json("summary.json");
    assert_eq!(summary["status"], "ok");
    assert_eq!(summary["seed"], 42);
    assert_eq!(summary["rows"], 1001);
    assert!(summary["max_h_drift"].as_f64().unwrap() <= 1e-8);
    assert!(summary["wall_time_s"].as_f64().unwrap() >= 0.0);
}

#[test]
fn integrate_zero_matrix_has_constant_control() {
    let run = carnot(
        "integrate",
        r#"{"k": 3, "body": {"type": "lp_ball", "p": 3, "r": 2}, "h0": [1, -2, 0.5], "t1": 5, "samples": 50}"#,
    );
    assert_eq!(run.code(), 0, "{}", run.stderr());
    let (header, rows) = csv_rows(&run.out.join("trajectory.csv"));
    assert_eq!(header.iter().filter(|h| h.starts_with("I_")).count(), 3);
    for i in 1..=3 {
        let c = column(&header, &format!("u_{i}"));
        assert!(rows.iter().all(|r| r[c] == rows[0][c]), "u_{i} varies");
    }
}

#[test]
fn integrate_k4_ellipsoid_conserves() {
    let run = carnot(
        "integrate",
        r#"{"k": 4, "body": {"type": "ellipsoid"}, "h_ij": {"1,2": 1, "3,4": 1.4142135623730951},
            "h0": [0.5, 0.5, 0.5, 0.5], "t1": 200, "samples": 2000}"#,
    );
    assert_eq!(run.code(), 0, "{}", run.stderr());
    let (header, rows) = csv_rows(&run.out.join("trajectory.csv"));
    assert_eq!(header.len(), 1 + 4 * 3 + 6 + 1);
    let drift = column(&header, "H_drift");
    let worst = rows.iter().map(|r| r[drift].abs()).fold(0.0, f64::max);
    assert!(worst <= 1e-8, "H drift {worst:e}");
}

#[test]
fn drift_abort_keeps_wellformed_partial_csv() {
    let run = carnot(
        "integrate",
        r#"{"k": 3, "body": {"type": "lp_ball", "p": 4}, "h_ij": {"1,2": 1, "2,3": 0.7},
            "h0": [1, 0.5, -0.3], "t1": 50, "samples": 500,
            "tolerances": {"rtol": 1e-3, "atol": 1e-3, "max_drift": 1e-9}}"#,
    );
    assert_eq!(run.code(), 3, "{}", run.stderr());
    let text = run.text("trajectory.csv");
    let widths: Vec<usize> = text.lines().map(|l| l.split(',').count()).collect();
    assert!(widths.iter().all(|&w| w == widths[0]));
    let (_, rows) = csv_rows(&run.out.join("trajectory.csv"));
    assert!(rows.len() < 501);
    let summary = run.json("summary.json");
    assert_eq!(summary["status"], "aborted");
    assert!(summary["error"].as_str().unwrap().contains("drift"));
}

#[test]
fn analyze_examples() {
    let run = carnot("analyze", r#"{"k": 3, "body": {"type": "ball"}}"#);
    assert_eq!(run.code(), 0);
    let r = run.json("analyze.json");
    assert_eq!((r["leaf"].as_str(), r["kernel_dim"].as_u64()), (Some("zero_dim"), Some(3)));

    let run = carnot("analyze", r#"{"k": 3, "body": {"type": "ball"}, "h_ij": {"1,2": 1}}"#);
    let r = run.json("analyze.json");
    assert_eq!(r["leaf"], "two_dim");
    let c: Vec<f64> = r["casimir"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert_eq!(c, [0.0, 0.0, 1.0]);

    let run = carnot(
        "analyze",
        r#"{"k": 4, "body": {"type": "ball"}, "h_ij": {"1,2": 1, "3,4": 1.4142135623730951}}"#,
    );
    let r = run.json("analyze.json");
    assert_eq!((r["leaf"].as_str(), r["kernel_dim"].as_u64()), (Some("unclassified"), Some(0)));
    assert_eq!(r["dim_L"], 10);
}

#[test]
fn analyze_warns_near_singular() {
    let run = carnot("analyze", r#"{"k": 3, "body": {"type": "ball"}, "h_ij": {"1,2": 1e-8}}"#);
    assert_eq!(run.code(), 0);
    let r = run.json("analyze.json");
    assert!(r["warnings"][0].as_str().unwrap().contains("near-singular"));
}

#[test]
fn classify_examples() {
    let slice = r#""k": 3, "body": {"type": "ball"}, "h_ij": {"1,2": 1}"#;
    let run = carnot("classify", &format!("{{{slice}, \"h0\": [0, 0, 1]}}"));
    assert_eq!(run.code(), 0);
    assert_eq!(run.json("classify.json")["class"], "constant");

    let run = carnot("classify", &format!("{{{slice}, \"h0\": [1, 0, 0]}}"));
    let r = run.json("classify.json");
    assert_eq!(r["class"], "periodic");
    assert!((r["period"].as_f64().unwrap() - 2.0 * std::f64::consts::PI).abs() < 1e-9);
    assert!(r["parallel_test_residual"].as_f64().is_some());

    let run = carnot(
        "classify",
        r#"{"k": 3, "body": {"type": "lp_ball", "p": 4}, "h_ij": {"1,2": 0.4, "1,3": -0.9, "2,3": 0.3},
            "h0": [0.3, -1.1, 0.7]}"#,
    );
    assert_eq!(run.code(), 0, "{}", run.stderr());
    let r = run.json("classify.json");
    assert_eq!(r["class"], "periodic");
    assert!(r["return_residual"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn classify_sweep() {
    let run = carnot(
        "classify",
        r#"{"k": 3, "body": {"type": "ball"}, "h_ij": {"1,3": 2}, "sweep": [[1, 0, 0], [0, 1, 0], [0, 0, 1]]}"#,
    );
    assert_eq!(run.code(), 0);
    let r = run.json("classify.json");
    let classes: Vec<&str> = r["results"].as_array().unwrap().iter().map(|c| c["class"].as_str().unwrap()).collect();
    assert_eq!(classes, ["periodic", "constant", "periodic"]);
    assert_eq!(r["seed"], 42);
}

#[test]
fn classify_other_rank_is_config_error() {
    let run = carnot("classify", &heisenberg());
    assert_eq!(run.code(), 2);
    assert!(run.stderr().contains("classification is only established for k=3"), "{}", run.stderr());
}

#[test]
fn gradcheck_examples() {
    let run = carnot("gradcheck", r#"{"k": 3, "body": {"type": "ball"}, "seed": 7}"#);
    assert_eq!(run.code(), 0);
    let r = run.json("gradcheck.json");
    assert_eq!(r["seed"], 7);
    assert_eq!(r["points"], 1000);
    assert!(r["max_relative_error"].as_f64().unwrap() <= 1e-9);

    let run = carnot("gradcheck", r#"{"k": 4, "body": {"type": "lp_ball", "p": 1.5}}"#);
    assert_eq!(run.code(), 0);
    assert_eq!(run.json("gradcheck.json")["pass"], true);

    let run = carnot("gradcheck", r#"{"k": 3, "body": {"type": "lp_ball", "p": 1}}"#);
    assert_eq!(run.code(), 2);
    let r = run.json("gradcheck.json");
    assert_eq!((r["valid"].as_bool(), r["pass"].as_bool()), (Some(false), Some(false)));
    assert!(r["max_relative_error"].is_null());
}

#[test]
fn config_errors_exit_2_and_name_the_field() {
    for (config, name) in [
        (r#"{"k": 3, "body": {"type": "ball"}, "h_ij": {"2,1": 1}, "h0": [1, 0, 0]}"#, "h_ij.\"2,1\""),
        (r#"{"k": 3, "body": {"type": "ball"}, "h0": [1, 0]}"#, "h0"),
        (r#"{"k": 3, "body": {"type": "ball"}, "h0": [1, 0, 0], "t1": 0}"#, "t1"),
        (r#"{"k": 3, "body": {"type": "cube"}, "h0": [1, 0, 0]}"#, "body.type"),
        (r#"{"k": 3, "body": {"type": "ball"}}"#, "h0"),
        (r#"{"k": 3, "body": {"type": "lp_ball", "p": 0.5}, "h0": [1, 0, 0], "t1": 1}"#, "body"),
        ("not json", "<root>"),
    ] {
        let run = carnot("integrate", config);
        assert_eq!(run.code(), 2, "{config}");
        assert!(run.stderr().contains(&format!("`{name}`")), "{config}: {}", run.stderr());
    }
    let output = Command::new(env!("CARGO_BIN_EXE_carnot"))
        .args(["analyze", "--config", "/nonexistent/carnot.json"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn reports_are_deterministic() {
    let cases = [
        ("analyze", r#"{"k": 3, "body": {"type": "ball"}, "h_ij": {"1,2": 0.3, "2,3": -1}, "h0": [1, 2, 3]}"#.to_string()),
        ("classify", r#"{"k": 3, "body": {"type": "lp_ball", "p": 3}, "h_ij": {"1,2": 0.3, "2,3": -1}, "h0": [1, 2, 3]}"#.to_string()),
        ("classify", r#"{"k": 3, "body": {"type": "ball"}, "h_ij": {"1,2": 1}, "sweep": [[1, 2, 3], [3, 2, 1], [0, 0, 1]]}"#.to_string()),
        ("gradcheck", r#"{"k": 5, "body": {"type": "lp_ball", "p": 2.5}, "seed": 3}"#.to_string()),
        ("integrate", heisenberg()),
    ];
    for (command, config) in cases {
        let a = carnot(command, &config);
        let b = carnot(command, &config);
        assert_eq!(a.code(), 0, "{command}: {}", a.stderr());
        let names: &[&str] = match command {
            "integrate" => &["trajectory.csv"],
            "analyze" => &["analyze.json"],
            "classify" => &["classify.json"],
            _ => &["gradcheck.json"],
        };
        for name in names {
            assert_eq!(fs::read(a.out.join(name)).unwrap(), fs::read(b.out.join(name)).unwrap(), "{command}");
        }
    }
}
