//! End-to-end checks of the command-line interface: exit codes, artifact
//! formats, and determinism across worker counts.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_percotree")
}

fn zoo(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../zoo")
        .join(name)
        .display()
        .to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON: {e}\n{}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

fn tmp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("percotree-test-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn usage_error_exits_64() {
    let out = run(&["analyze"]); // missing --model
    assert_eq!(out.status.code(), Some(64));
    let out = run(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn help_exits_zero() {
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn validate_good_and_bad_models() {
    let out = run(&["validate", "--model", &zoo("mandelbrot_p05.json")]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["valid"], true);

    // corrupt model: cube geometry with the wrong branching factor
    let dir = tmp_dir("validate");
    let bad = dir.join("bad.json");
    let text = std::fs::read_to_string(zoo("mandelbrot_p05.json")).unwrap();
    std::fs::write(&bad, text.replace("\"m\": 4", "\"m\": 5")).unwrap();
    let out = run(&["validate", "--model", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stdout_json(&out)["valid"], false);
}

#[test]
fn analyze_reports_threshold() {
    let out = run(&["analyze", "--model", &zoo("mandelbrot_p05.json")]);
    assert_eq!(out.status.code(), Some(0));
    let doc = stdout_json(&out);
    let d = doc["d_star"].as_f64().unwrap();
    assert!((d - 1.0).abs() < 1e-8, "d_star {d}");
}

#[test]
fn missing_model_is_input_error() {
    let out = run(&["analyze", "--model", "/nonexistent/nowhere.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn budget_error_exits_2() {
    // depth 40 quadtree exceeds the default node budget
    let out = run(&[
        "simulate",
        "--model",
        &zoo("mandelbrot_p09.json"),
        "--depth",
        "40",
        "--replicas",
        "1",
        "--seed",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stdout_json(&out)["kind"], "budget");
}

#[test]
fn render_writes_pgm_with_exact_header() {
    let dir = tmp_dir("render");
    let out = run(&[
        "render",
        "--model",
        &zoo("mandelbrot_p09.json"),
        "--depth",
        "8",
        "--seed",
        "1",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let doc = stdout_json(&out);
    assert_eq!(doc["width"], 256);
    assert_eq!(doc["height"], 256);
    let bytes = std::fs::read(dir.join("render.pgm")).unwrap();
    assert!(bytes.starts_with(b"P5\n256 256\n255\n"));
    assert_eq!(bytes.len(), b"P5\n256 256\n255\n".len() + 256 * 256);
}

#[test]
fn simulate_csv_is_byte_identical_across_workers() {
    let dir1 = tmp_dir("sim-w1");
    let dir8 = tmp_dir("sim-w8");
    for (dir, workers) in [(&dir1, "1"), (&dir8, "8")] {
        let out = run(&[
            "simulate",
            "--model",
            &zoo("interval_p08.json"),
            "--depth",
            "8",
            "--replicas",
            "500",
            "--seed",
            "7",
            "--workers",
            workers,
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = std::fs::read(dir1.join("trajectories.csv")).unwrap();
    let b = std::fs::read(dir8.join("trajectories.csv")).unwrap();
    assert_eq!(a, b);
    // repeated runs are byte-identical too
    let dir1b = tmp_dir("sim-w1-again");
    run(&[
        "simulate",
        "--model",
        &zoo("interval_p08.json"),
        "--depth",
        "8",
        "--replicas",
        "500",
        "--seed",
        "7",
        "--workers",
        "1",
        "--out",
        dir1b.to_str().unwrap(),
    ]);
    let c = std::fs::read(dir1b.join("trajectories.csv")).unwrap();
    assert_eq!(a, c);
}

#[test]
fn simulate_csv_shape() {
    let dir = tmp_dir("sim-shape");
    let out = run(&[
        "simulate",
        "--model",
        &zoo("mandelbrot_p05.json"),
        "--depth",
        "4",
        "--replicas",
        "10",
        "--seed",
        "3",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.join("trajectories.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("replica,generation,count,flow,w"));
    assert_eq!(text.lines().count(), 1 + 10 * 5);
    assert!(text.ends_with('\n'));
    // summary JSON re-parses
    let doc = stdout_json(&out);
    assert!(doc["emptiness"]["frequency"].is_number());
}

#[test]
fn report_pipeline_and_missing_artifact() {
    let dir = tmp_dir("report");
    // missing analysis artifact
    let out = run(&[
        "report",
        "--model",
        &zoo("interval_p08.json"),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stdout_json(&out)["kind"], "missing_artifact");

    // full pipeline: analyze + simulate + report
    for args in [
        vec!["analyze", "--model", &zoo("interval_p08.json"), "--out", dir.to_str().unwrap()],
        vec![
            "simulate",
            "--model",
            &zoo("interval_p08.json"),
            "--depth",
            "15",
            "--replicas",
            "2000",
            "--seed",
            "5",
            "--out",
            dir.to_str().unwrap(),
        ],
    ] {
        let out = run(&args.iter().map(|s| s as &str).collect::<Vec<_>>());
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let out = run(&[
        "report",
        "--model",
        &zoo("interval_p08.json"),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = stdout_json(&out);
    let checks = doc["checks"].as_array().unwrap();
    assert!(checks.len() >= 3);
    for check in checks {
        assert_eq!(check["pass"], true, "failed cross-check: {check}");
    }
    assert!(dir.join("report.json").exists());
}

#[test]
fn report_marks_almost_surely_empty_models() {
    let dir = tmp_dir("report-empty");
    let out = run(&[
        "analyze",
        "--model",
        &zoo("mandelbrot_p02.json"),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let out = run(&[
        "report",
        "--model",
        &zoo("mandelbrot_p02.json"),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let doc = stdout_json(&out);
    assert!(doc["dimension"]["d_star"].is_null());
    assert!(doc["dimension"]["note"]
        .as_str()
        .unwrap()
        .contains("empty almost surely"));
}

#[test]
fn estimate_dim_summary() {
    let out = run(&[
        "estimate-dim",
        "--model",
        &zoo("moran_halves.json"),
        "--depth",
        "8",
        "--replicas",
        "3",
        "--seed",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let doc = stdout_json(&out);
    let slope = doc["estimate"]["slope"].as_f64().unwrap();
    assert!((slope - 1.0).abs() < 1e-9, "full subdivision slope {slope}");
}

#[test]
fn oracle_subcommand_is_hidden_but_works() {
    let help = run(&["--help"]);
    assert!(!String::from_utf8_lossy(&help.stdout).contains("oracle"));
    let out = run(&[
        "oracle",
        "--model",
        &zoo("binary_case2.json"),
        "--depth",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let doc = stdout_json(&out);
    assert!(doc["generating_function"].is_number());
    assert!(doc["min_cut_distribution"].is_array());
}
