use std::path::Path;
use std::process::{Command, Output};

use asa_core::harness::{from_json, to_json, RunDocument};

fn asa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_asa"))
        .args(args)
        .output()
        .expect("spawn asa")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn run_writes_json_that_round_trips() {
    let o = asa(&["run", "--problem", "sphere", "--seed", "4", "--max-generated", "800"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["problem"], "sphere");
    assert_eq!(v["report"]["seed"], 4);
    let doc: RunDocument = from_json(&text).unwrap();
    assert_eq!(to_json(&doc).unwrap(), text);
}

#[test]
fn same_seed_same_output() {
    let args = ["run", "--problem", "shubert", "--seed", "9", "--max-generated", "2000"];
    assert_eq!(asa(&args).stdout, asa(&args).stdout);
}

#[test]
fn csv_trace_starts_at_first_evaluation() {
    let o = asa(&[
        "run",
        "--problem",
        "sphere",
        "--max-generated",
        "300",
        "--format",
        "csv",
    ]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "generated,accepted,best_cost,current_cost,t_accept,max_param_t"
    );
    assert!(lines.next().unwrap().starts_with("1,1,1.2500000000000000e1,"));
}

#[test]
fn missed_target_exits_one() {
    let o = asa(&["run", "--problem", "sphere", "--max-generated", "50", "--target", "-1"]);
    assert_eq!(code(&o), 1);
    let hit = asa(&[
        "run",
        "--problem",
        "sphere",
        "--max-generated",
        "5000",
        "--target",
        "1e-3",
    ]);
    assert_eq!(code(&hit), 0);
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write(
        dir.path(),
        "a.toml",
        "algorithm = \"ga\"\n[problem]\nname = \"sphere\"\n",
    );
    let o = asa(&["run", "--config", &unknown]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("ga"));

    let reversed = write(
        dir.path(),
        "b.toml",
        "[problem]\ncost = \"x\"\n[[problem.parameter]]\nname = \"x\"\nlower = 1.0\nupper = -1.0\n",
    );
    assert_eq!(code(&asa(&["run", "--config", &reversed])), 2);
    assert_eq!(code(&asa(&["run", "--problem", "nope"])), 2);
    assert_eq!(code(&asa(&["run", "--config", "/nonexistent/x.toml"])), 2);
    assert_eq!(code(&asa(&["run", "--problem", "sphere", "--format", "xml"])), 2);
}

#[test]
fn custom_problem_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        r#"seed = 2
[problem]
cost = "(x - 1.5)^2 + (y + 0.5)^2"
[[problem.parameter]]
name = "x"
lower = -4.0
upper = 4.0
[[problem.parameter]]
name = "y"
lower = -4.0
upper = 4.0
[termination]
max_generated = 5000
"#,
    );
    let o = asa(&["run", "--config", &cfg]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let best = v["report"]["best_point"].as_array().unwrap();
    assert!((best[0].as_f64().unwrap() - 1.5).abs() < 1e-2);
    assert!((best[1].as_f64().unwrap() + 0.5).abs() < 1e-2);
}

#[test]
fn bench_reports_every_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench.json");
    let o = asa(&[
        "bench",
        "--problem",
        "shubert",
        "--seeds",
        "0..5",
        "--workers",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["seeds"], serde_json::json!([0, 1, 2, 3, 4]));
    assert_eq!(v["summary"]["runs"].as_array().unwrap().len(), 5);

    let none = asa(&[
        "bench",
        "--problem",
        "sphere",
        "--seeds",
        "1,2",
        "--max-generated",
        "20",
        "--target",
        "-1",
    ]);
    assert_eq!(code(&none), 1);
}

#[test]
fn sample_writes_records() {
    let o = asa(&["sample", "--problem", "sphere", "--max-generated", "200"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().next().unwrap().starts_with("generated_index,x0,x1,cost,g"));
    assert_eq!(text.lines().count(), 200);
}

#[test]
fn selfopt_and_diag_run() {
    let o = asa(&[
        "selfopt",
        "--problem",
        "sphere",
        "--budget",
        "3",
        "--inner-budget",
        "300",
        "--seeds",
        "0..2",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["report"]["tuned_cost"].as_f64().unwrap() <= v["report"]["default_cost"].as_f64().unwrap());

    let d = asa(&["diag", "--format", "csv"]);
    assert_eq!(code(&d), 0);
    let text = String::from_utf8(d.stdout).unwrap();
    assert_eq!(text.lines().next().unwrap(), "k,t_asa,t_ba,t_fa");
}
