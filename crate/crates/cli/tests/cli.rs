use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_radonlab"))
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn run(cmd: &str, scenario: &Path, out: &Path, extra: &[&str]) -> Output {
    bin()
        .arg(cmd)
        .arg("--scenario")
        .arg(scenario)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .expect("binary runs")
}

fn write_scenario(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn model_list_and_show() {
    let out = bin().args(["model", "list"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l == "parabola"));

    let out = bin().args(["model", "show", "cubic"]).output().unwrap();
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["d"], 3);

    let out = bin().args(["model", "show", "helix"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn ball_report_and_slab_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("ball", &scenario("ball.json"), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&dir.path().join("ball-parabola.json"));
    for key in ["center", "delta1", "delta2", "h", "volume", "proj1", "proj2", "pi_extent", "ratios"] {
        assert!(!report["result"][key].is_null(), "missing {key}");
    }
    assert_eq!(report["parameters"]["tau"], 1.0 / 32.0);
    assert_eq!(report["passed"], true);

    let csv = std::fs::read_to_string(dir.path().join("ball-parabola.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,f"));
    let h = report["result"]["h"].as_f64().unwrap();
    let mass: f64 = lines.map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap() * h).sum();
    let vol = report["result"]["volume"].as_f64().unwrap();
    assert!((mass - vol).abs() < 1e-12 * vol.max(1.0));

    let meta = read_json(&dir.path().join("ball-parabola.meta.json"));
    assert!(meta["started"].is_string());
    assert!(report.get("started").is_none());
}

#[test]
fn region_csv_labels() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("region", &scenario("region-small.json"), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("region.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("c1,c2,min_ratio,decay,class"));
    let labels: Vec<&str> = lines.map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(labels.len(), 25);
    assert!(labels.contains(&"inside") && labels.contains(&"outside"));
    assert!(labels.iter().all(|l| ["inside", "outside", "boundary", "inconclusive"].contains(l)));
}

#[test]
fn missing_h_is_a_usage_error_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("ball", &scenario("ball-missing-h.json"), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("parameters.h"));
    assert!(!dir.path().join("ball.json").exists());
}

#[test]
fn unknown_parameter_is_rejected_with_its_path() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write_scenario(
        dir.path(),
        "s.json",
        r#"{"model": "parabola", "parameters": {"delta1": 0.1, "delta2": 0.1, "h": 0.01, "hh": 1}}"#,
    );
    let out = run("ball", &sc, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("hh"));
}

#[test]
fn coarse_lattice_is_a_resolution_error() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write_scenario(
        dir.path(),
        "s.json",
        r#"{"model": "parabola", "parameters": {"delta1": 0.0625, "delta2": 0.0625, "h": 0.0625}}"#,
    );
    let out = run("ball", &sc, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn failed_assertion_exits_one_and_still_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write_scenario(
        dir.path(),
        "s.json",
        r#"{"model": "parabola", "parameters": {
            "region": {"windows": [{"theta": 1.0, "a": 1.0, "deltas": [0.0625, 0.03125]}],
                       "z_samples": [{"x": [0.0, 0.0], "t": 0.0}]},
            "expect": [{"c1": 1.0, "c2": 1.0, "class": ["inside"]}]},
            "output": {"name": "wrong"}}"#,
    );
    let out = run("region", &sc, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL node (1, 1)"));
    assert_eq!(read_json(&dir.path().join("wrong.json"))["passed"], false);
}

#[test]
fn stochastic_runs_need_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(scenario("decompose.json")).unwrap();
    let mut v: Value = serde_json::from_str(&text).unwrap();
    v.as_object_mut().unwrap().remove("seed");
    let sc = write_scenario(dir.path(), "s.json", &v.to_string());
    assert_eq!(run("decompose", &sc, dir.path(), &[]).status.code(), Some(2));
    let out = run("decompose", &sc, dir.path(), &["--seed", "7"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read_json(&dir.path().join("decompose.json"))["seed"], 7);
}

#[test]
fn wrong_command_for_the_scenario_kind() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run("region", &scenario("ball.json"), dir.path(), &[]).status.code(), Some(2));
}

#[test]
fn bad_invocations_are_usage_errors() {
    assert_eq!(bin().output().unwrap().status.code(), Some(2));
    assert_eq!(bin().args(["ball"]).output().unwrap().status.code(), Some(2));
}

#[test]
fn experiment_scenarios_pass() {
    for (cmd, file) in [
        ("lemma-check", "lemma.json"),
        ("classify", "classify-small.json"),
        ("test-inequality", "test-balls.json"),
        ("test-inequality", "test-sets.json"),
        ("necessity", "necessity.json"),
        ("decompose", "decompose.json"),
    ] {
        let dir = tempfile::tempdir().unwrap();
        let out = run(cmd, &scenario(file), dir.path(), &[]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{file}: {}{}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn test_report_shape() {
    let dir = tempfile::tempdir().unwrap();
    run("test-inequality", &scenario("test-balls.json"), dir.path(), &[]);
    let r = read_json(&dir.path().join("test.json"));
    for key in ["triple", "delta_grid", "ratios", "verdict"] {
        assert!(!r["result"][key].is_null(), "missing {key}");
    }
    assert_eq!(r["result"]["verdict"], "unbounded");
}

#[test]
fn outputs_do_not_depend_on_the_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let mc = write_scenario(
        dir.path(),
        "mc.json",
        r#"{"model": "parabola", "kind": "ball",
            "parameters": {"delta1": 0.125, "delta2": 0.125, "h": 0.0078125, "mc": {"paths": 20000, "steps": 16}},
            "seed": 5, "output": {"name": "mc"}}"#,
    );
    let cases = [("ball", mc, "mc"), ("decompose", scenario("decompose.json"), "decompose"), ("region", scenario("region-small.json"), "region")];
    for (cmd, sc, stem) in &cases {
        let mut outputs = Vec::new();
        for threads in ["1", "8", "8"] {
            let out = dir.path().join(format!("{stem}-{threads}-{}", outputs.len()));
            let res = run(cmd, sc, &out, &["--threads", threads]);
            assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
            let json = std::fs::read(out.join(format!("{stem}.json"))).unwrap();
            let csv = std::fs::read(out.join(format!("{stem}.csv"))).unwrap();
            outputs.push((json, csv));
        }
        assert!(outputs.windows(2).all(|w| w[0] == w[1]), "{stem}");
    }
}
