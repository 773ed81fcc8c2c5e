use std::path::Path;
use std::process::{Command, Output};

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_damage-ident"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn stages_run_in_order_from_persisted_results() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();

    let o = run(out, &["weights", "calibrate"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("reference generate"));

    assert!(run(out, &["reference", "generate"]).status.success());
    assert!(out.join("reference.json").exists());
    assert!(out.join("reference_curve.csv").exists());

    let o = run(out, &["identify", "--stage", "1"]);
    assert!(stderr(&o).contains("weights calibrate"), "{}", stderr(&o));

    assert!(run(out, &["weights", "calibrate"]).status.success());
    let o = run(out, &["identify", "--stage", "3"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("stage1.json"), "{}", stderr(&o));

    let o = run(out, &["identify", "--stage", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let stage1: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("stage1.json")).unwrap()).unwrap();
    assert_eq!(stage1["seed"], 1);
    assert_eq!(stage1["config_hash"].as_str().unwrap().len(), 64);
    let trace = std::fs::read_to_string(out.join("trace_stage1.csv")).unwrap();
    assert!(trace.starts_with("eval_index,x1,x2,f,penalized,source\n"));

    let o = run(out, &["identify", "--stage", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = run(out, &["identify", "--stage", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.join("overlay.csv").exists());
}

#[test]
fn changed_configuration_invalidates_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    assert!(run(out, &["reference", "generate"]).status.success());
    let cfg = out.join("c.toml");
    std::fs::write(&cfg, "du = 0.005\n").unwrap();
    let o = run(out, &["--config", cfg.to_str().unwrap(), "weights", "calibrate"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("configuration"), "{}", stderr(&o));
}

#[test]
fn simulate_writes_curve_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    for model in ["tensile", "bending"] {
        let o = run(out, &["simulate", model, "--u-max", "0.01"]);
        assert!(o.status.success(), "{}", stderr(&o));
        let csv = std::fs::read_to_string(out.join(format!("{model}.csv"))).unwrap();
        assert!(csv.starts_with("u,L,delta_l,crack_open\n"));
        assert_eq!(csv.lines().count(), 6);
    }
}

#[test]
fn reliability_report_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    assert!(run(out, &["reference", "generate"]).status.success());
    assert!(run(out, &["weights", "calibrate"]).status.success());
    let o = run(out, &["reliability", "--runs", "2", "--stage", "1", "--precision", "1e-3", "--workers", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(out.join("reliability.txt")).unwrap();
    assert!(text.contains("elastic") && text.contains("mean error %"));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("reliability.json")).unwrap()).unwrap();
    assert_eq!(json["data"]["rows"][0]["records"].as_array().unwrap().len(), 2);
}

#[test]
fn bad_arguments_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let cfg = out.join("c.toml");
    std::fs::write(&cfg, "unknown_key = 3\n").unwrap();
    let o = run(out, &["--config", cfg.to_str().unwrap(), "reference", "generate"]);
    assert!(!o.status.success());
    assert!(stderr(&o).starts_with("error:"));
    assert!(!run(out, &["identify", "--stage", "4"]).status.success());
}
