use std::process::Command;

fn rfd() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rfd"))
}

#[test]
fn solve_writes_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = rfd()
        .args(["solve", "--problem", "cubic-sine", "--grid", "15", "--steps", "16", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(v["err_node_h1"].as_f64().unwrap() > 0.0);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{ "problem": "zero", "J": 7, "N": 4, "levels": 3 }"#).unwrap();
    let out = rfd()
        .args(["converge", "--problem", "linear-mode", "--sequential", "--config"])
        .arg(&cfg)
        .env("RFD_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("eoc.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    let table: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("eoc.json")).unwrap()).unwrap();
    assert_eq!(table["problem"], "linear-mode");
}

#[test]
fn verify_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let out = rfd().args(["verify", "--sizes", "3,10", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS"));
    assert!(dir.path().join("properties.json").exists());
}

#[test]
fn usage_errors_exit_with_one() {
    let bad_flag = rfd().args(["solve", "--bogus"]).output().unwrap();
    assert_eq!(bad_flag.status.code(), Some(1));

    let missing = rfd().args(["solve", "--problem", "zero"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{ "problem": "zero", "J": 7, "N": 4, "extra": 1 }"#).unwrap();
    let out = rfd().args(["solve", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("extra"));
}
