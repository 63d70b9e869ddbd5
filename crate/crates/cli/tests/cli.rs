use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ewkv(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ewkv"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("EWKV_OUT")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn gate_subcommand_passes_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = ewkv(&["gate", "--m", "1", "--p1", "7", "--p2", "7"], dir.path());
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS criterion  8"));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("gate_report.json")).unwrap())
            .unwrap();
    assert_eq!(report["p_bal"], 6.0);
    assert_eq!(report["gate"], "case-1");
    let certs: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("certificates.json")).unwrap())
            .unwrap();
    assert_eq!(certs[0]["pass"], true);
    assert_eq!(certs[0]["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn missing_b_is_a_usage_error_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{ "experiment": "gate", "params": { "a": 1 }, "physics": { "p1": 7, "p2": 7 } }"#,
    );
    let out = ewkv(&["run", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("params.b"));
}

#[test]
fn unknown_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{ "experiment": "gate", "params": { "a": 1, "b": 2 }, "physics": { "p1": 7, "p2": 7, "p4": 1 } }"#,
    );
    let out = ewkv(&["run", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("physics"));
}

#[test]
fn failing_certificate_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = ewkv(&["gate", "--m", "1", "--p1", "20", "--p2", "4"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn unordered_3d_exponents_are_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{ "experiment": "gate3d", "params": { "a": 1, "b": 2 }, "physics": { "m": 1, "p1": 2.9, "p2": 2.4, "p3": 3 } }"#,
    );
    let out = ewkv(&["run", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("physics.p1"));
}

#[test]
fn env_var_overrides_output_dir() {
    let flag = tempfile::tempdir().unwrap();
    let env = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_ewkv"))
        .args(["gate", "--p1", "7", "--p2", "7", "--out"])
        .arg(flag.path())
        .env("EWKV_OUT", env.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(env.path().join("certificates.json").exists());
    assert!(!flag.path().join("certificates.json").exists());
}

#[test]
fn identical_configs_give_identical_csv() {
    let cfg_dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        cfg_dir.path(),
        r#"{ "experiment": "decay3d", "params": { "a": 1, "b": 2 }, "physics": { "m": 1, "s": 1 }, "seed": 5 }"#,
    );
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&d1, &d2] {
        assert_eq!(ewkv(&["run", &cfg], d.path()).status.code(), Some(0));
    }
    let mut csvs: Vec<_> = fs::read_dir(d1.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .filter(|n| n.to_string_lossy().ends_with(".csv"))
        .collect();
    csvs.sort();
    assert!(!csvs.is_empty());
    for name in csvs {
        assert_eq!(
            fs::read(d1.path().join(&name)).unwrap(),
            fs::read(d2.path().join(&name)).unwrap(),
            "{name:?}"
        );
    }
}
