use std::fs;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dynrf"))
}

#[test]
fn run_writes_outputs_and_honours_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "scenario = \"pn-vs-area\"\nseed = 1\n[pn-vs-area]\ntheta_pi = [1]\n").unwrap();
    let out = dir.path().join("out");
    let status = bin()
        .args(["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "9", "--quiet"])
        .env("DYNRF_WORKERS", "2")
        .status()
        .unwrap();
    assert!(status.success());
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 9);
    assert_eq!(m["workers"], 2);
    assert!(out.join("pn-vs-area/pn.csv").exists());
}

#[test]
fn unreadable_config_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "scenario = 3").unwrap();
    let out = dir.path().join("out");
    let status =
        bin().args(["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--quiet"]).status().unwrap();
    assert_eq!(status.code(), Some(2));
    assert!(out.join("manifest.json").exists());
}
