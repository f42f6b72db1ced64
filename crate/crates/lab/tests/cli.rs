use std::path::Path;
use std::process::Command;

fn gimlab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gimlab"))
}

fn configs() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/configs"))
}

#[test]
fn bayes_run_exits_zero_and_writes_csv() {
    let out = tempfile::tempdir().unwrap();
    let st = gimlab()
        .args(["bayes", "--config"])
        .arg(configs().join("bayes.json"))
        .arg("--out")
        .arg(out.path())
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(0), "{}", String::from_utf8_lossy(&st.stderr));
    assert!(out.path().join("bayes_bounds.csv").exists());
    assert!(out.path().join("bayes_provenance.json").exists());
}

#[test]
fn subcommand_must_match_config_kind() {
    let st = gimlab().args(["mc", "--config"]).arg(configs().join("bayes.json")).output().unwrap();
    assert_eq!(st.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&st.stderr).contains("bayes"));
}

#[test]
fn empty_range_is_rejected_with_field_name() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    std::fs::write(
        &p,
        r#"{"schema_version":1,"experiment":{"kind":"single-lens","sizes":{"min":1e-3,"max":1e-1,"points":0},"eps":0.01,"sigma":1.0}}"#,
    )
    .unwrap();
    let st = gimlab().args(["single-lens", "--config"]).arg(&p).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(st.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&st.stderr).contains("sizes"), "{}", String::from_utf8_lossy(&st.stderr));
}

#[test]
fn seed_flag_overrides_and_json_format_works() {
    let out = tempfile::tempdir().unwrap();
    let st = gimlab()
        .args(["mc", "--seed", "99", "--format", "json", "--config"])
        .arg(configs().join("mc.json"))
        .arg("--out")
        .arg(out.path())
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&std::fs::read(out.path().join("mc.json")).unwrap()).unwrap();
    assert_eq!(doc["provenance"]["seed"], 99);
}
