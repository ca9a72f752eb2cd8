use std::path::Path;
use std::process::{Command, Output};

fn ris_corr(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ris-corr"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn malformed_config_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, "{\n  \"grid\": {\"l_x\": 4.0,,}\n}").unwrap();
    let o = ris_corr(&["dof", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn unknown_field_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("typo.json");
    std::fs::write(&cfg, r#"{"grid": {"lx": 4.0}}"#).unwrap();
    let o = ris_corr(&["spectrum", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("lx"), "{}", stderr(&o));
}

#[test]
fn monte_carlo_needs_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let o = ris_corr(&["mc-validate"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn budget_violation_exits_with_capacity_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = ris_corr(&["spectrum", "--mem-budget", "1"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("bytes"), "{}", stderr(&o));
    assert!(!dir.path().join("spectrum.csv").exists());
}

#[test]
fn fit_from_listed_samples_as_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("samples.json");
    std::fs::write(
        &cfg,
        r#"{"fit_samples": [[16.0, 70.48257350538451], [64.0, 244.3982131794878], [144.0, 520.0836336074341]]}"#,
    )
    .unwrap();
    let o = ris_corr(
        &["fit", "--config", cfg.to_str().unwrap(), "--format", "json"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("fit.json")).unwrap())
            .unwrap();
    let row = &doc["rows"][0];
    assert!((row[0].as_f64().unwrap() - 4.4).abs() < 1e-6, "{doc}");
    assert!((row[1].as_f64().unwrap() - 0.55).abs() < 1e-6, "{doc}");
}

#[test]
fn small_monte_carlo_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("mc.json");
    std::fs::write(&cfg, r#"{"mc": {"waves": 200, "realizations": [10, 100]}}"#).unwrap();
    let o = ris_corr(
        &[
            "mc-validate",
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            "3",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let t = ris_corr_cli::read_csv(&dir.path().join("mc_validate.csv")).unwrap();
    assert_eq!(t.rows.len(), 4);
    assert!(t.config.unwrap().contains("\"seed\":3"));
}
