//! Regression against CSV files recorded from earlier runs. Set
//! `HDGAME_UPDATE_GOLDEN=1` to re-record after an intended change.

use std::path::PathBuf;

use hdgame_harness::{config_for, simulate, write_csv, ExperimentKind};

fn check(name: &str, kind: ExperimentKind, overrides: &[&str]) {
    let overrides: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    let cfg = config_for(kind, &overrides).unwrap();
    let mut bytes = Vec::new();
    write_csv(&simulate(&cfg).unwrap(), &mut bytes).unwrap();
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name);
    if std::env::var_os("HDGAME_UPDATE_GOLDEN").is_some() || !path.exists() {
        std::fs::write(&path, &bytes).unwrap();
        return;
    }
    let expected = std::fs::read(&path).unwrap();
    assert!(expected == bytes, "{name} differs from the recorded run");
}

#[test]
fn cti_fig1_small_run_matches_recording() {
    check(
        "cti_fig1_small.csv",
        ExperimentKind::CtiFig1,
        &["seed=2024", "trials=3", "T=60"],
    );
}

#[test]
fn sis_fig2_small_run_matches_recording() {
    check(
        "sis_fig2_small.csv",
        ExperimentKind::SisFig2,
        &["seed=2024", "trials=3", "T=60"],
    );
}
