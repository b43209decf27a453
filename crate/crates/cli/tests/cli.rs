use std::path::Path;
use std::process::{Command, Output};

use mec_core::model::Occupancy;
use mec_core::scenario::{reference_scenario, ScenarioSpec, Traffic};

fn mec_sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mec-sim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_then_validate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("s.toml");
    let out = mec_sim(&[
        "generate",
        "--rho-per-class",
        "3.876,9.115,7.042,8.150",
        "--scale",
        "2",
        "--out",
        path(&file),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let out = mec_sim(&["validate", "--scenario", path(&file)]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("40 channels"));
    let parsed = ScenarioSpec::load(&file).unwrap();
    let expected =
        reference_scenario(2, Traffic::PerClass(vec![3.876, 9.115, 7.042, 8.150])).unwrap();
    assert_eq!(parsed, expected);
}

#[test]
fn validate_names_oversized_occupancy() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.toml");
    let mut s = reference_scenario(1, Traffic::Uniform(7.5)).unwrap();
    s.network.classes[0].occupancy[0] = Occupancy::Units(6);
    std::fs::write(&file, s.to_toml()).unwrap();
    let out = mec_sim(&["validate", "--scenario", path(&file)]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("w_{1,1}") && err.contains("validation"),
        "{err}"
    );
}

#[test]
fn exit_codes_separate_failure_classes() {
    let dir = tempfile::tempdir().unwrap();
    let garbled = dir.path().join("garbled.toml");
    std::fs::write(&garbled, "schema_version = [").unwrap();
    assert_eq!(
        mec_sim(&["validate", "--scenario", path(&garbled)])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        mec_sim(&["run", "--rho", "7.5", "--policy", "dqn"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(mec_sim(&["generate", "--rho=-1"]).status.code(), Some(3));
    let missing = dir.path().join("missing.toml");
    assert_eq!(
        mec_sim(&["validate", "--scenario", path(&missing)])
            .status
            .code(),
        Some(4)
    );
}

#[test]
fn run_writes_replication_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = mec_sim(&[
        "run",
        "--rho",
        "7.5",
        "--policy",
        "hee-acc-zero",
        "--reps",
        "2",
        "--horizon",
        "300",
        "--lifespan",
        "det",
        "--out",
        path(dir.path()),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let table = std::fs::read_to_string(dir.path().join("replications.csv")).unwrap();
    assert!(table.starts_with("schema_version,policy,row,replication"));
    assert!(!dir.path().join("relative.csv").exists());
}

#[test]
fn compare_reports_conservation_over_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let scenario =
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/reference_h1_rho7.5.toml");
    let out = mec_sim(&[
        "compare",
        "--scenario",
        path(&scenario),
        "--horizon",
        "2000",
        "--reps",
        "3",
        "--out",
        path(dir.path()),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.lines().next().unwrap().contains("conservation"));

    let mut rdr = csv::Reader::from_path(dir.path().join("relative.csv")).unwrap();
    let headers = rdr.headers().unwrap().clone();
    let col = headers.iter().position(|h| h == "conservation").unwrap();
    let mut cons = std::collections::HashMap::new();
    for row in rdr.records() {
        let row = row.unwrap();
        cons.insert(row[1].to_string(), row[col].parse::<f64>().unwrap());
    }
    assert_eq!(cons.len(), 5);
    assert_eq!(cons["nrm-vne"], 0.0);
    assert!(cons["hee-alrn"] > cons["nrm-vne"]);
    assert!(dir.path().join("timeline.csv").exists());
}
