//! The `hklab` binary: exit codes, manifests and byte-identical reruns.

use std::fs;
use std::path::Path;
use std::process::Command;

fn hklab(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_hklab")).args(args).output().unwrap()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn renorm_writes_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("renorm");
    let run = hklab(&["renorm", "--tau", "0.6", "--out", out.to_str().unwrap()]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let m = manifest(&out);
    assert_eq!(m["kind"], "renorm");
    assert_eq!(m["pass"], true);
    let names: Vec<&str> = m["artifacts"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(names, ["config.json", "manifest.json", "renorm.json"]);
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn inadmissible_tau_is_a_config_error() {
    let run = hklab(&["renorm", "--tau", "0.5"]);
    assert_eq!(run.status.code(), Some(2));
}

#[test]
fn malformed_csv_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("bad.csv");
    fs::write(&csv, "a,b\n0,1\n1\n").unwrap();
    let run = hklab(&["chain", "--csv", csv.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(2), "{}", String::from_utf8_lossy(&run.stderr));
}

#[test]
fn unknown_config_field_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.json");
    fs::write(&cfg, r#"{"tau": 0.6, "colour": "blue"}"#).unwrap();
    let run = hklab(&["exponents", "--config", cfg.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(2));
}

#[test]
fn local_family_cannot_drive_crossover() {
    let run = hklab(&["crossover", "--family", "rho_gaussian"]);
    assert_eq!(run.status.code(), Some(2));
}

#[test]
fn bad_thread_count_is_rejected() {
    let run = Command::new(env!("CARGO_BIN_EXE_hklab"))
        .args(["exponents"])
        .env("HKLAB_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(run.status.code(), Some(2));
}

#[test]
fn csv_chain_profile_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("line.csv");
    let n = 40;
    let mut text = (0..n).map(|i| format!("p{i}")).collect::<Vec<_>>().join(",") + "\n";
    for i in 0..n {
        let row: Vec<String> = (0..n).map(|j| format!("{}", (i as f64 - j as f64).abs() / n as f64)).collect();
        text += &(row.join(",") + "\n");
    }
    fs::write(&csv, text).unwrap();
    let out = tmp.path().join("chain");
    let run = hklab(&["chain", "--csv", csv.to_str().unwrap(), "--out", out.to_str().unwrap(), "--threads", "1"]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let fit: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("fit.json")).unwrap()).unwrap();
    // a geodesic line satisfies the chain condition: d_eps = d
    assert!((fit["gamma"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn heat_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let run = hklab(&["heat", "--operator", "jump", "--level", "3", "--out", dir.to_str().unwrap()]);
        assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    }
    let m = manifest(&a);
    assert_eq!(m, manifest(&b));
    for name in m["artifacts"].as_array().unwrap() {
        let name = name.as_str().unwrap();
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
}
