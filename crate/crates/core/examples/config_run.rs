// Driving an experiment from a JSON configuration, the way the `hklab` binary does, and
// checking that a rerun reproduces the artifacts byte for byte.

use std::fs;

use hklab::experiment::{run as run_experiment, ExperimentConfig};

pub fn run() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("hklab-config-run-{}", std::process::id()));
    let text = format!(
        r#"{{"kind": "crossover", "family": "SplusHK", "level": 4, "levels": [4], "out": {:?}}}"#,
        dir.join("a")
    );
    let mut config = ExperimentConfig::from_json(&text)?;
    let first = run_experiment(&config)?;
    for line in &first.summary {
        println!("{line}");
    }
    config.out = Some(dir.join("b"));
    let second = run_experiment(&config)?;
    assert_eq!(first.config_hash, second.config_hash);
    for name in &first.artifacts {
        assert_eq!(fs::read(dir.join("a").join(name))?, fs::read(dir.join("b").join(name))?, "{name}");
    }
    println!("hash {} reproduced {} artifacts", first.config_hash, first.artifacts.len());
    fs::remove_dir_all(&dir)?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run()
}
