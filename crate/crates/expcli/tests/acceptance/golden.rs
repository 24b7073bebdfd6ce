//! Pinned outputs for the configs in `tests/golden`. Set
//! `ENTLOC_UPDATE_GOLDEN=1` to rewrite them after an intended change.

use std::fs;
use std::path::{Path, PathBuf};

use expcli::config::ExperimentConfig;
use expcli::experiments;

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn configs() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(golden_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    v.sort();
    v
}

fn check(config: &Path) {
    let cfg = ExperimentConfig::from_json(&fs::read_to_string(config).unwrap()).unwrap();
    let stem = config.file_stem().unwrap().to_str().unwrap();
    let update = std::env::var_os("ENTLOC_UPDATE_GOLDEN").is_some();
    for table in experiments::run(&cfg).unwrap() {
        let got = table.to_csv_excluding(&["wall_time_ms"]).unwrap();
        assert!(got.starts_with("schema_version,seed,"));
        let path = golden_dir().join(format!("{stem}.{}.csv", table.name));
        if update {
            fs::write(&path, &got).unwrap();
            continue;
        }
        let want = fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing golden file {}", path.display()));
        assert_eq!(got, want, "golden mismatch for {}", path.display());
    }
}

#[test]
fn golden_outputs_match() {
    let cfgs = configs();
    assert!(cfgs.len() >= 8);
    for c in &cfgs {
        check(c);
    }
}

#[test]
fn every_golden_csv_has_a_config() {
    let stems: Vec<String> = configs()
        .iter()
        .map(|p| p.file_stem().unwrap().to_str().unwrap().to_string())
        .collect();
    for e in fs::read_dir(golden_dir()).unwrap() {
        let p = e.unwrap().path();
        if p.extension().is_some_and(|e| e == "csv") {
            let name = p.file_name().unwrap().to_str().unwrap();
            assert!(stems.iter().any(|s| name.starts_with(&format!("{s}."))), "orphan {name}");
        }
    }
}
