use std::fs;
use std::process::{Command, Output};

fn entloc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_entloc"))
        .args(args)
        .env_remove("ENTLOC_THREADS")
        .output()
        .expect("spawn entloc")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut r = csv::Reader::from_reader(csv.as_bytes());
    let idx = r.headers().unwrap().iter().position(|h| h == name).expect("column");
    r.records().map(|rec| rec.unwrap()[idx].to_string()).collect()
}

fn strip_wall_time(csv: &str) -> String {
    let mut r = csv::Reader::from_reader(csv.as_bytes());
    let headers = r.headers().unwrap().clone();
    let idx = headers.iter().position(|h| h == "wall_time_ms").unwrap();
    let mut out = String::new();
    let line = |rec: &csv::StringRecord| {
        rec.iter()
            .enumerate()
            .filter(|(i, _)| *i != idx)
            .map(|(_, v)| v)
            .collect::<Vec<_>>()
            .join(",")
    };
    out.push_str(&line(&headers));
    for rec in r.records() {
        out.push('\n');
        out.push_str(&line(&rec.unwrap()));
    }
    out
}

#[test]
fn unknown_subcommand_prints_usage_and_exits_2() {
    let o = entloc(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn help_exits_0() {
    let o = entloc(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    for sub in ["le", "sle", "gle", "fidelity", "table1", "fig", "sweep"] {
        assert!(stdout(&o).contains(sub), "missing {sub}");
    }
}

#[test]
fn table1_columns_are_fixed() {
    let o = entloc(&["table1", "--eta", "0.8", "--n", "3..4"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(
        out.lines().next().unwrap(),
        "schema_version,seed,n,eta,rounds,e1_seq,eR_seq,directions_last,branch_count,dedup_size,method,exact,wall_time_ms"
    );
    assert_eq!(column(&out, "e1_seq"), ["0.400000000", "0.320000000"]);
    let e6: Vec<f64> = column(&out, "eR_seq").iter().map(|s| s.parse().unwrap()).collect();
    assert!((e6[0] - 0.498).abs() < 2e-3 && (e6[1] - 0.496).abs() < 2e-3);
}

#[test]
fn sle_reaches_table_value() {
    let o = entloc(&["sle", "--family", "gghz", "--c0", "0.7071", "--eta", "0.8", "--rounds", "6"]);
    assert_eq!(o.status.code(), Some(0));
    let v = column(&stdout(&o), "value");
    assert_eq!(v.len(), 6);
    let last: f64 = v[5].parse().unwrap();
    assert!((last - 0.498).abs() < 5e-4, "{last}");
}

#[test]
fn fig3_values_are_at_least_one() {
    let o = entloc(&["fig", "3", "--rounds", "2..6", "--eta-grid", "0.05:1:0.05"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let f: Vec<f64> = column(&out, "f_r").iter().map(|s| s.parse().unwrap()).collect();
    let eta: Vec<f64> = column(&out, "eta").iter().map(|s| s.parse().unwrap()).collect();
    let r: Vec<usize> = column(&out, "r").iter().map(|s| s.parse().unwrap()).collect();
    assert_eq!(f.len(), 20 * 5);
    assert!(r.iter().all(|&k| (2..=6).contains(&k)));
    assert!(f.iter().all(|&x| x >= 1.0 - 1e-6), "{f:?}");
    for (x, e) in f.iter().zip(&eta) {
        if *e == 1.0 {
            assert!((x - 1.0).abs() < 1e-6);
        }
    }
}

#[test]
fn sampling_without_seed_is_a_config_error() {
    let o = entloc(&["fig", "6", "--samples", "4"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn budget_exceeded_exits_3() {
    let o = entloc(&["table1", "--n", "4", "--budget", "100"]);
    assert_eq!(o.status.code(), Some(3));
    let o = entloc(&["sle", "--family", "ghz", "--n", "5", "--no-dedup", "--budget", "5000"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn bad_inputs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"experiment":"TABLE1","n":[9]}"#).unwrap();
    for args in [
        vec!["sweep", "--config", bad.to_str().unwrap()],
        vec!["sweep", "--config", "/nonexistent/config.json"],
        vec!["le", "--family", "nonsense"],
        vec!["sle", "--family", "gghz", "--c0", "1.5"],
        vec!["fig", "2"],
        vec!["fig", "3", "--eta-grid", "1:0:0.1"],
        vec!["le", "--eta", "1.5"],
        vec!["gle", "--family", "ghz", "--n", "5", "--rounds", "3"],
    ] {
        let o = entloc(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn threads_environment_overrides_flag() {
    let o = Command::new(env!("CARGO_BIN_EXE_entloc"))
        .args(["--threads", "2", "le"])
        .env("ENTLOC_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_entloc"))
        .args(["--threads", "0", "le"])
        .env("ENTLOC_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn identical_seed_gives_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cf.json");
    fs::write(
        &cfg,
        r#"{"experiment":"CLASS_FRACTION","seed":99,"sample_size":12,"R_max":3}"#,
    )
    .unwrap();
    let run = |threads: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_entloc"))
            .args(["sweep", "--config", cfg.to_str().unwrap()])
            .env("ENTLOC_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0));
        strip_wall_time(&stdout(&o))
    };
    let a = run("1");
    assert_eq!(a, run("3"));
    assert!(a.lines().skip(1).all(|l| l.starts_with("1,99,")));
    // A different seed draws different states.
    let o = entloc(&["--seed", "100", "sweep", "--config", cfg.to_str().unwrap()]);
    assert!(stdout(&o).lines().skip(1).all(|l| l.starts_with("1,100,")));
}

#[test]
fn out_dir_json_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("res");
    let o = entloc(&[
        "--out",
        out.to_str().unwrap(),
        "--format",
        "json",
        "--svg",
        "fidelity",
        "--eta-grid",
        "0.5,0.9",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["fidelity_branches.json", "fidelity_summary.json", "fidelity_eta.json", "fidelity_eta.svg"] {
        assert!(out.join(name).exists(), "{name}");
    }
    let j: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("fidelity_summary.json")).unwrap()).unwrap();
    assert_eq!(j["schema_version"], 1);
    assert_eq!(j["columns"][0], "schema_version");
    assert_eq!(j["rows"].as_array().unwrap().len(), 3);
    let svg = fs::read_to_string(out.join("fidelity_eta.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 3);

    let o = entloc(&["--svg", "fidelity"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn weighted_fidelity_fraction() {
    let o = entloc(&["fidelity", "--weighted", "--eta-grid", "0.8"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let summary = out.split("# fidelity_summary\n").nth(1).unwrap();
    let summary = summary.split("\n# ").next().unwrap();
    let w = column(summary, "weighted");
    assert!(w.iter().all(|v| v == "true"));
    let above = column(summary, "above");
    assert_eq!(above, ["52", "116", "8"]);
}

#[test]
fn le_and_gle_subcommands() {
    let o = entloc(&["le", "--family", "gw", "--beta1", "1.5707963267948966", "--beta2", "1.5707963267948966", "--eta", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let v: f64 = column(&stdout(&o), "value")[0].parse().unwrap();
    assert!((v - 0.25).abs() < 1e-6, "{v}");

    let o = entloc(&["gle", "--family", "ghz", "--rounds", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let g: f64 = column(&out, "gle")[0].parse().unwrap();
    let s: f64 = column(&out, "sle")[0].parse().unwrap();
    assert!((g - s).abs() < 1e-6);

    let o = entloc(&["sle", "--family", "dicke", "--n", "4", "--n1", "1", "--pattern", "zxzx,zxzx", "--rounds", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}
