use std::process::{Command, Output};

use serde_json::Value;

fn sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ahsp-sim"))
        .args(args)
        .env_remove("AHSP_SIM_MAX_AMPLITUDES")
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn without_timing(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("timing");
    v
}

#[test]
fn exact_both_on_z4() {
    let v = json(&sim(&["--moduli", "4", "--generators", "2", "--mode", "exact", "--algorithm", "both"]));
    for r in v["results"].as_array().unwrap() {
        let rows: Vec<(Value, f64)> = r["outcomes"]
            .as_array()
            .unwrap()
            .iter()
            .map(|o| (o["outcome"].clone(), o["exact"].as_f64().unwrap()))
            .collect();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].0, serde_json::json!([0]));
        assert_eq!(rows[1].0, serde_json::json!([2]));
        assert!(rows.iter().all(|(_, p)| (p - 0.5).abs() < 1e-12));
    }
    let cmp = &v["comparison"];
    assert_eq!(cmp["distributions_match"], true);
    assert_eq!(cmp["oracle_calls_per_run"], serde_json::json!([1.0, 2.0]));
    let std_fid = cmp["restoration"][0]["min"].as_f64().unwrap();
    assert!((std_fid - 0.5f64.sqrt()).abs() < 1e-12);
    assert!((cmp["restoration"][1]["min"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn recover_with_random_mixed_aux() {
    let v = json(&sim(&[
        "--moduli", "2,4", "--generators", "1,2", "--algorithm", "init-free", "--aux", "random-mixed",
        "--mode", "recover", "--trials", "20", "--seed", "42",
    ]));
    let rec = &v["results"][0]["recovery"];
    assert_eq!(rec["recovered_generators"], serde_json::json!([1, 2]));
    assert_eq!(rec["success"], true);
}

#[test]
fn replay_is_byte_identical_modulo_timing() {
    let args = [
        "--moduli", "2,6", "--generators", "1,3", "--algorithm", "both", "--aux", "random-pure", "--mode",
        "shots", "--shots", "500", "--seed", "7", "--relabel-f", "--threads", "2",
    ];
    let a = without_timing(json(&sim(&args)));
    let b = without_timing(json(&sim(&args)));
    assert_eq!(a, b);
}

#[test]
fn zero_shots_keep_exact_rows() {
    let v = json(&sim(&["--moduli", "6", "--generators", "2", "--mode", "shots", "--shots", "0"]));
    for r in v["results"].as_array().unwrap() {
        assert!(r["empirical_total"].is_null());
        for o in r["outcomes"].as_array().unwrap() {
            assert!(o["exact"].is_f64());
            assert!(o["empirical"].is_null());
        }
    }
}

#[test]
fn output_file_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let out = sim(&[
        "--moduli", "4", "--generators", "2", "--mode", "exact", "--format", "csv", "--output",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("algorithm,outcome,exact,empirical,count\n"));
    assert!(text.contains("init-free,[2],0.5"));
    let leftovers = std::fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(leftovers, 1);
}

#[test]
fn config_file_round_trip_and_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"moduli":[2,4],"generators":[0,2],"algorithm":"standard","mode":"exact","seed":3}"#,
    )
    .unwrap();
    let v = json(&sim(&["--config", cfg.to_str().unwrap(), "--algorithm", "init-free"]));
    assert_eq!(v["config"]["algorithm"], "init-free");
    assert_eq!(v["config"]["seed"], 3);
    assert_eq!(v["instance"]["generators"], serde_json::json!([2, 2]));
}

#[test]
fn compare_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let s = dir.path().join("s.json");
    let i = dir.path().join("i.json");
    for (alg, p) in [("standard", &s), ("init-free", &i)] {
        let out = sim(&[
            "--moduli", "4", "--generators", "2", "--mode", "exact", "--algorithm", alg, "--output",
            p.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    let v = json(&sim(&["compare", s.to_str().unwrap(), i.to_str().unwrap()]));
    assert_eq!(v["distributions_match"], true);

    let other = dir.path().join("o.json");
    sim(&["--moduli", "4", "--generators", "1", "--mode", "exact", "--algorithm", "init-free", "--output",
        other.to_str().unwrap()]);
    let out = sim(&["compare", s.to_str().unwrap(), other.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn normalization_warns() {
    let out = sim(&["--moduli", "4", "--generators", "3", "--mode", "exact"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
}

#[test]
fn exit_codes() {
    assert_eq!(sim(&["--moduli", "0", "--generators", "1"]).status.code(), Some(1));
    assert_eq!(sim(&["--moduli", "4"]).status.code(), Some(1));
    assert_eq!(sim(&["--moduli", "4", "--generators", "1", "--mode", "nope"]).status.code(), Some(1));
    assert_eq!(sim(&["--bogus"]).status.code(), Some(1));
    assert_eq!(sim(&["--moduli", "4096,4096", "--generators", "1,1"]).status.code(), Some(2));
    let capped = Command::new(env!("CARGO_BIN_EXE_ahsp-sim"))
        .args(["--moduli", "4", "--generators", "2"])
        .env("AHSP_SIM_MAX_AMPLITUDES", "4")
        .output()
        .unwrap();
    assert_eq!(capped.status.code(), Some(2));
    assert_eq!(
        sim(&["--moduli", "4", "--generators", "2", "--output", "/nonexistent/dir/r.json"]).status.code(),
        Some(1)
    );
}

#[test]
fn oracle_calls_constant_across_cyclic_sweep() {
    for n in 2..=8 {
        let m = (1u64 << n).to_string();
        let v = json(&sim(&["--moduli", &m, "--generators", "2", "--mode", "exact"]));
        assert_eq!(v["comparison"]["oracle_calls_per_run"], serde_json::json!([1.0, 2.0]));
    }
}
