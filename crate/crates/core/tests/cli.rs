use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn age(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_age"))
        .args(args)
        .env_remove("AGE_DATA_DIR")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn fixtures() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .display()
        .to_string()
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(age(&[]).status.code(), Some(2));
    assert_eq!(age(&["cluster", "--dataset", "sbm", "--bogus"]).status.code(), Some(2));
    assert_eq!(
        age(&["cluster", "--dataset", "sbm", "--k", "soon"]).status.code(),
        Some(2)
    );
    assert_eq!(
        age(&["cluster", "--dataset", "sbm", "--config", "/no/such/config.json"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(age(&["embed", "--dataset", "sbm"]).status.code(), Some(2));
    let help = age(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&help.stdout).contains("linkpred"));
}

#[test]
fn embed_on_missing_data_leaves_nothing_behind() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = age(&["embed", "--dataset", "/no/such/dataset", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
    assert_eq!(std::fs::read_dir(tmp.path()).unwrap().count(), 0);
}

#[test]
fn cluster_recovers_the_planted_partition_reproducibly() {
    let a = age(&["cluster", "--dataset", "sbm", "--seed", "1"]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    let v = json(&a);
    assert_eq!(v["dataset"], "sbm");
    assert_eq!(v["variant"], "age");
    assert_eq!(v["seed"], 1);
    assert!(v["ari"].as_f64().unwrap() >= 0.95);
    for key in ["acc", "nmi", "dbi", "epoch"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    let b = age(&["cluster", "--dataset", "sbm", "--seed", "1"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn ablate_lists_the_five_rungs_in_order() {
    let o = age(&["ablate", "--dataset", "sbm", "--pretty"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let names: Vec<&str> = text
        .lines()
        .skip(1)
        .map(|l| l.split_whitespace().next().unwrap())
        .collect();
    assert_eq!(names, ["raw", "+filter", "+encoder", "+adaptive", "full"]);

    let o = age(&["ablate", "--dataset", "sbm", "--with-variants"]);
    let v = json(&o);
    assert_eq!(v["rows"].as_array().unwrap().len(), 5);
    let extra: Vec<&str> = v["variants"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["variant"].as_str().unwrap())
        .collect();
    assert_eq!(extra, ["ls_ra", "ls_rx"]);
}

#[test]
fn linkpred_reports_test_ranking_scores() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("metrics.json");
    let o = age(&["linkpred", "--dataset", "sbm", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    for key in ["auc", "ap", "val_auc"] {
        let x = v[key].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&x));
    }
    let written: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(written, v);
}

#[test]
fn embed_writes_snapshots_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("emb");
    let o = age(&["embed", "--dataset", "sbm", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest: Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let snaps = manifest["snapshots"].as_array().unwrap();
    assert_eq!(snaps.len(), json(&o)["snapshots"].as_u64().unwrap() as usize);
    assert!(out.join("snapshot_0010.tsv").is_file());
}

#[test]
fn spectrum_uses_the_data_dir_fallback() {
    let o = Command::new(env!("CARGO_BIN_EXE_age"))
        .args(["spectrum", "--dataset", "toy", "--bins", "4"])
        .env("AGE_DATA_DIR", fixtures())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    // Triangle plus an isolated node: spectrum {0, 0, 1, 1}.
    assert!((v["lambda_max"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    let total: u64 = v["bins"]
        .as_array()
        .unwrap()
        .iter()
        .map(|b| b[2].as_u64().unwrap())
        .sum();
    assert_eq!(total, 4);
}
