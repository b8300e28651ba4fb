// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cutmap::dataset::{split_of, Split};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn cutmap(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cutmap")).current_dir(dir).args(args).output().expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = cutmap(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn report(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn and2_on_two_cell_library_is_thirty_ps() {
    let dir = tempfile::tempdir().unwrap();
    let (aig, lib) = (fixture("and2.aag"), fixture("two_cell.genlib"));
    ok(dir.path(), &["map", "--aig", aig.to_str().unwrap(), "--lib", lib.to_str().unwrap(), "--cost", "lib", "-o", "and2.v"]);
    let r = report(&dir.path().join("and2.json"));
    assert_eq!(r["tool"], "cutmap");
    assert_eq!(r["config"]["command"], "map");
    let res = &r["result"];
    assert_eq!(res["sta_delay_ps"], 30.0);
    assert_eq!(res["area"], 3.0);
    assert_eq!(res["cell_count"], 2);
    assert_eq!(res["inverter_count"], 1);
    let v = fs::read_to_string(dir.path().join("and2.v")).unwrap();
    assert!(v.contains("nand2") && v.contains("inv1"));
}

#[test]
fn map_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["gen", "--seed", "5", "--inputs", "8", "--ands", "80", "-o", "c.aag"]);
    let run = || {
        ok(dir.path(), &["map", "--aig", "c.aag", "--cost", "lib", "-o", "c.v"]);
        (fs::read(dir.path().join("c.v")).unwrap(), fs::read(dir.path().join("c.json")).unwrap())
    };
    assert_eq!(run(), run());
    let time = ok(dir.path(), &["time", "--aig", "c.aag"]);
    assert!(time.lines().last().unwrap().starts_with("TOTAL"));
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let aig = fixture("and2.aag");
    let out = cutmap(dir.path(), &["map", "--aig", aig.to_str().unwrap(), "--cost", "learned"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--model"));
    assert_eq!(code(&cutmap(dir.path(), &["map", "--aig", "missing.aag"])), 2);
    assert_eq!(code(&cutmap(dir.path(), &["map", "--bogus"])), 2);
    fs::create_dir(dir.path().join("empty")).unwrap();
    let out = cutmap(dir.path(), &["eval", "--map", "--circuits", "empty"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("no .aag"));
}

#[test]
fn constant_output_is_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    let aig = fixture("const_out.aag");
    let out = cutmap(dir.path(), &["map", "--aig", aig.to_str().unwrap()]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn single_class_dataset_is_degenerate() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir(dir.path().join("c")).unwrap();
    fs::copy(fixture("and2.aag"), dir.path().join("c/and2.aag")).unwrap();
    let out = cutmap(dir.path(), &["extract-labels", "--circuits", "c", "-o", "d.jsonl"]);
    assert_eq!(code(&out), 4);
    assert!(String::from_utf8_lossy(&out.stderr).contains("distinct class"));
}

fn shuffle_rows(csv: &str) -> Vec<&str> {
    csv.lines().filter(|l| !l.starts_with('#')).skip(1).collect()
}

#[test]
fn shuffle_rows_and_reproducibility() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["gen", "--seed", "3", "--inputs", "10", "--ands", "100", "-o", "c.aag"]);
    let zero = ok(dir.path(), &["shuffle", "--aig", "c.aag", "--trials", "0"]);
    assert_eq!(shuffle_rows(&zero).len(), 1);
    assert!(shuffle_rows(&zero)[0].ends_with(",true"));
    let a = ok(dir.path(), &["shuffle", "--aig", "c.aag", "--trials", "4", "--seed", "9"]);
    assert_eq!(shuffle_rows(&a).len(), 5);
    assert_eq!(a, ok(dir.path(), &["shuffle", "--aig", "c.aag", "--trials", "4", "--seed", "9"]));
    assert!(a.contains("trial,area,delay_ps,is_default"));
}

#[test]
fn lib_cost_is_no_slower_than_unit_cost() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["gen", "--count", "12", "--inputs", "10", "--ands", "90", "-o", "c"]);
    let out = ok(dir.path(), &["eval", "--map", "--circuits", "c", "--split", "all", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let costs = &v["result"]["mapping"]["costs"];
    let lib = costs["lib"]["geomean_delay_ps"].as_f64().unwrap();
    let unit = costs["unit"]["geomean_delay_ps"].as_f64().unwrap();
    assert!(lib <= unit, "lib {lib} unit {unit}");
}

#[test]
fn eval_on_memorized_records_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen", "--count", "6", "--inputs", "12", "--ands", "120", "-o", "c"]);
    ok(d, &["extract-labels", "--circuits", "c", "-o", "all.jsonl"]);
    // 32 records from circuits that hash into the training split
    let text = fs::read_to_string(d.join("all.jsonl")).unwrap();
    let picked: Vec<&str> = text
        .lines()
        .filter(|l| {
            let v: serde_json::Value = serde_json::from_str(l).unwrap();
            split_of(v["circuit_id"].as_str().unwrap()) == Split::Train
        })
        .take(32)
        .collect();
    assert_eq!(picked.len(), 32);
    fs::write(d.join("d32.jsonl"), picked.join("\n") + "\n").unwrap();
    fs::write(d.join("cfg.json"), r#"{"learning_rate": 0.01, "finetune_epochs": 300}"#).unwrap();
    ok(d, &["finetune", "--dataset", "d32.jsonl", "--circuits", "c", "--config", "cfg.json", "-o", "m.params"]);
    let metrics = fs::read_to_string(d.join("m.csv")).unwrap();
    assert!(metrics.contains("epoch,L_s,L_f,L_p,L_d,val_accuracy"));
    let out = ok(d, &["eval", "--dataset", "d32.jsonl", "--circuits", "c", "--params", "m.params", "--split", "all", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["result"]["classification"]["accuracy"], 1.0);
    assert_eq!(v["result"]["classification"]["records"], 32);
}
