// SPDX-License-Identifier: Apache-2.0

use cutmap_demo::{explore_json, generate_aag, map_json, shuffle_json};

#[test]
fn shuffle_has_default_plus_trials() {
    let aag = generate_aag(3, 10, 90).unwrap();
    let v = shuffle_json(&aag, "unit", 5, 1).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 6);
    assert_eq!(rows[0]["is_default"], true);
    assert_eq!(v, shuffle_json(&aag, "unit", 5, 1).unwrap());
}

#[test]
fn map_reports_consistent_delay() {
    let aag = generate_aag(7, 8, 60).unwrap();
    let v = map_json(&aag, "lib").unwrap();
    assert_eq!(v["delay_ps"], v["predicted_delay_ps"]);
    let stages: f64 =
        v["path"].as_array().unwrap().iter().map(|e| e["delay_ps"].as_f64().unwrap() + e["absorbed_ps"].as_f64().unwrap()).sum();
    assert!((stages - v["delay_ps"].as_f64().unwrap()).abs() < 1e-9);
    assert!(v["verilog"].as_str().unwrap().contains("module"));
}

#[test]
fn explorer_lists_cuts_within_k() {
    let aag = generate_aag(1, 6, 30).unwrap();
    let v = explore_json(&aag, 3, 5).unwrap();
    let nodes = v["nodes"].as_array().unwrap();
    assert_eq!(nodes.len(), 1 + 6 + 30);
    for n in nodes.iter().filter(|n| n["kind"] == "and") {
        let cuts = n["cuts"].as_array().unwrap();
        assert!(!cuts.is_empty() && cuts.len() <= 5);
        assert!(cuts.iter().all(|c| c["leaves"].as_array().unwrap().len() <= 3));
    }
}

#[test]
fn bad_input_is_an_error() {
    assert!(map_json("not aiger", "lib").is_err());
    assert!(map_json(&generate_aag(0, 4, 8).unwrap(), "learned").is_err());
    assert!(explore_json(&generate_aag(0, 4, 8).unwrap(), 9, 8).is_err());
    assert!(generate_aag(0, 0, 8).is_err());
}
