// SPDX-License-Identifier: Apache-2.0

//! WebAssembly bindings behind `www/index.html`. Every export takes AIGER
//! text and returns a JSON string; errors surface as JS exceptions.

use cutmap::aig::generate_random_aig;
use cutmap::aiger::{parse_aiger, write_aiger, AigerFormat};
use cutmap::cuts::{enumerate_cuts, CutParams};
use cutmap::library::{Library, BUNDLED_GENLIB, K_MAX};
use cutmap::mapper::{CostModel, Mapper};
use cutmap::timing::{compute_arrivals, critical_path, total_area};
use cutmap::verilog::write_verilog;
use cutmap::{Aig, NodeKind};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

type Result<T> = std::result::Result<T, String>;

fn parse(aag: &str) -> Result<Aig> {
    parse_aiger(aag.as_bytes()).map_err(|e| e.to_string())
}

fn cost(name: &str) -> Result<CostModel<'static>> {
    match name {
        "unit" => Ok(CostModel::Unit),
        "lib" => Ok(CostModel::LibraryPin),
        other => Err(format!("unknown cost `{other}` (expected unit or lib)")),
    }
}

fn cut_params(k: usize, c_limit: usize) -> Result<CutParams> {
    if !(2..=K_MAX).contains(&k) || c_limit == 0 {
        return Err(format!("need 2 <= k <= {K_MAX} and c_limit > 0"));
    }
    Ok(CutParams { k, c_limit })
}

pub fn generate_aag(seed: u32, inputs: usize, ands: usize) -> Result<String> {
    if inputs == 0 {
        return Err("a circuit needs at least one input".into());
    }
    let g = generate_random_aig(seed.into(), inputs, ands).with_name(format!("g{seed}"));
    String::from_utf8(write_aiger(&g, AigerFormat::Ascii)).map_err(|e| e.to_string())
}

pub fn shuffle_json(aag: &str, cost_name: &str, trials: usize, seed: u32) -> Result<Value> {
    let g = parse(aag)?;
    let lib = Library::bundled();
    let rows =
        Mapper::new(&lib, CutParams::default()).shuffle_map(&g, cost(cost_name)?, trials + 1, seed.into()).map_err(|e| e.to_string())?;
    Ok(json!(rows))
}

pub fn map_json(aag: &str, cost_name: &str) -> Result<Value> {
    let g = parse(aag)?;
    let lib = Library::bundled();
    let m = Mapper::new(&lib, CutParams::default()).map(&g, cost(cost_name)?, None).map_err(|e| e.to_string())?;
    let n = &m.netlist;
    let arrivals = compute_arrivals(n, &lib).map_err(|e| e.to_string())?;
    let path = critical_path(n, &lib, &arrivals);
    Ok(json!({
        "area": total_area(n, &lib),
        "delay_ps": arrivals.max_output(n),
        "predicted_delay_ps": m.cover.predicted_delay(),
        "cells": n.cell_count(),
        "inverters": n.inverter_count(&lib),
        "path": path.elements.iter().map(|e| json!({
            "instance": e.instance_name,
            "cell": e.cell_name,
            "pin": e.pin,
            "delay_ps": e.cell_delay,
            "absorbed_ps": e.absorbed_inverter_delay,
        })).collect::<Vec<_>>(),
        "verilog": write_verilog(n, &lib),
    }))
}

/// Nodes with their levels and fanins, plus the priority cuts of every AND.
pub fn explore_json(aag: &str, k: usize, c_limit: usize) -> Result<Value> {
    let g = parse(aag)?;
    let sets = enumerate_cuts(&g, cut_params(k, c_limit)?);
    let levels = g.levels();
    let nodes: Vec<Value> = g
        .node_ids()
        .map(|id| {
            let kind = match g.kind(id) {
                NodeKind::Const0 => "const",
                NodeKind::Input => "input",
                NodeKind::And => "and",
            };
            let fanins: Vec<Value> =
                if g.is_and(id) { g.fanins(id).iter().map(|e| json!([e.node, e.complemented])).collect() } else { Vec::new() };
            let cuts: Vec<Value> =
                sets.get(id).iter().filter(|c| !c.is_trivial()).map(|c| json!({ "leaves": c.leaves, "table": c.table.to_hex() })).collect();
            json!({ "id": id, "kind": kind, "level": levels[id as usize], "fanins": fanins, "cuts": cuts })
        })
        .collect();
    let outputs: Vec<Value> = g.outputs().iter().map(|e| json!([e.node, e.complemented])).collect();
    Ok(json!({ "nodes": nodes, "outputs": outputs }))
}

fn js(r: Result<Value>) -> std::result::Result<String, JsError> {
    r.map(|v| v.to_string()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn generate(seed: u32, inputs: usize, ands: usize) -> std::result::Result<String, JsError> {
    generate_aag(seed, inputs, ands).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn shuffle_scatter(aag: &str, cost: &str, trials: usize, seed: u32) -> std::result::Result<String, JsError> {
    js(shuffle_json(aag, cost, trials, seed))
}

#[wasm_bindgen]
pub fn map_circuit(aag: &str, cost: &str) -> std::result::Result<String, JsError> {
    js(map_json(aag, cost))
}

#[wasm_bindgen]
pub fn explore_cuts(aag: &str, k: usize, c_limit: usize) -> std::result::Result<String, JsError> {
    js(explore_json(aag, k, c_limit))
}

#[wasm_bindgen]
pub fn library_genlib() -> String {
    BUNDLED_GENLIB.to_string()
}
