// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use cutmap::aig::generate_random_aig;
use cutmap::aiger::{write_aiger, AigerFormat};
use cutmap::cuts::{enumerate_cuts, CutParams};
use cutmap::library::Library;
use cutmap::mapper::{CostModel, Mapper, Mapping};
use cutmap::neural::{load_params, GpaPredictor};
use cutmap::timing::{compute_arrivals, critical_path, netlist_delay, total_area};
use cutmap::verilog::write_verilog;
use serde_json::json;

use crate::cli::{CostArg, CutArgs, CutsArgs, Format, GenArgs, MapArgs, ShuffleArgs};
use crate::{comment_header, emit, json_report, load_aig, load_library, CliError, Command, Result};

pub(crate) fn cut_params(a: &CutArgs) -> Result<CutParams> {
    if a.k < 2 || a.k > cutmap::library::K_MAX {
        return Err(CliError::Usage(format!("--k must be in 2..={}, got {}", cutmap::library::K_MAX, a.k)));
    }
    if a.c_limit == 0 {
        return Err(CliError::Usage("--c-limit must be positive".into()));
    }
    Ok(CutParams { k: a.k, c_limit: a.c_limit })
}

/// Loads the model a learned cost needs; `None` for the other costs.
pub(crate) fn predictor(cost: CostArg, model: Option<&Path>, lib: &Library) -> Result<Option<GpaPredictor>> {
    match (cost, model) {
        (CostArg::Learned, None) => Err(CliError::Usage("--cost learned requires --model".into())),
        (CostArg::Learned, Some(p)) => Ok(Some(load_predictor(p, lib)?)),
        _ => Ok(None),
    }
}

pub(crate) fn load_predictor(path: &Path, lib: &Library) -> Result<GpaPredictor> {
    let params = load_params(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    Ok(GpaPredictor::new(params, lib))
}

pub(crate) fn cost_model(cost: CostArg, pred: Option<&GpaPredictor>) -> CostModel<'_> {
    match (cost, pred) {
        (CostArg::Unit, _) => CostModel::Unit,
        (CostArg::Lib, _) => CostModel::LibraryPin,
        (CostArg::Learned, Some(p)) => CostModel::Learned(p),
        (CostArg::Learned, None) => unreachable!("learned cost without a model"),
    }
}

pub fn gen(a: &GenArgs) -> Result<()> {
    if a.inputs == 0 {
        return Err(CliError::Usage("--inputs must be positive".into()));
    }
    let (format, ext) = if a.binary { (AigerFormat::Binary, "aig") } else { (AigerFormat::Ascii, "aag") };
    let single = a.count == 1 && a.out.extension().is_some();
    if !single {
        fs::create_dir_all(&a.out).map_err(|e| CliError::Failure(format!("cannot create {}: {e}", a.out.display())))?;
    }
    for i in 0..a.count as u64 {
        let seed = a.seed + i;
        let g = generate_random_aig(seed, a.inputs, a.ands);
        let path = if single { a.out.clone() } else { a.out.join(format!("g{seed:04}.{ext}")) };
        fs::write(&path, write_aiger(&g, format)).map_err(|e| CliError::Failure(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

struct Mapped {
    lib: Library,
    mapping: Mapping,
    delay: f64,
    area: f64,
}

fn map_circuit(a: &MapArgs) -> Result<Mapped> {
    let lib = load_library(a.lib.as_deref())?;
    let params = cut_params(&a.cuts)?;
    let pred = predictor(a.cost, a.model.as_deref(), &lib)?;
    let g = load_aig(&a.aig)?;
    let mapping = Mapper::new(&lib, params).map(&g, cost_model(a.cost, pred.as_ref()), a.seed)?;
    let delay = netlist_delay(&mapping.netlist, &lib).map_err(|e| CliError::Failure(e.to_string()))?;
    let area = total_area(&mapping.netlist, &lib);
    Ok(Mapped { lib, mapping, delay, area })
}

pub fn map(cmd: &Command, a: &MapArgs) -> Result<()> {
    let m = map_circuit(a)?;
    let n = &m.mapping.netlist;
    let result = json!({
        "circuit": n.name,
        "cost": a.cost,
        "area": m.area,
        "sta_delay_ps": m.delay,
        "predicted_delay_ps": m.mapping.cover.predicted_delay(),
        "cell_count": n.cell_count(),
        "inverter_count": n.inverter_count(&m.lib),
    });
    let verilog = format!("// cutmap {} {}\n{}", crate::VERSION, json!(cmd), write_verilog(n, &m.lib));
    emit(a.out.as_deref(), &verilog)?;
    let report = json_report(cmd, result);
    match (&a.report, &a.out) {
        (Some(p), _) => emit(Some(p), &report),
        (None, Some(out)) => emit(Some(&out.with_extension("json")), &report),
        (None, None) => emit(None, &report),
    }
}

pub fn time(cmd: &Command, a: &MapArgs) -> Result<()> {
    let m = map_circuit(a)?;
    let n = &m.mapping.netlist;
    let arrivals = compute_arrivals(n, &m.lib).map_err(|e| CliError::Failure(e.to_string()))?;
    let path = critical_path(n, &m.lib, &arrivals);
    let text = match a.format {
        Format::Json => {
            let elements: Vec<_> = path
                .elements
                .iter()
                .map(|e| {
                    json!({
                        "instance": e.instance_name,
                        "cell": e.cell_name,
                        "pin": e.pin,
                        "cell_delay_ps": e.cell_delay,
                        "absorbed_inverter_delay_ps": e.absorbed_inverter_delay,
                    })
                })
                .collect();
            json_report(cmd, json!({ "total_delay_ps": path.total_delay, "output": path.output, "elements": elements }))
        }
        Format::Text | Format::Csv => format!("{}{}", comment_header(cmd), path.report()),
    };
    emit(a.out.as_deref(), &text)
}

pub fn cuts(a: &CutsArgs) -> Result<()> {
    let g = load_aig(&a.aig)?;
    let params = cut_params(&a.cuts)?;
    let sets = enumerate_cuts(&g, params);
    let text = match a.node {
        None => sets.dump(),
        Some(id) if (id as usize) < g.num_nodes() => {
            let mut s = String::new();
            for c in sets.get(id) {
                let leaves: Vec<String> = c.leaves.iter().map(u32::to_string).collect();
                let _ = writeln!(s, "{id} {} : {}", leaves.join(" "), c.table.to_hex());
            }
            s
        }
        Some(id) => return Err(CliError::Usage(format!("node {id} out of range (circuit has {} nodes)", g.num_nodes()))),
    };
    emit(a.out.as_deref(), &text)
}

pub fn shuffle(cmd: &Command, a: &ShuffleArgs) -> Result<()> {
    let lib = load_library(a.lib.as_deref())?;
    let params = cut_params(&a.cuts)?;
    let pred = predictor(a.cost, a.model.as_deref(), &lib)?;
    let g = load_aig(&a.aig)?;
    let trials = Mapper::new(&lib, params).shuffle_map(&g, cost_model(a.cost, pred.as_ref()), a.trials + 1, a.seed)?;
    let mut csv = comment_header(cmd);
    csv.push_str("trial,area,delay_ps,is_default\n");
    for t in trials {
        let _ = writeln!(csv, "{},{},{},{}", t.trial, t.area, t.delay, t.is_default);
    }
    emit(a.out.as_deref(), &csv)
}
