// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write as _;
use std::path::Path;

use cutmap::dataset::{extract_labels, histogram, load_dataset, majority_class, save_dataset, split_of, CutDataset, CutLabel, Split};
use cutmap::mapper::Mapper;
use cutmap::neural::{self, load_params, save_params, ModelConfig, ModelParams, TrainMetrics};
use cutmap::timing::{netlist_delay, total_area, DelayBinning};
use cutmap::Aig;
use rayon::prelude::*;
use serde_json::json;

use crate::cli::{CostArg, EvalArgs, ExtractArgs, FinetuneArgs, Format, PretrainArgs, SplitArg, TrainOverrides};
use crate::mapping::{cost_model, cut_params, load_predictor};
use crate::{comment_header, emit, json_report, load_circuit_dir, load_library, read_text, CliError, Command, Result};

fn binning(k: usize, bin_width: f64) -> Result<DelayBinning> {
    DelayBinning::new(k, bin_width).map_err(|e| CliError::Usage(e.to_string()))
}

pub fn extract(a: &ExtractArgs) -> Result<()> {
    let lib = load_library(a.lib.as_deref())?;
    let bins = binning(a.bins.k, a.bins.bin_width)?;
    let circuits = load_circuit_dir(&a.circuits)?;
    let data = extract_labels(&circuits, &lib, &bins).map_err(|e| CliError::Failure(e.to_string()))?;
    save_dataset(&data, &a.out).map_err(|e| CliError::Failure(format!("{}: {e}", a.out.display())))?;
    let hist = data.class_histogram(bins.k);
    eprintln!("{} records from {} circuits, class histogram {hist:?}", data.len(), circuits.len());
    if data.distinct_classes() < 2 {
        return Err(CliError::Degenerate(format!(
            "the dataset has {} distinct class(es) (histogram {hist:?}); a classifier cannot learn from it",
            data.distinct_classes()
        )));
    }
    Ok(())
}

fn model_config(t: &TrainOverrides, base: Option<ModelConfig>) -> Result<ModelConfig> {
    let mut cfg = match (&t.config, base) {
        (Some(p), base) => {
            let file: ModelConfig = serde_json::from_str(&read_text(p)?).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
            if let Some(b) = base.filter(|b| !b.same_architecture(&file)) {
                return Err(CliError::Usage(format!(
                    "{} describes a different architecture than the starting parameters (d {} vs {})",
                    p.display(),
                    file.d,
                    b.d
                )));
            }
            file
        }
        (None, Some(b)) => b,
        (None, None) => ModelConfig::default(),
    };
    if let Some(s) = t.seed {
        cfg.seed = s;
    }
    if let Some(lr) = t.learning_rate {
        cfg.learning_rate = lr;
    }
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(cfg)
}

fn write_metrics(cmd: &Command, m: &TrainMetrics, out: &Path, explicit: Option<&Path>) -> Result<()> {
    let path = explicit.map(Path::to_path_buf).unwrap_or_else(|| out.with_extension("csv"));
    emit(Some(&path), &format!("{}{}", comment_header(cmd), m.to_csv()))
}

fn save(p: &ModelParams, out: &Path) -> Result<()> {
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Failure(format!("cannot create {}: {e}", dir.display())))?;
    }
    save_params(p, out).map_err(|e| CliError::Failure(format!("{}: {e}", out.display())))
}

pub fn pretrain(cmd: &Command, a: &PretrainArgs) -> Result<()> {
    let mut cfg = model_config(&a.train, None)?;
    if let Some(e) = a.train.epochs {
        cfg.pretrain_stage1_epochs = e;
        cfg.pretrain_stage2_epochs = e;
    }
    let circuits = load_circuit_dir(&a.circuits)?;
    let (params, metrics) = neural::pretrain(&circuits, &cfg)?;
    save(&params, &a.out)?;
    write_metrics(cmd, &metrics, &a.out, a.metrics.as_deref())
}

fn split_records(data: &CutDataset, which: SplitArg) -> Vec<&CutLabel> {
    match which {
        SplitArg::All => data.records.iter().collect(),
        SplitArg::Train => data.split(Split::Train),
        SplitArg::Val => data.split(Split::Val),
        SplitArg::Test => data.split(Split::Test),
    }
}

pub fn finetune(cmd: &Command, a: &FinetuneArgs) -> Result<()> {
    let lib = load_library(a.lib.as_deref())?;
    let start = a.params.as_deref().map(|p| load_params(p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))).transpose()?;
    let mut cfg = model_config(&a.train, start.as_ref().map(|p| p.config.clone()))?;
    if let Some(e) = a.train.epochs {
        cfg.finetune_epochs = e;
    }
    let bins = binning(cfg.k, cfg.bin_width)?;
    let data = load_dataset(&a.dataset, &bins).map_err(|e| CliError::Usage(format!("{}: {e}", a.dataset.display())))?;
    let train = data.split(Split::Train);
    let distinct = histogram(train.iter().copied(), cfg.k).iter().filter(|&&c| c > 0).count();
    if distinct < 2 {
        return Err(CliError::Degenerate(format!(
            "the training split has {} records in {distinct} class(es); at least two classes are needed",
            train.len()
        )));
    }
    let circuits = load_circuit_dir(&a.circuits)?;
    let mut params = match start {
        Some(mut p) => {
            p.config = cfg;
            p
        }
        None => ModelParams::init(&cfg)?,
    };
    let val = data.split(Split::Val);
    let metrics = neural::finetune_split(&mut params, &train, &val, &circuits, &lib)?;
    save(&params, &a.out)?;
    write_metrics(cmd, &metrics, &a.out, a.metrics.as_deref())
}

pub fn eval(cmd: &Command, a: &EvalArgs) -> Result<()> {
    if a.dataset.is_none() && !a.map {
        return Err(CliError::Usage("eval needs --dataset, --map, or both".into()));
    }
    let lib = load_library(a.lib.as_deref())?;
    let circuits = load_circuit_dir(&a.circuits)?;
    let mut text = String::new();
    let mut result = json!({});
    if let Some(path) = &a.dataset {
        let Some(pp) = &a.params else {
            return Err(CliError::Usage("eval --dataset requires --params".into()));
        };
        let params = load_params(pp).map_err(|e| CliError::Usage(format!("{}: {e}", pp.display())))?;
        let bins = binning(params.config.k, params.config.bin_width)?;
        let data = load_dataset(path, &bins).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let records = split_records(&data, a.split);
        if records.is_empty() {
            return Err(CliError::Degenerate(format!("the {:?} split of {} is empty", a.split, path.display())));
        }
        let e = neural::evaluate(&params, &records, &circuits, &lib)?;
        let majority = majority_class(&histogram(data.split(Split::Train), bins.k));
        let baseline = records.iter().filter(|r| r.class == majority).count() as f64 / records.len() as f64;
        text.push_str(&e.report());
        let _ = writeln!(text, "majority class {majority} accuracy {baseline:.4}");
        result["classification"] = json!({
            "split": a.split,
            "records": e.count,
            "accuracy": e.accuracy,
            "loss": e.loss,
            "confusion": e.confusion,
            "majority_class": majority,
            "majority_accuracy": baseline,
        });
    }
    if a.map {
        let (table, summary) = compare_costs(a, &circuits, &lib)?;
        text.push_str(&table);
        result["mapping"] = summary;
    }
    let out = match a.format {
        Format::Json => json_report(cmd, result),
        Format::Text | Format::Csv => format!("{}{text}", comment_header(cmd)),
    };
    emit(a.out.as_deref(), &out)
}

/// Maps every circuit of the split under each cost model; returns a text
/// table (per-circuit rows and a GEOMEAN row) and its JSON form.
fn compare_costs(a: &EvalArgs, circuits: &[Aig], lib: &cutmap::library::Library) -> Result<(String, serde_json::Value)> {
    let costs: Vec<CostArg> = match &a.costs {
        Some(c) => c.clone(),
        None if a.params.is_some() => vec![CostArg::Unit, CostArg::Lib, CostArg::Learned],
        None => vec![CostArg::Unit, CostArg::Lib],
    };
    let pred = if costs.contains(&CostArg::Learned) {
        let Some(p) = &a.params else {
            return Err(CliError::Usage("the learned cost requires --params".into()));
        };
        Some(load_predictor(p, lib)?)
    } else {
        None
    };
    let selected: Vec<&Aig> = circuits
        .iter()
        .filter(|g| match a.split {
            SplitArg::All => true,
            SplitArg::Train => split_of(g.name()) == Split::Train,
            SplitArg::Val => split_of(g.name()) == Split::Val,
            SplitArg::Test => split_of(g.name()) == Split::Test,
        })
        .collect();
    if selected.is_empty() {
        return Err(CliError::Usage(format!("no circuits in the {:?} split", a.split)));
    }
    let mapper = Mapper::new(lib, cut_params(&a.cuts)?);
    let rows: Vec<Vec<(f64, f64)>> = selected
        .par_iter()
        .map(|g| {
            costs
                .iter()
                .map(|&c| {
                    let m = mapper.map(g, cost_model(c, pred.as_ref()), None)?;
                    let d = netlist_delay(&m.netlist, lib).map_err(|e| CliError::Failure(e.to_string()))?;
                    Ok((total_area(&m.netlist, lib), d))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let names: Vec<&str> = costs.iter().map(|c| cost_name(*c)).collect();
    let mut text = String::from("circuit");
    for n in &names {
        let _ = write!(text, ",{n}_area,{n}_delay_ps");
    }
    text.push('\n');
    for (g, row) in selected.iter().zip(&rows) {
        text.push_str(g.name());
        for (area, delay) in row {
            let _ = write!(text, ",{area},{delay}");
        }
        text.push('\n');
    }
    let mut summary = serde_json::Map::new();
    text.push_str("GEOMEAN");
    for (i, n) in names.iter().enumerate() {
        let area = geomean(rows.iter().map(|r| r[i].0));
        let delay = geomean(rows.iter().map(|r| r[i].1));
        let _ = write!(text, ",{area:.3},{delay:.3}");
        summary.insert((*n).to_string(), json!({ "geomean_area": area, "geomean_delay_ps": delay }));
    }
    text.push('\n');
    let summary = json!({ "split": a.split, "circuits": selected.len(), "costs": summary });
    Ok((text, summary))
}

fn cost_name(c: CostArg) -> &'static str {
    match c {
        CostArg::Unit => "unit",
        CostArg::Lib => "lib",
        CostArg::Learned => "learned",
    }
}

/// Geometric mean of positive values; zero delays (wire-only circuits) count as 1.
fn geomean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v.max(1.0).ln(), n + 1));
    if n == 0 {
        0.0
    } else {
        (sum / n as f64).exp()
    }
}
