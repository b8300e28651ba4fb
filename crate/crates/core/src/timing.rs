// SPDX-License-Identifier: Apache-2.0

//! Pin-based static timing, critical paths with inverter absorption, and
//! delay classes.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::TimingError;
use crate::library::Library;
use crate::mapper::{MappedNetlist, NetId};

/// Arrival time of every net in picoseconds.
#[derive(Clone, Debug, PartialEq)]
pub struct ArrivalMap {
    pub nets: Vec<f64>,
}

impl ArrivalMap {
    pub fn get(&self, net: NetId) -> f64 {
        self.nets[net]
    }

    /// Largest arrival over the primary outputs, 0 for a circuit without outputs.
    pub fn max_output(&self, n: &MappedNetlist) -> f64 {
        n.outputs.iter().map(|&o| self.nets[o]).fold(0.0, f64::max)
    }
}

fn check_cells(n: &MappedNetlist, lib: &Library) -> Result<(), TimingError> {
    for (i, inst) in n.instances.iter().enumerate() {
        let ok = lib.cells.get(inst.cell).is_some_and(|c| c.fanin() == inst.inputs.len());
        if !ok {
            return Err(TimingError::UnknownCell { instance: i, cell: inst.cell });
        }
    }
    Ok(())
}

pub fn compute_arrivals(n: &MappedNetlist, lib: &Library) -> Result<ArrivalMap, TimingError> {
    check_cells(n, lib)?;
    let order = n.topo_instances().map_err(|instance| TimingError::Cycle { instance })?;
    let mut nets = vec![0.0; n.nets.len()];
    for i in order {
        let inst = &n.instances[i];
        let cell = &lib.cells[inst.cell];
        nets[inst.output] = inst.inputs.iter().enumerate().map(|(p, &net)| nets[net] + cell.pin_delay(p)).fold(0.0, f64::max);
    }
    Ok(ArrivalMap { nets })
}

/// STA delay of the netlist: the latest primary-output arrival.
pub fn netlist_delay(n: &MappedNetlist, lib: &Library) -> Result<f64, TimingError> {
    Ok(compute_arrivals(n, lib)?.max_output(n))
}

pub fn total_area(n: &MappedNetlist, lib: &Library) -> f64 {
    n.instances.iter().map(|inst| lib.cells[inst.cell].area).sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathElement {
    pub instance: usize,
    pub instance_name: String,
    pub cell_name: String,
    /// Input pin the path enters through.
    pub pin: String,
    pub cell_delay: f64,
    /// Delay of inverters folded into this element.
    pub absorbed_inverter_delay: f64,
}

impl PathElement {
    pub fn stage_delay(&self) -> f64 {
        self.cell_delay + self.absorbed_inverter_delay
    }
}

/// Critical path in driver-to-sink order after inverter absorption.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPath {
    pub elements: Vec<PathElement>,
    pub total_delay: f64,
    /// Index of the primary output the path ends at, if any.
    pub output: Option<usize>,
}

impl CriticalPath {
    /// One line per element `<instance> <cell> <through-pin> <delay_ps> <absorbed_ps>`,
    /// then `TOTAL <ps>`.
    pub fn report(&self) -> String {
        let mut out = String::new();
        for e in &self.elements {
            writeln!(out, "{} {} {} {} {}", e.instance_name, e.cell_name, e.pin, e.cell_delay, e.absorbed_inverter_delay).unwrap();
        }
        writeln!(out, "TOTAL {}", self.total_delay).unwrap();
        out
    }
}

/// Traces the path realizing the latest output arrival. At every instance the
/// input pin realizing the maximum is followed, lowest pin on ties.
///
/// Inverters are folded into the next non-inverter cell downstream. Inverters
/// after the last cell fold into that cell, and a path made only of inverters
/// becomes one element carrying the delay of all of them.
pub fn critical_path(n: &MappedNetlist, lib: &Library, arrivals: &ArrivalMap) -> CriticalPath {
    let mut best: Option<(usize, f64)> = None;
    for (i, &o) in n.outputs.iter().enumerate() {
        let a = arrivals.get(o);
        if best.is_none_or(|(_, b)| a > b) {
            best = Some((i, a));
        }
    }
    let Some((po, _)) = best else {
        return CriticalPath { elements: Vec::new(), total_delay: 0.0, output: None };
    };
    let drivers = n.drivers();
    let mut raw: Vec<(usize, usize)> = Vec::new();
    let mut net = n.outputs[po];
    while let Some(i) = drivers[net] {
        let inst = &n.instances[i];
        let cell = &lib.cells[inst.cell];
        let mut pick = 0;
        let mut pick_arrival = f64::NEG_INFINITY;
        for (p, &inp) in inst.inputs.iter().enumerate() {
            let a = arrivals.get(inp) + cell.pin_delay(p);
            if a > pick_arrival {
                pick = p;
                pick_arrival = a;
            }
        }
        raw.push((i, pick));
        net = inst.inputs[pick];
    }
    raw.reverse();

    let element = |i: usize, p: usize, absorbed: f64| {
        let inst = &n.instances[i];
        let cell = &lib.cells[inst.cell];
        PathElement {
            instance: i,
            instance_name: inst.name.clone(),
            cell_name: cell.name.clone(),
            pin: cell.pins[p].name.clone(),
            cell_delay: cell.pin_delay(p),
            absorbed_inverter_delay: absorbed,
        }
    };
    let mut elements: Vec<PathElement> = Vec::new();
    let mut pending = 0.0;
    let mut last_inverter = None;
    for &(i, p) in &raw {
        if n.is_inverter(lib, i) {
            pending += lib.cells[n.instances[i].cell].pin_delay(p);
            last_inverter = Some((i, p));
        } else {
            elements.push(element(i, p, pending));
            pending = 0.0;
        }
    }
    if let Some((i, p)) = last_inverter.filter(|_| pending > 0.0 || elements.is_empty()) {
        match elements.last_mut() {
            Some(e) => e.absorbed_inverter_delay += pending,
            None => {
                let own = lib.cells[n.instances[i].cell].pin_delay(p);
                elements.push(element(i, p, pending - own));
            }
        }
    }
    let total_delay = elements.iter().map(PathElement::stage_delay).sum();
    CriticalPath { elements, total_delay, output: Some(po) }
}

/// `k` delay classes of `bin_width` ps each, the last one unbounded.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DelayBinning {
    pub k: usize,
    pub bin_width: f64,
}

impl Default for DelayBinning {
    fn default() -> Self {
        Self { k: 8, bin_width: 100.0 }
    }
}

impl DelayBinning {
    pub fn new(k: usize, bin_width: f64) -> Result<Self, TimingError> {
        if k < 2 {
            return Err(TimingError::InvalidBinning(format!("need at least 2 classes, got {k}")));
        }
        if !(bin_width.is_finite() && bin_width > 0.0) {
            return Err(TimingError::InvalidBinning(format!("bin width must be positive, got {bin_width}")));
        }
        Ok(Self { k, bin_width })
    }

    pub fn bin(&self, d: f64) -> Result<usize, TimingError> {
        bin_delay(d, self)
    }
}

/// `min(floor(d / width), k - 1)`; bins are closed on the left.
pub fn bin_delay(d: f64, binning: &DelayBinning) -> Result<usize, TimingError> {
    if d < 0.0 || d.is_nan() {
        return Err(TimingError::NegativeDelay(d));
    }
    let class = (d / binning.bin_width).floor();
    Ok(if class >= (binning.k - 1) as f64 { binning.k - 1 } else { class as usize })
}
