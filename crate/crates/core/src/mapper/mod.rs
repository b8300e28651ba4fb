// SPDX-License-Identifier: Apache-2.0

//! Delay-oriented cut-based mapping.
//!
//! A forward pass in topological order assigns every AND node the matched cut
//! with the smallest arrival under a [`CostModel`]. A backward pass from the
//! outputs extracts the cover and builds a netlist in the positive phase:
//! every covered node gets a net carrying its true value, and complemented
//! phases are produced by explicit inverters.

pub mod netlist;

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::aig::{Aig, NodeId, NodeKind};
use crate::cuts::{enumerate_cuts, Cut, CutParams, CutSets};
use crate::error::MapError;
use crate::library::{CellMatch, Library, MatchTable};
use crate::timing;

pub use netlist::{Instance, InstanceRole, MappedNetlist, NetId};

/// Representative delay of a class under the midpoint rule.
pub fn class_to_delay(class: usize, bin_width: f64) -> f64 {
    (class as f64 + 0.5) * bin_width
}

/// Predicts a delay class for each cut of a circuit.
pub trait CutDelayPredictor: Sync {
    fn bin_width(&self) -> f64;
    fn predict(&self, g: &Aig, cuts: &[&Cut]) -> Result<Vec<usize>, String>;
}

#[derive(Copy, Clone)]
pub enum CostModel<'a> {
    /// Every cut costs one level.
    Unit,
    /// Latest leaf arrival plus inverter and pin block delays.
    LibraryPin,
    /// Latest leaf arrival plus the representative delay of the predicted class.
    Learned(&'a dyn CutDelayPredictor),
}

impl CostModel<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            CostModel::Unit => "unit",
            CostModel::LibraryPin => "lib",
            CostModel::Learned(_) => "learned",
        }
    }
}

/// Matches per node, per cut (parallel to the node's cut list).
#[derive(Clone, Debug)]
pub struct CutMatches {
    per_node: Vec<Vec<Vec<CellMatch>>>,
}

impl CutMatches {
    pub fn get(&self, node: NodeId, cut_index: usize) -> &[CellMatch] {
        &self.per_node[node as usize][cut_index]
    }
}

/// Boolean-matches every non-trivial cut. Cuts without a match are left with
/// an empty list; an AND node none of whose cuts match is an error.
pub fn match_cuts(g: &Aig, cuts: &CutSets, table: &MatchTable) -> Result<CutMatches, MapError> {
    let mut cache: HashMap<crate::library::TruthTable, Vec<CellMatch>> = HashMap::new();
    let mut per_node = Vec::with_capacity(g.num_nodes());
    for id in g.node_ids() {
        let set = cuts.get(id);
        let mut lists = Vec::with_capacity(set.len());
        for cut in set {
            if cut.is_trivial() {
                lists.push(Vec::new());
                continue;
            }
            let found = cache.entry(cut.table).or_insert_with(|| table.lookup(cut.table)).clone();
            lists.push(found);
        }
        if g.is_and(id) && lists.iter().all(Vec::is_empty) {
            return Err(MapError::Infeasible { node: id });
        }
        per_node.push(lists);
    }
    Ok(CutMatches { per_node })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Choice {
    pub cut: Cut,
    pub cell_match: CellMatch,
    /// Arrival of the node's positive phase as estimated by the cost model.
    pub arrival: f64,
}

/// Chosen implementation per covered node.
#[derive(Clone, Debug, PartialEq)]
pub struct Cover {
    choices: Vec<Option<Choice>>,
    /// Cost-model arrival of every node's best cut (covered or not).
    pub arrivals: Vec<f64>,
    /// Cost-model arrival at each primary output.
    pub output_arrivals: Vec<f64>,
}

impl Cover {
    pub fn choice(&self, node: NodeId) -> Option<&Choice> {
        self.choices[node as usize].as_ref()
    }

    pub fn covered(&self) -> impl Iterator<Item = (NodeId, &Choice)> {
        self.choices.iter().enumerate().filter_map(|(i, c)| c.as_ref().map(|c| (i as NodeId, c)))
    }

    pub fn len(&self) -> usize {
        self.choices.iter().filter(|c| c.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Largest predicted output arrival.
    pub fn predicted_delay(&self) -> f64 {
        self.output_arrivals.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug)]
pub struct Mapping {
    pub netlist: MappedNetlist,
    pub cover: Cover,
}

struct Resolved<'a> {
    lib: &'a Library,
    model: CostModel<'a>,
    /// Learned classes per node, per cut index.
    classes: Vec<Vec<usize>>,
}

impl Resolved<'_> {
    fn cut_delay(&self, node: NodeId, cut_index: usize, m: &CellMatch, leaf_arrivals: &[f64]) -> f64 {
        let latest = leaf_arrivals.iter().copied().fold(0.0, f64::max);
        match self.model {
            CostModel::Unit => latest + 1.0,
            CostModel::LibraryPin => {
                let cell = &self.lib.cells[m.cell];
                let inv = self.lib.inverter_delay();
                let mut arrival: f64 = 0.0;
                for (i, &a) in leaf_arrivals.iter().enumerate() {
                    let input = if m.transform.input_negated(i) { a + inv } else { a };
                    arrival = arrival.max(input + cell.pin_delay(m.transform.perm[i] as usize));
                }
                if m.transform.output_neg {
                    arrival += inv;
                }
                arrival
            }
            CostModel::Learned(p) => latest + class_to_delay(self.classes[node as usize][cut_index], p.bin_width()),
        }
    }

    /// Arrival of a complemented phase given the positive-phase arrival.
    fn negated(&self, arrival: f64) -> f64 {
        match self.model {
            CostModel::LibraryPin => arrival + self.lib.inverter_delay(),
            _ => arrival,
        }
    }

    fn candidate_area(&self, m: &CellMatch) -> f64 {
        let inv = self.lib.inverter_cell().area;
        self.lib.cells[m.cell].area + inv * m.transform.negation_count() as f64
    }
}

/// Reusable mapping context: library, match table, and cut parameters.
pub struct Mapper<'l> {
    lib: &'l Library,
    table: MatchTable,
    params: CutParams,
}

impl<'l> Mapper<'l> {
    pub fn new(lib: &'l Library, params: CutParams) -> Self {
        Self { lib, table: MatchTable::build(&lib.cells), params }
    }

    pub fn library(&self) -> &Library {
        self.lib
    }

    pub fn params(&self) -> CutParams {
        self.params
    }

    /// Maps `g`. With `cut_order_seed`, each node's candidate list is shuffled
    /// and the shuffled position replaces the leaf-order tie-break, so
    /// candidates equal in delay, size and area resolve differently.
    pub fn map(&self, g: &Aig, cost: CostModel<'_>, cut_order_seed: Option<u64>) -> Result<Mapping, MapError> {
        let cuts = enumerate_cuts(g, self.params);
        let matches = match_cuts(g, &cuts, &self.table)?;
        self.map_with_cuts(g, &cuts, &matches, cost, cut_order_seed)
    }

    pub fn map_with_cuts(
        &self,
        g: &Aig,
        cuts: &CutSets,
        matches: &CutMatches,
        cost: CostModel<'_>,
        cut_order_seed: Option<u64>,
    ) -> Result<Mapping, MapError> {
        let classes = match cost {
            CostModel::Learned(p) => predict_all(g, cuts, matches, p)?,
            _ => Vec::new(),
        };
        let resolved = Resolved { lib: self.lib, model: cost, classes };
        let mut rng = cut_order_seed.map(ChaCha8Rng::seed_from_u64);

        let mut arrivals = vec![0.0f64; g.num_nodes()];
        let mut best: Vec<Option<(usize, CellMatch)>> = vec![None; g.num_nodes()];
        let mut leaf_arr = Vec::with_capacity(4);
        for id in g.topo_order() {
            if !g.is_and(id) {
                continue;
            }
            let set = cuts.get(id);
            let mut candidates: Vec<(usize, usize)> = Vec::new();
            for (ci, _) in set.iter().enumerate() {
                for mi in 0..matches.get(id, ci).len() {
                    candidates.push((ci, mi));
                }
            }
            if let Some(rng) = rng.as_mut() {
                candidates.shuffle(rng);
            }
            let mut chosen: Option<(f64, usize, usize)> = None;
            for (ci, mi) in candidates {
                let cut = &set[ci];
                let m = &matches.get(id, ci)[mi];
                leaf_arr.clear();
                leaf_arr.extend(cut.leaves.iter().map(|&l| arrivals[l as usize]));
                let d = resolved.cut_delay(id, ci, m, &leaf_arr);
                let better = match chosen {
                    None => true,
                    Some((bd, bci, bmi)) => {
                        let bcut = &set[bci];
                        let bm = &matches.get(id, bci)[bmi];
                        let order = d
                            .total_cmp(&bd)
                            .then(cut.size().cmp(&bcut.size()))
                            .then(resolved.candidate_area(m).total_cmp(&resolved.candidate_area(bm)));
                        // shuffled position replaces the final leaf-order key
                        if rng.is_some() { order } else { order.then(cut.leaves.cmp(&bcut.leaves)) }.is_lt()
                    }
                };
                if better {
                    chosen = Some((d, ci, mi));
                }
            }
            let (d, ci, mi) = chosen.ok_or(MapError::Infeasible { node: id })?;
            arrivals[id as usize] = d;
            best[id as usize] = Some((ci, matches.get(id, ci)[mi]));
        }

        // Backward pass: collect the cover from the outputs.
        let mut choices: Vec<Option<Choice>> = vec![None; g.num_nodes()];
        let mut stack: Vec<NodeId> = Vec::new();
        for (i, e) in g.outputs().iter().enumerate() {
            if g.kind(e.node) == NodeKind::Const0 {
                return Err(MapError::ConstantOutput { index: i });
            }
            stack.push(e.node);
        }
        while let Some(n) = stack.pop() {
            if !g.is_and(n) || choices[n as usize].is_some() {
                continue;
            }
            let (ci, m) = best[n as usize].unwrap();
            let cut = cuts.get(n)[ci].clone();
            for &l in &cut.leaves {
                if g.kind(l) == NodeKind::Const0 {
                    return Err(MapError::Infeasible { node: n });
                }
                stack.push(l);
            }
            choices[n as usize] = Some(Choice { cut, cell_match: m, arrival: arrivals[n as usize] });
        }
        let output_arrivals = g
            .outputs()
            .iter()
            .map(|e| {
                let a = arrivals[e.node as usize];
                if e.complemented {
                    resolved.negated(a)
                } else {
                    a
                }
            })
            .collect();
        let cover = Cover { choices, arrivals, output_arrivals };
        let netlist = build_netlist(g, self.lib, &cover);
        Ok(Mapping { netlist, cover })
    }

    /// Maps once without shuffling (trial 0) and `trials - 1` more times with
    /// seeded candidate shuffles. Delays are measured by timing the netlist.
    pub fn shuffle_map(&self, g: &Aig, cost: CostModel<'_>, trials: usize, seed: u64) -> Result<Vec<ShuffleTrial>, MapError> {
        assert!(trials >= 1, "at least the default trial is required");
        let cuts = enumerate_cuts(g, self.params);
        let matches = match_cuts(g, &cuts, &self.table)?;
        (0..trials)
            .map(|trial| {
                let trial_seed = (trial > 0).then(|| trial_seed(seed, trial));
                let m = self.map_with_cuts(g, &cuts, &matches, cost, trial_seed)?;
                Ok(ShuffleTrial {
                    trial,
                    area: timing::total_area(&m.netlist, self.lib),
                    delay: timing::netlist_delay(&m.netlist, self.lib).expect("mapped netlists are acyclic"),
                    is_default: trial == 0,
                })
            })
            .collect()
    }
}

fn trial_seed(seed: u64, trial: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (trial as u64).wrapping_mul(0xD1B5_4A32_D192_ED03)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShuffleTrial {
    pub trial: usize,
    pub area: f64,
    pub delay: f64,
    pub is_default: bool,
}

fn predict_all(g: &Aig, cuts: &CutSets, matches: &CutMatches, predictor: &dyn CutDelayPredictor) -> Result<Vec<Vec<usize>>, MapError> {
    let mut flat: Vec<&Cut> = Vec::new();
    for id in g.and_nodes() {
        for (ci, cut) in cuts.get(id).iter().enumerate() {
            if !matches.get(id, ci).is_empty() {
                flat.push(cut);
            }
        }
    }
    let predicted = predictor.predict(g, &flat).map_err(MapError::Prediction)?;
    if predicted.len() != flat.len() {
        return Err(MapError::Prediction(format!("expected {} predictions, got {}", flat.len(), predicted.len())));
    }
    let mut it = predicted.into_iter();
    let mut classes = vec![Vec::new(); g.num_nodes()];
    for id in g.and_nodes() {
        let list = &mut classes[id as usize];
        for ci in 0..cuts.get(id).len() {
            list.push(if matches.get(id, ci).is_empty() { 0 } else { it.next().unwrap() });
        }
    }
    Ok(classes)
}

/// Convenience wrapper using default cut parameters.
pub fn map_delay(g: &Aig, lib: &Library, cost: CostModel<'_>, cut_order_seed: Option<u64>) -> Result<Mapping, MapError> {
    Mapper::new(lib, CutParams::default()).map(g, cost, cut_order_seed)
}

pub fn shuffle_map(g: &Aig, lib: &Library, cost: CostModel<'_>, trials: usize, seed: u64) -> Result<Vec<ShuffleTrial>, MapError> {
    Mapper::new(lib, CutParams::default()).shuffle_map(g, cost, trials, seed)
}

struct NetBuilder<'a> {
    lib: &'a Library,
    nets: Vec<String>,
    instances: Vec<Instance>,
    positive: Vec<Option<NetId>>,
    negative: Vec<Option<NetId>>,
}

impl NetBuilder<'_> {
    fn net(&mut self, name: String) -> NetId {
        self.nets.push(name);
        self.nets.len() - 1
    }

    fn add(&mut self, cell: usize, inputs: Vec<NetId>, output: NetId, role: InstanceRole, node: NodeId) -> usize {
        let k = inputs.len();
        self.instances.push(Instance {
            name: format!("g{}", self.instances.len()),
            cell,
            cell_name: self.lib.cells[cell].name.clone(),
            inputs,
            output,
            role,
            node: Some(node),
            inverted_inputs: vec![false; k],
            inverted_output: false,
        });
        self.instances.len() - 1
    }

    fn negated(&mut self, node: NodeId) -> NetId {
        if let Some(n) = self.negative[node as usize] {
            return n;
        }
        let pos = self.positive[node as usize].expect("positive phase is built first");
        let out = self.net(format!("n{node}_n"));
        self.add(self.lib.inverter(), vec![pos], out, InstanceRole::PhaseInverter, node);
        self.negative[node as usize] = Some(out);
        out
    }
}

fn build_netlist(g: &Aig, lib: &Library, cover: &Cover) -> MappedNetlist {
    let mut b = NetBuilder {
        lib,
        nets: Vec::new(),
        instances: Vec::new(),
        positive: vec![None; g.num_nodes()],
        negative: vec![None; g.num_nodes()],
    };
    let mut inputs = Vec::with_capacity(g.num_inputs());
    for (i, id) in g.inputs().enumerate() {
        let n = b.net(format!("pi{i}"));
        b.positive[id as usize] = Some(n);
        inputs.push(n);
    }
    for (id, choice) in cover.covered() {
        let m = &choice.cell_match;
        let cell = &lib.cells[m.cell];
        let mut pins = vec![0; cell.fanin()];
        let mut inverted = vec![false; cell.fanin()];
        for (i, &leaf) in choice.cut.leaves.iter().enumerate() {
            let pin = m.transform.perm[i] as usize;
            if m.transform.input_negated(i) {
                pins[pin] = b.negated(leaf);
                inverted[pin] = true;
            } else {
                pins[pin] = b.positive[leaf as usize].expect("leaves precede their root");
            }
        }
        let out = if m.transform.output_neg {
            let inner = b.net(format!("n{id}_c"));
            let cell_inst = b.add(m.cell, pins, inner, InstanceRole::Cell, id);
            b.instances[cell_inst].inverted_inputs = inverted;
            b.instances[cell_inst].inverted_output = true;
            let out = b.net(format!("n{id}"));
            b.add(lib.inverter(), vec![inner], out, InstanceRole::OutputInverter, id);
            out
        } else {
            let out = b.net(format!("n{id}"));
            let cell_inst = b.add(m.cell, pins, out, InstanceRole::Cell, id);
            b.instances[cell_inst].inverted_inputs = inverted;
            out
        };
        b.positive[id as usize] = Some(out);
    }
    let outputs = g
        .outputs()
        .iter()
        .map(|e| if e.complemented { b.negated(e.node) } else { b.positive[e.node as usize].expect("output node is covered") })
        .collect();
    MappedNetlist { name: g.name().to_string(), library: lib.name.clone(), nets: b.nets, instances: b.instances, inputs, outputs }
}
