// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::aig::NodeId;
use crate::library::Library;

pub type NetId = usize;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum InstanceRole {
    /// The library cell implementing a cover node's chosen cut.
    Cell,
    /// Restores the positive phase after a match with an inverted output.
    OutputInverter,
    /// Provides the complemented phase of a node or primary input.
    PhaseInverter,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub name: String,
    pub cell: usize,
    pub cell_name: String,
    /// Input net per cell pin, in the cell's pin order.
    pub inputs: Vec<NetId>,
    pub output: NetId,
    pub role: InstanceRole,
    /// AIG node this instance was created for.
    pub node: Option<NodeId>,
    /// Per pin: whether the connected net is an inserted phase inverter.
    pub inverted_inputs: Vec<bool>,
    /// Whether an output inverter follows this cell.
    pub inverted_output: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MappedNetlist {
    pub name: String,
    pub library: String,
    pub nets: Vec<String>,
    pub instances: Vec<Instance>,
    pub inputs: Vec<NetId>,
    /// Net driving each primary output.
    pub outputs: Vec<NetId>,
}

impl MappedNetlist {
    pub fn is_inverter(&self, lib: &Library, inst: usize) -> bool {
        self.instances[inst].cell == lib.inverter()
    }

    pub fn cell_count(&self) -> usize {
        self.instances.len()
    }

    pub fn inverter_count(&self, lib: &Library) -> usize {
        (0..self.instances.len()).filter(|&i| self.is_inverter(lib, i)).count()
    }

    /// Driving instance per net, `None` for primary inputs and undriven nets.
    pub fn drivers(&self) -> Vec<Option<usize>> {
        let mut d = vec![None; self.nets.len()];
        for (i, inst) in self.instances.iter().enumerate() {
            d[inst.output] = Some(i);
        }
        d
    }

    /// Instances in an order where every driver precedes its readers, or the
    /// index of an instance on a cycle.
    pub fn topo_instances(&self) -> Result<Vec<usize>, usize> {
        let drivers = self.drivers();
        let mut indegree: Vec<usize> =
            self.instances.iter().map(|inst| inst.inputs.iter().filter(|&&n| drivers[n].is_some()).count()).collect();
        let mut readers = vec![Vec::new(); self.instances.len()];
        for (i, inst) in self.instances.iter().enumerate() {
            for &n in &inst.inputs {
                if let Some(d) = drivers[n] {
                    readers[d].push(i);
                }
            }
        }
        let mut ready: std::collections::BinaryHeap<std::cmp::Reverse<usize>> =
            (0..self.instances.len()).filter(|&i| indegree[i] == 0).map(std::cmp::Reverse).collect();
        let mut order = Vec::with_capacity(self.instances.len());
        while let Some(std::cmp::Reverse(i)) = ready.pop() {
            order.push(i);
            for &r in &readers[i] {
                indegree[r] -= 1;
                if indegree[r] == 0 {
                    ready.push(std::cmp::Reverse(r));
                }
            }
        }
        if order.len() == self.instances.len() {
            Ok(order)
        } else {
            Err((0..self.instances.len()).find(|&i| indegree[i] > 0).unwrap())
        }
    }

    /// Word-parallel simulation of the primary outputs.
    pub fn simulate(&self, lib: &Library, patterns: &[Vec<u64>]) -> Vec<Vec<u64>> {
        assert_eq!(patterns.len(), self.inputs.len());
        let words = patterns.first().map_or(1, Vec::len);
        let mut value = vec![vec![0u64; words]; self.nets.len()];
        for (n, p) in self.inputs.iter().zip(patterns) {
            value[*n] = p.clone();
        }
        let order = self.topo_instances().expect("mapped netlists are acyclic");
        for i in order {
            let inst = &self.instances[i];
            let table = lib.cells[inst.cell].truth_table();
            let mut out = vec![0u64; words];
            for (w, slot) in out.iter_mut().enumerate() {
                for bit in 0..64 {
                    let mut row = 0;
                    for (p, &n) in inst.inputs.iter().enumerate() {
                        row |= (((value[n][w] >> bit) & 1) as usize) << p;
                    }
                    if table.get(row) {
                        *slot |= 1 << bit;
                    }
                }
            }
            value[inst.output] = out;
        }
        self.outputs.iter().map(|&n| value[n].clone()).collect()
    }
}
