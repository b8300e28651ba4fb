// SPDX-License-Identifier: Apache-2.0

//! And-inverter graphs.
//!
//! Node 0 is the constant-false node, primary inputs follow, and AND nodes come
//! last in a topological numbering: every AND's fanins have strictly smaller ids.
//! Inversion lives on edges, never on nodes.

use std::collections::HashSet;
use std::fmt;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::AigError;

pub type NodeId = u32;

/// A reference to a node, optionally complemented.
#[derive(Copy, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub node: NodeId,
    pub complemented: bool,
}

impl Edge {
    pub const FALSE: Edge = Edge { node: 0, complemented: false };
    pub const TRUE: Edge = Edge { node: 0, complemented: true };

    pub fn new(node: NodeId, complemented: bool) -> Self {
        Self { node, complemented }
    }

    pub fn positive(node: NodeId) -> Self {
        Self::new(node, false)
    }

    /// AIGER literal: `2 * node + complemented`.
    pub fn literal(self) -> u32 {
        2 * self.node + self.complemented as u32
    }

    pub fn from_literal(lit: u32) -> Self {
        Self::new(lit / 2, lit & 1 == 1)
    }
}

impl std::ops::Not for Edge {
    type Output = Edge;
    fn not(self) -> Edge {
        Edge::new(self.node, !self.complemented)
    }
}

impl fmt::Debug for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.complemented {
            write!(f, "!{}", self.node)
        } else {
            write!(f, "{}", self.node)
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    Const0,
    Input,
    And,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct Node {
    pub kind: NodeKind,
    pub fanin0: Edge,
    pub fanin1: Edge,
}

/// Immutable combinational AIG. Build one with [`AigBuilder`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Aig {
    name: String,
    nodes: Vec<Node>,
    num_inputs: usize,
    outputs: Vec<Edge>,
}

impl Aig {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_inputs(&self) -> usize {
        self.num_inputs
    }

    pub fn num_ands(&self) -> usize {
        self.nodes.len() - 1 - self.num_inputs
    }

    /// Input node ids, in declaration order.
    pub fn inputs(&self) -> impl ExactSizeIterator<Item = NodeId> + '_ {
        (1..self.num_inputs + 1).map(|i| i as NodeId)
    }

    pub fn input(&self, index: usize) -> NodeId {
        assert!(index < self.num_inputs);
        index as NodeId + 1
    }

    /// Position of an input node among the inputs.
    pub fn input_index(&self, node: NodeId) -> Option<usize> {
        if self.is_input(node) {
            Some(node as usize - 1)
        } else {
            None
        }
    }

    pub fn outputs(&self) -> &[Edge] {
        &self.outputs
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id as usize]
    }

    pub fn kind(&self, id: NodeId) -> NodeKind {
        self.nodes[id as usize].kind
    }

    pub fn is_and(&self, id: NodeId) -> bool {
        self.kind(id) == NodeKind::And
    }

    pub fn is_input(&self, id: NodeId) -> bool {
        self.kind(id) == NodeKind::Input
    }

    pub fn fanins(&self, id: NodeId) -> [Edge; 2] {
        let n = &self.nodes[id as usize];
        [n.fanin0, n.fanin1]
    }

    pub fn and_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (self.num_inputs as NodeId + 1..self.nodes.len() as NodeId).map(|i| i as NodeId)
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> {
        0..self.nodes.len() as NodeId
    }

    /// Logic level of every node; constants and inputs are level 0.
    pub fn levels(&self) -> Vec<u32> {
        let mut level = vec![0u32; self.nodes.len()];
        for id in self.and_nodes() {
            let [a, b] = self.fanins(id);
            level[id as usize] = 1 + level[a.node as usize].max(level[b.node as usize]);
        }
        level
    }

    /// Number of AND fanin references plus output references per node.
    pub fn fanout_counts(&self) -> Vec<u32> {
        let mut count = vec![0u32; self.nodes.len()];
        for id in self.and_nodes() {
            for e in self.fanins(id) {
                count[e.node as usize] += 1;
            }
        }
        for e in &self.outputs {
            count[e.node as usize] += 1;
        }
        count
    }

    /// AND-node fanout lists (outputs excluded).
    pub fn fanouts(&self) -> Vec<Vec<NodeId>> {
        let mut out = vec![Vec::new(); self.nodes.len()];
        for id in self.and_nodes() {
            for e in self.fanins(id) {
                out[e.node as usize].push(id);
            }
        }
        out
    }

    /// Directed fanin edges `(source, sink, complemented)` in sink order.
    pub fn edges(&self) -> Vec<(NodeId, NodeId, bool)> {
        self.and_nodes().flat_map(|id| self.fanins(id).map(|e| (e.node, id, e.complemented))).collect()
    }

    /// Topological order, by ascending level and then ascending id.
    pub fn topo_order(&self) -> Vec<NodeId> {
        let level = self.levels();
        let mut order: Vec<NodeId> = self.node_ids().collect();
        order.sort_by_key(|&id| (level[id as usize], id));
        order
    }

    /// Checks the structural invariants. Builders uphold them; this exists for
    /// callers that want an explicit assertion.
    pub fn validate(&self) -> Result<(), AigError> {
        if self.nodes.first().map(|n| n.kind) != Some(NodeKind::Const0) {
            return Err(AigError::Invalid("node 0 is not the constant".into()));
        }
        for (id, node) in self.nodes.iter().enumerate().skip(1) {
            let expected = if id <= self.num_inputs { NodeKind::Input } else { NodeKind::And };
            if node.kind != expected {
                return Err(AigError::Invalid(format!("node {id} has kind {:?}", node.kind)));
            }
            if node.kind == NodeKind::And && (node.fanin0.node as usize >= id || node.fanin1.node as usize >= id) {
                return Err(AigError::Invalid(format!("node {id} has a non-topological fanin")));
            }
        }
        if let Some(e) = self.outputs.iter().find(|e| e.node as usize >= self.nodes.len()) {
            return Err(AigError::Invalid(format!("output refers to missing node {}", e.node)));
        }
        Ok(())
    }

    /// Word-parallel simulation. `patterns[i]` holds the bit patterns of input `i`;
    /// every input must supply the same number of 64-bit words. Returns one
    /// pattern vector per node.
    pub fn simulate(&self, patterns: &[Vec<u64>]) -> Result<Vec<Vec<u64>>, AigError> {
        if patterns.len() != self.num_inputs {
            return Err(AigError::PatternMismatch(format!("expected {} input patterns, got {}", self.num_inputs, patterns.len())));
        }
        let words = patterns.first().map_or(1, Vec::len);
        if let Some(p) = patterns.iter().find(|p| p.len() != words) {
            return Err(AigError::PatternMismatch(format!("input patterns have {} and {} words", words, p.len())));
        }
        let mut values = Vec::with_capacity(self.nodes.len());
        values.push(vec![0u64; words]);
        values.extend(patterns.iter().cloned());
        for id in self.and_nodes() {
            let [a, b] = self.fanins(id);
            let ma = if a.complemented { !0 } else { 0 };
            let mb = if b.complemented { !0 } else { 0 };
            let va = &values[a.node as usize];
            let vb = &values[b.node as usize];
            let v: Vec<u64> = va.iter().zip(vb).map(|(x, y)| (x ^ ma) & (y ^ mb)).collect();
            values.push(v);
        }
        Ok(values)
    }

    /// Value of every output under all `2^n` input assignments; row `r` assigns
    /// bit `i` of `r` to input `i`. Only for small input counts.
    pub fn exhaustive_outputs(&self) -> Vec<Vec<u64>> {
        let patterns = exhaustive_patterns(self.num_inputs);
        let values = self.simulate(&patterns).expect("pattern shape is consistent");
        let rows = 1usize << self.num_inputs;
        self.outputs
            .iter()
            .map(|e| {
                let mut v = values[e.node as usize].clone();
                if e.complemented {
                    v.iter_mut().for_each(|w| *w = !*w);
                }
                mask_rows(&mut v, rows);
                v
            })
            .collect()
    }
}

/// Input patterns enumerating every assignment of `n` inputs (row-major bits).
pub fn exhaustive_patterns(n: usize) -> Vec<Vec<u64>> {
    let rows = 1usize << n;
    let words = rows.div_ceil(64);
    (0..n)
        .map(|i| {
            let mut v = vec![0u64; words];
            for r in 0..rows {
                if (r >> i) & 1 == 1 {
                    v[r / 64] |= 1 << (r % 64);
                }
            }
            v
        })
        .collect()
}

/// Clears bits at positions `>= rows`.
pub fn mask_rows(v: &mut [u64], rows: usize) {
    for (w, word) in v.iter_mut().enumerate() {
        let lo = w * 64;
        if lo >= rows {
            *word = 0;
        } else if rows - lo < 64 {
            *word &= (1u64 << (rows - lo)) - 1;
        }
    }
}

/// Incremental AIG construction. Inputs may be interleaved with ANDs; `finish`
/// renumbers so inputs precede every AND.
#[derive(Clone, Debug, Default)]
pub struct AigBuilder {
    name: String,
    // (is_input, fanin0, fanin1) with fanins in builder numbering
    pending: Vec<(bool, Edge, Edge)>,
    outputs: Vec<Edge>,
}

impl AigBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), pending: vec![(false, Edge::FALSE, Edge::FALSE)], outputs: Vec::new() }
    }

    pub fn add_input(&mut self) -> Edge {
        self.pending.push((true, Edge::FALSE, Edge::FALSE));
        Edge::positive(self.pending.len() as NodeId - 1)
    }

    /// Adds `a & b`. Both fanins must already exist.
    pub fn add_and(&mut self, a: Edge, b: Edge) -> Edge {
        let next = self.pending.len() as NodeId;
        assert!(a.node < next && b.node < next, "fanin must precede the AND node");
        self.pending.push((false, a, b));
        Edge::positive(next)
    }

    pub fn add_output(&mut self, e: Edge) {
        assert!((e.node as usize) < self.pending.len());
        self.outputs.push(e);
    }

    pub fn finish(self) -> Aig {
        let num_inputs = self.pending.iter().filter(|p| p.0).count();
        let mut remap = vec![0 as NodeId; self.pending.len()];
        let mut next_input = 1;
        let mut next_and = num_inputs as NodeId + 1;
        for (old, p) in self.pending.iter().enumerate().skip(1) {
            if p.0 {
                remap[old] = next_input;
                next_input += 1;
            } else {
                remap[old] = next_and;
                next_and += 1;
            }
        }
        let map = |e: Edge| Edge::new(remap[e.node as usize], e.complemented);
        let none = Node { kind: NodeKind::Const0, fanin0: Edge::FALSE, fanin1: Edge::FALSE };
        let mut nodes = vec![none; self.pending.len()];
        for (old, p) in self.pending.iter().enumerate().skip(1) {
            nodes[remap[old] as usize] =
                if p.0 { Node { kind: NodeKind::Input, ..none } } else { Node { kind: NodeKind::And, fanin0: map(p.1), fanin1: map(p.2) } };
        }
        let outputs = self.outputs.into_iter().map(map).collect();
        let aig = Aig { name: self.name, nodes, num_inputs, outputs };
        debug_assert!(aig.validate().is_ok());
        aig
    }
}

/// Seeded random AIG with `n_pis` inputs and `n_ands` AND nodes.
///
/// Every AND without fanout becomes an output, so no node is dead. Fanins are
/// stored with the larger literal first, which is the order the binary AIGER
/// encoding requires. A single-input graph cannot host a non-degenerate AND,
/// so `n_pis == 1` yields no AND nodes. With `n_ands == 0` every input is an
/// output.
pub fn generate_random_aig(seed: u64, n_pis: usize, n_ands: usize) -> Aig {
    assert!(n_pis >= 1, "at least one input is required");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = AigBuilder::new(format!("rand_s{seed}_i{n_pis}_a{n_ands}"));
    let mut nodes: Vec<Edge> = (0..n_pis).map(|_| b.add_input()).collect();
    let n_ands = if n_pis < 2 { 0 } else { n_ands };
    if n_ands == 0 {
        for &e in &nodes {
            b.add_output(e);
        }
        return b.finish();
    }

    let mut used = vec![false; n_pis + n_ands + 1];
    let mut seen: HashSet<(u32, u32)> = HashSet::new();
    let window = 2 * n_pis + 8;
    for _ in 0..n_ands {
        let pick = |rng: &mut ChaCha8Rng, nodes: &[Edge], used: &[bool]| -> Edge {
            let unused: Vec<Edge> = nodes.iter().copied().filter(|e| !used[e.node as usize]).collect();
            if !unused.is_empty() && rng.random_bool(0.5) {
                *unused.choose(rng).unwrap()
            } else if rng.random_bool(0.7) {
                let lo = nodes.len().saturating_sub(window);
                *nodes[lo..].choose(rng).unwrap()
            } else {
                *nodes.choose(rng).unwrap()
            }
        };
        let mut chosen = None;
        for _ in 0..64 {
            let x = pick(&mut rng, &nodes, &used);
            let y = pick(&mut rng, &nodes, &used);
            if x.node == y.node {
                continue;
            }
            let x = Edge::new(x.node, rng.random_bool(0.5));
            let y = Edge::new(y.node, rng.random_bool(0.5));
            let (hi, lo) = if x.literal() > y.literal() { (x, y) } else { (y, x) };
            if seen.insert((hi.literal(), lo.literal())) {
                chosen = Some((hi, lo));
                break;
            }
        }
        let (hi, lo) = match chosen {
            Some(pair) => pair,
            // Dense small graphs can exhaust distinct pairs; chain on the newest node.
            None => {
                let last = *nodes.last().unwrap();
                let other = nodes[rng.random_range(0..nodes.len() - 1)];
                (last, Edge::new(other.node, rng.random_bool(0.5)))
            }
        };
        used[hi.node as usize] = true;
        used[lo.node as usize] = true;
        let e = b.add_and(hi, lo);
        nodes.push(e);
    }
    for e in nodes.iter().skip(n_pis) {
        if !used[e.node as usize] {
            let c = rng.random_bool(0.5);
            b.add_output(Edge::new(e.node, c));
        }
    }
    b.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn and2() -> Aig {
        let mut b = AigBuilder::new("and2");
        let x = b.add_input();
        let y = b.add_input();
        let z = b.add_and(x, y);
        b.add_output(z);
        b.finish()
    }

    fn naive_eval(g: &Aig, e: Edge, row: usize) -> bool {
        let v = match g.kind(e.node) {
            NodeKind::Const0 => false,
            NodeKind::Input => (row >> g.input_index(e.node).unwrap()) & 1 == 1,
            NodeKind::And => {
                let [a, b] = g.fanins(e.node);
                naive_eval(g, a, row) && naive_eval(g, b, row)
            }
        };
        v ^ e.complemented
    }

    #[test]
    fn topo_order_of_small_circuits() {
        let mut b = AigBuilder::new("buf");
        let x = b.add_input();
        b.add_output(x);
        assert_eq!(b.finish().topo_order(), vec![0, 1]);
        assert_eq!(and2().topo_order(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn topo_order_respects_fanins() {
        for seed in 0..50 {
            let g = generate_random_aig(seed, 5, 40);
            let order = g.topo_order();
            let mut pos = vec![0; g.num_nodes()];
            for (i, &n) in order.iter().enumerate() {
                pos[n as usize] = i;
            }
            for id in g.and_nodes() {
                for e in g.fanins(id) {
                    assert!(pos[e.node as usize] < pos[id as usize]);
                }
            }
        }
    }

    #[test]
    fn simulate_and2() {
        let g = and2();
        let v = g.simulate(&[vec![0b1100], vec![0b1010]]).unwrap();
        assert_eq!(v[3][0] & 0xF, 0b1000);
        let zero = g.simulate(&[vec![0], vec![0]]).unwrap();
        assert_eq!(zero[3][0], 0);
    }

    #[test]
    fn simulate_rejects_bad_patterns() {
        let g = and2();
        assert!(g.simulate(&[vec![0]]).is_err());
        assert!(g.simulate(&[vec![0], vec![0, 1]]).is_err());
    }

    #[test]
    fn simulate_matches_naive_evaluator() {
        for seed in 0..20 {
            let g = generate_random_aig(seed, 8, 30);
            let outs = g.exhaustive_outputs();
            for (o, &e) in g.outputs().iter().enumerate() {
                for row in 0..256 {
                    let bit = (outs[o][row / 64] >> (row % 64)) & 1 == 1;
                    assert_eq!(bit, naive_eval(&g, e, row), "seed {seed} output {o} row {row}");
                }
            }
        }
    }

    #[test]
    fn generator_is_deterministic() {
        assert_eq!(generate_random_aig(7, 4, 10), generate_random_aig(7, 4, 10));
        assert_ne!(generate_random_aig(7, 4, 10), generate_random_aig(8, 4, 10));
    }

    #[test]
    fn generator_without_ands_outputs_inputs() {
        let g = generate_random_aig(3, 4, 0);
        assert_eq!(g.num_ands(), 0);
        assert_eq!(g.outputs().len(), 4);
        assert!(g.outputs().iter().all(|e| g.is_input(e.node)));
    }

    #[test]
    fn generated_graphs_are_valid_and_live() {
        for seed in 0..500u64 {
            let pis = 1 + (seed % 9) as usize;
            let ands = (seed * 7 % 60) as usize;
            let g = generate_random_aig(seed, pis, ands);
            g.validate().unwrap();
            let fo = g.fanout_counts();
            assert!(g.and_nodes().all(|id| fo[id as usize] > 0), "seed {seed}");
            for id in g.and_nodes() {
                let [a, b] = g.fanins(id);
                assert!(a.literal() > b.literal());
                assert_ne!(a.node, b.node);
            }
        }
    }

    #[test]
    fn builder_moves_inputs_first() {
        let mut b = AigBuilder::new("mix");
        let x = b.add_input();
        let y = b.add_input();
        let a = b.add_and(x, !y);
        let z = b.add_input();
        let c = b.add_and(a, z);
        b.add_output(!c);
        let g = b.finish();
        g.validate().unwrap();
        assert_eq!(g.num_inputs(), 3);
        assert_eq!(g.fanins(4), [Edge::new(1, false), Edge::new(2, true)]);
        assert_eq!(g.fanins(5), [Edge::new(4, false), Edge::new(3, false)]);
        assert_eq!(g.outputs(), &[Edge::new(5, true)]);
    }
}
