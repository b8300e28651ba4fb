// SPDX-License-Identifier: Apache-2.0

//! Reference implementations used by the acceptance suite. Each one is written
//! from the definitions alone and shares no code with the crate under test.

use std::collections::{BTreeSet, HashMap};

use cutmap::aig::AigBuilder;
use cutmap::library::Library;
use cutmap::mapper::MappedNetlist;
use cutmap::{Aig, NodeId, NodeKind};

/// Value of every node for one input row, straight from the node list.
pub fn eval_aig_row(g: &Aig, row: usize) -> Vec<bool> {
    let mut v = vec![false; g.num_nodes()];
    for id in 0..g.num_nodes() as NodeId {
        let n = g.node(id);
        v[id as usize] = match n.kind {
            NodeKind::Const0 => false,
            NodeKind::Input => (row >> g.input_index(id).unwrap()) & 1 == 1,
            NodeKind::And => {
                let a = v[n.fanin0.node as usize] ^ n.fanin0.complemented;
                let b = v[n.fanin1.node as usize] ^ n.fanin1.complemented;
                a && b
            }
        };
    }
    v
}

pub fn aig_outputs_row(g: &Aig, row: usize) -> Vec<bool> {
    let v = eval_aig_row(g, row);
    g.outputs().iter().map(|e| v[e.node as usize] ^ e.complemented).collect()
}

/// Evaluates cell expressions net by net until nothing changes.
pub fn netlist_outputs_row(n: &MappedNetlist, lib: &Library, row: usize) -> Option<Vec<bool>> {
    let mut v: Vec<Option<bool>> = vec![None; n.nets.len()];
    for (i, &net) in n.inputs.iter().enumerate() {
        v[net] = Some((row >> i) & 1 == 1);
    }
    loop {
        let mut changed = false;
        for inst in &n.instances {
            if v[inst.output].is_some() {
                continue;
            }
            let ins: Option<Vec<bool>> = inst.inputs.iter().map(|&x| v[x]).collect();
            if let Some(ins) = ins {
                v[inst.output] = Some(lib.cells[inst.cell].function.eval(&ins));
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    n.outputs.iter().map(|&o| v[o]).collect()
}

/// Longest path by repeated relaxation over instances.
pub fn oracle_arrivals(n: &MappedNetlist, lib: &Library) -> Vec<f64> {
    let mut a = vec![0.0f64; n.nets.len()];
    for _ in 0..=n.instances.len() {
        let mut changed = false;
        for inst in &n.instances {
            let cell = &lib.cells[inst.cell];
            let t = inst
                .inputs
                .iter()
                .enumerate()
                .map(|(p, &x)| a[x] + cell.pins[p].rise_block.max(cell.pins[p].fall_block))
                .fold(0.0, f64::max);
            if t > a[inst.output] {
                a[inst.output] = t;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    a
}

pub fn oracle_delay(n: &MappedNetlist, lib: &Library) -> f64 {
    let a = oracle_arrivals(n, lib);
    n.outputs.iter().map(|&o| a[o]).fold(0.0, f64::max)
}

/// Whether every path from `root` to a primary input or the constant crosses `leaves`.
pub fn separates(g: &Aig, root: NodeId, leaves: &[NodeId]) -> bool {
    let mut stack = vec![root];
    let mut seen = BTreeSet::new();
    while let Some(x) = stack.pop() {
        if leaves.contains(&x) || !seen.insert(x) {
            continue;
        }
        if !g.is_and(x) {
            return false;
        }
        let n = g.node(x);
        stack.push(n.fanin0.node);
        stack.push(n.fanin1.node);
    }
    true
}

/// All minimal separating leaf sets of size at most `k`, by brute force.
pub fn brute_force_cuts(g: &Aig, root: NodeId, k: usize) -> BTreeSet<Vec<NodeId>> {
    let candidates: Vec<NodeId> = (1..g.num_nodes() as NodeId).filter(|&x| x <= root).collect();
    let mut valid: Vec<Vec<NodeId>> = Vec::new();
    let mut subset = Vec::new();
    fn rec(c: &[NodeId], start: usize, k: usize, subset: &mut Vec<NodeId>, out: &mut Vec<Vec<NodeId>>, g: &Aig, root: NodeId) {
        if !subset.is_empty() && separates(g, root, subset) {
            out.push(subset.clone());
        }
        if subset.len() == k {
            return;
        }
        for i in start..c.len() {
            subset.push(c[i]);
            rec(c, i + 1, k, subset, out, g, root);
            subset.pop();
        }
    }
    rec(&candidates, 0, k, &mut subset, &mut valid, g, root);
    let is_subset = |a: &[NodeId], b: &[NodeId]| a.len() < b.len() && a.iter().all(|x| b.contains(x));
    valid.iter().filter(|l| !valid.iter().any(|m| is_subset(m, l))).cloned().collect()
}

/// Function of `root` over `leaves` (leaf i is bit i of the row).
pub fn cone_function(g: &Aig, root: NodeId, leaves: &[NodeId]) -> u64 {
    let mut bits = 0u64;
    for row in 0..1usize << leaves.len() {
        let mut memo: HashMap<NodeId, bool> = HashMap::new();
        for (i, &l) in leaves.iter().enumerate() {
            memo.insert(l, (row >> i) & 1 == 1);
        }
        fn val(g: &Aig, x: NodeId, memo: &mut HashMap<NodeId, bool>) -> bool {
            if let Some(&b) = memo.get(&x) {
                return b;
            }
            let n = g.node(x);
            let a = val(g, n.fanin0.node, memo) ^ n.fanin0.complemented;
            let b = val(g, n.fanin1.node, memo) ^ n.fanin1.complemented;
            memo.insert(x, a && b);
            a && b
        }
        if val(g, root, &mut memo) {
            bits |= 1 << row;
        }
    }
    bits
}

/// Three inputs and seven ANDs with reconvergence and both polarities.
pub fn probe10() -> Aig {
    let mut b = AigBuilder::new("probe10");
    let x: Vec<_> = (0..3).map(|_| b.add_input()).collect();
    let n1 = b.add_and(x[0], x[1]);
    let n2 = b.add_and(!x[1], x[2]);
    let n3 = b.add_and(n1, !n2);
    let n4 = b.add_and(!n1, x[2]);
    let n5 = b.add_and(n3, n4);
    let n6 = b.add_and(!n3, !n4);
    let n7 = b.add_and(n5, !n6);
    b.add_output(n7);
    b.add_output(!n6);
    b.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probe_has_ten_nodes_besides_the_constant() {
        let g = probe10();
        assert_eq!((g.num_inputs(), g.num_ands()), (3, 7));
    }

    #[test]
    fn brute_force_cuts_of_a_two_level_tree() {
        let mut b = AigBuilder::new("t");
        let x: Vec<_> = (0..3).map(|_| b.add_input()).collect();
        let n = b.add_and(x[0], x[1]);
        let r = b.add_and(n, x[2]);
        b.add_output(r);
        let g = b.finish();
        let cuts = brute_force_cuts(&g, r.node, 3);
        let want: BTreeSet<Vec<NodeId>> = [vec![r.node], vec![x[2].node, n.node], vec![x[0].node, x[1].node, x[2].node]].into();
        assert_eq!(cuts, want);
        assert_eq!(cone_function(&g, r.node, &[x[0].node, x[1].node, x[2].node]), 0x80);
    }

    #[test]
    fn row_evaluation_matches_and_semantics() {
        let g = probe10();
        for row in 0..8 {
            let v = eval_aig_row(&g, row);
            for id in g.and_nodes() {
                let n = g.node(id);
                let want = (v[n.fanin0.node as usize] ^ n.fanin0.complemented) && (v[n.fanin1.node as usize] ^ n.fanin1.complemented);
                assert_eq!(v[id as usize], want);
            }
        }
    }
}
