// SPDX-License-Identifier: Apache-2.0

//! k-feasible priority cuts.
//!
//! Cuts are built in topological order by merging the cut sets of the two
//! fanins. Each node keeps its trivial cut plus at most `c_limit` non-dominated
//! cuts, ranked by leaf count and then lexicographically by leaves.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::aig::{Aig, NodeId, NodeKind};
use crate::library::{TruthTable, K_MAX};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cut {
    pub root: NodeId,
    /// Ascending, duplicate-free.
    pub leaves: Vec<NodeId>,
    /// Function of the root over the leaves, leaf `i` being variable `i`.
    pub table: TruthTable,
}

impl Cut {
    pub fn trivial(root: NodeId) -> Self {
        Self { root, leaves: vec![root], table: TruthTable::var(0, 1) }
    }

    pub fn is_trivial(&self) -> bool {
        self.leaves.len() == 1 && self.leaves[0] == self.root
    }

    pub fn size(&self) -> usize {
        self.leaves.len()
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CutParams {
    /// Maximum leaves per cut.
    pub k: usize,
    /// Non-trivial cuts kept per node; `usize::MAX` keeps all.
    pub c_limit: usize,
}

impl Default for CutParams {
    fn default() -> Self {
        Self { k: 4, c_limit: 8 }
    }
}

impl CutParams {
    pub fn unbounded(k: usize) -> Self {
        Self { k, c_limit: usize::MAX }
    }
}

/// Per-node cut lists; the trivial cut is always first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CutSets {
    sets: Vec<Vec<Cut>>,
}

impl CutSets {
    pub fn get(&self, node: NodeId) -> &[Cut] {
        &self.sets[node as usize]
    }

    pub fn num_nodes(&self) -> usize {
        self.sets.len()
    }

    pub fn total_cuts(&self) -> usize {
        self.sets.iter().map(Vec::len).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Cut> {
        self.sets.iter().flatten()
    }

    /// One line per cut: `root leaf1 leaf2 ... : hex-table`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for cut in self.iter() {
            write!(out, "{}", cut.root).unwrap();
            for l in &cut.leaves {
                write!(out, " {l}").unwrap();
            }
            writeln!(out, " : {}", cut.table.to_hex()).unwrap();
        }
        out
    }
}

pub fn dominates(a: &Cut, b: &Cut) -> bool {
    a.leaves.len() < b.leaves.len() && is_subset(&a.leaves, &b.leaves)
}

fn is_subset(small: &[NodeId], big: &[NodeId]) -> bool {
    let mut j = 0;
    for &x in small {
        while j < big.len() && big[j] < x {
            j += 1;
        }
        if j == big.len() || big[j] != x {
            return false;
        }
        j += 1;
    }
    true
}

fn merge_leaves(a: &[NodeId], b: &[NodeId], k: usize) -> Option<Vec<NodeId>> {
    let mut out = Vec::with_capacity(k);
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let next = if j == b.len() || (i < a.len() && a[i] < b[j]) {
            i += 1;
            a[i - 1]
        } else if i == a.len() || b[j] < a[i] {
            j += 1;
            b[j - 1]
        } else {
            i += 1;
            j += 1;
            a[i - 1]
        };
        if out.len() == k {
            return None;
        }
        out.push(next);
    }
    Some(out)
}

fn positions(sub: &[NodeId], sup: &[NodeId]) -> Vec<usize> {
    sub.iter().map(|l| sup.binary_search(l).unwrap()).collect()
}

pub fn enumerate_cuts(g: &Aig, params: CutParams) -> CutSets {
    assert!(params.k >= 1 && params.k <= K_MAX, "cut size must be within 1..={K_MAX}");
    assert!(params.c_limit >= 1);
    let mut sets: Vec<Vec<Cut>> = Vec::with_capacity(g.num_nodes());
    for id in g.node_ids() {
        if g.kind(id) != NodeKind::And {
            sets.push(vec![Cut::trivial(id)]);
            continue;
        }
        let [e0, e1] = g.fanins(id);
        let mut candidates: Vec<Cut> = Vec::new();
        for c0 in &sets[e0.node as usize] {
            for c1 in &sets[e1.node as usize] {
                let Some(leaves) = merge_leaves(&c0.leaves, &c1.leaves, params.k) else {
                    continue;
                };
                if candidates.iter().any(|c| c.leaves == leaves) {
                    continue;
                }
                let n = leaves.len();
                let mut t0 = c0.table.expand(&positions(&c0.leaves, &leaves), n);
                let mut t1 = c1.table.expand(&positions(&c1.leaves, &leaves), n);
                if e0.complemented {
                    t0 = !t0;
                }
                if e1.complemented {
                    t1 = !t1;
                }
                candidates.push(Cut { root: id, leaves, table: t0 & t1 });
            }
        }
        let mut kept: Vec<Cut> = candidates.iter().filter(|c| !candidates.iter().any(|d| dominates(d, c))).cloned().collect();
        kept.sort_by(|a, b| a.leaves.len().cmp(&b.leaves.len()).then_with(|| a.leaves.cmp(&b.leaves)));
        kept.truncate(params.c_limit);
        let mut set = Vec::with_capacity(kept.len() + 1);
        set.push(Cut::trivial(id));
        set.extend(kept);
        sets.push(set);
    }
    CutSets { sets }
}

/// True iff every path from a primary input to `root` passes through a leaf.
pub fn is_valid_cut(g: &Aig, root: NodeId, leaves: &[NodeId]) -> bool {
    let mut seen = vec![false; g.num_nodes()];
    let mut stack = vec![root];
    while let Some(n) = stack.pop() {
        if seen[n as usize] {
            continue;
        }
        seen[n as usize] = true;
        if leaves.contains(&n) {
            continue;
        }
        match g.kind(n) {
            NodeKind::Input => return false,
            NodeKind::Const0 => {}
            NodeKind::And => stack.extend(g.fanins(n).map(|e| e.node)),
        }
    }
    true
}

/// Function of `root` over `leaves` (ascending) by evaluating the cone.
/// Returns `None` when the leaves do not form a valid cut.
pub fn cut_truth_table(g: &Aig, root: NodeId, leaves: &[NodeId]) -> Option<TruthTable> {
    if !is_valid_cut(g, root, leaves) {
        return None;
    }
    let k = leaves.len();
    let mut memo: Vec<Option<TruthTable>> = vec![None; g.num_nodes()];
    for (i, &l) in leaves.iter().enumerate() {
        memo[l as usize] = Some(TruthTable::var(i, k));
    }
    let mut stack = vec![root];
    while let Some(&n) = stack.last() {
        if memo[n as usize].is_some() {
            stack.pop();
            continue;
        }
        match g.kind(n) {
            NodeKind::Const0 => {
                memo[n as usize] = Some(TruthTable::zero(k));
                stack.pop();
            }
            NodeKind::Input => unreachable!("validity checked above"),
            NodeKind::And => {
                let [a, b] = g.fanins(n);
                match (memo[a.node as usize], memo[b.node as usize]) {
                    (Some(ta), Some(tb)) => {
                        let ta = if a.complemented { !ta } else { ta };
                        let tb = if b.complemented { !tb } else { tb };
                        memo[n as usize] = Some(ta & tb);
                        stack.pop();
                    }
                    (ta, tb) => {
                        if ta.is_none() {
                            stack.push(a.node);
                        }
                        if tb.is_none() {
                            stack.push(b.node);
                        }
                    }
                }
            }
        }
    }
    memo[root as usize]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aig::{generate_random_aig, AigBuilder};

    fn and2() -> Aig {
        let mut b = AigBuilder::new("and2");
        let x = b.add_input();
        let y = b.add_input();
        let z = b.add_and(x, y);
        b.add_output(z);
        b.finish()
    }

    fn cut(leaves: &[NodeId]) -> Cut {
        Cut { root: 99, leaves: leaves.to_vec(), table: TruthTable::zero(0) }
    }

    #[test]
    fn and2_cuts() {
        let g = and2();
        let cs = enumerate_cuts(&g, CutParams::default());
        let leaves: Vec<_> = cs.get(3).iter().map(|c| c.leaves.clone()).collect();
        assert_eq!(leaves, vec![vec![3], vec![1, 2]]);
        assert_eq!(cs.get(3)[1].table.bits(), 0b1000);
        assert_eq!(cs.get(1), &[Cut::trivial(1)]);
        assert_eq!(cs.get(0), &[Cut::trivial(0)]);
    }

    #[test]
    fn chain_respects_k() {
        let mut b = AigBuilder::new("chain");
        let a = b.add_input();
        let bb = b.add_input();
        let c = b.add_input();
        let n1 = b.add_and(a, bb);
        let n2 = b.add_and(n1, c);
        b.add_output(n2);
        let g = b.finish();
        let cs = enumerate_cuts(&g, CutParams { k: 2, c_limit: usize::MAX });
        let leaves: Vec<_> = cs.get(5).iter().map(|c| c.leaves.clone()).collect();
        assert!(leaves.contains(&vec![3, 4]));
        assert!(!leaves.contains(&vec![1, 2, 3]));
    }

    #[test]
    fn validity_examples() {
        let g = and2();
        assert!(is_valid_cut(&g, 3, &[3]));
        assert!(is_valid_cut(&g, 3, &[1, 2]));
        assert!(!is_valid_cut(&g, 3, &[1]));
    }

    #[test]
    fn truth_table_examples() {
        let g = and2();
        assert_eq!(cut_truth_table(&g, 3, &[1, 2]).unwrap().bits(), 0b1000);
        assert_eq!(cut_truth_table(&g, 3, &[3]).unwrap().bits(), 0b10);
        assert_eq!(cut_truth_table(&g, 3, &[1]), None);
    }

    #[test]
    fn dominance_examples() {
        assert!(dominates(&cut(&[1, 2]), &cut(&[1, 2, 3])));
        assert!(!dominates(&cut(&[1, 3]), &cut(&[1, 2])));
        assert!(!dominates(&cut(&[1, 2]), &cut(&[1, 2])));
    }

    #[test]
    fn enumerated_cuts_are_sound_and_undominated() {
        for seed in 0..100 {
            let g = generate_random_aig(seed, 6, 60);
            let cs = enumerate_cuts(&g, CutParams::default());
            for id in g.node_ids() {
                let set = cs.get(id);
                assert!(set[0].is_trivial());
                assert!(set.len() <= 9);
                for c in set {
                    assert!(is_valid_cut(&g, id, &c.leaves));
                    assert!(c.leaves.windows(2).all(|w| w[0] < w[1]));
                    assert_eq!(cut_truth_table(&g, id, &c.leaves), Some(c.table));
                }
                for a in set {
                    for b in set {
                        assert!(!dominates(a, b));
                    }
                }
            }
        }
    }

    #[test]
    fn enumeration_is_deterministic() {
        let g = generate_random_aig(5, 8, 120);
        let a = enumerate_cuts(&g, CutParams::default()).dump();
        let b = enumerate_cuts(&g, CutParams::default()).dump();
        assert_eq!(a, b);
        assert!(a.lines().next().unwrap().ends_with(": 2"));
    }
}
