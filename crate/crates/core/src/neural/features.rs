// SPDX-License-Identifier: Apache-2.0

//! Fixed-layout inputs: per-node features, node-type labels, and library features.

use std::collections::BTreeSet;

use crate::aig::{Aig, NodeId, NodeKind};
use crate::library::{npn_canonical, Library};

/// Per-node input width: kind one-hot (3), complemented and plain fanin
/// counts, and log-scaled complemented and plain fanout counts.
pub const NODE_FEATURES: usize = 7;

/// Library feature width, see [`featurize_library`].
pub const LIBRARY_FEATURES: usize = 10;

/// Node classes predicted by the functional head.
pub const NODE_CLASSES: usize = 4;

/// A directed AIG edge from fanin `src` to `dst`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct GraphEdge {
    pub src: NodeId,
    pub dst: NodeId,
    pub complemented: bool,
}

pub fn graph_edges(g: &Aig) -> Vec<GraphEdge> {
    g.edges().into_iter().map(|(src, dst, complemented)| GraphEdge { src, dst, complemented }).collect()
}

/// Row-major `num_nodes × NODE_FEATURES` features over the given edges.
/// Output references count as fanouts.
pub fn node_features(g: &Aig, edges: &[GraphEdge]) -> Vec<f64> {
    let n = g.num_nodes();
    let mut fanin = vec![[0.0f64; 2]; n];
    let mut fanout = vec![[0.0f64; 2]; n];
    for e in edges {
        let p = usize::from(e.complemented);
        fanin[e.dst as usize][p] += 1.0;
        fanout[e.src as usize][p] += 1.0;
    }
    for o in g.outputs() {
        fanout[o.node as usize][usize::from(o.complemented)] += 1.0;
    }
    let mut out = Vec::with_capacity(n * NODE_FEATURES);
    for id in g.node_ids() {
        let kind = match g.kind(id) {
            NodeKind::Const0 => [1.0, 0.0, 0.0],
            NodeKind::Input => [0.0, 1.0, 0.0],
            NodeKind::And => [0.0, 0.0, 1.0],
        };
        let i = id as usize;
        out.extend_from_slice(&kind);
        out.extend_from_slice(&[fanin[i][1], fanin[i][0], fanout[i][1].ln_1p(), fanout[i][0].ln_1p()]);
    }
    out
}

/// 0 constant, 1 input, 2 AND with plain fanins, 3 AND with a complemented fanin.
pub fn node_type_labels(g: &Aig) -> Vec<usize> {
    g.node_ids()
        .map(|id| match g.kind(id) {
            NodeKind::Const0 => 0,
            NodeKind::Input => 1,
            NodeKind::And => {
                if g.fanins(id).iter().any(|e| e.complemented) {
                    3
                } else {
                    2
                }
            }
        })
        .collect()
}

/// `[cell count, max fanin, ln min / ln mean / ln max pin delay,
/// min / mean / max area, inverter delay, distinct NPN classes]`, unstandardized.
pub fn featurize_library(lib: &Library) -> Vec<f64> {
    let delays: Vec<f64> = lib.cells.iter().flat_map(|c| c.pins.iter().map(|p| p.delay())).collect();
    let areas: Vec<f64> = lib.cells.iter().map(|c| c.area).collect();
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let log = |x: f64| x.max(1e-3).ln();
    let classes: BTreeSet<_> = lib.cells.iter().map(|c| npn_canonical(c.truth_table()).0).collect();
    vec![
        lib.cells.len() as f64,
        lib.cells.iter().map(|c| c.fanin()).max().unwrap_or(0) as f64,
        log(min(&delays)),
        log(mean(&delays)),
        log(max(&delays)),
        min(&areas),
        mean(&areas),
        max(&areas),
        lib.inverter_delay(),
        classes.len() as f64,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aig::AigBuilder;
    use crate::library::parse_genlib;

    #[test]
    fn inverter_only_library() {
        let lib = parse_genlib("GATE inv1 1 O=!a; PIN a INV 1 999 10 0 10 0\nGATE nand2 2 O=!(a*b); PIN * INV 1 999 20 0 20 0").unwrap();
        let inv_only = Library::unchecked("inv", vec![lib.cells[0].clone()], 0);
        let f = featurize_library(&inv_only);
        assert_eq!(f[0], 1.0);
        assert_eq!(f[1], 1.0);
        assert_eq!(featurize_library(&lib), featurize_library(&lib));
    }

    #[test]
    fn bundled_library_statistics() {
        let f = featurize_library(&Library::bundled());
        // 31 pins with delays summing to 6400 ps; 12 areas summing to 36.
        let expect = [12.0, 4.0, 60f64.ln(), (6400.0f64 / 31.0).ln(), 320f64.ln(), 1.0, 3.0, 5.0, 60.0, 7.0];
        assert_eq!(f.len(), LIBRARY_FEATURES);
        for (a, b) in f.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12, "{f:?}");
        }
    }

    #[test]
    fn node_features_and_labels() {
        let mut b = AigBuilder::new("t");
        let x = b.add_input();
        let y = b.add_input();
        let z = b.add_and(x, !y);
        let w = b.add_and(z, x);
        b.add_output(!w);
        let g = b.finish();
        assert_eq!(node_type_labels(&g), vec![0, 1, 1, 3, 2]);
        let f = node_features(&g, &graph_edges(&g));
        assert_eq!(f.len(), 5 * NODE_FEATURES);
        // node 3: one complemented and one plain fanin, one plain fanout
        assert_eq!(&f[3 * NODE_FEATURES..4 * NODE_FEATURES], &[0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 2f64.ln()]);
        // node 4 drives a complemented output
        assert_eq!(f[4 * NODE_FEATURES + 5], 2f64.ln());
    }
}
