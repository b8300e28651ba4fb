// SPDX-License-Identifier: Apache-2.0

//! Forward computations recorded on a [`Tape`].

use std::cmp::Ordering;
use std::rc::Rc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::features::{graph_edges, node_features, node_type_labels, GraphEdge, NODE_FEATURES};
use super::params::Bound;
use super::tape::{Matrix, Tape, Var};
use crate::aig::{Aig, NodeId};
use crate::error::ModelError;

/// Node embeddings of both views and their concatenation.
pub struct NodeEmbedding {
    pub hs: Var,
    pub hf: Var,
    pub h: Var,
}

fn linear(t: &mut Tape, b: &Bound, x: Var, w: &str, bias: &str) -> Var {
    let y = t.matmul(x, b.var(w));
    t.add_row(y, b.var(bias))
}

/// Rows of the AIG grouped by level for level-wise message passing.
struct LevelPlan {
    /// Node ids per level, ascending.
    levels: Vec<Vec<NodeId>>,
    /// Incoming edges per level.
    edges: Vec<Vec<GraphEdge>>,
}

impl LevelPlan {
    fn new(g: &Aig, edges: &[GraphEdge]) -> Self {
        let lv = g.levels();
        let depth = lv.iter().copied().max().unwrap_or(0) as usize;
        let mut levels = vec![Vec::new(); depth + 1];
        for id in g.node_ids() {
            levels[lv[id as usize] as usize].push(id);
        }
        let mut per_level = vec![Vec::new(); depth + 1];
        for e in edges {
            per_level[lv[e.dst as usize] as usize].push(*e);
        }
        Self { levels, edges: per_level }
    }
}

fn encode_view(t: &mut Tape, b: &Bound, prefix: &str, x: Var, plan: &LevelPlan, n: usize) -> Var {
    let name = |s: &str| format!("{prefix}.{s}");
    let h0 = linear(t, b, x, &name("w_in"), &name("b_in"));
    let mut h = t.tanh(h0);
    for _round in 0..2 {
        // row of every already-updated node inside the concatenation of blocks
        let mut row_of = vec![usize::MAX; n];
        let mut blocks = Vec::with_capacity(plan.levels.len());
        let mut rows = 0;
        for (level, ids) in plan.levels.iter().enumerate() {
            let idx = Rc::new(ids.iter().map(|&i| i as usize).collect::<Vec<_>>());
            let block = if level == 0 {
                t.gather_rows(h, idx)
            } else {
                let prev = t.gather_rows(h, idx);
                let mut pre = t.matmul(prev, b.var(&name("w_self")));
                let edges = &plan.edges[level];
                if !edges.is_empty() {
                    let big = if blocks.len() == 1 { blocks[0] } else { t.concat_rows(&blocks) };
                    let src = Rc::new(edges.iter().map(|e| row_of[e.src as usize]).collect::<Vec<_>>());
                    let local: Vec<usize> = edges.iter().map(|e| ids.binary_search(&e.dst).unwrap()).collect();
                    let pol = t.leaf(Matrix::from_vec(edges.len(), 1, edges.iter().map(|e| f64::from(u8::from(e.complemented))).collect()));
                    let src_h = t.gather_rows(big, src);
                    let msg = t.matmul(src_h, b.var(&name("w_msg")));
                    let pol_msg = t.matmul(pol, b.var(&name("w_pol")));
                    let msg = t.add(msg, pol_msg);
                    let agg = t.scatter_add_rows(msg, Rc::new(local), ids.len(), None);
                    pre = t.add(pre, agg);
                }
                let pre = t.add_row(pre, b.var(&name("b")));
                t.tanh(pre)
            };
            for (k, &id) in ids.iter().enumerate() {
                row_of[id as usize] = rows + k;
            }
            rows += ids.len();
            blocks.push(block);
        }
        let full = if blocks.len() == 1 { blocks[0] } else { t.concat_rows(&blocks) };
        h = t.gather_rows(full, Rc::new(row_of));
    }
    h
}

/// Two rounds of level-wise message passing over `edges` (a subset of the
/// graph's edges), separately for the structural and the functional view.
pub fn aig_encode(t: &mut Tape, b: &Bound, g: &Aig, edges: &[GraphEdge]) -> NodeEmbedding {
    let n = g.num_nodes();
    let x = t.leaf(Matrix::from_vec(n, NODE_FEATURES, node_features(g, edges)));
    let plan = LevelPlan::new(g, edges);
    let hs = encode_view(t, b, "enc_s", x, &plan, n);
    let hf = encode_view(t, b, "enc_f", x, &plan, n);
    let h = t.concat_cols(&[hs, hf]);
    NodeEmbedding { hs, hf, h }
}

/// Ordered pairs `(i, j)` of distinct AIG neighbors, ignoring edge direction.
pub fn neighbor_pairs(g: &Aig) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(usize, usize)> = graph_edges(g)
        .iter()
        .flat_map(|e| [(e.dst as usize, e.src as usize), (e.src as usize, e.dst as usize)])
        .filter(|(a, b)| a != b)
        .collect();
    pairs.sort_unstable();
    pairs.dedup();
    pairs
}

/// Attention layers over the undirected neighborhood, each adding
/// `tanh(W_o · Σ_j α_ij W_v h_j)` to the node state. Returns the final states
/// and each layer's attention weights (one per neighbor pair).
pub fn gat_contextualize(t: &mut Tape, b: &Bound, h: Var, g: &Aig) -> (Var, Vec<Var>) {
    let pairs = neighbor_pairs(g);
    let mut attention = Vec::new();
    if pairs.is_empty() {
        return (h, attention);
    }
    let n = g.num_nodes();
    let w = b.config().width();
    let ii = Rc::new(pairs.iter().map(|p| p.0).collect::<Vec<_>>());
    let jj = Rc::new(pairs.iter().map(|p| p.1).collect::<Vec<_>>());
    let ones = t.leaf(Matrix::filled(1, w, 1.0));
    let mut z = h;
    for l in 0..b.config().n_gat_layers {
        let v = |s: &str| b.var(&format!("gat{l}.{s}"));
        let hl = t.matmul(z, v("w_l"));
        let hr = t.matmul(z, v("w_r"));
        let hv = t.matmul(z, v("w_v"));
        let left = t.gather_rows(hl, ii.clone());
        let right = t.gather_rows(hr, jj.clone());
        let sum = t.add(left, right);
        let act = t.tanh(sum);
        let score = t.matmul(act, v("a"));
        let alpha = t.segment_softmax(score, ii.clone(), n);
        attention.push(alpha);
        let wide = t.matmul(alpha, ones);
        let vals = t.gather_rows(hv, jj.clone());
        let msg = t.mul(wide, vals);
        let agg = t.scatter_add_rows(msg, ii.clone(), n, None);
        let out = t.matmul(agg, v("w_o"));
        let out = t.tanh(out);
        z = t.add(z, out);
    }
    (z, attention)
}

/// Orders tokens by value so that the result does not depend on leaf order.
fn sorted_leaves(z: &Matrix, leaves: &[NodeId]) -> Vec<NodeId> {
    let mut v = leaves.to_vec();
    v.sort_by(|&a, &b| {
        let (ra, rb) = (z.row(a as usize), z.row(b as usize));
        ra.iter().zip(rb).map(|(x, y)| x.total_cmp(y)).find(|o| *o != Ordering::Equal).unwrap_or(Ordering::Equal)
    });
    v
}

fn head_indicator(w: usize, heads: usize) -> Matrix {
    let dh = w / heads;
    let mut m = Matrix::zeros(w, heads);
    for c in 0..w {
        m.data[c * heads + c / dh] = 1.0;
    }
    m
}

fn transpose(m: &Matrix) -> Matrix {
    let mut t = Matrix::zeros(m.cols, m.rows);
    for r in 0..m.rows {
        for c in 0..m.cols {
            t.data[c * m.rows + r] = m.get(r, c);
        }
    }
    t
}

/// Transformer blocks over each cut's leaf tokens (no positional encoding),
/// then the mean over tokens: one `width`-wide row per cut.
pub fn cut_embed(t: &mut Tape, b: &Bound, z: Var, cuts: &[&[NodeId]]) -> Result<Var, ModelError> {
    if cuts.iter().any(|c| c.is_empty()) {
        return Err(ModelError::EmptyCut);
    }
    let cfg = b.config();
    let (w, heads) = (cfg.width(), cfg.n_heads);
    let zv = t.value(z).clone();
    let mut token_node = Vec::new();
    let mut token_cut = Vec::new();
    let mut weights = Vec::new();
    let mut pi = Vec::new();
    let mut pj = Vec::new();
    for (c, leaves) in cuts.iter().enumerate() {
        let start = token_node.len();
        for l in sorted_leaves(&zv, leaves) {
            token_node.push(l as usize);
            token_cut.push(c);
            weights.push(1.0 / leaves.len() as f64);
        }
        for i in start..token_node.len() {
            for j in start..token_node.len() {
                pi.push(i);
                pj.push(j);
            }
        }
    }
    let n_tokens = token_node.len();
    let (pi, pj) = (Rc::new(pi), Rc::new(pj));
    let ind = head_indicator(w, heads);
    let e = t.leaf(ind.clone());
    let et = t.leaf(transpose(&ind));
    let inv_sqrt = 1.0 / ((w / heads) as f64).sqrt();
    let mut x = t.gather_rows(z, Rc::new(token_node));
    for blk in 0..cfg.n_tx_blocks {
        let v = |s: &str| b.var(&format!("tx{blk}.{s}"));
        let q = t.matmul(x, v("wq"));
        let k = t.matmul(x, v("wk"));
        let val = t.matmul(x, v("wv"));
        let qp = t.gather_rows(q, pi.clone());
        let kp = t.gather_rows(k, pj.clone());
        let prod = t.mul(qp, kp);
        let scores = t.matmul(prod, e);
        let scores = t.scale(scores, inv_sqrt);
        let alpha = t.segment_softmax(scores, pi.clone(), n_tokens);
        let wide = t.matmul(alpha, et);
        let vp = t.gather_rows(val, pj.clone());
        let msg = t.mul(wide, vp);
        let att = t.scatter_add_rows(msg, pi.clone(), n_tokens, None);
        let o = linear(t, b, att, &format!("tx{blk}.wo"), &format!("tx{blk}.bo"));
        let r1 = t.add(x, o);
        let n1 = t.layer_norm(r1);
        let n1 = t.mul_row(n1, v("ln1_g"));
        let x1 = t.add_row(n1, v("ln1_b"));
        let f = linear(t, b, x1, &format!("tx{blk}.w1"), &format!("tx{blk}.b1"));
        let f = t.gelu(f);
        let f = linear(t, b, f, &format!("tx{blk}.w2"), &format!("tx{blk}.b2"));
        let r2 = t.add(x1, f);
        let n2 = t.layer_norm(r2);
        let n2 = t.mul_row(n2, v("ln2_g"));
        x = t.add_row(n2, v("ln2_b"));
    }
    Ok(t.scatter_add_rows(x, Rc::new(token_cut), cuts.len(), Some(Rc::new(weights))))
}

/// Two-layer MLP over standardized library features: a `1 × d_p` row.
pub fn pm_encode(t: &mut Tape, b: &Bound, standardized: &[f64]) -> Var {
    let x = t.leaf(Matrix::from_vec(1, standardized.len(), standardized.to_vec()));
    let h = linear(t, b, x, "pm.w1", "pm.b1");
    let h = t.tanh(h);
    linear(t, b, h, "pm.w2", "pm.b2")
}

/// Class logits per cut from cut embeddings and (optionally) the technology embedding.
pub fn classify_cut(t: &mut Tape, b: &Bound, e_c: Var, e_p: Var) -> Var {
    let rows = t.value(e_c).rows;
    let input = if b.config().use_tech_embedding {
        let ep = t.gather_rows(e_p, Rc::new(vec![0; rows]));
        t.concat_cols(&[e_c, ep])
    } else {
        e_c
    };
    let h = linear(t, b, input, "cls.w1", "cls.b1");
    let h = t.gelu(h);
    linear(t, b, h, "cls.w2", "cls.b2")
}

/// Edge-existence logits for node pairs from structural embeddings.
pub fn edge_scores(t: &mut Tape, b: &Bound, hs: Var, pairs: &[(usize, usize)]) -> Var {
    let u = t.gather_rows(hs, Rc::new(pairs.iter().map(|p| p.0).collect()));
    let v = t.gather_rows(hs, Rc::new(pairs.iter().map(|p| p.1).collect()));
    let x = t.concat_cols(&[u, v]);
    let h = linear(t, b, x, "ms.w1", "ms.b1");
    let h = t.tanh(h);
    linear(t, b, h, "ms.w2", "ms.b2")
}

pub fn node_type_logits(t: &mut Tape, b: &Bound, hf: Var) -> Var {
    linear(t, b, hf, "mf.w", "mf.b")
}

/// Masked edges (label 1) and sampled non-edges (label 0) for one pass.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeMask {
    /// Edges kept for message passing.
    pub kept: Vec<GraphEdge>,
    pub pairs: Vec<(usize, usize)>,
    pub labels: Vec<f64>,
}

pub fn sample_edge_mask(g: &Aig, mask_fraction: f64, neg_ratio: f64, seed: u64) -> EdgeMask {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = graph_edges(g);
    edges.sort();
    if edges.is_empty() {
        return EdgeMask { kept: edges, pairs: Vec::new(), labels: Vec::new() };
    }
    let n_mask = ((edges.len() as f64 * mask_fraction).round() as usize).clamp(1, edges.len());
    let mut order: Vec<usize> = (0..edges.len()).collect();
    order.shuffle(&mut rng);
    let mut masked = vec![false; edges.len()];
    for &i in &order[..n_mask] {
        masked[i] = true;
    }
    let mut pairs = Vec::new();
    let mut labels = Vec::new();
    let mut kept = Vec::new();
    for (e, m) in edges.iter().zip(&masked) {
        if *m {
            pairs.push((e.src as usize, e.dst as usize));
            labels.push(1.0);
        } else {
            kept.push(*e);
        }
    }
    let ands: Vec<NodeId> = g.and_nodes().collect();
    let n_neg = (n_mask as f64 * neg_ratio).round() as usize;
    let mut tries = 0;
    while labels.len() < n_mask + n_neg && tries < 100 * (n_neg + 1) {
        tries += 1;
        let v = ands[rng.random_range(0..ands.len())];
        let u = rng.random_range(0..v);
        if g.fanins(v).iter().any(|e| e.node == u) {
            continue;
        }
        pairs.push((u as usize, v as usize));
        labels.push(0.0);
    }
    EdgeMask { kept, pairs, labels }
}

/// Pre-training losses of one pass: `(L_s, L_f, L_p)`.
pub struct PretrainLosses {
    pub ls: Var,
    pub lf: Var,
    pub lp: Var,
}

pub fn pretrain_losses(t: &mut Tape, b: &Bound, g: &Aig, mask: &EdgeMask, alpha: f64, beta: f64) -> PretrainLosses {
    let emb = aig_encode(t, b, g, &mask.kept);
    let ls = if mask.pairs.is_empty() {
        t.leaf(Matrix::zeros(1, 1))
    } else {
        let logits = edge_scores(t, b, emb.hs, &mask.pairs);
        t.bce_with_logits(logits, Rc::new(mask.labels.clone()))
    };
    let logits = node_type_logits(t, b, emb.hf);
    let lf = t.cross_entropy(logits, Rc::new(node_type_labels(g)));
    let a = t.scale(ls, alpha);
    let f = t.scale(lf, beta);
    let lp = t.add(a, f);
    PretrainLosses { ls, lf, lp }
}

/// Path-aware node contexts `z` of the whole graph.
pub fn node_contexts(t: &mut Tape, b: &Bound, g: &Aig) -> Var {
    let emb = aig_encode(t, b, g, &graph_edges(g));
    gat_contextualize(t, b, emb.h, g).0
}

/// Logits for `cuts` of `g` with gradients flowing through every module.
pub fn cut_logits(t: &mut Tape, b: &Bound, g: &Aig, standardized_tech: &[f64], cuts: &[&[NodeId]]) -> Result<Var, ModelError> {
    let z = node_contexts(t, b, g);
    let e_c = cut_embed(t, b, z, cuts)?;
    let e_p = pm_encode(t, b, standardized_tech);
    Ok(classify_cut(t, b, e_c, e_p))
}
