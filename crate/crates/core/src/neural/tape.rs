// SPDX-License-Identifier: Apache-2.0

//! Dense row-major matrices and a reverse-mode tape over them.

use std::rc::Rc;

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn filled(rows: usize, cols: usize, v: f64) -> Self {
        Self { rows, cols, data: vec![v; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data has the wrong length");
        Self { rows, cols, data }
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Index of the largest entry in row `r`, first on ties.
    pub fn argmax_row(&self, r: usize) -> usize {
        let row = self.row(r);
        let mut best = 0;
        for (i, &x) in row.iter().enumerate() {
            if x > row[best] {
                best = i;
            }
        }
        best
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let o = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                for (x, &b) in o.iter_mut().zip(other.row(k)) {
                    *x += a * b;
                }
            }
        }
        out
    }

    /// `selfᵀ · other`.
    fn t_matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.rows, other.rows);
        let mut out = Matrix::zeros(self.cols, other.cols);
        for r in 0..self.rows {
            let b = other.row(r);
            for (i, &a) in self.row(r).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (x, &bv) in out.row_mut(i).iter_mut().zip(b) {
                    *x += a * bv;
                }
            }
        }
        out
    }

    /// `self · otherᵀ`.
    fn matmul_t(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.cols);
        let mut out = Matrix::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            let a = self.row(i);
            for j in 0..other.rows {
                out.data[i * other.rows + j] = a.iter().zip(other.row(j)).map(|(x, y)| x * y).sum();
            }
        }
        out
    }

    fn add_assign(&mut self, other: &Matrix) {
        assert_eq!(self.shape(), other.shape());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| f(x)).collect() }
    }
}

/// Handle to a value recorded on a [`Tape`].
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct Var(pub usize);

const LN_EPS: f64 = 1e-5;
const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2 / pi)

pub fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_C * (x + 0.044715 * x * x * x)).tanh())
}

fn gelu_grad(x: f64) -> f64 {
    let u = GELU_C * (x + 0.044715 * x * x * x);
    let t = u.tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * 0.044715 * x * x)
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Mul(Var, Var),
    MulRow(Var, Var),
    Scale(Var, f64),
    Tanh(Var),
    Gelu(Var),
    LayerNorm(Var),
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    SliceCols(Var, usize),
    GatherRows(Var, Rc<Vec<usize>>),
    ScatterAddRows(Var, Rc<Vec<usize>>, Option<Rc<Vec<f64>>>),
    SegmentSoftmax(Var, Rc<Vec<usize>>, usize),
    Mean(Var),
    CrossEntropy(Var, Rc<Vec<usize>>),
    BceWithLogits(Var, Rc<Vec<f64>>),
}

struct Node {
    value: Matrix,
    op: Op,
}

/// Records operations for one forward pass; [`Tape::backward`] returns the
/// gradient of a scalar with respect to every recorded value.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

pub struct Gradients {
    grads: Vec<Option<Matrix>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Matrix> {
        self.grads[v.0].as_ref()
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Matrix, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    pub fn scalar(&self, v: Var) -> f64 {
        let m = self.value(v);
        assert_eq!(m.shape(), (1, 1), "not a scalar");
        m.data[0]
    }

    pub fn leaf(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).matmul(self.value(b));
        self.push(v, Op::MatMul(a, b))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let mut v = self.value(a).clone();
        v.add_assign(self.value(b));
        self.push(v, Op::Add(a, b))
    }

    /// Adds the `1 × n` row `r` to every row of `a`.
    pub fn add_row(&mut self, a: Var, r: Var) -> Var {
        let row = self.value(r);
        assert_eq!((1, self.value(a).cols), row.shape(), "add_row shape mismatch");
        let row = row.data.clone();
        let mut v = self.value(a).clone();
        for chunk in v.data.chunks_mut(row.len().max(1)) {
            for (x, b) in chunk.iter_mut().zip(&row) {
                *x += b;
            }
        }
        self.push(v, Op::AddRow(a, r))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let (x, y) = (self.value(a), self.value(b));
        assert_eq!(x.shape(), y.shape(), "mul shape mismatch");
        let v = Matrix { rows: x.rows, cols: x.cols, data: x.data.iter().zip(&y.data).map(|(p, q)| p * q).collect() };
        self.push(v, Op::Mul(a, b))
    }

    /// Multiplies every row of `a` elementwise by the `1 × n` row `r`.
    pub fn mul_row(&mut self, a: Var, r: Var) -> Var {
        let row = self.value(r);
        assert_eq!((1, self.value(a).cols), row.shape(), "mul_row shape mismatch");
        let row = row.data.clone();
        let mut v = self.value(a).clone();
        for chunk in v.data.chunks_mut(row.len().max(1)) {
            for (x, b) in chunk.iter_mut().zip(&row) {
                *x *= b;
            }
        }
        self.push(v, Op::MulRow(a, r))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let v = self.value(a).map(|x| x * s);
        self.push(v, Op::Scale(a, s))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let v = self.value(a).map(f64::tanh);
        self.push(v, Op::Tanh(a))
    }

    pub fn gelu(&mut self, a: Var) -> Var {
        let v = self.value(a).map(gelu);
        self.push(v, Op::Gelu(a))
    }

    /// Normalizes every row to zero mean and unit variance.
    pub fn layer_norm(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let mut v = x.clone();
        for r in 0..x.rows {
            let row = v.row_mut(r);
            let n = row.len() as f64;
            let mean = row.iter().sum::<f64>() / n;
            let var = row.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / n;
            let inv = 1.0 / (var + LN_EPS).sqrt();
            row.iter_mut().for_each(|y| *y = (*y - mean) * inv);
        }
        self.push(v, Op::LayerNorm(a))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        let rows = self.value(parts[0]).rows;
        let cols: usize = parts.iter().map(|&p| self.value(p).cols).sum();
        let mut v = Matrix::zeros(rows, cols);
        for r in 0..rows {
            let mut off = 0;
            for &p in parts {
                let m = self.value(p);
                assert_eq!(m.rows, rows, "concat_cols row mismatch");
                v.data[r * cols + off..r * cols + off + m.cols].copy_from_slice(m.row(r));
                off += m.cols;
            }
        }
        self.push(v, Op::ConcatCols(parts.to_vec()))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Var {
        let cols = self.value(parts[0]).cols;
        let mut data = Vec::new();
        for &p in parts {
            let m = self.value(p);
            assert_eq!(m.cols, cols, "concat_rows column mismatch");
            data.extend_from_slice(&m.data);
        }
        let rows = data.len() / cols.max(1);
        self.push(Matrix { rows, cols, data }, Op::ConcatRows(parts.to_vec()))
    }

    /// Columns `start..end`.
    pub fn slice_cols(&mut self, a: Var, start: usize, end: usize) -> Var {
        let x = self.value(a);
        let mut v = Matrix::zeros(x.rows, end - start);
        for r in 0..x.rows {
            v.row_mut(r).copy_from_slice(&x.row(r)[start..end]);
        }
        self.push(v, Op::SliceCols(a, start))
    }

    pub fn gather_rows(&mut self, a: Var, index: Rc<Vec<usize>>) -> Var {
        let x = self.value(a);
        let mut v = Matrix::zeros(index.len(), x.cols);
        for (o, &i) in index.iter().enumerate() {
            v.row_mut(o).copy_from_slice(x.row(i));
        }
        self.push(v, Op::GatherRows(a, index))
    }

    /// `out[index[r]] += weight[r] · a[r]` into `n_out` rows.
    pub fn scatter_add_rows(&mut self, a: Var, index: Rc<Vec<usize>>, n_out: usize, weights: Option<Rc<Vec<f64>>>) -> Var {
        let x = self.value(a);
        assert_eq!(index.len(), x.rows);
        let mut v = Matrix::zeros(n_out, x.cols);
        for (r, &o) in index.iter().enumerate() {
            let w = weights.as_ref().map_or(1.0, |w| w[r]);
            for (y, &s) in v.row_mut(o).iter_mut().zip(x.row(r)) {
                *y += w * s;
            }
        }
        self.push(v, Op::ScatterAddRows(a, index, weights))
    }

    /// Softmax over the rows sharing a segment id, independently per column.
    pub fn segment_softmax(&mut self, a: Var, segment: Rc<Vec<usize>>, n_segments: usize) -> Var {
        let x = self.value(a);
        assert_eq!(segment.len(), x.rows);
        let cols = x.cols;
        let mut max = vec![f64::NEG_INFINITY; n_segments * cols];
        for (r, &s) in segment.iter().enumerate() {
            for c in 0..cols {
                max[s * cols + c] = max[s * cols + c].max(x.get(r, c));
            }
        }
        let mut v = Matrix::zeros(x.rows, cols);
        let mut sum = vec![0.0; n_segments * cols];
        for (r, &s) in segment.iter().enumerate() {
            for c in 0..cols {
                let e = (x.get(r, c) - max[s * cols + c]).exp();
                v.data[r * cols + c] = e;
                sum[s * cols + c] += e;
            }
        }
        for (r, &s) in segment.iter().enumerate() {
            for c in 0..cols {
                v.data[r * cols + c] /= sum[s * cols + c];
            }
        }
        self.push(v, Op::SegmentSoftmax(a, segment, n_segments))
    }

    /// Mean of all entries as a `1 × 1` value.
    pub fn mean(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let v = x.data.iter().sum::<f64>() / x.data.len().max(1) as f64;
        self.push(Matrix::from_vec(1, 1, vec![v]), Op::Mean(a))
    }

    /// Mean cross-entropy of row-wise softmax against class targets.
    pub fn cross_entropy(&mut self, logits: Var, targets: Rc<Vec<usize>>) -> Var {
        let x = self.value(logits);
        assert_eq!(targets.len(), x.rows);
        let mut total = 0.0;
        for (r, &t) in targets.iter().enumerate() {
            let row = x.row(r);
            let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + row.iter().map(|y| (y - m).exp()).sum::<f64>().ln();
            total += lse - row[t];
        }
        let v = total / x.rows.max(1) as f64;
        self.push(Matrix::from_vec(1, 1, vec![v]), Op::CrossEntropy(logits, targets))
    }

    /// Mean binary cross-entropy of an `n × 1` logit column against 0/1 targets.
    pub fn bce_with_logits(&mut self, logits: Var, targets: Rc<Vec<f64>>) -> Var {
        let x = self.value(logits);
        assert_eq!((targets.len(), 1), x.shape());
        let total: f64 = x.data.iter().zip(targets.iter()).map(|(&z, &t)| z.max(0.0) - z * t + (-z.abs()).exp().ln_1p()).sum();
        let v = total / x.rows.max(1) as f64;
        self.push(Matrix::from_vec(1, 1, vec![v]), Op::BceWithLogits(logits, targets))
    }

    /// Reverse pass from the scalar `root`.
    pub fn backward(&self, root: Var) -> Gradients {
        assert_eq!(self.value(root).shape(), (1, 1), "backward needs a scalar");
        let mut grads: Vec<Option<Matrix>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[root.0] = Some(Matrix::filled(1, 1, 1.0));
        for i in (0..=root.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            self.propagate(i, &g, &mut grads);
            grads[i] = Some(g);
        }
        Gradients { grads }
    }

    fn propagate(&self, i: usize, g: &Matrix, grads: &mut [Option<Matrix>]) {
        let mut acc = |v: Var, d: Matrix| match &mut grads[v.0] {
            Some(existing) => existing.add_assign(&d),
            slot @ None => *slot = Some(d),
        };
        let out = &self.nodes[i].value;
        match &self.nodes[i].op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                acc(*a, g.matmul_t(self.value(*b)));
                acc(*b, self.value(*a).t_matmul(g));
            }
            Op::Add(a, b) => {
                acc(*a, g.clone());
                acc(*b, g.clone());
            }
            Op::AddRow(a, r) => {
                acc(*a, g.clone());
                let mut dr = Matrix::zeros(1, g.cols);
                for row in g.data.chunks(g.cols.max(1)) {
                    for (x, y) in dr.data.iter_mut().zip(row) {
                        *x += y;
                    }
                }
                acc(*r, dr);
            }
            Op::Mul(a, b) => {
                let (x, y) = (self.value(*a), self.value(*b));
                acc(*a, Matrix { rows: g.rows, cols: g.cols, data: g.data.iter().zip(&y.data).map(|(p, q)| p * q).collect() });
                acc(*b, Matrix { rows: g.rows, cols: g.cols, data: g.data.iter().zip(&x.data).map(|(p, q)| p * q).collect() });
            }
            Op::MulRow(a, r) => {
                let (x, row) = (self.value(*a), self.value(*r));
                let mut da = g.clone();
                let mut dr = Matrix::zeros(1, g.cols);
                for rr in 0..g.rows {
                    for c in 0..g.cols {
                        da.data[rr * g.cols + c] *= row.data[c];
                        dr.data[c] += g.get(rr, c) * x.get(rr, c);
                    }
                }
                acc(*a, da);
                acc(*r, dr);
            }
            Op::Scale(a, s) => acc(*a, g.map(|x| x * s)),
            Op::Tanh(a) => {
                let d = Matrix { rows: g.rows, cols: g.cols, data: g.data.iter().zip(&out.data).map(|(p, y)| p * (1.0 - y * y)).collect() };
                acc(*a, d);
            }
            Op::Gelu(a) => {
                let x = self.value(*a);
                let d = Matrix { rows: g.rows, cols: g.cols, data: g.data.iter().zip(&x.data).map(|(p, &z)| p * gelu_grad(z)).collect() };
                acc(*a, d);
            }
            Op::LayerNorm(a) => {
                let x = self.value(*a);
                let mut d = Matrix::zeros(g.rows, g.cols);
                let n = g.cols as f64;
                for r in 0..g.rows {
                    let xr = x.row(r);
                    let mean = xr.iter().sum::<f64>() / n;
                    let var = xr.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / n;
                    let inv = 1.0 / (var + LN_EPS).sqrt();
                    let (gr, yr) = (g.row(r), out.row(r));
                    let gm = gr.iter().sum::<f64>() / n;
                    let gy = gr.iter().zip(yr).map(|(p, q)| p * q).sum::<f64>() / n;
                    for (c, dv) in d.row_mut(r).iter_mut().enumerate() {
                        *dv = inv * (gr[c] - gm - yr[c] * gy);
                    }
                }
                acc(*a, d);
            }
            Op::ConcatCols(parts) => {
                let mut off = 0;
                for &p in parts {
                    let cols = self.value(p).cols;
                    let mut d = Matrix::zeros(g.rows, cols);
                    for r in 0..g.rows {
                        d.row_mut(r).copy_from_slice(&g.row(r)[off..off + cols]);
                    }
                    off += cols;
                    acc(p, d);
                }
            }
            Op::ConcatRows(parts) => {
                let mut off = 0;
                for &p in parts {
                    let rows = self.value(p).rows;
                    let d = Matrix::from_vec(rows, g.cols, g.data[off * g.cols..(off + rows) * g.cols].to_vec());
                    off += rows;
                    acc(p, d);
                }
            }
            Op::SliceCols(a, start) => {
                let x = self.value(*a);
                let mut d = Matrix::zeros(x.rows, x.cols);
                for r in 0..x.rows {
                    d.row_mut(r)[*start..*start + g.cols].copy_from_slice(g.row(r));
                }
                acc(*a, d);
            }
            Op::GatherRows(a, index) => {
                let x = self.value(*a);
                let mut d = Matrix::zeros(x.rows, x.cols);
                for (o, &src) in index.iter().enumerate() {
                    for (y, &s) in d.row_mut(src).iter_mut().zip(g.row(o)) {
                        *y += s;
                    }
                }
                acc(*a, d);
            }
            Op::ScatterAddRows(a, index, weights) => {
                let x = self.value(*a);
                let mut d = Matrix::zeros(x.rows, x.cols);
                for (r, &o) in index.iter().enumerate() {
                    let w = weights.as_ref().map_or(1.0, |w| w[r]);
                    for (y, &s) in d.row_mut(r).iter_mut().zip(g.row(o)) {
                        *y = w * s;
                    }
                }
                acc(*a, d);
            }
            Op::SegmentSoftmax(a, segment, n_segments) => {
                let cols = g.cols;
                let mut dot = vec![0.0; n_segments * cols];
                for (r, &s) in segment.iter().enumerate() {
                    for c in 0..cols {
                        dot[s * cols + c] += g.get(r, c) * out.get(r, c);
                    }
                }
                let mut d = Matrix::zeros(g.rows, cols);
                for (r, &s) in segment.iter().enumerate() {
                    for c in 0..cols {
                        d.data[r * cols + c] = out.get(r, c) * (g.get(r, c) - dot[s * cols + c]);
                    }
                }
                acc(*a, d);
            }
            Op::Mean(a) => {
                let x = self.value(*a);
                acc(*a, Matrix::filled(x.rows, x.cols, g.data[0] / x.data.len().max(1) as f64));
            }
            Op::CrossEntropy(logits, targets) => {
                let x = self.value(*logits);
                let scale = g.data[0] / x.rows.max(1) as f64;
                let mut d = Matrix::zeros(x.rows, x.cols);
                for (r, &t) in targets.iter().enumerate() {
                    let row = x.row(r);
                    let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let z: f64 = row.iter().map(|y| (y - m).exp()).sum();
                    for (c, dv) in d.row_mut(r).iter_mut().enumerate() {
                        let p = (row[c] - m).exp() / z;
                        *dv = scale * (p - if c == t { 1.0 } else { 0.0 });
                    }
                }
                acc(*logits, d);
            }
            Op::BceWithLogits(logits, targets) => {
                let x = self.value(*logits);
                let scale = g.data[0] / x.rows.max(1) as f64;
                let data = x.data.iter().zip(targets.iter()).map(|(&z, &t)| scale * (sigmoid(z) - t)).collect();
                acc(*logits, Matrix { rows: x.rows, cols: 1, data });
            }
        }
    }
}
