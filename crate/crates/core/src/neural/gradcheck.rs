// SPDX-License-Identifier: Apache-2.0

//! Central finite-difference verification of the tape's gradients.

use std::rc::Rc;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::features::featurize_library;
use super::model::{cut_logits, pretrain_losses, sample_edge_mask, EdgeMask};
use super::params::ModelParams;
use super::tape::{Matrix, Tape, Var};
use crate::aig::{Aig, NodeId};
use crate::cuts::{enumerate_cuts, CutParams};
use crate::error::ModelError;
use crate::library::Library;

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum LossKind {
    /// Masked-edge prediction.
    Structural,
    /// Node-type prediction.
    Functional,
    /// Cut-class prediction.
    Cut,
}

impl LossKind {
    pub const ALL: [LossKind; 3] = [LossKind::Structural, LossKind::Functional, LossKind::Cut];

    pub fn name(self) -> &'static str {
        match self {
            LossKind::Structural => "L_s",
            LossKind::Functional => "L_f",
            LossKind::Cut => "L_d",
        }
    }

    /// Whether `tensor` lies on this loss's computation path.
    fn involves(self, tensor: &str) -> bool {
        let head = tensor.split('.').next().unwrap_or("");
        match self {
            LossKind::Structural => matches!(head, "enc_s" | "ms"),
            LossKind::Functional => matches!(head, "enc_f" | "mf"),
            LossKind::Cut => !matches!(head, "ms" | "mf" | "fp"),
        }
    }
}

#[derive(Copy, Clone, Debug)]
pub struct GradCheckOptions {
    pub epsilon: f64,
    /// Entries sampled from each involved tensor.
    pub samples_per_tensor: usize,
    pub seed: u64,
    /// The analytic gradient is scaled by `1 + corruption` before comparing;
    /// non-zero only for negative controls.
    pub corruption: f64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self { epsilon: 1e-5, samples_per_tensor: 3, seed: 0, corruption: 0.0 }
    }
}

/// `|a − n| / max(|a|, |n|, 1e-6)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

struct Probe {
    mask: EdgeMask,
    cuts: Vec<Vec<NodeId>>,
    classes: Rc<Vec<usize>>,
    tech: Vec<f64>,
}

impl Probe {
    fn new(g: &Aig, params: &ModelParams, lib: &Library, seed: u64) -> Self {
        let cfg = &params.config;
        let mask = sample_edge_mask(g, cfg.mask_fraction, cfg.neg_ratio, seed);
        let cuts: Vec<Vec<NodeId>> =
            enumerate_cuts(g, CutParams::default()).iter().filter(|c| !c.is_trivial()).map(|c| c.leaves.clone()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let classes = Rc::new(cuts.iter().map(|_| rng.random_range(0..cfg.k)).collect());
        Self { mask, cuts, classes, tech: params.standardize(&featurize_library(lib)) }
    }

    fn loss(&self, t: &mut Tape, params: &ModelParams, g: &Aig, kind: LossKind) -> Result<(Var, Vec<Var>), ModelError> {
        let b = params.bind(t);
        let cfg = &params.config;
        let loss = match kind {
            LossKind::Structural | LossKind::Functional => {
                let l = pretrain_losses(t, &b, g, &self.mask, cfg.alpha, cfg.beta);
                if kind == LossKind::Structural {
                    l.ls
                } else {
                    l.lf
                }
            }
            LossKind::Cut => {
                let leaves: Vec<&[NodeId]> = self.cuts.iter().map(Vec::as_slice).collect();
                let logits = cut_logits(t, &b, g, &self.tech, &leaves)?;
                t.cross_entropy(logits, self.classes.clone())
            }
        };
        Ok((loss, b.vars))
    }
}

/// Worst relative error between analytic and central-difference gradients
/// of `kind` over a seeded sample of entries of every involved tensor.
pub fn grad_check(g: &Aig, params: &ModelParams, lib: &Library, kind: LossKind, opts: GradCheckOptions) -> Result<f64, ModelError> {
    let probe = Probe::new(g, params, lib, opts.seed);
    if kind == LossKind::Cut && probe.cuts.is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    let mut t = Tape::new();
    let (loss, vars) = probe.loss(&mut t, params, g, kind)?;
    let grads = t.backward(loss);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut worst: f64 = 0.0;
    let mut scratch = params.clone();
    for (i, tensor) in params.tensors.iter().enumerate() {
        if !tensor.trainable || !kind.involves(&tensor.name) {
            continue;
        }
        let len = tensor.value.data.len();
        let zero = Matrix::zeros(tensor.value.rows, tensor.value.cols);
        let analytic = grads.get(vars[i]).unwrap_or(&zero);
        for j in sample(&mut rng, len, opts.samples_per_tensor.min(len)) {
            let orig = tensor.value.data[j];
            let mut eval = |x: f64| -> Result<f64, ModelError> {
                scratch.tensors[i].value.data[j] = x;
                let mut t = Tape::new();
                let (l, _) = probe.loss(&mut t, &scratch, g, kind)?;
                Ok(t.scalar(l))
            };
            let numeric = (eval(orig + opts.epsilon)? - eval(orig - opts.epsilon)?) / (2.0 * opts.epsilon);
            scratch.tensors[i].value.data[j] = orig;
            let a = analytic.data[j] * (1.0 + opts.corruption);
            let err = relative_error(a, numeric);
            if err > worst {
                log::debug!("{} {}[{j}]: analytic {a:e} numeric {numeric:e}", kind.name(), tensor.name);
            }
            worst = worst.max(err);
        }
    }
    Ok(worst)
}

/// The same check for an arbitrary scalar function of one input matrix.
pub fn grad_check_fn(input: &Matrix, epsilon: f64, corruption: f64, f: impl Fn(&mut Tape, Var) -> Var) -> f64 {
    let mut t = Tape::new();
    let x = t.leaf(input.clone());
    let y = f(&mut t, x);
    let zero = Matrix::zeros(input.rows, input.cols);
    let grads = t.backward(y);
    let analytic = grads.get(x).unwrap_or(&zero);
    let eval = |v: &Matrix| {
        let mut t = Tape::new();
        let x = t.leaf(v.clone());
        let y = f(&mut t, x);
        t.scalar(y)
    };
    let mut worst: f64 = 0.0;
    for j in 0..input.data.len() {
        let mut p = input.clone();
        p.data[j] += epsilon;
        let up = eval(&p);
        p.data[j] -= 2.0 * epsilon;
        let down = eval(&p);
        let numeric = (up - down) / (2.0 * epsilon);
        worst = worst.max(relative_error(analytic.data[j] * (1.0 + corruption), numeric));
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aig::AigBuilder;
    use crate::neural::config::ModelConfig;

    /// Three inputs and seven ANDs: a ten-node graph with mixed polarities.
    pub(crate) fn probe_circuit() -> Aig {
        let mut b = AigBuilder::new("probe10");
        let x = b.add_input();
        let y = b.add_input();
        let z = b.add_input();
        let a = b.add_and(x, !y);
        let c = b.add_and(y, z);
        let d = b.add_and(!a, c);
        let e = b.add_and(a, !z);
        let f = b.add_and(d, !e);
        let h = b.add_and(!x, f);
        let i = b.add_and(e, !h);
        b.add_output(h);
        b.add_output(!i);
        b.finish()
    }

    #[test]
    fn linear_probe_is_exact() {
        let w = Matrix::from_vec(3, 2, vec![0.5, -0.25, 2.0, 1.0, -1.5, 0.75]);
        let x = Matrix::from_vec(2, 3, vec![0.1, 0.2, -0.3, 0.4, 0.5, -0.6]);
        let err = grad_check_fn(&x, 1e-5, 0.0, |t, x| {
            let w = t.leaf(w.clone());
            let y = t.matmul(x, w);
            t.mean(y)
        });
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn full_model_gradients() {
        let g = probe_circuit();
        assert_eq!(g.num_nodes(), 11);
        let lib = Library::bundled();
        let p = ModelParams::init(&ModelConfig { seed: 11, ..Default::default() }).unwrap();
        for kind in LossKind::ALL {
            let err = grad_check(&g, &p, &lib, kind, GradCheckOptions::default()).unwrap();
            assert!(err < 1e-4, "{}: {err}", kind.name());
            let bad = grad_check(&g, &p, &lib, kind, GradCheckOptions { corruption: 0.05, ..Default::default() }).unwrap();
            assert!(bad > 10.0 * err.max(1e-6), "{}: corrupted {bad} vs clean {err}", kind.name());
        }
    }
}
