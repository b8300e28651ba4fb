// SPDX-License-Identifier: Apache-2.0

//! Inference for the mapper: per-circuit contexts computed once, then
//! cheap per-cut classification.

use super::features::featurize_library;
use super::model::{classify_cut, cut_embed, node_contexts, pm_encode};
use super::params::ModelParams;
use super::tape::{Matrix, Tape};
use crate::aig::{Aig, NodeId};
use crate::cuts::Cut;
use crate::error::ModelError;
use crate::library::Library;
use crate::mapper::CutDelayPredictor;

/// Cuts classified per tape, bounding memory on large circuits.
const CHUNK: usize = 2048;

/// Node contexts `z` and the technology embedding of one circuit.
#[derive(Clone, Debug)]
pub struct CircuitContext {
    pub z: Matrix,
    pub e_p: Matrix,
}

impl CircuitContext {
    pub fn new(params: &ModelParams, g: &Aig, standardized_tech: &[f64]) -> Self {
        let mut t = Tape::new();
        let b = params.bind(&mut t);
        let z = node_contexts(&mut t, &b, g);
        let e_p = pm_encode(&mut t, &b, standardized_tech);
        Self { z: t.value(z).clone(), e_p: t.value(e_p).clone() }
    }

    /// Class logits, one row per cut.
    pub fn logits(&self, params: &ModelParams, cuts: &[&[NodeId]]) -> Result<Matrix, ModelError> {
        let k = params.config.k;
        let mut out = Matrix::zeros(cuts.len(), k);
        for (c, chunk) in cuts.chunks(CHUNK).enumerate() {
            let mut t = Tape::new();
            let b = params.bind(&mut t);
            let z = t.leaf(self.z.clone());
            let ep = t.leaf(self.e_p.clone());
            let e_c = cut_embed(&mut t, &b, z, chunk)?;
            let logits = classify_cut(&mut t, &b, e_c, ep);
            let v = t.value(logits);
            out.data[c * CHUNK * k..c * CHUNK * k + v.data.len()].copy_from_slice(&v.data);
        }
        Ok(out)
    }
}

/// A trained model bound to one library, usable as a mapping cost.
#[derive(Clone, Debug)]
pub struct GpaPredictor {
    params: ModelParams,
    tech: Vec<f64>,
}

impl GpaPredictor {
    pub fn new(params: ModelParams, lib: &Library) -> Self {
        let tech = params.standardize(&featurize_library(lib));
        Self { params, tech }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn context(&self, g: &Aig) -> CircuitContext {
        CircuitContext::new(&self.params, g, &self.tech)
    }

    /// Predicted class per leaf set.
    pub fn classify(&self, g: &Aig, cuts: &[&[NodeId]]) -> Result<Vec<usize>, ModelError> {
        let logits = self.context(g).logits(&self.params, cuts)?;
        Ok((0..cuts.len()).map(|r| logits.argmax_row(r)).collect())
    }
}

impl CutDelayPredictor for GpaPredictor {
    fn bin_width(&self) -> f64 {
        self.params.config.bin_width
    }

    fn predict(&self, g: &Aig, cuts: &[&Cut]) -> Result<Vec<usize>, String> {
        let leaves: Vec<&[NodeId]> = cuts.iter().map(|c| c.leaves.as_slice()).collect();
        self.classify(g, &leaves).map_err(|e| e.to_string())
    }
}
