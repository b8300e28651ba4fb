// SPDX-License-Identifier: Apache-2.0

//! Named parameter tensors and their binary file format.
//!
//! File layout, little endian: magic `CUTMAPGP`, format version (u32), config
//! JSON length (u32) and bytes, tensor count (u32), then per tensor the name
//! length (u32), name bytes, rows (u32), cols (u32) and `rows * cols` f64 values.

use std::collections::HashMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::ModelConfig;
use super::features::{featurize_library, LIBRARY_FEATURES, NODE_CLASSES, NODE_FEATURES};
use super::tape::{Matrix, Tape, Var};
use crate::error::ModelError;
use crate::library::Library;

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &[u8; 8] = b"CUTMAPGP";

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
enum Init {
    /// Uniform in `±1/sqrt(rows)`.
    Weight,
    Zero,
    One,
    /// Library-feature standardization constants; never trained.
    Frozen,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub value: Matrix,
    pub trainable: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub config: ModelConfig,
    pub tensors: Vec<Tensor>,
    index: HashMap<String, usize>,
}

fn layout(cfg: &ModelConfig) -> Vec<(String, usize, usize, Init)> {
    let (d, w, dp, k) = (cfg.d, cfg.width(), cfg.d_p, cfg.k);
    let mut out: Vec<(String, usize, usize, Init)> = Vec::new();
    let mut add = |name: String, r: usize, c: usize, init: Init| out.push((name, r, c, init));
    for view in ["s", "f"] {
        add(format!("enc_{view}.w_in"), NODE_FEATURES, d, Init::Weight);
        add(format!("enc_{view}.b_in"), 1, d, Init::Zero);
        add(format!("enc_{view}.w_msg"), d, d, Init::Weight);
        add(format!("enc_{view}.w_pol"), 1, d, Init::Weight);
        add(format!("enc_{view}.w_self"), d, d, Init::Weight);
        add(format!("enc_{view}.b"), 1, d, Init::Zero);
    }
    for l in 0..cfg.n_gat_layers {
        for m in ["w_l", "w_r", "w_v", "w_o"] {
            add(format!("gat{l}.{m}"), w, w, Init::Weight);
        }
        add(format!("gat{l}.a"), w, 1, Init::Weight);
    }
    for b in 0..cfg.n_tx_blocks {
        for m in ["wq", "wk", "wv", "wo"] {
            add(format!("tx{b}.{m}"), w, w, Init::Weight);
        }
        add(format!("tx{b}.bo"), 1, w, Init::Zero);
        add(format!("tx{b}.ln1_g"), 1, w, Init::One);
        add(format!("tx{b}.ln1_b"), 1, w, Init::Zero);
        add(format!("tx{b}.w1"), w, 2 * w, Init::Weight);
        add(format!("tx{b}.b1"), 1, 2 * w, Init::Zero);
        add(format!("tx{b}.w2"), 2 * w, w, Init::Weight);
        add(format!("tx{b}.b2"), 1, w, Init::Zero);
        add(format!("tx{b}.ln2_g"), 1, w, Init::One);
        add(format!("tx{b}.ln2_b"), 1, w, Init::Zero);
    }
    add("pm.w1".into(), LIBRARY_FEATURES, dp, Init::Weight);
    add("pm.b1".into(), 1, dp, Init::Zero);
    add("pm.w2".into(), dp, dp, Init::Weight);
    add("pm.b2".into(), 1, dp, Init::Zero);
    let cls_in = if cfg.use_tech_embedding { w + dp } else { w };
    add("cls.w1".into(), cls_in, w, Init::Weight);
    add("cls.b1".into(), 1, w, Init::Zero);
    add("cls.w2".into(), w, k, Init::Weight);
    add("cls.b2".into(), 1, k, Init::Zero);
    add("ms.w1".into(), 2 * d, d, Init::Weight);
    add("ms.b1".into(), 1, d, Init::Zero);
    add("ms.w2".into(), d, 1, Init::Weight);
    add("ms.b2".into(), 1, 1, Init::Zero);
    add("mf.w".into(), d, NODE_CLASSES, Init::Weight);
    add("mf.b".into(), 1, NODE_CLASSES, Init::Zero);
    add("fp.mean".into(), 1, LIBRARY_FEATURES, Init::Frozen);
    add("fp.scale".into(), 1, LIBRARY_FEATURES, Init::Frozen);
    out
}

impl ModelParams {
    /// Fresh parameters from `cfg.seed`. Library features are standardized
    /// against the bundled library.
    pub fn init(cfg: &ModelConfig) -> Result<Self, ModelError> {
        cfg.validate()?;
        let reference = featurize_library(&Library::bundled());
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let tensors = layout(cfg)
            .into_iter()
            .map(|(name, r, c, init)| {
                let value = match init {
                    Init::Weight => {
                        let bound = 1.0 / (r as f64).sqrt();
                        Matrix::from_vec(r, c, (0..r * c).map(|_| rng.random_range(-bound..bound)).collect())
                    }
                    Init::Zero => Matrix::zeros(r, c),
                    Init::One => Matrix::filled(r, c, 1.0),
                    Init::Frozen if name == "fp.mean" => Matrix::from_vec(1, c, reference.clone()),
                    Init::Frozen => Matrix::from_vec(1, c, reference.iter().map(|x| x.abs().max(1.0)).collect()),
                };
                Tensor { name, value, trainable: init != Init::Frozen }
            })
            .collect();
        Ok(Self::from_tensors(cfg.clone(), tensors))
    }

    fn from_tensors(config: ModelConfig, tensors: Vec<Tensor>) -> Self {
        let index = tensors.iter().enumerate().map(|(i, t)| (t.name.clone(), i)).collect();
        Self { config, tensors, index }
    }

    pub fn index_of(&self, name: &str) -> usize {
        *self.index.get(name).unwrap_or_else(|| panic!("no parameter named {name}"))
    }

    pub fn get(&self, name: &str) -> &Matrix {
        &self.tensors[self.index_of(name)].value
    }

    pub fn get_mut(&mut self, name: &str) -> &mut Matrix {
        let i = self.index_of(name);
        &mut self.tensors[i].value
    }

    pub fn num_scalars(&self) -> usize {
        self.tensors.iter().filter(|t| t.trainable).map(|t| t.value.data.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().all(|t| t.value.is_finite())
    }

    /// Library features standardized by the stored constants.
    pub fn standardize(&self, raw: &[f64]) -> Vec<f64> {
        let (mean, scale) = (self.get("fp.mean"), self.get("fp.scale"));
        raw.iter().zip(&mean.data).zip(&scale.data).map(|((x, m), s)| (x - m) / s).collect()
    }

    /// Records every tensor on `tape` as a leaf.
    pub fn bind<'a>(&'a self, tape: &mut Tape) -> Bound<'a> {
        let vars = self.tensors.iter().map(|t| tape.leaf(t.value.clone())).collect();
        Bound { params: self, vars }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        let cfg = serde_json::to_vec(&self.config).expect("config serializes");
        out.extend_from_slice(&(cfg.len() as u32).to_le_bytes());
        out.extend_from_slice(&cfg);
        out.extend_from_slice(&(self.tensors.len() as u32).to_le_bytes());
        for t in &self.tensors {
            out.extend_from_slice(&(t.name.len() as u32).to_le_bytes());
            out.extend_from_slice(t.name.as_bytes());
            out.extend_from_slice(&(t.value.rows as u32).to_le_bytes());
            out.extend_from_slice(&(t.value.cols as u32).to_le_bytes());
            for x in &t.value.data {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ModelError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(ModelError::Format("not a parameter file".into()));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(ModelError::Version { found: version, expected: FORMAT_VERSION });
        }
        let n = r.u32()? as usize;
        let config: ModelConfig = serde_json::from_slice(r.take(n)?).map_err(|e| ModelError::Format(format!("config header: {e}")))?;
        config.validate()?;
        let expected = layout(&config);
        let count = r.u32()? as usize;
        if count != expected.len() {
            return Err(ModelError::ConfigMismatch(format!("{count} tensors, config implies {}", expected.len())));
        }
        let mut tensors = Vec::with_capacity(count);
        for (name, rows, cols, init) in expected {
            let len = r.u32()? as usize;
            let found = std::str::from_utf8(r.take(len)?).map_err(|_| ModelError::Format("tensor name is not UTF-8".into()))?;
            let (fr, fc) = (r.u32()? as usize, r.u32()? as usize);
            if found != name || (fr, fc) != (rows, cols) {
                return Err(ModelError::ConfigMismatch(format!("tensor {found} {fr}x{fc}, expected {name} {rows}x{cols}")));
            }
            let raw = r.take(rows * cols * 8)?;
            let data = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
            tensors.push(Tensor { name, value: Matrix::from_vec(rows, cols, data), trainable: init != Init::Frozen });
        }
        if r.pos != bytes.len() {
            return Err(ModelError::Format("trailing bytes after the last tensor".into()));
        }
        Ok(Self::from_tensors(config, tensors))
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ModelError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| ModelError::Format("truncated file".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, ModelError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

pub fn save_params(p: &ModelParams, path: &Path) -> Result<(), ModelError> {
    std::fs::write(path, p.to_bytes())?;
    Ok(())
}

pub fn load_params(path: &Path) -> Result<ModelParams, ModelError> {
    ModelParams::from_bytes(&std::fs::read(path)?)
}

/// Loads parameters and checks that their architecture matches `expected`.
pub fn load_params_for(path: &Path, expected: &ModelConfig) -> Result<ModelParams, ModelError> {
    let p = load_params(path)?;
    if !p.config.same_architecture(expected) {
        return Err(ModelError::ConfigMismatch(format!(
            "file has d={} heads={} blocks={} k={}, expected d={} heads={} blocks={} k={}",
            p.config.d, p.config.n_heads, p.config.n_tx_blocks, p.config.k, expected.d, expected.n_heads, expected.n_tx_blocks, expected.k
        )));
    }
    Ok(p)
}

/// Parameters recorded on a tape.
pub struct Bound<'a> {
    pub params: &'a ModelParams,
    pub vars: Vec<Var>,
}

impl Bound<'_> {
    pub fn var(&self, name: &str) -> Var {
        self.vars[self.params.index_of(name)]
    }

    pub fn config(&self) -> &ModelConfig {
        &self.params.config
    }
}
