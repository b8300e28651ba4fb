// SPDX-License-Identifier: Apache-2.0

//! Adam, pre-training, fine-tuning and evaluation.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::rc::Rc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::ModelConfig;
use super::features::featurize_library;
use super::model::{cut_logits, pretrain_losses, sample_edge_mask};
use super::params::ModelParams;
use super::tape::{Gradients, Tape, Var};
use crate::aig::{Aig, NodeId};
use crate::dataset::{split_of, CutDataset, CutLabel, Split};
use crate::error::ModelError;
use crate::library::Library;

/// Adam with the usual defaults (β₁ 0.9, β₂ 0.999, ε 1e-8).
#[derive(Clone, Debug)]
pub struct Adam {
    pub learning_rate: f64,
    step: i32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(params: &ModelParams, learning_rate: f64) -> Self {
        let zeros: Vec<Vec<f64>> = params.tensors.iter().map(|t| vec![0.0; t.value.data.len()]).collect();
        Self { learning_rate, step: 0, m: zeros.clone(), v: zeros }
    }

    /// Applies one update. Tensors without a gradient are left alone.
    pub fn update(&mut self, params: &mut ModelParams, vars: &[Var], grads: &Gradients) {
        const B1: f64 = 0.9;
        const B2: f64 = 0.999;
        self.step += 1;
        let c1 = 1.0 - B1.powi(self.step);
        let c2 = 1.0 - B2.powi(self.step);
        for (i, t) in params.tensors.iter_mut().enumerate() {
            if !t.trainable {
                continue;
            }
            let Some(g) = grads.get(vars[i]) else { continue };
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            for (j, p) in t.value.data.iter_mut().enumerate() {
                let gj = g.data[j];
                m[j] = B1 * m[j] + (1.0 - B1) * gj;
                v[j] = B2 * v[j] + (1.0 - B2) * gj * gj;
                *p -= self.learning_rate * (m[j] / c1) / ((v[j] / c2).sqrt() + 1e-8);
            }
        }
    }
}

/// Per-epoch losses; `None` where a quantity is not computed in that phase.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub loss_s: Option<f64>,
    pub loss_f: Option<f64>,
    pub loss_p: Option<f64>,
    pub loss_d: Option<f64>,
    pub val_accuracy: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainMetrics {
    pub epochs: Vec<EpochMetrics>,
    /// Optimizer steps taken.
    pub steps: usize,
}

impl TrainMetrics {
    pub fn to_csv(&self) -> String {
        let f = |x: Option<f64>| x.map(|v| format!("{v:.6}")).unwrap_or_default();
        let mut s = String::from("epoch,L_s,L_f,L_p,L_d,val_accuracy\n");
        for e in &self.epochs {
            let _ = writeln!(s, "{},{},{},{},{},{}", e.epoch, f(e.loss_s), f(e.loss_f), f(e.loss_p), f(e.loss_d), f(e.val_accuracy));
        }
        s
    }
}

fn check_finite(v: f64, epoch: usize, what: &str) -> Result<(), ModelError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(ModelError::NonFiniteLoss { epoch, detail: format!("{what} = {v}") })
    }
}

fn mix(seed: u64, a: u64, b: u64) -> u64 {
    seed ^ a.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ b.wrapping_mul(0xc2b2_ae3d_27d4_eb4f).rotate_left(17)
}

/// Pre-trains from a fresh initialization. See [`pretrain_params`].
pub fn pretrain(circuits: &[Aig], cfg: &ModelConfig) -> Result<(ModelParams, TrainMetrics), ModelError> {
    let mut params = ModelParams::init(cfg)?;
    let metrics = pretrain_params(&mut params, circuits)?;
    Ok((params, metrics))
}

/// Structural-only epochs (β = 0), then joint epochs, one circuit per step
/// with a fresh edge mask each time. Uses the hyper-parameters in `params.config`.
pub fn pretrain_params(params: &mut ModelParams, circuits: &[Aig]) -> Result<TrainMetrics, ModelError> {
    let cfg = params.config.clone();
    cfg.validate()?;
    let usable: Vec<&Aig> = circuits.iter().filter(|g| g.num_ands() > 0).collect();
    if usable.is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    let mut adam = Adam::new(params, cfg.learning_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut metrics = TrainMetrics::default();
    let total = cfg.pretrain_stage1_epochs + cfg.pretrain_stage2_epochs;
    for epoch in 0..total {
        let beta = if epoch < cfg.pretrain_stage1_epochs { 0.0 } else { cfg.beta };
        let mut order: Vec<usize> = (0..usable.len()).collect();
        order.shuffle(&mut rng);
        let (mut ls, mut lf, mut lp) = (0.0, 0.0, 0.0);
        for &ci in &order {
            let g = usable[ci];
            let mask = sample_edge_mask(g, cfg.mask_fraction, cfg.neg_ratio, mix(cfg.seed, epoch as u64, ci as u64));
            let mut t = Tape::new();
            let b = params.bind(&mut t);
            let l = pretrain_losses(&mut t, &b, g, &mask, cfg.alpha, beta);
            let vars = b.vars;
            let (s, f, p) = (t.scalar(l.ls), t.scalar(l.lf), t.scalar(l.lp));
            check_finite(p, epoch, &format!("L_p on {}", g.name()))?;
            let grads = t.backward(l.lp);
            adam.update(params, &vars, &grads);
            metrics.steps += 1;
            ls += s;
            lf += f;
            lp += p;
        }
        let n = usable.len() as f64;
        log::debug!("pretrain epoch {epoch}: L_s {:.4} L_f {:.4} L_p {:.4}", ls / n, lf / n, lp / n);
        metrics.epochs.push(EpochMetrics { epoch, loss_s: Some(ls / n), loss_f: Some(lf / n), loss_p: Some(lp / n), ..Default::default() });
    }
    Ok(metrics)
}

/// Accuracy, mean cross-entropy and confusion matrix (`[true][predicted]`).
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    pub loss: f64,
    pub confusion: Vec<Vec<usize>>,
    pub count: usize,
}

impl Evaluation {
    pub fn report(&self) -> String {
        let mut s = format!(
            "records {}\naccuracy {:.4}\nloss {:.6}\nconfusion (rows true, columns predicted)\n",
            self.count, self.accuracy, self.loss
        );
        for (i, row) in self.confusion.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(|c| format!("{c:>6}")).collect();
            let _ = writeln!(s, "{i:>3} {}", cells.join(""));
        }
        s
    }
}

type Batch<'a> = (&'a Aig, Vec<&'a CutLabel>);

/// Groups records by circuit (sorted by id) and cuts each group into
/// chunks of at most `chunk` records.
fn batches<'a>(records: &[&'a CutLabel], circuits: &'a [Aig], chunk: usize, k: usize) -> Result<Vec<Batch<'a>>, ModelError> {
    let by_name: BTreeMap<&str, &Aig> = circuits.iter().map(|g| (g.name(), g)).collect();
    let mut groups: BTreeMap<&str, Vec<&CutLabel>> = BTreeMap::new();
    for r in records {
        groups.entry(r.circuit_id.as_str()).or_default().push(r);
    }
    let mut out = Vec::new();
    for (id, recs) in groups {
        let g = *by_name.get(id).ok_or_else(|| ModelError::BadRecord(format!("no circuit named {id:?}")))?;
        for r in &recs {
            if r.leaves.is_empty() {
                return Err(ModelError::EmptyCut);
            }
            if r.leaves.iter().any(|&l| l as usize >= g.num_nodes()) || r.class >= k {
                return Err(ModelError::BadRecord(format!("{id} root {}: leaf or class out of range", r.root)));
            }
        }
        for c in recs.chunks(chunk.max(1)) {
            out.push((g, c.to_vec()));
        }
    }
    Ok(out)
}

fn batch_loss(t: &mut Tape, params: &ModelParams, g: &Aig, tech: &[f64], recs: &[&CutLabel]) -> Result<(Var, Var, Vec<Var>), ModelError> {
    let b = params.bind(t);
    let leaves: Vec<&[NodeId]> = recs.iter().map(|r| r.leaves.as_slice()).collect();
    let logits = cut_logits(t, &b, g, tech, &leaves)?;
    let loss = t.cross_entropy(logits, Rc::new(recs.iter().map(|r| r.class).collect()));
    Ok((logits, loss, b.vars))
}

/// Scores `records` with the circuits they were extracted from.
pub fn evaluate(params: &ModelParams, records: &[&CutLabel], circuits: &[Aig], lib: &Library) -> Result<Evaluation, ModelError> {
    let k = params.config.k;
    let tech = params.standardize(&featurize_library(lib));
    let mut confusion = vec![vec![0; k]; k];
    let (mut loss, mut correct, mut count) = (0.0, 0, 0);
    for (g, recs) in batches(records, circuits, usize::MAX, k)? {
        let mut t = Tape::new();
        let (logits, l, _) = batch_loss(&mut t, params, g, &tech, &recs)?;
        let v = t.value(logits);
        for (i, r) in recs.iter().enumerate() {
            let p = v.argmax_row(i);
            confusion[r.class][p] += 1;
            correct += usize::from(p == r.class);
        }
        loss += t.scalar(l) * recs.len() as f64;
        count += recs.len();
    }
    let n = count.max(1) as f64;
    Ok(Evaluation { accuracy: correct as f64 / n, loss: loss / n, confusion, count })
}

/// Minimizes cut-class cross-entropy on `train`, one batch being up to
/// `batch_size` records of one circuit. With a non-empty `val`, stops after
/// `patience` epochs without a lower validation loss and returns the best
/// parameters seen.
pub fn finetune_split(
    params: &mut ModelParams,
    train: &[&CutLabel],
    val: &[&CutLabel],
    circuits: &[Aig],
    lib: &Library,
) -> Result<TrainMetrics, ModelError> {
    let cfg = params.config.clone();
    cfg.validate()?;
    if train.is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    let tech = params.standardize(&featurize_library(lib));
    let mut plan = batches(train, circuits, cfg.batch_size, cfg.k)?;
    let mut adam = Adam::new(params, cfg.learning_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(mix(cfg.seed, 0xf1e7, 0));
    let mut metrics = TrainMetrics::default();
    let mut best: Option<(f64, ModelParams)> = None;
    let mut stale = 0;
    for epoch in 0..cfg.finetune_epochs {
        plan.shuffle(&mut rng);
        let (mut total, mut seen) = (0.0, 0);
        for (g, recs) in &plan {
            let mut t = Tape::new();
            let (_, loss, vars) = batch_loss(&mut t, params, g, &tech, recs)?;
            let l = t.scalar(loss);
            check_finite(l, epoch, &format!("L_d on {}", g.name()))?;
            let grads = t.backward(loss);
            adam.update(params, &vars, &grads);
            metrics.steps += 1;
            total += l * recs.len() as f64;
            seen += recs.len();
        }
        let mut m = EpochMetrics { epoch, loss_d: Some(total / seen as f64), ..Default::default() };
        if !val.is_empty() {
            let e = evaluate(params, val, circuits, lib)?;
            m.val_accuracy = Some(e.accuracy);
            log::debug!("finetune epoch {epoch}: L_d {:.4} val loss {:.4} acc {:.4}", total / seen as f64, e.loss, e.accuracy);
            if best.as_ref().is_none_or(|(b, _)| e.loss < *b) {
                best = Some((e.loss, params.clone()));
                stale = 0;
            } else {
                stale += 1;
            }
        }
        metrics.epochs.push(m);
        if stale >= cfg.patience.max(1) {
            break;
        }
    }
    if let Some((_, p)) = best {
        *params = p;
    }
    Ok(metrics)
}

/// Fine-tunes on the train split of `dataset`, validating on its val split.
pub fn finetune(params: &mut ModelParams, dataset: &CutDataset, circuits: &[Aig], lib: &Library) -> Result<TrainMetrics, ModelError> {
    let train = dataset.split(Split::Train);
    let val = dataset.split(Split::Val);
    finetune_split(params, &train, &val, circuits, lib)
}

/// Records whose circuit falls in `which`.
pub fn records_in(records: &[CutLabel], which: Split) -> Vec<&CutLabel> {
    records.iter().filter(|r| split_of(&r.circuit_id) == which).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aig::generate_random_aig;
    use crate::dataset::extract_labels;
    use crate::timing::DelayBinning;

    fn corpus(n: usize) -> Vec<Aig> {
        (0..n as u64).map(|s| generate_random_aig(s, 6, 40)).collect()
    }

    fn cfg() -> ModelConfig {
        ModelConfig { pretrain_stage1_epochs: 1, pretrain_stage2_epochs: 2, learning_rate: 1e-3, ..Default::default() }
    }

    #[test]
    fn zero_learning_rate_changes_nothing() {
        let c = ModelConfig { learning_rate: 0.0, ..cfg() };
        let (p, m) = pretrain(&corpus(3), &c).unwrap();
        assert_eq!(p.to_bytes(), ModelParams::init(&c).unwrap().to_bytes());
        assert_eq!(m.steps, 9);
    }

    #[test]
    fn pretraining_is_deterministic() {
        let (a, ma) = pretrain(&corpus(3), &cfg()).unwrap();
        let (b, mb) = pretrain(&corpus(3), &cfg()).unwrap();
        assert_eq!(a.to_bytes(), b.to_bytes());
        assert_eq!(ma, mb);
        for e in &ma.epochs {
            let beta = if e.epoch == 0 { 0.0 } else { 1.0 };
            assert!((e.loss_p.unwrap() - (e.loss_s.unwrap() + beta * e.loss_f.unwrap())).abs() < 1e-9);
        }
        assert!(ma.to_csv().starts_with("epoch,L_s,L_f,L_p,L_d,val_accuracy\n0,"));
    }

    #[test]
    fn finetune_reports_and_rejects() {
        let lib = Library::bundled();
        let circuits = corpus(4);
        let data = extract_labels(&circuits, &lib, &DelayBinning::default()).unwrap();
        let all: Vec<&CutLabel> = data.records.iter().collect();
        let mut p = ModelParams::init(&ModelConfig { finetune_epochs: 2, ..cfg() }).unwrap();
        assert!(matches!(finetune_split(&mut p, &[], &all, &circuits, &lib), Err(ModelError::EmptyTrainingSet)));
        let m = finetune_split(&mut p, &all, &all, &circuits, &lib).unwrap();
        assert_eq!(m.epochs.len(), 2);
        let e = evaluate(&p, &all, &circuits, &lib).unwrap();
        assert_eq!(e.count, all.len());
        assert_eq!(e.confusion.iter().flatten().sum::<usize>(), all.len());
        assert!((0.0..=1.0).contains(&e.accuracy));
        assert!(matches!(evaluate(&p, &all, &circuits[..1], &lib), Err(ModelError::BadRecord(_))));
    }
}
