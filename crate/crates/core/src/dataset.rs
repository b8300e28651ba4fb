// SPDX-License-Identifier: Apache-2.0

//! Training labels from critical paths.
//!
//! Each circuit is mapped with the library cost, timed, and its critical path
//! is traced back to the cuts whose matches produced the on-path cells. Every
//! such cut becomes one record labeled with its stage delay class.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::aig::{Aig, NodeId};
use crate::cuts::{is_valid_cut, Cut};
use crate::error::DatasetError;
use crate::library::{Library, TruthTable};
use crate::mapper::{map_delay, CostModel, Cover, MappedNetlist};
use crate::timing::{bin_delay, compute_arrivals, critical_path, CriticalPath, DelayBinning};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutLabel {
    pub circuit_id: String,
    pub root: NodeId,
    pub leaves: Vec<NodeId>,
    /// Truth table of the cut in hex, leaf `i` being variable `i`.
    pub table: String,
    pub delay_ps: f64,
    pub class: usize,
    pub library_id: String,
}

impl CutLabel {
    pub fn truth_table(&self) -> Option<TruthTable> {
        let bits = u64::from_str_radix(&self.table, 16).ok()?;
        let vars = self.leaves.len();
        (vars <= crate::library::K_MAX && (vars == 6 || bits >> (1u32 << vars) == 0)).then(|| TruthTable::new(bits, vars))
    }

    /// Checks sortedness, the table encoding, and the class against `binning`.
    pub fn validate(&self, binning: &DelayBinning) -> Result<(), String> {
        if self.leaves.is_empty() || !self.leaves.windows(2).all(|w| w[0] < w[1]) {
            return Err("leaves must be non-empty, ascending and distinct".into());
        }
        if self.truth_table().is_none() {
            return Err(format!("table {:?} does not fit {} leaves", self.table, self.leaves.len()));
        }
        if self.class >= binning.k {
            return Err(format!("class {} out of range for {} classes", self.class, binning.k));
        }
        let expect = bin_delay(self.delay_ps, binning).map_err(|e| e.to_string())?;
        if expect != self.class {
            return Err(format!("class {} disagrees with delay {} ps (class {expect})", self.class, self.delay_ps));
        }
        Ok(())
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Split {
    Train,
    Val,
    Test,
}

/// Deterministic circuit-level split: 70% train, 15% validation, 15% test by
/// a hash of the circuit id.
pub fn split_of(circuit_id: &str) -> Split {
    let digest = Sha256::digest(circuit_id.as_bytes());
    let x = u64::from_be_bytes(digest[..8].try_into().unwrap()) as f64 / 2f64.powi(64);
    if x < 0.70 {
        Split::Train
    } else if x < 0.85 {
        Split::Val
    } else {
        Split::Test
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CutDataset {
    pub records: Vec<CutLabel>,
}

impl CutDataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn split(&self, which: Split) -> Vec<&CutLabel> {
        self.records.iter().filter(|r| split_of(&r.circuit_id) == which).collect()
    }

    pub fn class_histogram(&self, k: usize) -> Vec<usize> {
        histogram(self.records.iter(), k)
    }

    /// Distinct classes present.
    pub fn distinct_classes(&self) -> usize {
        let mut seen: Vec<usize> = self.records.iter().map(|r| r.class).collect();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }

    pub fn circuit_ids(&self) -> Vec<&str> {
        let mut ids: Vec<&str> = self.records.iter().map(|r| r.circuit_id.as_str()).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("labels serialize"));
            out.push('\n');
        }
        out
    }

    /// Parses JSON lines, validating every record; blank lines are skipped.
    pub fn from_jsonl(text: &str, binning: &DelayBinning) -> Result<Self, DatasetError> {
        read_records(text.as_bytes(), binning)
    }
}

pub fn histogram<'a>(records: impl IntoIterator<Item = &'a CutLabel>, k: usize) -> Vec<usize> {
    let mut h = vec![0; k];
    for r in records {
        h[r.class.min(k - 1)] += 1;
    }
    h
}

/// Most frequent class, lowest index on ties.
pub fn majority_class(hist: &[usize]) -> usize {
    let mut best = 0;
    for (c, &n) in hist.iter().enumerate() {
        if n > hist[best] {
            best = c;
        }
    }
    best
}

fn read_records(reader: impl BufRead, binning: &DelayBinning) -> Result<CutDataset, DatasetError> {
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let schema = |message: String| DatasetError::Schema { line: i + 1, message };
        let r: CutLabel = serde_json::from_str(&line).map_err(|e| schema(e.to_string()))?;
        r.validate(binning).map_err(schema)?;
        records.push(r);
    }
    Ok(CutDataset { records })
}

pub fn save_dataset(d: &CutDataset, path: &Path) -> Result<(), DatasetError> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(d.to_jsonl().as_bytes())?;
    f.flush()?;
    Ok(())
}

pub fn load_dataset(path: &Path, binning: &DelayBinning) -> Result<CutDataset, DatasetError> {
    read_records(std::io::BufReader::new(std::fs::File::open(path)?), binning)
}

/// The cut behind every non-inverter element of `path`, paired with the
/// element's stage delay (cell plus absorbed inverters).
pub fn backtrack_cuts(
    g: &Aig,
    cover: &Cover,
    netlist: &MappedNetlist,
    lib: &Library,
    path: &CriticalPath,
) -> Result<Vec<(Cut, f64)>, DatasetError> {
    let mut out = Vec::new();
    for e in &path.elements {
        if netlist.is_inverter(lib, e.instance) {
            continue;
        }
        let inst = &netlist.instances[e.instance];
        let choice = inst.node.and_then(|n| cover.choice(n)).ok_or(DatasetError::MissingProvenance { instance: e.instance })?;
        debug_assert!(is_valid_cut(g, choice.cut.root, &choice.cut.leaves));
        out.push((choice.cut.clone(), e.stage_delay()));
    }
    Ok(out)
}

/// Labels of one circuit, or `None` with a warning when it cannot be mapped.
pub fn circuit_labels(circuit_id: &str, g: &Aig, lib: &Library, binning: &DelayBinning) -> Result<Option<Vec<CutLabel>>, DatasetError> {
    let m = match map_delay(g, lib, CostModel::LibraryPin, None) {
        Ok(m) => m,
        Err(e) => {
            log::warn!("skipping circuit {circuit_id}: {e}");
            return Ok(None);
        }
    };
    let arrivals = compute_arrivals(&m.netlist, lib).expect("mapped netlists are acyclic");
    let path = critical_path(&m.netlist, lib, &arrivals);
    let cuts = backtrack_cuts(g, &m.cover, &m.netlist, lib, &path)?;
    Ok(Some(
        cuts.into_iter()
            .map(|(cut, delay_ps)| CutLabel {
                circuit_id: circuit_id.to_string(),
                root: cut.root,
                leaves: cut.leaves,
                table: cut.table.to_hex(),
                delay_ps,
                class: bin_delay(delay_ps, binning).expect("stage delays are non-negative"),
                library_id: lib.name.clone(),
            })
            .collect(),
    ))
}

/// Labels for every circuit, keyed by `Aig::name`. Records are ordered by
/// circuit id, then along each path; unmappable circuits are skipped.
pub fn extract_labels(circuits: &[Aig], lib: &Library, binning: &DelayBinning) -> Result<CutDataset, DatasetError> {
    let work = |g: &Aig| circuit_labels(g.name(), g, lib, binning);
    #[cfg(feature = "parallel")]
    let results: Vec<_> = {
        use rayon::prelude::*;
        circuits.par_iter().map(work).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<_> = circuits.iter().map(work).collect();
    let mut per_circuit: Vec<(&str, Vec<CutLabel>)> = Vec::new();
    for (g, r) in circuits.iter().zip(results) {
        if let Some(labels) = r? {
            per_circuit.push((g.name(), labels));
        }
    }
    per_circuit.sort_by(|a, b| a.0.cmp(b.0));
    Ok(CutDataset { records: per_circuit.into_iter().flat_map(|(_, l)| l).collect() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aig::{generate_random_aig, AigBuilder};
    use crate::library::parse_genlib;

    const TWO_CELL: &str = "GATE inv1 1 O=!a; PIN a INV 1 999 10 0 10 0\nGATE nand2 2 O=!(a*b); PIN * INV 1 999 20 0 20 0\n";

    fn label(class: usize, delay: f64) -> CutLabel {
        CutLabel {
            circuit_id: "c".into(),
            root: 3,
            leaves: vec![1, 2],
            table: "8".into(),
            delay_ps: delay,
            class,
            library_id: "lib".into(),
        }
    }

    #[test]
    fn and2_yields_one_record() {
        let lib = parse_genlib(TWO_CELL).unwrap().with_name("two");
        let mut b = AigBuilder::new("and2");
        let x = b.add_input();
        let y = b.add_input();
        let z = b.add_and(x, y);
        b.add_output(z);
        let d = extract_labels(&[b.finish()], &lib, &DelayBinning::default()).unwrap();
        assert_eq!(
            d.records,
            vec![CutLabel {
                circuit_id: "and2".into(),
                root: 3,
                leaves: vec![1, 2],
                table: "8".into(),
                delay_ps: 30.0,
                class: 0,
                library_id: "two".into(),
            }]
        );
    }

    #[test]
    fn buffer_yields_no_records_and_empty_input_is_empty() {
        let lib = Library::bundled();
        let mut b = AigBuilder::new("buf");
        let x = b.add_input();
        b.add_output(x);
        assert!(extract_labels(&[b.finish()], &lib, &DelayBinning::default()).unwrap().is_empty());
        assert!(extract_labels(&[], &lib, &DelayBinning::default()).unwrap().is_empty());
    }

    #[test]
    fn unmappable_circuits_are_skipped() {
        let lib = Library::bundled();
        let mut b = AigBuilder::new("bad");
        let x = b.add_input();
        let z = b.add_and(x, !x);
        b.add_output(z);
        let good = generate_random_aig(1, 5, 20).with_name("good");
        let d = extract_labels(&[b.finish(), good], &lib, &DelayBinning::default()).unwrap();
        assert!(d.records.iter().all(|r| r.circuit_id == "good"));
        assert!(!d.is_empty());
    }

    #[test]
    fn record_count_matches_non_inverter_path_elements() {
        let lib = Library::bundled();
        let bins = DelayBinning::default();
        for seed in 0..40 {
            let g = generate_random_aig(seed, 8, 80).with_name(format!("r{seed}"));
            let m = map_delay(&g, &lib, CostModel::LibraryPin, None).unwrap();
            let arr = compute_arrivals(&m.netlist, &lib).unwrap();
            let path = critical_path(&m.netlist, &lib, &arr);
            let labels = circuit_labels(g.name(), &g, &lib, &bins).unwrap().unwrap();
            let cells = path.elements.iter().filter(|e| !m.netlist.is_inverter(&lib, e.instance)).count();
            assert_eq!(labels.len(), cells);
            for r in &labels {
                r.validate(&bins).unwrap();
                assert!(is_valid_cut(&g, r.root, &r.leaves));
                let choice = m.cover.choice(r.root).expect("labeled cut is in the cover");
                assert_eq!(choice.cut.leaves, r.leaves);
            }
            let total: f64 = labels.iter().map(|r| r.delay_ps).sum();
            assert!(total <= path.total_delay + 1e-9);
        }
    }

    #[test]
    fn jsonl_round_trip_and_field_order() {
        let d = CutDataset { records: vec![label(0, 30.0), label(2, 250.0)] };
        let text = d.to_jsonl();
        assert!(text.starts_with(r#"{"circuit_id":"c","root":3,"leaves":[1,2],"table":"8","delay_ps":30.0,"class":0,"library_id":"lib"}"#));
        assert_eq!(CutDataset::from_jsonl(&text, &DelayBinning::default()).unwrap(), d);

        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.jsonl");
        save_dataset(&d, &p).unwrap();
        assert_eq!(load_dataset(&p, &DelayBinning::default()).unwrap(), d);
    }

    #[test]
    fn schema_errors_name_the_line() {
        let good = serde_json::to_string(&label(0, 30.0)).unwrap();
        let bad = serde_json::to_string(&label(9, 950.0)).unwrap();
        let err = CutDataset::from_jsonl(&format!("{good}\n{bad}\n"), &DelayBinning::default()).unwrap_err();
        assert!(matches!(err, DatasetError::Schema { line: 2, .. }), "{err}");
        let err = CutDataset::from_jsonl("{not json\n", &DelayBinning::default()).unwrap_err();
        assert!(matches!(err, DatasetError::Schema { line: 1, .. }));
        let mismatch = serde_json::to_string(&label(3, 30.0)).unwrap();
        assert!(CutDataset::from_jsonl(&mismatch, &DelayBinning::default()).is_err());
    }

    #[test]
    fn splits_are_deterministic_and_roughly_proportional() {
        let mut counts = [0usize; 3];
        for i in 0..3000 {
            let id = format!("circuit{i}");
            assert_eq!(split_of(&id), split_of(&id));
            counts[split_of(&id) as usize] += 1;
        }
        assert!((1950..2250).contains(&counts[0]), "{counts:?}");
        assert!((330..570).contains(&counts[1]), "{counts:?}");
        assert!((330..570).contains(&counts[2]), "{counts:?}");
    }

    #[test]
    fn majority_prefers_lowest_on_ties() {
        assert_eq!(majority_class(&[1, 3, 3, 0]), 1);
        assert_eq!(majority_class(&[0, 0]), 0);
    }

    #[test]
    fn bundled_corpus_has_several_classes() {
        let lib = Library::bundled();
        let circuits: Vec<Aig> = (0..30).map(|s| generate_random_aig(s, 10, 120).with_name(format!("g{s}"))).collect();
        let d = extract_labels(&circuits, &lib, &DelayBinning::default()).unwrap();
        assert!(d.distinct_classes() >= 2, "{:?}", d.class_histogram(8));
    }
}
