// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::npn::{apply_transform, npn_canonical, npn_canonical_all, NpnTransform, NPN_MAX_VARS};
use super::truth::TruthTable;
use super::{Cell, Library};

/// A cell realizing some function `t` as `apply_transform(cell_table, &transform) == t`.
///
/// Wiring: cut input `i` drives cell pin `transform.perm[i]`, through an inverter
/// when `transform.input_negated(i)`; the cell output is inverted when
/// `transform.output_neg`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellMatch {
    pub cell: usize,
    pub transform: NpnTransform,
}

/// Canonical NPN table to every `(cell, transform)` that maps the cell's
/// function onto that table.
#[derive(Clone, Debug, Default)]
pub struct MatchTable {
    entries: BTreeMap<TruthTable, Vec<(usize, NpnTransform)>>,
}

impl MatchTable {
    pub fn build(cells: &[Cell]) -> Self {
        let mut entries: BTreeMap<TruthTable, Vec<(usize, NpnTransform)>> = BTreeMap::new();
        for (i, cell) in cells.iter().enumerate() {
            if cell.fanin() == 0 || cell.fanin() > NPN_MAX_VARS {
                continue;
            }
            let (canon, transforms) = npn_canonical_all(cell.truth_table());
            let slot = entries.entry(canon).or_default();
            slot.extend(transforms.into_iter().map(|x| (i, x)));
        }
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn keys(&self) -> impl Iterator<Item = &TruthTable> {
        self.entries.keys()
    }

    pub fn entries(&self, canonical: &TruthTable) -> &[(usize, NpnTransform)] {
        self.entries.get(canonical).map_or(&[], Vec::as_slice)
    }

    /// Every distinct way a cell can realize `t`, sorted.
    pub fn lookup(&self, t: TruthTable) -> Vec<CellMatch> {
        if t.vars() == 0 || t.vars() > NPN_MAX_VARS {
            return Vec::new();
        }
        let (canon, to_canon) = npn_canonical(t);
        let back = to_canon.inverse();
        let found: BTreeSet<CellMatch> =
            self.entries(&canon).iter().map(|(cell, xf)| CellMatch { cell: *cell, transform: xf.then(&back) }).collect();
        found.into_iter().collect()
    }
}

pub fn build_match_table(lib: &Library) -> MatchTable {
    MatchTable::build(&lib.cells)
}

/// Checks a match by evaluating the transformed cell function on every row.
pub fn verify_match(cells: &[Cell], m: &CellMatch, t: TruthTable) -> bool {
    cells[m.cell].fanin() == t.vars() && apply_transform(cells[m.cell].truth_table(), &m.transform) == t
}
