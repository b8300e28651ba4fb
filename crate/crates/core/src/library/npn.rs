// SPDX-License-Identifier: Apache-2.0

//! Exact NPN canonicalization for functions of up to four variables.
//!
//! A transform maps `f` to `f'` with `f'(y) = f(x) ^ output_neg` where
//! `x[perm[i]] = y[i] ^ input_neg(i)`. Read as wiring: variable `i` of the
//! result drives variable `perm[i]` of `f`, inverted when `input_neg(i)` is set.
//! The canonical form is the numerically smallest table reachable by any of
//! the `2 * 2^k * k!` transforms.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::truth::TruthTable;

pub const NPN_MAX_VARS: usize = 4;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NpnTransform {
    pub perm: [u8; NPN_MAX_VARS],
    pub input_neg: u8,
    pub output_neg: bool,
    pub vars: u8,
}

impl NpnTransform {
    pub fn identity(vars: usize) -> Self {
        assert!(vars <= NPN_MAX_VARS);
        Self { perm: [0, 1, 2, 3], input_neg: 0, output_neg: false, vars: vars as u8 }
    }

    pub fn vars(&self) -> usize {
        self.vars as usize
    }

    pub fn input_negated(&self, i: usize) -> bool {
        (self.input_neg >> i) & 1 == 1
    }

    pub fn negation_count(&self) -> u32 {
        self.input_neg.count_ones() + self.output_neg as u32
    }

    pub fn inverse(&self) -> Self {
        let mut perm = [0, 1, 2, 3];
        let mut neg = 0u8;
        for i in 0..self.vars() {
            let p = self.perm[i] as usize;
            perm[p] = i as u8;
            if self.input_negated(i) {
                neg |= 1 << p;
            }
        }
        Self { perm, input_neg: neg, output_neg: self.output_neg, vars: self.vars }
    }

    /// The transform equal to applying `self` and then `next`.
    pub fn then(&self, next: &NpnTransform) -> Self {
        assert_eq!(self.vars, next.vars);
        let mut perm = [0, 1, 2, 3];
        let mut neg = 0u8;
        for (j, slot) in perm.iter_mut().enumerate().take(self.vars()) {
            let pb = next.perm[j] as usize;
            *slot = self.perm[pb];
            if next.input_negated(j) ^ self.input_negated(pb) {
                neg |= 1 << j;
            }
        }
        Self { perm, input_neg: neg, output_neg: self.output_neg ^ next.output_neg, vars: self.vars }
    }

    /// Source row index for every destination row.
    fn row_map(&self) -> [u8; 16] {
        let mut map = [0u8; 16];
        for (y, slot) in map.iter_mut().enumerate().take(1 << self.vars()) {
            let mut x = 0usize;
            for i in 0..self.vars() {
                let bit = ((y >> i) & 1) ^ (self.input_negated(i) as usize);
                x |= bit << self.perm[i];
            }
            *slot = x as u8;
        }
        map
    }
}

pub fn apply_transform(t: TruthTable, xf: &NpnTransform) -> TruthTable {
    assert_eq!(t.vars(), xf.vars(), "transform arity differs from table");
    apply_row_map(t, &xf.row_map(), xf.output_neg)
}

fn apply_row_map(t: TruthTable, map: &[u8; 16], output_neg: bool) -> TruthTable {
    let mut bits = 0u64;
    for (y, &x) in map.iter().enumerate().take(t.rows()) {
        if t.get(x as usize) ^ output_neg {
            bits |= 1 << y;
        }
    }
    TruthTable::new(bits, t.vars())
}

struct TransformSet {
    transforms: Vec<NpnTransform>,
    maps: Vec<[u8; 16]>,
}

fn permutations(k: usize) -> Vec<[u8; NPN_MAX_VARS]> {
    fn rec(k: usize, cur: &mut Vec<u8>, used: &mut [bool; NPN_MAX_VARS], out: &mut Vec<[u8; NPN_MAX_VARS]>) {
        if cur.len() == k {
            let mut p = [0, 1, 2, 3];
            p[..k].copy_from_slice(cur);
            out.push(p);
            return;
        }
        for v in 0..k {
            if !used[v] {
                used[v] = true;
                cur.push(v as u8);
                rec(k, cur, used, out);
                cur.pop();
                used[v] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(k, &mut Vec::new(), &mut [false; NPN_MAX_VARS], &mut out);
    out
}

/// Every transform over `k` variables in a fixed order: permutations in
/// lexicographic order, then input masks ascending, then output polarity.
fn transforms(k: usize) -> &'static TransformSet {
    static SETS: OnceLock<Vec<TransformSet>> = OnceLock::new();
    let sets = SETS.get_or_init(|| {
        (0..=NPN_MAX_VARS)
            .map(|k| {
                let mut transforms = Vec::new();
                for perm in permutations(k) {
                    for mask in 0..(1u8 << k) {
                        for out in [false, true] {
                            transforms.push(NpnTransform { perm, input_neg: mask, output_neg: out, vars: k as u8 });
                        }
                    }
                }
                let maps = transforms.iter().map(NpnTransform::row_map).collect();
                TransformSet { transforms, maps }
            })
            .collect()
    });
    &sets[k]
}

pub fn all_transforms(vars: usize) -> &'static [NpnTransform] {
    &transforms(vars).transforms
}

/// Canonical representative and the first transform (in enumeration order)
/// that produces it.
pub fn npn_canonical(t: TruthTable) -> (TruthTable, NpnTransform) {
    let (canon, all) = npn_canonical_all(t);
    (canon, all[0])
}

/// Canonical representative and every transform that maps `t` onto it.
pub fn npn_canonical_all(t: TruthTable) -> (TruthTable, Vec<NpnTransform>) {
    assert!(t.vars() <= NPN_MAX_VARS, "NPN canonicalization supports at most 4 variables");
    let set = transforms(t.vars());
    let mut best = u64::MAX;
    let mut which = Vec::new();
    for (xf, map) in set.transforms.iter().zip(&set.maps) {
        let bits = apply_row_map(t, map, xf.output_neg).bits();
        if bits < best {
            best = bits;
            which.clear();
        }
        if bits == best {
            which.push(*xf);
        }
    }
    (TruthTable::new(best, t.vars()), which)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table(k: usize) -> impl Strategy<Value = TruthTable> {
        any::<u64>().prop_map(move |b| TruthTable::new(b, k))
    }

    fn transform(k: usize) -> impl Strategy<Value = NpnTransform> {
        (0..all_transforms(k).len()).prop_map(move |i| all_transforms(k)[i])
    }

    #[test]
    fn transform_counts() {
        assert_eq!(all_transforms(1).len(), 4);
        assert_eq!(all_transforms(2).len(), 16);
        assert_eq!(all_transforms(4).len(), 768);
    }

    #[test]
    fn and_or_nand_nor_share_a_class() {
        let keys: Vec<_> = [0b1000, 0b0001, 0b1110, 0b0111].iter().map(|&b| npn_canonical(TruthTable::new(b, 2)).0).collect();
        assert!(keys.iter().all(|k| *k == keys[0]));
        assert_eq!(keys[0].bits(), 0b0001);
        // XOR is in a different class
        assert_ne!(npn_canonical(TruthTable::new(0b0110, 2)).0, keys[0]);
    }

    #[test]
    fn constant_zero_is_canonical() {
        for k in 0..=4 {
            let (canon, all) = npn_canonical_all(TruthTable::zero(k));
            assert_eq!(canon, TruthTable::zero(k));
            assert!(all.iter().any(|x| *x == NpnTransform::identity(k)));
        }
    }

    #[test]
    fn class_counts_match_known_values() {
        // 2, 4, 14 and 222 NPN classes over exactly 1..4 variables (counting all tables)
        for (k, expected) in [(1, 2), (2, 4), (3, 14), (4, 222)] {
            let mut seen = std::collections::HashSet::new();
            for b in 0..(1u64 << (1 << k)) {
                seen.insert(npn_canonical(TruthTable::new(b, k)).0);
            }
            assert_eq!(seen.len(), expected, "k = {k}");
        }
    }

    proptest! {
        #[test]
        fn returned_transform_reaches_canonical(k in 0usize..=4, bits in any::<u64>()) {
            let t = TruthTable::new(bits, k);
            let (canon, all) = npn_canonical_all(t);
            for xf in all {
                prop_assert_eq!(apply_transform(t, &xf), canon);
            }
        }

        #[test]
        fn canonical_is_idempotent(t in table(4)) {
            let (c, _) = npn_canonical(t);
            prop_assert_eq!(npn_canonical(c).0, c);
        }

        #[test]
        fn canonical_is_invariant_under_transforms((t, xf) in (2usize..=4).prop_flat_map(|k| (table(k), transform(k)))) {
            prop_assert_eq!(npn_canonical(apply_transform(t, &xf)).0, npn_canonical(t).0);
        }

        #[test]
        fn inverse_undoes_transform((t, xf) in (1usize..=4).prop_flat_map(|k| (table(k), transform(k)))) {
            prop_assert_eq!(apply_transform(apply_transform(t, &xf), &xf.inverse()), t);
        }

        #[test]
        fn composition_matches_sequential_application(
            (t, a, b) in (1usize..=4).prop_flat_map(|k| (table(k), transform(k), transform(k)))
        ) {
            let seq = apply_transform(apply_transform(t, &a), &b);
            prop_assert_eq!(apply_transform(t, &a.then(&b)), seq);
        }
    }

    #[test]
    fn idempotence_sweep() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let t = TruthTable::new(rng.random::<u64>(), 4);
            let c = npn_canonical(t).0;
            assert_eq!(npn_canonical(c).0, c);
        }
    }
}
