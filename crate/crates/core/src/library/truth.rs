// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use serde::{Deserialize, Serialize};

pub const MAX_TABLE_VARS: usize = 6;

/// Truth table over up to six variables. Bit `r` is the function value on the
/// assignment whose variable `i` equals bit `i` of `r`. Bits at positions
/// `>= 2^vars` are always zero.
#[derive(Copy, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TruthTable {
    bits: u64,
    vars: u8,
}

const PROJECTIONS: [u64; 6] = [
    0xAAAA_AAAA_AAAA_AAAA,
    0xCCCC_CCCC_CCCC_CCCC,
    0xF0F0_F0F0_F0F0_F0F0,
    0xFF00_FF00_FF00_FF00,
    0xFFFF_0000_FFFF_0000,
    0xFFFF_FFFF_0000_0000,
];

impl TruthTable {
    pub fn new(bits: u64, vars: usize) -> Self {
        assert!(vars <= MAX_TABLE_VARS, "at most {MAX_TABLE_VARS} variables");
        Self { bits: bits & Self::mask(vars), vars: vars as u8 }
    }

    fn mask(vars: usize) -> u64 {
        if vars == 6 {
            !0
        } else {
            (1u64 << (1 << vars)) - 1
        }
    }

    pub fn zero(vars: usize) -> Self {
        Self::new(0, vars)
    }

    /// The projection onto variable `i`.
    pub fn var(i: usize, vars: usize) -> Self {
        assert!(i < vars);
        Self::new(PROJECTIONS[i], vars)
    }

    pub fn bits(self) -> u64 {
        self.bits
    }

    pub fn vars(self) -> usize {
        self.vars as usize
    }

    pub fn rows(self) -> usize {
        1 << self.vars
    }

    pub fn get(self, row: usize) -> bool {
        (self.bits >> row) & 1 == 1
    }

    pub fn is_const(self) -> bool {
        self.bits == 0 || self.bits == Self::mask(self.vars())
    }

    /// Whether the function changes with variable `i`.
    pub fn depends_on(self, i: usize) -> bool {
        let shift = 1 << i;
        let p = PROJECTIONS[i] & Self::mask(self.vars());
        ((self.bits & p) >> shift) != (self.bits & !p & Self::mask(self.vars()))
    }

    pub fn has_full_support(self) -> bool {
        (0..self.vars()).all(|i| self.depends_on(i))
    }

    /// Re-expresses the table over `vars` variables where old variable `i`
    /// becomes variable `positions[i]`.
    pub fn expand(self, positions: &[usize], vars: usize) -> Self {
        debug_assert_eq!(positions.len(), self.vars());
        let mut bits = 0u64;
        for row in 0..(1usize << vars) {
            let mut old = 0;
            for (i, &p) in positions.iter().enumerate() {
                old |= ((row >> p) & 1) << i;
            }
            if self.get(old) {
                bits |= 1 << row;
            }
        }
        Self::new(bits, vars)
    }

    pub fn to_hex(self) -> String {
        let digits = (self.rows() / 4).max(1);
        format!("{:0width$x}", self.bits, width = digits)
    }
}

impl std::ops::Not for TruthTable {
    type Output = Self;
    fn not(self) -> Self {
        Self::new(!self.bits, self.vars())
    }
}

impl std::ops::BitAnd for TruthTable {
    type Output = Self;
    fn bitand(self, rhs: Self) -> Self {
        assert_eq!(self.vars, rhs.vars);
        Self::new(self.bits & rhs.bits, self.vars())
    }
}

impl std::ops::BitOr for TruthTable {
    type Output = Self;
    fn bitor(self, rhs: Self) -> Self {
        assert_eq!(self.vars, rhs.vars);
        Self::new(self.bits | rhs.bits, self.vars())
    }
}

impl std::ops::BitXor for TruthTable {
    type Output = Self;
    fn bitxor(self, rhs: Self) -> Self {
        assert_eq!(self.vars, rhs.vars);
        Self::new(self.bits ^ rhs.bits, self.vars())
    }
}

impl fmt::Debug for TruthTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}'h{}", self.vars, self.to_hex())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projections_and_masking() {
        assert_eq!(TruthTable::var(0, 1).bits(), 0b10);
        assert_eq!(TruthTable::var(0, 2).bits(), 0b1010);
        assert_eq!(TruthTable::var(1, 2).bits(), 0b1100);
        assert_eq!(TruthTable::new(0xFF, 2).bits(), 0xF);
        assert_eq!((!TruthTable::zero(3)).bits(), 0xFF);
    }

    #[test]
    fn support_detection() {
        let a = TruthTable::var(0, 3);
        let c = TruthTable::var(2, 3);
        let t = a & c;
        assert!(t.depends_on(0) && !t.depends_on(1) && t.depends_on(2));
        assert!(!t.has_full_support());
        assert!(TruthTable::zero(2).is_const());
    }

    #[test]
    fn expansion_moves_variables() {
        let and2 = TruthTable::new(0b1000, 2);
        // old var 0 -> new var 2, old var 1 -> new var 0
        let t = and2.expand(&[2, 0], 3);
        assert_eq!(t, TruthTable::var(2, 3) & TruthTable::var(0, 3));
    }

    #[test]
    fn hex_width_follows_rows() {
        assert_eq!(TruthTable::new(0b10, 1).to_hex(), "2");
        assert_eq!(TruthTable::new(0x8, 2).to_hex(), "8");
        assert_eq!(TruthTable::new(0x80, 3).to_hex(), "80");
        assert_eq!(TruthTable::new(0x8000, 4).to_hex(), "8000");
    }
}
