// SPDX-License-Identifier: Apache-2.0

//! AIGER reader and writer (ASCII `aag` and binary `aig`), combinational only.
//!
//! Symbol tables and the comment section are skipped on read and never
//! written.

use crate::aig::{Aig, AigBuilder, Edge};
use crate::error::AigerError;

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum AigerFormat {
    Ascii,
    Binary,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn err<T>(&self, offset: usize, message: impl Into<String>) -> Result<T, AigerError> {
        Err(AigerError { offset, message: message.into() })
    }

    fn skip_spaces(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos] == b' ' {
            self.pos += 1;
        }
    }

    /// Reads an unsigned decimal; returns `(value, start offset)`.
    fn number(&mut self) -> Result<(u32, usize), AigerError> {
        self.skip_spaces();
        let start = self.pos;
        let mut value: u64 = 0;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            value = value * 10 + (self.bytes[self.pos] - b'0') as u64;
            if value > u32::MAX as u64 {
                return self.err(start, "number out of range");
            }
            self.pos += 1;
        }
        if self.pos == start {
            return self.err(start, "expected a number");
        }
        Ok((value as u32, start))
    }

    fn at_line_end(&mut self) -> bool {
        self.skip_spaces();
        self.pos >= self.bytes.len() || self.bytes[self.pos] == b'\n'
    }

    fn end_line(&mut self) -> Result<(), AigerError> {
        self.skip_spaces();
        match self.bytes.get(self.pos) {
            Some(b'\n') => {
                self.pos += 1;
                Ok(())
            }
            None => self.err(self.pos, "unexpected end of input"),
            Some(_) => self.err(self.pos, "expected end of line"),
        }
    }

    fn varint(&mut self) -> Result<u32, AigerError> {
        let start = self.pos;
        let mut value: u64 = 0;
        let mut shift = 0;
        loop {
            let Some(&byte) = self.bytes.get(self.pos) else {
                return self.err(start, "truncated binary AND section");
            };
            self.pos += 1;
            value |= ((byte & 0x7f) as u64) << shift;
            if value > u32::MAX as u64 {
                return self.err(start, "binary delta out of range");
            }
            if byte & 0x80 == 0 {
                return Ok(value as u32);
            }
            shift += 7;
            if shift > 28 {
                return self.err(start, "binary delta too long");
            }
        }
    }
}

#[derive(Copy, Clone)]
enum VarDef {
    Undefined,
    Input,
    And { rhs0: (u32, usize), rhs1: (u32, usize) },
}

pub fn parse_aiger(bytes: &[u8]) -> Result<Aig, AigerError> {
    let mut c = Cursor { bytes, pos: 0 };
    let binary = if bytes.starts_with(b"aag") {
        false
    } else if bytes.starts_with(b"aig") {
        true
    } else {
        return c.err(0, "header must start with 'aag' or 'aig'");
    };
    c.pos = 3;
    let (max_var, _) = c.number()?;
    let (n_in, _) = c.number()?;
    let (n_latch, latch_at) = c.number()?;
    let (n_out, _) = c.number()?;
    let (n_and, _) = c.number()?;
    // AIGER 1.9 extension fields (bad, constraint, justice, fairness)
    while !c.at_line_end() {
        let (extra, at) = c.number()?;
        if extra != 0 {
            return c.err(at, "bad/constraint/justice/fairness properties are not supported");
        }
    }
    c.end_line()?;
    if n_latch > 0 {
        return c.err(latch_at, "latches are not supported (combinational AIGs only)");
    }
    if (max_var as u64) < n_in as u64 + n_and as u64 {
        return c.err(4, "maximum variable index is smaller than I + A");
    }
    if binary && max_var != n_in + n_and {
        return c.err(4, "binary AIGER requires M = I + L + A");
    }

    let mut defs = vec![VarDef::Undefined; max_var as usize + 1];
    let mut input_vars = Vec::with_capacity(n_in as usize);
    if binary {
        for v in 1..=n_in {
            defs[v as usize] = VarDef::Input;
            input_vars.push(v);
        }
    } else {
        for _ in 0..n_in {
            let (lit, at) = c.number()?;
            c.end_line()?;
            if lit < 2 || lit & 1 == 1 || lit / 2 > max_var {
                return c.err(at, format!("invalid input literal {lit}"));
            }
            if !matches!(defs[(lit / 2) as usize], VarDef::Undefined) {
                return c.err(at, format!("variable {} defined twice", lit / 2));
            }
            defs[(lit / 2) as usize] = VarDef::Input;
            input_vars.push(lit / 2);
        }
    }

    let mut outputs = Vec::with_capacity(n_out as usize);
    for _ in 0..n_out {
        let (lit, at) = c.number()?;
        c.end_line()?;
        if lit / 2 > max_var {
            return c.err(at, format!("output literal {lit} exceeds maximum variable"));
        }
        outputs.push((lit, at));
    }

    let mut and_vars = Vec::with_capacity(n_and as usize);
    for i in 0..n_and {
        if binary {
            let lhs = 2 * (n_in + 1 + i);
            let at = c.pos;
            let d0 = c.varint()?;
            let d1 = c.varint()?;
            if d0 == 0 || d0 > lhs {
                return c.err(at, "invalid binary delta");
            }
            let rhs0 = lhs - d0;
            if d1 > rhs0 {
                return c.err(at, "invalid binary delta");
            }
            let rhs1 = rhs0 - d1;
            defs[(lhs / 2) as usize] = VarDef::And { rhs0: (rhs0, at), rhs1: (rhs1, at) };
            and_vars.push(lhs / 2);
        } else {
            let (lhs, at) = c.number()?;
            let rhs0 = c.number()?;
            let rhs1 = c.number()?;
            c.end_line()?;
            if lhs < 2 || lhs & 1 == 1 || lhs / 2 > max_var {
                return c.err(at, format!("invalid AND literal {lhs}"));
            }
            for (lit, pos) in [rhs0, rhs1] {
                if lit / 2 > max_var {
                    return c.err(pos, format!("literal {lit} exceeds maximum variable"));
                }
            }
            if !matches!(defs[(lhs / 2) as usize], VarDef::Undefined) {
                return c.err(at, format!("variable {} defined twice", lhs / 2));
            }
            defs[(lhs / 2) as usize] = VarDef::And { rhs0, rhs1 };
            and_vars.push(lhs / 2);
        }
    }

    let mut b = AigBuilder::new("aig");
    let mut node_of: Vec<Option<Edge>> = vec![None; max_var as usize + 1];
    node_of[0] = Some(Edge::FALSE);
    for &v in &input_vars {
        node_of[v as usize] = Some(b.add_input());
    }

    let resolve = |node_of: &[Option<Edge>], (lit, _): (u32, usize)| -> Option<Edge> {
        node_of[(lit / 2) as usize].map(|e| if lit & 1 == 1 { !e } else { e })
    };

    // Iterative DFS so deep ASCII files with unordered ANDs do not overflow the stack.
    let mut on_stack = vec![false; max_var as usize + 1];
    for &root in &and_vars {
        if node_of[root as usize].is_some() {
            continue;
        }
        let mut stack = vec![root];
        on_stack[root as usize] = true;
        while let Some(&v) = stack.last() {
            let VarDef::And { rhs0, rhs1 } = defs[v as usize] else { unreachable!() };
            let mut pushed = false;
            for (lit, at) in [rhs0, rhs1] {
                let u = (lit / 2) as usize;
                if node_of[u].is_some() {
                    continue;
                }
                match defs[u] {
                    VarDef::Undefined => {
                        return c.err(at, format!("literal {lit} refers to an undefined variable"));
                    }
                    VarDef::Input => unreachable!("inputs are created up front"),
                    VarDef::And { .. } => {
                        if on_stack[u] {
                            return c.err(at, format!("combinational cycle through variable {u}"));
                        }
                        on_stack[u] = true;
                        stack.push(u as u32);
                        pushed = true;
                        break;
                    }
                }
            }
            if !pushed {
                stack.pop();
                on_stack[v as usize] = false;
                let a = resolve(&node_of, rhs0).unwrap();
                let bb = resolve(&node_of, rhs1).unwrap();
                node_of[v as usize] = Some(b.add_and(a, bb));
            }
        }
    }

    for &(lit, at) in &outputs {
        match resolve(&node_of, (lit, at)) {
            Some(e) => b.add_output(e),
            None => return c.err(at, format!("output literal {lit} refers to an undefined variable")),
        }
    }
    Ok(b.finish())
}

fn push_varint(out: &mut Vec<u8>, mut x: u32) {
    while x & !0x7f != 0 {
        out.push((x & 0x7f) as u8 | 0x80);
        x >>= 7;
    }
    out.push(x as u8);
}

pub fn write_aiger(g: &Aig, format: AigerFormat) -> Vec<u8> {
    let mut out = Vec::new();
    let tag = match format {
        AigerFormat::Ascii => "aag",
        AigerFormat::Binary => "aig",
    };
    out.extend_from_slice(format!("{tag} {} {} 0 {} {}\n", g.num_nodes() - 1, g.num_inputs(), g.outputs().len(), g.num_ands()).as_bytes());
    if format == AigerFormat::Ascii {
        for v in g.inputs() {
            out.extend_from_slice(format!("{}\n", 2 * v).as_bytes());
        }
    }
    for e in g.outputs() {
        out.extend_from_slice(format!("{}\n", e.literal()).as_bytes());
    }
    for id in g.and_nodes() {
        let [a, b] = g.fanins(id);
        let lhs = 2 * id;
        match format {
            AigerFormat::Ascii => {
                out.extend_from_slice(format!("{lhs} {} {}\n", a.literal(), b.literal()).as_bytes());
            }
            AigerFormat::Binary => {
                let (hi, lo) = if a.literal() >= b.literal() { (a, b) } else { (b, a) };
                push_varint(&mut out, lhs - hi.literal());
                push_varint(&mut out, hi.literal() - lo.literal());
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aig::generate_random_aig;

    #[test]
    fn parses_buffer() {
        let g = parse_aiger(b"aag 1 1 0 1 0\n2\n2\n").unwrap();
        assert_eq!(g.num_inputs(), 1);
        assert_eq!(g.outputs(), &[Edge::new(1, false)]);
    }

    #[test]
    fn parses_and2() {
        let g = parse_aiger(b"aag 3 2 0 1 1\n2\n4\n6\n6 2 4\n").unwrap();
        assert_eq!(g.num_inputs(), 2);
        assert_eq!(g.num_ands(), 1);
        assert_eq!(g.fanins(3), [Edge::new(1, false), Edge::new(2, false)]);
    }

    #[test]
    fn writes_canonical_forms() {
        let g = parse_aiger(b"aag 1 1 0 1 0\n2\n2\n").unwrap();
        assert_eq!(write_aiger(&g, AigerFormat::Ascii), b"aag 1 1 0 1 0\n2\n2\n");
        let g = parse_aiger(b"aag 3 2 0 1 1\n2\n4\n6\n6 2 4\n").unwrap();
        let text = String::from_utf8(write_aiger(&g, AigerFormat::Ascii)).unwrap();
        assert!(text.ends_with("6 2 4\n"), "{text}");
    }

    #[test]
    fn accepts_unordered_ascii_ands_and_symbols() {
        let text = b"aag 5 2 0 1 2\n2\n4\n10\n10 8 3\n8 2 4\ni0 a\no0 z\nc\nanything\n";
        let g = parse_aiger(text).unwrap();
        assert_eq!(g.num_ands(), 2);
        let [a, b] = g.fanins(4);
        assert_eq!((a, b), (Edge::new(3, false), Edge::new(1, true)));
    }

    #[test]
    fn rejects_latches_with_offset() {
        let err = parse_aiger(b"aag 1 0 1 0 0\n2 3\n").unwrap_err();
        assert_eq!(err.offset, 8);
        assert!(err.message.contains("latch"));
    }

    #[test]
    fn rejects_dangling_literal() {
        let err = parse_aiger(b"aag 3 1 0 1 1\n2\n6\n6 2 4\n").unwrap_err();
        assert_eq!(err.offset, 22);
    }

    #[test]
    fn rejects_malformed_header() {
        assert_eq!(parse_aiger(b"xyz 1 1 0 1 0\n").unwrap_err().offset, 0);
        assert!(parse_aiger(b"aag 1 1\n").is_err());
    }

    #[test]
    fn rejects_cycles() {
        assert!(parse_aiger(b"aag 3 1 0 1 2\n2\n6\n6 2 4\n4 6 2\n").is_err());
    }

    #[test]
    fn binary_and2() {
        let g = parse_aiger(b"aag 3 2 0 1 1\n2\n4\n6\n6 4 2\n").unwrap();
        let bin = write_aiger(&g, AigerFormat::Binary);
        assert_eq!(bin, b"aig 3 2 0 1 1\n6\n\x02\x02");
        assert_eq!(parse_aiger(&bin).unwrap(), g);
    }

    #[test]
    fn round_trips_random_graphs() {
        for seed in 0..1000u64 {
            let g = generate_random_aig(seed, 1 + (seed % 12) as usize, (seed % 80) as usize);
            for format in [AigerFormat::Ascii, AigerFormat::Binary] {
                let back = parse_aiger(&write_aiger(&g, format)).unwrap();
                assert_eq!(back.with_name(g.name()), g, "seed {seed} {format:?}");
            }
        }
    }
}
