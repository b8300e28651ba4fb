// SPDX-License-Identifier: Apache-2.0

//! Standard-cell libraries read from genlib text.
//!
//! Only the pin block delays take part in timing. Load-dependent coefficients
//! are kept on [`Pin`] but contribute nothing to delay.

pub mod matching;
pub mod npn;
pub mod truth;

use serde::{Deserialize, Serialize};

use crate::error::LibraryError;

pub use matching::{build_match_table, verify_match, CellMatch, MatchTable};
pub use npn::{npn_canonical, NpnTransform};
pub use truth::TruthTable;

/// Largest supported cell fanin and cut size.
pub const K_MAX: usize = 4;

/// The 12-cell library used by tests, the demo, and the default CLI flows.
pub const BUNDLED_GENLIB: &str = include_str!("../../data/cells12.genlib");

/// Boolean expression over cell input pins (indices into `Cell::pins`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Const(bool),
    Var(usize),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Xor(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn eval(&self, inputs: &[bool]) -> bool {
        match self {
            Expr::Const(v) => *v,
            Expr::Var(i) => inputs[*i],
            Expr::Not(e) => !e.eval(inputs),
            Expr::And(a, b) => a.eval(inputs) && b.eval(inputs),
            Expr::Or(a, b) => a.eval(inputs) || b.eval(inputs),
            Expr::Xor(a, b) => a.eval(inputs) ^ b.eval(inputs),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pin {
    pub name: String,
    pub phase: String,
    pub input_load: f64,
    pub max_load: f64,
    pub rise_block: f64,
    pub rise_fanout: f64,
    pub fall_block: f64,
    pub fall_fanout: f64,
}

impl Pin {
    /// Scalar pin-to-output delay in picoseconds.
    pub fn delay(&self) -> f64 {
        self.rise_block.max(self.fall_block)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub name: String,
    pub area: f64,
    pub output: String,
    pub function: Expr,
    pub pins: Vec<Pin>,
}

impl Cell {
    pub fn fanin(&self) -> usize {
        self.pins.len()
    }

    pub fn pin_delay(&self, pin: usize) -> f64 {
        self.pins[pin].delay()
    }

    pub fn max_pin_delay(&self) -> f64 {
        self.pins.iter().map(Pin::delay).fold(0.0, f64::max)
    }

    /// Truth table with pin `i` as variable `i`.
    pub fn truth_table(&self) -> TruthTable {
        let k = self.fanin();
        let mut bits = 0u64;
        let mut row_inputs = vec![false; k];
        for row in 0..(1usize << k) {
            for (i, v) in row_inputs.iter_mut().enumerate() {
                *v = (row >> i) & 1 == 1;
            }
            if self.function.eval(&row_inputs) {
                bits |= 1 << row;
            }
        }
        TruthTable::new(bits, k)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Library {
    pub name: String,
    pub cells: Vec<Cell>,
    inverter: usize,
}

impl Library {
    /// Index of the smallest inverter cell.
    pub fn inverter(&self) -> usize {
        self.inverter
    }

    pub fn inverter_cell(&self) -> &Cell {
        &self.cells[self.inverter]
    }

    pub fn inverter_delay(&self) -> f64 {
        self.cells[self.inverter].pin_delay(0)
    }

    pub fn cell_index(&self, name: &str) -> Option<usize> {
        self.cells.iter().position(|c| c.name == name)
    }

    /// Skips the invariant checks of [`Library::from_cells`]; for tests that
    /// need degenerate libraries.
    #[cfg(test)]
    pub(crate) fn unchecked(name: &str, cells: Vec<Cell>, inverter: usize) -> Self {
        Self { name: name.into(), cells, inverter }
    }

    pub fn bundled() -> Self {
        parse_genlib(BUNDLED_GENLIB).expect("bundled library parses").with_name("cells12")
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Builds a library from cells, checking the inverter and AND2-class invariants.
    pub fn from_cells(name: impl Into<String>, cells: Vec<Cell>) -> Result<Self, LibraryError> {
        let inv_table = TruthTable::new(0b01, 1);
        let inverter = cells
            .iter()
            .enumerate()
            .filter(|(_, c)| c.fanin() == 1 && c.truth_table() == inv_table)
            .min_by(|(ia, a), (ib, b)| a.area.total_cmp(&b.area).then(a.max_pin_delay().total_cmp(&b.max_pin_delay())).then(ia.cmp(ib)))
            .map(|(i, _)| i)
            .ok_or(LibraryError::MissingInverter)?;
        let and2_class = npn_canonical(TruthTable::new(0b1000, 2)).0;
        if !cells.iter().any(|c| c.fanin() == 2 && npn_canonical(c.truth_table()).0 == and2_class) {
            return Err(LibraryError::MissingAnd2Class);
        }
        Ok(Self { name: name.into(), cells, inverter })
    }
}

// ---------------------------------------------------------------------------
// genlib parsing

struct ExprParser<'a> {
    chars: Vec<char>,
    pos: usize,
    names: &'a mut Vec<String>,
}

impl ExprParser<'_> {
    fn peek(&mut self) -> Option<char> {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
        self.chars.get(self.pos).copied()
    }

    // or := xor ('+' xor)*
    fn parse_or(&mut self) -> Result<Expr, String> {
        let mut lhs = self.parse_xor()?;
        while matches!(self.peek(), Some('+') | Some('|')) {
            self.pos += 1;
            lhs = Expr::Or(Box::new(lhs), Box::new(self.parse_xor()?));
        }
        Ok(lhs)
    }

    fn parse_xor(&mut self) -> Result<Expr, String> {
        let mut lhs = self.parse_and()?;
        while self.peek() == Some('^') {
            self.pos += 1;
            lhs = Expr::Xor(Box::new(lhs), Box::new(self.parse_and()?));
        }
        Ok(lhs)
    }

    fn parse_and(&mut self) -> Result<Expr, String> {
        let mut lhs = self.parse_unary()?;
        while matches!(self.peek(), Some('*') | Some('&')) {
            self.pos += 1;
            lhs = Expr::And(Box::new(lhs), Box::new(self.parse_unary()?));
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> Result<Expr, String> {
        let mut e = match self.peek() {
            Some('!') => {
                self.pos += 1;
                Expr::Not(Box::new(self.parse_unary()?))
            }
            Some('(') => {
                self.pos += 1;
                let e = self.parse_or()?;
                if self.peek() != Some(')') {
                    return Err("expected ')'".into());
                }
                self.pos += 1;
                e
            }
            Some(c) if c.is_alphanumeric() || c == '_' => {
                let start = self.pos;
                while self.pos < self.chars.len()
                    && (self.chars[self.pos].is_alphanumeric() || matches!(self.chars[self.pos], '_' | '[' | ']' | '.'))
                {
                    self.pos += 1;
                }
                let name: String = self.chars[start..self.pos].iter().collect();
                match name.as_str() {
                    "CONST0" => Expr::Const(false),
                    "CONST1" => Expr::Const(true),
                    _ => {
                        let idx = match self.names.iter().position(|n| *n == name) {
                            Some(i) => i,
                            None => {
                                self.names.push(name);
                                self.names.len() - 1
                            }
                        };
                        Expr::Var(idx)
                    }
                }
            }
            Some(c) => return Err(format!("unexpected character '{c}'")),
            None => return Err("unexpected end of expression".into()),
        };
        while self.peek() == Some('\'') {
            self.pos += 1;
            e = Expr::Not(Box::new(e));
        }
        Ok(e)
    }
}

/// Parses an expression, returning it with variable names in order of first use.
pub fn parse_expr(text: &str) -> Result<(Expr, Vec<String>), String> {
    let mut names = Vec::new();
    let mut p = ExprParser { chars: text.chars().collect(), pos: 0, names: &mut names };
    let e = p.parse_or()?;
    if p.peek().is_some() {
        return Err(format!("trailing input at column {}", p.pos + 1));
    }
    Ok((e, names))
}

struct Tokens<'a> {
    text: &'a str,
    pos: usize,
    line: usize,
}

impl<'a> Tokens<'a> {
    fn skip_ws(&mut self) {
        let bytes = self.text.as_bytes();
        while self.pos < bytes.len() {
            match bytes[self.pos] {
                b'\n' => {
                    self.line += 1;
                    self.pos += 1;
                }
                b'#' => {
                    while self.pos < bytes.len() && bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn next(&mut self) -> Option<&'a str> {
        self.skip_ws();
        let bytes = self.text.as_bytes();
        if self.pos >= bytes.len() {
            return None;
        }
        let start = self.pos;
        while self.pos < bytes.len() && !bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        Some(&self.text[start..self.pos])
    }

    fn peek(&mut self) -> Option<&'a str> {
        let (pos, line) = (self.pos, self.line);
        let t = self.next();
        self.pos = pos;
        self.line = line;
        t
    }

    /// Raw text up to (excluding) the next ';', which is consumed.
    fn until_semicolon(&mut self) -> Option<&'a str> {
        let rest = &self.text[self.pos..];
        let end = rest.find(';')?;
        let s = &rest[..end];
        self.line += s.matches('\n').count();
        self.pos += end + 1;
        Some(s)
    }
}

fn number(tok: Option<&str>, line: usize, what: &str) -> Result<f64, LibraryError> {
    let tok = tok.ok_or_else(|| LibraryError::Parse { line, message: format!("missing {what}") })?;
    tok.parse::<f64>().map_err(|_| LibraryError::Parse { line, message: format!("invalid {what} '{tok}'") })
}

/// Parses genlib text. `GATE <name> <area> <out>=<expr>;` followed by
/// `PIN <pin|*> <phase> <iload> <maxload> <rblock> <rfanout> <fblock> <ffanout>`
/// lines. Constant cells are skipped.
pub fn parse_genlib(text: &str) -> Result<Library, LibraryError> {
    let mut t = Tokens { text, pos: 0, line: 1 };
    let mut cells = Vec::new();
    while let Some(tok) = t.next() {
        let line = t.line;
        if tok != "GATE" {
            return Err(LibraryError::Parse { line, message: format!("expected GATE, found '{tok}'") });
        }
        let name = t.next().ok_or_else(|| LibraryError::Parse { line, message: "missing cell name".into() })?.to_string();
        let area = number(t.next(), line, "area")?;
        let body = t.until_semicolon().ok_or_else(|| LibraryError::Parse { line, message: "missing ';' after function".into() })?;
        let (output, expr_text) =
            body.split_once('=').ok_or_else(|| LibraryError::Parse { line, message: "function must be <out>=<expr>".into() })?;
        let (function, expr_names) =
            parse_expr(expr_text).map_err(|m| LibraryError::Parse { line, message: format!("cell {name}: {m}") })?;

        let mut pins: Vec<Pin> = Vec::new();
        let mut wildcard: Option<Pin> = None;
        while t.peek() == Some("PIN") {
            t.next();
            let pline = t.line;
            let pin_name = t.next().ok_or_else(|| LibraryError::Parse { line: pline, message: "missing pin name".into() })?.to_string();
            let phase = t.next().ok_or_else(|| LibraryError::Parse { line: pline, message: "missing pin phase".into() })?.to_string();
            let pin = Pin {
                name: pin_name.clone(),
                phase,
                input_load: number(t.next(), pline, "input load")?,
                max_load: number(t.next(), pline, "max load")?,
                rise_block: number(t.next(), pline, "rise block delay")?,
                rise_fanout: number(t.next(), pline, "rise fanout delay")?,
                fall_block: number(t.next(), pline, "fall block delay")?,
                fall_fanout: number(t.next(), pline, "fall fanout delay")?,
            };
            if pin_name == "*" {
                wildcard = Some(pin);
            } else {
                pins.push(pin);
            }
        }

        if expr_names.is_empty() {
            log::warn!("genlib: skipping constant cell {name}");
            continue;
        }
        let pins = match wildcard {
            Some(w) => expr_names.iter().map(|n| Pin { name: n.clone(), ..w.clone() }).collect(),
            None => pins,
        };
        let mut declared: Vec<&str> = pins.iter().map(|p| p.name.as_str()).collect();
        declared.sort_unstable();
        let mut used: Vec<&str> = expr_names.iter().map(String::as_str).collect();
        used.sort_unstable();
        if declared != used || declared.windows(2).any(|w| w[0] == w[1]) {
            return Err(LibraryError::Parse {
                line,
                message: format!("cell {name}: pins {declared:?} do not match function inputs {used:?}"),
            });
        }
        // Re-index the expression so Var(i) refers to pins[i].
        let order: Vec<usize> = expr_names.iter().map(|n| pins.iter().position(|p| p.name == *n).unwrap()).collect();
        let function = reindex(function, &order);
        if pins.len() > K_MAX {
            return Err(LibraryError::FaninTooLarge { cell: name, fanin: pins.len(), max: K_MAX });
        }
        cells.push(Cell { name, area, output: output.trim().to_string(), function, pins });
    }
    Library::from_cells("genlib", cells)
}

fn reindex(e: Expr, order: &[usize]) -> Expr {
    match e {
        Expr::Var(i) => Expr::Var(order[i]),
        Expr::Const(v) => Expr::Const(v),
        Expr::Not(a) => Expr::Not(Box::new(reindex(*a, order))),
        Expr::And(a, b) => Expr::And(Box::new(reindex(*a, order)), Box::new(reindex(*b, order))),
        Expr::Or(a, b) => Expr::Or(Box::new(reindex(*a, order)), Box::new(reindex(*b, order))),
        Expr::Xor(a, b) => Expr::Xor(Box::new(reindex(*a, order)), Box::new(reindex(*b, order))),
    }
}
