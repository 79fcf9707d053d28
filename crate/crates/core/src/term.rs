//! Circuit terms: the free traced symmetric monoidal syntax over a signature.
//!
//! Composition is written in diagrammatic order (`f ; g` runs `f` first) and
//! `*` is the tensor. `Trace(k, f)` ties the last `k` outputs of `f` back to
//! its last `k` inputs.

use std::fmt;

use thiserror::Error;

use crate::lattice::{Lattice, Signature, Value, RESERVED};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Arity {
    pub inputs: usize,
    pub outputs: usize,
}

impl Arity {
    pub fn new(inputs: usize, outputs: usize) -> Self {
        Arity { inputs, outputs }
    }
}

impl fmt::Display for Arity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}→{}", self.inputs, self.outputs)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Id(usize),
    Sym(usize, usize),
    Gate(String),
    Value(Value),
    Delay,
    Fork,
    Join,
    Stub,
    Box { name: String, inputs: usize, outputs: usize },
    Seq(Box<Term>, Box<Term>),
    Tensor(Box<Term>, Box<Term>),
    Trace(usize, Box<Term>),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TermError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("unknown gate or value `{0}`")]
    UnknownName(String),
    #[error("arity mismatch: cannot compose {left} with {right}")]
    SeqMismatch { left: Arity, right: Arity },
    #[error("cannot trace {width} wires of a {arity} circuit")]
    TraceMismatch { width: usize, arity: Arity },
    #[error("iter {width} needs a circuit m+{width}→{width}, got {arity}")]
    IterMismatch { width: usize, arity: Arity },
    #[error("waveform must contain at least one value")]
    EmptyWaveform,
    #[error("box `{name}` used with arities {first} and {second}")]
    BoxMismatch { name: String, first: Arity, second: Arity },
}

impl Term {
    pub fn seq(a: Term, b: Term) -> Term {
        Term::Seq(Box::new(a), Box::new(b))
    }

    pub fn tensor(a: Term, b: Term) -> Term {
        Term::Tensor(Box::new(a), Box::new(b))
    }

    pub fn trace(k: usize, t: Term) -> Term {
        Term::Trace(k, Box::new(t))
    }

    /// Left-nested composition of a nonempty sequence.
    pub fn seq_all(parts: impl IntoIterator<Item = Term>) -> Term {
        let mut it = parts.into_iter();
        let first = it.next().expect("seq_all of nothing");
        it.fold(first, Term::seq)
    }

    /// Left-nested tensor; the empty tensor is `id 0`.
    pub fn tensor_all(parts: impl IntoIterator<Item = Term>) -> Term {
        let mut it = parts.into_iter();
        match it.next() {
            None => Term::Id(0),
            Some(first) => it.fold(first, Term::tensor),
        }
    }

    /// Arity under the monoidal typing rules; gate arities come from `sig`.
    pub fn arity(&self, sig: &Signature) -> Result<Arity, TermError> {
        infer_arity(self, sig)
    }

    pub fn display<'a>(&'a self, lattice: &'a Lattice) -> TermDisplay<'a> {
        TermDisplay { term: self, lattice, unicode: false }
    }

    pub fn display_unicode<'a>(&'a self, lattice: &'a Lattice) -> TermDisplay<'a> {
        TermDisplay { term: self, lattice, unicode: true }
    }

    /// Number of `Delay` leaves.
    pub fn delay_count(&self) -> usize {
        match self {
            Term::Delay => 1,
            Term::Seq(a, b) | Term::Tensor(a, b) => a.delay_count() + b.delay_count(),
            Term::Trace(_, t) => t.delay_count(),
            _ => 0,
        }
    }
}

pub fn infer_arity(term: &Term, sig: &Signature) -> Result<Arity, TermError> {
    Ok(match term {
        Term::Id(n) => Arity::new(*n, *n),
        Term::Sym(m, n) => Arity::new(m + n, m + n),
        Term::Gate(name) => {
            let g = sig.gate(name).ok_or_else(|| TermError::UnknownName(name.clone()))?;
            Arity::new(g.arity(), 1)
        }
        Term::Value(_) => Arity::new(0, 1),
        Term::Delay => Arity::new(1, 1),
        Term::Fork => Arity::new(1, 2),
        Term::Join => Arity::new(2, 1),
        Term::Stub => Arity::new(1, 0),
        Term::Box { inputs, outputs, .. } => Arity::new(*inputs, *outputs),
        Term::Seq(a, b) => {
            let (l, r) = (infer_arity(a, sig)?, infer_arity(b, sig)?);
            if l.outputs != r.inputs {
                return Err(TermError::SeqMismatch { left: l, right: r });
            }
            Arity::new(l.inputs, r.outputs)
        }
        Term::Tensor(a, b) => {
            let (l, r) = (infer_arity(a, sig)?, infer_arity(b, sig)?);
            Arity::new(l.inputs + r.inputs, l.outputs + r.outputs)
        }
        Term::Trace(k, t) => {
            let a = infer_arity(t, sig)?;
            if a.inputs < *k || a.outputs < *k {
                return Err(TermError::TraceMismatch { width: *k, arity: a });
            }
            Arity::new(a.inputs - k, a.outputs - k)
        }
    })
}

// ---------------------------------------------------------------------------
// derived forms

/// The diagonal Δ_n : n → 2n, copying a bus of width n.
pub fn diag(n: usize) -> Term {
    match n {
        0 => Term::Id(0),
        1 => Term::Fork,
        _ => {
            let k = n - 1;
            // (Δ_k ⊗ fork) ; (k ⊗ x_{k,1} ⊗ 1)
            Term::seq(
                Term::tensor(diag(k), Term::Fork),
                Term::tensor_all([Term::Id(k), Term::Sym(k, 1), Term::Id(1)]),
            )
        }
    }
}

/// The join of width n, ∇_n : 2n → n.
pub fn codiag(n: usize) -> Term {
    match n {
        0 => Term::Id(0),
        1 => Term::Join,
        _ => {
            let k = n - 1;
            Term::seq(
                Term::tensor_all([Term::Id(k), Term::Sym(1, k), Term::Id(1)]),
                Term::tensor(codiag(k), Term::Join),
            )
        }
    }
}

/// iter^n(f) for f : m+n → n, with the fed-back bus on the last n wires.
pub fn iter(n: usize, f: Term, sig: &Signature) -> Result<Term, TermError> {
    let a = infer_arity(&f, sig)?;
    if a.outputs != n || a.inputs < n {
        return Err(TermError::IterMismatch { width: n, arity: a });
    }
    Ok(Term::trace(n, Term::seq(f, diag(n))))
}

/// A waveform term; `values[0]` is visible now, `values[1]` one tick later, ...
pub fn make_waveform(values: &[Value]) -> Result<Term, TermError> {
    let (&last, rest) = values.split_last().ok_or(TermError::EmptyWaveform)?;
    // s_0 = v_0 (the value seen last), s_{k+1} = (s_k·δ ⊗ v_{k+1})·⋎
    let mut acc = Term::Value(last);
    for &v in rest.iter().rev() {
        acc = Term::seq(Term::tensor(Term::seq(acc, Term::Delay), Term::Value(v)), Term::Join);
    }
    Ok(acc)
}

/// The transistor-level library available over `mos6`: `inv`, `pass` and `mux`.
pub fn mos6_library(name: &str, sig: &Signature) -> Option<Term> {
    let lat = sig.lattice();
    let (h, l) = (lat.lookup("h")?, lat.lookup("l")?);
    sig.gate("n")?;
    sig.gate("p")?;
    let inv = || {
        Term::seq_all([
            Term::Fork,
            Term::tensor_all([Term::Id(1), Term::Value(h), Term::Id(1), Term::Value(l)]),
            Term::tensor(Term::Gate("p".into()), Term::Gate("n".into())),
            Term::Join,
        ])
    };
    let pass = || {
        Term::seq_all([
            Term::tensor(Term::Fork, Term::Fork),
            Term::tensor(inv(), Term::Id(3)),
            Term::tensor_all([Term::Id(1), Term::Sym(1, 1), Term::Id(1)]),
            Term::tensor(Term::Gate("p".into()), Term::Gate("n".into())),
            Term::Join,
        ])
    };
    match name {
        "inv" => Some(inv()),
        "pass" => Some(pass()),
        "mux" => Some(Term::seq_all([
            Term::tensor(Term::Fork, Term::Id(2)),
            Term::tensor_all([Term::Id(1), Term::Sym(1, 1), Term::Id(1)]),
            Term::tensor_all([Term::Id(2), inv(), Term::Id(1)]),
            Term::tensor(pass(), pass()),
            Term::Join,
        ])),
        _ => None,
    }
}

// ---------------------------------------------------------------------------
// pretty printing

pub struct TermDisplay<'a> {
    term: &'a Term,
    lattice: &'a Lattice,
    unicode: bool,
}

#[derive(Clone, Copy, PartialEq, PartialOrd)]
enum Prec {
    Seq,
    Tensor,
    Atom,
}

impl TermDisplay<'_> {
    fn write(&self, t: &Term, prec: Prec, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (seq, ten) = if self.unicode { (" · ", " ⊗ ") } else { (" ; ", " * ") };
        match t {
            Term::Seq(a, b) => {
                let paren = prec > Prec::Seq;
                if paren {
                    write!(f, "(")?;
                }
                self.write(a, Prec::Seq, f)?;
                write!(f, "{seq}")?;
                self.write(b, Prec::Tensor, f)?;
                if paren {
                    write!(f, ")")?;
                }
                Ok(())
            }
            Term::Tensor(a, b) => {
                let paren = prec > Prec::Tensor;
                if paren {
                    write!(f, "(")?;
                }
                self.write(a, Prec::Tensor, f)?;
                write!(f, "{ten}")?;
                self.write(b, Prec::Atom, f)?;
                if paren {
                    write!(f, ")")?;
                }
                Ok(())
            }
            Term::Trace(k, body) => {
                write!(f, "tr {k} (")?;
                self.write(body, Prec::Seq, f)?;
                write!(f, ")")
            }
            Term::Id(n) => write!(f, "id {n}"),
            Term::Sym(m, n) => write!(f, "sym {m} {n}"),
            Term::Gate(name) => write!(f, "{name}"),
            Term::Value(v) => {
                if self.unicode {
                    write!(f, "{}", self.lattice.symbol(*v))
                } else {
                    write!(f, "{}", self.lattice.name_of(*v))
                }
            }
            Term::Delay => write!(f, "{}", if self.unicode { "δ" } else { "delay" }),
            Term::Fork => write!(f, "fork"),
            Term::Join => write!(f, "{}", if self.unicode { "⋎" } else { "join" }),
            Term::Stub => write!(f, "stub"),
            Term::Box { name, inputs, outputs } => write!(f, "box {name} {inputs} {outputs}"),
        }
    }
}

impl fmt::Display for TermDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(self.term, Prec::Seq, f)
    }
}

// ---------------------------------------------------------------------------
// parsing

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Word(String),
    Nat(usize),
    Semi,
    Star,
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
}

struct Lexer<'a> {
    src: &'a str,
    toks: Vec<(Tok, usize, usize)>,
}

impl<'a> Lexer<'a> {
    fn run(src: &'a str) -> Result<Vec<(Tok, usize, usize)>, TermError> {
        let mut lx = Lexer { src, toks: Vec::new() };
        lx.lex()?;
        Ok(lx.toks)
    }

    fn lex(&mut self) -> Result<(), TermError> {
        for (li, line) in self.src.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("");
            let chars: Vec<(usize, char)> = line.char_indices().collect();
            let mut i = 0;
            while i < chars.len() {
                let (_, c) = chars[i];
                let col = i + 1;
                let simple = match c {
                    ';' | '·' => Some(Tok::Semi),
                    '*' | '⊗' => Some(Tok::Star),
                    '(' => Some(Tok::LParen),
                    ')' => Some(Tok::RParen),
                    '[' => Some(Tok::LBrack),
                    ']' => Some(Tok::RBrack),
                    ',' => Some(Tok::Comma),
                    _ => None,
                };
                if let Some(t) = simple {
                    self.toks.push((t, li + 1, col));
                    i += 1;
                } else if c.is_whitespace() {
                    i += 1;
                } else if c.is_ascii_digit() {
                    let start = i;
                    while i < chars.len() && chars[i].1.is_ascii_digit() {
                        i += 1;
                    }
                    let s: String = chars[start..i].iter().map(|p| p.1).collect();
                    let n = s.parse().map_err(|_| TermError::Syntax {
                        line: li + 1,
                        col,
                        msg: "number too large".into(),
                    })?;
                    self.toks.push((Tok::Nat(n), li + 1, col));
                } else if c.is_alphanumeric() || c == '_' || c == '⊥' || c == '⊤' || c == 'δ' || c == '⋎' || c == '.' || c == '/' || c == '-' {
                    let start = i;
                    while i < chars.len() {
                        let d = chars[i].1;
                        if d.is_alphanumeric() || d == '_' || d == '⊥' || d == '⊤' || d == 'δ' || d == '⋎' || d == '.' || d == '/' || d == '-' {
                            i += 1;
                        } else {
                            break;
                        }
                    }
                    let s: String = chars[start..i].iter().map(|p| p.1).collect();
                    self.toks.push((Tok::Word(s), li + 1, col));
                } else {
                    return Err(TermError::Syntax { line: li + 1, col, msg: format!("unexpected character `{c}`") });
                }
            }
        }
        Ok(())
    }
}

struct Parser<'s> {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
    sig: &'s Signature,
    boxes: Vec<(String, Arity)>,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, TermError> {
        let (line, col) = self
            .toks
            .get(self.pos)
            .map(|t| (t.1, t.2))
            .or_else(|| self.toks.last().map(|t| (t.1, t.2 + 1)))
            .unwrap_or((1, 1));
        Err(TermError::Syntax { line, col, msg: msg.into() })
    }

    fn expect(&mut self, tok: Tok) -> Result<(), TermError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected {tok:?}"))
        }
    }

    fn nat(&mut self) -> Result<usize, TermError> {
        match self.peek() {
            Some(Tok::Nat(n)) => {
                let n = *n;
                self.pos += 1;
                Ok(n)
            }
            _ => self.err("expected a natural number"),
        }
    }

    fn word(&mut self) -> Result<String, TermError> {
        match self.peek() {
            Some(Tok::Word(w)) => {
                let w = w.clone();
                self.pos += 1;
                Ok(w)
            }
            _ => self.err("expected a name"),
        }
    }

    fn seq(&mut self) -> Result<Term, TermError> {
        let mut t = self.tensor()?;
        while self.peek() == Some(&Tok::Semi) {
            self.pos += 1;
            let r = self.tensor()?;
            t = Term::seq(t, r);
        }
        Ok(t)
    }

    fn tensor(&mut self) -> Result<Term, TermError> {
        let mut t = self.atom()?;
        while self.peek() == Some(&Tok::Star) {
            self.pos += 1;
            let r = self.atom()?;
            t = Term::tensor(t, r);
        }
        Ok(t)
    }

    fn parens(&mut self) -> Result<Term, TermError> {
        self.expect(Tok::LParen)?;
        let t = self.seq()?;
        self.expect(Tok::RParen)?;
        Ok(t)
    }

    fn value(&self, w: &str) -> Option<Value> {
        self.sig.lattice().lookup(w)
    }

    fn atom(&mut self) -> Result<Term, TermError> {
        if self.peek() == Some(&Tok::LParen) {
            return self.parens();
        }
        let w = self.word()?;
        Ok(match w.as_str() {
            "id" => Term::Id(self.nat()?),
            "sym" => {
                let m = self.nat()?;
                Term::Sym(m, self.nat()?)
            }
            "fork" => Term::Fork,
            "join" | "⋎" => Term::Join,
            "stub" => Term::Stub,
            "delay" | "δ" => Term::Delay,
            "box" => {
                let name = self.word()?;
                let (m, n) = (self.nat()?, self.nat()?);
                let a = Arity::new(m, n);
                if let Some((_, prev)) = self.boxes.iter().find(|(b, _)| *b == name) {
                    if *prev != a {
                        return Err(TermError::BoxMismatch { name, first: *prev, second: a });
                    }
                } else {
                    self.boxes.push((name.clone(), a));
                }
                Term::Box { name, inputs: m, outputs: n }
            }
            "wave" => {
                self.expect(Tok::LBrack)?;
                let mut vals = Vec::new();
                while self.peek() != Some(&Tok::RBrack) {
                    let name = self.word()?;
                    vals.push(self.value(&name).ok_or(TermError::UnknownName(name))?);
                    if self.peek() == Some(&Tok::Comma) {
                        self.pos += 1;
                    }
                }
                self.expect(Tok::RBrack)?;
                make_waveform(&vals)?
            }
            "tr" => {
                let k = self.nat()?;
                let body = self.parens()?;
                let a = infer_arity(&body, self.sig)?;
                if a.inputs < k || a.outputs < k {
                    return Err(TermError::TraceMismatch { width: k, arity: a });
                }
                Term::trace(k, body)
            }
            "iter" => {
                let k = self.nat()?;
                let body = self.parens()?;
                iter(k, body, self.sig)?
            }
            "diag" => diag(self.nat()?),
            "codiag" => codiag(self.nat()?),
            _ => {
                if self.sig.gate(&w).is_some() {
                    Term::Gate(w)
                } else if let Some(v) = self.value(&w) {
                    Term::Value(v)
                } else if let Some(t) = (self.sig.name() == "mos6").then(|| mos6_library(&w, self.sig)).flatten() {
                    t
                } else if RESERVED.contains(&w.as_str()) {
                    return self.err(format!("misplaced keyword `{w}`"));
                } else {
                    return Err(TermError::UnknownName(w));
                }
            }
        })
    }
}

/// Parses a circuit term and checks its arity. A leading `use` line, if any,
/// must already have been stripped (see [`split_use`]).
pub fn parse(text: &str, sig: &Signature) -> Result<Term, TermError> {
    let toks = Lexer::run(text)?;
    let mut p = Parser { toks, pos: 0, sig, boxes: Vec::new() };
    if p.peek().is_none() {
        return p.err("empty circuit");
    }
    let t = p.seq()?;
    if p.peek().is_some() {
        return p.err("trailing input");
    }
    infer_arity(&t, sig)?;
    Ok(t)
}

/// Splits an optional leading `use <signature>` directive off a circuit file.
pub fn split_use(text: &str) -> (Option<String>, String) {
    let mut lines = text.lines();
    let mut skipped = Vec::new();
    for line in lines.by_ref() {
        let code = line.split('#').next().unwrap_or("").trim();
        if code.is_empty() {
            skipped.push("");
            continue;
        }
        if let Some(rest) = code.strip_prefix("use ") {
            let body: Vec<&str> = skipped.into_iter().chain(std::iter::once("")).chain(lines).collect();
            return (Some(rest.trim().to_string()), body.join("\n"));
        }
        break;
    }
    (None, text.to_string())
}
