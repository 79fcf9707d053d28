//! Finite value lattices and gate signatures.
//!
//! A [`Signature`] fixes the carrier of wire levels together with its join
//! table and a list of gates, each given by a total truth table. Signatures
//! are read from a small line-oriented text format; the two built-in ones
//! (`bool4` and `mos6`) are embedded data files in that same format.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

const BOOL4_SRC: &str = include_str!("../data/bool4.sig");
const MOS6_SRC: &str = include_str!("../data/mos6.sig");

/// Names that can never be used for gates or values.
pub const RESERVED: &[&str] = &[
    "id", "sym", "fork", "join", "stub", "delay", "box", "wave", "tr", "iter", "diag", "codiag",
    "use",
];

/// A carrier index into some [`Lattice`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Value(pub u8);

impl Value {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SignatureError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("not a lattice: {0}")]
    NotALattice(String),
    #[error("gate `{gate}`: {msg}")]
    BadGate { gate: String, msg: String },
    #[error("unknown signature `{0}`")]
    Unknown(String),
}

#[derive(Clone, Debug)]
pub struct Lattice {
    name: String,
    names: Vec<String>,
    join: Vec<Value>,
    bottom: Value,
    top: Value,
    height: usize,
}

impl Lattice {
    /// Builds a lattice from value names and a full join table
    /// (`join[a * size + b]`), checking the lattice laws.
    pub fn from_join_table(
        name: &str,
        names: Vec<String>,
        join: Vec<Value>,
    ) -> Result<Self, SignatureError> {
        let n = names.len();
        if n == 0 || n > 255 {
            return Err(SignatureError::NotALattice("carrier size must be 1..=255".into()));
        }
        if join.len() != n * n || join.iter().any(|v| v.index() >= n) {
            return Err(SignatureError::NotALattice("join table is not total".into()));
        }
        let j = |a: usize, b: usize| join[a * n + b].index();
        for a in 0..n {
            if j(a, a) != a {
                return Err(SignatureError::NotALattice(format!("join not idempotent at {}", names[a])));
            }
            for b in 0..n {
                if j(a, b) != j(b, a) {
                    return Err(SignatureError::NotALattice(format!(
                        "join not commutative at ({}, {})",
                        names[a], names[b]
                    )));
                }
                for c in 0..n {
                    if j(j(a, b), c) != j(a, j(b, c)) {
                        return Err(SignatureError::NotALattice(format!(
                            "join not associative at ({}, {}, {})",
                            names[a], names[b], names[c]
                        )));
                    }
                }
            }
        }
        let bottom = (0..n)
            .find(|&b| (0..n).all(|a| j(b, a) == a))
            .ok_or_else(|| SignatureError::NotALattice("no bottom element".into()))?;
        let top = (0..n)
            .find(|&t| (0..n).all(|a| j(t, a) == t))
            .ok_or_else(|| SignatureError::NotALattice("no top element".into()))?;
        let mut lat = Lattice {
            name: name.to_string(),
            names,
            join,
            bottom: Value(bottom as u8),
            top: Value(top as u8),
            height: 0,
        };
        lat.height = lat.compute_height();
        Ok(lat)
    }

    /// Builds a lattice from covering pairs `a ⊑ b`, completing the join
    /// table as least upper bounds of the reflexive-transitive closure.
    pub fn from_order(
        name: &str,
        names: Vec<String>,
        pairs: &[(usize, usize)],
    ) -> Result<Self, SignatureError> {
        let n = names.len();
        let mut le = vec![vec![false; n]; n];
        for (a, row) in le.iter_mut().enumerate() {
            row[a] = true;
        }
        for &(a, b) in pairs {
            le[a][b] = true;
        }
        for k in 0..n {
            for a in 0..n {
                for b in 0..n {
                    if le[a][k] && le[k][b] {
                        le[a][b] = true;
                    }
                }
            }
        }
        for a in 0..n {
            for b in 0..n {
                if a != b && le[a][b] && le[b][a] {
                    return Err(SignatureError::NotALattice(format!(
                        "order is not antisymmetric: {} and {}",
                        names[a], names[b]
                    )));
                }
            }
        }
        let mut join = Vec::with_capacity(n * n);
        for a in 0..n {
            for b in 0..n {
                let ubs: Vec<usize> = (0..n).filter(|&u| le[a][u] && le[b][u]).collect();
                let lub = ubs
                    .iter()
                    .copied()
                    .find(|&u| ubs.iter().all(|&w| le[u][w]))
                    .ok_or_else(|| {
                        SignatureError::NotALattice(format!(
                            "{} and {} have no least upper bound",
                            names[a], names[b]
                        ))
                    })?;
                join.push(Value(lub as u8));
            }
        }
        Self::from_join_table(name, names, join)
    }

    fn compute_height(&self) -> usize {
        // longest strict chain, by DP over a topological order of ⊑
        let n = self.size();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&a| (0..n).filter(|&b| self.leq(Value(b as u8), Value(a as u8))).count());
        let mut depth = vec![0usize; n];
        for (i, &a) in order.iter().enumerate() {
            for &b in &order[..i] {
                if b != a && self.leq(Value(b as u8), Value(a as u8)) {
                    depth[a] = depth[a].max(depth[b] + 1);
                }
            }
        }
        depth.into_iter().max().unwrap_or(0)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn size(&self) -> usize {
        self.names.len()
    }

    pub fn bottom(&self) -> Value {
        self.bottom
    }

    pub fn top(&self) -> Value {
        self.top
    }

    /// Length of the longest strict chain.
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> impl Iterator<Item = Value> + '_ {
        (0..self.size()).map(|i| Value(i as u8))
    }

    pub fn join(&self, a: Value, b: Value) -> Value {
        self.join[a.index() * self.size() + b.index()]
    }

    pub fn leq(&self, a: Value, b: Value) -> bool {
        self.join(a, b) == b
    }

    /// ASCII name as used in circuit and signature files.
    pub fn name_of(&self, v: Value) -> &str {
        &self.names[v.index()]
    }

    /// Display symbol: `⊥` and `⊤` for the extremes, the plain name otherwise.
    pub fn symbol(&self, v: Value) -> &str {
        if v == self.bottom {
            "⊥"
        } else if v == self.top {
            "⊤"
        } else {
            self.name_of(v)
        }
    }

    /// Resolves a value name, accepting `⊥`/`bot` and `⊤`/`top` for the extremes.
    pub fn lookup(&self, name: &str) -> Option<Value> {
        if let Some(i) = self.names.iter().position(|n| n == name) {
            return Some(Value(i as u8));
        }
        match name {
            "⊥" | "bot" => Some(self.bottom),
            "⊤" | "top" => Some(self.top),
            _ => None,
        }
    }
}

/// Residual behaviour of a gate once one input is pinned.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Residual {
    ConstantOutput(Value),
    /// The output equals the input at this (original) port; the other
    /// unpinned inputs are discarded.
    ForwardInput(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnhancedRule {
    pub gate: String,
    pub position: usize,
    pub value: Value,
    pub residual: Residual,
}

#[derive(Clone, Debug)]
pub struct GateDef {
    name: String,
    arity: usize,
    table: Vec<Value>,
    monotone: bool,
}

impl GateDef {
    /// `table` is indexed in mixed radix with input 0 most significant.
    pub fn new(lattice: &Lattice, name: &str, arity: usize, table: Vec<Value>) -> Result<Self, SignatureError> {
        let expected = lattice.size().pow(arity as u32);
        if table.len() != expected {
            return Err(SignatureError::BadGate {
                gate: name.into(),
                msg: format!("table has {} rows, expected {}", table.len(), expected),
            });
        }
        let mut g = GateDef { name: name.into(), arity, table, monotone: true };
        g.monotone = check_monotone(lattice, &g).is_empty();
        Ok(g)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn is_monotone(&self) -> bool {
        self.monotone
    }

    pub fn eval(&self, lattice: &Lattice, inputs: &[Value]) -> Value {
        debug_assert_eq!(inputs.len(), self.arity);
        let k = lattice.size();
        let idx = inputs.iter().fold(0, |acc, v| acc * k + v.index());
        self.table[idx]
    }
}

/// Enumerates all `size^arity` tuples in table order.
pub(crate) fn tuples(size: usize, arity: usize) -> impl Iterator<Item = Vec<Value>> {
    let total = size.pow(arity as u32);
    (0..total).map(move |mut i| {
        let mut t = vec![Value(0); arity];
        for slot in t.iter_mut().rev() {
            *slot = Value((i % size) as u8);
            i /= size;
        }
        t
    })
}

/// All pairs `u ⊑ u′` (pointwise) with `gate(u) ⋢ gate(u′)`.
pub fn check_monotone(lattice: &Lattice, gate: &GateDef) -> Vec<(Vec<Value>, Vec<Value>)> {
    let mut bad = Vec::new();
    let all: Vec<Vec<Value>> = tuples(lattice.size(), gate.arity).collect();
    for u in &all {
        let ou = gate.eval(lattice, u);
        for w in &all {
            if u.iter().zip(w).all(|(a, b)| lattice.leq(*a, *b)) && !lattice.leq(ou, gate.eval(lattice, w)) {
                bad.push((u.clone(), w.clone()));
            }
        }
    }
    bad
}

/// Rules valid when a single input is pinned to a known value.
pub fn derive_enhanced_rules(lattice: &Lattice, gate: &GateDef) -> Vec<EnhancedRule> {
    let mut rules = Vec::new();
    let m = gate.arity;
    if m == 0 {
        return rules;
    }
    for position in 0..m {
        for value in lattice.values() {
            let outs: Vec<(Vec<Value>, Value)> = tuples(lattice.size(), m - 1)
                .map(|rest| {
                    let mut full = rest.clone();
                    full.insert(position, value);
                    let o = gate.eval(lattice, &full);
                    (rest, o)
                })
                .collect();
            let first = outs[0].1;
            let residual = if outs.iter().all(|(_, o)| *o == first) {
                Some(Residual::ConstantOutput(first))
            } else {
                (0..m - 1)
                    .find(|&j| outs.iter().all(|(rest, o)| rest[j] == *o))
                    .map(|j| Residual::ForwardInput(if j < position { j } else { j + 1 }))
            };
            if let Some(residual) = residual {
                rules.push(EnhancedRule { gate: gate.name.clone(), position, value, residual });
            }
        }
    }
    rules
}

#[derive(Clone, Debug)]
pub struct Signature {
    lattice: Lattice,
    gates: Vec<GateDef>,
    index: HashMap<String, usize>,
}

impl Signature {
    pub fn new(lattice: Lattice, gates: Vec<GateDef>) -> Result<Self, SignatureError> {
        let mut index = HashMap::new();
        for (i, g) in gates.iter().enumerate() {
            if RESERVED.contains(&g.name.as_str()) {
                return Err(SignatureError::BadGate { gate: g.name.clone(), msg: "reserved name".into() });
            }
            if lattice.lookup(&g.name).is_some() {
                return Err(SignatureError::BadGate { gate: g.name.clone(), msg: "collides with a value name".into() });
            }
            if index.insert(g.name.clone(), i).is_some() {
                return Err(SignatureError::BadGate { gate: g.name.clone(), msg: "duplicate gate".into() });
            }
        }
        Ok(Signature { lattice, gates, index })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn gates(&self) -> &[GateDef] {
        &self.gates
    }

    pub fn gate(&self, name: &str) -> Option<&GateDef> {
        self.index.get(name).map(|&i| &self.gates[i])
    }

    pub fn name(&self) -> &str {
        self.lattice.name()
    }

    /// Parses the plain-text signature format.
    pub fn parse(src: &str) -> Result<Self, SignatureError> {
        parse_signature(src)
    }

    /// Writes the signature back in the text format (join table form).
    pub fn to_text(&self) -> String {
        let lat = &self.lattice;
        let mut out = format!("lattice {} {}\nvalues", lat.name, lat.size());
        for v in lat.values() {
            out.push(' ');
            out.push_str(lat.name_of(v));
        }
        out.push('\n');
        for a in lat.values() {
            for b in lat.values() {
                out += &format!("join {} {} {}\n", lat.name_of(a), lat.name_of(b), lat.name_of(lat.join(a, b)));
            }
        }
        for g in &self.gates {
            out += &format!("gate {} {}\n", g.name, g.arity);
            for t in tuples(lat.size(), g.arity) {
                out.push_str("row");
                for v in &t {
                    out.push(' ');
                    out.push_str(lat.name_of(*v));
                }
                out += &format!(" -> {}\n", lat.name_of(g.eval(lat, &t)));
            }
        }
        out
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (", self.lattice.name)?;
        for (i, g) in self.gates.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}:{}", g.name, g.arity)?;
        }
        write!(f, ")")
    }
}

pub fn builtin_signature(name: &str) -> Result<Signature, SignatureError> {
    match name {
        "bool4" => Signature::parse(BOOL4_SRC),
        "mos6" => Signature::parse(MOS6_SRC),
        other => Err(SignatureError::Unknown(other.into())),
    }
}

/// A gate as read: name, arity, rows (input indices ↦ output index), line.
type GateSpec = (String, usize, Vec<(Vec<usize>, usize)>, usize);

fn parse_signature(src: &str) -> Result<Signature, SignatureError> {
    let syntax = |line: usize, msg: &str| SignatureError::Syntax { line, msg: msg.into() };
    let mut header: Option<(String, usize)> = None;
    let mut names: Vec<String> = Vec::new();
    let mut joins: Vec<(usize, usize, usize)> = Vec::new();
    let mut orders: Vec<(usize, usize)> = Vec::new();
    let mut gates: Vec<GateSpec> = Vec::new();

    let lookup = |names: &[String], s: &str, line: usize| -> Result<usize, SignatureError> {
        names
            .iter()
            .position(|n| n == s)
            .ok_or_else(|| SignatureError::Syntax { line, msg: format!("unknown value `{s}`") })
    };

    for (i, raw) in src.lines().enumerate() {
        let line = i + 1;
        let text = raw.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        let words: Vec<&str> = text.split_whitespace().collect();
        match words[0] {
            "lattice" => {
                if words.len() != 3 || header.is_some() {
                    return Err(syntax(line, "expected `lattice <name> <size>` once"));
                }
                let size = words[2].parse().map_err(|_| syntax(line, "bad size"))?;
                header = Some((words[1].to_string(), size));
            }
            "values" => {
                names = words[1..].iter().map(|s| s.to_string()).collect();
                if let Some((_, size)) = &header {
                    if names.len() != *size {
                        return Err(syntax(line, "value count does not match lattice size"));
                    }
                } else {
                    return Err(syntax(line, "`values` before `lattice`"));
                }
                for n in &names {
                    if RESERVED.contains(&n.as_str()) {
                        return Err(syntax(line, &format!("reserved value name `{n}`")));
                    }
                }
            }
            "join" => {
                if words.len() != 4 {
                    return Err(syntax(line, "expected `join a b c`"));
                }
                joins.push((
                    lookup(&names, words[1], line)?,
                    lookup(&names, words[2], line)?,
                    lookup(&names, words[3], line)?,
                ));
            }
            "order" => {
                if words.len() != 3 {
                    return Err(syntax(line, "expected `order a b`"));
                }
                orders.push((lookup(&names, words[1], line)?, lookup(&names, words[2], line)?));
            }
            "gate" => {
                if words.len() != 3 {
                    return Err(syntax(line, "expected `gate <name> <arity>`"));
                }
                let arity = words[2].parse().map_err(|_| syntax(line, "bad arity"))?;
                gates.push((words[1].to_string(), arity, Vec::new(), line));
            }
            "row" => {
                let arrow = words
                    .iter()
                    .position(|w| *w == "->")
                    .ok_or_else(|| syntax(line, "expected `row v1 .. vm -> v`"))?;
                if arrow + 2 != words.len() {
                    return Err(syntax(line, "expected exactly one output after `->`"));
                }
                let ins = words[1..arrow]
                    .iter()
                    .map(|w| lookup(&names, w, line))
                    .collect::<Result<Vec<_>, _>>()?;
                let out = lookup(&names, words[arrow + 1], line)?;
                let gate = gates.last_mut().ok_or_else(|| syntax(line, "`row` outside a gate"))?;
                if ins.len() != gate.1 {
                    return Err(syntax(line, "row width does not match gate arity"));
                }
                gate.2.push((ins, out));
            }
            other => return Err(syntax(line, &format!("unknown directive `{other}`"))),
        }
    }

    let (lname, size) = header.ok_or_else(|| syntax(0, "missing `lattice` header"))?;
    if names.is_empty() {
        return Err(syntax(0, "missing `values` line"));
    }
    let lattice = if !joins.is_empty() {
        let mut table = vec![None; size * size];
        for (a, b, c) in joins {
            table[a * size + b] = Some(Value(c as u8));
        }
        let table = table
            .into_iter()
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| SignatureError::NotALattice("join table has missing entries".into()))?;
        Lattice::from_join_table(&lname, names, table)?
    } else {
        Lattice::from_order(&lname, names, &orders)?
    };

    let mut defs = Vec::new();
    for (name, arity, rows, line) in gates {
        let k = lattice.size();
        let mut table = vec![None; k.pow(arity as u32)];
        for (ins, out) in rows {
            let idx = ins.iter().fold(0, |acc, v| acc * k + v);
            if table[idx].replace(Value(out as u8)).is_some() {
                return Err(SignatureError::Syntax { line, msg: format!("gate `{name}` has a duplicate row") });
            }
        }
        let table = table.into_iter().collect::<Option<Vec<_>>>().ok_or_else(|| SignatureError::BadGate {
            gate: name.clone(),
            msg: "table is not total".into(),
        })?;
        defs.push(GateDef::new(&lattice, &name, arity, table)?);
    }
    Signature::new(lattice, defs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(sig: &Signature, s: &str) -> Value {
        sig.lattice().lookup(s).unwrap()
    }

    #[test]
    fn bool4_join_and_order() {
        let sig = builtin_signature("bool4").unwrap();
        let lat = sig.lattice();
        assert_eq!(lat.size(), 4);
        assert_eq!(lat.join(v(&sig, "t"), v(&sig, "f")), lat.top());
        assert!(!lat.leq(v(&sig, "t"), v(&sig, "f")));
        assert!(lat.leq(lat.bottom(), lat.top()));
        assert_eq!(lat.bottom(), Value(0));
        assert_eq!(lat.top(), Value(3));
        assert_eq!(lat.height(), 2);
        let arities: Vec<_> = sig.gates().iter().map(|g| (g.name(), g.arity())).collect();
        assert_eq!(arities, vec![("and", 2), ("or", 2), ("not", 1)]);
    }

    #[test]
    fn mos6_levels() {
        let sig = builtin_signature("mos6").unwrap();
        let lat = sig.lattice();
        assert_eq!(lat.size(), 6);
        assert_eq!(lat.join(v(&sig, "h"), v(&sig, "l")), lat.top());
        assert!(lat.leq(v(&sig, "h"), v(&sig, "H")));
        assert!(!lat.leq(v(&sig, "H"), v(&sig, "L")));
        let n = sig.gate("n").unwrap();
        assert_eq!(n.eval(lat, &[v(&sig, "L"), v(&sig, "H")]), v(&sig, "h"));
        for s in ["L", "l", "h", "H"] {
            assert_eq!(n.eval(lat, &[v(&sig, "H"), v(&sig, s)]), lat.bottom());
        }
        // (H, ⊤) is claimed by both "(H⊗v)·n = ⊥" and "(v⊗⊤)·n = ⊤"; the ⊤-clause wins
        assert_eq!(n.eval(lat, &[v(&sig, "H"), lat.top()]), lat.top());
    }

    #[test]
    fn mos6_tables_are_not_monotone() {
        let sig = builtin_signature("mos6").unwrap();
        let lat = sig.lattice();
        let n = sig.gate("n").unwrap();
        let bad = check_monotone(lat, n);
        assert!(!n.is_monotone());
        let witness = (vec![lat.bottom(), v(&sig, "L")], vec![v(&sig, "L"), v(&sig, "L")]);
        assert!(bad.contains(&witness));
        assert!(!sig.gate("p").unwrap().is_monotone());
    }

    #[test]
    fn bool4_gates_are_monotone() {
        let sig = builtin_signature("bool4").unwrap();
        for g in sig.gates() {
            assert!(check_monotone(sig.lattice(), g).is_empty(), "{}", g.name());
        }
    }

    #[test]
    fn constant_bottom_gate_is_monotone() {
        let sig = builtin_signature("bool4").unwrap();
        let lat = sig.lattice();
        let g = GateDef::new(lat, "zero", 1, vec![lat.bottom(); 4]).unwrap();
        assert!(check_monotone(lat, &g).is_empty());
    }

    #[test]
    fn enhanced_rules_match_textbook_identities() {
        let sig = builtin_signature("bool4").unwrap();
        let lat = sig.lattice();
        let and = derive_enhanced_rules(lat, sig.gate("and").unwrap());
        let find = |rules: &[EnhancedRule], pos, val| {
            rules.iter().find(|r| r.position == pos && r.value == val).map(|r| r.residual)
        };
        assert_eq!(find(&and, 0, v(&sig, "t")), Some(Residual::ForwardInput(1)));
        assert_eq!(find(&and, 1, v(&sig, "t")), Some(Residual::ForwardInput(0)));
        assert_eq!(find(&and, 0, v(&sig, "f")), Some(Residual::ConstantOutput(v(&sig, "f"))));
        assert_eq!(find(&and, 0, lat.top()), None);
        assert_eq!(find(&and, 0, lat.bottom()), None);
        let or = derive_enhanced_rules(lat, sig.gate("or").unwrap());
        assert_eq!(find(&or, 0, v(&sig, "t")), Some(Residual::ConstantOutput(v(&sig, "t"))));
    }

    #[test]
    fn signature_round_trips_through_text() {
        for name in ["bool4", "mos6"] {
            let sig = builtin_signature(name).unwrap();
            let again = Signature::parse(&sig.to_text()).unwrap();
            assert_eq!(sig.to_text(), again.to_text());
        }
    }

    #[test]
    fn rejects_reserved_and_partial_tables() {
        let src = "lattice x 2\nvalues bot top\norder bot top\ngate fork 1\nrow bot -> bot\nrow top -> top\n";
        assert!(matches!(Signature::parse(src), Err(SignatureError::BadGate { .. })));
        let src = "lattice x 2\nvalues bot top\norder bot top\ngate g 1\nrow bot -> bot\n";
        assert!(matches!(Signature::parse(src), Err(SignatureError::BadGate { .. })));
        assert!(matches!(builtin_signature("bool5"), Err(SignatureError::Unknown(_))));
    }

    #[test]
    fn order_without_lub_is_rejected() {
        // two maximal elements, no top
        let src = "lattice x 3\nvalues bot a b\norder bot a\norder bot b\n";
        assert!(matches!(Signature::parse(src), Err(SignatureError::NotALattice(_))));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn laws(lat: &Lattice) {
            for a in lat.values() {
                assert_eq!(lat.join(a, a), a);
                assert_eq!(lat.join(lat.bottom(), a), a);
                assert_eq!(lat.join(lat.top(), a), lat.top());
                for b in lat.values() {
                    assert_eq!(lat.join(a, b), lat.join(b, a));
                    if lat.leq(a, b) && lat.leq(b, a) {
                        assert_eq!(a, b);
                    }
                    for c in lat.values() {
                        assert_eq!(lat.join(lat.join(a, b), c), lat.join(a, lat.join(b, c)));
                        if lat.leq(a, b) && lat.leq(b, c) {
                            assert!(lat.leq(a, c));
                        }
                    }
                }
            }
        }

        #[test]
        fn builtin_lattice_laws() {
            for name in ["bool4", "mos6"] {
                laws(builtin_signature(name).unwrap().lattice());
            }
        }

        fn brute_monotone(lat: &Lattice, g: &GateDef) -> usize {
            let mut count = 0;
            let all: Vec<_> = tuples(lat.size(), g.arity()).collect();
            for u in &all {
                for w in &all {
                    let below = (0..u.len()).all(|i| lat.join(u[i], w[i]) == w[i]);
                    if below && lat.join(g.eval(lat, u), g.eval(lat, w)) != g.eval(lat, w) {
                        count += 1;
                    }
                }
            }
            count
        }

        proptest! {
            #[test]
            fn enhanced_rules_are_extensionally_valid(table in proptest::collection::vec(0u8..4, 16)) {
                let sig = builtin_signature("bool4").unwrap();
                let lat = sig.lattice();
                let g = GateDef::new(lat, "g", 2, table.into_iter().map(Value).collect()).unwrap();
                prop_assert_eq!(check_monotone(lat, &g).len(), brute_monotone(lat, &g));
                for r in derive_enhanced_rules(lat, &g) {
                    for other in lat.values() {
                        let mut ins = vec![other; 2];
                        ins[r.position] = r.value;
                        let expect = match r.residual {
                            Residual::ConstantOutput(c) => c,
                            Residual::ForwardInput(j) => ins[j],
                        };
                        prop_assert_eq!(g.eval(lat, &ins), expect);
                    }
                }
            }
        }
    }
}
