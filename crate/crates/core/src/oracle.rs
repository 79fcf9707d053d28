//! Reference stream semantics: tick-by-tick simulation with delay registers
//! and a least fixpoint over the feedback wires at every tick.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::lattice::{Lattice, Signature, Value};
use crate::tfpg::{NodeId, NodeLabel, Port, Tfpg};

pub const DEFAULT_BUDGET: u64 = 10_000_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("abstract box `{0}` cannot be simulated")]
    BoxPresent(String),
    #[error("expected {expected} input waveforms, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("circuits have different arities {left:?} and {right:?}")]
    InterfaceMismatch { left: (usize, usize), right: (usize, usize) },
    #[error("circuit is not combinational")]
    NotCombinational,
    #[error("feedback fixpoint did not stabilise within {0} iterations")]
    Diverged(usize),
    #[error("enumeration needs {required} evaluations, budget is {allowed}")]
    BudgetExceeded { required: String, allowed: u64 },
    #[error("bad waveform: {0}")]
    Parse(String),
}

/// A finite prefix of a stream; index 0 is the current tick, ⊥ afterwards.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Waveform(pub Vec<Value>);

impl Waveform {
    pub fn at(&self, tick: usize, bottom: Value) -> Value {
        self.0.get(tick).copied().unwrap_or(bottom)
    }

    /// Drops trailing ⊥ values, which the implicit continuation repeats.
    pub fn trimmed(&self, bottom: Value) -> Waveform {
        let mut v = self.0.clone();
        while v.last() == Some(&bottom) {
            v.pop();
        }
        Waveform(v)
    }
}

/// Parses `t,f;b` — wires separated by `;`, ticks by `,`, with `b` for ⊥.
pub fn parse_waveforms(text: &str, lattice: &Lattice) -> Result<Vec<Waveform>, OracleError> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    text.split(';')
        .map(|wire| {
            let wire = wire.trim();
            if wire.is_empty() {
                return Ok(Waveform::default());
            }
            wire.split(',')
                .map(|v| {
                    let v = v.trim();
                    if v == "b" {
                        Ok(lattice.bottom())
                    } else {
                        lattice.lookup(v).ok_or_else(|| OracleError::Parse(format!("unknown value `{v}`")))
                    }
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Waveform)
        })
        .collect()
}

pub fn format_waveforms(ws: &[Waveform], lattice: &Lattice) -> String {
    ws.iter()
        .map(|w| {
            w.0.iter()
                .map(|&v| if v == lattice.bottom() { "b" } else { lattice.name_of(v) })
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect::<Vec<_>>()
        .join(";")
}

enum Instr {
    Const(usize, Value),
    Gate { gate: usize, ins: Vec<usize>, out: usize },
    Join(usize, usize, usize),
}

/// A graph flattened into straight-line code over value slots.
pub struct Program<'s> {
    sig: &'s Signature,
    slots: usize,
    code: Vec<Instr>,
    inputs: Vec<usize>,
    outputs: Vec<usize>,
    /// (slot read by consumers, slot written by the producer)
    feedback: Vec<(usize, usize)>,
    delays: Vec<(usize, usize)>,
}

impl<'s> Program<'s> {
    pub fn compile(g: &Tfpg, sig: &'s Signature) -> Result<Self, OracleError> {
        let mut slot_of: BTreeMap<Port, usize> = BTreeMap::new();
        let mut slots = 0;
        let mut fresh = || {
            slots += 1;
            slots - 1
        };
        let mut p = Program {
            sig,
            slots: 0,
            code: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            feedback: Vec::new(),
            delays: Vec::new(),
        };
        for &i in g.inputs() {
            let s = fresh();
            slot_of.insert(Port::new(i, 0), s);
            p.inputs.push(s);
        }
        let fb: Vec<NodeId> = g.feedback().iter().copied().collect();
        for &f in &fb {
            slot_of.insert(Port::new(f, 0), fresh());
        }
        let mut pending_delays = Vec::new();
        let order = g.topo_order().expect("framed graph");
        for k in order {
            let n = g.node(k);
            let src = |p: usize, slot_of: &BTreeMap<Port, usize>| slot_of[&n.ins[p].expect("dangling")];
            match &n.label {
                NodeLabel::Box(name, _, _) => return Err(OracleError::BoxPresent(name.clone())),
                NodeLabel::Wire => {
                    if n.ins[0].is_some() && n.outs[0].is_some() {
                        let s = src(0, &slot_of);
                        slot_of.insert(Port::new(k, 0), s);
                    }
                }
                NodeLabel::Value(v) => {
                    let s = fresh();
                    p.code.push(Instr::Const(s, *v));
                    slot_of.insert(Port::new(k, 0), s);
                }
                NodeLabel::Gate(name, m) => {
                    let gate = sig.gates().iter().position(|g| g.name() == name).expect("unknown gate");
                    let ins = (0..*m).map(|i| src(i, &slot_of)).collect();
                    let out = fresh();
                    p.code.push(Instr::Gate { gate, ins, out });
                    slot_of.insert(Port::new(k, 0), out);
                }
                NodeLabel::Join => {
                    let out = fresh();
                    p.code.push(Instr::Join(src(0, &slot_of), src(1, &slot_of), out));
                    slot_of.insert(Port::new(k, 0), out);
                }
                NodeLabel::Fork => {
                    let s = src(0, &slot_of);
                    slot_of.insert(Port::new(k, 0), s);
                    slot_of.insert(Port::new(k, 1), s);
                }
                NodeLabel::Stub => {}
                NodeLabel::Delay => {
                    let out = fresh();
                    slot_of.insert(Port::new(k, 0), out);
                    pending_delays.push((k, out));
                }
            }
        }
        for (k, out) in pending_delays {
            p.delays.push((out, slot_of[&g.pred(k, 0)]));
        }
        for &f in &fb {
            p.feedback.push((slot_of[&Port::new(f, 0)], slot_of[&g.pred(f, 0)]));
        }
        for &o in g.outputs() {
            p.outputs.push(slot_of[&g.pred(o, 0)]);
        }
        p.slots = slots;
        Ok(p)
    }

    fn lattice(&self) -> &Lattice {
        self.sig.lattice()
    }

    /// A constant is the stream `v::⊥::⊥…`.
    fn exec(&self, mem: &mut [Value], tick: usize) {
        let lat = self.lattice();
        let gates = self.sig.gates();
        let mut buf = Vec::new();
        for ins in &self.code {
            match ins {
                Instr::Const(s, v) => mem[*s] = if tick == 0 { *v } else { lat.bottom() },
                Instr::Gate { gate, ins, out } => {
                    buf.clear();
                    buf.extend(ins.iter().map(|&i| mem[i]));
                    mem[*out] = gates[*gate].eval(lat, &buf);
                }
                Instr::Join(a, b, out) => mem[*out] = lat.join(mem[*a], mem[*b]),
            }
        }
    }

    /// One tick: solves the feedback wires from ⊥ by inflationary iteration,
    /// which is the least fixpoint whenever the gates are monotone.
    fn tick(&self, tick: usize, mem: &mut [Value], inputs: &[Value], regs: &mut [Value]) -> Result<Vec<Value>, OracleError> {
        let lat = self.lattice();
        for (&s, &v) in self.inputs.iter().zip(inputs) {
            mem[s] = v;
        }
        for (&(out, _), &r) in self.delays.iter().zip(regs.iter()) {
            mem[out] = r;
        }
        for &(read, _) in &self.feedback {
            mem[read] = lat.bottom();
        }
        let cap = self.feedback.len() * lat.height() + 1;
        let mut rounds = 0;
        loop {
            self.exec(mem, tick);
            let mut changed = false;
            for &(read, write) in &self.feedback {
                let next = lat.join(mem[read], mem[write]);
                if next != mem[read] {
                    mem[read] = next;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
            rounds += 1;
            if rounds > cap {
                return Err(OracleError::Diverged(cap));
            }
        }
        for (r, &(_, input)) in regs.iter_mut().zip(&self.delays) {
            *r = mem[input];
        }
        Ok(self.outputs.iter().map(|&s| mem[s]).collect())
    }

    /// Output values per tick for per-tick input tuples `inputs(t)`.
    pub fn run(&self, ticks: usize, mut inputs: impl FnMut(usize) -> Vec<Value>) -> Result<Vec<Vec<Value>>, OracleError> {
        let lat = self.lattice();
        let mut mem = vec![lat.bottom(); self.slots];
        let mut regs = vec![lat.bottom(); self.delays.len()];
        (0..ticks).map(|t| self.tick(t, &mut mem, &inputs(t), &mut regs)).collect()
    }
}

/// Unique outputs of a delay-free, feedback-free graph on constant inputs.
pub fn eval_combinational(g: &Tfpg, sig: &Signature, inputs: &[Value]) -> Result<Vec<Value>, OracleError> {
    if g.inputs().len() != inputs.len() {
        return Err(OracleError::ArityMismatch { expected: g.inputs().len(), got: inputs.len() });
    }
    let p = Program::compile(g, sig)?;
    if !p.delays.is_empty() || !p.feedback.is_empty() {
        return Err(OracleError::NotCombinational);
    }
    Ok(p.run(1, |_| inputs.to_vec())?.remove(0))
}

/// Output waveforms over `ticks` ticks.
pub fn simulate(g: &Tfpg, sig: &Signature, inputs: &[Waveform], ticks: usize) -> Result<Vec<Waveform>, OracleError> {
    if g.inputs().len() != inputs.len() {
        return Err(OracleError::ArityMismatch { expected: g.inputs().len(), got: inputs.len() });
    }
    let p = Program::compile(g, sig)?;
    let bot = sig.lattice().bottom();
    let rows = p.run(ticks, |t| inputs.iter().map(|w| w.at(t, bot)).collect())?;
    Ok(transpose(&rows, g.outputs().len()))
}

pub(crate) fn transpose(rows: &[Vec<Value>], width: usize) -> Vec<Waveform> {
    (0..width).map(|j| Waveform(rows.iter().map(|r| r[j]).collect())).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EquivMode {
    /// Waveforms of length n+1, valid for circuits without feedback.
    DelayOnly,
    /// Waveforms of length |V|^n+1.
    Feedback,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Equivalence {
    Equal { mode: EquivMode, length: usize, cases: u64 },
    Counterexample { inputs: Vec<Waveform>, left: Vec<Waveform>, right: Vec<Waveform> },
}

impl fmt::Display for EquivMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EquivMode::DelayOnly => "delay-only",
            EquivMode::Feedback => "feedback",
        })
    }
}

/// The mode and waveform length the bounds prescribe for a pair of graphs.
pub fn equivalence_bound(f: &Tfpg, g: &Tfpg, lattice: &Lattice) -> (EquivMode, usize, u32) {
    let n = f.delay_count().max(g.delay_count()) as u32;
    if f.feedback().is_empty() && g.feedback().is_empty() {
        (EquivMode::DelayOnly, n as usize + 1, n)
    } else {
        let len = (lattice.size() as u64).checked_pow(n).map_or(usize::MAX, |x| x as usize + 1);
        (EquivMode::Feedback, len, n)
    }
}

/// Exhaustive bounded equivalence. Input tuples are enumerated with tick 0 of
/// wire 0 varying fastest, so the first counterexample found is short.
pub fn check_equivalence(f: &Tfpg, g: &Tfpg, sig: &Signature, budget: u64) -> Result<Equivalence, OracleError> {
    if f.arity() != g.arity() {
        return Err(OracleError::InterfaceMismatch { left: f.arity(), right: g.arity() });
    }
    let lat = sig.lattice();
    let (mode, len, n) = equivalence_bound(f, g, lat);
    let (m, outs) = f.arity();
    let pf = Program::compile(f, sig)?;
    let pg = Program::compile(g, sig)?;
    if outs == 0 {
        return Ok(Equivalence::Equal { mode, length: len, cases: 0 });
    }
    let digits = (m as u64).checked_mul(len as u64);
    let cases = digits
        .and_then(|d| u32::try_from(d).ok())
        .and_then(|d| (lat.size() as u64).checked_pow(d))
        .filter(|&c| c <= budget);
    let Some(cases) = cases else {
        let required = match digits {
            Some(d) => format!("{}^{}", lat.size(), d),
            None => "more than 2^64".into(),
        };
        return Err(OracleError::BudgetExceeded { required, allowed: budget });
    };
    let ticks = len + n as usize;
    let bot = lat.bottom();
    let size = lat.size() as u64;
    for case in 0..cases {
        let mut code = case;
        let mut ws = vec![Waveform(vec![bot; len]); m];
        for t in 0..len {
            for w in ws.iter_mut() {
                w.0[t] = Value((code % size) as u8);
                code /= size;
            }
        }
        let input = |t: usize| ws.iter().map(|w| w.at(t, bot)).collect::<Vec<_>>();
        let a = pf.run(ticks, input)?;
        let b = pg.run(ticks, input)?;
        if a != b {
            return Ok(Equivalence::Counterexample {
                inputs: ws.iter().map(|w| w.trimmed(bot)).collect(),
                left: transpose(&a, outs),
                right: transpose(&b, outs),
            });
        }
    }
    Ok(Equivalence::Equal { mode, length: len, cases })
}
