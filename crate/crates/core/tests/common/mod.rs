#![allow(dead_code)]

pub mod axioms;

use std::path::{Path, PathBuf};

use dcirc::lattice::{builtin_signature, Signature, Value};
use dcirc::oracle::Waveform;
use dcirc::term::{parse, split_use, Term};
use dcirc::tfpg::Tfpg;
use rand::seq::SliceRandom;
use rand::Rng;

pub fn bool4() -> Signature {
    builtin_signature("bool4").unwrap()
}

pub fn mos6() -> Signature {
    builtin_signature("mos6").unwrap()
}

pub fn graph(src: &str, sig: &Signature) -> Tfpg {
    let t = parse(src, sig).unwrap_or_else(|e| panic!("{src}: {e}"));
    Tfpg::from_term(&t, sig)
}

pub fn corpus(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("circuits").join(name)
}

/// Loads a corpus file, resolving its `use` line.
pub fn load_corpus(name: &str) -> (Signature, Tfpg) {
    let l = dcirc::cli::load(&corpus(name), None).unwrap_or_else(|e| panic!("{name}: {}", e.detail));
    (l.sig, l.graph)
}

pub fn corpus_text(name: &str) -> String {
    let text = std::fs::read_to_string(corpus(name)).unwrap();
    split_use(&text).1
}

pub fn value(sig: &Signature, name: &str) -> Value {
    sig.lattice().lookup(name).unwrap()
}

/// Every tuple of `wires` waveforms of exactly `len` ticks.
pub fn all_waveforms(sig: &Signature, wires: usize, len: usize) -> Vec<Vec<Waveform>> {
    let vals: Vec<Value> = sig.lattice().values().collect();
    let cells = wires * len;
    let total = vals.len().pow(cells as u32);
    (0..total)
        .map(|mut code| {
            let mut flat = Vec::with_capacity(cells);
            for _ in 0..cells {
                flat.push(vals[code % vals.len()]);
                code /= vals.len();
            }
            flat.chunks(len.max(1)).take(wires).map(|c| Waveform(c.to_vec())).collect()
        })
        .collect()
}

/// Shape limits for [`random_circuit`].
#[derive(Clone, Copy, Debug)]
pub struct Shape {
    pub inputs: usize,
    pub outputs: usize,
    pub max_gates: usize,
    pub max_delays: usize,
    pub feedback: usize,
    pub values: bool,
    pub joins: bool,
}

impl Shape {
    pub fn closed(outputs: usize) -> Self {
        Shape { inputs: 0, outputs, max_gates: 10, max_delays: 2, feedback: 0, values: true, joins: true }
    }
}

fn with_id(i: usize, t: Term) -> Term {
    if i == 0 {
        t
    } else {
        Term::tensor(Term::Id(i), t)
    }
}

struct Builder<'a, R: Rng> {
    rng: &'a mut R,
    sig: &'a Signature,
    wires: Vec<usize>,
    fresh: usize,
    stages: Vec<Term>,
    allow_values: bool,
}

impl<'a, R: Rng> Builder<'a, R> {
    fn new_wire(&mut self) -> usize {
        self.fresh += 1;
        self.fresh
    }

    fn random_value(&mut self) -> Value {
        let vals: Vec<Value> = self.sig.lattice().values().collect();
        *vals.choose(self.rng).unwrap()
    }

    fn push_value(&mut self) {
        let v = self.random_value();
        self.stages.push(with_id(self.wires.len(), Term::Value(v)));
        let w = self.new_wire();
        self.wires.push(w);
    }

    /// Moves wire `id` to the end of the bus.
    fn move_to_end(&mut self, id: usize) {
        let i = self.wires.iter().position(|&w| w == id).unwrap();
        let rest = self.wires.len() - i - 1;
        if rest > 0 {
            self.stages.push(with_id(i, Term::Sym(1, rest)));
            let w = self.wires.remove(i);
            self.wires.push(w);
        }
    }

    fn gather(&mut self, ids: &[usize]) {
        for &id in ids {
            self.move_to_end(id);
        }
    }

    fn fork_last(&mut self) {
        self.stages.push(with_id(self.wires.len() - 1, Term::Fork));
        let w = self.new_wire();
        self.wires.push(w);
    }

    /// Makes sure at least `n` wires are on the bus.
    fn ensure(&mut self, n: usize) {
        while self.wires.len() < n {
            if self.wires.is_empty() || (self.allow_values && self.rng.gen_bool(0.5)) {
                self.push_value();
            } else {
                let id = *self.wires.choose(self.rng).unwrap();
                self.move_to_end(id);
                self.fork_last();
            }
        }
    }

    /// Applies `atom : a → b` to `a` randomly chosen wires, sometimes keeping a
    /// copy of an operand on the bus.
    fn apply(&mut self, atom: Term, a: usize, b: usize) {
        self.ensure(a);
        let mut ids: Vec<usize> = self.wires.clone();
        ids.shuffle(self.rng);
        ids.truncate(a);
        if a > 0 && self.rng.gen_bool(0.25) {
            let keep = ids[0];
            self.move_to_end(keep);
            self.fork_last();
            ids[0] = *self.wires.last().unwrap();
        }
        self.gather(&ids);
        let keep = self.wires.len() - a;
        self.wires.truncate(keep);
        self.stages.push(with_id(keep, atom));
        for _ in 0..b {
            let w = self.new_wire();
            self.wires.push(w);
        }
    }
}

/// A random well-typed circuit term of the given shape over `sig`'s gates.
pub fn random_circuit<R: Rng>(rng: &mut R, sig: &Signature, shape: Shape) -> Term {
    let mut b = Builder { rng, sig, wires: Vec::new(), fresh: 0, stages: Vec::new(), allow_values: shape.values };
    for _ in 0..shape.inputs + shape.feedback {
        let w = b.new_wire();
        b.wires.push(w);
    }
    let gates: Vec<(String, usize)> = sig.gates().iter().map(|g| (g.name().to_string(), g.arity())).collect();
    #[derive(Clone, Copy)]
    enum Op {
        Gate,
        Delay,
        Value,
        Join,
    }
    let mut ops = Vec::new();
    let ng = b.rng.gen_range(1..=shape.max_gates.max(1));
    ops.extend(std::iter::repeat_n(Op::Gate, if shape.max_gates == 0 { 0 } else { ng }));
    let nd = b.rng.gen_range(0..=shape.max_delays);
    ops.extend(std::iter::repeat_n(Op::Delay, nd));
    if shape.values {
        let nv = b.rng.gen_range(0..=2);
        ops.extend(std::iter::repeat_n(Op::Value, nv));
    }
    if shape.joins {
        let nj = b.rng.gen_range(0..=1);
        ops.extend(std::iter::repeat_n(Op::Join, nj));
    }
    ops.shuffle(b.rng);
    for op in ops {
        match op {
            Op::Gate => {
                let (name, a) = gates.choose(b.rng).unwrap().clone();
                b.apply(Term::Gate(name), a, 1);
            }
            Op::Delay => b.apply(Term::Delay, 1, 1),
            Op::Value => b.push_value(),
            Op::Join => b.apply(Term::Join, 2, 1),
        }
    }
    let keep = shape.outputs + shape.feedback;
    b.ensure(keep);
    let mut ids = b.wires.clone();
    ids.shuffle(b.rng);
    ids.truncate(keep);
    b.gather(&ids);
    let drop = b.wires.len() - keep;
    if drop > 0 {
        let stubs = Term::tensor_all((0..drop).map(|_| Term::Stub));
        b.stages.push(Term::tensor(stubs, Term::Id(keep)));
    }
    let body = if b.stages.is_empty() { Term::Id(keep) } else { Term::seq_all(std::mem::take(&mut b.stages)) };
    if shape.feedback > 0 {
        Term::trace(shape.feedback, body)
    } else {
        body
    }
}

/// Replaces each `box NAME m n` in the read-back term of `g` by a concrete circuit.
pub fn substitute_boxes(g: &Tfpg, sig: &Signature, subst: &[(&str, &str)]) -> Tfpg {
    let mut text = dcirc::tfpg::readback_term(g).display(sig.lattice()).to_string();
    for (name, body) in subst {
        text = text.replace(&format!("box {name} 1 1"), &format!("({body})"));
    }
    graph(&text, sig)
}

/// `n` scaled by the `DCIRC_TEST_SCALE` environment variable, for longer soak runs.
pub fn cases(n: usize) -> usize {
    let scale = std::env::var("DCIRC_TEST_SCALE").ok().and_then(|s| s.parse().ok()).unwrap_or(1);
    n * scale
}
