//! Local rewriting of trace-framed point graphs.

mod semantics;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::lattice::{derive_enhanced_rules, Residual, Signature, Value};
use crate::tfpg::{NodeId, NodeLabel, Port, Tfpg, TfpgError};

pub use semantics::{
    classify_productivity, emit_head_values, partial_evaluate, run, unfold_feedback, unfold_trace_delay, PevalResult,
    Productivity, RunResult, Verdict,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RuleKind {
    ConstantGate,
    EnhancedGate,
    JoinValues,
    JoinBottomUnit,
    ForkValue,
    ForkCounit,
    StubGate,
    StreamingWaveform,
    DisconnectDelay,
    UnobservableDelay,
    FeedbackUnwindValue,
    FeedbackStubPropagate,
    WireTidy,
    DiscardUnobserved,
}

impl RuleKind {
    pub const ALL: [RuleKind; 14] = [
        RuleKind::ConstantGate,
        RuleKind::EnhancedGate,
        RuleKind::JoinValues,
        RuleKind::JoinBottomUnit,
        RuleKind::ForkValue,
        RuleKind::ForkCounit,
        RuleKind::StubGate,
        RuleKind::StreamingWaveform,
        RuleKind::DisconnectDelay,
        RuleKind::UnobservableDelay,
        RuleKind::FeedbackUnwindValue,
        RuleKind::FeedbackStubPropagate,
        RuleKind::WireTidy,
        RuleKind::DiscardUnobserved,
    ];
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Redex {
    pub kind: RuleKind,
    pub anchor: NodeId,
    /// Nodes the pattern binds, anchor first.
    pub nodes: Vec<NodeId>,
    /// Pinned input and residual for `EnhancedGate`.
    pub enhanced: Option<(usize, Residual)>,
}

impl Redex {
    fn new(kind: RuleKind, anchor: NodeId, nodes: Vec<NodeId>) -> Self {
        Redex { kind, anchor, nodes, enhanced: None }
    }

    pub fn log_line(&self) -> String {
        let ns: Vec<String> = self.nodes.iter().map(|n| n.to_string()).collect();
        format!("rule {} @ {}", self.kind, ns.join(","))
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RewriteError {
    #[error("redex {0} no longer matches")]
    Stale(String),
    #[error("step budget of {0} exhausted")]
    BudgetExhausted(usize),
    #[error("operation needs a closed circuit (no inputs)")]
    NotClosed,
    #[error("graph is not in global-delay form")]
    NotGlobalDelayForm,
    #[error(transparent)]
    Invalid(#[from] TfpgError),
}

/// How wires are read when deciding whether an enhanced rule is sound.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Wires carry waveforms. Enhanced rules only fire when every discarded or
    /// forwarded input has a cone free of delays and interface inputs, so that
    /// it carries a value followed by ⊥.
    Stream,
    /// Wires carry single values, as for combinational partial evaluation.
    Extensional,
}

pub struct Engine<'s> {
    sig: &'s Signature,
    mode: Mode,
    enhanced: BTreeMap<(String, usize, Value), Residual>,
}

impl<'s> Engine<'s> {
    /// Enhanced rules are only derived for gates whose table is monotone.
    pub fn new(sig: &'s Signature, mode: Mode) -> Self {
        let mut enhanced = BTreeMap::new();
        for g in sig.gates().iter().filter(|g| g.is_monotone()) {
            for r in derive_enhanced_rules(sig.lattice(), g) {
                enhanced.insert((r.gate, r.position, r.value), r.residual);
            }
        }
        Engine { sig, mode, enhanced }
    }

    /// Extensional for delay-free graphs, stream otherwise.
    pub fn for_graph(sig: &'s Signature, g: &Tfpg) -> Self {
        let mode = if g.delay_count() == 0 { Mode::Extensional } else { Mode::Stream };
        Engine::new(sig, mode)
    }

    pub fn signature(&self) -> &'s Signature {
        self.sig
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn enhanced_enabled(&self) -> bool {
        !self.enhanced.is_empty()
    }

    // -- matching ----------------------------------------------------------

    fn value_of(g: &Tfpg, n: NodeId) -> Option<Value> {
        match g.label(n) {
            NodeLabel::Value(v) => Some(*v),
            _ => None,
        }
    }

    fn is_stub(g: &Tfpg, n: NodeId) -> bool {
        *g.label(n) == NodeLabel::Stub
    }

    fn on_cycle(g: &Tfpg, f: NodeId) -> bool {
        let mut seen = BTreeSet::new();
        let mut stack = vec![g.succ(f, 0).node];
        while let Some(k) = stack.pop() {
            if k == f {
                return true;
            }
            if seen.insert(k) {
                stack.extend(g.node(k).outs.iter().flatten().map(|p| p.node));
            }
        }
        false
    }

    /// Whether the wires into `roots` only depend on constants (no delays, no inputs).
    fn instantaneous(&self, g: &Tfpg, roots: &[NodeId]) -> bool {
        if self.mode == Mode::Extensional {
            return true;
        }
        let mut seen = BTreeSet::new();
        let mut stack = roots.to_vec();
        while let Some(k) = stack.pop() {
            if !seen.insert(k) {
                continue;
            }
            let n = g.node(k);
            if n.label == NodeLabel::Delay || g.inputs().contains(&k) {
                return false;
            }
            stack.extend(n.ins.iter().flatten().map(|p| p.node));
        }
        true
    }

    /// The head/tail decomposition of a waveform feeding a gate, if visible.
    fn head_pattern(g: &Tfpg, n: NodeId) -> Option<(Value, Vec<NodeId>)> {
        match g.label(n) {
            NodeLabel::Value(v) => Some((*v, vec![n])),
            NodeLabel::Delay => None,
            NodeLabel::Join => {
                let (a, b) = (g.pred(n, 0).node, g.pred(n, 1).node);
                match (g.label(a), g.label(b)) {
                    (NodeLabel::Value(v), NodeLabel::Delay) => Some((*v, vec![n, a, b])),
                    (NodeLabel::Delay, NodeLabel::Value(v)) => Some((*v, vec![n, b, a])),
                    _ => None,
                }
            }
            _ => None,
        }
    }

    fn gate_redexes(&self, g: &Tfpg, k: NodeId, name: &str, out: &mut Vec<Redex>) {
        let n = g.node(k);
        let srcs: Vec<NodeId> = n.ins.iter().map(|p| p.expect("dangling").node).collect();
        let vals: Vec<Option<Value>> = srcs.iter().map(|&s| Self::value_of(g, s)).collect();
        if vals.iter().all(Option::is_some) {
            let mut nodes = vec![k];
            nodes.extend(&srcs);
            out.push(Redex::new(RuleKind::ConstantGate, k, nodes));
            return;
        }
        for (i, v) in vals.iter().enumerate() {
            let Some(v) = v else { continue };
            if let Some(&res) = self.enhanced.get(&(name.to_string(), i, *v)) {
                let others: Vec<NodeId> = srcs.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, s)| *s).collect();
                if self.instantaneous(g, &others) {
                    out.push(Redex { kind: RuleKind::EnhancedGate, anchor: k, nodes: vec![k, srcs[i]], enhanced: Some((i, res)) });
                    break;
                }
            }
        }
        let mut nodes = vec![k];
        let mut any_delay = false;
        let heads_ok = srcs.iter().all(|&s| {
            if *g.label(s) == NodeLabel::Delay {
                any_delay = true;
                nodes.push(s);
                return true;
            }
            match Self::head_pattern(g, s) {
                Some((_, ns)) => {
                    any_delay |= ns.len() > 1;
                    nodes.extend(ns);
                    true
                }
                None => false,
            }
        });
        if heads_ok && any_delay {
            out.push(Redex::new(RuleKind::StreamingWaveform, k, nodes));
        }
        if Self::is_stub(g, g.succ(k, 0).node) {
            out.push(Redex::new(RuleKind::StubGate, k, vec![k, g.succ(k, 0).node]));
        }
    }

    /// Every redex anchored at `k`, in priority order.
    pub fn redexes_at(&self, g: &Tfpg, k: NodeId, observable: Option<&BTreeSet<NodeId>>) -> Vec<Redex> {
        let mut out = Vec::new();
        let Some(n) = g.get(k) else { return out };
        match &n.label {
            NodeLabel::Gate(name, _) => self.gate_redexes(g, k, name, &mut out),
            NodeLabel::Box(..) => {
                let outs: Vec<NodeId> = n.outs.iter().map(|p| p.expect("dangling").node).collect();
                if outs.iter().all(|&o| Self::is_stub(g, o)) {
                    let mut nodes = vec![k];
                    nodes.extend(outs);
                    out.push(Redex::new(RuleKind::StubGate, k, nodes));
                }
            }
            NodeLabel::Join => {
                let (a, b) = (g.pred(k, 0).node, g.pred(k, 1).node);
                let bot = self.sig.lattice().bottom();
                match (Self::value_of(g, a), Self::value_of(g, b)) {
                    (Some(_), Some(_)) => out.push(Redex::new(RuleKind::JoinValues, k, vec![k, a, b])),
                    (Some(v), _) if v == bot => out.push(Redex::new(RuleKind::JoinBottomUnit, k, vec![k, a])),
                    (_, Some(v)) if v == bot => out.push(Redex::new(RuleKind::JoinBottomUnit, k, vec![k, b])),
                    _ => {}
                }
                let s = g.succ(k, 0).node;
                if Self::is_stub(g, s) {
                    out.push(Redex::new(RuleKind::StubGate, k, vec![k, s]));
                }
            }
            NodeLabel::Fork => {
                let src = g.pred(k, 0).node;
                if Self::value_of(g, src).is_some() {
                    out.push(Redex::new(RuleKind::ForkValue, k, vec![k, src]));
                }
                for p in 0..2 {
                    let s = g.succ(k, p).node;
                    if Self::is_stub(g, s) {
                        out.push(Redex::new(RuleKind::ForkCounit, k, vec![k, s]));
                        break;
                    }
                }
            }
            NodeLabel::Value(_) => {
                let s = g.succ(k, 0).node;
                if Self::is_stub(g, s) {
                    out.push(Redex::new(RuleKind::StubGate, k, vec![k, s]));
                }
            }
            NodeLabel::Delay => {
                let src = g.pred(k, 0).node;
                if Self::value_of(g, src) == Some(self.sig.lattice().bottom()) {
                    out.push(Redex::new(RuleKind::DisconnectDelay, k, vec![k, src]));
                }
                let s = g.succ(k, 0).node;
                if Self::is_stub(g, s) {
                    out.push(Redex::new(RuleKind::UnobservableDelay, k, vec![k, s]));
                }
            }
            NodeLabel::Wire => {
                if g.is_interface(k) {
                    return out;
                }
                if !g.is_feedback(k) {
                    out.push(Redex::new(RuleKind::WireTidy, k, vec![k]));
                    return out;
                }
                let src = g.pred(k, 0).node;
                let dst = g.succ(k, 0).node;
                if src != k && Self::value_of(g, src).is_some() {
                    out.push(Redex::new(RuleKind::FeedbackUnwindValue, k, vec![k, src]));
                }
                if dst != k && Self::is_stub(g, dst) {
                    out.push(Redex::new(RuleKind::FeedbackStubPropagate, k, vec![k, dst]));
                }
                if !Self::on_cycle(g, k) {
                    out.push(Redex::new(RuleKind::WireTidy, k, vec![k]));
                }
                if let Some(obs) = observable {
                    if !obs.contains(&k) {
                        out.push(Redex::new(RuleKind::DiscardUnobserved, k, vec![k]));
                    }
                }
            }
            NodeLabel::Stub => {}
        }
        out
    }

    fn observable(g: &Tfpg) -> Option<BTreeSet<NodeId>> {
        (!g.feedback().is_empty()).then(|| g.observable())
    }

    /// All redexes of the catalog, in one pass over the nodes.
    pub fn find_redexes(&self, g: &Tfpg) -> Vec<Redex> {
        let obs = Self::observable(g);
        g.node_ids().flat_map(|k| self.redexes_at(g, k, obs.as_ref())).collect()
    }

    /// The redex with the lowest anchor id, highest priority first.
    pub fn first_redex(&self, g: &Tfpg) -> Option<Redex> {
        let obs = Self::observable(g);
        g.node_ids().find_map(|k| self.redexes_at(g, k, obs.as_ref()).into_iter().next())
    }

    // -- rewriting ---------------------------------------------------------

    pub fn apply_rule(&self, g: &mut Tfpg, r: &Redex) -> Result<(), RewriteError> {
        let obs = if r.kind == RuleKind::DiscardUnobserved { Self::observable(g) } else { None };
        if !g.contains(r.anchor) || !self.redexes_at(g, r.anchor, obs.as_ref()).contains(r) {
            return Err(RewriteError::Stale(r.log_line()));
        }
        let lat = self.sig.lattice();
        let k = r.anchor;
        match r.kind {
            RuleKind::ConstantGate => {
                let NodeLabel::Gate(name, _) = g.label(k).clone() else { unreachable!() };
                let vals: Vec<Value> = r.nodes[1..].iter().map(|&n| Self::value_of(g, n).unwrap()).collect();
                let c = self.sig.gate(&name).expect("gate").eval(lat, &vals);
                self.replace_by_value(g, k, &r.nodes[1..], c);
            }
            RuleKind::JoinValues => {
                let c = lat.join(Self::value_of(g, r.nodes[1]).unwrap(), Self::value_of(g, r.nodes[2]).unwrap());
                self.replace_by_value(g, k, &r.nodes[1..], c);
            }
            RuleKind::EnhancedGate => {
                let (pin, res) = r.enhanced.unwrap();
                let srcs: Vec<Port> = (0..g.node(k).ins.len()).map(|p| g.pred(k, p)).collect();
                let dst = g.succ(k, 0);
                g.remove_node(k);
                g.remove_node(srcs[pin].node);
                let keep = match res {
                    Residual::ConstantOutput(c) => {
                        let v = g.add_node(NodeLabel::Value(c));
                        g.connect(Port::new(v, 0), dst);
                        None
                    }
                    Residual::ForwardInput(j) => {
                        g.connect(srcs[j], dst);
                        Some(j)
                    }
                };
                for (j, s) in srcs.iter().enumerate() {
                    if j != pin && Some(j) != keep {
                        g.stub_port(*s);
                    }
                }
            }
            RuleKind::JoinBottomUnit => {
                let unit = r.nodes[1];
                let p = if g.pred(k, 0).node == unit { 1 } else { 0 };
                let other = g.pred(k, p);
                let dst = g.succ(k, 0);
                g.remove_node(unit);
                g.remove_node(k);
                g.connect(other, dst);
            }
            RuleKind::ForkValue => {
                let v = Self::value_of(g, r.nodes[1]).unwrap();
                let d = [g.succ(k, 0), g.succ(k, 1)];
                g.remove_node(r.nodes[1]);
                g.remove_node(k);
                for dst in d {
                    let n = g.add_node(NodeLabel::Value(v));
                    g.connect(Port::new(n, 0), dst);
                }
            }
            RuleKind::ForkCounit => {
                let stub = r.nodes[1];
                let p = if g.succ(k, 0).node == stub { 1 } else { 0 };
                let src = g.pred(k, 0);
                let dst = g.succ(k, p);
                g.remove_node(stub);
                g.remove_node(k);
                g.connect(src, dst);
            }
            RuleKind::StubGate => {
                for &s in &r.nodes[1..] {
                    g.remove_node(s);
                }
                let srcs: Vec<Port> = (0..g.node(k).ins.len()).map(|p| g.pred(k, p)).collect();
                g.remove_node(k);
                for s in srcs {
                    g.stub_port(s);
                }
            }
            RuleKind::StreamingWaveform => self.stream(g, k),
            RuleKind::DisconnectDelay => {
                let dst = g.succ(k, 0);
                g.remove_node(k);
                g.connect(Port::new(r.nodes[1], 0), dst);
            }
            RuleKind::UnobservableDelay => {
                let src = g.pred(k, 0);
                g.remove_node(r.nodes[1]);
                g.remove_node(k);
                g.stub_port(src);
            }
            RuleKind::FeedbackUnwindValue | RuleKind::FeedbackStubPropagate | RuleKind::WireTidy => {
                g.bypass(k, 0, 0);
                g.remove_node(k);
            }
            RuleKind::DiscardUnobserved => {
                let obs = obs.unwrap();
                let inputs: BTreeSet<NodeId> = g.inputs().iter().copied().collect();
                let dead: Vec<NodeId> = g.node_ids().filter(|n| !obs.contains(n) && !inputs.contains(n)).collect();
                let dead_set: BTreeSet<NodeId> = dead.iter().copied().collect();
                let mut cut = BTreeSet::new();
                for &d in &dead {
                    for p in g.node(d).ins.iter().flatten() {
                        if !dead_set.contains(&p.node) {
                            cut.insert(*p);
                        }
                    }
                }
                for d in dead {
                    g.remove_node(d);
                }
                for p in cut {
                    g.stub_port(p);
                }
            }
        }
        Ok(())
    }

    fn replace_by_value(&self, g: &mut Tfpg, k: NodeId, consumed: &[NodeId], c: Value) {
        let dst = g.succ(k, 0);
        for &n in consumed {
            if g.contains(n) {
                g.remove_node(n);
            }
        }
        g.remove_node(k);
        let v = g.add_node(NodeLabel::Value(c));
        g.connect(Port::new(v, 0), dst);
    }

    /// k(v₁::s₁, …) ⇒ k(v₁, …) :: k(s₁, …), with bare values read as v::⊥.
    fn stream(&self, g: &mut Tfpg, k: NodeId) {
        let lat = self.sig.lattice();
        let label = g.label(k).clone();
        let NodeLabel::Gate(name, m) = &label else { unreachable!() };
        let dst = g.succ(k, 0);
        let mut heads = Vec::with_capacity(*m);
        let mut tails: Vec<Option<Port>> = Vec::with_capacity(*m);
        let mut dead = Vec::new();
        for p in 0..*m {
            let s = g.pred(k, p).node;
            if *g.label(s) == NodeLabel::Delay {
                heads.push(lat.bottom());
                tails.push(Some(g.pred(s, 0)));
                dead.push(s);
                continue;
            }
            let (v, ns) = Self::head_pattern(g, s).expect("head pattern");
            heads.push(v);
            if ns.len() == 1 {
                tails.push(None);
            } else {
                tails.push(Some(g.pred(ns[2], 0)));
            }
            dead.extend(ns);
        }
        g.remove_node(k);
        for n in dead {
            g.remove_node(n);
        }
        let tail_gate = g.add_node(label.clone());
        for (p, t) in tails.into_iter().enumerate() {
            let src = match t {
                Some(src) => src,
                None => Port::new(g.add_node(NodeLabel::Value(lat.bottom())), 0),
            };
            g.connect(src, Port::new(tail_gate, p));
        }
        let delay = g.add_node(NodeLabel::Delay);
        g.connect(Port::new(tail_gate, 0), Port::new(delay, 0));
        let c = self.sig.gate(name).expect("gate").eval(lat, &heads);
        let head = g.add_node(NodeLabel::Value(c));
        let join = g.add_node(NodeLabel::Join);
        g.connect(Port::new(head, 0), Port::new(join, 0));
        g.connect(Port::new(delay, 0), Port::new(join, 1));
        g.connect(Port::new(join, 0), dst);
    }

    /// Rewrites with the lowest-anchor schedule until no rule applies.
    pub fn normalize_local(&self, g: &mut Tfpg, budget: usize, mut log: Option<&mut Vec<String>>) -> Result<usize, RewriteError> {
        let mut steps = 0;
        while let Some(r) = self.first_redex(g) {
            if steps == budget {
                return Err(RewriteError::BudgetExhausted(budget));
            }
            if let Some(log) = log.as_deref_mut() {
                log.push(r.log_line());
            }
            self.apply_rule(g, &r)?;
            steps += 1;
        }
        Ok(steps)
    }

    /// Like [`Engine::normalize_local`] but picks each redex with `choose`.
    pub fn normalize_with(
        &self,
        g: &mut Tfpg,
        budget: usize,
        mut choose: impl FnMut(usize) -> usize,
    ) -> Result<usize, RewriteError> {
        let mut steps = 0;
        loop {
            let rs = self.find_redexes(g);
            if rs.is_empty() {
                return Ok(steps);
            }
            if steps == budget {
                return Err(RewriteError::BudgetExhausted(budget));
            }
            let r = &rs[choose(rs.len()) % rs.len()];
            self.apply_rule(g, r)?;
            steps += 1;
        }
    }
}
