//! Trace-framed point graphs.
//!
//! Every port carries exactly one edge. Wire nodes have one input and one
//! output slot; interface inputs leave the input slot empty and interface
//! outputs leave the output slot empty. Cycles must pass through a node of the
//! feedback set.

mod dot;
mod iso;
mod readback;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::lattice::{Lattice, Signature, Value};
use crate::term::Term;

pub use dot::to_dot;
pub use iso::iso_equal;
pub use readback::readback_term;

pub type NodeId = usize;

/// One end of an edge: a node and a port index on the relevant side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Port {
    pub node: NodeId,
    pub port: usize,
}

impl Port {
    pub fn new(node: NodeId, port: usize) -> Self {
        Port { node, port }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum NodeLabel {
    Wire,
    Value(Value),
    Gate(String, usize),
    Delay,
    Fork,
    Join,
    Stub,
    Box(String, usize, usize),
}

impl NodeLabel {
    pub fn in_degree(&self) -> usize {
        match self {
            NodeLabel::Value(_) => 0,
            NodeLabel::Wire | NodeLabel::Delay | NodeLabel::Fork | NodeLabel::Stub => 1,
            NodeLabel::Join => 2,
            NodeLabel::Gate(_, m) | NodeLabel::Box(_, m, _) => *m,
        }
    }

    pub fn out_degree(&self) -> usize {
        match self {
            NodeLabel::Stub => 0,
            NodeLabel::Fork => 2,
            NodeLabel::Box(_, _, n) => *n,
            _ => 1,
        }
    }

    pub fn describe(&self, lattice: &Lattice) -> String {
        match self {
            NodeLabel::Wire => "wire".into(),
            NodeLabel::Value(v) => lattice.symbol(*v).to_string(),
            NodeLabel::Gate(name, _) => name.clone(),
            NodeLabel::Delay => "δ".into(),
            NodeLabel::Fork => "fork".into(),
            NodeLabel::Join => "⋎".into(),
            NodeLabel::Stub => "stub".into(),
            NodeLabel::Box(name, _, _) => name.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub label: NodeLabel,
    /// `ins[p]` is the output port feeding input port `p`.
    pub ins: Vec<Option<Port>>,
    /// `outs[p]` is the input port consuming output port `p`.
    pub outs: Vec<Option<Port>>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TfpgError {
    #[error("interface mismatch: {left} outputs composed with {right} inputs")]
    InterfaceMismatch { left: usize, right: usize },
    #[error("cannot trace {width} wires of a graph with {inputs} inputs and {outputs} outputs")]
    TraceTooWide { width: usize, inputs: usize, outputs: usize },
    #[error("invalid graph: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, Default)]
pub struct Tfpg {
    pub(crate) nodes: BTreeMap<NodeId, Node>,
    pub(crate) next: NodeId,
    pub(crate) inputs: Vec<NodeId>,
    pub(crate) outputs: Vec<NodeId>,
    pub(crate) feedback: BTreeSet<NodeId>,
}

impl Tfpg {
    pub fn empty() -> Self {
        Tfpg::default()
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[&id]
    }

    pub fn get(&self, id: NodeId) -> Option<&Node> {
        self.nodes.get(&id)
    }

    pub fn label(&self, id: NodeId) -> &NodeLabel {
        &self.nodes[&id].label
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.nodes.contains_key(&id)
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.keys().copied()
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &Node)> + '_ {
        self.nodes.iter().map(|(k, v)| (*k, v))
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.nodes.values().map(|n| n.outs.iter().flatten().count()).sum()
    }

    pub fn inputs(&self) -> &[NodeId] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[NodeId] {
        &self.outputs
    }

    pub fn feedback(&self) -> &BTreeSet<NodeId> {
        &self.feedback
    }

    pub fn is_feedback(&self, id: NodeId) -> bool {
        self.feedback.contains(&id)
    }

    pub fn is_interface(&self, id: NodeId) -> bool {
        self.inputs.contains(&id) || self.outputs.contains(&id)
    }

    pub fn arity(&self) -> (usize, usize) {
        (self.inputs.len(), self.outputs.len())
    }

    pub fn count_label(&self, pred: impl Fn(&NodeLabel) -> bool) -> usize {
        self.nodes.values().filter(|n| pred(&n.label)).count()
    }

    pub fn delay_count(&self) -> usize {
        self.count_label(|l| *l == NodeLabel::Delay)
    }

    pub fn has_boxes(&self) -> bool {
        self.count_label(|l| matches!(l, NodeLabel::Box(..))) > 0
    }

    /// The output port feeding `(id, port)`.
    pub fn pred(&self, id: NodeId, port: usize) -> Port {
        self.nodes[&id].ins[port].expect("dangling input port")
    }

    /// The input port consuming `(id, port)`.
    pub fn succ(&self, id: NodeId, port: usize) -> Port {
        self.nodes[&id].outs[port].expect("dangling output port")
    }

    // -- mutation ----------------------------------------------------------

    pub(crate) fn add_node(&mut self, label: NodeLabel) -> NodeId {
        let id = self.next;
        self.next += 1;
        let (i, o) = match label {
            NodeLabel::Wire => (1, 1),
            _ => (label.in_degree(), label.out_degree()),
        };
        self.nodes.insert(id, Node { label, ins: vec![None; i], outs: vec![None; o] });
        id
    }

    pub(crate) fn connect(&mut self, from: Port, to: Port) {
        self.nodes.get_mut(&from.node).expect("no source").outs[from.port] = Some(to);
        self.nodes.get_mut(&to.node).expect("no target").ins[to.port] = Some(from);
    }

    /// Removes a node, clearing the far ends of its edges.
    pub(crate) fn remove_node(&mut self, id: NodeId) -> Node {
        let node = self.nodes.remove(&id).expect("removing missing node");
        for p in node.ins.iter().flatten() {
            if let Some(n) = self.nodes.get_mut(&p.node) {
                n.outs[p.port] = None;
            }
        }
        for p in node.outs.iter().flatten() {
            if let Some(n) = self.nodes.get_mut(&p.node) {
                n.ins[p.port] = None;
            }
        }
        self.feedback.remove(&id);
        node
    }

    /// Replaces the label of a node in place, keeping edges on surviving ports.
    pub(crate) fn relabel(&mut self, id: NodeId, label: NodeLabel) {
        let n = self.nodes.get_mut(&id).unwrap();
        n.label = label;
    }

    /// Routes whatever feeds `(id, in_port)` straight into the consumer of
    /// `(id, out_port)`. Both slots are left empty.
    pub(crate) fn bypass(&mut self, id: NodeId, in_port: usize, out_port: usize) {
        let src = self.pred(id, in_port);
        let dst = self.succ(id, out_port);
        self.nodes.get_mut(&id).unwrap().ins[in_port] = None;
        self.nodes.get_mut(&id).unwrap().outs[out_port] = None;
        if src.node == id && src.port == out_port {
            // a wire looping onto itself through this node: nothing outside to join
            return;
        }
        self.connect(src, dst);
    }

    /// Inserts a fresh node of `label` (1 in, 1 out) on the edge leaving `from`.
    pub(crate) fn insert_on_edge(&mut self, from: Port, label: NodeLabel) -> NodeId {
        let to = self.succ(from.node, from.port);
        let n = self.add_node(label);
        self.connect(from, Port::new(n, 0));
        self.connect(Port::new(n, 0), to);
        n
    }

    /// Puts a stub on the output port `from`, dropping its current consumer edge.
    pub(crate) fn stub_port(&mut self, from: Port) -> NodeId {
        let s = self.add_node(NodeLabel::Stub);
        self.connect(from, Port::new(s, 0));
        s
    }

    pub(crate) fn mark_feedback(&mut self, id: NodeId) {
        self.feedback.insert(id);
    }

    /// Adds all nodes of `other` with fresh ids; returns the id translation.
    pub(crate) fn absorb(&mut self, other: &Tfpg) -> BTreeMap<NodeId, NodeId> {
        let map: BTreeMap<NodeId, NodeId> = other
            .nodes
            .keys()
            .map(|&k| {
                let id = self.next;
                self.next += 1;
                (k, id)
            })
            .collect();
        let tr = |p: &Option<Port>| p.map(|p| Port::new(map[&p.node], p.port));
        for (k, n) in &other.nodes {
            self.nodes.insert(
                map[k],
                Node {
                    label: n.label.clone(),
                    ins: n.ins.iter().map(tr).collect(),
                    outs: n.outs.iter().map(tr).collect(),
                },
            );
        }
        for f in &other.feedback {
            self.feedback.insert(map[f]);
        }
        map
    }

    // -- graph algebra -----------------------------------------------------

    /// The graph of a single atomic component with interface wires.
    fn atom(label: NodeLabel) -> Tfpg {
        let mut g = Tfpg::empty();
        let (m, n) = (label.in_degree(), label.out_degree());
        let c = g.add_node(label);
        for p in 0..m {
            let w = g.add_node(NodeLabel::Wire);
            g.connect(Port::new(w, 0), Port::new(c, p));
            g.inputs.push(w);
        }
        for p in 0..n {
            let w = g.add_node(NodeLabel::Wire);
            g.connect(Port::new(c, p), Port::new(w, 0));
            g.outputs.push(w);
        }
        g
    }

    /// The graph of a wiring permutation: output `j` is input `perm[j]`.
    pub fn permutation(perm: &[usize]) -> Tfpg {
        let mut g = Tfpg::empty();
        let ins: Vec<NodeId> = perm.iter().map(|_| g.add_node(NodeLabel::Wire)).collect();
        g.inputs = ins.clone();
        for &src in perm {
            let w = g.add_node(NodeLabel::Wire);
            g.connect(Port::new(ins[src], 0), Port::new(w, 0));
            g.outputs.push(w);
        }
        g
    }

    pub fn identity(n: usize) -> Tfpg {
        Tfpg::permutation(&(0..n).collect::<Vec<_>>())
    }

    pub fn compose_seq(&self, other: &Tfpg) -> Result<Tfpg, TfpgError> {
        if self.outputs.len() != other.inputs.len() {
            return Err(TfpgError::InterfaceMismatch { left: self.outputs.len(), right: other.inputs.len() });
        }
        let mut g = self.clone();
        let map = g.absorb(other);
        let outs = std::mem::take(&mut g.outputs);
        for (o, i) in outs.into_iter().zip(other.inputs.iter().map(|i| map[i])) {
            // o: an output wire of self, i: an input wire of other
            let src = g.pred(o, 0);
            let dst = g.succ(i, 0);
            g.remove_node(o);
            g.remove_node(i);
            g.connect(src, dst);
        }
        g.outputs = other.outputs.iter().map(|o| map[o]).collect();
        Ok(g)
    }

    pub fn tensor(&self, other: &Tfpg) -> Tfpg {
        let mut g = self.clone();
        let map = g.absorb(other);
        g.inputs.extend(other.inputs.iter().map(|i| map[i]));
        g.outputs.extend(other.outputs.iter().map(|o| map[o]));
        g
    }

    /// Ties the last `k` outputs to the last `k` inputs through fresh feedback nodes.
    pub fn close_trace(&self, k: usize) -> Result<Tfpg, TfpgError> {
        let (m, n) = self.arity();
        if k > m || k > n {
            return Err(TfpgError::TraceTooWide { width: k, inputs: m, outputs: n });
        }
        let mut g = self.clone();
        let traced_in: Vec<NodeId> = g.inputs.split_off(m - k);
        let traced_out: Vec<NodeId> = g.outputs.split_off(n - k);
        for &i in &traced_in {
            g.feedback.insert(i);
        }
        for (&o, &i) in traced_out.iter().zip(&traced_in) {
            let src = g.pred(o, 0);
            g.remove_node(o);
            g.connect(src, Port::new(i, 0));
        }
        g.normalize_wires();
        Ok(g)
    }

    pub fn from_term(term: &Term, sig: &Signature) -> Tfpg {
        let mut g = build(term, sig);
        g.normalize_wires();
        g
    }

    // -- normalization -----------------------------------------------------

    /// Removes every wire node that is neither an interface nor in the feedback
    /// set, and collapses chains of feedback nodes to one node per loop segment.
    pub fn normalize_wires(&mut self) {
        let inputs: BTreeSet<NodeId> = self.inputs.iter().copied().collect();
        let outputs: BTreeSet<NodeId> = self.outputs.iter().copied().collect();
        let wires: Vec<NodeId> = self
            .nodes
            .iter()
            .filter(|(_, n)| n.label == NodeLabel::Wire)
            .map(|(k, _)| *k)
            .collect();
        for w in wires {
            if !self.nodes.contains_key(&w) || inputs.contains(&w) || outputs.contains(&w) {
                continue;
            }
            if self.feedback.contains(&w) {
                // keep one node of each chain of feedback nodes
                loop {
                    let src = self.pred(w, 0).node;
                    if src == w || !self.feedback.contains(&src) {
                        break;
                    }
                    self.bypass(src, 0, 0);
                    self.remove_node(src);
                }
                continue;
            }
            let src = self.pred(w, 0);
            if src.node == w {
                // a loop made only of plain wires: it must stay framed
                self.feedback.insert(w);
                continue;
            }
            self.bypass(w, 0, 0);
            self.remove_node(w);
        }
    }

    pub fn normalized(mut self) -> Tfpg {
        self.normalize_wires();
        self
    }

    pub fn is_normalized(&self) -> bool {
        self.nodes.iter().all(|(k, n)| {
            n.label != NodeLabel::Wire
                || self.is_interface(*k)
                || (self.feedback.contains(k) && {
                    let src = self.pred(*k, 0).node;
                    src == *k || !self.feedback.contains(&src)
                })
        })
    }

    /// A copy with node ids renumbered densely in a deterministic order.
    pub fn compacted(&self) -> Tfpg {
        let mut g = Tfpg::empty();
        g.absorb(self);
        let map: BTreeMap<NodeId, NodeId> = self.nodes.keys().enumerate().map(|(i, k)| (*k, i)).collect();
        g.inputs = self.inputs.iter().map(|i| map[i]).collect();
        g.outputs = self.outputs.iter().map(|o| map[o]).collect();
        g
    }

    // -- structure queries -------------------------------------------------

    /// Topological order of non-feedback nodes, treating feedback nodes as cut
    /// points. `None` when a cycle avoids the feedback set.
    pub fn topo_order(&self) -> Option<Vec<NodeId>> {
        let mut indeg: BTreeMap<NodeId, usize> = BTreeMap::new();
        for (&k, n) in &self.nodes {
            if self.feedback.contains(&k) {
                continue;
            }
            let d = n.ins.iter().flatten().filter(|p| !self.feedback.contains(&p.node)).count();
            indeg.insert(k, d);
        }
        let mut ready: Vec<NodeId> = indeg.iter().filter(|(_, d)| **d == 0).map(|(k, _)| *k).collect();
        ready.reverse();
        let mut order = Vec::with_capacity(indeg.len());
        while let Some(k) = ready.pop() {
            order.push(k);
            for p in self.nodes[&k].outs.iter().flatten() {
                if let Some(d) = indeg.get_mut(&p.node) {
                    *d -= 1;
                    if *d == 0 {
                        ready.push(p.node);
                    }
                }
            }
        }
        (order.len() == indeg.len()).then_some(order)
    }

    /// Whether the graph stays acyclic when nodes matching `cut` are removed.
    pub fn acyclic_without(&self, cut: impl Fn(NodeId, &NodeLabel) -> bool) -> bool {
        let keep: BTreeSet<NodeId> = self.nodes.iter().filter(|(k, n)| !cut(**k, &n.label)).map(|(k, _)| *k).collect();
        let mut indeg: BTreeMap<NodeId, usize> = keep
            .iter()
            .map(|k| (*k, self.nodes[k].ins.iter().flatten().filter(|p| keep.contains(&p.node)).count()))
            .collect();
        let mut ready: Vec<NodeId> = indeg.iter().filter(|(_, d)| **d == 0).map(|(k, _)| *k).collect();
        let mut seen = 0;
        while let Some(k) = ready.pop() {
            seen += 1;
            for p in self.nodes[&k].outs.iter().flatten() {
                if let Some(d) = indeg.get_mut(&p.node) {
                    *d -= 1;
                    if *d == 0 {
                        ready.push(p.node);
                    }
                }
            }
        }
        seen == keep.len()
    }

    /// Nodes from which some output interface is reachable.
    pub fn observable(&self) -> BTreeSet<NodeId> {
        let mut seen: BTreeSet<NodeId> = self.outputs.iter().copied().collect();
        let mut stack: Vec<NodeId> = self.outputs.clone();
        while let Some(k) = stack.pop() {
            for p in self.nodes[&k].ins.iter().flatten() {
                if seen.insert(p.node) {
                    stack.push(p.node);
                }
            }
        }
        seen
    }

    // -- validation --------------------------------------------------------

    /// Checks every structural invariant of a trace-framed point graph.
    pub fn validate(&self) -> Result<(), TfpgError> {
        let bad = |m: String| Err(TfpgError::Invalid(m));
        let inputs: BTreeSet<NodeId> = self.inputs.iter().copied().collect();
        let outputs: BTreeSet<NodeId> = self.outputs.iter().copied().collect();
        if inputs.len() != self.inputs.len() || outputs.len() != self.outputs.len() {
            return bad("repeated interface node".into());
        }
        if !inputs.is_disjoint(&outputs) {
            return bad("node on both interfaces".into());
        }
        for (&k, n) in &self.nodes {
            if k >= self.next {
                return bad(format!("node {k} beyond id counter"));
            }
            let (ei, eo) = match n.label {
                NodeLabel::Wire => (1, 1),
                ref l => (l.in_degree(), l.out_degree()),
            };
            if n.ins.len() != ei || n.outs.len() != eo {
                return bad(format!("node {k} has wrong port counts"));
            }
            for (p, e) in n.ins.iter().enumerate() {
                match e {
                    None if inputs.contains(&k) => {}
                    None => return bad(format!("input port {p} of node {k} is unconnected")),
                    Some(_) if inputs.contains(&k) => return bad(format!("input interface {k} has an incoming edge")),
                    Some(src) => match self.nodes.get(&src.node) {
                        Some(s) if s.outs.get(src.port) == Some(&Some(Port::new(k, p))) => {}
                        _ => return bad(format!("edge into {k}:{p} is not mirrored")),
                    },
                }
            }
            for (p, e) in n.outs.iter().enumerate() {
                match e {
                    None if outputs.contains(&k) => {}
                    None => return bad(format!("output port {p} of node {k} is unconnected")),
                    Some(_) if outputs.contains(&k) => return bad(format!("output interface {k} has an outgoing edge")),
                    Some(dst) => match self.nodes.get(&dst.node) {
                        Some(d) if d.ins.get(dst.port) == Some(&Some(Port::new(k, p))) => {}
                        _ => return bad(format!("edge out of {k}:{p} is not mirrored")),
                    },
                }
            }
        }
        for &k in inputs.iter().chain(outputs.iter()) {
            match self.nodes.get(&k) {
                Some(n) if n.label == NodeLabel::Wire => {}
                _ => return bad(format!("interface node {k} is not a wire")),
            }
            if self.feedback.contains(&k) {
                return bad(format!("interface node {k} is in the feedback set"));
            }
        }
        for &f in &self.feedback {
            match self.nodes.get(&f) {
                Some(n) if n.label == NodeLabel::Wire => {}
                _ => return bad(format!("feedback node {f} is not a wire")),
            }
        }
        if self.topo_order().is_none() {
            return bad("cycle avoiding the feedback set".into());
        }
        Ok(())
    }

    pub fn display<'a>(&'a self, lattice: &'a Lattice) -> TfpgDisplay<'a> {
        TfpgDisplay { g: self, lattice }
    }
}

fn build(term: &Term, sig: &Signature) -> Tfpg {
    match term {
        Term::Id(n) => Tfpg::identity(*n),
        Term::Sym(m, n) => {
            let perm: Vec<usize> = (*m..m + n).chain(0..*m).collect();
            Tfpg::permutation(&perm)
        }
        Term::Gate(name) => {
            let arity = sig.gate(name).map(|g| g.arity()).expect("unresolved gate");
            Tfpg::atom(NodeLabel::Gate(name.clone(), arity))
        }
        Term::Value(v) => Tfpg::atom(NodeLabel::Value(*v)),
        Term::Delay => Tfpg::atom(NodeLabel::Delay),
        Term::Fork => Tfpg::atom(NodeLabel::Fork),
        Term::Join => Tfpg::atom(NodeLabel::Join),
        Term::Stub => Tfpg::atom(NodeLabel::Stub),
        Term::Box { name, inputs, outputs } => Tfpg::atom(NodeLabel::Box(name.clone(), *inputs, *outputs)),
        Term::Seq(a, b) => build(a, sig).compose_seq(&build(b, sig)).expect("ill-typed term"),
        Term::Tensor(a, b) => build(a, sig).tensor(&build(b, sig)),
        Term::Trace(k, t) => build(t, sig).close_trace(*k).expect("ill-typed trace"),
    }
}

pub struct TfpgDisplay<'a> {
    g: &'a Tfpg,
    lattice: &'a Lattice,
}

impl fmt::Display for TfpgDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let g = self.g;
        writeln!(f, "inputs {:?} outputs {:?} feedback {:?}", g.inputs, g.outputs, g.feedback)?;
        for (k, n) in &g.nodes {
            let ins: Vec<String> = n.ins.iter().map(|p| p.map_or("-".into(), |p| format!("{}:{}", p.node, p.port))).collect();
            writeln!(f, "  {k} {} <- [{}]", n.label.describe(self.lattice), ins.join(", "))?;
        }
        Ok(())
    }
}
