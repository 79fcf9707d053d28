use super::{NodeId, NodeLabel, Port, Tfpg};
use crate::term::Term;

fn label_term(l: &NodeLabel) -> Term {
    match l {
        NodeLabel::Wire => Term::Id(1),
        NodeLabel::Value(v) => Term::Value(*v),
        NodeLabel::Gate(name, _) => Term::Gate(name.clone()),
        NodeLabel::Delay => Term::Delay,
        NodeLabel::Fork => Term::Fork,
        NodeLabel::Join => Term::Join,
        NodeLabel::Stub => Term::Stub,
        NodeLabel::Box(name, m, n) => Term::Box { name: name.clone(), inputs: *m, outputs: *n },
    }
}

fn tensor(a: Term, b: Term) -> Term {
    match (&a, &b) {
        (Term::Id(0), _) => b,
        (_, Term::Id(0)) => a,
        (Term::Id(x), Term::Id(y)) => Term::Id(x + y),
        _ => Term::tensor(a, b),
    }
}

/// The bus of wires between stages, each identified by the port driving it.
struct Bus {
    wires: Vec<Port>,
    stages: Vec<Term>,
}

impl Bus {
    /// Moves the wires driven by `want` to the end of the bus, in that order.
    fn gather(&mut self, want: &[Port]) {
        if self.wires.ends_with(want) {
            return;
        }
        for p in want {
            let i = self.wires.iter().position(|w| w == p).expect("wire not on bus");
            let rest = self.wires.len() - i - 1;
            if rest > 0 {
                self.stages.push(tensor(Term::Id(i), Term::Sym(1, rest)));
                let w = self.wires.remove(i);
                self.wires.push(w);
            }
        }
    }
}

/// A term whose graph is isomorphic to `g`: a single trace around a layered
/// decomposition of the acyclic body.
pub fn readback_term(g: &Tfpg) -> Term {
    let fb: Vec<NodeId> = g.feedback.iter().copied().collect();
    let mut bus = Bus {
        wires: g.inputs.iter().chain(&fb).map(|&n| Port::new(n, 0)).collect(),
        stages: Vec::new(),
    };
    let order = g.topo_order().expect("graph is framed");
    for k in order {
        let n = &g.nodes[&k];
        if n.label == NodeLabel::Wire {
            continue;
        }
        let want: Vec<Port> = n.ins.iter().map(|p| p.expect("dangling")).collect();
        bus.gather(&want);
        let keep = bus.wires.len() - want.len();
        bus.wires.truncate(keep);
        bus.stages.push(tensor(Term::Id(keep), label_term(&n.label)));
        bus.wires.extend((0..n.outs.len()).map(|p| Port::new(k, p)));
    }
    let want: Vec<Port> = g.outputs.iter().chain(&fb).map(|&n| g.pred(n, 0)).collect();
    bus.gather(&want);
    debug_assert_eq!(bus.wires, want);
    let body = if bus.stages.is_empty() {
        Term::Id(bus.wires.len())
    } else {
        Term::seq_all(bus.stages)
    };
    if fb.is_empty() {
        body
    } else {
        Term::trace(fb.len(), body)
    }
}
