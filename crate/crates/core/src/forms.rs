//! Canonical forms: global trace, global-delay form and passification.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::lattice::Value;
use crate::tfpg::{NodeId, NodeLabel, Port, Tfpg, TfpgError};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormsError {
    #[error(transparent)]
    Invalid(#[from] TfpgError),
    #[error("passification needs a combinational graph (found {0})")]
    NotCombinational(&'static str),
}

/// Re-validates the graph and renumbers it so that the interface inputs come
/// first, then the feedback nodes as one contiguous block, then the body in
/// topological order, then the outputs.
pub fn globalize_trace(g: &Tfpg) -> Result<Tfpg, FormsError> {
    g.validate()?;
    let order = g.topo_order().expect("validated");
    let mut seq: Vec<NodeId> = g.inputs().to_vec();
    seq.extend(g.feedback().iter().copied());
    seq.extend(order.into_iter().filter(|k| !g.is_interface(*k)));
    seq.extend(g.outputs().iter().copied());
    let map: BTreeMap<NodeId, NodeId> = seq.iter().enumerate().map(|(i, k)| (*k, i)).collect();
    let mut out = Tfpg::empty();
    for &k in &seq {
        let id = out.add_node(g.label(k).clone());
        debug_assert_eq!(id, map[&k]);
    }
    for &k in &seq {
        for (p, e) in g.node(k).outs.iter().enumerate() {
            if let Some(t) = e {
                out.connect(Port::new(map[&k], p), Port::new(map[&t.node], t.port));
            }
        }
    }
    out.inputs = g.inputs().iter().map(|k| map[k]).collect();
    out.outputs = g.outputs().iter().map(|k| map[k]).collect();
    for f in g.feedback() {
        out.mark_feedback(map[f]);
    }
    out.validate()?;
    Ok(out)
}

/// A graph in global-delay form: every Delay reads straight from a feedback node.
#[derive(Clone, Debug)]
pub struct GlobalDelayView {
    pub graph: Tfpg,
    /// Number of feedback nodes.
    pub trace_width: usize,
    /// Number of feedback nodes that feed a Delay.
    pub delayed: usize,
    /// Delay node ↦ the feedback node feeding it.
    pub witness: BTreeMap<NodeId, NodeId>,
}

impl GlobalDelayView {
    pub fn check(&self) -> bool {
        self.graph.nodes().filter(|(_, n)| n.label == NodeLabel::Delay).all(|(k, n)| {
            let src = n.ins[0].expect("dangling").node;
            self.graph.is_feedback(src) && self.witness.get(&k) == Some(&src)
        })
    }
}

/// Marks a fresh feedback node on the input wire of every Delay not already
/// fed by one. A trace over a straight wire is that wire, so this is sound.
pub fn hoist_delays(g: &Tfpg) -> GlobalDelayView {
    let mut graph = g.clone();
    let delays: Vec<NodeId> = graph.nodes().filter(|(_, n)| n.label == NodeLabel::Delay).map(|(k, _)| k).collect();
    let mut witness = BTreeMap::new();
    for d in delays {
        let src = graph.pred(d, 0);
        let f = if graph.is_feedback(src.node) {
            src.node
        } else {
            let f = graph.insert_on_edge(src, NodeLabel::Wire);
            graph.mark_feedback(f);
            f
        };
        witness.insert(d, f);
    }
    GlobalDelayView {
        trace_width: graph.feedback().len(),
        delayed: witness.len(),
        witness,
        graph,
    }
}

/// Replaces every Value node (in id order) by a fresh input appended after
/// the existing inputs. Returns the passive graph and the extracted values.
pub fn passify(g: &Tfpg) -> Result<(Tfpg, Vec<Value>), FormsError> {
    if g.delay_count() > 0 {
        return Err(FormsError::NotCombinational("a delay"));
    }
    if !g.feedback().is_empty() {
        return Err(FormsError::NotCombinational("feedback"));
    }
    let mut out = g.clone();
    let mut values = Vec::new();
    let consts: Vec<(NodeId, Value)> = g
        .nodes()
        .filter_map(|(k, n)| match n.label {
            NodeLabel::Value(v) => Some((k, v)),
            _ => None,
        })
        .collect();
    for (k, v) in consts {
        let dst = out.succ(k, 0);
        out.remove_node(k);
        let w = out.add_node(NodeLabel::Wire);
        out.connect(Port::new(w, 0), dst);
        out.inputs.push(w);
        values.push(v);
    }
    Ok((out, values))
}

/// Plugs `values` into the trailing inputs of a passive graph.
pub fn unpassify(passive: &Tfpg, values: &[Value]) -> Tfpg {
    let m = passive.inputs().len() - values.len();
    let mut bundle = Tfpg::identity(m);
    for &v in values {
        let mut c = Tfpg::empty();
        let n = c.add_node(NodeLabel::Value(v));
        let o = c.add_node(NodeLabel::Wire);
        c.connect(Port::new(n, 0), Port::new(o, 0));
        c.outputs.push(o);
        bundle = bundle.tensor(&c);
    }
    bundle.compose_seq(passive).expect("arity").normalized()
}
