use std::fmt::Write;

use super::{NodeLabel, Tfpg};
use crate::lattice::Lattice;

/// Deterministic Graphviz rendering. Feedback wire nodes are drawn in red.
pub fn to_dot(g: &Tfpg, lattice: &Lattice) -> String {
    let mut s = String::from("digraph tfpg {\n  rankdir=LR;\n  node [fontname=\"monospace\"];\n");
    for (&k, n) in &g.nodes {
        let (label, shape, extra) = if let Some(i) = g.inputs.iter().position(|&x| x == k) {
            (format!("in{i}"), "plaintext", "")
        } else if let Some(i) = g.outputs.iter().position(|&x| x == k) {
            (format!("out{i}"), "plaintext", "")
        } else if g.feedback.contains(&k) {
            ("fb".to_string(), "point", ", color=red, width=0.15")
        } else {
            let shape = match n.label {
                NodeLabel::Value(_) => "circle",
                NodeLabel::Gate(..) => "box",
                NodeLabel::Box(..) => "box3d",
                NodeLabel::Delay => "square",
                NodeLabel::Fork | NodeLabel::Join | NodeLabel::Stub => "diamond",
                NodeLabel::Wire => "point",
            };
            (n.label.describe(lattice), shape, "")
        };
        let _ = writeln!(s, "  n{k} [label=\"{}\", shape={shape}{extra}];", label.replace('"', "\\\""));
    }
    for (&k, n) in &g.nodes {
        for (p, e) in n.outs.iter().enumerate() {
            if let Some(t) = e {
                let red = if g.feedback.contains(&k) || g.feedback.contains(&t.node) { ", color=red" } else { "" };
                let _ = writeln!(s, "  n{k} -> n{} [taillabel=\"{p}\", headlabel=\"{}\"{red}];", t.node, t.port);
            }
        }
    }
    s.push_str("}\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::builtin_signature;
    use crate::term::parse;

    #[test]
    fn empty_graph_has_only_frame() {
        let sig = builtin_signature("bool4").unwrap();
        let d = to_dot(&Tfpg::empty(), sig.lattice());
        assert_eq!(d, "digraph tfpg {\n  rankdir=LR;\n  node [fontname=\"monospace\"];\n}\n");
    }

    #[test]
    fn value_graph_and_determinism() {
        let sig = builtin_signature("bool4").unwrap();
        let g = Tfpg::from_term(&parse("t", &sig).unwrap(), &sig);
        let d = to_dot(&g, sig.lattice());
        assert_eq!(d.matches("[label=").count(), 2);
        assert!(d.contains("label=\"t\""));
        assert!(d.contains("label=\"out0\""));
        assert_eq!(d, to_dot(&g.clone(), sig.lattice()));
    }

    #[test]
    fn feedback_is_red() {
        let sig = builtin_signature("bool4").unwrap();
        let g = Tfpg::from_term(&parse("tr 1 (and ; fork)", &sig).unwrap(), &sig);
        assert!(to_dot(&g, sig.lattice()).contains("color=red"));
    }
}
