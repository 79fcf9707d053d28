use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, HashMap};
use std::hash::{Hash, Hasher};

use super::{NodeId, NodeLabel, Port, Tfpg};

/// Structural equality up to node renaming. Interfaces must correspond in
/// order, the feedback set must map onto the feedback set, and port indices
/// must agree except on Join inputs and Fork outputs, which are unordered.
pub fn iso_equal(a: &Tfpg, b: &Tfpg) -> bool {
    if a.arity() != b.arity() || a.node_count() != b.node_count() || a.feedback.len() != b.feedback.len() {
        return false;
    }
    let ca = colours(a);
    let cb = colours(b);
    let mut ha: Vec<u64> = ca.values().copied().collect();
    let mut hb: Vec<u64> = cb.values().copied().collect();
    ha.sort_unstable();
    hb.sort_unstable();
    if ha != hb {
        return false;
    }
    let mut st = State { a, b, ca: &ca, cb: &cb, fwd: HashMap::new(), bwd: HashMap::new(), perm: HashMap::new() };
    let seeds: Vec<(NodeId, NodeId)> =
        a.inputs.iter().zip(&b.inputs).chain(a.outputs.iter().zip(&b.outputs)).map(|(x, y)| (*x, *y)).collect();
    st.search(seeds)
}

fn initial_colour(g: &Tfpg, id: NodeId) -> u64 {
    let mut h = DefaultHasher::new();
    g.nodes[&id].label.hash(&mut h);
    g.feedback.contains(&id).hash(&mut h);
    g.inputs.iter().position(|&i| i == id).hash(&mut h);
    g.outputs.iter().position(|&o| o == id).hash(&mut h);
    h.finish()
}

fn unordered_in(l: &NodeLabel) -> bool {
    *l == NodeLabel::Join
}

fn unordered_out(l: &NodeLabel) -> bool {
    *l == NodeLabel::Fork
}

fn colours(g: &Tfpg) -> BTreeMap<NodeId, u64> {
    let mut col: BTreeMap<NodeId, u64> = g.nodes.keys().map(|&k| (k, initial_colour(g, k))).collect();
    let rounds = g.nodes.len().min(16) + 1;
    for _ in 0..rounds {
        let mut next = BTreeMap::new();
        for (&k, n) in &g.nodes {
            let side = |ports: &Vec<Option<Port>>, unordered: bool, src_unordered: &dyn Fn(&NodeLabel) -> bool| {
                let mut v: Vec<(usize, u64, usize)> = ports
                    .iter()
                    .enumerate()
                    .map(|(i, p)| match p {
                        Some(p) => {
                            let other = &g.nodes[&p.node].label;
                            let far = if src_unordered(other) { 0 } else { p.port + 1 };
                            (if unordered { 0 } else { i + 1 }, col[&p.node], far)
                        }
                        None => (i + 1, 0, 0),
                    })
                    .collect();
                v.sort_unstable();
                v
            };
            let mut h = DefaultHasher::new();
            col[&k].hash(&mut h);
            side(&n.ins, unordered_in(&n.label), &unordered_out).hash(&mut h);
            side(&n.outs, unordered_out(&n.label), &unordered_in).hash(&mut h);
            next.insert(k, h.finish());
        }
        col = next;
    }
    col
}

#[derive(Clone)]
struct State<'g> {
    a: &'g Tfpg,
    b: &'g Tfpg,
    ca: &'g BTreeMap<NodeId, u64>,
    cb: &'g BTreeMap<NodeId, u64>,
    fwd: HashMap<NodeId, NodeId>,
    bwd: HashMap<NodeId, NodeId>,
    /// Whether the two ports of a mapped Join/Fork are crossed.
    perm: HashMap<NodeId, bool>,
}

impl State<'_> {
    fn in_port(&self, a_node: NodeId, p: usize) -> usize {
        if unordered_in(&self.a.nodes[&a_node].label) && self.perm[&a_node] {
            1 - p
        } else {
            p
        }
    }

    fn out_port(&self, a_node: NodeId, p: usize) -> usize {
        if unordered_out(&self.a.nodes[&a_node].label) && self.perm[&a_node] {
            1 - p
        } else {
            p
        }
    }

    /// Maps `x ↦ y` under the port choice `crossed` and checks every edge to
    /// an already mapped neighbour. Returns the implied neighbour pairs.
    fn assign(&mut self, x: NodeId, y: NodeId, crossed: bool) -> Option<Vec<(NodeId, NodeId)>> {
        self.fwd.insert(x, y);
        self.bwd.insert(y, x);
        self.perm.insert(x, crossed);
        let (nx, ny) = (&self.a.nodes[&x], &self.b.nodes[&y]);
        let mut implied = Vec::new();
        for (p, e) in nx.ins.iter().enumerate() {
            let q = self.in_port(x, p);
            match (e, ny.ins[q]) {
                (None, None) => {}
                (Some(s), Some(t)) => {
                    if let Some(&m) = self.fwd.get(&s.node) {
                        if m != t.node || self.out_port(s.node, s.port) != t.port {
                            return None;
                        }
                    } else {
                        implied.push((s.node, t.node));
                    }
                }
                _ => return None,
            }
        }
        for (p, e) in nx.outs.iter().enumerate() {
            let q = self.out_port(x, p);
            match (e, ny.outs[q]) {
                (None, None) => {}
                (Some(s), Some(t)) => {
                    if let Some(&m) = self.fwd.get(&s.node) {
                        if m != t.node || self.in_port(s.node, s.port) != t.port {
                            return None;
                        }
                    } else {
                        implied.push((s.node, t.node));
                    }
                }
                _ => return None,
            }
        }
        Some(implied)
    }

    fn search(&mut self, mut work: Vec<(NodeId, NodeId)>) -> bool {
        while let Some((x, y)) = work.pop() {
            match (self.fwd.get(&x), self.bwd.get(&y)) {
                (Some(&m), _) if m == y => continue,
                (None, None) => {}
                _ => return false,
            }
            if self.ca[&x] != self.cb[&y] {
                return false;
            }
            let label = &self.a.nodes[&x].label;
            if unordered_in(label) || unordered_out(label) {
                for crossed in [false, true] {
                    let mut branch = self.clone();
                    if let Some(more) = branch.assign(x, y, crossed) {
                        let mut w = work.clone();
                        w.extend(more);
                        if branch.search(w) {
                            *self = branch;
                            return true;
                        }
                    }
                }
                return false;
            }
            match self.assign(x, y, false) {
                Some(more) => work.extend(more),
                None => return false,
            }
        }
        // a component unreachable from the interfaces: choose a seed
        let Some(x) = self.a.nodes.keys().copied().find(|k| !self.fwd.contains_key(k)) else {
            return true;
        };
        let cands: Vec<NodeId> =
            self.b.nodes.keys().copied().filter(|k| !self.bwd.contains_key(k) && self.cb[k] == self.ca[&x]).collect();
        for y in cands {
            let mut branch = self.clone();
            if branch.search(vec![(x, y)]) {
                *self = branch;
                return true;
            }
        }
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::builtin_signature;
    use crate::term::parse;

    fn g(src: &str) -> Tfpg {
        let sig = builtin_signature("bool4").unwrap();
        Tfpg::from_term(&parse(src, &sig).unwrap(), &sig)
    }

    fn shuffled(g: &Tfpg) -> Tfpg {
        // re-insert nodes in reverse order so every id changes
        let mut out = Tfpg::empty();
        out.next = 1000;
        let ids: Vec<NodeId> = g.nodes.keys().rev().copied().collect();
        let map: HashMap<NodeId, NodeId> = ids.iter().enumerate().map(|(i, k)| (*k, 1000 + i * 7)).collect();
        for (k, n) in &g.nodes {
            let tr = |p: &Option<Port>| p.map(|p| Port::new(map[&p.node], p.port));
            out.nodes.insert(
                map[k],
                super::super::Node {
                    label: n.label.clone(),
                    ins: n.ins.iter().map(tr).collect(),
                    outs: n.outs.iter().map(tr).collect(),
                },
            );
        }
        out.next = 1000 + ids.len() * 7;
        out.inputs = g.inputs.iter().map(|i| map[i]).collect();
        out.outputs = g.outputs.iter().map(|o| map[o]).collect();
        out.feedback = g.feedback.iter().map(|f| map[f]).collect();
        out.validate().unwrap();
        out
    }

    #[test]
    fn two_spellings_of_a_chain() {
        assert!(iso_equal(&g("(((t * f) ; and) * t) ; and"), &g("(t * f * t) ; (and * id 1) ; and")));
    }

    #[test]
    fn renaming_is_invisible() {
        for src in ["tr 1 (and ; fork)", "t * f ; and", "fork ; join", "tr 2 (sym 1 1 * id 1 ; id 1 * and ; id 1 * fork)", "t ; stub"] {
            let a = g(src);
            assert!(iso_equal(&a, &shuffled(&a)), "{src}");
        }
    }

    #[test]
    fn labels_and_ports_matter() {
        assert!(!iso_equal(&g("t"), &g("f")));
        assert!(!iso_equal(&g("id 2"), &g("sym 1 1")));
        assert!(!iso_equal(&g("t * f ; and"), &g("f * t ; or")));
        // gates other than join keep their port order
        assert!(!iso_equal(&g("t * f ; and"), &g("f * t ; and")));
    }

    #[test]
    fn join_and_fork_are_symmetric() {
        assert!(iso_equal(&g("t * f ; join"), &g("f * t ; join")));
        assert!(iso_equal(&g("fork ; sym 1 1"), &g("fork")));
        assert!(iso_equal(&g("fork ; not * id 1"), &g("fork ; sym 1 1 ; id 1 * not ; sym 1 1")));
        assert!(!iso_equal(&g("fork ; not * id 1"), &g("fork ; id 1 * not")));
        assert!(iso_equal(&g("fork ; not * id 1 ; and"), &g("fork ; id 1 * not ; sym 1 1 ; and")));
        assert!(!iso_equal(&g("fork ; not * id 1 ; and"), &g("fork ; id 1 * not ; and")));
    }

    #[test]
    fn closed_components_are_matched() {
        assert!(iso_equal(&g("t ; stub * f ; stub"), &g("f ; stub * t ; stub")));
        assert!(!iso_equal(&g("t ; stub * t ; stub"), &g("f ; stub * t ; stub")));
        assert!(iso_equal(&g("tr 1 (id 1)"), &shuffled(&g("tr 1 (id 1)"))));
    }
}
