//! Execution by unfolding: emission of head values, the trace-delay unfold
//! for closed circuits, and partial evaluation of open ones.

use std::collections::{BTreeMap, BTreeSet};

use super::{Engine, Mode, RewriteError};
use crate::forms::{hoist_delays, GlobalDelayView};
use crate::lattice::{Signature, Value};
use crate::tfpg::{NodeId, NodeLabel, Port, Tfpg};

/// Strips one head value from every output of a closed, locally canonical
/// graph. Each output must be fed by a Value (`v::⊥`), a Delay (`⊥::x`) or a
/// Join of a Value and a Delay (`v::x`).
pub fn emit_head_values(g: &Tfpg, sig: &Signature) -> Option<(Vec<Value>, Tfpg)> {
    if !g.inputs().is_empty() {
        return None;
    }
    let bot = sig.lattice().bottom();
    enum Head {
        Value(NodeId, Value),
        Delay(NodeId),
        Joined(NodeId, NodeId, NodeId, Value),
    }
    let mut heads = Vec::new();
    for &o in g.outputs() {
        let s = g.pred(o, 0).node;
        let h = match g.label(s) {
            NodeLabel::Value(v) => Head::Value(s, *v),
            NodeLabel::Delay => Head::Delay(s),
            NodeLabel::Join => {
                let (a, b) = (g.pred(s, 0).node, g.pred(s, 1).node);
                match (g.label(a), g.label(b)) {
                    (NodeLabel::Value(v), NodeLabel::Delay) => Head::Joined(s, a, b, *v),
                    (NodeLabel::Delay, NodeLabel::Value(v)) => Head::Joined(s, b, a, *v),
                    _ => return None,
                }
            }
            _ => return None,
        };
        heads.push(h);
    }
    let mut r = g.clone();
    let mut out = Vec::with_capacity(heads.len());
    for h in heads {
        match h {
            Head::Value(n, v) => {
                out.push(v);
                r.relabel(n, NodeLabel::Value(bot));
            }
            Head::Delay(d) => {
                out.push(bot);
                r.bypass(d, 0, 0);
                r.remove_node(d);
            }
            Head::Joined(j, vn, d, v) => {
                out.push(v);
                r.remove_node(vn);
                let dst = r.succ(j, 0);
                r.remove_node(j);
                let src = r.pred(d, 0);
                r.remove_node(d);
                r.connect(src, dst);
            }
        }
    }
    r.normalize_wires();
    Some((out, r))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Productivity {
    /// Every cycle passes through a delay.
    DelayGuarded,
    /// An unfolded graph whose front copy is canonical yet exposes no value.
    Blocked,
    /// Neither criterion decides; unfold and retry.
    Unknown,
}

/// `unfolded` says whether `g` is the canonical form of a trace-delay unfold.
pub fn classify_productivity(g: &Tfpg, sig: &Signature, unfolded: bool) -> Productivity {
    if g.acyclic_without(|_, l| *l == NodeLabel::Delay) {
        return Productivity::DelayGuarded;
    }
    if unfolded && emit_head_values(g, sig).is_none() {
        return Productivity::Blocked;
    }
    Productivity::Unknown
}

/// One unfolding of the global trace of a closed graph in global-delay form.
///
/// The result joins a front copy, which computes the current tick with every
/// delay reading ⊥, with a delayed copy that computes the rest of the stream.
/// In the delayed copy constants become ⊥ and each delay re-emits the value its
/// feedback wire carried in the front copy before its own delayed contents.
pub fn unfold_trace_delay(view: &GlobalDelayView, sig: &Signature) -> Result<Tfpg, RewriteError> {
    let g = &view.graph;
    if !g.inputs().is_empty() {
        return Err(RewriteError::NotClosed);
    }
    if !view.check() {
        return Err(RewriteError::NotGlobalDelayForm);
    }
    let bot = sig.lattice().bottom();
    let mut h = Tfpg::empty();
    let front = h.absorb(g);
    let rest = h.absorb(g);

    for &d in view.witness.keys() {
        let dc = front[&d];
        let dst = h.succ(dc, 0);
        h.remove_node(dc);
        let b = h.add_node(NodeLabel::Value(bot));
        h.connect(Port::new(b, 0), dst);
    }
    let taps: BTreeMap<NodeId, Port> = view.witness.iter().map(|(&d, &f)| (d, h.pred(front[&f], 0))).collect();
    for &f in view.witness.values() {
        h.remove_node(front[&f]);
    }
    for (k, n) in g.nodes() {
        if matches!(n.label, NodeLabel::Value(_)) {
            h.relabel(rest[&k], NodeLabel::Value(bot));
        }
    }
    for &d in view.witness.keys() {
        let dr = rest[&d];
        let dst = h.succ(dr, 0);
        let j = h.add_node(NodeLabel::Join);
        h.connect(taps[&d], Port::new(j, 0));
        h.connect(Port::new(dr, 0), Port::new(j, 1));
        h.connect(Port::new(j, 0), dst);
    }
    for &o in g.outputs() {
        let (oc, or) = (front[&o], rest[&o]);
        let now = h.pred(oc, 0);
        let later = h.pred(or, 0);
        h.remove_node(oc);
        h.remove_node(or);
        let d = h.add_node(NodeLabel::Delay);
        let j = h.add_node(NodeLabel::Join);
        let w = h.add_node(NodeLabel::Wire);
        h.connect(now, Port::new(j, 0));
        h.connect(later, Port::new(d, 0));
        h.connect(Port::new(d, 0), Port::new(j, 1));
        h.connect(Port::new(j, 0), Port::new(w, 0));
        h.outputs.push(w);
    }
    h.normalize_wires();
    h.validate()?;
    Ok(h)
}

/// Unrolls the loop through feedback node `f` once, by the iteration equation.
/// The backward cone of `f`'s input, up to feedback nodes and interface
/// inputs, is copied; the copy reads `f` and feeds `f`'s old consumer. Returns
/// `None` when the cone is empty.
pub fn unfold_feedback(g: &Tfpg, f: NodeId) -> Option<Tfpg> {
    if !g.is_feedback(f) {
        return None;
    }
    let s = g.pred(f, 0);
    let t = g.succ(f, 0);
    let stop = |k: NodeId| g.is_feedback(k) || g.inputs().contains(&k);
    if stop(s.node) {
        return None;
    }
    let mut cone = BTreeSet::new();
    let mut stack = vec![s.node];
    while let Some(k) = stack.pop() {
        if stop(k) || !cone.insert(k) {
            continue;
        }
        stack.extend(g.node(k).ins.iter().flatten().map(|p| p.node));
    }
    let mut h = g.clone();
    let copy: BTreeMap<NodeId, NodeId> = cone.iter().map(|&k| (k, h.add_node(g.label(k).clone()))).collect();
    for &k in &cone {
        for (p, src) in g.node(k).ins.iter().enumerate() {
            let src = src.expect("dangling");
            let target = Port::new(copy[&k], p);
            if let Some(&c) = copy.get(&src.node) {
                h.connect(Port::new(c, src.port), target);
            } else if src.node == f {
                h.connect(src, target);
            } else {
                let fork = h.add_node(NodeLabel::Fork);
                h.connect(src, Port::new(fork, 0));
                h.connect(Port::new(fork, 0), Port::new(k, p));
                h.connect(Port::new(fork, 1), target);
            }
        }
    }
    h.connect(Port::new(copy[&s.node], s.port), t);
    if h.node(f).outs[0] == Some(t) {
        // f is not read inside its own cone: the loop was open
        h.stub_port(Port::new(f, 0));
    }
    for &c in copy.values() {
        for p in 0..h.node(c).outs.len() {
            if h.node(c).outs[p].is_none() {
                h.stub_port(Port::new(c, p));
            }
        }
    }
    h.normalize_wires();
    debug_assert!(h.validate().is_ok());
    Some(h)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// This many ticks were emitted and the tick limit was reached.
    Productive(usize),
    Unproductive,
    StepLimit,
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub emitted: Vec<Vec<Value>>,
    pub verdict: Verdict,
    pub residual: Tfpg,
    pub trace: Vec<String>,
    pub steps: usize,
    pub unfoldings: usize,
    /// Classification of the last graph that had to be unfolded.
    pub classification: Option<Productivity>,
}

/// Runs a closed circuit: normalize, emit a head value if one is exposed,
/// otherwise unfold the trace once; a freshly unfolded graph that still exposes
/// nothing is unproductive for good.
pub fn run(g: &Tfpg, sig: &Signature, max_ticks: usize, step_budget: usize, trace: bool) -> Result<RunResult, RewriteError> {
    if !g.inputs().is_empty() {
        return Err(RewriteError::NotClosed);
    }
    let engine = Engine::new(sig, Mode::Stream);
    let mut cur = g.clone();
    let mut log = Vec::new();
    let mut res = RunResult {
        emitted: Vec::new(),
        verdict: Verdict::StepLimit,
        residual: Tfpg::empty(),
        trace: Vec::new(),
        steps: 0,
        unfoldings: 0,
        classification: None,
    };
    let mut just_unfolded = false;
    loop {
        let budget = step_budget.saturating_sub(res.steps);
        match engine.normalize_local(&mut cur, budget, trace.then_some(&mut log)) {
            Ok(n) => res.steps += n,
            Err(RewriteError::BudgetExhausted(_)) => {
                res.steps = step_budget;
                res.verdict = Verdict::StepLimit;
                break;
            }
            Err(e) => return Err(e),
        }
        if res.emitted.len() == max_ticks {
            res.verdict = Verdict::Productive(max_ticks);
            break;
        }
        if let Some((vals, next)) = emit_head_values(&cur, sig) {
            if trace {
                let names: Vec<&str> = vals.iter().map(|&v| sig.lattice().symbol(v)).collect();
                log.push(format!("tick {} emit {}", res.emitted.len(), names.join(" ")));
            }
            res.emitted.push(vals);
            cur = next;
            just_unfolded = false;
            continue;
        }
        let class = classify_productivity(&cur, sig, just_unfolded);
        res.classification = Some(class);
        if class == Productivity::Blocked {
            res.verdict = Verdict::Unproductive;
            break;
        }
        if res.steps >= step_budget {
            res.verdict = Verdict::StepLimit;
            break;
        }
        let view = hoist_delays(&cur);
        cur = unfold_trace_delay(&view, sig)?;
        res.steps += 1;
        res.unfoldings += 1;
        if trace {
            log.push(format!("unfold {}", res.unfoldings));
        }
        just_unfolded = true;
    }
    res.residual = cur;
    res.trace = log;
    Ok(res)
}

#[derive(Clone, Debug)]
pub struct PevalResult {
    pub residual: Tfpg,
    pub steps: usize,
    pub unfoldings: usize,
    pub trace: Vec<String>,
}

fn weight(g: &Tfpg) -> (usize, usize) {
    (g.feedback().len(), g.node_count())
}

/// Partial evaluation of a possibly open circuit with abstract boxes. Loops
/// are unrolled one at a time (open loops first, then by node id) and an
/// unrolling is kept only when the canonical result has fewer feedback nodes
/// or fewer nodes. Stops when no unrolling helps or `fuel` unrollings were tried.
pub fn partial_evaluate(
    g: &Tfpg,
    sig: &Signature,
    fuel: Option<usize>,
    step_budget: usize,
    trace: bool,
) -> Result<PevalResult, RewriteError> {
    let engine = Engine::for_graph(sig, g);
    let mut log = Vec::new();
    let mut cur = g.clone();
    let mut steps = engine.normalize_local(&mut cur, step_budget, trace.then_some(&mut log))?;
    let mut fuel = fuel.unwrap_or(2 * g.feedback().len());
    let mut unfoldings = 0;
    'outer: while fuel > 0 && !cur.feedback().is_empty() {
        let fbs: Vec<NodeId> = cur.feedback().iter().copied().collect();
        for f in fbs {
            if fuel == 0 {
                break 'outer;
            }
            let Some(mut next) = unfold_feedback(&cur, f) else { continue };
            fuel -= 1;
            let mut sub = Vec::new();
            steps += engine.normalize_local(&mut next, step_budget.saturating_sub(steps), trace.then_some(&mut sub))?;
            if weight(&next) < weight(&cur) {
                unfoldings += 1;
                if trace {
                    log.push(format!("unfold feedback {f}"));
                    log.extend(sub);
                }
                cur = next;
                continue 'outer;
            }
        }
        break;
    }
    Ok(PevalResult { residual: cur, steps, unfoldings, trace: log })
}
