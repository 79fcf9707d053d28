//! Equations checked against the reference stream semantics.

use dcirc::lattice::{Signature, Value};
use dcirc::oracle::Program;
use dcirc::term::{codiag, diag, infer_arity, iter, Term};
use dcirc::tfpg::Tfpg;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{all_waveforms, random_circuit, Shape};

/// Waveform length for exhaustive checks.
pub const WAVE_LEN: usize = 2;
/// Random contexts per axiom schema where exhaustion is infeasible.
pub const RANDOM_CASES: usize = 60;

fn id(n: usize) -> Term {
    Term::Id(n)
}

fn delays(n: usize) -> Term {
    if n == 0 {
        id(0)
    } else {
        Term::tensor_all((0..n).map(|_| Term::Delay))
    }
}

fn seq(a: Term, b: Term) -> Term {
    Term::seq(a, b)
}

fn ten(a: Term, b: Term) -> Term {
    Term::tensor(a, b)
}

/// Checks `lhs = rhs` on every tuple of input waveforms of length `WAVE_LEN`.
/// Returns the number of input tuples tried.
pub fn equal_on_all(sig: &Signature, lhs: &Term, rhs: &Term) -> Result<usize, String> {
    let lat = sig.lattice();
    let show = |t: &Term| t.display(lat).to_string();
    let (a, b) = (infer_arity(lhs, sig).map_err(|e| e.to_string())?, infer_arity(rhs, sig).map_err(|e| e.to_string())?);
    if a != b {
        return Err(format!("arity {a} vs {b}: {} = {}", show(lhs), show(rhs)));
    }
    let (gl, gr) = (Tfpg::from_term(lhs, sig), Tfpg::from_term(rhs, sig));
    let pl = Program::compile(&gl, sig).map_err(|e| e.to_string())?;
    let pr = Program::compile(&gr, sig).map_err(|e| e.to_string())?;
    let ticks = WAVE_LEN + gl.delay_count().max(gr.delay_count()) + 2;
    let bot = lat.bottom();
    let cases = all_waveforms(sig, a.inputs, WAVE_LEN);
    for ins in &cases {
        let feed = |t: usize| ins.iter().map(|w| w.at(t, bot)).collect::<Vec<Value>>();
        let l = pl.run(ticks, feed).map_err(|e| e.to_string())?;
        let r = pr.run(ticks, feed).map_err(|e| e.to_string())?;
        if l != r {
            return Err(format!("{} = {} fails on {ins:?}: {l:?} vs {r:?}", show(lhs), show(rhs)));
        }
    }
    Ok(cases.len())
}

fn all_of(sig: &Signature, pairs: &[(Term, Term)]) -> Result<usize, String> {
    pairs.iter().map(|(l, r)| equal_on_all(sig, l, r)).sum()
}

fn value_tuples(sig: &Signature, m: usize) -> Vec<Vec<Value>> {
    all_waveforms(sig, m, 1).into_iter().map(|ws| ws.into_iter().map(|w| w.0[0]).collect()).collect()
}

fn values_term(vs: &[Value]) -> Term {
    Term::tensor_all(vs.iter().map(|&v| Term::Value(v)))
}

/// (δ^m ⊗ v)·∇_m·k = ((δ^m·k) ⊗ (v·k))·⋎ for every gate k and level tuple v.
pub fn streaming(sig: &Signature) -> Result<usize, String> {
    let mut pairs = Vec::new();
    for g in sig.gates() {
        let m = g.arity();
        let k = Term::Gate(g.name().to_string());
        for vs in value_tuples(sig, m) {
            let v = values_term(&vs);
            let lhs = seq(seq(ten(delays(m), v.clone()), codiag(m)), k.clone());
            let rhs = seq(ten(seq(delays(m), k.clone()), seq(v, k.clone())), Term::Join);
            pairs.push((lhs, rhs));
        }
    }
    all_of(sig, &pairs)
}

fn passive_shape(rng: &mut ChaCha8Rng) -> Shape {
    Shape {
        inputs: rng.gen_range(1..=2),
        outputs: rng.gen_range(1..=2),
        max_gates: 4,
        max_delays: 0,
        feedback: 0,
        values: false,
        joins: true,
    }
}

/// (δ^m ⊗ v)·∇_m·f = ((f·δ^n) ⊗ (v·f))·∇_n for random passive combinational f.
pub fn generalised_streaming(sig: &Signature, seed: u64) -> Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0;
    for _ in 0..RANDOM_CASES {
        let shape = passive_shape(&mut rng);
        let f = random_circuit(&mut rng, sig, shape);
        let (m, n) = (shape.inputs, shape.outputs);
        let vs: Vec<Value> = (0..m).map(|_| sig.lattice().values().nth(rng.gen_range(0..sig.lattice().size())).unwrap()).collect();
        let v = values_term(&vs);
        let lhs = seq(seq(ten(delays(m), v.clone()), codiag(m)), f.clone());
        let rhs = seq(ten(seq(f.clone(), delays(n)), seq(v, f)), codiag(n));
        total += equal_on_all(sig, &lhs, &rhs)?;
    }
    Ok(total)
}

fn structural() -> Vec<(Term, usize, usize)> {
    vec![
        (Term::Fork, 1, 2),
        (Term::Join, 2, 1),
        (Term::Stub, 1, 0),
        (Term::Sym(1, 1), 2, 2),
        (Term::Id(1), 1, 1),
    ]
}

/// δ^m·k = k·δ^n for every gate and structural morphism.
pub fn timelessness(sig: &Signature) -> Result<usize, String> {
    let mut atoms = structural();
    atoms.extend(sig.gates().iter().map(|g| (Term::Gate(g.name().to_string()), g.arity(), 1)));
    let pairs: Vec<(Term, Term)> = atoms
        .into_iter()
        .map(|(k, m, n)| (seq(delays(m), k.clone()), seq(k, delays(n))))
        .collect();
    all_of(sig, &pairs)
}

/// ⊥·δ = ⊥.
pub fn disconnect(sig: &Signature) -> Result<usize, String> {
    let bot = Term::Value(sig.lattice().bottom());
    equal_on_all(sig, &seq(bot.clone(), Term::Delay), &bot)
}

/// δ·w = w.
pub fn unobservable_delay(sig: &Signature) -> Result<usize, String> {
    equal_on_all(sig, &seq(Term::Delay, Term::Stub), &Term::Stub)
}

/// (⋎, ⊥) commutative monoid, (⋏, w) cocommutative comonoid, and their
/// interaction laws.
pub fn bialgebra(sig: &Signature) -> Result<usize, String> {
    let bot = || Term::Value(sig.lattice().bottom());
    let (fork, join, stub) = (Term::Fork, Term::Join, Term::Stub);
    let pairs = vec![
        (seq(ten(join.clone(), id(1)), join.clone()), seq(ten(id(1), join.clone()), join.clone())),
        (seq(Term::Sym(1, 1), join.clone()), join.clone()),
        (seq(ten(bot(), id(1)), join.clone()), id(1)),
        (seq(fork.clone(), ten(fork.clone(), id(1))), seq(fork.clone(), ten(id(1), fork.clone()))),
        (seq(fork.clone(), Term::Sym(1, 1)), fork.clone()),
        (seq(fork.clone(), ten(stub.clone(), id(1))), id(1)),
        (
            seq(join.clone(), fork.clone()),
            Term::seq_all([
                ten(fork.clone(), fork.clone()),
                Term::tensor_all([id(1), Term::Sym(1, 1), id(1)]),
                ten(join.clone(), join.clone()),
            ]),
        ),
        (seq(bot(), fork), ten(bot(), bot())),
        (seq(join, stub.clone()), ten(stub.clone(), stub.clone())),
        (seq(bot(), stub), id(0)),
    ];
    all_of(sig, &pairs)
}

/// ⋏·⋎ = 1.
pub fn fork_section(sig: &Signature) -> Result<usize, String> {
    equal_on_all(sig, &seq(Term::Fork, Term::Join), &id(1))
}

/// Δ_m·f²·(n ⊗ (⋎·⋏) ⊗ n) = Δ_m·f² for random f : m → n+1, the second copy
/// presenting its extra output first.
pub fn pseudo_iso(sig: &Signature, seed: u64) -> Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0;
    for _ in 0..RANDOM_CASES {
        let m = rng.gen_range(0..=2);
        let n = rng.gen_range(0..=1);
        let shape = Shape { inputs: m, outputs: n + 1, max_gates: 4, max_delays: 1, feedback: 0, values: true, joins: true };
        let f = random_circuit(&mut rng, sig, shape);
        let both = seq(diag(m), ten(f.clone(), seq(f, Term::Sym(n, 1))));
        let lhs = seq(both.clone(), Term::tensor_all([id(n), seq(Term::Join, Term::Fork), id(n)]));
        total += equal_on_all(sig, &lhs, &both)?;
    }
    Ok(total)
}

fn loop_body(rng: &mut ChaCha8Rng, sig: &Signature, inputs: usize, outputs: usize) -> Term {
    let shape = Shape { inputs, outputs, max_gates: 4, max_delays: 1, feedback: 0, values: true, joins: true };
    random_circuit(rng, sig, shape)
}

/// iter((g ⊗ n)·f) = g·iter(f).
pub fn naturality(sig: &Signature, seed: u64) -> Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0;
    for _ in 0..RANDOM_CASES {
        let (k, m, n) = (rng.gen_range(0..=1), rng.gen_range(0..=1), 1);
        let g = loop_body(&mut rng, sig, k, m);
        let f = loop_body(&mut rng, sig, m + n, n);
        let lhs = iter(n, seq(ten(g.clone(), id(n)), f.clone()), sig).map_err(|e| e.to_string())?;
        let rhs = seq(g, iter(n, f, sig).map_err(|e| e.to_string())?);
        total += equal_on_all(sig, &lhs, &rhs)?;
    }
    Ok(total)
}

/// iter(f) = ⟨m, iter(f)⟩·f.
pub fn iteration(sig: &Signature, seed: u64) -> Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0;
    for _ in 0..RANDOM_CASES {
        let (m, n) = (rng.gen_range(0..=2), rng.gen_range(1..=2));
        let f = loop_body(&mut rng, sig, m + n, n);
        let it = iter(n, f.clone(), sig).map_err(|e| e.to_string())?;
        let rhs = Term::seq_all([diag(m), ten(id(m), it.clone()), f]);
        total += equal_on_all(sig, &it, &rhs)?;
    }
    Ok(total)
}

/// iterⁿ(iterⁿ(f)) = iterⁿ((m ⊗ Δ_n)·f) for f : m+n+n → n.
pub fn diagonal(sig: &Signature, seed: u64) -> Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0;
    for _ in 0..RANDOM_CASES {
        let (m, n) = (rng.gen_range(0..=1), 1);
        let f = loop_body(&mut rng, sig, m + 2 * n, n);
        let inner = iter(n, f.clone(), sig).map_err(|e| e.to_string())?;
        let lhs = iter(n, inner, sig).map_err(|e| e.to_string())?;
        let rhs = iter(n, seq(ten(id(m), diag(n)), f), sig).map_err(|e| e.to_string())?;
        total += equal_on_all(sig, &lhs, &rhs)?;
    }
    Ok(total)
}

/// Every schema in a fixed order: name, number of random contexts (`None`
/// when the schema is checked exhaustively) and the number of input tuples tried.
pub fn all(sig: &Signature, seed: u64) -> Vec<(&'static str, Option<usize>, Result<usize, String>)> {
    let r = Some(RANDOM_CASES);
    vec![
        ("streaming", None, streaming(sig)),
        ("generalised streaming", r, generalised_streaming(sig, seed)),
        ("timelessness", None, timelessness(sig)),
        ("disconnect", None, disconnect(sig)),
        ("unobservable delay", None, unobservable_delay(sig)),
        ("bialgebra", None, bialgebra(sig)),
        ("fork section / join retraction", None, fork_section(sig)),
        ("pseudo-isomorphism", r, pseudo_iso(sig, seed + 1)),
        ("iterator naturality", r, naturality(sig, seed + 2)),
        ("iterator iteration", r, iteration(sig, seed + 3)),
        ("iterator diagonal", r, diagonal(sig, seed + 4)),
    ]
}
