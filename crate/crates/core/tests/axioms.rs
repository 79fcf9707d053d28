mod common;

use common::axioms;

const SEED: u64 = 0x5eed;

fn ok(name: &str, r: Result<usize, String>) {
    match r {
        Ok(n) => assert!(n > 0, "{name}: no cases"),
        Err(e) => panic!("{name}: {e}"),
    }
}

#[test]
fn streaming() {
    ok("streaming", axioms::streaming(&common::bool4()));
}

#[test]
fn generalised_streaming() {
    ok("generalised streaming", axioms::generalised_streaming(&common::bool4(), SEED));
}

#[test]
fn timelessness() {
    ok("timelessness", axioms::timelessness(&common::bool4()));
}

#[test]
fn disconnect_and_unobservable_delay() {
    let sig = common::bool4();
    ok("disconnect", axioms::disconnect(&sig));
    ok("unobservable delay", axioms::unobservable_delay(&sig));
}

#[test]
fn bialgebra() {
    ok("bialgebra", axioms::bialgebra(&common::bool4()));
    ok("fork section", axioms::fork_section(&common::bool4()));
}

#[test]
fn pseudo_isomorphism() {
    ok("pseudo-iso", axioms::pseudo_iso(&common::bool4(), SEED));
}

#[test]
fn iterator_equations() {
    let sig = common::bool4();
    ok("naturality", axioms::naturality(&sig, SEED));
    ok("iteration", axioms::iteration(&sig, SEED));
    ok("diagonal", axioms::diagonal(&sig, SEED));
}

#[test]
fn join_is_not_a_section() {
    // the converse of the retraction law fails
    let sig = common::bool4();
    let lhs = dcirc::term::parse("join ; fork", &sig).unwrap();
    let rhs = dcirc::term::parse("id 2", &sig).unwrap();
    assert!(axioms::equal_on_all(&sig, &lhs, &rhs).is_err());
}

#[test]
fn mos6_breaks_streaming() {
    // n(⊥,⊥) = ⊤ in the literal transistor table
    assert!(axioms::streaming(&common::mos6()).is_err());
}
