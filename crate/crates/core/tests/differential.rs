#[allow(dead_code)]
mod common;

use sccp::kernel::Constraint;
use sccp::prover::{entailment_sequent, prove_with, ProverConfig, Signature};
use sccp::semiring::CSemiring;
use sccp::store::{Mode, Store};

#[test]
fn store_matches_prover_on_random_instances() {
    for s in [
        CSemiring::fuzzy(),
        CSemiring::probabilistic(),
        CSemiring::weighted(),
        CSemiring::crisp(),
    ] {
        for mode in [Mode::Sell, Mode::Sells] {
            let t = common::differential(s, mode, 60, 11);
            assert!(
                t.disagreements.is_empty(),
                "{s} {mode}: {:#?}",
                t.disagreements
            );
            assert!(t.compared >= 40, "{s} {mode}: {t:?}");
        }
    }
}

#[test]
fn empty_goal_is_always_entailed() {
    let s = CSemiring::fuzzy();
    let sig = Signature::new(s);
    let seq = entailment_sequent(&Store::new(), &[], &s, &Constraint::One);
    assert!(prove_with(&seq, &sig, ProverConfig::new(Mode::Sells, 0)).proved());
}
