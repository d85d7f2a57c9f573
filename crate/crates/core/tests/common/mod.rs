//! Helpers shared by the integration test targets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sccp::prover::gen::Vocabulary;
use sccp::prover::{entailment_sequent, prove_with, validate_for, ProverConfig, Signature};
use sccp::semiring::CSemiring;
use sccp::store::{EntailConfig, Mode, Store};

/// Prover depth for the store/prover differential.
pub const DIFFERENTIAL_DEPTH: usize = 6;

#[derive(Default, Debug)]
pub struct Tally {
    pub samples: usize,
    pub compared: usize,
    pub truncated: usize,
    pub agree_true: usize,
    pub disagreements: Vec<String>,
}

impl Tally {
    pub fn absorb(&mut self, other: Tally) {
        self.samples += other.samples;
        self.compared += other.compared;
        self.truncated += other.truncated;
        self.agree_true += other.agree_true;
        self.disagreements.extend(other.disagreements);
    }
}

/// Random stores of at most 4 entries, goals of at most 3 atoms with at
/// most one existential, and at most one axiom; compares `Store::entails`
/// with proof search on the encoded sequent.
pub fn differential(s: CSemiring, mode: Mode, samples: usize, seed: u64) -> Tally {
    let vocab = Vocabulary::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sig = Signature::new(s);
    let mut tally = Tally {
        samples,
        ..Tally::default()
    };
    for _ in 0..samples {
        let told = vocab.store(&mut rng, &s, 4);
        let goal = vocab.goal(&mut rng, &s, 3);
        let axioms = if rng.gen_bool(0.4) {
            vec![vocab.axiom(&mut rng, &s)]
        } else {
            Vec::new()
        };
        let store = Store::new().add(&told, &s).unwrap();
        let cfg = EntailConfig::new(s, mode).with_axioms(axioms.clone());
        let verdict = store.entails(&cfg, &goal).unwrap();
        let seq = entailment_sequent(&store, &axioms, &s, &goal);
        let out = prove_with(&seq, &sig, ProverConfig::new(mode, DIFFERENTIAL_DEPTH));
        if let Some(p) = &out.proof {
            if let Err(e) = validate_for(p, &seq, &sig, mode) {
                tally
                    .disagreements
                    .push(format!("invalid proof of {seq}: {e}"));
            }
        }
        if !out.proved() && out.truncated {
            tally.truncated += 1;
            continue;
        }
        tally.compared += 1;
        if out.proved() != verdict {
            let ax: Vec<String> = axioms.iter().map(ToString::to_string).collect();
            tally.disagreements.push(format!(
                "store {told} axioms {ax:?} goal {goal}: store says {verdict}, prover says {}",
                out.proved()
            ));
        } else if verdict {
            tally.agree_true += 1;
        }
    }
    tally
}
