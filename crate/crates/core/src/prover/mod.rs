//! Bounded proof search for the linear logic with subexponentials that
//! underlies soft constraints, the process encoding, and the harnesses
//! that use the prover as an oracle.

pub mod encode;
pub mod formula;
pub mod gen;
pub mod harness;
pub mod proof;
pub mod search;
pub mod validate;

pub use encode::{
    encode_axiom, encode_constraint, encode_definition, encode_process, entailment_sequent,
    program_sequent,
};
pub use formula::{Formula, Index, Sequent, Signature};
pub use harness::{
    adequacy_check, cut_check, cut_suite, nonprovability_suite, AdequacyReport, Agreement,
    CutVerdict,
};
pub use proof::{PromotionWitness, ProofTree, RuleName};
pub use search::{prove, prove_with, ProveOutcome, ProverConfig};
pub use validate::{is_cut_free, validate, validate_for, ValidationError};
