//! Soft concurrent constraint programming: c-semirings, soft constraint
//! stores with SELL/SELLS entailment, a small-step interpreter, a bounded
//! sequent prover used as an oracle, and a concrete syntax.

pub mod frontend;
pub mod interpreter;
pub mod kernel;
pub mod laws;
pub mod prover;
pub mod semiring;
pub mod store;
