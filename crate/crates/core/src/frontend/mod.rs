//! Concrete syntax for programs, constraints, formulas and sequents.
//!
//! ```text
//! semiring fuzzy;
//! mode sells;
//! axiom forall X. [c(X)]@0.9 -o [d(X)]@0.8;
//! def p(X) = ask [c(X)]@0.3 then p(X);
//! main = tell [c(a)]@0.7 || new Y in tell [Y = a]@1;
//! ```
//!
//! Levels go through the declared semiring's value parser, so the header
//! must precede every other item. `%` starts a line comment.

mod lexer;
mod parser;

use std::fmt;

use thiserror::Error;

use crate::interpreter::{InterpError, Program};
use crate::kernel::{Constraint, KernelError};
use crate::prover::{Formula, Sequent};
use crate::semiring::CSemiring;

pub use lexer::{tokenize, Tok, Token};

/// 1-based line and column of a token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ErrorKind {
    #[error("unexpected character `{0}`")]
    UnexpectedChar(char),
    #[error("expected {expected}, found {found}")]
    Expected { expected: String, found: String },
    #[error("`{0}` is a reserved word")]
    Reserved(String),
    #[error("{0}")]
    Level(String),
    #[error("{0}")]
    UnknownSemiring(String),
    #[error("{0}")]
    UnknownMode(String),
    #[error("semiring and mode must be declared before axioms, definitions and main")]
    LateHeader,
    #[error("soft constraints cannot be nested")]
    NestedSoft,
    #[error("equality atoms must carry the top level, found {0}")]
    EqBelowTop(String),
    #[error("equality takes two arguments, found {0}")]
    EqArity(usize),
    #[error("predicate {name} used with {found} arguments, earlier with {first}")]
    ArityClash {
        name: String,
        first: usize,
        found: usize,
    },
    #[error("procedure {0} is defined twice")]
    DuplicateDefinition(String),
    #[error("main is declared twice")]
    DuplicateMain,
    #[error("program has no main process")]
    MissingMain,
    #[error("call to undefined procedure {0}")]
    UnknownProcedure(String),
    #[error("procedure {name} expects {expected} arguments, got {found}")]
    CallArity {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("{0} is both a procedure and a predicate")]
    NameClash(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Program(#[from] InterpError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{span}: {kind}")]
pub struct ParseError {
    pub span: Span,
    pub kind: ErrorKind,
}

impl ParseError {
    pub fn new(span: Span, kind: ErrorKind) -> Self {
        ParseError { span, kind }
    }
}

pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    parser::Parser::new(text, CSemiring::fuzzy())?.program()
}

/// A constraint whose levels belong to `s`.
pub fn parse_constraint(text: &str, s: &CSemiring) -> Result<Constraint, ParseError> {
    let mut p = parser::Parser::new(text, *s)?;
    let c = p.constraint()?;
    p.finish()?;
    Ok(c)
}

pub fn parse_formula(text: &str, s: &CSemiring) -> Result<Formula, ParseError> {
    let mut p = parser::Parser::new(text, *s)?;
    let f = p.formula()?;
    p.finish()?;
    Ok(f)
}

/// `F1, ..., Fn |- G`, optionally terminated by `;`.
pub fn parse_sequent(text: &str, s: &CSemiring) -> Result<Sequent, ParseError> {
    parser::Parser::new(text, *s)?.sequent()
}

/// Source text that parses back to `program`.
pub fn print_program(program: &Program) -> String {
    let mut out = format!(
        "semiring {};\nmode {};\n",
        program.semiring,
        program.mode.name()
    );
    for a in &program.axioms {
        out.push_str(&format!("{a};\n"));
    }
    for d in program.defs.values() {
        out.push_str(&format!("{d};\n"));
    }
    out.push_str(&format!("main = {};\n", program.main));
    out
}
