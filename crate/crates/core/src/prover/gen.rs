//! Random small constraints, stores, axioms and processes for the
//! harnesses.

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::kernel::{Atom, Axiom, Constraint, Definition, Process, Term, Var};
use crate::semiring::{CSemiring, Cost, SemiringKind, SemiringValue};

/// The levels instances draw from.
pub fn palette(s: &CSemiring) -> Vec<SemiringValue> {
    let ratio = |n: i64, d: i64| BigRational::new(BigInt::from(n), BigInt::from(d));
    match s.kind() {
        SemiringKind::Crisp => vec![SemiringValue::Crisp(false), SemiringValue::Crisp(true)],
        SemiringKind::Fuzzy | SemiringKind::Probabilistic => {
            [(0, 1), (1, 10), (1, 5), (1, 2), (7, 10), (1, 1)]
                .into_iter()
                .map(|(n, d)| s.from_rational(ratio(n, d)).expect("in range"))
                .collect()
        }
        SemiringKind::Weighted => {
            let mut v = vec![SemiringValue::Weighted(Cost::NegInf)];
            v.extend(
                [-9, -7, -2, -1, 0]
                    .into_iter()
                    .map(|n| s.from_rational(ratio(n, 1)).expect("in range")),
            );
            v
        }
    }
}

pub fn level<R: Rng>(rng: &mut R, s: &CSemiring) -> SemiringValue {
    palette(s).choose(rng).expect("non-empty palette").clone()
}

/// Vocabulary of generated atoms: unary predicates over a few constants.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    pub preds: Vec<&'static str>,
    pub consts: Vec<&'static str>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Vocabulary {
            preds: vec!["c", "d"],
            consts: vec!["a", "b"],
        }
    }
}

impl Vocabulary {
    pub fn atom<R: Rng>(&self, rng: &mut R, vars: &[Var]) -> Atom {
        let pred = self.preds.choose(rng).expect("predicates");
        let arg = if !vars.is_empty() && rng.gen_bool(0.5) {
            Term::Var(vars.choose(rng).expect("vars").clone())
        } else {
            Term::constant(self.consts.choose(rng).expect("constants"))
        };
        Atom::new(pred, vec![arg])
    }

    /// A soft item with up to `max_atoms` atoms.
    pub fn soft<R: Rng>(
        &self,
        rng: &mut R,
        s: &CSemiring,
        max_atoms: usize,
        vars: &[Var],
    ) -> Constraint {
        let n = rng.gen_range(1..=max_atoms.max(1));
        let atoms = (0..n).map(|_| self.atom(rng, vars)).collect();
        Constraint::soft(atoms, level(rng, s)).expect("non-empty")
    }

    /// A store of up to `max_entries` soft items without quantifiers.
    pub fn store<R: Rng>(&self, rng: &mut R, s: &CSemiring, max_entries: usize) -> Constraint {
        let n = rng.gen_range(0..=max_entries);
        Constraint::tensor_all((0..n).map(|_| self.soft(rng, s, 2, &[])))
    }

    /// A goal with at most `max_atoms` atoms in total and at most one
    /// existential.
    pub fn goal<R: Rng>(&self, rng: &mut R, s: &CSemiring, max_atoms: usize) -> Constraint {
        let x = Var::new("X");
        let quantified = rng.gen_bool(0.3);
        let vars = if quantified {
            vec![x.clone()]
        } else {
            Vec::new()
        };
        let mut left = rng.gen_range(1..=max_atoms.max(1));
        let mut items = Vec::new();
        while left > 0 {
            let k = rng.gen_range(1..=left);
            left -= k;
            let atoms = (0..k).map(|_| self.atom(rng, &vars)).collect();
            items.push(Constraint::soft(atoms, level(rng, s)).expect("non-empty"));
        }
        let body = Constraint::tensor_all(items);
        if quantified && body.atoms().any(|a| a.args.contains(&Term::Var(x.clone()))) {
            Constraint::exists(x, body)
        } else {
            body
        }
    }

    /// `forall X. [p(X)]@a -o [q(X)]@b` with `p` and `q` distinct.
    pub fn axiom<R: Rng>(&self, rng: &mut R, s: &CSemiring) -> Axiom {
        let x = Var::new("X");
        let mut preds = self.preds.clone();
        preds.shuffle(rng);
        let premise = Atom::new(preds[0], vec![Term::Var(x.clone())]);
        let conclusion = Atom::new(preds[1 % preds.len()], vec![Term::Var(x.clone())]);
        Axiom::new(
            vec![x],
            Constraint::soft(vec![premise], level(rng, s)).expect("non-empty"),
            Constraint::soft(vec![conclusion], level(rng, s)).expect("non-empty"),
        )
        .expect("closed, range-restricted axiom")
    }

    /// A process of nesting depth at most `depth`; `calls` lists the
    /// procedure names (with arity) it may invoke.
    pub fn process<R: Rng>(
        &self,
        rng: &mut R,
        s: &CSemiring,
        depth: usize,
        calls: &[(&str, usize)],
        vars: &[Var],
    ) -> Process {
        let choice = if depth == 0 {
            rng.gen_range(0..2)
        } else {
            rng.gen_range(0..6)
        };
        match choice {
            0 => Process::Tell(self.soft(rng, s, 2, vars)),
            1 if !calls.is_empty() => {
                let (name, arity) = calls.choose(rng).expect("calls");
                let args = (0..*arity).map(|_| self.term(rng, vars)).collect();
                Process::call(name, args)
            }
            1 => Process::Tell(self.soft(rng, s, 1, vars)),
            2 | 3 => {
                let n = rng.gen_range(1..=2);
                Process::Sum(
                    (0..n)
                        .map(|_| crate::kernel::Branch {
                            guard: self.soft(rng, s, 2, vars),
                            body: self.process(rng, s, depth - 1, calls, vars),
                        })
                        .collect(),
                )
            }
            4 => Process::par(
                self.process(rng, s, depth - 1, calls, vars),
                self.process(rng, s, depth - 1, calls, vars),
            ),
            _ => {
                let y = Var::new(&format!("Y{depth}"));
                let mut inner = vars.to_vec();
                inner.push(y.clone());
                Process::local(y, self.process(rng, s, depth - 1, calls, &inner))
            }
        }
    }

    fn term<R: Rng>(&self, rng: &mut R, vars: &[Var]) -> Term {
        if !vars.is_empty() && rng.gen_bool(0.5) {
            Term::Var(vars.choose(rng).expect("vars").clone())
        } else {
            Term::constant(self.consts.choose(rng).expect("constants"))
        }
    }

    /// `name(X) = P` for a random body over `X`.
    pub fn definition<R: Rng>(&self, rng: &mut R, s: &CSemiring, name: &str) -> Definition {
        let x = Var::new("X");
        let body = self.process(rng, s, 1, &[], std::slice::from_ref(&x));
        Definition::new(name, vec![x], body).expect("closed body")
    }
}
