//! Translation of constraints, processes, definitions and axioms into
//! formulas over the completed signature.

use super::formula::{Formula, Index, Sequent};
use crate::interpreter::Program;
use crate::kernel::{Atom, Axiom, Constraint, Definition, Process, Term};
use crate::semiring::CSemiring;
use crate::store::Store;

/// `[A]_a` is `!a A`; `[A1 * ... * An]_a` is `!a(!a A1 * ... * !a An)`.
pub fn encode_constraint(c: &Constraint) -> Formula {
    match c {
        Constraint::One => Formula::One,
        Constraint::Tensor(a, b) => Formula::tensor(encode_constraint(a), encode_constraint(b)),
        Constraint::Exists(x, body) => Formula::exists(x.clone(), encode_constraint(body)),
        Constraint::Soft(pc, level) => {
            let idx = Index::Level(level.clone());
            let atoms = pc.atoms();
            if let [single] = atoms {
                return Formula::bang(idx, Formula::Atom(single.clone()));
            }
            let parts = atoms
                .iter()
                .map(|a| Formula::bang(idx.clone(), Formula::Atom(a.clone())));
            Formula::bang(idx.clone(), Formula::tensor_all(parts))
        }
    }
}

fn call_atom(name: &str, args: &[Term]) -> Formula {
    Formula::Atom(Atom::new(name, args.to_vec()))
}

pub fn encode_process(p: &Process) -> Formula {
    match p {
        Process::Tell(c) => Formula::bang(Index::P, encode_constraint(c)),
        Process::Sum(branches) => {
            let alts: Vec<Formula> = branches
                .iter()
                .map(|b| Formula::lolli(encode_constraint(&b.guard), encode_process(&b.body)))
                .collect();
            if alts.is_empty() {
                return Formula::bang(Index::P, Formula::One);
            }
            Formula::bang(Index::P, Formula::with_all(alts))
        }
        Process::Par(a, b) => Formula::tensor(encode_process(a), encode_process(b)),
        Process::Local(x, body) => {
            Formula::bang(Index::P, Formula::exists(x.clone(), encode_process(body)))
        }
        Process::Call(name, args) => Formula::bang(Index::D, call_atom(name, args)),
    }
}

pub fn encode_definition(d: &Definition) -> Formula {
    let args: Vec<Term> = d.params.iter().cloned().map(Term::Var).collect();
    let head = Formula::bang(Index::D, call_atom(&d.name, &args));
    Formula::bang(
        Index::U,
        Formula::forall_all(&d.params, Formula::lolli(head, encode_process(&d.body))),
    )
}

/// Axioms are marked with the top level of `s`.
pub fn encode_axiom(a: &Axiom, s: &CSemiring) -> Formula {
    let body = Formula::lolli(
        encode_constraint(&a.premise),
        encode_constraint(&a.conclusion),
    );
    Formula::bang(Index::Level(s.top()), Formula::forall_all(&a.vars, body))
}

/// `axioms, store |- goal`.
pub fn entailment_sequent(
    store: &Store,
    axioms: &[Axiom],
    s: &CSemiring,
    goal: &Constraint,
) -> Sequent {
    let mut ctx: Vec<Formula> = axioms.iter().map(|a| encode_axiom(a, s)).collect();
    if !store.is_empty() {
        ctx.push(encode_constraint(&store.to_constraint()));
    }
    Sequent::new(ctx, encode_constraint(goal))
}

/// `axioms, definitions, main |- goal * top`.
pub fn program_sequent(program: &Program, goal: &Constraint) -> Sequent {
    let mut ctx: Vec<Formula> = program
        .axioms
        .iter()
        .map(|a| encode_axiom(a, &program.semiring))
        .collect();
    ctx.extend(program.defs.values().map(encode_definition));
    ctx.push(encode_process(&program.main));
    Sequent::new(ctx, Formula::tensor(encode_constraint(goal), Formula::Top))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Var;

    #[test]
    fn tell_is_process_marked() {
        let s = CSemiring::fuzzy();
        let c =
            Constraint::soft(vec![Atom::new("c", vec![])], s.parse_value("0.7").unwrap()).unwrap();
        assert_eq!(encode_process(&Process::Tell(c)).to_string(), "!p !0.7 c");
    }

    #[test]
    fn parallel_is_tensor() {
        let p = Process::par(Process::call("q", vec![]), Process::call("r", vec![]));
        assert_eq!(
            encode_process(&p),
            Formula::tensor(
                encode_process(&Process::call("q", vec![])),
                encode_process(&Process::call("r", vec![]))
            )
        );
    }

    #[test]
    fn definition_shape() {
        let s = CSemiring::fuzzy();
        let x = Var::new("X");
        let body = Process::Tell(
            Constraint::soft(
                vec![Atom::new("c", vec![Term::Var(x.clone())])],
                s.parse_value("0.5").unwrap(),
            )
            .unwrap(),
        );
        let d = Definition::new("q", vec![x], body).unwrap();
        assert_eq!(
            encode_definition(&d).to_string(),
            "!u (all X. !d q(X) -o !p !0.5 c(X))"
        );
    }

    #[test]
    fn bundle_repeats_level_inside() {
        let s = CSemiring::fuzzy();
        let c = Constraint::soft(
            vec![Atom::new("c", vec![]), Atom::new("d", vec![])],
            s.parse_value("0.5").unwrap(),
        )
        .unwrap();
        assert_eq!(encode_constraint(&c).to_string(), "!0.5 (!0.5 c * !0.5 d)");
    }
}
