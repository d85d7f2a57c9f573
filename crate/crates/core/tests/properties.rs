use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sccp::frontend::{parse_constraint, parse_formula, parse_program, print_program};
use sccp::interpreter::Program;
use sccp::kernel::{
    single, Atom, Branch, Constraint, Definition, FreeVars, Process, Substitute, Term, Var,
};
use sccp::prover::gen::{palette, Vocabulary};
use sccp::prover::{
    encode_constraint, encode_process, entailment_sequent, prove_with, validate, Formula, Index,
    ProverConfig, Sequent, Signature,
};
use sccp::semiring::CSemiring;
use sccp::store::{EntailConfig, Mode, Store};

fn semiring() -> impl Strategy<Value = CSemiring> {
    prop_oneof![
        Just(CSemiring::crisp()),
        Just(CSemiring::fuzzy()),
        Just(CSemiring::probabilistic()),
        Just(CSemiring::weighted()),
    ]
}

fn term() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        prop::sample::select(vec!["X", "Y", "Z"]).prop_map(Term::var),
        prop::sample::select(vec!["a", "b"]).prop_map(Term::constant),
    ];
    leaf.prop_recursive(2, 4, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|t| Term::fun("f", vec![t])),
            (inner.clone(), inner).prop_map(|(s, t)| Term::fun("g", vec![s, t])),
        ]
    })
}

/// `c/1`, `d/2`, `e/0` and equality.
fn atom() -> impl Strategy<Value = Atom> {
    prop_oneof![
        term().prop_map(|t| Atom::new("c", vec![t])),
        (term(), term()).prop_map(|(s, t)| Atom::new("d", vec![s, t])),
        Just(Atom::new("e", vec![])),
        (term(), term()).prop_map(|(s, t)| Atom::eq(s, t)),
    ]
}

fn soft(s: CSemiring) -> impl Strategy<Value = Constraint> {
    (
        prop::collection::vec(atom(), 1..4),
        prop::sample::select(palette(&s)),
    )
        .prop_map(move |(atoms, level)| {
            let level = if atoms.iter().any(Atom::is_eq) {
                s.top()
            } else {
                level
            };
            Constraint::soft(atoms, level).unwrap()
        })
}

fn constraint(s: CSemiring) -> impl Strategy<Value = Constraint> {
    let leaf = prop_oneof![1 => Just(Constraint::One), 4 => soft(s)];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Constraint::tensor(a, b)),
            (prop::sample::select(vec!["X", "W"]), inner)
                .prop_map(|(x, c)| Constraint::exists(Var::new(x), c)),
        ]
    })
}

fn process(s: CSemiring) -> impl Strategy<Value = Process> {
    let leaf = prop_oneof![
        3 => constraint(s).prop_map(Process::Tell),
        1 => term().prop_map(|t| Process::call("p", vec![t])),
        1 => Just(Process::Sum(Vec::new())),
    ];
    leaf.prop_recursive(3, 16, 3, move |inner| {
        prop_oneof![
            prop::collection::vec((constraint(s), inner.clone()), 1..3).prop_map(
                |bs| Process::Sum(
                    bs.into_iter()
                        .map(|(guard, body)| Branch { guard, body })
                        .collect()
                )
            ),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Process::par(a, b)),
            (prop::sample::select(vec!["X", "V"]), inner)
                .prop_map(|(x, p)| Process::local(Var::new(x), p)),
        ]
    })
}

fn program() -> impl Strategy<Value = Program> {
    (semiring(), prop::bool::ANY).prop_flat_map(|(s, sells)| {
        let mode = if sells { Mode::Sells } else { Mode::Sell };
        let body = process(s).prop_filter("closed definition body", |p| {
            p.free_vars().iter().all(|v| v.name() == "X")
        });
        (body, process(s)).prop_map(move |(body, main)| {
            let def = Definition::new("p", vec![Var::new("X")], body).unwrap();
            Program::new(s, mode, Vec::new(), vec![def], main).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn printed_programs_parse_back(p in program()) {
        let text = print_program(&p);
        let back = parse_program(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(back, p);
    }

    #[test]
    fn printed_constraints_parse_back((s, c) in semiring().prop_flat_map(|s| (Just(s), constraint(s)))) {
        prop_assert_eq!(parse_constraint(&c.to_string(), &s).unwrap(), c);
    }

    #[test]
    fn printed_encodings_parse_back((s, p) in semiring().prop_flat_map(|s| (Just(s), process(s)))) {
        let f = encode_process(&p);
        prop_assert_eq!(parse_formula(&f.to_string(), &s).unwrap(), f);
    }

    #[test]
    fn encoding_commutes_with_substitution(c in constraint(CSemiring::fuzzy()), t in term()) {
        let sub = single(&Var::new("Y"), t);
        prop_assert_eq!(encode_constraint(&c.substitute(&sub)), encode_constraint(&c).substitute(&sub));
    }

    #[test]
    fn substitution_replaces_exactly_the_free_occurrences(c in constraint(CSemiring::fuzzy()), t in term()) {
        let y = Var::new("Y");
        let out = c.substitute(&single(&y, t.clone()));
        let mut expected = c.free_vars();
        if expected.remove(&y) {
            expected.extend(t.free_vars());
        }
        prop_assert_eq!(out.free_vars(), expected);
        let fresh = Var::new("Unused");
        prop_assert_eq!(c.substitute(&single(&fresh, t)), c);
    }
}

fn instance(seed: u64, s: &CSemiring) -> (Constraint, Constraint) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab = Vocabulary::default();
    (vocab.store(&mut rng, s, 3), vocab.goal(&mut rng, s, 3))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn telling_twice_changes_nothing(seed in any::<u64>(), s in semiring(), sells in prop::bool::ANY) {
        let (told, goal) = instance(seed, &s);
        let mode = if sells { Mode::Sells } else { Mode::Sell };
        let cfg = EntailConfig::new(s, mode);
        let once = Store::new().add(&told, &s).unwrap();
        let twice = once.add(&told, &s).unwrap();
        prop_assert_eq!(once.entails(&cfg, &goal).unwrap(), twice.entails(&cfg, &goal).unwrap());
        prop_assert_eq!(once.entails(&cfg, &told).unwrap(), true);
    }

    #[test]
    fn modes_coincide_on_idempotent_semirings(seed in any::<u64>(), crisp in prop::bool::ANY) {
        let s = if crisp { CSemiring::crisp() } else { CSemiring::fuzzy() };
        let (told, goal) = instance(seed, &s);
        let store = Store::new().add(&told, &s).unwrap();
        let seq = entailment_sequent(&store, &[], &s, &goal);
        let sig = Signature::new(s);
        let sell = prove_with(&seq, &sig, ProverConfig::new(Mode::Sell, 5));
        let sells = prove_with(&seq, &sig, ProverConfig::new(Mode::Sells, 5));
        prop_assume!(!sell.truncated && !sells.truncated);
        prop_assert_eq!(sell.proved(), sells.proved());
    }

    #[test]
    fn sells_proofs_are_sell_proofs(seed in any::<u64>(), weighted in prop::bool::ANY) {
        let s = if weighted { CSemiring::weighted() } else { CSemiring::probabilistic() };
        let (told, goal) = instance(seed, &s);
        let store = Store::new().add(&told, &s).unwrap();
        let seq = entailment_sequent(&store, &[], &s, &goal);
        let sig = Signature::new(s);
        let out = prove_with(&seq, &sig, ProverConfig::new(Mode::Sells, 5));
        if let Some(proof) = out.proof {
            prop_assert!(validate(&proof, &sig, Mode::Sells).is_ok());
            prop_assert!(validate(&proof, &sig, Mode::Sell).is_ok());
        }
    }

    #[test]
    fn provability_is_preserved_downwards(seed in any::<u64>(), s in semiring(), sells in prop::bool::ANY) {
        let mode = if sells { Mode::Sells } else { Mode::Sell };
        let (told, goal) = instance(seed, &s);
        let Some((pc, _)) = goal.soft_items().first().map(|(pc, a)| ((*pc).clone(), (*a).clone())) else {
            return Ok(());
        };
        let body = Formula::tensor_all(pc.atoms().iter().cloned().map(Formula::Atom));
        let store = Store::new().add(&told, &s).unwrap();
        let ctx = entailment_sequent(&store, &[], &s, &Constraint::One).context;
        let sig = Signature::new(s);
        let provable_at = |a: &sccp::semiring::SemiringValue| {
            let seq = Sequent::new(ctx.clone(), Formula::bang(Index::Level(a.clone()), body.clone()));
            prove_with(&seq, &sig, ProverConfig::new(mode, 5))
        };
        for a in palette(&s) {
            if !provable_at(&a).proved() {
                continue;
            }
            for b in palette(&s).iter().filter(|b| s.leq(b, &a).unwrap()) {
                let below = provable_at(b);
                prop_assert!(below.proved() || below.truncated, "provable at {} but not at {}", a, b);
            }
        }
    }
}
