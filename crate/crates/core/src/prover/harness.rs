//! Experiments that use the prover as an oracle: operational barbs
//! against provability, cut admissibility, and the non-provability of
//! constraints from process encodings.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::encode::{encode_constraint, encode_definition, encode_process, program_sequent};
use super::formula::{Formula, Index, Sequent, Signature};
use super::gen::{palette, Vocabulary};
use super::proof::{ProofTree, RuleName};
use super::search::{prove_with, ProverConfig};
use super::validate::{is_cut_free, validate_for};
use crate::interpreter::{InterpError, Interpreter, Program};
use crate::kernel::{Atom, Constraint};
use crate::semiring::CSemiring;
use crate::store::Mode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Agreement {
    Agree,
    Disagree,
    /// The negative side of a split verdict was cut by its bound.
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct AdequacyReport {
    pub barb: bool,
    pub barb_truncated: bool,
    pub provable: bool,
    pub prover_truncated: bool,
    pub agreement: Agreement,
}

impl AdequacyReport {
    pub fn agree(&self) -> bool {
        self.agreement == Agreement::Agree
    }
}

/// Combines an operational and a logical verdict. A positive answer is
/// definitive on either side.
pub fn agreement(
    barb: bool,
    barb_truncated: bool,
    provable: bool,
    prover_truncated: bool,
) -> Agreement {
    match (barb, provable) {
        (true, true) => Agreement::Agree,
        (true, false) if prover_truncated => Agreement::Inconclusive,
        (false, true) if barb_truncated => Agreement::Inconclusive,
        (false, false) if barb_truncated && prover_truncated => Agreement::Inconclusive,
        (false, false) => Agreement::Agree,
        _ => Agreement::Disagree,
    }
}

/// Runs the barb search and the prover on `axioms, definitions, main |-
/// goal * top`.
pub fn adequacy_check(
    program: &Program,
    goal: &Constraint,
    depth: usize,
    max_steps: usize,
) -> Result<AdequacyReport, InterpError> {
    let barb = Interpreter::new(program).barb(goal, max_steps)?;
    let sig = Signature::new(program.semiring);
    let seq = program_sequent(program, goal);
    let outcome = prove_with(&seq, &sig, ProverConfig::new(program.mode, depth));
    if let Some(p) = &outcome.proof {
        debug_assert!(validate_for(p, &seq, &sig, program.mode).is_ok());
    }
    Ok(AdequacyReport {
        barb: barb.holds,
        barb_truncated: barb.truncated,
        provable: outcome.proved(),
        prover_truncated: outcome.truncated,
        agreement: agreement(
            barb.holds,
            barb.truncated,
            outcome.proved(),
            outcome.truncated,
        ),
    })
}

#[derive(Debug, Clone)]
pub enum CutVerdict {
    /// The conclusion has a cut-free proof.
    Eliminated {
        with_cut: ProofTree,
        cut_free: ProofTree,
    },
    /// Both premises are provable but no cut-free proof was found.
    Failed {
        with_cut: ProofTree,
        truncated: bool,
    },
    /// Some premise is not provable within the bound.
    Inconclusive,
}

impl CutVerdict {
    pub fn eliminated(&self) -> bool {
        matches!(self, CutVerdict::Eliminated { .. })
    }
}

/// Depth added to the bound when searching for the cut-free proof.
pub const CUT_EXTRA_DEPTH: usize = 4;

/// `left, right |- goal` by cut on `cut` with premises `left |- cut` and
/// `right, cut |- goal`.
pub fn cut_check(
    left: &[Formula],
    right: &[Formula],
    cut: &Formula,
    goal: &Formula,
    sig: &Signature,
    mode: Mode,
    depth: usize,
) -> CutVerdict {
    let cfg = ProverConfig::new(mode, depth);
    let left_seq = Sequent::new(left.to_vec(), cut.clone());
    let mut right_ctx = right.to_vec();
    right_ctx.push(cut.clone());
    let right_seq = Sequent::new(right_ctx, goal.clone());
    let (Some(lp), Some(rp)) = (
        prove_with(&left_seq, sig, cfg).proof,
        prove_with(&right_seq, sig, cfg).proof,
    ) else {
        return CutVerdict::Inconclusive;
    };
    let mut ctx = left.to_vec();
    ctx.extend_from_slice(right);
    let conclusion = Sequent::new(ctx, goal.clone());
    let with_cut = ProofTree::node(RuleName::Cut, conclusion.clone(), vec![lp, rp]);
    debug_assert!(validate_for(&with_cut, &conclusion, sig, mode).is_ok());
    let outcome = prove_with(
        &conclusion,
        sig,
        ProverConfig::new(mode, depth + CUT_EXTRA_DEPTH),
    );
    match outcome.proof {
        Some(cut_free) => CutVerdict::Eliminated { with_cut, cut_free },
        None => CutVerdict::Failed {
            with_cut,
            truncated: outcome.truncated,
        },
    }
}

/// A random cut instance over two nullary predicates.
#[derive(Debug, Clone)]
pub struct CutInstance {
    pub left: Vec<Formula>,
    pub right: Vec<Formula>,
    pub cut: Formula,
    pub goal: Formula,
}

struct CutGen<'a> {
    sig: &'a Signature,
    levels: Vec<Index>,
}

impl CutGen<'_> {
    fn atom<R: Rng>(&self, rng: &mut R) -> Formula {
        Formula::Atom(Atom::new(
            ["p", "q"].choose(rng).expect("two predicates"),
            vec![],
        ))
    }

    fn level<R: Rng>(&self, rng: &mut R) -> Index {
        self.levels.choose(rng).expect("levels").clone()
    }

    fn formula<R: Rng>(&self, rng: &mut R, size: usize) -> Formula {
        if size <= 1 {
            return match rng.gen_range(0..6) {
                0 => Formula::One,
                1 | 2 => self.atom(rng),
                _ => Formula::bang(self.level(rng), self.atom(rng)),
            };
        }
        match rng.gen_range(0..5) {
            0 | 1 => Formula::tensor(
                self.formula(rng, size / 2),
                self.formula(rng, size - size / 2),
            ),
            2 => Formula::bang(self.level(rng), self.formula(rng, size - 1)),
            3 => Formula::lolli(
                self.formula(rng, size / 2),
                self.formula(rng, size - size / 2),
            ),
            _ => Formula::With(vec![
                self.formula(rng, size / 2),
                self.formula(rng, size - size / 2),
            ]),
        }
    }

    fn above<R: Rng>(&self, rng: &mut R, a: &Index) -> Index {
        let ups: Vec<&Index> = self.levels.iter().filter(|b| self.sig.leq(a, b)).collect();
        (*ups.choose(rng).unwrap_or(&a)).clone()
    }

    fn below<R: Rng>(&self, rng: &mut R, a: &Index) -> Index {
        let downs: Vec<&Index> = self.levels.iter().filter(|b| self.sig.leq(b, a)).collect();
        (*downs.choose(rng).unwrap_or(&a)).clone()
    }

    /// A context that is likely to prove `f`.
    fn strengthen<R: Rng>(&self, rng: &mut R, f: &Formula) -> Vec<Formula> {
        match f {
            Formula::One => Vec::new(),
            Formula::Tensor(a, b) => {
                let mut v = self.strengthen(rng, a);
                v.extend(self.strengthen(rng, b));
                v
            }
            Formula::Bang(i, body) => vec![Formula::bang(self.above(rng, i), (**body).clone())],
            Formula::Atom(_) if rng.gen_bool(0.5) => {
                vec![Formula::bang(self.level(rng), f.clone())]
            }
            _ => vec![f.clone()],
        }
    }

    /// A formula that `f` is likely to prove.
    fn weaken<R: Rng>(&self, rng: &mut R, f: &Formula) -> Formula {
        match f {
            Formula::Bang(i, body) => Formula::bang(self.below(rng, i), self.weaken(rng, body)),
            Formula::Tensor(a, b) => Formula::tensor(self.weaken(rng, a), self.weaken(rng, b)),
            Formula::With(fs) if rng.gen_bool(0.5) => fs.choose(rng).expect("non-empty").clone(),
            _ => f.clone(),
        }
    }

    fn instance<R: Rng>(&self, rng: &mut R) -> CutInstance {
        let size = rng.gen_range(1..=3);
        let cut = self.formula(rng, size);
        let mut left = self.strengthen(rng, &cut);
        if rng.gen_bool(0.3) {
            left.push(Formula::bang(self.level(rng), self.atom(rng)));
        }
        let (right, goal) = match rng.gen_range(0..4) {
            0 => (Vec::new(), self.weaken(rng, &cut)),
            1 => {
                let size = rng.gen_range(1..=2);
                let other = self.formula(rng, size);
                (
                    self.strengthen(rng, &other),
                    Formula::tensor(self.weaken(rng, &cut), other),
                )
            }
            2 => {
                let size = rng.gen_range(1..=2);
                let k = self.formula(rng, size);
                (vec![Formula::lolli(self.weaken(rng, &cut), k.clone())], k)
            }
            _ => {
                // Promotion over the cut formula.
                let other = Formula::bang(self.level(rng), self.atom(rng));
                let target = self.level(rng);
                let goal = Formula::bang(
                    target,
                    Formula::tensor(self.weaken(rng, &cut), self.weaken(rng, &other)),
                );
                (vec![other], goal)
            }
        };
        CutInstance {
            left,
            right,
            cut,
            goal,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct CutSuiteReport {
    pub generated: usize,
    /// Instances whose premises were both provable.
    pub checked: usize,
    pub eliminated: usize,
    pub failures: Vec<String>,
}

/// Generates cut instances until `wanted` have provable premises (or
/// `max_attempts` is reached) and checks each for a cut-free proof.
pub fn cut_suite(
    s: CSemiring,
    mode: Mode,
    wanted: usize,
    max_attempts: usize,
    depth: usize,
    seed: u64,
) -> CutSuiteReport {
    let sig = Signature::new(s);
    let levels = palette(&s).into_iter().map(Index::Level).collect();
    let gen = CutGen { sig: &sig, levels };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = CutSuiteReport::default();
    while report.checked < wanted && report.generated < max_attempts {
        let inst = gen.instance(&mut rng);
        report.generated += 1;
        match cut_check(
            &inst.left,
            &inst.right,
            &inst.cut,
            &inst.goal,
            &sig,
            mode,
            depth,
        ) {
            CutVerdict::Inconclusive => {}
            CutVerdict::Eliminated { with_cut, cut_free } => {
                report.checked += 1;
                let ok = is_cut_free(&cut_free)
                    && validate_for(&cut_free, &with_cut.conclusion, &sig, mode).is_ok()
                    && validate_for(&with_cut, &with_cut.conclusion, &sig, mode).is_ok();
                if ok {
                    report.eliminated += 1;
                } else {
                    report
                        .failures
                        .push(format!("invalid proof for {}", with_cut.conclusion));
                }
            }
            CutVerdict::Failed {
                with_cut,
                truncated,
            } => {
                report.checked += 1;
                report.failures.push(format!(
                    "{} (cut on {}, truncated: {truncated})",
                    with_cut.conclusion, inst.cut
                ));
            }
        }
    }
    report
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct NonProvabilityReport {
    /// Sequents `axioms, constraints, p |- c` and `..., !b p |- c` tried.
    pub linear_instances: usize,
    pub linear_provable: usize,
    pub linear_truncated: usize,
    /// A few provable instances, printed.
    pub linear_examples: Vec<String>,
    /// Pairs `(D, !u f |- c, D |- c)` with both verdicts conclusive.
    pub definition_pairs: usize,
    pub definition_equivalent: usize,
    pub definition_inconclusive: usize,
    pub definition_examples: Vec<String>,
}

impl NonProvabilityReport {
    pub fn holds(&self) -> bool {
        self.linear_provable == 0 && self.definition_equivalent == self.definition_pairs
    }
}

/// Random instances of the two non-provability shapes: a process or call
/// encoding (bare or under `!p`/`!d`) next to axioms and constraints
/// never helps prove a constraint, and a definition encoding can always be
/// dropped.
pub fn nonprovability_suite(
    s: CSemiring,
    mode: Mode,
    samples: usize,
    depth: usize,
    seed: u64,
) -> NonProvabilityReport {
    let sig = Signature::new(s);
    let vocab = Vocabulary::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = ProverConfig::new(mode, depth);
    let mut report = NonProvabilityReport::default();
    for _ in 0..samples {
        let mut delta: Vec<Formula> = Vec::new();
        if rng.gen_bool(0.5) {
            delta.push(super::encode::encode_axiom(&vocab.axiom(&mut rng, &s), &s));
        }
        let store = vocab.store(&mut rng, &s, 2);
        if store != Constraint::One {
            delta.push(encode_constraint(&store));
        }
        let goal = encode_constraint(&vocab.goal(&mut rng, &s, 2));

        let calls = [("r", 1usize)];
        let process = vocab.process(&mut rng, &s, 2, &calls, &[]);
        let p = encode_process(&process);
        let wrapped = match rng.gen_range(0..3) {
            0 => p,
            1 => Formula::bang(Index::P, p),
            _ => Formula::bang(Index::D, p),
        };
        let mut ctx = delta.clone();
        ctx.push(wrapped);
        let seq = Sequent::new(ctx, goal.clone());
        let out = prove_with(&seq, &sig, cfg);
        report.linear_instances += 1;
        if out.proved() {
            report.linear_provable += 1;
            if report.linear_examples.len() < 5 {
                report.linear_examples.push(format!("{process}  ::  {seq}"));
            }
        } else if out.truncated {
            report.linear_truncated += 1;
        }

        let def = encode_definition(&vocab.definition(&mut rng, &s, "r"));
        let mut with_def = delta.clone();
        with_def.push(def);
        let a = prove_with(&Sequent::new(with_def, goal.clone()), &sig, cfg);
        let b = prove_with(&Sequent::new(delta, goal.clone()), &sig, cfg);
        let conclusive = |o: &super::search::ProveOutcome| o.proved() || !o.truncated;
        if conclusive(&a) && conclusive(&b) {
            report.definition_pairs += 1;
            if a.proved() == b.proved() {
                report.definition_equivalent += 1;
            } else if report.definition_examples.len() < 5 {
                report.definition_examples.push(format!(
                    "|- {goal}: with definition {}, without {}",
                    a.proved(),
                    b.proved()
                ));
            }
        } else {
            report.definition_inconclusive += 1;
        }
    }
    report
}
