//! Node-by-node proof checker. Shares nothing with the search beyond the
//! formula datatypes and the signature arithmetic.

use thiserror::Error;

use super::formula::{Formula, Sequent, Signature};
use super::proof::{ProofTree, RuleName};
use crate::kernel::{single, Substitute, Term};
use crate::store::Mode;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid {rule} step concluding `{conclusion}`: {reason}")]
pub struct ValidationError {
    pub rule: String,
    pub conclusion: String,
    pub reason: String,
}

fn sorted(v: &[Formula]) -> Vec<Formula> {
    let mut v = v.to_vec();
    v.sort();
    v
}

fn plus(a: &[Formula], b: &[Formula]) -> Vec<Formula> {
    let mut v = a.to_vec();
    v.extend_from_slice(b);
    v.sort();
    v
}

/// `a - b` as multisets, `None` unless `b` is contained in `a`.
fn minus(a: &[Formula], b: &[Formula]) -> Option<Vec<Formula>> {
    let mut rest = sorted(a);
    for f in b {
        let pos = rest.iter().position(|g| g == f)?;
        rest.remove(pos);
    }
    Some(rest)
}

fn same(a: &[Formula], b: &[Formula]) -> bool {
    sorted(a) == sorted(b)
}

struct Checker<'a> {
    sig: &'a Signature,
    mode: Mode,
}

type Check = Result<(), String>;

fn ensure(cond: bool, reason: &str) -> Check {
    if cond {
        Ok(())
    } else {
        Err(reason.to_string())
    }
}

impl Checker<'_> {
    fn node(&self, t: &ProofTree) -> Result<(), ValidationError> {
        self.rule(t).map_err(|reason| ValidationError {
            rule: t.rule.to_string(),
            conclusion: t.conclusion.to_string(),
            reason,
        })?;
        t.premises.iter().try_for_each(|p| self.node(p))
    }

    fn arity(t: &ProofTree, n: usize) -> Check {
        ensure(
            t.premises.len() == n,
            &format!("expected {n} premises, found {}", t.premises.len()),
        )
    }

    /// Some occurrence `f` of the conclusion context satisfying `pick`
    /// makes `premise_ctx == ctx - f + replacement(f)`.
    fn replaces(
        ctx: &[Formula],
        premise_ctx: &[Formula],
        mut replacement: impl FnMut(&Formula) -> Vec<Vec<Formula>>,
    ) -> bool {
        let mut seen: Vec<&Formula> = Vec::new();
        for f in ctx {
            if seen.contains(&f) {
                continue;
            }
            seen.push(f);
            let rest = minus(ctx, std::slice::from_ref(f)).expect("member");
            if replacement(f)
                .into_iter()
                .any(|r| same(&plus(&rest, &r), premise_ctx))
            {
                return true;
            }
        }
        false
    }

    fn eigen(t: &ProofTree) -> Result<crate::kernel::Var, String> {
        match &t.term {
            Some(Term::Var(y)) if !t.conclusion.free_vars().contains(y) => Ok(y.clone()),
            Some(Term::Var(_)) => Err("eigenvariable occurs free in the conclusion".into()),
            _ => Err("missing eigenvariable".into()),
        }
    }

    fn rule(&self, t: &ProofTree) -> Check {
        let ctx = &t.conclusion.context;
        let goal = &t.conclusion.goal;
        let p = &t.premises;
        let keeps_goal = |i: usize| ensure(p[i].conclusion.goal == *goal, "premise goal differs");
        match t.rule {
            RuleName::Init => {
                Self::arity(t, 0)?;
                ensure(matches!(goal, Formula::Atom(_)), "goal is not an atom")?;
                ensure(
                    ctx.len() == 1 && ctx[0] == *goal,
                    "context is not exactly the goal",
                )
            }
            RuleName::OneR => {
                Self::arity(t, 0)?;
                ensure(
                    *goal == Formula::One && ctx.is_empty(),
                    "expected an empty context proving 1",
                )
            }
            RuleName::Refl => {
                Self::arity(t, 0)?;
                let ok = matches!(goal, Formula::Atom(a) if a.is_eq() && a.args.len() == 2 && a.args[0] == a.args[1]);
                ensure(
                    ok && ctx.is_empty(),
                    "expected an empty context proving t = t",
                )
            }
            RuleName::TopR => {
                Self::arity(t, 0)?;
                ensure(*goal == Formula::Top, "goal is not top")
            }
            RuleName::OneL => {
                Self::arity(t, 1)?;
                keeps_goal(0)?;
                let rest = minus(ctx, &[Formula::One]).ok_or("no 1 in the context")?;
                ensure(
                    same(&rest, &p[0].conclusion.context),
                    "premise context mismatch",
                )
            }
            RuleName::TensorL => {
                Self::arity(t, 1)?;
                keeps_goal(0)?;
                let ok = Self::replaces(ctx, &p[0].conclusion.context, |f| match f {
                    Formula::Tensor(a, b) => vec![vec![(**a).clone(), (**b).clone()]],
                    _ => vec![],
                });
                ensure(ok, "no tensor decomposes into the premise")
            }
            RuleName::TensorR => {
                Self::arity(t, 2)?;
                let Formula::Tensor(a, b) = goal else {
                    return Err("goal is not a tensor".into());
                };
                ensure(
                    p[0].conclusion.goal == **a && p[1].conclusion.goal == **b,
                    "premise goals differ",
                )?;
                ensure(
                    same(
                        &plus(&p[0].conclusion.context, &p[1].conclusion.context),
                        ctx,
                    ),
                    "context split mismatch",
                )
            }
            RuleName::WithL => {
                Self::arity(t, 1)?;
                keeps_goal(0)?;
                let ok = Self::replaces(ctx, &p[0].conclusion.context, |f| match f {
                    Formula::With(fs) => fs.iter().map(|g| vec![g.clone()]).collect(),
                    _ => vec![],
                });
                ensure(ok, "no with-alternative matches the premise")
            }
            RuleName::WithR => {
                let Formula::With(fs) = goal else {
                    return Err("goal is not a with".into());
                };
                Self::arity(t, fs.len())?;
                for (f, q) in fs.iter().zip(p) {
                    ensure(
                        q.conclusion.goal == *f && same(&q.conclusion.context, ctx),
                        "premise mismatch",
                    )?;
                }
                Ok(())
            }
            RuleName::LolliL => {
                Self::arity(t, 2)?;
                keeps_goal(1)?;
                let (left, right) = (&p[0].conclusion, &p[1].conclusion);
                let mut seen = Vec::new();
                for f in ctx {
                    let Formula::Lolli(a, b) = f else { continue };
                    if seen.contains(&f) || left.goal != **a {
                        continue;
                    }
                    seen.push(f);
                    let Some(rest) = minus(ctx, std::slice::from_ref(f)) else {
                        continue;
                    };
                    let Some(right_rest) = minus(&right.context, std::slice::from_ref(b)) else {
                        continue;
                    };
                    if same(&plus(&left.context, &right_rest), &rest) {
                        return Ok(());
                    }
                }
                Err("no implication splits into the premises".into())
            }
            RuleName::LolliR => {
                Self::arity(t, 1)?;
                let Formula::Lolli(a, b) = goal else {
                    return Err("goal is not an implication".into());
                };
                ensure(p[0].conclusion.goal == **b, "premise goal differs")?;
                ensure(
                    same(&plus(ctx, &[(**a).clone()]), &p[0].conclusion.context),
                    "premise context mismatch",
                )
            }
            RuleName::ExistsL => {
                Self::arity(t, 1)?;
                keeps_goal(0)?;
                let y = Self::eigen(t)?;
                let ok = Self::replaces(ctx, &p[0].conclusion.context, |f| match f {
                    Formula::Exists(x, body) => {
                        vec![vec![body.substitute(&single(x, Term::Var(y.clone())))]]
                    }
                    _ => vec![],
                });
                ensure(ok, "no existential opens into the premise")
            }
            RuleName::ExistsR => {
                Self::arity(t, 1)?;
                let Formula::Exists(x, body) = goal else {
                    return Err("goal is not an existential".into());
                };
                let term = t.term.clone().ok_or("missing witness term")?;
                ensure(
                    p[0].conclusion.goal == body.substitute(&single(x, term)),
                    "premise goal is not the instance",
                )?;
                ensure(
                    same(&p[0].conclusion.context, ctx),
                    "premise context mismatch",
                )
            }
            RuleName::ForallL => {
                Self::arity(t, 1)?;
                keeps_goal(0)?;
                let term = t.term.clone().ok_or("missing instance term")?;
                let ok = Self::replaces(ctx, &p[0].conclusion.context, |f| match f {
                    Formula::Forall(x, body) => {
                        vec![vec![body.substitute(&single(x, term.clone()))]]
                    }
                    _ => vec![],
                });
                ensure(ok, "no universal instantiates into the premise")
            }
            RuleName::ForallR => {
                Self::arity(t, 1)?;
                let Formula::Forall(x, body) = goal else {
                    return Err("goal is not a universal".into());
                };
                let y = Self::eigen(t)?;
                ensure(
                    p[0].conclusion.goal == body.substitute(&single(x, Term::Var(y))),
                    "premise goal mismatch",
                )?;
                ensure(
                    same(&p[0].conclusion.context, ctx),
                    "premise context mismatch",
                )
            }
            RuleName::BangL => {
                Self::arity(t, 1)?;
                keeps_goal(0)?;
                let ok = Self::replaces(ctx, &p[0].conclusion.context, |f| match f {
                    Formula::Bang(_, body) => vec![vec![(**body).clone()]],
                    _ => vec![],
                });
                ensure(ok, "no banged formula derelicts into the premise")
            }
            RuleName::BangR | RuleName::BangRS => {
                Self::arity(t, 1)?;
                let Formula::Bang(target, body) = goal else {
                    return Err("goal is not banged".into());
                };
                ensure(
                    self.sig.contains(target),
                    "target index outside the signature",
                )?;
                ensure(p[0].conclusion.goal == **body, "premise goal mismatch")?;
                ensure(
                    same(&p[0].conclusion.context, ctx),
                    "premise context mismatch",
                )?;
                let mut indices = Vec::with_capacity(ctx.len());
                for f in ctx {
                    match f {
                        Formula::Bang(i, _) => indices.push(i.clone()),
                        _ => return Err(format!("context formula `{f}` is not banged")),
                    }
                }
                indices.sort();
                if let Some(w) = &t.witness {
                    let mut wctx = w.context.clone();
                    wctx.sort();
                    ensure(
                        wctx == indices && w.target == *target,
                        "witness does not match the node",
                    )?;
                    let bound = match t.rule {
                        RuleName::BangRS => self.sig.fold_times(&indices),
                        _ => self.sig.meet(&indices),
                    };
                    ensure(w.bound == bound, "witness bound is wrong")?;
                }
                ensure(
                    self.sig.check_promotion(&indices, target, self.mode),
                    "promotion side condition fails",
                )
            }
            RuleName::Weaken => {
                Self::arity(t, 1)?;
                keeps_goal(0)?;
                let removed = minus(ctx, &p[0].conclusion.context)
                    .ok_or("premise context is not a subcontext")?;
                ensure(
                    removed.len() == 1,
                    "weakening must drop exactly one formula",
                )?;
                ensure(
                    matches!(&removed[0], Formula::Bang(i, _) if self.sig.unbounded(i)),
                    "weakened formula is not unbounded",
                )
            }
            RuleName::Contract => {
                Self::arity(t, 1)?;
                keeps_goal(0)?;
                let added =
                    minus(&p[0].conclusion.context, ctx).ok_or("conclusion is not a subcontext")?;
                ensure(
                    added.len() == 1 && ctx.contains(&added[0]),
                    "contraction must copy one context formula",
                )?;
                ensure(
                    matches!(&added[0], Formula::Bang(i, _) if self.sig.unbounded(i)),
                    "contracted formula is not unbounded",
                )
            }
            RuleName::Cut => {
                Self::arity(t, 2)?;
                keeps_goal(1)?;
                let cut = &p[0].conclusion.goal;
                let right = minus(&p[1].conclusion.context, std::slice::from_ref(cut))
                    .ok_or("cut formula missing on the right")?;
                ensure(
                    same(&plus(&p[0].conclusion.context, &right), ctx),
                    "context split mismatch",
                )
            }
        }
    }
}

/// Re-checks every node of `tree`, recomputing promotion side conditions
/// under `mode`.
pub fn validate(tree: &ProofTree, sig: &Signature, mode: Mode) -> Result<(), ValidationError> {
    Checker { sig, mode }.node(tree)
}

/// `validate` plus the requirement that `tree` concludes `seq`.
pub fn validate_for(
    tree: &ProofTree,
    seq: &Sequent,
    sig: &Signature,
    mode: Mode,
) -> Result<(), ValidationError> {
    if tree.conclusion.goal != seq.goal || !same(&tree.conclusion.context, &seq.context) {
        return Err(ValidationError {
            rule: tree.rule.to_string(),
            conclusion: tree.conclusion.to_string(),
            reason: format!("proves a different sequent than `{seq}`"),
        });
    }
    validate(tree, sig, mode)
}

pub fn is_cut_free(tree: &ProofTree) -> bool {
    tree.count_rule(RuleName::Cut) == 0
}
