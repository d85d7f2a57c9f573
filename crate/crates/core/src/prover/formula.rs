//! Formulas of the intuitionistic linear logic fragment with
//! subexponentials, sequents, and the completed subexponential signature.

use std::collections::BTreeSet;
use std::fmt;

use crate::kernel::{enter_binder, write_list, Atom, FreeVars, Subst, Substitute, Term, Var};
use crate::semiring::{CSemiring, SemiringValue};
use crate::store::Mode;

/// A subexponential label: a semiring level or one of the marks used by
/// the process encoding.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Index {
    Level(SemiringValue),
    /// Processes.
    P,
    /// Procedure calls.
    D,
    /// Procedure definitions.
    U,
    BotC,
    TopC,
}

impl fmt::Display for Index {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Index::Level(v) => write!(f, "{v}"),
            Index::P => f.write_str("p"),
            Index::D => f.write_str("d"),
            Index::U => f.write_str("u"),
            Index::BotC => f.write_str("botc"),
            Index::TopC => f.write_str("topc"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Atom(Atom),
    One,
    Top,
    Tensor(Box<Formula>, Box<Formula>),
    /// Additive conjunction of a non-empty list.
    With(Vec<Formula>),
    Lolli(Box<Formula>, Box<Formula>),
    Exists(Var, Box<Formula>),
    Forall(Var, Box<Formula>),
    Bang(Index, Box<Formula>),
}

impl Formula {
    pub fn tensor(a: Formula, b: Formula) -> Self {
        Formula::Tensor(Box::new(a), Box::new(b))
    }

    pub fn lolli(a: Formula, b: Formula) -> Self {
        Formula::Lolli(Box::new(a), Box::new(b))
    }

    pub fn bang(i: Index, f: Formula) -> Self {
        Formula::Bang(i, Box::new(f))
    }

    pub fn exists(x: Var, f: Formula) -> Self {
        Formula::Exists(x, Box::new(f))
    }

    pub fn forall(x: Var, f: Formula) -> Self {
        Formula::Forall(x, Box::new(f))
    }

    pub fn forall_all(vars: &[Var], body: Formula) -> Self {
        vars.iter()
            .rev()
            .fold(body, |acc, v| Formula::forall(v.clone(), acc))
    }

    /// Right-nested tensor; `One` when empty.
    pub fn tensor_all(parts: impl IntoIterator<Item = Formula>) -> Self {
        let mut parts: Vec<_> = parts.into_iter().collect();
        let Some(mut acc) = parts.pop() else {
            return Formula::One;
        };
        while let Some(p) = parts.pop() {
            acc = Formula::tensor(p, acc);
        }
        acc
    }

    /// `With` for two or more alternatives, the alternative itself for one.
    pub fn with_all(mut parts: Vec<Formula>) -> Self {
        if parts.len() == 1 {
            parts.pop().expect("one element")
        } else {
            Formula::With(parts)
        }
    }

    /// Every atom occurring anywhere in the formula.
    pub fn atoms_into<'a>(&'a self, out: &mut Vec<&'a Atom>) {
        match self {
            Formula::Atom(a) => out.push(a),
            Formula::One | Formula::Top => {}
            Formula::Tensor(a, b) | Formula::Lolli(a, b) => {
                a.atoms_into(out);
                b.atoms_into(out);
            }
            Formula::With(fs) => fs.iter().for_each(|f| f.atoms_into(out)),
            Formula::Exists(_, f) | Formula::Forall(_, f) | Formula::Bang(_, f) => {
                f.atoms_into(out)
            }
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Formula::Atom(_) | Formula::One | Formula::Top => 1,
            Formula::Tensor(a, b) | Formula::Lolli(a, b) => 1 + a.size() + b.size(),
            Formula::With(fs) => 1 + fs.iter().map(Formula::size).sum::<usize>(),
            Formula::Exists(_, f) | Formula::Forall(_, f) | Formula::Bang(_, f) => 1 + f.size(),
        }
    }
}

impl FreeVars for Formula {
    fn free_vars_into(&self, out: &mut BTreeSet<Var>) {
        match self {
            Formula::Atom(a) => a.free_vars_into(out),
            Formula::One | Formula::Top => {}
            Formula::Tensor(a, b) | Formula::Lolli(a, b) => {
                a.free_vars_into(out);
                b.free_vars_into(out);
            }
            Formula::With(fs) => fs.iter().for_each(|f| f.free_vars_into(out)),
            Formula::Exists(x, f) | Formula::Forall(x, f) => {
                let mut inner = f.free_vars();
                inner.remove(x);
                out.extend(inner);
            }
            Formula::Bang(_, f) => f.free_vars_into(out),
        }
    }
}

impl Substitute for Formula {
    fn substitute(&self, map: &Subst) -> Self {
        if map.is_empty() {
            return self.clone();
        }
        match self {
            Formula::Atom(a) => Formula::Atom(a.substitute(map)),
            Formula::One | Formula::Top => self.clone(),
            Formula::Tensor(a, b) => Formula::tensor(a.substitute(map), b.substitute(map)),
            Formula::Lolli(a, b) => Formula::lolli(a.substitute(map), b.substitute(map)),
            Formula::With(fs) => Formula::With(fs.iter().map(|f| f.substitute(map)).collect()),
            Formula::Exists(x, f) => {
                let (y, inner) = enter_binder(x, f.as_ref(), map);
                Formula::exists(y, f.substitute(&inner))
            }
            Formula::Forall(x, f) => {
                let (y, inner) = enter_binder(x, f.as_ref(), map);
                Formula::forall(y, f.substitute(&inner))
            }
            Formula::Bang(i, f) => Formula::bang(i.clone(), f.substitute(map)),
        }
    }
}

/// Binding strength used by the printer: a formula printed in a slot of
/// strength `s` is parenthesised when its own strength is lower.
fn strength(f: &Formula) -> u8 {
    match f {
        Formula::Lolli(..) => 1,
        Formula::With(_) => 2,
        Formula::Tensor(..) => 3,
        Formula::Exists(..) | Formula::Forall(..) => 0,
        _ => 4,
    }
}

fn write_at(f: &mut fmt::Formatter<'_>, x: &Formula, min: u8) -> fmt::Result {
    if strength(x) < min {
        write!(f, "({x})")
    } else {
        write!(f, "{x}")
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom(a) => write!(f, "{a}"),
            Formula::One => f.write_str("1"),
            Formula::Top => f.write_str("top"),
            Formula::Tensor(a, b) => {
                write_at(f, a, 4)?;
                f.write_str(" * ")?;
                write_at(f, b, 3)
            }
            Formula::With(fs) => {
                for (i, x) in fs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" & ")?;
                    }
                    write_at(f, x, 3)?;
                }
                if fs.len() == 1 {
                    f.write_str(" & top")?;
                }
                Ok(())
            }
            Formula::Lolli(a, b) => {
                write_at(f, a, 2)?;
                f.write_str(" -o ")?;
                write_at(f, b, 1)
            }
            Formula::Exists(x, b) => write!(f, "ex {x}. {b}"),
            Formula::Forall(x, b) => write!(f, "all {x}. {b}"),
            Formula::Bang(i, b) => {
                write!(f, "!{i} ")?;
                write_at(f, b, 4)
            }
        }
    }
}

/// `context |- goal` with a multiset context.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sequent {
    pub context: Vec<Formula>,
    pub goal: Formula,
}

impl Sequent {
    pub fn new(mut context: Vec<Formula>, goal: Formula) -> Self {
        context.sort();
        Sequent { context, goal }
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = self.goal.free_vars();
        self.context.iter().for_each(|f| f.free_vars_into(&mut out));
        out
    }

    /// Closed subterms occurring in atoms of the sequent.
    pub fn terms(&self) -> BTreeSet<Term> {
        let mut atoms = Vec::new();
        self.goal.atoms_into(&mut atoms);
        self.context.iter().for_each(|f| f.atoms_into(&mut atoms));
        let free = self.free_vars();
        let mut out = BTreeSet::new();
        for a in atoms {
            for t in &a.args {
                let mut sub = BTreeSet::new();
                t.subterms_into(&mut sub);
                out.extend(sub.into_iter().filter(|t| t.free_vars().is_subset(&free)));
            }
        }
        out
    }
}

impl fmt::Display for Sequent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_list(f, &self.context, ", ")?;
        if !self.context.is_empty() {
            f.write_str(" ")?;
        }
        write!(f, "|- {}", self.goal)
    }
}

/// The semiring levels completed with the process marks `p`, `d`, `u` and
/// the extremes `botc`, `topc`. `p`, `d`, `u` are pairwise unrelated and
/// unrelated to every level; `botc` is below and `topc` above everything.
/// Levels, `u` and `topc` admit weakening and contraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Signature {
    pub semiring: CSemiring,
}

impl Signature {
    pub fn new(semiring: CSemiring) -> Self {
        Signature { semiring }
    }

    pub fn contains(&self, i: &Index) -> bool {
        match i {
            Index::Level(v) => self.semiring.contains(v),
            _ => true,
        }
    }

    pub fn top_level(&self) -> Index {
        Index::Level(self.semiring.top())
    }

    pub fn unbounded(&self, i: &Index) -> bool {
        matches!(i, Index::Level(_) | Index::U | Index::TopC)
    }

    /// The completed preorder.
    pub fn leq(&self, a: &Index, b: &Index) -> bool {
        match (a, b) {
            (Index::BotC, _) | (_, Index::TopC) => true,
            (Index::Level(x), Index::Level(y)) => self.semiring.leq(x, y).unwrap_or(false),
            (x, y) => x == y,
        }
    }

    /// The completed product: `topc` is its unit and `botc` absorbs; a
    /// mark times itself is itself and any other mixture is `botc`.
    pub fn times(&self, a: &Index, b: &Index) -> Index {
        match (a, b) {
            (Index::TopC, x) | (x, Index::TopC) => x.clone(),
            (Index::BotC, _) | (_, Index::BotC) => Index::BotC,
            (Index::Level(x), Index::Level(y)) => match self.semiring.times(x, y) {
                Ok(v) => Index::Level(v),
                Err(_) => Index::BotC,
            },
            (x, y) if x == y => x.clone(),
            _ => Index::BotC,
        }
    }

    /// Greatest lower bound in the completed order; `topc` for an empty
    /// context.
    pub fn meet<'a>(&self, ctx: impl IntoIterator<Item = &'a Index>) -> Index {
        ctx.into_iter().fold(Index::TopC, |acc, i| match (&acc, i) {
            (Index::TopC, x) => x.clone(),
            (x, Index::TopC) => x.clone(),
            (Index::Level(x), Index::Level(y)) => {
                if self.semiring.leq(x, y).unwrap_or(false) {
                    acc.clone()
                } else {
                    i.clone()
                }
            }
            (x, y) if x == y => acc.clone(),
            _ => Index::BotC,
        })
    }

    pub fn fold_times<'a>(&self, ctx: impl IntoIterator<Item = &'a Index>) -> Index {
        ctx.into_iter()
            .fold(Index::TopC, |acc, i| self.times(&acc, i))
    }

    /// Side condition of promotion to `target` over a context with the
    /// given indices.
    pub fn check_promotion(&self, ctx: &[Index], target: &Index, mode: Mode) -> bool {
        match mode {
            Mode::Sell => ctx.iter().all(|c| self.leq(target, c)),
            Mode::Sells => self.leq(target, &self.fold_times(ctx)),
        }
    }
}
