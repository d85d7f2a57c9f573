//! Core syntax: terms, atoms, soft constraints, processes, definitions and
//! axioms, with free variables, capture-avoiding substitution and the
//! prenex-tensor normal form of constraints.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::semiring::SemiringValue;

pub type Symbol = Arc<str>;

/// Predicate name reserved for diagonal elements `x = y`.
pub const EQ_PREDICATE: &str = "eq";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KernelError {
    #[error("a pre-constraint needs at least one atom")]
    EmptyPreConstraint,
    #[error("axiom variable list misses free variable {0}")]
    AxiomNotClosed(Var),
    #[error("axiom sides must be quantifier-free")]
    AxiomQuantified,
    #[error("axiom variable {0} does not occur in a non-equality premise atom")]
    AxiomNotRangeRestricted(Var),
    #[error("axiom conclusions may not contain equality atoms")]
    AxiomConcludesEquality,
    #[error("definition {name}: free variable {var} is not a parameter")]
    DefinitionNotClosed { name: String, var: Var },
    #[error("definition {name}: parameter {var} is repeated")]
    DuplicateParameter { name: String, var: Var },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(Symbol);

impl Var {
    pub fn new(name: &str) -> Self {
        Var(Arc::from(name))
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Monotone source of fresh variable names `_v0, _v1, ...`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Fresh {
    next: usize,
    prefix: &'static str,
}

impl Default for Fresh {
    fn default() -> Self {
        Fresh::new()
    }
}

impl Fresh {
    pub fn new() -> Self {
        Fresh {
            next: 0,
            prefix: "_v",
        }
    }

    pub fn with_prefix(prefix: &'static str) -> Self {
        Fresh { next: 0, prefix }
    }

    /// A source whose names do not collide with any of `names`.
    pub fn avoiding<'a, I: IntoIterator<Item = &'a Var>>(names: I) -> Self {
        let mut f = Fresh::new();
        f.skip_past(names);
        f
    }

    pub fn skip_past<'a, I: IntoIterator<Item = &'a Var>>(&mut self, names: I) {
        for v in names {
            if let Some(n) = v
                .name()
                .strip_prefix(self.prefix)
                .and_then(|d| d.parse::<usize>().ok())
            {
                self.next = self.next.max(n + 1);
            }
        }
    }

    pub fn next_var(&mut self) -> Var {
        let v = Var::new(&format!("{}{}", self.prefix, self.next));
        self.next += 1;
        v
    }

    pub fn counter(&self) -> usize {
        self.next
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(Var),
    Const(Symbol),
    Fun(Symbol, Vec<Term>),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(Var::new(name))
    }

    pub fn constant(name: &str) -> Term {
        Term::Const(Arc::from(name))
    }

    pub fn fun(name: &str, args: Vec<Term>) -> Term {
        Term::Fun(Arc::from(name), args)
    }

    /// Pushes this term and all of its subterms.
    pub fn subterms_into(&self, out: &mut BTreeSet<Term>) {
        out.insert(self.clone());
        if let Term::Fun(_, args) = self {
            for a in args {
                a.subterms_into(out);
            }
        }
    }

    pub fn mentions(&self, v: &Var) -> bool {
        match self {
            Term::Var(x) => x == v,
            Term::Const(_) => false,
            Term::Fun(_, args) => args.iter().any(|a| a.mentions(v)),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Const(c) => f.write_str(c),
            Term::Fun(name, args) => {
                write!(f, "{name}(")?;
                write_list(f, args, ", ")?;
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub pred: Symbol,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(pred: &str, args: Vec<Term>) -> Self {
        Atom {
            pred: Arc::from(pred),
            args,
        }
    }

    pub fn eq(lhs: Term, rhs: Term) -> Self {
        Atom::new(EQ_PREDICATE, vec![lhs, rhs])
    }

    pub fn is_eq(&self) -> bool {
        &*self.pred == EQ_PREDICATE && self.args.len() == 2
    }

    pub fn map_terms(&self, f: &mut impl FnMut(&Term) -> Term) -> Atom {
        Atom {
            pred: self.pred.clone(),
            args: self.args.iter().map(f).collect(),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.args.is_empty() {
            f.write_str(&self.pred)
        } else {
            write!(f, "{}(", self.pred)?;
            write_list(f, &self.args, ", ")?;
            f.write_str(")")
        }
    }
}

/// `A1 * ... * An`, `n >= 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PreConstraint(Vec<Atom>);

impl PreConstraint {
    pub fn new(atoms: Vec<Atom>) -> Result<Self, KernelError> {
        if atoms.is_empty() {
            Err(KernelError::EmptyPreConstraint)
        } else {
            Ok(PreConstraint(atoms))
        }
    }

    pub fn atom(a: Atom) -> Self {
        PreConstraint(vec![a])
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.0
    }

    pub fn map_atoms(&self, f: impl FnMut(&Atom) -> Atom) -> Self {
        PreConstraint(self.0.iter().map(f).collect())
    }
}

impl fmt::Display for PreConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_list(f, &self.0, " * ")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Constraint {
    One,
    Tensor(Box<Constraint>, Box<Constraint>),
    Exists(Var, Box<Constraint>),
    /// `[pc]_a`: the pre-constraint believed with level `a`.
    Soft(PreConstraint, SemiringValue),
}

impl Constraint {
    pub fn soft(atoms: Vec<Atom>, level: SemiringValue) -> Result<Self, KernelError> {
        Ok(Constraint::Soft(PreConstraint::new(atoms)?, level))
    }

    pub fn tensor(a: Constraint, b: Constraint) -> Self {
        Constraint::Tensor(Box::new(a), Box::new(b))
    }

    pub fn exists(v: Var, body: Constraint) -> Self {
        Constraint::Exists(v, Box::new(body))
    }

    /// Right-nested tensor of `parts`; `One` when empty.
    pub fn tensor_all(parts: impl IntoIterator<Item = Constraint>) -> Self {
        let mut parts: Vec<_> = parts.into_iter().collect();
        let Some(mut acc) = parts.pop() else {
            return Constraint::One;
        };
        while let Some(p) = parts.pop() {
            acc = Constraint::tensor(p, acc);
        }
        acc
    }

    pub fn exists_all(vars: impl IntoIterator<Item = Var>, body: Constraint) -> Self {
        let vars: Vec<_> = vars.into_iter().collect();
        vars.into_iter()
            .rev()
            .fold(body, |acc, v| Constraint::exists(v, acc))
    }

    pub fn is_quantifier_free(&self) -> bool {
        match self {
            Constraint::One | Constraint::Soft(..) => true,
            Constraint::Tensor(a, b) => a.is_quantifier_free() && b.is_quantifier_free(),
            Constraint::Exists(..) => false,
        }
    }

    /// Every soft item with its atoms, in left-to-right order.
    pub fn soft_items(&self) -> Vec<(&PreConstraint, &SemiringValue)> {
        let mut out = Vec::new();
        fn go<'a>(c: &'a Constraint, out: &mut Vec<(&'a PreConstraint, &'a SemiringValue)>) {
            match c {
                Constraint::One => {}
                Constraint::Tensor(a, b) => {
                    go(a, out);
                    go(b, out);
                }
                Constraint::Exists(_, body) => go(body, out),
                Constraint::Soft(pc, a) => out.push((pc, a)),
            }
        }
        go(self, &mut out);
        out
    }

    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        self.soft_items()
            .into_iter()
            .flat_map(|(pc, _)| pc.atoms().iter())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Branch {
    pub guard: Constraint,
    pub body: Process,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Process {
    Tell(Constraint),
    /// Guarded choice `ask c1 then P1 + ... + ask cn then Pn`, `n >= 1`.
    Sum(Vec<Branch>),
    Par(Box<Process>, Box<Process>),
    Local(Var, Box<Process>),
    Call(Symbol, Vec<Term>),
}

impl Process {
    pub fn ask(guard: Constraint, body: Process) -> Self {
        Process::Sum(vec![Branch { guard, body }])
    }

    pub fn par(a: Process, b: Process) -> Self {
        Process::Par(Box::new(a), Box::new(b))
    }

    pub fn local(v: Var, body: Process) -> Self {
        Process::Local(v, Box::new(body))
    }

    pub fn call(name: &str, args: Vec<Term>) -> Self {
        Process::Call(Arc::from(name), args)
    }

    /// Right-nested parallel composition; `tell 1` when empty.
    pub fn par_all(procs: impl IntoIterator<Item = Process>) -> Self {
        let mut procs: Vec<_> = procs.into_iter().collect();
        let Some(mut acc) = procs.pop() else {
            return Process::Tell(Constraint::One);
        };
        while let Some(p) = procs.pop() {
            acc = Process::par(p, acc);
        }
        acc
    }

    /// Flattens nested `||` into a multiset of parallel components.
    pub fn flatten_par(self, out: &mut Vec<Process>) {
        match self {
            Process::Par(a, b) => {
                a.flatten_par(out);
                b.flatten_par(out);
            }
            p => out.push(p),
        }
    }

    pub fn calls(&self) -> Vec<(&Symbol, usize)> {
        let mut out = Vec::new();
        fn go<'a>(p: &'a Process, out: &mut Vec<(&'a Symbol, usize)>) {
            match p {
                Process::Tell(_) => {}
                Process::Sum(bs) => bs.iter().for_each(|b| go(&b.body, out)),
                Process::Par(a, b) => {
                    go(a, out);
                    go(b, out);
                }
                Process::Local(_, body) => go(body, out),
                Process::Call(name, args) => out.push((name, args.len())),
            }
        }
        go(self, &mut out);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Definition {
    pub name: Symbol,
    pub params: Vec<Var>,
    pub body: Process,
}

impl Definition {
    pub fn new(name: &str, params: Vec<Var>, body: Process) -> Result<Self, KernelError> {
        let mut seen = BTreeSet::new();
        for p in &params {
            if !seen.insert(p.clone()) {
                return Err(KernelError::DuplicateParameter {
                    name: name.to_string(),
                    var: p.clone(),
                });
            }
        }
        if let Some(var) = body.free_vars().into_iter().find(|v| !seen.contains(v)) {
            return Err(KernelError::DefinitionNotClosed {
                name: name.to_string(),
                var,
            });
        }
        Ok(Definition {
            name: Arc::from(name),
            params,
            body,
        })
    }

    /// The body with actual parameters substituted for the formal ones.
    pub fn instantiate(&self, args: &[Term]) -> Process {
        let map: Subst = self
            .params
            .iter()
            .cloned()
            .zip(args.iter().cloned())
            .collect();
        self.body.substitute(&map)
    }
}

/// Non-logical axiom `forall vars. premise -o conclusion`, both sides
/// quantifier-free.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Axiom {
    pub vars: Vec<Var>,
    pub premise: Constraint,
    pub conclusion: Constraint,
}

impl Axiom {
    pub fn new(
        vars: Vec<Var>,
        premise: Constraint,
        conclusion: Constraint,
    ) -> Result<Self, KernelError> {
        if !premise.is_quantifier_free() || !conclusion.is_quantifier_free() {
            return Err(KernelError::AxiomQuantified);
        }
        let declared: BTreeSet<_> = vars.iter().cloned().collect();
        for v in premise
            .free_vars()
            .into_iter()
            .chain(conclusion.free_vars())
        {
            if !declared.contains(&v) {
                return Err(KernelError::AxiomNotClosed(v));
            }
        }
        let mut bound = BTreeSet::new();
        for a in premise.atoms().filter(|a| !a.is_eq()) {
            bound.extend(a.free_vars());
        }
        if let Some(v) = vars.iter().find(|v| !bound.contains(*v)) {
            return Err(KernelError::AxiomNotRangeRestricted(v.clone()));
        }
        if conclusion.atoms().any(Atom::is_eq) {
            return Err(KernelError::AxiomConcludesEquality);
        }
        Ok(Axiom {
            vars,
            premise,
            conclusion,
        })
    }

    pub fn instantiate(&self, map: &Subst) -> (Constraint, Constraint) {
        (
            self.premise.substitute(map),
            self.conclusion.substitute(map),
        )
    }
}

// ---------------------------------------------------------------------------
// Concrete syntax

fn write_atom_in_bundle(f: &mut fmt::Formatter<'_>, a: &Atom) -> fmt::Result {
    if a.is_eq() {
        write!(f, "{} = {}", a.args[0], a.args[1])
    } else {
        write!(f, "{a}")
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::One => f.write_str("1"),
            Constraint::Tensor(a, b) => {
                if matches!(**a, Constraint::Tensor(..) | Constraint::Exists(..)) {
                    write!(f, "({a})")?;
                } else {
                    write!(f, "{a}")?;
                }
                write!(f, " * {b}")
            }
            Constraint::Exists(x, body) => write!(f, "ex {x}. {body}"),
            Constraint::Soft(pc, level) => {
                f.write_str("[")?;
                for (i, a) in pc.atoms().iter().enumerate() {
                    if i > 0 {
                        f.write_str(" * ")?;
                    }
                    write_atom_in_bundle(f, a)?;
                }
                write!(f, "]@{level}")
            }
        }
    }
}

/// Printing context of a process: the loosest operator that may appear
/// unparenthesised at that position.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Slot {
    /// Operand of a guarded choice body or `new` inside a larger term.
    Prim,
    /// Left operand of `||`.
    ParLeft,
    /// Anywhere a full process may appear.
    Top,
}

fn write_process(f: &mut fmt::Formatter<'_>, p: &Process, slot: Slot) -> fmt::Result {
    match p {
        Process::Tell(c) => write!(f, "tell {c}"),
        Process::Call(name, args) => {
            write!(f, "{name}(")?;
            write_list(f, args, ", ")?;
            f.write_str(")")
        }
        Process::Sum(bs) if bs.is_empty() => f.write_str("skip"),
        Process::Sum(bs) => {
            let paren = slot == Slot::Prim;
            if paren {
                f.write_str("(")?;
            }
            for (i, b) in bs.iter().enumerate() {
                if i > 0 {
                    f.write_str(" + ")?;
                }
                write!(f, "ask {} then ", b.guard)?;
                write_process(f, &b.body, Slot::Prim)?;
            }
            if paren {
                f.write_str(")")?;
            }
            Ok(())
        }
        Process::Par(a, b) => {
            let paren = slot != Slot::Top;
            if paren {
                f.write_str("(")?;
            }
            write_process(f, a, Slot::ParLeft)?;
            f.write_str(" || ")?;
            write_process(f, b, Slot::Top)?;
            if paren {
                f.write_str(")")?;
            }
            Ok(())
        }
        Process::Local(x, body) => {
            let paren = slot != Slot::Top;
            if paren {
                f.write_str("(")?;
            }
            write!(f, "new {x} in ")?;
            write_process(f, body, Slot::Top)?;
            if paren {
                f.write_str(")")?;
            }
            Ok(())
        }
    }
}

impl fmt::Display for Process {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_process(f, self, Slot::Top)
    }
}

impl fmt::Display for Definition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "def {}(", self.name)?;
        write_list(f, &self.params, ", ")?;
        write!(f, ") = {}", self.body)
    }
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("axiom ")?;
        if !self.vars.is_empty() {
            f.write_str("forall ")?;
            write_list(f, &self.vars, " ")?;
            f.write_str(". ")?;
        }
        write!(f, "{} -o {}", self.premise, self.conclusion)
    }
}

// ---------------------------------------------------------------------------
// Free variables and substitution

pub type Subst = BTreeMap<Var, Term>;

pub trait FreeVars {
    fn free_vars_into(&self, out: &mut BTreeSet<Var>);

    fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.free_vars_into(&mut out);
        out
    }
}

impl FreeVars for Term {
    fn free_vars_into(&self, out: &mut BTreeSet<Var>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Const(_) => {}
            Term::Fun(_, args) => args.iter().for_each(|a| a.free_vars_into(out)),
        }
    }
}

impl FreeVars for Atom {
    fn free_vars_into(&self, out: &mut BTreeSet<Var>) {
        self.args.iter().for_each(|a| a.free_vars_into(out));
    }
}

impl FreeVars for PreConstraint {
    fn free_vars_into(&self, out: &mut BTreeSet<Var>) {
        self.0.iter().for_each(|a| a.free_vars_into(out));
    }
}

impl FreeVars for Constraint {
    fn free_vars_into(&self, out: &mut BTreeSet<Var>) {
        match self {
            Constraint::One => {}
            Constraint::Tensor(a, b) => {
                a.free_vars_into(out);
                b.free_vars_into(out);
            }
            Constraint::Exists(x, body) => {
                let mut inner = body.free_vars();
                inner.remove(x);
                out.extend(inner);
            }
            Constraint::Soft(pc, _) => pc.free_vars_into(out),
        }
    }
}

impl FreeVars for Process {
    fn free_vars_into(&self, out: &mut BTreeSet<Var>) {
        match self {
            Process::Tell(c) => c.free_vars_into(out),
            Process::Sum(bs) => {
                for b in bs {
                    b.guard.free_vars_into(out);
                    b.body.free_vars_into(out);
                }
            }
            Process::Par(a, b) => {
                a.free_vars_into(out);
                b.free_vars_into(out);
            }
            Process::Local(x, body) => {
                let mut inner = body.free_vars();
                inner.remove(x);
                out.extend(inner);
            }
            Process::Call(_, args) => args.iter().for_each(|a| a.free_vars_into(out)),
        }
    }
}

impl<T: FreeVars> FreeVars for [T] {
    fn free_vars_into(&self, out: &mut BTreeSet<Var>) {
        self.iter().for_each(|x| x.free_vars_into(out));
    }
}

/// Picks a variant of `base` (by appending primes) outside `avoid`.
pub fn variant(base: &Var, avoid: &BTreeSet<Var>) -> Var {
    let mut name = format!("{base}'");
    loop {
        let v = Var::new(&name);
        if !avoid.contains(&v) {
            return v;
        }
        name.push('\'');
    }
}

fn range_vars(map: &Subst) -> BTreeSet<Var> {
    let mut out = BTreeSet::new();
    for (k, t) in map {
        out.insert(k.clone());
        t.free_vars_into(&mut out);
    }
    out
}

/// Shared binder handling for `Exists` and `Local`: drops the bound
/// variable from the map and renames it when it would capture.
pub(crate) fn enter_binder<T: FreeVars>(x: &Var, body: &T, map: &Subst) -> (Var, Subst) {
    let mut inner = map.clone();
    inner.remove(x);
    let body_fv = body.free_vars();
    inner.retain(|k, _| body_fv.contains(k));
    let captured = inner.values().any(|t| t.mentions(x));
    if !captured {
        return (x.clone(), inner);
    }
    let mut avoid = range_vars(&inner);
    avoid.extend(body_fv);
    let y = variant(x, &avoid);
    inner.insert(x.clone(), Term::Var(y.clone()));
    (y, inner)
}

pub trait Substitute: Sized {
    /// Simultaneous capture-avoiding substitution.
    fn substitute(&self, map: &Subst) -> Self;
}

impl Substitute for Term {
    fn substitute(&self, map: &Subst) -> Self {
        match self {
            Term::Var(v) => map.get(v).cloned().unwrap_or_else(|| self.clone()),
            Term::Const(_) => self.clone(),
            Term::Fun(f, args) => {
                Term::Fun(f.clone(), args.iter().map(|a| a.substitute(map)).collect())
            }
        }
    }
}

impl Substitute for Atom {
    fn substitute(&self, map: &Subst) -> Self {
        self.map_terms(&mut |t| t.substitute(map))
    }
}

impl Substitute for PreConstraint {
    fn substitute(&self, map: &Subst) -> Self {
        self.map_atoms(|a| a.substitute(map))
    }
}

impl Substitute for Constraint {
    fn substitute(&self, map: &Subst) -> Self {
        if map.is_empty() {
            return self.clone();
        }
        match self {
            Constraint::One => Constraint::One,
            Constraint::Tensor(a, b) => Constraint::tensor(a.substitute(map), b.substitute(map)),
            Constraint::Exists(x, body) => {
                let (y, inner) = enter_binder(x, body.as_ref(), map);
                Constraint::exists(y, body.substitute(&inner))
            }
            Constraint::Soft(pc, a) => Constraint::Soft(pc.substitute(map), a.clone()),
        }
    }
}

impl Substitute for Process {
    fn substitute(&self, map: &Subst) -> Self {
        if map.is_empty() {
            return self.clone();
        }
        match self {
            Process::Tell(c) => Process::Tell(c.substitute(map)),
            Process::Sum(bs) => Process::Sum(
                bs.iter()
                    .map(|b| Branch {
                        guard: b.guard.substitute(map),
                        body: b.body.substitute(map),
                    })
                    .collect(),
            ),
            Process::Par(a, b) => Process::par(a.substitute(map), b.substitute(map)),
            Process::Local(x, body) => {
                let (y, inner) = enter_binder(x, body.as_ref(), map);
                Process::local(y, body.substitute(&inner))
            }
            Process::Call(name, args) => Process::Call(
                name.clone(),
                args.iter().map(|a| a.substitute(map)).collect(),
            ),
        }
    }
}

pub fn single(v: &Var, t: Term) -> Subst {
    let mut m = Subst::new();
    m.insert(v.clone(), t);
    m
}

// ---------------------------------------------------------------------------
// Normal form

/// `exists vars. [pc1]_a1 * ... * [pcn]_an`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalForm {
    pub vars: Vec<Var>,
    pub items: Vec<(PreConstraint, SemiringValue)>,
}

impl NormalForm {
    pub fn to_constraint(&self) -> Constraint {
        Constraint::exists_all(
            self.vars.iter().cloned(),
            Constraint::tensor_all(
                self.items
                    .iter()
                    .map(|(pc, a)| Constraint::Soft(pc.clone(), a.clone())),
            ),
        )
    }
}

/// Moves existentials outwards, renaming every binder to a fresh name.
/// `One` contributes nothing.
pub fn normalize(c: &Constraint, fresh: &mut Fresh) -> NormalForm {
    let mut nf = NormalForm {
        vars: Vec::new(),
        items: Vec::new(),
    };
    fn go(c: &Constraint, map: &Subst, fresh: &mut Fresh, nf: &mut NormalForm) {
        match c {
            Constraint::One => {}
            Constraint::Tensor(a, b) => {
                go(a, map, fresh, nf);
                go(b, map, fresh, nf);
            }
            Constraint::Exists(x, body) => {
                let y = fresh.next_var();
                let mut inner = map.clone();
                inner.insert(x.clone(), Term::Var(y.clone()));
                nf.vars.push(y);
                go(body, &inner, fresh, nf);
            }
            Constraint::Soft(pc, a) => nf.items.push((pc.substitute(map), a.clone())),
        }
    }
    go(c, &Subst::new(), fresh, &mut nf);
    nf
}

// ---------------------------------------------------------------------------
// Alpha-invariant keys

/// A printed form of a process in which bound variables are replaced by
/// their binder depth, so alpha-equivalent processes share a key.
pub fn alpha_key(p: &Process) -> String {
    let mut out = String::new();
    let mut bound = Vec::new();
    key_process(p, &mut bound, &mut out);
    out
}

fn key_term(t: &Term, bound: &[Var], out: &mut String) {
    match t {
        Term::Var(v) => match bound.iter().rposition(|b| b == v) {
            Some(i) => out.push_str(&format!("#{i}")),
            None => out.push_str(v.name()),
        },
        Term::Const(c) => out.push_str(c),
        Term::Fun(f, args) => {
            out.push_str(f);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                key_term(a, bound, out);
            }
            out.push(')');
        }
    }
}

pub(crate) fn key_atom(a: &Atom, bound: &[Var], out: &mut String) {
    out.push_str(&a.pred);
    out.push('(');
    for (i, t) in a.args.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        key_term(t, bound, out);
    }
    out.push(')');
}

fn key_constraint(c: &Constraint, bound: &mut Vec<Var>, out: &mut String) {
    match c {
        Constraint::One => out.push('1'),
        Constraint::Tensor(a, b) => {
            out.push('(');
            key_constraint(a, bound, out);
            out.push('*');
            key_constraint(b, bound, out);
            out.push(')');
        }
        Constraint::Exists(x, body) => {
            out.push_str("ex.");
            bound.push(x.clone());
            key_constraint(body, bound, out);
            bound.pop();
        }
        Constraint::Soft(pc, a) => {
            out.push('[');
            for (i, atom) in pc.atoms().iter().enumerate() {
                if i > 0 {
                    out.push('*');
                }
                key_atom(atom, bound, out);
            }
            out.push_str(&format!("]@{a}"));
        }
    }
}

fn key_process(p: &Process, bound: &mut Vec<Var>, out: &mut String) {
    match p {
        Process::Tell(c) => {
            out.push_str("tell ");
            key_constraint(c, bound, out);
        }
        Process::Sum(bs) => {
            out.push('{');
            for (i, b) in bs.iter().enumerate() {
                if i > 0 {
                    out.push('+');
                }
                out.push_str("ask ");
                key_constraint(&b.guard, bound, out);
                out.push_str(" then ");
                key_process(&b.body, bound, out);
            }
            out.push('}');
        }
        Process::Par(a, b) => {
            out.push('(');
            key_process(a, bound, out);
            out.push_str("||");
            key_process(b, bound, out);
            out.push(')');
        }
        Process::Local(x, body) => {
            out.push_str("new.");
            bound.push(x.clone());
            key_process(body, bound, out);
            bound.pop();
        }
        Process::Call(name, args) => {
            out.push_str(name);
            out.push('(');
            for (i, t) in args.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                key_term(t, bound, out);
            }
            out.push(')');
        }
    }
}

pub(crate) fn write_list<T: fmt::Display>(
    f: &mut fmt::Formatter<'_>,
    items: &[T],
    sep: &str,
) -> fmt::Result {
    for (i, x) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(sep)?;
        }
        write!(f, "{x}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semiring::CSemiring;

    fn lvl(t: &str) -> SemiringValue {
        CSemiring::fuzzy().parse_value(t).unwrap()
    }

    fn soft(pred: &str, args: Vec<Term>, l: &str) -> Constraint {
        Constraint::soft(vec![Atom::new(pred, args)], lvl(l)).unwrap()
    }

    fn vars(names: &[&str]) -> BTreeSet<Var> {
        names.iter().map(|n| Var::new(n)).collect()
    }

    #[test]
    fn binders_remove_free_variables() {
        let p = Process::local(
            Var::new("X"),
            Process::Tell(soft("p", vec![Term::var("X"), Term::var("Y")], "0.5")),
        );
        assert_eq!(p.free_vars(), vars(&["Y"]));
        let c = Constraint::exists(Var::new("X"), soft("p", vec![Term::var("X")], "0.5"));
        assert!(c.free_vars().is_empty());
        let call = Process::call(
            "q",
            vec![Term::var("X"), Term::fun("f", vec![Term::var("Y")])],
        );
        assert_eq!(call.free_vars(), vars(&["X", "Y"]));
    }

    #[test]
    fn substitution_replaces_free_occurrences() {
        let p = Process::Tell(soft("p", vec![Term::var("Y")], "0.5"));
        let q = p.substitute(&single(&Var::new("Y"), Term::constant("t")));
        assert_eq!(
            q,
            Process::Tell(soft("p", vec![Term::constant("t")], "0.5"))
        );

        let call = Process::call("q", vec![Term::var("X")]);
        let fx = Term::fun("f", vec![Term::var("X")]);
        assert_eq!(
            call.substitute(&single(&Var::new("X"), fx.clone())),
            Process::call("q", vec![fx])
        );
    }

    #[test]
    fn substitution_avoids_capture() {
        // new Y in tell [p(Y, Z)] with Z := Y renames the binder.
        let p = Process::local(
            Var::new("Y"),
            Process::Tell(soft("p", vec![Term::var("Y"), Term::var("Z")], "0.5")),
        );
        let q = p.substitute(&single(&Var::new("Z"), Term::var("Y")));
        let Process::Local(y2, body) = &q else {
            panic!()
        };
        assert_ne!(y2, &Var::new("Y"));
        assert_eq!(
            **body,
            Process::Tell(soft(
                "p",
                vec![Term::Var(y2.clone()), Term::var("Y")],
                "0.5"
            ))
        );
        assert_eq!(q.free_vars(), vars(&["Y"]));
    }

    #[test]
    fn normalize_collects_items_and_renames_binders() {
        let mut fresh = Fresh::new();
        assert_eq!(normalize(&Constraint::One, &mut fresh).items, vec![]);

        let c = Constraint::tensor(soft("c", vec![], "0.7"), soft("d", vec![], "0.2"));
        let nf = normalize(&c, &mut fresh);
        assert!(nf.vars.is_empty());
        assert_eq!(nf.items.len(), 2);
        assert_eq!(nf.items[0].1, lvl("0.7"));

        let x = Var::new("X");
        let c = Constraint::exists(
            x.clone(),
            Constraint::tensor(
                soft("p", vec![Term::var("X")], "0.5"),
                Constraint::exists(x, soft("q", vec![Term::var("X")], "0.3")),
            ),
        );
        let mut fresh = Fresh::new();
        let nf = normalize(&c, &mut fresh);
        assert_eq!(nf.vars, vec![Var::new("_v0"), Var::new("_v1")]);
        assert_eq!(
            nf.items[0].0.atoms()[0],
            Atom::new("p", vec![Term::var("_v0")])
        );
        assert_eq!(
            nf.items[1].0.atoms()[0],
            Atom::new("q", vec![Term::var("_v1")])
        );
    }

    #[test]
    fn alpha_variants_share_keys() {
        let mk = |x: &str| {
            Process::local(
                Var::new(x),
                Process::Tell(soft("p", vec![Term::var(x), Term::var("Z")], "0.5")),
            )
        };
        assert_eq!(alpha_key(&mk("X")), alpha_key(&mk("W")));
        assert_ne!(alpha_key(&mk("X")), alpha_key(&mk("Z")));
    }

    #[test]
    fn axioms_are_validated() {
        let x = Var::new("X");
        let ok = Axiom::new(
            vec![x.clone()],
            soft("p", vec![Term::var("X")], "0.5"),
            soft("q", vec![Term::var("X")], "1"),
        );
        assert!(ok.is_ok());
        let unclosed = Axiom::new(
            vec![],
            soft("p", vec![Term::var("X")], "0.5"),
            Constraint::One,
        );
        assert_eq!(unclosed, Err(KernelError::AxiomNotClosed(x.clone())));
        let quantified = Axiom::new(
            vec![],
            Constraint::exists(x.clone(), soft("p", vec![Term::var("X")], "0.5")),
            Constraint::One,
        );
        assert_eq!(quantified, Err(KernelError::AxiomQuantified));
        let unrestricted = Axiom::new(
            vec![x.clone()],
            Constraint::One,
            soft("q", vec![Term::var("X")], "1"),
        );
        assert_eq!(unrestricted, Err(KernelError::AxiomNotRangeRestricted(x)));
    }

    #[test]
    fn definitions_must_be_closed() {
        let body = Process::Tell(soft("p", vec![Term::var("Y")], "0.5"));
        assert!(Definition::new("q", vec![Var::new("X")], body.clone()).is_err());
        let d = Definition::new("q", vec![Var::new("Y")], body).unwrap();
        assert_eq!(
            d.instantiate(&[Term::constant("a")]),
            Process::Tell(soft("p", vec![Term::constant("a")], "0.5"))
        );
        assert!(Definition::new(
            "q",
            vec![Var::new("Y"), Var::new("Y")],
            Process::Tell(Constraint::One)
        )
        .is_err());
    }
}
