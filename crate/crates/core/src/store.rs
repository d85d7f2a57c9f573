//! The soft constraint store and its entailment procedure.
//!
//! A store is a growing list of entries, one per told soft item
//! `[A1 * ... * An]_a`, plus the hidden variables introduced by
//! existentials and the equality classes induced by `eq` atoms.
//!
//! Entailment saturates the store under the axioms for a bounded number of
//! rounds, building a table from canonical atoms to their *supports*: sets
//! of sources (base entries or axiom conclusions) whose levels bound the
//! level at which the atom can be concluded. A goal item `[pc]_a` holds when
//! some choice of supports covering `pc` has a bound of at least `a`, where
//! the bound is the glb of the levels (SELL) or their product (SELLS).
//! Distinct sources count once.
//!
//! An axiom instance whose premise items are satisfied contributes its
//! conclusion in two ways, mirroring where the axiom is used relative to the
//! final promotion:
//!
//! * outside it: the conclusion becomes a new source at its declared level;
//! * inside it: the conclusion atoms inherit the union of the premise
//!   supports and the declared level plays no role.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::kernel::{
    normalize, Atom, Axiom, Constraint, FreeVars, Fresh, PreConstraint, Subst, Substitute, Term,
    Var,
};
use crate::semiring::{CSemiring, SemiringError, SemiringValue};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StoreError {
    #[error(transparent)]
    Semiring(#[from] SemiringError),
    #[error("level {level} does not belong to the {semiring} semiring")]
    ForeignLevel {
        level: SemiringValue,
        semiring: CSemiring,
    },
    #[error("equality atom {atom} must be told at level top, not {level}")]
    EqualityBelowTop { atom: Atom, level: SemiringValue },
}

/// Promotion discipline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Target below the glb of the context levels.
    #[default]
    Sell,
    /// Target below the product of the context levels.
    Sells,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Sell => "sell",
            Mode::Sells => "sells",
        }
    }

    /// Combines context levels into the bound a promoted level must not
    /// exceed.
    pub fn bound<'a, I>(self, s: &CSemiring, levels: I) -> Result<SemiringValue, SemiringError>
    where
        I: IntoIterator<Item = &'a SemiringValue>,
    {
        match self {
            Mode::Sell => s.glb(levels),
            Mode::Sells => s.fold_times(levels),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sell" => Ok(Mode::Sell),
            "sells" => Ok(Mode::Sells),
            other => Err(format!("unknown mode `{other}` (expected sell or sells)")),
        }
    }
}

/// Everything entailment depends on besides the store itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntailConfig {
    pub semiring: CSemiring,
    pub mode: Mode,
    pub axioms: Vec<Axiom>,
    /// Forward-chaining rounds.
    pub bound: usize,
}

impl EntailConfig {
    pub const DEFAULT_BOUND: usize = 3;

    pub fn new(semiring: CSemiring, mode: Mode) -> Self {
        EntailConfig {
            semiring,
            mode,
            axioms: Vec::new(),
            bound: Self::DEFAULT_BOUND,
        }
    }

    pub fn with_axioms(mut self, axioms: Vec<Axiom>) -> Self {
        self.axioms = axioms;
        self
    }

    pub fn with_bound(mut self, bound: usize) -> Self {
        self.bound = bound;
        self
    }
}

// ---------------------------------------------------------------------------
// Equality classes

/// Congruence classes over terms induced by told `eq` atoms. The
/// representative of a class is its least term.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EqClasses {
    pairs: Vec<(Term, Term)>,
    rep: BTreeMap<Term, Term>,
}

impl EqClasses {
    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn add(&mut self, lhs: Term, rhs: Term) {
        self.pairs.push((lhs, rhs));
        self.rebuild();
    }

    fn find(&self, t: &Term) -> Term {
        self.rep.get(t).cloned().unwrap_or_else(|| t.clone())
    }

    fn union(&mut self, a: Term, b: Term) {
        let (ra, rb) = (self.find(&a), self.find(&b));
        if ra == rb {
            return;
        }
        let (keep, drop) = if ra < rb { (ra, rb) } else { (rb, ra) };
        for v in self.rep.values_mut() {
            if *v == drop {
                *v = keep.clone();
            }
        }
        self.rep.insert(drop, keep);
    }

    fn rebuild(&mut self) {
        self.rep.clear();
        loop {
            let before = self.rep.clone();
            for (l, r) in self.pairs.clone() {
                let (l, r) = (self.canon(&l), self.canon(&r));
                self.union(l, r);
            }
            if self.rep == before {
                break;
            }
        }
    }

    /// Canonical representative, computed bottom-up.
    pub fn canon(&self, t: &Term) -> Term {
        let inner = match t {
            Term::Fun(f, args) => {
                Term::Fun(f.clone(), args.iter().map(|a| self.canon(a)).collect())
            }
            _ => t.clone(),
        };
        self.find(&inner)
    }

    pub fn canon_atom(&self, a: &Atom) -> Atom {
        if self.rep.is_empty() {
            return a.clone();
        }
        a.map_terms(&mut |t| self.canon(t))
    }

    pub fn same(&self, a: &Term, b: &Term) -> bool {
        self.canon(a) == self.canon(b)
    }

    /// Every term mentioned by a told equality.
    pub fn terms(&self) -> BTreeSet<Term> {
        let mut out = BTreeSet::new();
        for (l, r) in &self.pairs {
            l.subterms_into(&mut out);
            r.subterms_into(&mut out);
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Store

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub id: usize,
    pub atoms: PreConstraint,
    pub level: SemiringValue,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Store {
    entries: Vec<Entry>,
    hidden: BTreeSet<Var>,
    eq: EqClasses,
    fresh: Fresh,
}

impl Store {
    pub fn new() -> Self {
        Store::default()
    }

    /// An empty store whose hidden names avoid `names`.
    pub fn avoiding<'a, I: IntoIterator<Item = &'a Var>>(names: I) -> Self {
        Store {
            fresh: Fresh::avoiding(names),
            ..Store::default()
        }
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn hidden(&self) -> &BTreeSet<Var> {
        &self.hidden
    }

    pub fn eq_classes(&self) -> &EqClasses {
        &self.eq
    }

    pub fn fresh(&mut self) -> &mut Fresh {
        &mut self.fresh
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Functional form of [`Store::tell`].
    pub fn add(&self, c: &Constraint, s: &CSemiring) -> Result<Store, StoreError> {
        let mut next = self.clone();
        next.tell(c, s)?;
        Ok(next)
    }

    /// Adds `c`, returning the hidden variables it introduced. Each soft
    /// item becomes a single entry.
    pub fn tell(&mut self, c: &Constraint, s: &CSemiring) -> Result<Vec<Var>, StoreError> {
        for (pc, level) in c.soft_items() {
            if !s.contains(level) {
                return Err(StoreError::ForeignLevel {
                    level: level.clone(),
                    semiring: *s,
                });
            }
            if let Some(atom) = pc.atoms().iter().find(|a| a.is_eq()) {
                if *level != s.top() {
                    return Err(StoreError::EqualityBelowTop {
                        atom: atom.clone(),
                        level: level.clone(),
                    });
                }
            }
        }
        let nf = normalize(c, &mut self.fresh);
        for (pc, level) in nf.items {
            for a in pc.atoms().iter().filter(|a| a.is_eq()) {
                self.eq.add(a.args[0].clone(), a.args[1].clone());
            }
            self.entries.push(Entry {
                id: self.entries.len(),
                atoms: pc,
                level,
            });
        }
        self.hidden.extend(nf.vars.iter().cloned());
        Ok(nf.vars)
    }

    /// Marks `v` as hidden (used when a `new` binder is opened).
    pub fn hide(&mut self, v: Var) {
        self.fresh.skip_past([&v]);
        self.hidden.insert(v);
    }

    /// `exists hidden. [pc1]_a1 * ... * [pcn]_an`.
    pub fn to_constraint(&self) -> Constraint {
        Constraint::exists_all(
            self.hidden.iter().cloned(),
            Constraint::tensor_all(
                self.entries
                    .iter()
                    .map(|e| Constraint::Soft(e.atoms.clone(), e.level.clone())),
            ),
        )
    }

    /// Renames hidden variables that clash with `avoid`, so a goal mentioning
    /// those names cannot observe them.
    pub fn hide_apart(&self, avoid: &BTreeSet<Var>) -> Store {
        let clashes: Vec<Var> = self.hidden.intersection(avoid).cloned().collect();
        if clashes.is_empty() {
            return self.clone();
        }
        let mut fresh = self.fresh.clone();
        fresh.skip_past(avoid);
        let map: Subst = clashes
            .iter()
            .map(|v| (v.clone(), Term::Var(fresh.next_var())))
            .collect();
        let mut out = Store {
            fresh,
            ..Store::default()
        };
        for e in &self.entries {
            let atoms = e.atoms.substitute(&map);
            for a in atoms.atoms().iter().filter(|a| a.is_eq()) {
                out.eq.add(a.args[0].clone(), a.args[1].clone());
            }
            out.entries.push(Entry {
                id: e.id,
                atoms,
                level: e.level.clone(),
            });
        }
        out.hidden = self
            .hidden
            .iter()
            .map(|v| match map.get(v) {
                Some(Term::Var(w)) => w.clone(),
                _ => v.clone(),
            })
            .collect();
        out
    }

    pub fn saturate(&self, cfg: &EntailConfig) -> Result<Saturation, StoreError> {
        Saturation::build(self, cfg)
    }

    pub fn entails(&self, cfg: &EntailConfig, goal: &Constraint) -> Result<bool, StoreError> {
        self.saturate(cfg)?.entails(goal)
    }

    pub fn entails_traced(
        &self,
        cfg: &EntailConfig,
        goal: &Constraint,
    ) -> Result<(bool, EntailTrace), StoreError> {
        self.saturate(cfg)?.entails_traced(goal)
    }

    /// Best level at which `pc` can be concluded, or `None` without a cover.
    pub fn best_cover(
        &self,
        cfg: &EntailConfig,
        pc: &PreConstraint,
    ) -> Result<Option<SemiringValue>, StoreError> {
        self.saturate(cfg)?.best_cover(pc)
    }

    /// Like [`Store::best_cover`] but `bottom` when nothing covers `pc`.
    pub fn best_level(
        &self,
        cfg: &EntailConfig,
        pc: &PreConstraint,
    ) -> Result<SemiringValue, StoreError> {
        Ok(self
            .best_cover(cfg, pc)?
            .unwrap_or_else(|| cfg.semiring.bottom()))
    }
}

impl fmt::Display for Store {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}@{}", e.atoms, e.level)?;
        }
        f.write_str("}")
    }
}

// ---------------------------------------------------------------------------
// Saturation

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Source {
    Entry(usize),
    /// An axiom conclusion used as a resource of its own.
    Derived(usize),
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Entry(i) => write!(f, "e{i}"),
            Source::Derived(i) => write!(f, "r{i}"),
        }
    }
}

pub type Support = BTreeSet<Source>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivedResource {
    pub atoms: Vec<Atom>,
    pub level: SemiringValue,
}

/// The derived-atom table of a store under a configuration.
#[derive(Debug, Clone)]
pub struct Saturation {
    cfg: EntailConfig,
    eq: EqClasses,
    entry_levels: Vec<SemiringValue>,
    resources: Vec<DerivedResource>,
    table: BTreeMap<Atom, Vec<Support>>,
    rounds: usize,
}

/// Inserts `s` unless a subset is present, dropping supersets of it.
fn insert_minimal(list: &mut Vec<Support>, s: Support) -> bool {
    if list.iter().any(|t| t.is_subset(&s)) {
        return false;
    }
    list.retain(|t| !s.is_subset(t));
    list.push(s);
    true
}

fn match_term(pat: &Term, t: &Term, vars: &BTreeSet<Var>, b: &mut Subst) -> bool {
    match (pat, t) {
        (Term::Var(v), _) if vars.contains(v) => match b.get(v) {
            Some(bound) => bound == t,
            None => {
                b.insert(v.clone(), t.clone());
                true
            }
        },
        (Term::Fun(f, ps), Term::Fun(g, ts)) => {
            f == g
                && ps.len() == ts.len()
                && ps.iter().zip(ts).all(|(p, t)| match_term(p, t, vars, b))
        }
        _ => pat == t,
    }
}

fn match_atom(pat: &Atom, a: &Atom, vars: &BTreeSet<Var>, b: &mut Subst) -> bool {
    pat.pred == a.pred
        && pat.args.len() == a.args.len()
        && pat
            .args
            .iter()
            .zip(&a.args)
            .all(|(p, t)| match_term(p, t, vars, b))
}

impl Saturation {
    fn build(store: &Store, cfg: &EntailConfig) -> Result<Self, StoreError> {
        let mut sat = Saturation {
            cfg: cfg.clone(),
            eq: store.eq.clone(),
            entry_levels: store.entries.iter().map(|e| e.level.clone()).collect(),
            resources: Vec::new(),
            table: BTreeMap::new(),
            rounds: 0,
        };
        for e in &store.entries {
            for a in e.atoms.atoms().iter().filter(|a| !a.is_eq()) {
                let key = sat.eq.canon_atom(a);
                insert_minimal(
                    sat.table.entry(key).or_default(),
                    Support::from([Source::Entry(e.id)]),
                );
            }
        }
        for _ in 0..cfg.bound {
            if !sat.round()? {
                break;
            }
            sat.rounds += 1;
        }
        Ok(sat)
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn table(&self) -> &BTreeMap<Atom, Vec<Support>> {
        &self.table
    }

    pub fn resources(&self) -> &[DerivedResource] {
        &self.resources
    }

    fn level_of(&self, s: Source) -> &SemiringValue {
        match s {
            Source::Entry(i) => &self.entry_levels[i],
            Source::Derived(i) => &self.resources[i].level,
        }
    }

    pub fn bound_of(&self, support: &Support) -> Result<SemiringValue, SemiringError> {
        self.cfg.mode.bound(
            &self.cfg.semiring,
            support.iter().map(|s| self.level_of(*s)),
        )
    }

    fn canon_pattern(&self, t: &Term, vars: &BTreeSet<Var>) -> Term {
        if !vars.iter().any(|v| t.mentions(v)) {
            return self.eq.canon(t);
        }
        match t {
            Term::Fun(f, args) => Term::Fun(
                f.clone(),
                args.iter().map(|a| self.canon_pattern(a, vars)).collect(),
            ),
            _ => t.clone(),
        }
    }

    /// Every binding of `vars` under which each pattern matches a table atom.
    fn matches(&self, patterns: &[Atom], vars: &BTreeSet<Var>) -> Vec<Subst> {
        let patterns: Vec<Atom> = patterns
            .iter()
            .map(|p| p.map_terms(&mut |t| self.canon_pattern(t, vars)))
            .collect();
        let mut out = Vec::new();
        self.match_from(&patterns, vars, Subst::new(), &mut out);
        out
    }

    fn match_from(&self, patterns: &[Atom], vars: &BTreeSet<Var>, b: Subst, out: &mut Vec<Subst>) {
        let Some((first, rest)) = patterns.split_first() else {
            out.push(b);
            return;
        };
        for key in self.table.keys() {
            let mut b2 = b.clone();
            if match_atom(first, key, vars, &mut b2) {
                self.match_from(rest, vars, b2, out);
            }
        }
    }

    /// Minimal supports covering every atom of `atoms`. Equalities are
    /// covered for free when both sides share a class.
    pub fn covers(&self, atoms: &[Atom]) -> Vec<Support> {
        let mut acc: Vec<Support> = vec![Support::new()];
        for a in atoms {
            let options: Vec<Support> = if a.is_eq() {
                if self.eq.same(&a.args[0], &a.args[1]) {
                    vec![Support::new()]
                } else {
                    Vec::new()
                }
            } else {
                self.table
                    .get(&self.eq.canon_atom(a))
                    .cloned()
                    .unwrap_or_default()
            };
            let mut next = Vec::new();
            for base in &acc {
                for o in &options {
                    insert_minimal(&mut next, base.union(o).copied().collect());
                }
            }
            acc = next;
            if acc.is_empty() {
                break;
            }
        }
        acc
    }

    /// Supports for `atoms` whose bound reaches `level`.
    fn covers_at(
        &self,
        atoms: &[Atom],
        level: &SemiringValue,
    ) -> Result<Vec<Support>, SemiringError> {
        let mut out = Vec::new();
        for s in self.covers(atoms) {
            if self.cfg.semiring.leq(level, &self.bound_of(&s)?)? {
                out.push(s);
            }
        }
        Ok(out)
    }

    /// One forward-chaining round; reports whether anything was added.
    fn round(&mut self) -> Result<bool, SemiringError> {
        let mut additions: Vec<(Vec<Atom>, SemiringValue, Vec<Support>)> = Vec::new();
        for ax in &self.cfg.axioms {
            let vars: BTreeSet<Var> = ax.vars.iter().cloned().collect();
            let patterns: Vec<Atom> = ax.premise.atoms().filter(|a| !a.is_eq()).cloned().collect();
            'binding: for binding in self.matches(&patterns, &vars) {
                let (premise, conclusion) = ax.instantiate(&binding);
                let mut combined: Vec<Support> = vec![Support::new()];
                for (pc, level) in premise.soft_items() {
                    let ok = self.covers_at(pc.atoms(), level)?;
                    if ok.is_empty() {
                        continue 'binding;
                    }
                    let mut next = Vec::new();
                    for base in &combined {
                        for s in &ok {
                            insert_minimal(&mut next, base.union(s).copied().collect());
                        }
                    }
                    combined = next;
                }
                for (pc, level) in conclusion.soft_items() {
                    let atoms: Vec<Atom> =
                        pc.atoms().iter().map(|a| self.eq.canon_atom(a)).collect();
                    additions.push((atoms, level.clone(), combined.clone()));
                }
            }
        }
        let mut changed = false;
        for (atoms, level, inherited) in additions {
            let rid = match self
                .resources
                .iter()
                .position(|r| r.atoms == atoms && r.level == level)
            {
                Some(i) => i,
                None => {
                    self.resources.push(DerivedResource {
                        atoms: atoms.clone(),
                        level,
                    });
                    changed = true;
                    self.resources.len() - 1
                }
            };
            for a in &atoms {
                let list = self.table.entry(a.clone()).or_default();
                changed |= insert_minimal(list, Support::from([Source::Derived(rid)]));
                for s in &inherited {
                    changed |= insert_minimal(list, s.clone());
                }
            }
        }
        Ok(changed)
    }

    /// Best bound over all supports covering `pc`.
    pub fn best_cover(&self, pc: &PreConstraint) -> Result<Option<SemiringValue>, StoreError> {
        Ok(self.best_support(pc.atoms())?.map(|(_, v)| v))
    }

    fn best_support(
        &self,
        atoms: &[Atom],
    ) -> Result<Option<(Support, SemiringValue)>, SemiringError> {
        let s = &self.cfg.semiring;
        let mut best: Option<(Support, SemiringValue)> = None;
        for sup in self.covers(atoms) {
            let b = self.bound_of(&sup)?;
            let better = match &best {
                None => true,
                Some((_, cur)) => s.lt(cur, &b)?,
            };
            if better {
                best = Some((sup, b));
            }
        }
        Ok(best)
    }

    pub fn entails(&self, goal: &Constraint) -> Result<bool, StoreError> {
        Ok(self.entails_traced(goal)?.0)
    }

    /// Decides `goal`, searching existential witnesses among the table's
    /// subterms, the equality classes and the goal's own closed terms.
    pub fn entails_traced(&self, goal: &Constraint) -> Result<(bool, EntailTrace), StoreError> {
        let s = self.cfg.semiring;
        for (_, level) in goal.soft_items() {
            if !s.contains(level) {
                return Err(StoreError::ForeignLevel {
                    level: level.clone(),
                    semiring: s,
                });
            }
        }
        let mut avoid = goal.free_vars();
        for a in self.table.keys() {
            a.free_vars_into(&mut avoid);
        }
        let mut fresh = Fresh::with_prefix("_g");
        fresh.skip_past(&avoid);
        let nf = normalize(goal, &mut fresh);
        let vars: BTreeSet<Var> = nf.vars.iter().cloned().collect();

        let patterns: Vec<Atom> = nf
            .items
            .iter()
            .flat_map(|(pc, _)| pc.atoms().iter().filter(|a| !a.is_eq()).cloned())
            .collect();
        let mut bindings = if patterns.is_empty() {
            vec![Subst::new()]
        } else {
            self.matches(&patterns, &vars)
        };
        bindings = self.complete_bindings(bindings, &nf.vars, goal, &mut fresh);

        let mut last: Option<EntailTrace> = None;
        for b in bindings {
            let (ok, trace) = self.check_items(goal, &b, &nf.items)?;
            if ok {
                return Ok((true, trace));
            }
            last.get_or_insert(trace);
        }
        let trace = last.unwrap_or_else(|| EntailTrace {
            goal: goal.to_string(),
            instantiation: BTreeMap::new(),
            items: Vec::new(),
        });
        Ok((false, trace))
    }

    /// Extends partial bindings so that every goal variable is bound.
    fn complete_bindings(
        &self,
        partial: Vec<Subst>,
        vars: &[Var],
        goal: &Constraint,
        fresh: &mut Fresh,
    ) -> Vec<Subst> {
        let needs_more = partial
            .iter()
            .any(|b| vars.iter().any(|v| !b.contains_key(v)));
        if !needs_more {
            return partial;
        }
        let mut pool = BTreeSet::new();
        for a in self.table.keys() {
            a.args.iter().for_each(|t| t.subterms_into(&mut pool));
        }
        pool.extend(self.eq.terms());
        for a in goal.atoms() {
            for t in &a.args {
                let mut sub = BTreeSet::new();
                t.subterms_into(&mut sub);
                pool.extend(
                    sub.into_iter()
                        .filter(|t| t.free_vars().iter().all(|v| !vars.contains(v))),
                );
            }
        }
        pool.insert(Term::Var(fresh.next_var()));
        let pool: Vec<Term> = pool.into_iter().collect();

        let mut out = Vec::new();
        for b in partial {
            let missing: Vec<&Var> = vars.iter().filter(|v| !b.contains_key(*v)).collect();
            let mut stack = vec![b];
            for v in missing {
                stack = stack
                    .into_iter()
                    .flat_map(|b| {
                        pool.iter().map(move |t| {
                            let mut b2 = b.clone();
                            b2.insert(v.clone(), t.clone());
                            b2
                        })
                    })
                    .collect();
            }
            out.extend(stack);
        }
        out
    }

    fn check_items(
        &self,
        goal: &Constraint,
        binding: &Subst,
        items: &[(PreConstraint, SemiringValue)],
    ) -> Result<(bool, EntailTrace), StoreError> {
        let s = &self.cfg.semiring;
        let mut all = true;
        let mut traced = Vec::new();
        for (pc, level) in items {
            let atoms: Vec<Atom> = pc.atoms().iter().map(|a| a.substitute(binding)).collect();
            let supports = self.covers(&atoms);
            let best = self.best_support(&atoms)?;
            let verdict = match &best {
                Some((_, b)) => s.leq(level, b)?,
                None => false,
            };
            all &= verdict;
            traced.push(ItemTrace {
                atoms: atoms.iter().map(ToString::to_string).collect(),
                supports: supports
                    .iter()
                    .map(|sup| sup.iter().map(ToString::to_string).collect())
                    .collect(),
                bound: best.map(|(_, b)| b.to_string()),
                level: level.to_string(),
                verdict,
            });
        }
        Ok((
            all,
            EntailTrace {
                goal: goal.to_string(),
                instantiation: binding
                    .iter()
                    .map(|(k, v)| (k.to_string(), v.to_string()))
                    .collect(),
                items: traced,
            },
        ))
    }
}

/// Diagnostic dump of one entailment decision.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EntailTrace {
    pub goal: String,
    pub instantiation: BTreeMap<String, String>,
    pub items: Vec<ItemTrace>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ItemTrace {
    pub atoms: Vec<String>,
    pub supports: Vec<Vec<String>>,
    /// Best bound over the supports; absent when nothing covers the item.
    pub bound: Option<String>,
    pub level: String,
    pub verdict: bool,
}

impl EntailTrace {
    pub fn to_json(&self) -> Value {
        json!(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atom(p: &str) -> Atom {
        Atom::new(p, vec![])
    }

    fn soft(s: &CSemiring, atoms: &[&str], level: &str) -> Constraint {
        Constraint::soft(
            atoms.iter().map(|a| atom(a)).collect(),
            s.parse_value(level).unwrap(),
        )
        .unwrap()
    }

    fn store(s: &CSemiring, items: &[(&[&str], &str)]) -> Store {
        let mut st = Store::new();
        for (atoms, level) in items {
            st.tell(&soft(s, atoms, level), s).unwrap();
        }
        st
    }

    #[test]
    fn fuzzy_sell_store_from_the_running_example() {
        let s = CSemiring::fuzzy();
        let cfg = EntailConfig::new(s, Mode::Sell);
        let st = store(&s, &[(&["c"], "0.7"), (&["d"], "0.2")]);
        assert!(st.entails(&cfg, &soft(&s, &["c"], "0.3")).unwrap());
        assert!(!st.entails(&cfg, &soft(&s, &["c", "d"], "0.5")).unwrap());
        assert!(st.entails(&cfg, &soft(&s, &["c", "d"], "0.2")).unwrap());
        let pc = PreConstraint::new(vec![atom("c"), atom("d")]).unwrap();
        assert_eq!(st.best_level(&cfg, &pc).unwrap().to_string(), "0.2");
    }

    #[test]
    fn probabilistic_sells_pays_the_product() {
        let s = CSemiring::probabilistic();
        let cfg = EntailConfig::new(s, Mode::Sells);
        let st = store(&s, &[(&["c"], "0.7"), (&["d"], "0.2")]);
        assert!(!st.entails(&cfg, &soft(&s, &["c", "d"], "0.2")).unwrap());
        assert!(st.entails(&cfg, &soft(&s, &["c", "d"], "0.14")).unwrap());
        let pc = PreConstraint::new(vec![atom("c"), atom("d")]).unwrap();
        assert_eq!(st.best_level(&cfg, &pc).unwrap().to_string(), "0.14");
    }

    #[test]
    fn a_single_entry_is_paid_once() {
        let s = CSemiring::probabilistic();
        let cfg = EntailConfig::new(s, Mode::Sells);
        let st = store(&s, &[(&["c"], "0.7")]);
        assert!(st.entails(&cfg, &soft(&s, &["c", "c"], "0.7")).unwrap());
        let bundled = store(&s, &[(&["c", "d"], "0.5")]);
        assert!(bundled
            .entails(&cfg, &soft(&s, &["c", "d"], "0.5"))
            .unwrap());
    }

    #[test]
    fn weighted_sum_of_costs() {
        let s = CSemiring::weighted();
        let cfg = EntailConfig::new(s, Mode::Sells);
        let st = store(&s, &[(&["c1"], "-2"), (&["c2"], "-7")]);
        assert!(st.entails(&cfg, &soft(&s, &["c1", "c2"], "-9")).unwrap());
        assert!(!st.entails(&cfg, &soft(&s, &["c1", "c2"], "-8")).unwrap());
    }

    #[test]
    fn empty_goal_and_empty_store() {
        let s = CSemiring::fuzzy();
        let cfg = EntailConfig::new(s, Mode::Sell);
        assert!(Store::new().entails(&cfg, &Constraint::One).unwrap());
        let pc = PreConstraint::atom(atom("c"));
        assert_eq!(Store::new().best_cover(&cfg, &pc).unwrap(), None);
        assert_eq!(Store::new().best_level(&cfg, &pc).unwrap(), s.bottom());
    }

    #[test]
    fn existentials_become_hidden_variables() {
        let s = CSemiring::fuzzy();
        let x = Var::new("X");
        let c = Constraint::exists(
            x.clone(),
            Constraint::soft(
                vec![Atom::new("p", vec![Term::Var(x)])],
                s.parse_value("0.5").unwrap(),
            )
            .unwrap(),
        );
        let st = Store::new().add(&c, &s).unwrap();
        assert_eq!(
            st.hidden().iter().map(Var::name).collect::<Vec<_>>(),
            vec!["_v0"]
        );
        let cfg = EntailConfig::new(s, Mode::Sell);
        assert!(st.entails(&cfg, &c).unwrap());
        let ground = Constraint::soft(
            vec![Atom::new("p", vec![Term::constant("a")])],
            s.parse_value("0.5").unwrap(),
        )
        .unwrap();
        assert!(!st.entails(&cfg, &ground).unwrap());
    }

    #[test]
    fn axioms_chain_forward() {
        let s = CSemiring::fuzzy();
        let (x, y) = (Var::new("X"), Var::new("Y"));
        let leq = |a: Term, b: Term| Atom::new("leq", vec![a, b]);
        let ax = Axiom::new(
            vec![x.clone(), y.clone()],
            Constraint::soft(vec![leq(Term::var("X"), Term::var("Y"))], s.top()).unwrap(),
            Constraint::soft(
                vec![leq(Term::var("X"), Term::fun("s", vec![Term::var("Y")]))],
                s.top(),
            )
            .unwrap(),
        )
        .unwrap();
        let one = Term::constant("1");
        let two = Term::constant("2");
        let st = Store::new()
            .add(
                &Constraint::soft(vec![leq(one.clone(), two.clone())], s.top()).unwrap(),
                &s,
            )
            .unwrap();
        let cfg = EntailConfig::new(s, Mode::Sell)
            .with_axioms(vec![ax])
            .with_bound(1);
        let sat = st.saturate(&cfg).unwrap();
        let derived = leq(one.clone(), Term::fun("s", vec![two.clone()]));
        let supports = &sat.table()[&derived];
        assert!(supports.contains(&Support::from([Source::Entry(0)])));
        let deeper = leq(one, Term::fun("s", vec![Term::fun("s", vec![two])]));
        assert!(!sat.table().contains_key(&deeper));
        assert!(st
            .saturate(&cfg.clone().with_bound(2))
            .unwrap()
            .table()
            .contains_key(&deeper));
        assert_eq!(st.saturate(&cfg.with_bound(0)).unwrap().table().len(), 1);
    }

    #[test]
    fn equalities_identify_terms() {
        let s = CSemiring::fuzzy();
        let cfg = EntailConfig::new(s, Mode::Sell);
        let (x, y) = (Term::var("X"), Term::var("Y"));
        let mut st = Store::new();
        st.tell(
            &Constraint::soft(vec![Atom::eq(x.clone(), y.clone())], s.top()).unwrap(),
            &s,
        )
        .unwrap();
        st.tell(
            &Constraint::soft(
                vec![Atom::new("p", vec![x.clone()])],
                s.parse_value("0.5").unwrap(),
            )
            .unwrap(),
            &s,
        )
        .unwrap();
        let goal = Constraint::soft(
            vec![Atom::new("p", vec![y.clone()])],
            s.parse_value("0.5").unwrap(),
        )
        .unwrap();
        assert!(st.entails(&cfg, &goal).unwrap());
        let refl =
            Constraint::soft(vec![Atom::eq(Term::var("Z"), Term::var("Z"))], s.top()).unwrap();
        assert!(Store::new().entails(&cfg, &refl).unwrap());
        let low_eq = Constraint::soft(vec![Atom::eq(x, y)], s.parse_value("0.5").unwrap()).unwrap();
        assert!(matches!(
            Store::new().add(&low_eq, &s),
            Err(StoreError::EqualityBelowTop { .. })
        ));
    }

    #[test]
    fn trace_reports_supports_and_bounds() {
        let s = CSemiring::probabilistic();
        let cfg = EntailConfig::new(s, Mode::Sells);
        let st = store(&s, &[(&["c"], "0.7"), (&["d"], "0.2")]);
        let (ok, trace) = st
            .entails_traced(&cfg, &soft(&s, &["c", "d"], "0.2"))
            .unwrap();
        assert!(!ok);
        assert_eq!(trace.items[0].bound.as_deref(), Some("0.14"));
        assert_eq!(
            trace.items[0].supports,
            vec![vec!["e0".to_string(), "e1".to_string()]]
        );
        assert!(!trace.items[0].verdict);
    }
}
