//! Bounded backward proof search.
//!
//! Context formulas banged with an unbounded index live in a set `u`
//! (contraction is implicit and weakening happens at the leaves); the rest
//! is a sorted linear multiset. Invertible steps are applied eagerly and
//! recorded as a unary chain in front of each choice point. Only
//! dereliction consumes depth: every other rule shrinks the goal or the
//! linear context, so the remaining search below a dereliction is finite.

use std::collections::{BTreeSet, HashMap, HashSet};

use super::formula::{Formula, Index, Sequent, Signature};
use super::proof::{PromotionWitness, ProofTree, RuleName};
use crate::kernel::{single, Atom, FreeVars, Subst, Substitute, Term, Var};
use crate::store::Mode;

pub const DEFAULT_DEPTH: usize = 8;
pub const DEFAULT_NODE_BUDGET: usize = 200_000;

/// Name of the constant added to every instantiation pool.
pub const FRESH_CONSTANT: &str = "_k";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProverConfig {
    pub mode: Mode,
    /// Maximum number of derelictions along any branch.
    pub depth: usize,
    /// Maximum number of search states visited.
    pub node_budget: usize,
}

impl ProverConfig {
    pub fn new(mode: Mode, depth: usize) -> Self {
        ProverConfig {
            mode,
            depth,
            node_budget: DEFAULT_NODE_BUDGET,
        }
    }

    pub fn with_budget(mut self, node_budget: usize) -> Self {
        self.node_budget = node_budget;
        self
    }
}

#[derive(Debug, Clone)]
pub struct ProveOutcome {
    pub proof: Option<ProofTree>,
    /// Some branch was cut by the depth bound or the node budget. Only
    /// meaningful when no proof was found.
    pub truncated: bool,
    pub nodes: usize,
}

impl ProveOutcome {
    pub fn proved(&self) -> bool {
        self.proof.is_some()
    }
}

pub fn prove(seq: &Sequent, sig: &Signature, mode: Mode, depth: usize) -> Option<ProofTree> {
    prove_with(seq, sig, ProverConfig::new(mode, depth)).proof
}

pub fn prove_with(seq: &Sequent, sig: &Signature, cfg: ProverConfig) -> ProveOutcome {
    let mut search = Search {
        sig,
        cfg,
        proved: HashMap::new(),
        failed: HashMap::new(),
        path: HashSet::new(),
        nodes: 0,
    };
    let start = State {
        u: BTreeSet::new(),
        lin: {
            let mut v = seq.context.clone();
            v.sort();
            v
        },
        goal: seq.goal.clone(),
        expanded: BTreeSet::new(),
        parts: BTreeSet::new(),
    };
    let result = search.solve(start, cfg.depth);
    let nodes = search.nodes;
    match result {
        Ok(proof) => ProveOutcome {
            proof: Some(proof),
            truncated: false,
            nodes,
        },
        Err(f) => ProveOutcome {
            proof: None,
            truncated: f.truncated,
            nodes,
        },
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct State {
    u: BTreeSet<Formula>,
    lin: Vec<Formula>,
    goal: Formula,
    /// Members of `u` whose body has already been decomposed into `u`.
    expanded: BTreeSet<Formula>,
    /// Members of `u` obtained by such decompositions.
    parts: BTreeSet<Formula>,
}

impl State {
    fn context(&self) -> Vec<Formula> {
        let mut ctx: Vec<Formula> = self.u.iter().cloned().collect();
        ctx.extend(self.lin.iter().cloned());
        ctx.sort();
        ctx
    }

    fn sequent(&self) -> Sequent {
        Sequent {
            context: self.context(),
            goal: self.goal.clone(),
        }
    }

    fn push_lin(&mut self, f: Formula) {
        let pos = self.lin.binary_search(&f).unwrap_or_else(|e| e);
        self.lin.insert(pos, f);
    }

    fn with_goal(&self, goal: Formula) -> State {
        State {
            goal,
            ..self.clone()
        }
    }

    fn with_lin(&self, lin: Vec<Formula>, goal: Formula) -> State {
        State {
            lin,
            goal,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Failure {
    truncated: bool,
    looped: bool,
}

impl Failure {
    fn absorb(&mut self, other: Failure) {
        self.truncated |= other.truncated;
        self.looped |= other.looped;
    }
}

type Outcome = Result<ProofTree, Failure>;

/// Unary steps recorded top-down, closed over the proof of the last
/// premise.
#[derive(Default)]
struct Chain(Vec<(RuleName, Sequent, Option<Term>)>);

impl Chain {
    fn push(&mut self, rule: RuleName, conclusion: Sequent) {
        self.0.push((rule, conclusion, None));
    }

    fn push_term(&mut self, rule: RuleName, conclusion: Sequent, term: Term) {
        self.0.push((rule, conclusion, Some(term)));
    }

    fn close(self, premise: ProofTree) -> ProofTree {
        self.0
            .into_iter()
            .rev()
            .fold(premise, |acc, (rule, conclusion, term)| ProofTree {
                rule,
                conclusion,
                premises: vec![acc],
                witness: None,
                term,
            })
    }

    /// Adds a weakening step for each formula of `drop`, updating `ctx`.
    fn weaken(
        &mut self,
        ctx: &mut Vec<Formula>,
        goal: &Formula,
        drop: impl IntoIterator<Item = Formula>,
    ) {
        for f in drop {
            self.push(RuleName::Weaken, Sequent::new(ctx.clone(), goal.clone()));
            let pos = ctx
                .iter()
                .position(|g| *g == f)
                .expect("weakened formula is present");
            ctx.remove(pos);
        }
    }

    /// Adds a contraction step for each formula of `copy`, updating `ctx`.
    fn contract<'a>(
        &mut self,
        ctx: &mut Vec<Formula>,
        goal: &Formula,
        copy: impl IntoIterator<Item = &'a Formula>,
    ) {
        for f in copy {
            self.push(RuleName::Contract, Sequent::new(ctx.clone(), goal.clone()));
            ctx.push(f.clone());
        }
    }
}

fn fresh_eigen(avoid: &BTreeSet<Var>) -> Var {
    (0..)
        .map(|n| Var::new(&format!("_e{n}")))
        .find(|v| !avoid.contains(v))
        .expect("unbounded supply")
}

fn remove_one(ctx: &mut Vec<Formula>, f: &Formula) {
    let pos = ctx.iter().position(|g| g == f).expect("formula is present");
    ctx.remove(pos);
}

/// All ways of splitting a sorted multiset in two, without repeats.
fn splits(lin: &[Formula]) -> Vec<(Vec<Formula>, Vec<Formula>)> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for mask in 0u32..(1 << lin.len()) {
        let (mut left, mut right) = (Vec::new(), Vec::new());
        for (i, f) in lin.iter().enumerate() {
            if mask & (1 << i) != 0 {
                left.push(f.clone());
            } else {
                right.push(f.clone());
            }
        }
        if seen.insert(left.clone()) {
            out.push((left, right));
        }
    }
    out
}

fn strip_foralls(f: &Formula) -> (Vec<Var>, &Formula) {
    let mut vars = Vec::new();
    let mut cur = f;
    while let Formula::Forall(x, body) = cur {
        vars.push(x.clone());
        cur = body;
    }
    (vars, cur)
}

fn match_term(pat: &Term, t: &Term, vars: &BTreeSet<Var>, sub: &mut Subst) -> bool {
    match pat {
        Term::Var(x) if vars.contains(x) => match sub.get(x) {
            Some(bound) => bound == t,
            None => {
                sub.insert(x.clone(), t.clone());
                true
            }
        },
        Term::Fun(f, args) => match t {
            Term::Fun(g, targs) if f == g && args.len() == targs.len() => args
                .iter()
                .zip(targs)
                .all(|(p, q)| match_term(p, q, vars, sub)),
            _ => false,
        },
        _ => pat == t,
    }
}

fn match_atom(pat: &Atom, a: &Atom, vars: &BTreeSet<Var>) -> Option<Subst> {
    if pat.pred != a.pred || pat.args.len() != a.args.len() {
        return None;
    }
    let mut sub = Subst::new();
    pat.args
        .iter()
        .zip(&a.args)
        .all(|(p, t)| match_term(p, t, vars, &mut sub))
        .then_some(sub)
}

struct Search<'a> {
    sig: &'a Signature,
    cfg: ProverConfig,
    proved: HashMap<State, ProofTree>,
    /// Failed states with the depth they were explored at.
    failed: HashMap<State, (usize, bool)>,
    path: HashSet<State>,
    nodes: usize,
}

impl Search<'_> {
    fn eager_left(&self, f: &Formula) -> bool {
        match f {
            Formula::One | Formula::Tensor(..) | Formula::Exists(..) => true,
            Formula::Bang(i, _) => self.sig.unbounded(i),
            _ => false,
        }
    }

    fn safe_body(&self, f: &Formula) -> bool {
        match f {
            Formula::One => true,
            Formula::Tensor(a, b) => self.safe_body(a) && self.safe_body(b),
            Formula::Exists(_, b) => self.safe_body(b),
            Formula::Bang(i, _) => self.sig.unbounded(i),
            _ => false,
        }
    }

    /// An unbounded formula whose dereliction only yields more unbounded
    /// formulas; decomposing it once is enough.
    fn is_safe(&self, f: &Formula) -> bool {
        matches!(f, Formula::Bang(i, b) if self.sig.unbounded(i) && self.safe_body(b))
    }

    fn normalize(&self, mut st: State, chain: &mut Chain) -> State {
        let mut expanding = false;
        loop {
            if let Some(pos) = st.lin.iter().position(|f| self.eager_left(f)) {
                let concl = st.sequent();
                let f = st.lin.remove(pos);
                match f {
                    Formula::One => chain.push(RuleName::OneL, concl),
                    Formula::Tensor(a, b) => {
                        chain.push(RuleName::TensorL, concl);
                        st.push_lin(*a);
                        st.push_lin(*b);
                    }
                    Formula::Exists(x, body) => {
                        let y = fresh_eigen(&concl.free_vars());
                        st.push_lin(body.substitute(&single(&x, Term::Var(y.clone()))));
                        chain.push_term(RuleName::ExistsL, concl, Term::Var(y));
                    }
                    bang => {
                        if st.u.contains(&bang) {
                            chain.push(RuleName::Weaken, concl);
                        } else {
                            if expanding {
                                st.parts.insert(bang.clone());
                            }
                            st.u.insert(bang);
                        }
                    }
                }
                continue;
            }
            match st.goal.clone() {
                Formula::Lolli(a, b) => {
                    chain.push(RuleName::LolliR, st.sequent());
                    st.push_lin(*a);
                    st.goal = *b;
                    continue;
                }
                Formula::Forall(x, body) => {
                    let concl = st.sequent();
                    let y = fresh_eigen(&concl.free_vars());
                    st.goal = body.substitute(&single(&x, Term::Var(y.clone())));
                    chain.push_term(RuleName::ForallR, concl, Term::Var(y));
                    continue;
                }
                _ => {}
            }
            let next =
                st.u.iter()
                    .find(|f| !st.expanded.contains(*f) && self.is_safe(f))
                    .cloned();
            if let Some(f) = next {
                let concl = st.sequent();
                let mut ctx = concl.context.clone();
                ctx.push(f.clone());
                chain.push(RuleName::Contract, concl);
                chain.push(RuleName::BangL, Sequent::new(ctx, st.goal.clone()));
                let Formula::Bang(_, body) = &f else {
                    unreachable!("safe formulas are banged")
                };
                st.push_lin((**body).clone());
                st.expanded.insert(f);
                expanding = true;
                continue;
            }
            return st;
        }
    }

    fn solve(&mut self, st: State, depth: usize) -> Outcome {
        let mut chain = Chain::default();
        let st = self.normalize(st, &mut chain);
        self.solve_normal(st, depth).map(|t| chain.close(t))
    }

    fn solve_normal(&mut self, st: State, depth: usize) -> Outcome {
        self.nodes += 1;
        if self.nodes > self.cfg.node_budget {
            return Err(Failure {
                truncated: true,
                looped: false,
            });
        }
        if let Some(t) = self.proved.get(&st) {
            return Ok(t.clone());
        }
        if let Some(&(d, truncated)) = self.failed.get(&st) {
            if !truncated || depth <= d {
                return Err(Failure {
                    truncated,
                    looped: false,
                });
            }
        }
        if self.path.contains(&st) {
            return Err(Failure {
                truncated: false,
                looped: true,
            });
        }
        self.path.insert(st.clone());
        let result = self.step(&st, depth);
        self.path.remove(&st);
        match &result {
            Ok(t) => {
                self.proved.insert(st, t.clone());
            }
            Err(f) if !f.looped => {
                self.failed.insert(st, (depth, f.truncated));
            }
            Err(_) => {}
        }
        result
    }

    fn step(&mut self, st: &State, depth: usize) -> Outcome {
        match &st.goal {
            Formula::Top => return Ok(ProofTree::leaf(RuleName::TopR, st.sequent())),
            Formula::With(fs) => {
                let mut premises = Vec::with_capacity(fs.len());
                for f in fs {
                    premises.push(self.solve(st.with_goal(f.clone()), depth)?);
                }
                return Ok(ProofTree::node(RuleName::WithR, st.sequent(), premises));
            }
            _ => {}
        }
        let mut fail = Failure::default();
        if let Some(t) = self.leaf(st) {
            return Ok(t);
        }
        macro_rules! attempt {
            ($e:expr) => {
                match $e {
                    Ok(t) => return Ok(t),
                    Err(f) => fail.absorb(f),
                }
            };
        }
        attempt!(self.right(st, depth));
        attempt!(self.left_linear(st, depth));
        attempt!(self.left_unbounded(st, depth));
        Err(fail)
    }

    fn leaf(&self, st: &State) -> Option<ProofTree> {
        let goal = &st.goal;
        let mut chain = Chain::default();
        let mut ctx = st.context();
        match goal {
            Formula::Atom(a) => {
                if st.lin.len() == 1 && st.lin[0] == *goal {
                    chain.weaken(&mut ctx, goal, st.u.iter().cloned());
                    return Some(chain.close(ProofTree::leaf(
                        RuleName::Init,
                        Sequent::new(ctx, goal.clone()),
                    )));
                }
                if !st.lin.is_empty() {
                    return None;
                }
                if a.is_eq() && a.args.len() == 2 && a.args[0] == a.args[1] {
                    chain.weaken(&mut ctx, goal, st.u.iter().cloned());
                    return Some(chain.close(ProofTree::leaf(
                        RuleName::Refl,
                        Sequent::new(ctx, goal.clone()),
                    )));
                }
                let source =
                    st.u.iter()
                        .find(|f| matches!(f, Formula::Bang(_, b) if **b == *goal))?;
                chain.weaken(
                    &mut ctx,
                    goal,
                    st.u.iter().filter(|f| *f != source).cloned(),
                );
                let init = ProofTree::leaf(
                    RuleName::Init,
                    Sequent::new(vec![goal.clone()], goal.clone()),
                );
                let bang =
                    ProofTree::node(RuleName::BangL, Sequent::new(ctx, goal.clone()), vec![init]);
                Some(chain.close(bang))
            }
            Formula::One if st.lin.is_empty() => {
                chain.weaken(&mut ctx, goal, st.u.iter().cloned());
                Some(chain.close(ProofTree::leaf(
                    RuleName::OneR,
                    Sequent::new(ctx, goal.clone()),
                )))
            }
            _ => None,
        }
    }

    /// Terms to try for a quantifier: those suggested by matching `pats`
    /// against context atoms first, then the rest of the pool.
    fn candidates(&self, st: &State, vars: &[Var], pats: &[(&Atom, bool)]) -> Vec<Subst> {
        let seq = st.sequent();
        let free = seq.free_vars();
        let var_set: BTreeSet<Var> = vars.iter().cloned().collect();
        let mut left_atoms = Vec::new();
        st.u.iter()
            .chain(&st.lin)
            .for_each(|f| f.atoms_into(&mut left_atoms));
        let mut goal_atoms = Vec::new();
        st.goal.atoms_into(&mut goal_atoms);
        let mut suggested: Vec<Vec<Term>> = vec![Vec::new(); vars.len()];
        for (pat, against_goal) in pats {
            let targets = if *against_goal {
                &goal_atoms
            } else {
                &left_atoms
            };
            for a in targets {
                let Some(sub) = match_atom(pat, a, &var_set) else {
                    continue;
                };
                for (i, v) in vars.iter().enumerate() {
                    if let Some(t) = sub.get(v) {
                        if t.free_vars().is_subset(&free) && !suggested[i].contains(t) {
                            suggested[i].push(t.clone());
                        }
                    }
                }
            }
        }
        let mut pool: Vec<Term> = seq.terms().into_iter().collect();
        let k = Term::constant(FRESH_CONSTANT);
        if !pool.contains(&k) {
            pool.push(k);
        }
        let per_var: Vec<Vec<Term>> = suggested
            .into_iter()
            .map(|mut s| {
                for t in &pool {
                    if !s.contains(t) {
                        s.push(t.clone());
                    }
                }
                s
            })
            .collect();
        let mut out = vec![Subst::new()];
        for (v, terms) in vars.iter().zip(per_var) {
            out = out
                .into_iter()
                .flat_map(|sub| {
                    terms.iter().map(move |t| {
                        let mut s = sub.clone();
                        s.insert(v.clone(), t.clone());
                        s
                    })
                })
                .collect();
        }
        out
    }

    fn right(&mut self, st: &State, depth: usize) -> Outcome {
        let mut fail = Failure::default();
        match st.goal.clone() {
            Formula::Tensor(a, b) => {
                for (l, r) in splits(&st.lin) {
                    let mut chain = Chain::default();
                    let mut ctx = st.context();
                    chain.contract(&mut ctx, &st.goal, &st.u);
                    let left = match self.solve(st.with_lin(l, (*a).clone()), depth) {
                        Ok(t) => t,
                        Err(f) => {
                            fail.absorb(f);
                            continue;
                        }
                    };
                    match self.solve(st.with_lin(r, (*b).clone()), depth) {
                        Ok(right) => {
                            let node = ProofTree::node(
                                RuleName::TensorR,
                                Sequent::new(ctx, st.goal.clone()),
                                vec![left, right],
                            );
                            return Ok(chain.close(node));
                        }
                        Err(f) => fail.absorb(f),
                    }
                }
            }
            Formula::Exists(x, body) => {
                let mut pats = Vec::new();
                body.atoms_into(&mut pats);
                let pats: Vec<_> = pats.into_iter().map(|a| (a, false)).collect();
                for sub in self.candidates(st, std::slice::from_ref(&x), &pats) {
                    let t = sub[&x].clone();
                    match self.solve(st.with_goal(body.substitute(&sub)), depth) {
                        Ok(p) => {
                            let node = ProofTree::node(RuleName::ExistsR, st.sequent(), vec![p])
                                .with_term(t);
                            return Ok(node);
                        }
                        Err(f) => fail.absorb(f),
                    }
                }
            }
            Formula::Bang(target, body) => {
                let mut lin_indices = Vec::new();
                for f in &st.lin {
                    match f {
                        Formula::Bang(i, _) => lin_indices.push(i.clone()),
                        _ => return Err(fail),
                    }
                }
                for keep in self.promotion_sets(st, &target, &lin_indices) {
                    let mut chain = Chain::default();
                    let mut ctx = st.context();
                    chain.weaken(
                        &mut ctx,
                        &st.goal,
                        st.u.iter().filter(|f| !keep.contains(*f)).cloned(),
                    );
                    let premise = State {
                        u: keep.clone(),
                        lin: st.lin.clone(),
                        goal: (*body).clone(),
                        expanded: BTreeSet::new(),
                        parts: BTreeSet::new(),
                    };
                    match self.solve(premise, depth) {
                        Ok(p) => {
                            let mut indices: Vec<Index> = lin_indices.clone();
                            indices.extend(keep.iter().filter_map(|f| match f {
                                Formula::Bang(i, _) => Some(i.clone()),
                                _ => None,
                            }));
                            indices.sort();
                            let (rule, bound) = match self.cfg.mode {
                                Mode::Sell => (RuleName::BangR, self.sig.meet(&indices)),
                                Mode::Sells => (RuleName::BangRS, self.sig.fold_times(&indices)),
                            };
                            let node = ProofTree {
                                rule,
                                conclusion: Sequent::new(ctx, st.goal.clone()),
                                premises: vec![p],
                                witness: Some(PromotionWitness {
                                    context: indices,
                                    target: target.clone(),
                                    bound,
                                }),
                                term: None,
                            };
                            return Ok(chain.close(node));
                        }
                        Err(f) => fail.absorb(f),
                    }
                }
            }
            _ => {}
        }
        Err(fail)
    }

    /// Maximal sets of unbounded formulas that may stay in the context of a
    /// promotion to `target`, given the indices of the linear context.
    fn promotion_sets(
        &self,
        st: &State,
        target: &Index,
        lin_indices: &[Index],
    ) -> Vec<BTreeSet<Formula>> {
        let index = |f: &Formula| match f {
            Formula::Bang(i, _) => i.clone(),
            _ => unreachable!("unbounded context formulas are banged"),
        };
        let eligible: Vec<&Formula> =
            st.u.iter()
                .filter(|f| !st.parts.contains(*f) && self.sig.leq(target, &index(f)))
                .collect();
        let feasible = |set: &[&Formula]| {
            let mut indices: Vec<Index> = lin_indices.to_vec();
            indices.extend(set.iter().map(|f| index(f)));
            self.sig.check_promotion(&indices, target, self.cfg.mode)
        };
        match self.cfg.mode {
            Mode::Sell => {
                if feasible(&eligible) {
                    vec![eligible.into_iter().cloned().collect()]
                } else {
                    Vec::new()
                }
            }
            Mode::Sells => {
                let top = self.sig.top_level();
                let (units, rest): (Vec<&Formula>, Vec<&Formula>) = eligible
                    .into_iter()
                    .partition(|f| matches!(index(f), Index::TopC) || index(f) == top);
                let mut found: Vec<u32> = Vec::new();
                let mut masks: Vec<u32> = (0u32..(1 << rest.len())).collect();
                masks.sort_by_key(|m| std::cmp::Reverse(m.count_ones()));
                for mask in masks {
                    if found.iter().any(|m| m & mask == mask) {
                        continue;
                    }
                    let mut set = units.clone();
                    set.extend(
                        rest.iter()
                            .enumerate()
                            .filter(|(i, _)| mask & (1 << i) != 0)
                            .map(|(_, f)| *f),
                    );
                    if feasible(&set) {
                        found.push(mask);
                    }
                }
                found
                    .into_iter()
                    .map(|mask| {
                        let mut set: BTreeSet<Formula> =
                            units.iter().map(|f| (*f).clone()).collect();
                        set.extend(
                            rest.iter()
                                .enumerate()
                                .filter(|(i, _)| mask & (1 << i) != 0)
                                .map(|(_, f)| (*f).clone()),
                        );
                        set
                    })
                    .collect()
            }
        }
    }

    fn left_linear(&mut self, st: &State, depth: usize) -> Outcome {
        let mut fail = Failure::default();
        let mut seen = BTreeSet::new();
        for (pos, f) in st.lin.iter().enumerate() {
            if !seen.insert(f) {
                continue;
            }
            let mut rest = st.lin.clone();
            rest.remove(pos);
            let concl = st.sequent();
            match f {
                Formula::Bang(_, body) => {
                    if depth == 0 {
                        fail.truncated = true;
                        continue;
                    }
                    let mut next = st.with_lin(rest, st.goal.clone());
                    next.push_lin((**body).clone());
                    match self.solve(next, depth - 1) {
                        Ok(p) => return Ok(ProofTree::node(RuleName::BangL, concl, vec![p])),
                        Err(e) => fail.absorb(e),
                    }
                }
                Formula::With(fs) => {
                    for alt in fs {
                        let mut next = st.with_lin(rest.clone(), st.goal.clone());
                        next.push_lin(alt.clone());
                        match self.solve(next, depth) {
                            Ok(p) => return Ok(ProofTree::node(RuleName::WithL, concl, vec![p])),
                            Err(e) => fail.absorb(e),
                        }
                    }
                }
                Formula::Lolli(a, b) => {
                    let mut chain = Chain::default();
                    let mut ctx = concl.context.clone();
                    chain.contract(&mut ctx, &st.goal, &st.u);
                    match self.lolli_left(st, &rest, a, b, depth) {
                        Ok(node) => {
                            let node = ProofTree {
                                conclusion: Sequent::new(ctx, st.goal.clone()),
                                ..node
                            };
                            return Ok(chain.close(node));
                        }
                        Err(e) => fail.absorb(e),
                    }
                }
                Formula::Forall(x, body) => {
                    let mut pats = Vec::new();
                    body.atoms_into(&mut pats);
                    let pats: Vec<_> = pats.into_iter().map(|a| (a, false)).collect();
                    for sub in self.candidates(st, std::slice::from_ref(x), &pats) {
                        let t = sub[x].clone();
                        let mut next = st.with_lin(rest.clone(), st.goal.clone());
                        next.push_lin(body.substitute(&sub));
                        match self.solve(next, depth) {
                            Ok(p) => {
                                return Ok(ProofTree::node(
                                    RuleName::ForallL,
                                    concl.clone(),
                                    vec![p],
                                )
                                .with_term(t))
                            }
                            Err(e) => fail.absorb(e),
                        }
                    }
                }
                _ => {}
            }
        }
        Err(fail)
    }

    /// `lolli_L` on `a -o b` with the other linear formulas `rest`; both
    /// premises receive a copy of `u`. The returned node's conclusion is
    /// a placeholder for the caller to fill in.
    fn lolli_left(
        &mut self,
        st: &State,
        rest: &[Formula],
        a: &Formula,
        b: &Formula,
        depth: usize,
    ) -> Outcome {
        let mut fail = Failure::default();
        for (l, r) in splits(rest) {
            let left = match self.solve(st.with_lin(l, a.clone()), depth) {
                Ok(t) => t,
                Err(f) => {
                    fail.absorb(f);
                    continue;
                }
            };
            let mut right_state = st.with_lin(r, st.goal.clone());
            right_state.push_lin(b.clone());
            match self.solve(right_state, depth) {
                Ok(right) => {
                    return Ok(ProofTree::node(
                        RuleName::LolliL,
                        st.sequent(),
                        vec![left, right],
                    ))
                }
                Err(f) => fail.absorb(f),
            }
        }
        Err(fail)
    }

    fn left_unbounded(&mut self, st: &State, depth: usize) -> Outcome {
        let mut fail = Failure::default();
        for f in &st.u {
            let Formula::Bang(_, body) = f else { continue };
            if matches!(**body, Formula::Atom(_)) || self.is_safe(f) {
                continue;
            }
            if depth == 0 {
                fail.truncated = true;
                continue;
            }
            let concl = st.sequent();
            let mut ctx = concl.context.clone();
            let mut chain = Chain::default();
            chain.contract(&mut ctx, &st.goal, [f]);
            chain.push(RuleName::BangL, Sequent::new(ctx.clone(), st.goal.clone()));
            remove_one(&mut ctx, f);
            let (vars, matrix) = strip_foralls(body);
            if let Formula::Lolli(a, b) = matrix {
                let result = self.use_implication(st, body, &vars, a, b, chain, ctx, depth - 1);
                match result {
                    Ok(t) => return Ok(t),
                    Err(e) => fail.absorb(e),
                }
                continue;
            }
            ctx.push((**body).clone());
            let mut next = st.clone();
            next.push_lin((**body).clone());
            match self.solve(next, depth - 1) {
                Ok(p) => return Ok(chain.close(p)),
                Err(e) => fail.absorb(e),
            }
        }
        Err(fail)
    }

    /// Uses a derelicted copy of `all vars. a -o b`: instantiates the
    /// quantifiers, copies `u` for both premises and applies `lolli_L`.
    /// `ctx` is the explicit context without the derelicted copy.
    #[allow(clippy::too_many_arguments)]
    fn use_implication(
        &mut self,
        st: &State,
        body: &Formula,
        vars: &[Var],
        a: &Formula,
        b: &Formula,
        chain: Chain,
        ctx: Vec<Formula>,
        depth: usize,
    ) -> Outcome {
        let mut fail = Failure::default();
        let mut pats = Vec::new();
        a.atoms_into(&mut pats);
        let mut pats: Vec<(&Atom, bool)> = pats.into_iter().map(|x| (x, false)).collect();
        let mut concl_atoms = Vec::new();
        b.atoms_into(&mut concl_atoms);
        pats.extend(concl_atoms.into_iter().map(|x| (x, true)));
        let current = self.state_key(st);
        for sub in self.candidates(st, vars, &pats) {
            let a_inst = a.substitute(&sub);
            let b_inst = b.substitute(&sub);
            // Premise two restates the current sequent when `b` adds nothing.
            let mut right_probe = st.clone();
            right_probe.push_lin(b_inst.clone());
            if self.state_key(&right_probe) == current {
                continue;
            }
            let mut steps = Chain(chain.0.clone());
            let mut cur_ctx = ctx.clone();
            let mut instance = body.clone();
            cur_ctx.push(instance.clone());
            for v in vars {
                let Formula::Forall(x, inner) = &instance else {
                    unreachable!("quantifier prefix")
                };
                let t = sub[v].clone();
                steps.push_term(
                    RuleName::ForallL,
                    Sequent::new(cur_ctx.clone(), st.goal.clone()),
                    t.clone(),
                );
                let next = inner.substitute(&single(x, t));
                remove_one(&mut cur_ctx, &instance);
                cur_ctx.push(next.clone());
                instance = next;
            }
            steps.contract(&mut cur_ctx, &st.goal, &st.u);
            let rest = st.lin.clone();
            match self.lolli_left(st, &rest, &a_inst, &b_inst, depth) {
                Ok(node) => {
                    let node = ProofTree {
                        conclusion: Sequent::new(cur_ctx, st.goal.clone()),
                        ..node
                    };
                    return Ok(steps.close(node));
                }
                Err(e) => fail.absorb(e),
            }
        }
        Err(fail)
    }

    fn state_key(&self, st: &State) -> State {
        let mut chain = Chain::default();
        self.normalize(st.clone(), &mut chain)
    }
}

impl Clone for Chain {
    fn clone(&self) -> Self {
        Chain(self.0.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prover::validate::validate_for;
    use crate::semiring::CSemiring;

    fn atom(p: &str) -> Formula {
        Formula::Atom(Atom::new(p, vec![]))
    }

    fn lvl(s: &CSemiring, t: &str) -> Index {
        Index::Level(s.parse_value(t).unwrap())
    }

    fn check(seq: &Sequent, s: CSemiring, mode: Mode, depth: usize) -> Option<ProofTree> {
        let sig = Signature::new(s);
        let proof = prove(seq, &sig, mode, depth);
        if let Some(p) = &proof {
            validate_for(p, seq, &sig, mode).unwrap();
        }
        proof
    }

    #[test]
    fn one_is_provable_from_nothing() {
        let seq = Sequent::new(vec![], Formula::One);
        let p = check(&seq, CSemiring::fuzzy(), Mode::Sell, 0).unwrap();
        assert_eq!(p.rule, RuleName::OneR);
    }

    #[test]
    fn classical_bundle_proves_weaker_tensor() {
        let s = CSemiring::fuzzy();
        let (a, b) = (lvl(&s, "0.3"), lvl(&s, "0.8"));
        let top = Index::Level(s.top());
        let ctx = vec![Formula::bang(
            top,
            Formula::tensor(
                Formula::bang(b.clone(), atom("c")),
                Formula::bang(b.clone(), atom("d")),
            ),
        )];
        let goal = Formula::tensor(Formula::bang(a, atom("c")), Formula::bang(b, atom("d")));
        for mode in [Mode::Sell, Mode::Sells] {
            assert!(check(&Sequent::new(ctx.clone(), goal.clone()), s, mode, 2).is_some());
        }
    }

    #[test]
    fn fuzzy_promotion_cannot_weaken_low_entry() {
        let s = CSemiring::fuzzy();
        let ctx = vec![
            Formula::bang(lvl(&s, "0.7"), atom("c")),
            Formula::bang(lvl(&s, "0.2"), atom("d")),
        ];
        let half = lvl(&s, "0.5");
        let goal = Formula::bang(
            half.clone(),
            Formula::tensor(
                Formula::bang(half.clone(), atom("c")),
                Formula::bang(half, atom("d")),
            ),
        );
        let seq = Sequent::new(ctx, goal);
        let out = prove_with(&seq, &Signature::new(s), ProverConfig::new(Mode::Sell, 4));
        assert!(out.proof.is_none());
        assert!(!out.truncated);
    }

    #[test]
    fn probabilistic_product_split() {
        let s = CSemiring::probabilistic();
        let ctx = vec![
            Formula::bang(lvl(&s, "0.7"), atom("c")),
            Formula::bang(lvl(&s, "0.2"), atom("d")),
        ];
        let goal = |t: &str| {
            let l = lvl(&s, t);
            Formula::bang(
                l.clone(),
                Formula::tensor(
                    Formula::bang(l.clone(), atom("c")),
                    Formula::bang(l, atom("d")),
                ),
            )
        };
        let sells =
            |t: &str| check(&Sequent::new(ctx.clone(), goal(t)), s, Mode::Sells, 4).is_some();
        assert!(sells("0.14"));
        assert!(sells("0.1"));
        assert!(!sells("0.15"));
        assert!(!sells("0.2"));
        assert!(check(&Sequent::new(ctx.clone(), goal("0.2")), s, Mode::Sell, 4).is_some());
    }

    #[test]
    fn empty_context_does_not_prove_banged_atom() {
        let s = CSemiring::fuzzy();
        let seq = Sequent::new(vec![], Formula::bang(lvl(&s, "0.5"), atom("c")));
        let out = prove_with(&seq, &Signature::new(s), ProverConfig::new(Mode::Sell, 3));
        assert!(out.proof.is_none() && !out.truncated);
    }

    #[test]
    fn axiom_use_with_instantiation() {
        let s = CSemiring::fuzzy();
        let x = Var::new("X");
        let c = |t: Term| Formula::Atom(Atom::new("c", vec![t]));
        let d = |t: Term| Formula::Atom(Atom::new("d", vec![t]));
        let top = Index::Level(s.top());
        let l = lvl(&s, "0.6");
        let axiom = Formula::bang(
            top,
            Formula::forall(
                x.clone(),
                Formula::lolli(
                    Formula::bang(l.clone(), c(Term::Var(x.clone()))),
                    Formula::bang(l.clone(), d(Term::Var(x))),
                ),
            ),
        );
        let ctx = vec![axiom, Formula::bang(lvl(&s, "0.9"), c(Term::constant("a")))];
        let goal = Formula::bang(l.clone(), d(Term::constant("a")));
        for mode in [Mode::Sell, Mode::Sells] {
            let p = check(&Sequent::new(ctx.clone(), goal.clone()), s, mode, 2).unwrap();
            assert!(p.count_rule(RuleName::LolliL) == 1);
        }
        // The conclusion level only matters outside the final promotion.
        let above = Formula::bang(lvl(&s, "0.7"), d(Term::constant("a")));
        assert!(check(&Sequent::new(ctx.clone(), above), s, Mode::Sell, 2).is_some());
        let mut weak = ctx;
        weak[1] = Formula::bang(lvl(&s, "0.5"), c(Term::constant("a")));
        let low = Formula::bang(lvl(&s, "0.3"), d(Term::constant("a")));
        let out = prove_with(
            &Sequent::new(weak, low),
            &Signature::new(s),
            ProverConfig::new(Mode::Sell, 6),
        );
        assert!(out.proof.is_none());
        assert!(!out.truncated);
    }

    #[test]
    fn existential_goal_uses_context_terms() {
        let s = CSemiring::crisp();
        let top = Index::Level(s.top());
        let x = Var::new("X");
        let ctx = vec![Formula::bang(
            top.clone(),
            Formula::Atom(Atom::new("c", vec![Term::constant("a")])),
        )];
        let goal = Formula::exists(
            x.clone(),
            Formula::bang(top, Formula::Atom(Atom::new("c", vec![Term::Var(x)]))),
        );
        let p = check(&Sequent::new(ctx, goal), s, Mode::Sell, 1).unwrap();
        assert_eq!(p.term, Some(Term::constant("a")));
    }

    #[test]
    fn linear_atom_cannot_be_weakened() {
        let seq = Sequent::new(vec![atom("c"), atom("d")], atom("c"));
        assert!(check(&seq, CSemiring::fuzzy(), Mode::Sell, 3).is_none());
        let seq = Sequent::new(
            vec![atom("c"), atom("d")],
            Formula::tensor(atom("d"), atom("c")),
        );
        assert!(check(&seq, CSemiring::fuzzy(), Mode::Sell, 3).is_some());
        let seq = Sequent::new(
            vec![atom("c"), atom("d")],
            Formula::tensor(atom("d"), Formula::Top),
        );
        assert!(check(&seq, CSemiring::fuzzy(), Mode::Sell, 3).is_some());
    }
}
