//! Small-step semantics over configurations `(X; procs; store)`.
//!
//! Rules: `TELL` adds a constraint to the store, `SUM(j)` commits to an
//! alternative whose guard the store entails, `LOCAL` moves a binder into
//! the hidden set, `CALL` unfolds a definition. When a binder clashes with
//! a name already in use it is renamed first and the step is tagged
//! `EQUIV`. Parallel composition is kept flat: `procs` is a multiset.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::kernel::{
    alpha_key, key_atom, normalize, single, Atom, Axiom, Constraint, Definition, FreeVars, Fresh,
    Process, Subst, Substitute, Symbol, Term, Var,
};
use crate::semiring::CSemiring;
use crate::store::{EntailConfig, Mode, Saturation, Store, StoreError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InterpError {
    #[error("call to undefined procedure {0}")]
    UnknownProcedure(String),
    #[error("procedure {name} expects {expected} arguments, got {found}")]
    ArityMismatch {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("procedure {0} is defined twice")]
    DuplicateDefinition(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// `D.P`: definitions, axioms and the main process under one semiring.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub semiring: CSemiring,
    pub mode: Mode,
    pub axioms: Vec<Axiom>,
    pub defs: BTreeMap<Symbol, Definition>,
    pub main: Process,
    /// Saturation rounds used by entailment.
    pub bound: usize,
}

impl Program {
    pub const DEFAULT_MAX_STEPS: usize = 1000;

    pub fn new(
        semiring: CSemiring,
        mode: Mode,
        axioms: Vec<Axiom>,
        defs: Vec<Definition>,
        main: Process,
    ) -> Result<Self, InterpError> {
        let mut map = BTreeMap::new();
        for d in defs {
            let name = d.name.clone();
            if map.insert(name.clone(), d).is_some() {
                return Err(InterpError::DuplicateDefinition(name.to_string()));
            }
        }
        let program = Program {
            semiring,
            mode,
            axioms,
            defs: map,
            main,
            bound: EntailConfig::DEFAULT_BOUND,
        };
        program.check_calls(&program.main)?;
        for d in program.defs.values() {
            program.check_calls(&d.body)?;
        }
        Ok(program)
    }

    /// A program with no definitions or axioms.
    pub fn simple(semiring: CSemiring, mode: Mode, main: Process) -> Result<Self, InterpError> {
        Program::new(semiring, mode, Vec::new(), Vec::new(), main)
    }

    pub fn with_main(&self, main: Process) -> Result<Self, InterpError> {
        self.check_calls(&main)?;
        Ok(Program {
            main,
            ..self.clone()
        })
    }

    fn check_calls(&self, p: &Process) -> Result<(), InterpError> {
        for (name, arity) in p.calls() {
            let d = self
                .defs
                .get(name)
                .ok_or_else(|| InterpError::UnknownProcedure(name.to_string()))?;
            if d.params.len() != arity {
                return Err(InterpError::ArityMismatch {
                    name: name.to_string(),
                    expected: d.params.len(),
                    found: arity,
                });
            }
        }
        Ok(())
    }

    pub fn entail_config(&self) -> EntailConfig {
        EntailConfig::new(self.semiring, self.mode)
            .with_axioms(self.axioms.clone())
            .with_bound(self.bound)
    }

    pub fn initial(&self) -> Configuration {
        let mut names = BTreeSet::new();
        mentioned_vars(&self.main, &mut names);
        for d in self.defs.values() {
            names.extend(d.params.iter().cloned());
            mentioned_vars(&d.body, &mut names);
        }
        let mut procs = Vec::new();
        self.main.clone().flatten_par(&mut procs);
        Configuration {
            hidden: BTreeSet::new(),
            procs,
            store: Store::avoiding(&names),
        }
    }
}

/// Free and bound variable names of `p`.
fn mentioned_vars(p: &Process, out: &mut BTreeSet<Var>) {
    fn constraint(c: &Constraint, out: &mut BTreeSet<Var>) {
        c.free_vars_into(out);
        if let Constraint::Exists(x, body) = c {
            out.insert(x.clone());
            constraint(body, out);
        } else if let Constraint::Tensor(a, b) = c {
            constraint(a, out);
            constraint(b, out);
        }
    }
    match p {
        Process::Tell(c) => constraint(c, out),
        Process::Sum(bs) => {
            for b in bs {
                constraint(&b.guard, out);
                mentioned_vars(&b.body, out);
            }
        }
        Process::Par(a, b) => {
            mentioned_vars(a, out);
            mentioned_vars(b, out);
        }
        Process::Local(x, body) => {
            out.insert(x.clone());
            mentioned_vars(body, out);
        }
        Process::Call(_, args) => args.iter().for_each(|a| a.free_vars_into(out)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    Tell,
    /// Commit to the alternative with this (0-based) index.
    Sum(usize),
    Local,
    Call,
    /// `LOCAL` after renaming the binder.
    Equiv,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::Tell => "TELL",
            Rule::Sum(_) => "SUM",
            Rule::Local => "LOCAL",
            Rule::Call => "CALL",
            Rule::Equiv => "EQUIV",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::Sum(j) => write!(f, "SUM({j})"),
            r => f.write_str(r.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    pub hidden: BTreeSet<Var>,
    pub procs: Vec<Process>,
    pub store: Store,
}

impl Configuration {
    /// Free variables of the pending processes other than `skip`.
    fn procs_free_vars(&self, skip: usize) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        for (i, p) in self.procs.iter().enumerate() {
            if i != skip {
                p.free_vars_into(&mut out);
            }
        }
        out
    }

    fn store_free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        for e in self.store.entries() {
            e.atoms.free_vars_into(&mut out);
        }
        out
    }

    fn replace(&self, index: usize, residue: Process) -> Vec<Process> {
        let mut procs: Vec<Process> = Vec::with_capacity(self.procs.len() + 1);
        procs.extend(self.procs[..index].iter().cloned());
        procs.extend(self.procs[index + 1..].iter().cloned());
        residue.flatten_par(&mut procs);
        procs
    }

    /// A key shared by configurations equal up to renaming of hidden
    /// variables, order of pending processes and order of store entries.
    pub fn canonical_key(&self) -> String {
        let render = |name: &dyn Fn(&Var) -> String| -> Vec<String> {
            let rename: Subst = self
                .hidden
                .iter()
                .map(|v| (v.clone(), Term::Var(Var::new(&name(v)))))
                .collect();
            let mut parts: Vec<String> = self
                .procs
                .iter()
                .map(|p| format!("P:{}", alpha_key(&p.substitute(&rename))))
                .collect();
            for e in self.store.entries() {
                let mut s = String::from("S:");
                for a in e.atoms.atoms() {
                    key_atom(&a.substitute(&rename), &[], &mut s);
                    s.push('*');
                }
                s.push_str(&format!("@{}", e.level));
                parts.push(s);
            }
            parts
        };
        // Order components by their anonymised rendering, then number the
        // hidden variables by first occurrence in that order.
        let anonymous = render(&|_| "#h".to_string());
        let marked = render(&|v| format!("#<{}>", v.name()));
        let mut pairs: Vec<(String, String)> = anonymous.into_iter().zip(marked).collect();
        pairs.sort();
        let mut names: BTreeMap<Var, String> = BTreeMap::new();
        for (_, text) in &pairs {
            let mut rest = text.as_str();
            while let Some(start) = rest.find("#<") {
                let tail = &rest[start + 2..];
                let Some(end) = tail.find('>') else { break };
                let v = Var::new(&tail[..end]);
                let n = names.len();
                names.entry(v).or_insert_with(|| format!("#h{n}"));
                rest = &tail[end + 1..];
            }
        }
        let mut parts = render(&|v| names.get(v).cloned().unwrap_or_else(|| "#h".to_string()));
        parts.sort();
        let hidden_unused = self.hidden.len() - names.len();
        format!("{}|~{hidden_unused}", parts.join("|"))
    }

    pub fn to_json(&self) -> Value {
        json!({
            "procs": self.procs.iter().map(ToString::to_string).collect::<Vec<_>>(),
            "store": store_json(&self.store),
            "hidden": self.hidden.iter().map(Var::name).collect::<Vec<_>>(),
        })
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        let hidden: Vec<&str> = self.hidden.iter().map(Var::name).collect();
        write!(f, "{{{}}}; ", hidden.join(", "))?;
        for (i, p) in self.procs.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, "; {})", self.store)
    }
}

pub fn store_json(store: &Store) -> Value {
    Value::Array(
        store
            .entries()
            .iter()
            .map(|e| json!({"atom": e.atoms.to_string(), "level": e.level.to_string()}))
            .collect(),
    )
}

/// One successor of a configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub rule: Rule,
    /// Index in the source configuration's `procs` of the process that moved.
    pub index: usize,
    pub target: Configuration,
}

pub struct Interpreter<'p> {
    program: &'p Program,
    cfg: EntailConfig,
}

impl<'p> Interpreter<'p> {
    pub fn new(program: &'p Program) -> Self {
        Interpreter {
            program,
            cfg: program.entail_config(),
        }
    }

    pub fn program(&self) -> &Program {
        self.program
    }

    pub fn entail_config(&self) -> &EntailConfig {
        &self.cfg
    }

    /// Every successor of `conf`.
    pub fn step(&self, conf: &Configuration) -> Result<Vec<Transition>, InterpError> {
        let mut out = Vec::new();
        let mut sat: Option<Saturation> = None;
        for (i, p) in conf.procs.iter().enumerate() {
            match p {
                Process::Tell(c) => {
                    let mut store = conf.store.clone();
                    let new_vars = store.tell(c, &self.program.semiring)?;
                    let mut hidden = conf.hidden.clone();
                    hidden.extend(new_vars);
                    let mut procs = conf.procs.clone();
                    procs.remove(i);
                    out.push(Transition {
                        rule: Rule::Tell,
                        index: i,
                        target: Configuration {
                            hidden,
                            procs,
                            store,
                        },
                    });
                }
                Process::Sum(branches) => {
                    if sat.is_none() {
                        sat = Some(conf.store.saturate(&self.cfg)?);
                    }
                    let sat = sat.as_ref().expect("saturated above");
                    for (j, b) in branches.iter().enumerate() {
                        if sat.entails(&b.guard)? {
                            out.push(Transition {
                                rule: Rule::Sum(j),
                                index: i,
                                target: Configuration {
                                    hidden: conf.hidden.clone(),
                                    procs: conf.replace(i, b.body.clone()),
                                    store: conf.store.clone(),
                                },
                            });
                        }
                    }
                }
                Process::Local(x, body) => {
                    let mut taken = conf.hidden.clone();
                    taken.extend(conf.store_free_vars());
                    taken.extend(conf.procs_free_vars(i));
                    let mut store = conf.store.clone();
                    let (rule, var, body) = if taken.contains(x) {
                        let mut avoid = taken.clone();
                        mentioned_vars(body, &mut avoid);
                        store.fresh().skip_past(&avoid);
                        let y = store.fresh().next_var();
                        let renamed = body.substitute(&single(x, Term::Var(y.clone())));
                        (Rule::Equiv, y, renamed)
                    } else {
                        (Rule::Local, x.clone(), (**body).clone())
                    };
                    store.hide(var.clone());
                    let mut hidden = conf.hidden.clone();
                    hidden.insert(var);
                    out.push(Transition {
                        rule,
                        index: i,
                        target: Configuration {
                            hidden,
                            procs: conf.replace(i, body),
                            store,
                        },
                    });
                }
                Process::Call(name, args) => {
                    let def = self
                        .program
                        .defs
                        .get(name)
                        .ok_or_else(|| InterpError::UnknownProcedure(name.to_string()))?;
                    if def.params.len() != args.len() {
                        return Err(InterpError::ArityMismatch {
                            name: name.to_string(),
                            expected: def.params.len(),
                            found: args.len(),
                        });
                    }
                    out.push(Transition {
                        rule: Rule::Call,
                        index: i,
                        target: Configuration {
                            hidden: conf.hidden.clone(),
                            procs: conf.replace(i, def.instantiate(args)),
                            store: conf.store.clone(),
                        },
                    });
                }
                Process::Par(..) => unreachable!("parallel components are flattened"),
            }
        }
        Ok(out)
    }

    /// Breadth-first exploration up to `max_steps` transitions from the
    /// initial configuration.
    pub fn explore(&self, max_steps: usize) -> Result<ReachSet, InterpError> {
        let start = self.program.initial();
        let mut reach = ReachSet {
            configs: Vec::new(),
            depths: Vec::new(),
            keys: HashSet::new(),
            truncated: false,
        };
        let mut queue = VecDeque::new();
        reach.insert(start.clone(), 0);
        queue.push_back((start, 0));
        while let Some((conf, depth)) = queue.pop_front() {
            let succs = self.step(&conf)?;
            if depth == max_steps {
                reach.truncated |= !succs.is_empty();
                continue;
            }
            for t in succs {
                if reach.insert(t.target.clone(), depth + 1) {
                    queue.push_back((t.target, depth + 1));
                }
            }
        }
        Ok(reach)
    }

    /// A single maximal run choosing uniformly among enabled steps.
    pub fn random_run(&self, seed: u64, max_steps: usize) -> Result<Trace, InterpError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let initial = self.program.initial();
        let mut conf = initial.clone();
        let mut steps = Vec::new();
        loop {
            let succs = self.step(&conf)?;
            if succs.is_empty() {
                return Ok(Trace {
                    initial,
                    steps,
                    truncated: false,
                });
            }
            if steps.len() == max_steps {
                return Ok(Trace {
                    initial,
                    steps,
                    truncated: true,
                });
            }
            let t = succs.choose(&mut rng).expect("non-empty").clone();
            steps.push(TraceStep {
                rule: t.rule,
                index: t.index,
                proc: conf.procs[t.index].to_string(),
                config: t.target.clone(),
            });
            conf = t.target;
        }
    }

    /// Does some configuration reachable within `max_steps` satisfy
    /// `exists X. store |- goal`?
    pub fn barb(&self, goal: &Constraint, max_steps: usize) -> Result<Barb, InterpError> {
        let start = self.program.initial();
        let mut keys = HashSet::new();
        let mut queue = VecDeque::new();
        let mut truncated = false;
        keys.insert(start.canonical_key());
        queue.push_back((start, 0usize));
        while let Some((conf, depth)) = queue.pop_front() {
            if self.observes(&conf, goal)? {
                return Ok(Barb {
                    holds: true,
                    truncated: false,
                    witness: Some(conf),
                });
            }
            let succs = self.step(&conf)?;
            if depth == max_steps {
                truncated |= !succs.is_empty();
                continue;
            }
            for t in succs {
                if keys.insert(t.target.canonical_key()) {
                    queue.push_back((t.target, depth + 1));
                }
            }
        }
        Ok(Barb {
            holds: false,
            truncated,
            witness: None,
        })
    }

    /// `exists X. store |- goal` for a single configuration.
    pub fn observes(&self, conf: &Configuration, goal: &Constraint) -> Result<bool, InterpError> {
        let store = conf.store.hide_apart(&goal.free_vars());
        Ok(store.entails(&self.cfg, goal)?)
    }
}

#[derive(Debug, Clone)]
pub struct ReachSet {
    pub configs: Vec<Configuration>,
    /// Number of steps from the initial configuration, per entry of `configs`.
    pub depths: Vec<usize>,
    keys: HashSet<String>,
    /// Some configuration at the depth limit still had successors.
    pub truncated: bool,
}

impl ReachSet {
    fn insert(&mut self, conf: Configuration, depth: usize) -> bool {
        if self.keys.insert(conf.canonical_key()) {
            self.configs.push(conf);
            self.depths.push(depth);
            true
        } else {
            false
        }
    }

    pub fn contains(&self, conf: &Configuration) -> bool {
        self.keys.contains(&conf.canonical_key())
    }

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    /// Configurations with no successors.
    pub fn terminal<'a>(
        &'a self,
        interp: &'a Interpreter<'_>,
    ) -> impl Iterator<Item = &'a Configuration> + 'a {
        self.configs
            .iter()
            .filter(move |c| interp.step(c).map(|s| s.is_empty()).unwrap_or(false))
    }
}

#[derive(Debug, Clone)]
pub struct Barb {
    pub holds: bool,
    /// `holds` is false and the search hit its step bound.
    pub truncated: bool,
    pub witness: Option<Configuration>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub rule: Rule,
    pub index: usize,
    /// The process that moved, as printed before the step.
    pub proc: String,
    /// Configuration after the step.
    pub config: Configuration,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub initial: Configuration,
    pub steps: Vec<TraceStep>,
    pub truncated: bool,
}

#[derive(Serialize)]
struct StepJson {
    rule: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    branch: Option<usize>,
    proc: String,
    store: Value,
    hidden: Vec<String>,
}

impl Trace {
    /// Configurations along the trace, starting with the initial one.
    pub fn configurations(&self) -> impl Iterator<Item = &Configuration> {
        std::iter::once(&self.initial).chain(self.steps.iter().map(|s| &s.config))
    }

    pub fn to_json(&self) -> Value {
        let steps: Vec<StepJson> = self
            .steps
            .iter()
            .map(|s| StepJson {
                rule: s.rule.name(),
                branch: match s.rule {
                    Rule::Sum(j) => Some(j),
                    _ => None,
                },
                proc: s.proc.clone(),
                store: store_json(&s.config.store),
                hidden: s
                    .config
                    .hidden
                    .iter()
                    .map(|v| v.name().to_string())
                    .collect(),
            })
            .collect();
        json!({"steps": steps, "truncated": self.truncated})
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "   {}", self.initial)?;
        for s in &self.steps {
            writeln!(f, "-> [{}] {}", s.rule, s.proc)?;
            writeln!(f, "   {}", s.config)?;
        }
        if self.truncated {
            writeln!(f, "(truncated)")?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Independent single-step checker

fn multiset_key(procs: &[Process]) -> Vec<String> {
    let mut flat = Vec::new();
    for p in procs {
        p.clone().flatten_par(&mut flat);
    }
    let mut keys: Vec<String> = flat.iter().map(alpha_key).collect();
    keys.sort();
    keys
}

fn entry_keys(store: &Store) -> Vec<String> {
    store
        .entries()
        .iter()
        .map(|e| format!("{}@{}", e.atoms, e.level))
        .collect()
}

/// Checks `before --rule--> after` where the process at `index` moved,
/// without going through [`Interpreter::step`].
pub fn check_transition(
    program: &Program,
    before: &Configuration,
    rule: Rule,
    index: usize,
    after: &Configuration,
) -> Result<(), String> {
    let moved = before
        .procs
        .get(index)
        .ok_or_else(|| format!("no process at index {index}"))?;
    let rest: Vec<Process> = before
        .procs
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != index)
        .map(|(_, p)| p.clone())
        .collect();
    let expect_procs = |residue: Option<&Process>| -> Result<(), String> {
        let mut expected = rest.clone();
        expected.extend(residue.cloned());
        if multiset_key(&expected) == multiset_key(&after.procs) {
            Ok(())
        } else {
            Err(format!("pending processes differ after {rule}"))
        }
    };
    let same_store = || -> Result<(), String> {
        if entry_keys(&before.store) == entry_keys(&after.store) {
            Ok(())
        } else {
            Err(format!("store changed by {rule}"))
        }
    };
    match (rule, moved) {
        (Rule::Tell, Process::Tell(c)) => {
            expect_procs(None)?;
            let new_hidden: BTreeSet<Var> =
                after.hidden.difference(&before.hidden).cloned().collect();
            if !before.hidden.is_subset(&after.hidden) {
                return Err("TELL removed hidden variables".into());
            }
            let old = entry_keys(&before.store);
            let new = entry_keys(&after.store);
            if new.len() < old.len() || new[..old.len()] != old[..] {
                return Err("TELL must extend the store".into());
            }
            let nf = normalize(c, &mut Fresh::with_prefix("_chk"));
            if nf.vars.len() != new_hidden.len() {
                return Err("TELL introduced the wrong number of hidden variables".into());
            }
            let added = &after.store.entries()[old.len()..];
            if added.len() != nf.items.len() {
                return Err("TELL added the wrong number of entries".into());
            }
            let pattern_vars: BTreeSet<Var> = nf.vars.iter().cloned().collect();
            let mut binding = Subst::new();
            for ((pc, level), e) in nf.items.iter().zip(added) {
                if *level != e.level || pc.atoms().len() != e.atoms.atoms().len() {
                    return Err("TELL entry does not match the told constraint".into());
                }
                for (p, a) in pc.atoms().iter().zip(e.atoms.atoms()) {
                    if !match_atom_pattern(p, a, &pattern_vars, &mut binding) {
                        return Err(format!("TELL entry {a} does not match {p}"));
                    }
                }
            }
            let images: BTreeSet<Term> = binding.values().cloned().collect();
            let expected: BTreeSet<Term> = new_hidden.iter().cloned().map(Term::Var).collect();
            if images.is_subset(&expected) && binding.len() == images.len() {
                Ok(())
            } else {
                Err("TELL must bind existentials to distinct new hidden variables".into())
            }
        }
        (Rule::Sum(j), Process::Sum(branches)) => {
            let b = branches.get(j).ok_or_else(|| format!("no branch {j}"))?;
            let cfg = program.entail_config();
            let ok = before
                .store
                .entails(&cfg, &b.guard)
                .map_err(|e| e.to_string())?;
            if !ok {
                return Err(format!("guard {} is not entailed", b.guard));
            }
            same_store()?;
            if before.hidden != after.hidden {
                return Err("SUM changed the hidden set".into());
            }
            expect_procs(Some(&b.body))
        }
        (Rule::Local, Process::Local(x, body)) => {
            let mut taken = before.hidden.clone();
            taken.extend(before.store_free_vars());
            taken.extend(before.procs_free_vars(index));
            if taken.contains(x) {
                return Err(format!("LOCAL side condition fails for {x}"));
            }
            let mut hidden = before.hidden.clone();
            hidden.insert(x.clone());
            if hidden != after.hidden {
                return Err("LOCAL must add exactly its binder to the hidden set".into());
            }
            same_store()?;
            expect_procs(Some(body))
        }
        (Rule::Equiv, Process::Local(x, body)) => {
            let new: Vec<&Var> = after.hidden.difference(&before.hidden).collect();
            let [y] = new.as_slice() else {
                return Err("EQUIV must add exactly one hidden variable".into());
            };
            let mut taken = before.hidden.clone();
            taken.extend(before.store_free_vars());
            taken.extend(before.procs_free_vars(index));
            if taken.contains(*y) || (body.free_vars().contains(*y) && *y != x) {
                return Err(format!("EQUIV chose a clashing name {y}"));
            }
            same_store()?;
            expect_procs(Some(&body.substitute(&single(x, Term::Var((*y).clone())))))
        }
        (Rule::Call, Process::Call(name, args)) => {
            let def = program
                .defs
                .get(name)
                .ok_or_else(|| format!("unknown procedure {name}"))?;
            if def.params.len() != args.len() {
                return Err(format!("arity mismatch calling {name}"));
            }
            let map: Subst = def
                .params
                .iter()
                .cloned()
                .zip(args.iter().cloned())
                .collect();
            same_store()?;
            if before.hidden != after.hidden {
                return Err("CALL changed the hidden set".into());
            }
            expect_procs(Some(&def.body.substitute(&map)))
        }
        (rule, p) => Err(format!("rule {rule} does not apply to {p}")),
    }
}

fn match_atom_pattern(p: &Atom, a: &Atom, vars: &BTreeSet<Var>, b: &mut Subst) -> bool {
    fn term(p: &Term, t: &Term, vars: &BTreeSet<Var>, b: &mut Subst) -> bool {
        match (p, t) {
            (Term::Var(v), _) if vars.contains(v) => match b.get(v) {
                Some(x) => x == t,
                None => {
                    b.insert(v.clone(), t.clone());
                    true
                }
            },
            (Term::Fun(f, ps), Term::Fun(g, ts)) => {
                f == g
                    && ps.len() == ts.len()
                    && ps.iter().zip(ts).all(|(p, t)| term(p, t, vars, b))
            }
            _ => p == t,
        }
    }
    p.pred == a.pred
        && p.args.len() == a.args.len()
        && p.args.iter().zip(&a.args).all(|(p, t)| term(p, t, vars, b))
}
