//! Recursive descent with one token of lookahead.

use std::collections::BTreeMap;

use super::lexer::{tokenize, Tok, Token};
use super::{ErrorKind, ParseError, Span};
use crate::interpreter::Program;
use crate::kernel::{
    Atom, Axiom, Branch, Constraint, Definition, Process, Term, Var, EQ_PREDICATE,
};
use crate::prover::{Formula, Index, Sequent};
use crate::semiring::{CSemiring, SemiringKind, SemiringValue};
use crate::store::Mode;

const KEYWORDS: &[&str] = &[
    "tell", "ask", "then", "new", "in", "skip", "ex", "all", "forall", "axiom", "def", "main",
    "semiring", "mode", "top",
];

type Result<T> = std::result::Result<T, ParseError>;

pub(super) struct Parser {
    toks: Vec<Token>,
    pos: usize,
    semiring: CSemiring,
    /// First arity seen for each predicate.
    preds: BTreeMap<String, (usize, Span)>,
    calls: Vec<(String, usize, Span)>,
}

impl Parser {
    pub(super) fn new(text: &str, semiring: CSemiring) -> Result<Self> {
        Ok(Parser {
            toks: tokenize(text)?,
            pos: 0,
            semiring,
            preds: BTreeMap::new(),
            calls: Vec::new(),
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, expected: &str) -> Result<T> {
        Err(ParseError::new(
            self.span(),
            ErrorKind::Expected {
                expected: expected.to_string(),
                found: self.peek().to_string(),
            },
        ))
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<()> {
        if self.eat(&tok) {
            Ok(())
        } else {
            self.error(&tok.to_string())
        }
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        let hit = self.at_kw(kw);
        if hit {
            self.bump();
        }
        hit
    }

    fn expect_kw(&mut self, kw: &str) -> Result<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.error(&format!("`{kw}`"))
        }
    }

    pub(super) fn finish(&mut self) -> Result<()> {
        self.eat(&Tok::Semi);
        match self.peek() {
            Tok::Eof => Ok(()),
            _ => self.error("end of input"),
        }
    }

    /// A lower-case name that is not a keyword.
    fn name(&mut self, what: &str) -> Result<(String, Span)> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Ident(s) if KEYWORDS.contains(&s.as_str()) => {
                Err(ParseError::new(span, ErrorKind::Reserved(s)))
            }
            Tok::Ident(s) => {
                self.bump();
                Ok((s, span))
            }
            _ => self.error(what),
        }
    }

    fn var(&mut self) -> Result<Var> {
        match self.peek().clone() {
            Tok::Var(s) => {
                self.bump();
                Ok(Var::new(&s))
            }
            _ => self.error("a variable"),
        }
    }

    fn level(&mut self) -> Result<SemiringValue> {
        let span = self.span();
        let text = match self.peek().clone() {
            Tok::Num(s) => s,
            Tok::Ident(s) if matches!(s.as_str(), "top" | "bot" | "true" | "false") => s,
            _ => return self.error("a level"),
        };
        self.bump();
        self.semiring
            .parse_value(&text)
            .map_err(|e| ParseError::new(span, ErrorKind::Level(e.to_string())))
    }

    fn term(&mut self) -> Result<Term> {
        if let Tok::Var(_) = self.peek() {
            return Ok(Term::Var(self.var()?));
        }
        let (name, _) = self.name("a term")?;
        if self.peek() == &Tok::LParen {
            Ok(Term::fun(&name, self.args()?))
        } else {
            Ok(Term::constant(&name))
        }
    }

    fn args(&mut self) -> Result<Vec<Term>> {
        self.expect(Tok::LParen)?;
        let mut out = Vec::new();
        if !self.eat(&Tok::RParen) {
            loop {
                out.push(self.term()?);
                if self.eat(&Tok::RParen) {
                    break;
                }
                self.expect(Tok::Comma)?;
            }
        }
        Ok(out)
    }

    fn note_pred(&mut self, name: &str, arity: usize, span: Span) -> Result<()> {
        if name == EQ_PREDICATE {
            return if arity == 2 {
                Ok(())
            } else {
                Err(ParseError::new(span, ErrorKind::EqArity(arity)))
            };
        }
        match self.preds.get(name) {
            Some(&(first, _)) if first != arity => Err(ParseError::new(
                span,
                ErrorKind::ArityClash {
                    name: name.to_string(),
                    first,
                    found: arity,
                },
            )),
            Some(_) => Ok(()),
            None => {
                self.preds.insert(name.to_string(), (arity, span));
                Ok(())
            }
        }
    }

    /// `p(t1, ..., tn)`, `p`, or `s = t`.
    fn bundle_atom(&mut self) -> Result<Atom> {
        let span = self.span();
        if self.peek() == &Tok::LBrack {
            return Err(ParseError::new(span, ErrorKind::NestedSoft));
        }
        let lhs = self.term()?;
        if self.eat(&Tok::Eq) {
            return Ok(Atom::eq(lhs, self.term()?));
        }
        let atom = match lhs {
            Term::Fun(name, args) => Atom::new(&name, args),
            Term::Const(name) => Atom::new(&name, Vec::new()),
            Term::Var(_) => {
                return Err(ParseError::new(
                    span,
                    ErrorKind::Expected {
                        expected: "`=`".into(),
                        found: self.peek().to_string(),
                    },
                ))
            }
        };
        self.note_pred(&atom.pred, atom.args.len(), span)?;
        Ok(atom)
    }

    fn soft(&mut self) -> Result<Constraint> {
        self.expect(Tok::LBrack)?;
        let mut atoms = vec![self.bundle_atom()?];
        while self.eat(&Tok::Star) {
            atoms.push(self.bundle_atom()?);
        }
        self.expect(Tok::RBrack)?;
        self.expect(Tok::At)?;
        let span = self.span();
        let level = self.level()?;
        if atoms.iter().any(Atom::is_eq) && level != self.semiring.top() {
            return Err(ParseError::new(
                span,
                ErrorKind::EqBelowTop(level.to_string()),
            ));
        }
        Constraint::soft(atoms, level).map_err(|e| ParseError::new(span, e.into()))
    }

    pub(super) fn constraint(&mut self) -> Result<Constraint> {
        if self.eat_kw("ex") {
            let x = self.var()?;
            self.expect(Tok::Dot)?;
            return Ok(Constraint::exists(x, self.constraint()?));
        }
        let left = match self.peek() {
            Tok::Num(n) if n == "1" => {
                self.bump();
                Constraint::One
            }
            Tok::LBrack => self.soft()?,
            Tok::LParen => {
                self.bump();
                let c = self.constraint()?;
                self.expect(Tok::RParen)?;
                c
            }
            _ => return self.error("a constraint"),
        };
        if self.eat(&Tok::Star) {
            Ok(Constraint::tensor(left, self.constraint()?))
        } else {
            Ok(left)
        }
    }

    pub(super) fn process(&mut self) -> Result<Process> {
        if self.eat_kw("new") {
            let x = self.var()?;
            self.expect_kw("in")?;
            return Ok(Process::local(x, self.process()?));
        }
        let left = self.choice()?;
        if self.eat(&Tok::Par) {
            Ok(Process::par(left, self.process()?))
        } else {
            Ok(left)
        }
    }

    fn choice(&mut self) -> Result<Process> {
        if !self.at_kw("ask") {
            return self.primary();
        }
        let mut branches = Vec::new();
        loop {
            self.expect_kw("ask")?;
            let guard = self.constraint()?;
            self.expect_kw("then")?;
            let body = self.primary()?;
            branches.push(Branch { guard, body });
            if !self.eat(&Tok::Plus) {
                return Ok(Process::Sum(branches));
            }
        }
    }

    fn primary(&mut self) -> Result<Process> {
        if self.eat_kw("tell") {
            return Ok(Process::Tell(self.constraint()?));
        }
        if self.eat_kw("skip") {
            return Ok(Process::Sum(Vec::new()));
        }
        if self.eat(&Tok::LParen) {
            let p = self.process()?;
            self.expect(Tok::RParen)?;
            return Ok(p);
        }
        if !matches!(self.peek(), Tok::Ident(_)) {
            return self.error("a process");
        }
        let (name, span) = self.name("a process")?;
        let args = if self.peek() == &Tok::LParen {
            self.args()?
        } else {
            Vec::new()
        };
        self.calls.push((name.clone(), args.len(), span));
        Ok(Process::call(&name, args))
    }

    pub(super) fn formula(&mut self) -> Result<Formula> {
        if self.eat_kw("ex") {
            let x = self.var()?;
            self.expect(Tok::Dot)?;
            return Ok(Formula::exists(x, self.formula()?));
        }
        if self.eat_kw("all") {
            let x = self.var()?;
            self.expect(Tok::Dot)?;
            return Ok(Formula::forall(x, self.formula()?));
        }
        let mut alts = vec![self.tensor()?];
        while self.eat(&Tok::Amp) {
            alts.push(self.tensor()?);
        }
        let left = Formula::with_all(alts);
        if self.eat(&Tok::Lolli) {
            Ok(Formula::lolli(left, self.formula()?))
        } else {
            Ok(left)
        }
    }

    fn tensor(&mut self) -> Result<Formula> {
        let left = self.formula_primary()?;
        if self.eat(&Tok::Star) {
            Ok(Formula::tensor(left, self.tensor()?))
        } else {
            Ok(left)
        }
    }

    fn formula_primary(&mut self) -> Result<Formula> {
        match self.peek() {
            Tok::Num(n) if n == "1" => {
                self.bump();
                Ok(Formula::One)
            }
            Tok::Bang => {
                self.bump();
                let i = self.index()?;
                Ok(Formula::bang(i, self.formula_primary()?))
            }
            Tok::LParen => {
                self.bump();
                let f = self.formula()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            Tok::Ident(s) if s == "top" => {
                self.bump();
                Ok(Formula::Top)
            }
            Tok::Ident(_) => {
                let (name, _) = self.name("a formula")?;
                let args = if self.peek() == &Tok::LParen {
                    self.args()?
                } else {
                    Vec::new()
                };
                Ok(Formula::Atom(Atom::new(&name, args)))
            }
            _ => self.error("a formula"),
        }
    }

    fn index(&mut self) -> Result<Index> {
        let mark = match self.peek() {
            Tok::Ident(s) => match s.as_str() {
                "p" => Some(Index::P),
                "d" => Some(Index::D),
                "u" => Some(Index::U),
                "botc" => Some(Index::BotC),
                "topc" => Some(Index::TopC),
                _ => None,
            },
            _ => None,
        };
        match mark {
            Some(i) => {
                self.bump();
                Ok(i)
            }
            None => Ok(Index::Level(self.level()?)),
        }
    }

    pub(super) fn sequent(&mut self) -> Result<Sequent> {
        let mut context = Vec::new();
        if self.peek() != &Tok::Turnstile {
            loop {
                context.push(self.formula()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(Tok::Turnstile)?;
        let goal = self.formula()?;
        self.finish()?;
        Ok(Sequent::new(context, goal))
    }

    pub(super) fn program(mut self) -> Result<Program> {
        let mut mode = Mode::default();
        let mut axioms = Vec::new();
        let mut defs: Vec<Definition> = Vec::new();
        let mut def_spans: BTreeMap<String, Span> = BTreeMap::new();
        let mut main = None;
        let mut header_open = true;
        while self.peek() != &Tok::Eof {
            let span = self.span();
            if self.at_kw("semiring") || self.at_kw("mode") {
                if !header_open {
                    return Err(ParseError::new(span, ErrorKind::LateHeader));
                }
                let is_semiring = self.eat_kw("semiring");
                if !is_semiring {
                    self.bump();
                }
                let (word, at) = self.name("a name")?;
                if is_semiring {
                    let kind: SemiringKind =
                        word.parse().map_err(|e: crate::semiring::SemiringError| {
                            ParseError::new(at, ErrorKind::UnknownSemiring(e.to_string()))
                        })?;
                    self.semiring = CSemiring::new(kind);
                } else {
                    mode = word
                        .parse()
                        .map_err(|e| ParseError::new(at, ErrorKind::UnknownMode(e)))?;
                }
            } else if self.eat_kw("axiom") {
                header_open = false;
                let mut vars = Vec::new();
                if self.eat_kw("forall") {
                    vars.push(self.var()?);
                    while let Tok::Var(_) = self.peek() {
                        vars.push(self.var()?);
                    }
                    self.expect(Tok::Dot)?;
                }
                let premise = self.constraint()?;
                self.expect(Tok::Lolli)?;
                let conclusion = self.constraint()?;
                axioms.push(
                    Axiom::new(vars, premise, conclusion)
                        .map_err(|e| ParseError::new(span, e.into()))?,
                );
            } else if self.eat_kw("def") {
                header_open = false;
                let (name, at) = self.name("a procedure name")?;
                let mut params = Vec::new();
                if self.eat(&Tok::LParen) && !self.eat(&Tok::RParen) {
                    loop {
                        params.push(self.var()?);
                        if self.eat(&Tok::RParen) {
                            break;
                        }
                        self.expect(Tok::Comma)?;
                    }
                }
                self.expect(Tok::Eq)?;
                let body = self.process()?;
                if def_spans.insert(name.clone(), at).is_some() {
                    return Err(ParseError::new(at, ErrorKind::DuplicateDefinition(name)));
                }
                defs.push(
                    Definition::new(&name, params, body)
                        .map_err(|e| ParseError::new(at, e.into()))?,
                );
            } else if self.eat_kw("main") {
                header_open = false;
                if main.is_some() {
                    return Err(ParseError::new(span, ErrorKind::DuplicateMain));
                }
                self.expect(Tok::Eq)?;
                main = Some(self.process()?);
            } else {
                return self.error("an item (semiring, mode, axiom, def or main)");
            }
            self.expect(Tok::Semi)?;
        }
        let main = main.ok_or_else(|| ParseError::new(self.span(), ErrorKind::MissingMain))?;
        self.check_calls(&defs)?;
        for (name, at) in &def_spans {
            if self.preds.contains_key(name) {
                return Err(ParseError::new(*at, ErrorKind::NameClash(name.clone())));
            }
        }
        let end = self.span();
        Program::new(self.semiring, mode, axioms, defs, main)
            .map_err(|e| ParseError::new(end, e.into()))
    }

    fn check_calls(&self, defs: &[Definition]) -> Result<()> {
        for (name, arity, span) in &self.calls {
            let def = defs
                .iter()
                .find(|d| &*d.name == name)
                .ok_or_else(|| ParseError::new(*span, ErrorKind::UnknownProcedure(name.clone())))?;
            if def.params.len() != *arity {
                return Err(ParseError::new(
                    *span,
                    ErrorKind::CallArity {
                        name: name.clone(),
                        expected: def.params.len(),
                        found: *arity,
                    },
                ));
            }
        }
        Ok(())
    }
}
