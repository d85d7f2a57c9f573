use std::fmt;

use serde_json::{json, Value};

use super::formula::{Index, Sequent};
use crate::kernel::Term;

/// Rule names as printed in proof output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RuleName {
    Init,
    OneR,
    OneL,
    TopR,
    Refl,
    TensorL,
    TensorR,
    WithL,
    WithR,
    LolliL,
    LolliR,
    ExistsL,
    ExistsR,
    ForallL,
    ForallR,
    BangL,
    /// Promotion under the glb side condition.
    BangR,
    /// Promotion under the product side condition.
    BangRS,
    Weaken,
    Contract,
    Cut,
}

impl RuleName {
    pub const ALL: [RuleName; 21] = [
        RuleName::Init,
        RuleName::OneR,
        RuleName::OneL,
        RuleName::TopR,
        RuleName::Refl,
        RuleName::TensorL,
        RuleName::TensorR,
        RuleName::WithL,
        RuleName::WithR,
        RuleName::LolliL,
        RuleName::LolliR,
        RuleName::ExistsL,
        RuleName::ExistsR,
        RuleName::ForallL,
        RuleName::ForallR,
        RuleName::BangL,
        RuleName::BangR,
        RuleName::BangRS,
        RuleName::Weaken,
        RuleName::Contract,
        RuleName::Cut,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RuleName::Init => "init",
            RuleName::OneR => "one_R",
            RuleName::OneL => "one_L",
            RuleName::TopR => "top_R",
            RuleName::Refl => "refl",
            RuleName::TensorL => "tensor_L",
            RuleName::TensorR => "tensor_R",
            RuleName::WithL => "with_L",
            RuleName::WithR => "with_R",
            RuleName::LolliL => "lolli_L",
            RuleName::LolliR => "lolli_R",
            RuleName::ExistsL => "exists_L",
            RuleName::ExistsR => "exists_R",
            RuleName::ForallL => "forall_L",
            RuleName::ForallR => "forall_R",
            RuleName::BangL => "bang_L",
            RuleName::BangR => "bang_R",
            RuleName::BangRS => "bang_R_S",
            RuleName::Weaken => "W",
            RuleName::Contract => "C",
            RuleName::Cut => "cut",
        }
    }

    pub fn parse(name: &str) -> Option<RuleName> {
        RuleName::ALL.into_iter().find(|r| r.as_str() == name)
    }

    pub fn is_promotion(self) -> bool {
        matches!(self, RuleName::BangR | RuleName::BangRS)
    }
}

impl fmt::Display for RuleName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The data a promotion node was justified with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromotionWitness {
    pub context: Vec<Index>,
    pub target: Index,
    /// glb or product of `context`, depending on the rule.
    pub bound: Index,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofTree {
    pub rule: RuleName,
    pub conclusion: Sequent,
    pub premises: Vec<ProofTree>,
    pub witness: Option<PromotionWitness>,
    /// Instantiating term for `exists_R`/`forall_L`, eigenvariable for
    /// `exists_L`/`forall_R`.
    pub term: Option<Term>,
}

impl ProofTree {
    pub fn leaf(rule: RuleName, conclusion: Sequent) -> Self {
        ProofTree {
            rule,
            conclusion,
            premises: Vec::new(),
            witness: None,
            term: None,
        }
    }

    pub fn node(rule: RuleName, conclusion: Sequent, premises: Vec<ProofTree>) -> Self {
        ProofTree {
            rule,
            conclusion,
            premises,
            witness: None,
            term: None,
        }
    }

    pub fn with_term(mut self, t: Term) -> Self {
        self.term = Some(t);
        self
    }

    pub fn size(&self) -> usize {
        1 + self.premises.iter().map(ProofTree::size).sum::<usize>()
    }

    pub fn height(&self) -> usize {
        1 + self
            .premises
            .iter()
            .map(ProofTree::height)
            .max()
            .unwrap_or(0)
    }

    pub fn count_rule(&self, rule: RuleName) -> usize {
        usize::from(self.rule == rule)
            + self
                .premises
                .iter()
                .map(|p| p.count_rule(rule))
                .sum::<usize>()
    }

    /// Height counted in dereliction steps only.
    pub fn dereliction_depth(&self) -> usize {
        let below = self
            .premises
            .iter()
            .map(ProofTree::dereliction_depth)
            .max()
            .unwrap_or(0);
        below + usize::from(self.rule == RuleName::BangL)
    }

    pub fn to_json(&self) -> Value {
        let mut obj = json!({
            "rule": self.rule.as_str(),
            "conclusion": self.conclusion.to_string(),
            "premises": self.premises.iter().map(ProofTree::to_json).collect::<Vec<_>>(),
        });
        if let Some(w) = &self.witness {
            obj["witness"] = json!({
                "context": w.context.iter().map(ToString::to_string).collect::<Vec<_>>(),
                "target": w.target.to_string(),
                "bound": w.bound.to_string(),
            });
        }
        if let Some(t) = &self.term {
            obj["term"] = json!(t.to_string());
        }
        obj
    }

    /// Indented s-expression rendering.
    pub fn to_sexpr(&self) -> String {
        let mut out = String::new();
        self.write_sexpr(0, &mut out);
        out
    }

    fn write_sexpr(&self, indent: usize, out: &mut String) {
        use std::fmt::Write;
        let pad = " ".repeat(indent);
        let _ = write!(out, "{pad}({} \"{}\"", self.rule, self.conclusion);
        if let Some(w) = &self.witness {
            let ctx: Vec<_> = w.context.iter().map(ToString::to_string).collect();
            let _ = write!(
                out,
                " (witness ({}) {} {})",
                ctx.join(" "),
                w.target,
                w.bound
            );
        }
        if let Some(t) = &self.term {
            let _ = write!(out, " (term {t})");
        }
        for p in &self.premises {
            out.push('\n');
            p.write_sexpr(indent + 2, out);
        }
        out.push(')');
    }
}

impl fmt::Display for ProofTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_sexpr())
    }
}
