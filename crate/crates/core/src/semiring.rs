//! Constraint semirings (c-semirings) with exact arithmetic.
//!
//! A c-semiring is a tuple `<A, +, x, bot, top>` where `+` is commutative,
//! associative and idempotent with unit `bot` and absorbing element `top`,
//! and `x` is commutative and associative with unit `top` and absorbing
//! element `bot`, distributing over `+`. The order `a <= b iff a + b = b`
//! makes `A` a complete lattice with `+` as its lub.
//!
//! Four instances ship with the crate:
//!
//! | kind          | carrier          | `+` | `x`   | bot    | top  |
//! |---------------|------------------|-----|-------|--------|------|
//! | crisp         | `{false, true}`  | or  | and   | false  | true |
//! | fuzzy         | `[0, 1]`         | max | min   | 0      | 1    |
//! | probabilistic | `[0, 1]`         | max | *     | 0      | 1    |
//! | weighted      | `R- u {-inf}`    | max | sum   | -inf   | 0    |
//!
//! All four are chains, so [`CSemiring::glb`] is the order minimum. A
//! semiring whose lattice is not a chain would need its own glb.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemiringError {
    #[error("value {value} does not belong to the {kind} semiring")]
    NotInSemiring { value: String, kind: SemiringKind },
    #[error("cannot parse `{text}` as a {kind} value: {reason}")]
    Parse {
        text: String,
        kind: SemiringKind,
        reason: String,
    },
    #[error("unknown semiring `{0}` (expected crisp, fuzzy, prob or weighted)")]
    UnknownKind(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SemiringKind {
    Crisp,
    Fuzzy,
    #[serde(rename = "prob")]
    Probabilistic,
    Weighted,
}

impl SemiringKind {
    pub const ALL: [SemiringKind; 4] = [
        SemiringKind::Crisp,
        SemiringKind::Fuzzy,
        SemiringKind::Probabilistic,
        SemiringKind::Weighted,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SemiringKind::Crisp => "crisp",
            SemiringKind::Fuzzy => "fuzzy",
            SemiringKind::Probabilistic => "prob",
            SemiringKind::Weighted => "weighted",
        }
    }
}

impl fmt::Display for SemiringKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SemiringKind {
    type Err = SemiringError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "crisp" => Ok(SemiringKind::Crisp),
            "fuzzy" => Ok(SemiringKind::Fuzzy),
            "prob" | "probabilistic" => Ok(SemiringKind::Probabilistic),
            "weighted" => Ok(SemiringKind::Weighted),
            other => Err(SemiringError::UnknownKind(other.to_string())),
        }
    }
}

/// A cost in the weighted semiring: a non-positive rational or `-inf`.
///
/// The derived `Ord` puts `NegInf` below every finite cost.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cost {
    NegInf,
    Finite(BigRational),
}

/// An element of one of the shipped semirings, tagged by instance.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SemiringValue {
    Crisp(bool),
    Fuzzy(BigRational),
    Prob(BigRational),
    Weighted(Cost),
}

impl SemiringValue {
    pub fn kind(&self) -> SemiringKind {
        match self {
            SemiringValue::Crisp(_) => SemiringKind::Crisp,
            SemiringValue::Fuzzy(_) => SemiringKind::Fuzzy,
            SemiringValue::Prob(_) => SemiringKind::Probabilistic,
            SemiringValue::Weighted(_) => SemiringKind::Weighted,
        }
    }
}

impl fmt::Display for SemiringValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SemiringValue::Crisp(b) => write!(f, "{b}"),
            SemiringValue::Fuzzy(r) | SemiringValue::Prob(r) => f.write_str(&format_rational(r)),
            SemiringValue::Weighted(Cost::NegInf) => f.write_str("-inf"),
            SemiringValue::Weighted(Cost::Finite(r)) => f.write_str(&format_rational(r)),
        }
    }
}

/// One of the shipped c-semirings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CSemiring {
    kind: SemiringKind,
}

impl CSemiring {
    pub fn new(kind: SemiringKind) -> Self {
        CSemiring { kind }
    }

    pub fn crisp() -> Self {
        Self::new(SemiringKind::Crisp)
    }

    pub fn fuzzy() -> Self {
        Self::new(SemiringKind::Fuzzy)
    }

    pub fn probabilistic() -> Self {
        Self::new(SemiringKind::Probabilistic)
    }

    pub fn weighted() -> Self {
        Self::new(SemiringKind::Weighted)
    }

    pub fn kind(&self) -> SemiringKind {
        self.kind
    }

    pub fn bottom(&self) -> SemiringValue {
        match self.kind {
            SemiringKind::Crisp => SemiringValue::Crisp(false),
            SemiringKind::Fuzzy => SemiringValue::Fuzzy(BigRational::zero()),
            SemiringKind::Probabilistic => SemiringValue::Prob(BigRational::zero()),
            SemiringKind::Weighted => SemiringValue::Weighted(Cost::NegInf),
        }
    }

    pub fn top(&self) -> SemiringValue {
        match self.kind {
            SemiringKind::Crisp => SemiringValue::Crisp(true),
            SemiringKind::Fuzzy => SemiringValue::Fuzzy(BigRational::one()),
            SemiringKind::Probabilistic => SemiringValue::Prob(BigRational::one()),
            SemiringKind::Weighted => SemiringValue::Weighted(Cost::Finite(BigRational::zero())),
        }
    }

    /// True exactly for the instances whose `x` is idempotent (crisp, fuzzy).
    pub fn idempotent_times(&self) -> bool {
        matches!(self.kind, SemiringKind::Crisp | SemiringKind::Fuzzy)
    }

    /// Membership test: right instance tag and in range.
    pub fn contains(&self, v: &SemiringValue) -> bool {
        match (self.kind, v) {
            (SemiringKind::Crisp, SemiringValue::Crisp(_)) => true,
            (SemiringKind::Fuzzy, SemiringValue::Fuzzy(r))
            | (SemiringKind::Probabilistic, SemiringValue::Prob(r)) => in_unit_interval(r),
            (SemiringKind::Weighted, SemiringValue::Weighted(Cost::NegInf)) => true,
            (SemiringKind::Weighted, SemiringValue::Weighted(Cost::Finite(r))) => !r.is_positive(),
            _ => false,
        }
    }

    fn check(&self, v: &SemiringValue) -> Result<(), SemiringError> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(SemiringError::NotInSemiring {
                value: v.to_string(),
                kind: self.kind,
            })
        }
    }

    /// Builds a value of this semiring from a rational, validating its range.
    /// Crisp accepts 0 and 1.
    pub fn from_rational(&self, r: BigRational) -> Result<SemiringValue, SemiringError> {
        let v = match self.kind {
            SemiringKind::Crisp => {
                if r.is_zero() {
                    SemiringValue::Crisp(false)
                } else if r.is_one() {
                    SemiringValue::Crisp(true)
                } else {
                    return Err(SemiringError::NotInSemiring {
                        value: format_rational(&r),
                        kind: self.kind,
                    });
                }
            }
            SemiringKind::Fuzzy => SemiringValue::Fuzzy(r),
            SemiringKind::Probabilistic => SemiringValue::Prob(r),
            SemiringKind::Weighted => SemiringValue::Weighted(Cost::Finite(r)),
        };
        self.check(&v)?;
        Ok(v)
    }

    /// Parses a level literal: `true`/`false`, decimals, fractions, `-inf`,
    /// and the keywords `top`/`bot` for this semiring's extremes.
    pub fn parse_value(&self, text: &str) -> Result<SemiringValue, SemiringError> {
        let t = text.trim();
        let err = |reason: &str| SemiringError::Parse {
            text: t.to_string(),
            kind: self.kind,
            reason: reason.to_string(),
        };
        match t {
            "top" => return Ok(self.top()),
            "bot" => return Ok(self.bottom()),
            _ => {}
        }
        match self.kind {
            SemiringKind::Crisp => match t {
                "true" => Ok(SemiringValue::Crisp(true)),
                "false" => Ok(SemiringValue::Crisp(false)),
                _ => {
                    let r = parse_rational(t).map_err(|e| err(&e))?;
                    self.from_rational(r)
                }
            },
            SemiringKind::Weighted if t == "-inf" => Ok(SemiringValue::Weighted(Cost::NegInf)),
            _ => {
                let r = parse_rational(t).map_err(|e| err(&e))?;
                self.from_rational(r)
            }
        }
    }

    /// `a + b`, the lub of the derived order.
    pub fn plus(
        &self,
        a: &SemiringValue,
        b: &SemiringValue,
    ) -> Result<SemiringValue, SemiringError> {
        self.check(a)?;
        self.check(b)?;
        Ok(match (a, b) {
            (SemiringValue::Crisp(x), SemiringValue::Crisp(y)) => SemiringValue::Crisp(*x || *y),
            (SemiringValue::Fuzzy(x), SemiringValue::Fuzzy(y)) => {
                SemiringValue::Fuzzy(x.max(y).clone())
            }
            (SemiringValue::Prob(x), SemiringValue::Prob(y)) => {
                SemiringValue::Prob(x.max(y).clone())
            }
            (SemiringValue::Weighted(x), SemiringValue::Weighted(y)) => {
                SemiringValue::Weighted(x.max(y).clone())
            }
            _ => unreachable!("checked membership"),
        })
    }

    /// `a x b`: combination of preference levels.
    pub fn times(
        &self,
        a: &SemiringValue,
        b: &SemiringValue,
    ) -> Result<SemiringValue, SemiringError> {
        self.check(a)?;
        self.check(b)?;
        Ok(match (a, b) {
            (SemiringValue::Crisp(x), SemiringValue::Crisp(y)) => SemiringValue::Crisp(*x && *y),
            (SemiringValue::Fuzzy(x), SemiringValue::Fuzzy(y)) => {
                SemiringValue::Fuzzy(x.min(y).clone())
            }
            (SemiringValue::Prob(x), SemiringValue::Prob(y)) => SemiringValue::Prob(x * y),
            (SemiringValue::Weighted(x), SemiringValue::Weighted(y)) => {
                SemiringValue::Weighted(match (x, y) {
                    (Cost::Finite(x), Cost::Finite(y)) => Cost::Finite(x + y),
                    _ => Cost::NegInf,
                })
            }
            _ => unreachable!("checked membership"),
        })
    }

    /// The derived order: `a <= b` iff `a + b = b`.
    pub fn leq(&self, a: &SemiringValue, b: &SemiringValue) -> Result<bool, SemiringError> {
        Ok(self.plus(a, b)? == *b)
    }

    /// Strict version of [`CSemiring::leq`].
    pub fn lt(&self, a: &SemiringValue, b: &SemiringValue) -> Result<bool, SemiringError> {
        Ok(a != b && self.leq(a, b)?)
    }

    /// Total comparison under the derived order. Valid for the shipped
    /// instances, which are all chains.
    pub fn compare(&self, a: &SemiringValue, b: &SemiringValue) -> Result<Ordering, SemiringError> {
        if a == b {
            self.check(a)?;
            Ok(Ordering::Equal)
        } else if self.leq(a, b)? {
            Ok(Ordering::Less)
        } else {
            Ok(Ordering::Greater)
        }
    }

    /// Greatest lower bound of a multiset; `top` for the empty multiset.
    pub fn glb<'a, I>(&self, values: I) -> Result<SemiringValue, SemiringError>
    where
        I: IntoIterator<Item = &'a SemiringValue>,
    {
        let mut acc = self.top();
        for v in values {
            if !self.leq(&acc, v)? {
                acc = v.clone();
            }
        }
        Ok(acc)
    }

    /// Left fold of `x`; `top` for the empty multiset.
    pub fn fold_times<'a, I>(&self, values: I) -> Result<SemiringValue, SemiringError>
    where
        I: IntoIterator<Item = &'a SemiringValue>,
    {
        let mut acc = self.top();
        for v in values {
            acc = self.times(&acc, v)?;
        }
        Ok(acc)
    }
}

impl fmt::Display for CSemiring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)
    }
}

fn in_unit_interval(r: &BigRational) -> bool {
    !r.is_negative() && *r <= BigRational::one()
}

/// Parses `3`, `-2.5`, `0.14`, `1/3` or `-7/2` exactly.
pub fn parse_rational(text: &str) -> Result<BigRational, String> {
    let t = text.trim();
    if t.is_empty() {
        return Err("empty literal".into());
    }
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n
            .trim()
            .parse()
            .map_err(|_| format!("bad numerator `{n}`"))?;
        let d: BigInt = d
            .trim()
            .parse()
            .map_err(|_| format!("bad denominator `{d}`"))?;
        if d.is_zero() {
            return Err("zero denominator".into());
        }
        return Ok(BigRational::new(n, d));
    }
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err("no digits".into());
    }
    if !int_part.chars().all(|c| c.is_ascii_digit())
        || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return Err("expected a decimal or fraction literal".into());
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().map_err(|_| "bad digits".to_string())?
    };
    let denom = num_traits::pow(BigInt::from(10u32), frac_part.len());
    let r = BigRational::new(numer, denom);
    Ok(if neg { -r } else { r })
}

/// Prints a rational as an exact decimal when the denominator divides a
/// power of ten, and as `n/d` otherwise.
pub fn format_rational(r: &BigRational) -> String {
    let mut d = r.denom().clone();
    let two = BigInt::from(2u32);
    let five = BigInt::from(5u32);
    let (mut twos, mut fives) = (0usize, 0usize);
    while (&d % &two).is_zero() {
        d /= &two;
        twos += 1;
    }
    while (&d % &five).is_zero() {
        d /= &five;
        fives += 1;
    }
    if !d.is_one() {
        return format!("{}/{}", r.numer(), r.denom());
    }
    let places = twos.max(fives);
    if places == 0 {
        return r.numer().to_string();
    }
    let scaled = r * BigRational::from_integer(num_traits::pow(BigInt::from(10u32), places));
    let n = scaled.to_integer();
    let neg = n.is_negative();
    let digits = n.abs().to_string();
    let digits = format!("{digits:0>width$}", width = places + 1);
    let (i, f) = digits.split_at(digits.len() - places);
    format!("{}{}.{}", if neg { "-" } else { "" }, i, f)
}
