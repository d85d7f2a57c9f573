//! Randomised law suite for the c-semiring axioms.
//!
//! Used by the `check-laws` CLI command and by the acceptance tests. Values
//! are drawn exactly (small-denominator rationals, plus `-inf` for the
//! weighted instance), so every law is checked with zero tolerance.

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::semiring::{CSemiring, Cost, SemiringError, SemiringKind, SemiringValue};

#[derive(Debug, Clone, Serialize)]
pub struct LawResult {
    pub law: &'static str,
    pub semiring: SemiringKind,
    pub checked: usize,
    pub passed: bool,
    pub counterexample: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LawReport {
    pub results: Vec<LawResult>,
}

impl LawReport {
    pub fn all_passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }
}

/// Draws a random element of `s`. Denominators stay small so that
/// products remain readable in counterexamples.
pub fn random_value<R: Rng>(s: &CSemiring, rng: &mut R) -> SemiringValue {
    match s.kind() {
        SemiringKind::Crisp => SemiringValue::Crisp(rng.gen()),
        SemiringKind::Fuzzy | SemiringKind::Probabilistic => {
            let d: i64 = rng.gen_range(1..=20);
            let n: i64 = rng.gen_range(0..=d);
            s.from_rational(BigRational::new(BigInt::from(n), BigInt::from(d)))
                .expect("in range")
        }
        SemiringKind::Weighted => {
            if rng.gen_ratio(1, 10) {
                SemiringValue::Weighted(Cost::NegInf)
            } else {
                let d: i64 = rng.gen_range(1..=8);
                let n: i64 = rng.gen_range(0..=40);
                s.from_rational(BigRational::new(BigInt::from(-n), BigInt::from(d)))
                    .expect("in range")
            }
        }
    }
}

type Law = fn(
    &CSemiring,
    &SemiringValue,
    &SemiringValue,
    &SemiringValue,
    &SemiringValue,
) -> Result<bool, SemiringError>;

fn laws() -> Vec<(&'static str, bool, Law)> {
    // (name, needs idempotent times, predicate)
    vec![
        ("S1 bottom and top are elements", false, |s, _, _, _, _| {
            Ok(s.contains(&s.bottom()) && s.contains(&s.top()))
        }),
        ("S2 plus commutative", false, |s, a, b, _, _| {
            Ok(s.plus(a, b)? == s.plus(b, a)?)
        }),
        ("S2 plus associative", false, |s, a, b, c, _| {
            Ok(s.plus(&s.plus(a, b)?, c)? == s.plus(a, &s.plus(b, c)?)?)
        }),
        ("S2 plus idempotent", false, |s, a, _, _, _| {
            Ok(s.plus(a, a)? == *a)
        }),
        ("S2 bottom is the unit of plus", false, |s, a, _, _, _| {
            Ok(s.plus(&s.bottom(), a)? == *a)
        }),
        ("S2 top absorbs plus", false, |s, a, _, _, _| {
            Ok(s.plus(&s.top(), a)? == s.top())
        }),
        ("S3 times commutative", false, |s, a, b, _, _| {
            Ok(s.times(a, b)? == s.times(b, a)?)
        }),
        ("S3 times associative", false, |s, a, b, c, _| {
            Ok(s.times(&s.times(a, b)?, c)? == s.times(a, &s.times(b, c)?)?)
        }),
        ("S3 top is the unit of times", false, |s, a, _, _, _| {
            Ok(s.times(&s.top(), a)? == *a)
        }),
        ("S3 bottom absorbs times", false, |s, a, _, _, _| {
            Ok(s.times(&s.bottom(), a)? == s.bottom())
        }),
        ("S3 times distributes over plus", false, |s, a, b, c, _| {
            Ok(s.times(a, &s.plus(b, c)?)? == s.plus(&s.times(a, b)?, &s.times(a, c)?)?)
        }),
        ("S4 plus monotone", false, |s, a, b, c, _| {
            Ok(!s.leq(a, b)? || s.leq(&s.plus(a, c)?, &s.plus(b, c)?)?)
        }),
        ("S4 times monotone", false, |s, a, b, c, _| {
            Ok(!s.leq(a, b)? || s.leq(&s.times(a, c)?, &s.times(b, c)?)?)
        }),
        ("S5 times intensive", false, |s, a, b, _, _| {
            s.leq(&s.times(a, b)?, a)
        }),
        ("S6 bottom and top are extremes", false, |s, a, _, _, _| {
            Ok(s.leq(&s.bottom(), a)? && s.leq(a, &s.top())?)
        }),
        ("S7 plus is the lub", false, |s, a, b, c, _| {
            let ab = s.plus(a, b)?;
            let upper = s.leq(a, &ab)? && s.leq(b, &ab)?;
            let least = !(s.leq(a, c)? && s.leq(b, c)?) || s.leq(&ab, c)?;
            Ok(upper && least)
        }),
        ("S8 plus distributes over times", true, |s, a, b, c, _| {
            Ok(s.plus(a, &s.times(b, c)?)? == s.times(&s.plus(a, b)?, &s.plus(a, c)?)?)
        }),
        ("S9 times is the glb", true, |s, a, b, c, _| {
            let ab = s.times(a, b)?;
            let lower = s.leq(&ab, a)? && s.leq(&ab, b)?;
            let greatest = !(s.leq(c, a)? && s.leq(c, b)?) || s.leq(c, &ab)?;
            Ok(lower && greatest && ab == s.glb([a, b])?)
        }),
        (
            "substitution: b <= a x c and a <= d imply b <= d x c",
            false,
            |s, a, b, c, d| {
                Ok(!(s.leq(b, &s.times(a, c)?)? && s.leq(a, d)?) || s.leq(b, &s.times(d, c)?)?)
            },
        ),
        ("fold_times is below glb", false, |s, a, b, c, _| {
            let vs = [a, b, c];
            let prod = s.fold_times(vs)?;
            let glb = s.glb(vs)?;
            Ok(s.leq(&prod, &glb)? && (!s.idempotent_times() || prod == glb))
        }),
    ]
}

/// Checks every applicable law on `samples` random quadruples.
pub fn check_laws(s: &CSemiring, samples: usize, seed: u64) -> LawReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let quads: Vec<[SemiringValue; 4]> = (0..samples)
        .map(|_| {
            [
                random_value(s, &mut rng),
                random_value(s, &mut rng),
                random_value(s, &mut rng),
                random_value(s, &mut rng),
            ]
        })
        .collect();
    let mut results = Vec::new();
    for (name, idempotent_only, law) in laws() {
        if idempotent_only && !s.idempotent_times() {
            continue;
        }
        let mut counterexample = None;
        for [a, b, c, d] in &quads {
            match law(s, a, b, c, d) {
                Ok(true) => {}
                Ok(false) => {
                    counterexample = Some(format!("a={a}, b={b}, c={c}, d={d}"));
                    break;
                }
                Err(e) => {
                    counterexample = Some(e.to_string());
                    break;
                }
            }
        }
        results.push(LawResult {
            law: name,
            semiring: s.kind(),
            checked: quads.len(),
            passed: counterexample.is_none(),
            counterexample,
        });
    }
    LawReport { results }
}
