use std::fmt;

use super::{ErrorKind, ParseError, Span};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    /// Lower-case identifier: predicates, constants, procedures, keywords.
    Ident(String),
    /// Upper-case or `_`-prefixed identifier.
    Var(String),
    /// Level literal: `0.7`, `-2`, `1/3`, `-inf`.
    Num(String),
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Dot,
    Star,
    Amp,
    Plus,
    Eq,
    Semi,
    At,
    Bang,
    Par,
    Lolli,
    Turnstile,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(s) | Tok::Var(s) | Tok::Num(s) => return write!(f, "`{s}`"),
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrack => "[",
            Tok::RBrack => "]",
            Tok::Comma => ",",
            Tok::Dot => ".",
            Tok::Star => "*",
            Tok::Amp => "&",
            Tok::Plus => "+",
            Tok::Eq => "=",
            Tok::Semi => ";",
            Tok::At => "@",
            Tok::Bang => "!",
            Tok::Par => "||",
            Tok::Lolli => "-o",
            Tok::Turnstile => "|-",
            Tok::Eof => return f.write_str("end of input"),
        };
        write!(f, "`{s}`")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

fn ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\''
}

/// Splits `text` into tokens; `%` starts a comment running to the end of
/// the line.
pub fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let advance = |i: &mut usize, line: &mut usize, col: &mut usize, n: usize| {
        for _ in 0..n {
            if chars[*i] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *i += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        let span = Span { line, col };
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, 1);
            continue;
        }
        if c == '%' {
            while i < chars.len() && chars[i] != '\n' {
                advance(&mut i, &mut line, &mut col, 1);
            }
            continue;
        }
        let next = chars.get(i + 1).copied();
        let (tok, len) = match c {
            '(' => (Tok::LParen, 1),
            ')' => (Tok::RParen, 1),
            '[' => (Tok::LBrack, 1),
            ']' => (Tok::RBrack, 1),
            ',' => (Tok::Comma, 1),
            '.' => (Tok::Dot, 1),
            '*' => (Tok::Star, 1),
            '&' => (Tok::Amp, 1),
            '+' => (Tok::Plus, 1),
            '=' => (Tok::Eq, 1),
            ';' => (Tok::Semi, 1),
            '@' => (Tok::At, 1),
            '!' => (Tok::Bang, 1),
            '|' if next == Some('|') => (Tok::Par, 2),
            '|' if next == Some('-') => (Tok::Turnstile, 2),
            '-' if next == Some('o') => (Tok::Lolli, 2),
            '-' if chars[i + 1..].starts_with(&['i', 'n', 'f']) => (Tok::Num("-inf".into()), 4),
            '-' | '0'..='9' => {
                let len = number_len(&chars[i..]);
                if len == 0 {
                    return Err(ParseError::new(span, ErrorKind::UnexpectedChar(c)));
                }
                (Tok::Num(chars[i..i + len].iter().collect()), len)
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let len = chars[i..].iter().take_while(|&&c| ident_char(c)).count();
                let word: String = chars[i..i + len].iter().collect();
                let tok = if c.is_ascii_uppercase() || c == '_' {
                    Tok::Var(word)
                } else {
                    Tok::Ident(word)
                };
                (tok, len)
            }
            other => return Err(ParseError::new(span, ErrorKind::UnexpectedChar(other))),
        };
        out.push(Token { tok, span });
        advance(&mut i, &mut line, &mut col, len);
    }
    out.push(Token {
        tok: Tok::Eof,
        span: Span { line, col },
    });
    Ok(out)
}

/// Length of `-?digits(.digits)?(/digits)?` at the start of `s`, or 0.
fn number_len(s: &[char]) -> usize {
    let digits = |from: usize| s[from..].iter().take_while(|c| c.is_ascii_digit()).count();
    let mut n = usize::from(s.first() == Some(&'-'));
    let int = digits(n);
    if int == 0 {
        return 0;
    }
    n += int;
    for sep in ['.', '/'] {
        if s.get(n) == Some(&sep) {
            let more = digits(n + 1);
            if more > 0 {
                n += 1 + more;
            }
        }
    }
    n
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn operators_and_levels() {
        assert_eq!(
            toks("[c]@-2 -o !0.5 X || 1/3 |- -inf"),
            vec![
                Tok::LBrack,
                Tok::Ident("c".into()),
                Tok::RBrack,
                Tok::At,
                Tok::Num("-2".into()),
                Tok::Lolli,
                Tok::Bang,
                Tok::Num("0.5".into()),
                Tok::Var("X".into()),
                Tok::Par,
                Tok::Num("1/3".into()),
                Tok::Turnstile,
                Tok::Num("-inf".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn spans_and_comments() {
        let t = tokenize("% header\n  tell").unwrap();
        assert_eq!(t[0].span, Span { line: 2, col: 3 });
    }

    #[test]
    fn stray_character() {
        let e = tokenize("tell $").unwrap_err();
        assert_eq!(e.span, Span { line: 1, col: 6 });
    }
}
