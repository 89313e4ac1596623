//! Concrete syntax for two-trace hyperformulas.
//!
//! ```text
//! hyper   := ("forall" | "exists") "s2" "." implies
//! implies := or ("->" implies)?
//! or      := and ("|" and)*
//! and     := until ("&" until)*
//! until   := unary ("U" until)?
//! unary   := ("!" | "X" | "F" | "G") unary | "(" implies ")" | atom
//! atom    := "true" | "false" | "sec1" | "nonsec2"
//!          | "out_close" "(" number ")" | "state_close" "(" number ")"
//! ```

use thiserror::Error;

use super::atoms::AtomicPredicate;
use super::formula::{Formula, HyperFormula, Quantifier};

/// Parse failure; `pos` is a 1-based character column.
#[derive(Clone, Debug, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at column {pos}: expected {expected}, found {found}")]
    Syntax { pos: usize, expected: String, found: String },
    #[error("unknown atom `{name}` at column {pos}")]
    UnknownAtom { pos: usize, name: String },
    #[error("missing trace quantifier at column {pos}: formulas start with `forall s2.` or `exists s2.`")]
    MissingQuantifier { pos: usize },
    #[error("duplicate trace quantifier at column {pos}: only one outer quantifier is supported")]
    DuplicateQuantifier { pos: usize },
    #[error("invalid number `{text}` at column {pos}")]
    InvalidNumber { pos: usize, text: String },
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Num(String),
    LParen,
    RParen,
    Bang,
    Amp,
    Bar,
    Arrow,
    Dot,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Num(s) => format!("number `{s}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Bang => "`!`".into(),
            Tok::Amp => "`&`".into(),
            Tok::Bar => "`|`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let pos = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let single = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '!' => Some(Tok::Bang),
            '&' => Some(Tok::Amp),
            '|' => Some(Tok::Bar),
            '.' if !chars.get(i + 1).is_some_and(char::is_ascii_digit) => Some(Tok::Dot),
            _ => None,
        };
        if let Some(t) = single {
            out.push((t, pos));
            i += 1;
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'>') {
            out.push((Tok::Arrow, pos));
            i += 2;
            continue;
        }
        if c.is_ascii_digit() || c == '.' || c == '-' || c == '+' {
            let start = i;
            i += 1;
            while i < chars.len() {
                let d = chars[i];
                let exp_sign = (d == '-' || d == '+') && matches!(chars[i - 1], 'e' | 'E');
                if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || exp_sign {
                    i += 1;
                } else {
                    break;
                }
            }
            out.push((Tok::Num(chars[start..i].iter().collect()), pos));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), pos));
            continue;
        }
        return Err(ParseError::Syntax { pos, expected: "a token".into(), found: format!("`{c}`") });
    }
    out.push((Tok::Eof, chars.len() + 1));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn fail<T>(&self, expected: &str) -> Result<T, ParseError> {
        Err(ParseError::Syntax { pos: self.pos(), expected: expected.into(), found: self.peek().describe() })
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.fail(expected)
        }
    }

    fn is_ident(&self, name: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == name)
    }

    fn quantifier(&mut self) -> Result<Option<Quantifier>, ParseError> {
        let q = if self.is_ident("forall") {
            Quantifier::Forall
        } else if self.is_ident("exists") {
            Quantifier::Exists
        } else {
            return Ok(None);
        };
        self.bump();
        if !self.is_ident("s2") {
            return self.fail("trace variable `s2`");
        }
        self.bump();
        self.expect(Tok::Dot, "`.` after the trace variable")?;
        Ok(Some(q))
    }

    fn implies(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.or()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.implies()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.and()?;
        while *self.peek() == Tok::Bar {
            self.bump();
            lhs = Formula::or(lhs, self.and()?);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.until()?;
        while *self.peek() == Tok::Amp {
            self.bump();
            lhs = Formula::and(lhs, self.until()?);
        }
        Ok(lhs)
    }

    fn until(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.unary()?;
        if self.is_ident("U") {
            self.bump();
            let rhs = self.until()?;
            return Ok(Formula::until(lhs, rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Bang => {
                self.bump();
                Ok(Formula::not(self.unary()?))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.implies()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                self.bump();
                match name.as_str() {
                    "X" => Ok(Formula::next(self.unary()?)),
                    "F" => Ok(Formula::eventually(self.unary()?)),
                    "G" => Ok(Formula::always(self.unary()?)),
                    "true" => Ok(Formula::True),
                    "false" => Ok(Formula::False),
                    "sec1" => Ok(Formula::Atom(AtomicPredicate::SecFirst)),
                    "nonsec2" => Ok(Formula::Atom(AtomicPredicate::NonsecSecond)),
                    "out_close" => Ok(Formula::Atom(AtomicPredicate::OutClose(self.radius()?))),
                    "state_close" => Ok(Formula::Atom(AtomicPredicate::StateClose(self.radius()?))),
                    "forall" | "exists" => Err(ParseError::DuplicateQuantifier { pos }),
                    _ => Err(ParseError::UnknownAtom { pos, name }),
                }
            }
            _ => self.fail("a formula"),
        }
    }

    fn radius(&mut self) -> Result<f64, ParseError> {
        self.expect(Tok::LParen, "`(`")?;
        let pos = self.pos();
        let Tok::Num(text) = self.peek().clone() else {
            return self.fail("a nonnegative number");
        };
        self.bump();
        let value: f64 = text.parse().map_err(|_| ParseError::InvalidNumber { pos, text: text.clone() })?;
        if !(value.is_finite() && value >= 0.0) {
            return Err(ParseError::InvalidNumber { pos, text });
        }
        self.expect(Tok::RParen, "`)`")?;
        Ok(value)
    }
}

/// Parses `forall s2. <body>` or `exists s2. <body>`.
pub fn parse(text: &str) -> Result<HyperFormula, ParseError> {
    let mut p = Parser { toks: lex(text)?, at: 0 };
    let pos = p.pos();
    let Some(quantifier) = p.quantifier()? else {
        return Err(ParseError::MissingQuantifier { pos });
    };
    if p.is_ident("forall") || p.is_ident("exists") {
        return Err(ParseError::DuplicateQuantifier { pos: p.pos() });
    }
    let body = p.implies()?;
    if *p.peek() != Tok::Eof {
        return p.fail("end of input");
    }
    Ok(HyperFormula::new(quantifier, body))
}

/// Parses a quantifier-free body.
pub fn parse_body(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser { toks: lex(text)?, at: 0 };
    if p.is_ident("forall") || p.is_ident("exists") {
        return Err(ParseError::DuplicateQuantifier { pos: p.pos() });
    }
    let body = p.implies()?;
    if *p.peek() != Tok::Eof {
        return p.fail("end of input");
    }
    Ok(body)
}

impl std::str::FromStr for HyperFormula {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}
